"""Directional tail Kendall's tau, its symmetric variant and empirical chi.

``tau_xy`` conditions on the ``k`` largest observations of ``x`` and measures
the concordance of ``y`` among them; ``tau_yx`` swaps the roles.  A cause
(or an upstream gauge) typically has the larger coefficient when it is the
conditioning variable.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import (
    InsufficientDataError,
    PairedSample,
    ThresholdSpec,
    concordance_sum,
    kendall_tau,
    select_top_k,
)

_DIRECTIONS = {"xy": "x", "x->y": "x", "yx": "y", "y->x": "y"}


@dataclass(frozen=True)
class TailTauPair:
    tau_xy: float
    tau_yx: float
    q: float
    k: int
    flags: frozenset = frozenset()

    def __post_init__(self):
        for name in ("tau_xy", "tau_yx"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [-1, 1]")

    @property
    def asymmetry(self) -> float:
        return abs(self.tau_xy - self.tau_yx)

    @property
    def max_tau(self) -> float:
        return max(self.tau_xy, self.tau_yx)

    def swapped(self) -> "TailTauPair":
        return TailTauPair(self.tau_yx, self.tau_xy, self.q, self.k, self.flags)


@dataclass(frozen=True)
class ChiEstimate:
    chi: float
    q: float
    joint_exceedances: int


def tail_tau(sample: PairedSample, spec: ThresholdSpec, direction: str = "xy") -> float:
    """Kendall's tau-a over the ``spec.k`` rows with the largest conditioning value.

    ``direction`` is ``"xy"`` (condition on x) or ``"yx"`` (condition on y).
    The normaliser is ``C(k, 2)`` regardless of ties.
    """
    try:
        axis = _DIRECTIONS[direction.lower()]
    except KeyError:
        raise ValueError(f"direction must be 'xy' or 'yx', got {direction!r}") from None
    if spec.k < 2:
        raise InsufficientDataError(f"need at least two exceedances, got k={spec.k}")
    return kendall_tau(select_top_k(sample, spec, on=axis))


def tail_tau_pair(sample: PairedSample, spec: ThresholdSpec) -> TailTauPair:
    sub_x = select_top_k(sample, spec, on="x")
    sub_y = select_top_k(sample, spec, on="y")
    flags = set()
    for sub in (sub_x, sub_y):
        if "threshold_tie" in sub.flags:
            flags.add("threshold_tie")
    if {"ties_x", "ties_y"} & sample.flags:
        flags.add("ties")
    return TailTauPair(kendall_tau(sub_x), kendall_tau(sub_y), spec.q, spec.k, frozenset(flags))


def threshold_sweep(sample: PairedSample, qs: Iterable[float]) -> list[TailTauPair]:
    """``tail_tau_pair`` at each probability level, for stability plots."""
    return [tail_tau_pair(sample, ThresholdSpec.from_q(q, sample.n)) for q in qs]


def _upper_order_stat(v: np.ndarray, k: int) -> float:
    """The ``(n - k)``-th order statistic; ``-inf`` when ``k == n``."""
    if k >= v.size:
        return -np.inf
    return float(np.partition(v, v.size - k - 1)[v.size - k - 1])


def symmetric_tail_tau(sample: PairedSample, spec: ThresholdSpec) -> float:
    """Kendall's tau-a restricted to rows where both coordinates exceed their threshold.

    The thresholds are the ``(n - k)``-th order statistics of each margin, the
    same cut used by :func:`tail_tau`.
    """
    if spec.n != sample.n:
        raise ValueError(f"threshold built for n={spec.n}, sample has n={sample.n}")
    tx = _upper_order_stat(sample.x, spec.k)
    ty = _upper_order_stat(sample.y, spec.k)
    joint = (sample.x > tx) & (sample.y > ty)
    m = int(joint.sum())
    if m < 2:
        raise InsufficientDataError(
            f"need at least two joint exceedances, got {m} (n={sample.n}, q={spec.q})"
        )
    return concordance_sum(sample.x[joint], sample.y[joint]) / (m * (m - 1) // 2)


def chi_hat(sample: PairedSample, q: float) -> ChiEstimate:
    """Pearson correlation of the two exceedance indicators at level ``q``.

    The threshold for each margin is the order statistic ``v_(ceil(q n))`` and
    exceedance is strict.
    """
    n = sample.n
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if n * (1.0 - q) < 1.0 - 1e-9:
        raise InsufficientDataError(f"n (1 - q) = {n * (1 - q):.3g} < 1")
    pos = int(math.ceil(round(q * n, 9)))
    tx = np.sort(sample.x)[pos - 1]
    ty = np.sort(sample.y)[pos - 1]
    ix = sample.x > tx
    iy = sample.y > ty
    a, b, joint = int(ix.sum()), int(iy.sum()), int((ix & iy).sum())
    if a in (0, n) or b in (0, n):
        raise ValueError("degenerate exceedance set: an exceedance indicator is constant")
    # indicator correlation from integer counts, squared exactly so identical sets give 1.0
    num = n * joint - a * b
    r2 = Fraction(num * num, a * (n - a) * b * (n - b))
    chi = math.copysign(math.sqrt(r2), num)
    return ChiEstimate(chi, float(q), joint)


def tail_tau_batch(x: np.ndarray, y: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Both directional coefficients for a stack of samples of shape ``(reps, n)``.

    Gives the same values as :func:`tail_tau_pair` row by row, including the
    earliest-occurrence rule at threshold ties.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError("x and y stacks differ in shape")
    if not 2 <= k <= x.shape[1]:
        raise InsufficientDataError(f"need 2 <= k <= n, got k={k}, n={x.shape[1]}")
    norm = k * (k - 1)

    def one_way(cond, other):
        idx = np.argsort(-cond, axis=1, kind="stable")[:, :k]
        c = np.take_along_axis(cond, idx, axis=1)
        o = np.take_along_axis(other, idx, axis=1)
        s = np.sign(c[:, :, None] - c[:, None, :]) * np.sign(o[:, :, None] - o[:, None, :])
        # each pair counted twice in the full matrix; norm is 2 * C(k, 2)
        return np.rint(s.sum(axis=(1, 2))) / norm

    return one_way(x, y), one_way(y, x)
