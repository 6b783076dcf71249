"""Rank utilities, classical Kendall's tau and exceedance selection.

Everything here works on ranks only, so results are invariant under strictly
increasing transforms of either coordinate.  Kendall's tau uses the tau-a
convention: a pair tied in either coordinate contributes 0 to the numerator
and the denominator is always ``C(n, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class InsufficientDataError(ValueError):
    """Too few observations (or exceedances) to compute a coefficient."""


@dataclass(frozen=True)
class PairedSample:
    """``n >= 2`` finite paired observations ``(x_i, y_i)``.

    ``flags`` records violations of the continuous-margin assumption
    (``"ties_x"``, ``"ties_y"``, ``"threshold_tie"``); ``dropped`` counts rows
    removed at construction because a coordinate was missing.
    """

    x: np.ndarray
    y: np.ndarray
    label_x: str = "x"
    label_y: str = "y"
    dropped: int = 0
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d sequences of equal length")
        if x.size < 2:
            raise InsufficientDataError(f"insufficient data: n={x.size}, need n >= 2")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("non-finite values in paired sample")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "flags", frozenset(self.flags))

    @classmethod
    def from_arrays(cls, x, y, label_x: str = "x", label_y: str = "y") -> "PairedSample":
        """Build a sample keeping only pairwise-complete rows.

        NaN in either coordinate drops the row (counted in ``dropped``);
        infinite values are rejected.  Tie flags are set from the data.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise ValueError(f"length mismatch: {x.size} vs {y.size}")
        if np.any(np.isinf(x)) or np.any(np.isinf(y)):
            raise ValueError("infinite values are not admitted")
        keep = ~(np.isnan(x) | np.isnan(y))
        x, y = x[keep], y[keep]
        flags = set()
        if np.unique(x).size < x.size:
            flags.add("ties_x")
        if np.unique(y).size < y.size:
            flags.add("ties_y")
        return cls(x, y, label_x, label_y, dropped=int((~keep).sum()), flags=frozenset(flags))

    @property
    def n(self) -> int:
        return int(self.x.size)

    def swapped(self) -> "PairedSample":
        flags = {{"ties_x": "ties_y", "ties_y": "ties_x"}.get(f, f) for f in self.flags}
        return PairedSample(self.y, self.x, self.label_y, self.label_x, self.dropped, frozenset(flags))


@dataclass(frozen=True)
class ThresholdSpec:
    """Probability level ``q`` and the matching exceedance count ``k = round(n (1 - q))``."""

    q: float
    k: int
    n: int

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise ValueError(f"q must lie in [0, 1), got {self.q}")
        if self.n < 2:
            raise InsufficientDataError(f"insufficient data: n={self.n}")
        if self.k > self.n:
            raise ValueError(f"k={self.k} exceeds sample size n={self.n}")
        if self.k < 2:
            raise InsufficientDataError(
                f"need at least two exceedances: k={self.k} (n={self.n}, q={self.q})"
            )

    @classmethod
    def from_q(cls, q: float, n: int) -> "ThresholdSpec":
        if not 0.0 <= q < 1.0:
            raise ValueError(f"q must lie in [0, 1), got {q}")
        # round away float noise first (1000 * (1 - 0.98) = 20.000000000000018); halves round up
        k = int(math.floor(round(n * (1.0 - q), 9) + 0.5))
        return cls(q=float(q), k=k, n=int(n))

    @classmethod
    def from_k(cls, k: int, n: int) -> "ThresholdSpec":
        return cls(q=1.0 - k / n, k=int(k), n=int(n))


class Ranks(NamedTuple):
    ranks: np.ndarray
    tie_count: int


def rank_transform(values: Sequence[float]) -> Ranks:
    """Ranks ``1..n``; tied values are ranked in order of first occurrence.

    ``tie_count`` is the number of entries equal to an earlier entry.

    >>> rank_transform([5.0, 5.0, 1.0])
    Ranks(ranks=array([2, 3, 1]), tie_count=1)
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite values cannot be ranked")
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.int64)
    ranks[order] = np.arange(1, v.size + 1)
    return Ranks(ranks, int(v.size - np.unique(v).size))


def _pairs(m: int) -> int:
    return m * (m - 1) // 2


def _tied_pairs(v: np.ndarray) -> int:
    _, counts = np.unique(v, return_counts=True)
    return int(sum(_pairs(int(c)) for c in counts[counts > 1]))


def _count_inversions(r: np.ndarray) -> int:
    """Number of ``i < j`` with ``r[i] > r[j]`` for integer codes in ``[0, n)``.

    Bottom-up merge sort, one vectorised pass per level.
    """
    n = r.size
    a = r.astype(np.int64)
    idx = np.arange(n)
    big = n + 1
    inv = 0
    width = 1
    while width < n:
        block = idx // (2 * width)
        left = (idx % (2 * width)) < width
        key = block * big + a
        lk = key[left]
        rk = key[~left]
        rblock = block[~left]
        left_end = np.searchsorted(lk, (rblock + 1) * big, side="left")
        inv += int((left_end - np.searchsorted(lk, rk, side="right")).sum())
        a = np.sort(key) - block * big
        width *= 2
    return inv


_DIRECT_LIMIT = 600


def concordance_sum(x: np.ndarray, y: np.ndarray) -> int:
    """``sum_{i<j} sgn(x_i - x_j) sgn(y_i - y_j)`` as an exact integer."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2:
        return 0
    if n <= _DIRECT_LIMIT:
        sx = np.sign(x[:, None] - x[None, :])
        sy = np.sign(y[:, None] - y[None, :])
        # full matrix counts every pair twice
        return int(np.rint((sx * sy).sum())) // 2
    # Knight (1966): S = n0 - n_x - n_y + n_xy - 2 * discordant
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    _, ycode = np.unique(ys, return_inverse=True)
    discordant = _count_inversions(ycode)
    tied_x = _tied_pairs(xs)
    tied_y = _tied_pairs(ys)
    _, joint = np.unique(np.stack([xs, ys], axis=1), axis=0, return_counts=True)
    tied_xy = int(sum(_pairs(int(c)) for c in joint[joint > 1]))
    return _pairs(n) - tied_x - tied_y + tied_xy - 2 * discordant


def kendall_tau(sample: PairedSample) -> float:
    """Classical Kendall's tau-a of a paired sample."""
    n = sample.n
    if n < 2:
        raise InsufficientDataError(f"insufficient data: n={n}")
    return concordance_sum(sample.x, sample.y) / _pairs(n)


def top_k_indices(values: np.ndarray, k: int) -> tuple[np.ndarray, bool]:
    """Indices of the ``k`` largest values, plus whether the cut fell inside a tie.

    Ties at the threshold go to the earliest occurrence.  Indices are
    returned in increasing order.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    if k > n:
        raise ValueError(f"k={k} exceeds sample size n={n}")
    if k < 0:
        raise ValueError("k must be non-negative")
    order = np.argsort(-v, kind="stable")
    chosen = np.sort(order[:k])
    tie = 0 < k < n and v[order[k - 1]] == v[order[k]]
    return chosen, bool(tie)


def select_top_k(sample: PairedSample, spec: ThresholdSpec, on: str = "x") -> PairedSample:
    """Rows whose ``on``-coordinate is among the ``spec.k`` largest.

    Always returns exactly ``k`` rows; when the cut falls inside a run of
    tied values the subset carries the ``"threshold_tie"`` flag.
    """
    if spec.n != sample.n:
        raise ValueError(f"threshold built for n={spec.n}, sample has n={sample.n}")
    if on not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {on!r}")
    idx, tie = top_k_indices(sample.x if on == "x" else sample.y, spec.k)
    flags = set(sample.flags)
    if tie:
        flags.add("threshold_tie")
    return PairedSample(
        sample.x[idx], sample.y[idx], sample.label_x, sample.label_y, 0, frozenset(flags)
    )
