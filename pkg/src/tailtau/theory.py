"""Limiting tail Kendall's tau from extremal functions.

For a bivariate regularly varying vector, let ``W`` be the extremal function
of ``Y`` relative to ``X``: the positive, unit-mean multiplier describing
``Y / X`` given that ``X`` is extreme.  With ``W'`` an independent copy,

    tau_xy = 2 E min(1, W' / W) - 1,

and ``tau_yx`` is the same functional of the reverse extremal function.  The
extremal correlation is ``chi = E min(1, W)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import special

from .rng import RngStream, as_generator


class MonteCarloEstimate(NamedTuple):
    value: float
    se: float


@dataclass(frozen=True)
class ExtremalFunctionSampler:
    """Draws i.i.d. copies of a positive unit-mean extremal function."""

    name: str
    params: dict
    draw_fn: Callable[[int, np.random.Generator], np.ndarray] = field(repr=False)

    def draw(self, size: int, rng) -> np.ndarray:
        w = np.asarray(self.draw_fn(int(size), as_generator(rng)), dtype=float)
        if np.any(~(w > 0)):
            raise ValueError(f"extremal function must be positive ({self.name})")
        return w


def constant_sampler(value: float = 1.0) -> ExtremalFunctionSampler:
    """Degenerate extremal function (complete dependence when ``value == 1``)."""
    return ExtremalFunctionSampler("constant", {"value": value}, lambda n, g: np.full(n, float(value)))


def _check_gamma(gamma: float) -> float:
    g = float(gamma)
    if not g > 0 or not math.isfinite(g):
        raise ValueError(f"Husler-Reiss parameter must be positive and finite, got {gamma}")
    return g


def hr_extremal_sampler(gamma: float) -> ExtremalFunctionSampler:
    """Log-normal extremal function ``exp(N)``, ``N ~ N(-gamma/2, gamma)``."""
    g = _check_gamma(gamma)
    sd = math.sqrt(g)
    return ExtremalFunctionSampler(
        "husler_reiss", {"gamma": g}, lambda n, gen: np.exp(gen.normal(-g / 2.0, sd, size=n))
    )


def dirichlet_extremal_sampler(alpha1: float, alpha2: float):
    """Extremal functions ``(W12, W21)`` of the bivariate extremal Dirichlet model.

    The model's spectral vector is ``(G1 / a1, G2 / a2)`` with independent
    ``Gi ~ Gamma(ai)``.  Size-biasing by the first component turns ``G1`` into
    ``Gamma(a1 + 1)``, so ``W12 = (G2 / a2) / (G1' / a1)`` and symmetrically
    for ``W21``.
    """
    a1, a2 = float(alpha1), float(alpha2)
    if not (a1 > 0 and a2 > 0):
        raise ValueError(f"Dirichlet parameters must be positive, got ({alpha1}, {alpha2})")

    def w12(n, gen):
        return (gen.standard_gamma(a2, size=n) / a2) * (a1 / gen.standard_gamma(a1 + 1.0, size=n))

    def w21(n, gen):
        return (gen.standard_gamma(a1, size=n) / a1) * (a2 / gen.standard_gamma(a2 + 1.0, size=n))

    params = {"alpha1": a1, "alpha2": a2}
    return (
        ExtremalFunctionSampler("dirichlet_12", params, w12),
        ExtremalFunctionSampler("dirichlet_21", params, w21),
    )


def dual_extremal_sampler(sampler: ExtremalFunctionSampler, pool_factor: int = 10) -> ExtremalFunctionSampler:
    """Reverse extremal function from a forward one.

    ``P(W21 <= x) = E[1{1/W12 <= x} W12]``: draw a pool of ``W12``, resample
    with probability proportional to the draw and return reciprocals.  Each
    call uses a fresh pool of ``pool_factor * size`` candidates.
    """
    if pool_factor < 1:
        raise ValueError("pool_factor must be >= 1")

    def draw(n, gen):
        pool = sampler.draw(pool_factor * n, gen)
        total = pool.sum()
        if not total > 0 or not np.isfinite(total):
            raise ValueError("degenerate importance weights")
        idx = gen.choice(pool.size, size=n, replace=True, p=pool / total)
        return 1.0 / pool[idx]

    return ExtremalFunctionSampler(f"dual({sampler.name})", dict(sampler.params), draw)


def tau_limit_mc(sampler: ExtremalFunctionSampler, n_mc: int, rng) -> MonteCarloEstimate:
    """Monte Carlo ``2 E min(1, W'/W) - 1`` with its standard error."""
    if n_mc < 2:
        raise ValueError("n_mc must be >= 2")
    gen = as_generator(rng)
    w = sampler.draw(n_mc, gen)
    w_copy = sampler.draw(n_mc, gen)
    m = np.minimum(1.0, w_copy / w)
    return MonteCarloEstimate(float(2.0 * m.mean() - 1.0), float(2.0 * m.std(ddof=1) / math.sqrt(n_mc)))


def chi_limit_mc(sampler: ExtremalFunctionSampler, n_mc: int, rng) -> MonteCarloEstimate:
    """Monte Carlo extremal correlation ``E min(1, W)``."""
    if n_mc < 2:
        raise ValueError("n_mc must be >= 2")
    m = np.minimum(1.0, sampler.draw(n_mc, as_generator(rng)))
    return MonteCarloEstimate(float(m.mean()), float(m.std(ddof=1) / math.sqrt(n_mc)))


def hr_tau_closed(gamma):
    """``2 exp(gamma) {1 - Phi(sqrt(2 gamma))}``.

    Equal to ``erfcx(sqrt(gamma))``, which stays finite for any gamma where
    the literal product would overflow times underflow.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g > 0)):
        raise ValueError("gamma must be positive")
    out = special.erfcx(np.sqrt(g))
    return float(out) if out.ndim == 0 else out


def hr_chi_closed(gamma):
    """``2 {1 - Phi(sqrt(gamma) / 2)}``."""
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g > 0)):
        raise ValueError("gamma must be positive")
    out = special.erfc(np.sqrt(g) / (2.0 * math.sqrt(2.0)))
    return float(out) if out.ndim == 0 else out


CURVE_COLUMNS = ("parameter", "chi", "tau_xy", "tau_yx", "se_xy", "se_yx")


@dataclass(frozen=True)
class DependenceCurve:
    family: str
    parameter: np.ndarray
    chi: np.ndarray
    tau_xy: np.ndarray
    tau_yx: np.ndarray
    se_xy: np.ndarray
    se_yx: np.ndarray
    fixed: dict = field(default_factory=dict)

    def rows(self):
        for vals in zip(*(getattr(self, c) for c in CURVE_COLUMNS)):
            yield dict(zip(CURVE_COLUMNS, (float(v) for v in vals)))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS)
            w.writeheader()
            for row in self.rows():
                w.writerow({k: repr(v) for k, v in row.items()})


def dependence_curves(
    family: str,
    grid: Sequence[float],
    n_mc: int = 200_000,
    rng: RngStream | None = None,
    alpha1: float = 2.0,
) -> DependenceCurve:
    """Tabulate chi and both tail taus over a parameter grid.

    ``family="husler_reiss"`` sweeps gamma with the closed forms;
    ``family="dirichlet"`` sweeps ``alpha2`` at fixed ``alpha1`` by Monte
    Carlo, one independent stream per grid point.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty parameter grid")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("parameter grid must be strictly increasing")
    if family in ("hr", "husler_reiss"):
        tau = np.asarray(hr_tau_closed(grid), dtype=float).reshape(grid.shape)
        chi = np.asarray(hr_chi_closed(grid), dtype=float).reshape(grid.shape)
        zero = np.zeros_like(grid)
        return DependenceCurve("husler_reiss", grid, chi, tau, tau.copy(), zero, zero.copy())
    if family != "dirichlet":
        raise ValueError(f"unknown family {family!r}")
    rng = rng if rng is not None else RngStream(0)
    chi, txy, tyx, sxy, syx = (np.empty_like(grid) for _ in range(5))
    for i, a2 in enumerate(grid):
        s12, s21 = dirichlet_extremal_sampler(alpha1, a2)
        stream = rng.child("dirichlet", alpha1, float(a2))
        gen = stream.generator()
        txy[i], sxy[i] = tau_limit_mc(s12, n_mc, gen)
        tyx[i], syx[i] = tau_limit_mc(s21, n_mc, gen)
        chi[i] = chi_limit_mc(s12, n_mc, gen).value
    return DependenceCurve("dirichlet", grid, chi, txy, tyx, sxy, syx, {"alpha1": float(alpha1)})
