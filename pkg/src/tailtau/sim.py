"""Seeded samplers for the generative models.

Extreme-value models are returned on standard Frechet margins,
``P(X <= x) = exp(-1/x)``.  Every sampler takes an :class:`RngStream` (or a
numpy ``Generator``); the same stream always yields the same sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PairedSample
from .rng import RngStream, as_generator
from .theory import ExtremalFunctionSampler, dirichlet_extremal_sampler, hr_extremal_sampler


@dataclass(frozen=True)
class AsymLogisticParams:
    """Asymmetric logistic copula ``C_{alpha, beta1, beta2}``.

    ``alpha >= 1``; ``1 / alpha`` near 0 is strong dependence, ``1 / alpha = 1``
    independence.  ``beta1 = beta2 = 1`` is the symmetric logistic copula and
    ``beta1 = beta2 = 0`` the independence copula.
    """

    alpha: float
    beta1: float
    beta2: float

    def __post_init__(self):
        if not (self.alpha >= 1.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 1, got {self.alpha}")
        for b in (self.beta1, self.beta2):
            if not 0.0 <= b <= 1.0:
                raise ValueError(f"beta parameters must lie in [0, 1], got {b}")

    @classmethod
    def from_inv_alpha(cls, inv_alpha: float, beta1: float, beta2: float) -> "AsymLogisticParams":
        if not 0.0 < inv_alpha <= 1.0:
            raise ValueError(f"1/alpha must lie in (0, 1], got {inv_alpha}")
        return cls(1.0 / inv_alpha, beta1, beta2)

    @property
    def inv_alpha(self) -> float:
        return 1.0 / self.alpha

    def cdf(self, u, v):
        """Copula value at ``(u, v)`` in ``(0, 1]^2``."""
        lu, lv = -np.log(u), -np.log(v)
        a = self.alpha
        core = ((self.beta1 * lu) ** a + (self.beta2 * lv) ** a) ** (1.0 / a)
        return np.exp(-core - (1.0 - self.beta1) * lu - (1.0 - self.beta2) * lv)


@dataclass(frozen=True)
class HuslerReissParams:
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")


SEM_DIRECTIONS = ("independent", "xy", "yx")


@dataclass(frozen=True)
class SemConfig:
    """Two-variable linear structural equation model with Student-t noise.

    ``direction="xy"``: ``X = e1``, ``Y = beta X + e2``; ``"yx"`` swaps the
    roles; ``"independent"`` forces ``beta = 0``.  With ``confounded`` an
    independent t confounder scaled by ``confounder_loading`` enters both
    equations.
    """

    beta: float = 0.3
    noise_dof: float = 3.0
    direction: str = "xy"
    confounded: bool = False
    confounder_loading: float = 0.3

    def __post_init__(self):
        if not self.noise_dof > 0:
            raise ValueError(f"noise_dof must be positive, got {self.noise_dof}")
        if self.direction not in SEM_DIRECTIONS:
            raise ValueError(f"direction must be one of {SEM_DIRECTIONS}, got {self.direction!r}")


def _check_n(n: int) -> int:
    n = int(n)
    if n < 2:
        raise ValueError(f"sample size must be >= 2, got {n}")
    return n


def _sym_logistic_frechet(inv_alpha: float, n: int, gen: np.random.Generator) -> np.ndarray:
    """``(n, 2)`` symmetric logistic draws on Frechet margins.

    ``X_i = (S / E_i)^r`` with ``r = 1/alpha``, ``E_i`` i.i.d. Exp(1) and ``S``
    positive stable with Laplace transform ``exp(-t^r)`` (Kanter's
    representation).  Worked in logs: ``S^r`` overflows for small ``r``.
    """
    r = float(inv_alpha)
    e = gen.standard_exponential(size=(n, 2))
    if r == 1.0:
        return 1.0 / e
    u = math.pi * (1.0 - gen.random(n))  # (0, pi]
    w = gen.standard_exponential(n)
    r_log_s = (
        (1.0 - r) * (np.log(np.sin((1.0 - r) * u)) - np.log(w))
        + r * np.log(np.sin(r * u))
        - np.log(np.sin(u))
    )
    return np.exp(r_log_s[:, None] - r * np.log(e))


def sample_sym_logistic(inv_alpha: float, n: int, rng: RngStream) -> PairedSample:
    """Symmetric logistic pair; the API takes the dependence knob ``1/alpha`` in (0, 1]."""
    if not 0.0 < inv_alpha <= 1.0:
        raise ValueError(f"1/alpha must lie in (0, 1], got {inv_alpha}")
    z = _sym_logistic_frechet(inv_alpha, _check_n(n), as_generator(rng))
    return PairedSample(z[:, 0], z[:, 1])


def sample_asym_logistic(params: AsymLogisticParams, n: int, rng: RngStream) -> PairedSample:
    """Max-mixture ``(max{b1 V, (1-b1) e1}, max{b2 W, (1-b2) e2})``.

    ``(V, W)`` is symmetric logistic, ``e1, e2`` independent Frechet.  Margins
    stay exactly standard Frechet.
    """
    n = _check_n(n)
    gen = as_generator(rng)
    vw = _sym_logistic_frechet(params.inv_alpha, n, gen)
    eps = 1.0 / gen.standard_exponential(size=(n, 2))
    b = np.array([params.beta1, params.beta2])
    z = np.maximum(b * vw, (1.0 - b) * eps)
    return PairedSample(z[:, 0], z[:, 1])


def sample_max_stable(
    w12: ExtremalFunctionSampler, w21: ExtremalFunctionSampler, n: int, rng
) -> PairedSample:
    """Exact bivariate max-stable sampling via extremal functions.

    Dombry, Engelke & Oesting (2016): for each coordinate, walk the Poisson
    points ``1/(E_1 + ... + E_m)`` downward, attach an extremal function
    relative to that coordinate, and keep it only if it does not beat the
    coordinates already handled.  Terminates once the points fall below the
    current maximum, so the result is exact without truncation.
    """
    n = _check_n(n)
    gen = as_generator(rng)
    z = np.empty((n, 2))
    # first coordinate: only the largest point can contribute
    zeta = 1.0 / gen.standard_exponential(n)
    z[:, 0] = zeta
    z[:, 1] = zeta * w12.draw(n, gen)
    # second coordinate
    e = gen.standard_exponential(n)
    idx = np.flatnonzero(1.0 / e > z[:, 1])
    while idx.size:
        zeta = 1.0 / e[idx]
        ok = zeta * w21.draw(idx.size, gen) < z[idx, 0]
        hit = idx[ok]
        z[hit, 1] = np.maximum(z[hit, 1], zeta[ok])
        e[idx] += gen.standard_exponential(idx.size)
        idx = idx[1.0 / e[idx] > z[idx, 1]]
    return PairedSample(z[:, 0], z[:, 1])


def sample_husler_reiss(params: HuslerReissParams, n: int, rng) -> PairedSample:
    w = hr_extremal_sampler(params.gamma)
    return sample_max_stable(w, w, n, rng)


def sample_extremal_dirichlet(alpha1: float, alpha2: float, n: int, rng) -> PairedSample:
    w12, w21 = dirichlet_extremal_sampler(alpha1, alpha2)
    return sample_max_stable(w12, w21, n, rng)


def sample_sem(config: SemConfig, n: int, rng) -> PairedSample:
    n = _check_n(n)
    gen = as_generator(rng)
    noise = gen.standard_t(config.noise_dof, size=(2, n))
    beta = 0.0 if config.direction == "independent" else config.beta
    shared = np.zeros(n)
    if config.confounded:
        shared = config.confounder_loading * gen.standard_t(config.noise_dof, size=n)
    cause = noise[0] + shared
    effect = beta * cause + noise[1] + shared
    if config.direction == "yx":
        return PairedSample(effect, cause)
    return PairedSample(cause, effect)
