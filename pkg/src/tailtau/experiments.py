"""Simulation studies: asymmetric logistic grid, directionality, causal SEMs.

Each repetition draws from its own stream, keyed by the configuration row and
the repetition index, so tables are bit-identical for any worker count or
evaluation order.  Summaries use medians and quartiles over repetitions.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .core import InsufficientDataError, PairedSample, ThresholdSpec
from .rng import RngStream, derive_stream_id
from .sim import AsymLogisticParams, SemConfig, sample_asym_logistic, sample_sem
from .tail import symmetric_tail_tau, tail_tau_batch

PROFILES = {"desk": 100, "paper": 1000}

DEFAULT_BETAS = tuple(round(0.1 * i, 1) for i in range(1, 10))
DEFAULT_INV_ALPHAS = (0.005, 0.2, 0.4, 0.6, 0.8, 0.98)


def _config_hash(cfg) -> str:
    text = json.dumps(asdict(cfg), sort_keys=True, default=list)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class GridConfig:
    beta_grid: tuple = DEFAULT_BETAS
    inv_alpha_grid: tuple = DEFAULT_INV_ALPHAS
    n_per_sample: int = 1000
    n_reps: int = 100
    q: float = 0.98
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))
        object.__setattr__(self, "inv_alpha_grid", tuple(float(a) for a in self.inv_alpha_grid))
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        ThresholdSpec.from_q(self.q, self.n_per_sample)

    @property
    def k(self) -> int:
        return ThresholdSpec.from_q(self.q, self.n_per_sample).k

    def combinations(self):
        return [
            (b1, b2, ia)
            for ia in self.inv_alpha_grid
            for b1 in self.beta_grid
            for b2 in self.beta_grid
        ]

    @property
    def hash(self) -> str:
        return _config_hash(self)


SCENARIOS = {
    "a_independent": SemConfig(direction="independent"),
    "b_x_causes_y": SemConfig(direction="xy"),
    "c_y_causes_x": SemConfig(direction="yx"),
    "d_independent_confounded": SemConfig(direction="independent", confounded=True),
    "e_x_causes_y_confounded": SemConfig(direction="xy", confounded=True),
    "f_y_causes_x_confounded": SemConfig(direction="yx", confounded=True),
}


@dataclass(frozen=True)
class CausalExpConfig:
    n_per_sample: int = 4000
    n_reps: int = 100
    q: float = 0.98
    beta: float = 0.3
    noise_dof: float = 3.0
    confounder_loading: float = 0.3
    scenarios: tuple = tuple(SCENARIOS)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        unknown = set(self.scenarios) - set(SCENARIOS)
        if unknown:
            raise ValueError(f"unknown scenarios: {sorted(unknown)}")
        ThresholdSpec.from_q(self.q, self.n_per_sample)

    @property
    def k(self) -> int:
        return ThresholdSpec.from_q(self.q, self.n_per_sample).k

    def sem_config(self, scenario: str) -> SemConfig:
        base = SCENARIOS[scenario]
        return SemConfig(
            beta=self.beta,
            noise_dof=self.noise_dof,
            direction=base.direction,
            confounded=base.confounded,
            confounder_loading=self.confounder_loading,
        )

    @property
    def hash(self) -> str:
        return _config_hash(self)


@dataclass
class ExperimentSummary:
    """A named table: one dict per row, fixed column order."""

    name: str
    columns: list
    rows: list = field(default_factory=list)
    config_hash: str = ""

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def where(self, **conds) -> list:
        return [r for r in self.rows if all(r[k] == v for k, v in conds.items())]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([_fmt(r[c]) for c in self.columns])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return v


def box_stats(values: np.ndarray, prefix: str) -> dict:
    """Median, quartiles and range of the finite values (sorted first, so order-free)."""
    v = np.sort(np.asarray(values, dtype=float))
    v = v[np.isfinite(v)]
    if v.size == 0:
        nan = float("nan")
        return {f"{prefix}_{s}": nan for s in ("min", "q25", "median", "q75", "max")}
    q25, med, q75 = np.quantile(v, [0.25, 0.5, 0.75])
    return {
        f"{prefix}_min": float(v[0]),
        f"{prefix}_q25": float(q25),
        f"{prefix}_median": float(med),
        f"{prefix}_q75": float(q75),
        f"{prefix}_max": float(v[-1]),
    }


# ---------------------------------------------------------------- grid study


def _grid_row(config: GridConfig, combo) -> tuple[np.ndarray, np.ndarray]:
    b1, b2, ia = combo
    params = AsymLogisticParams.from_inv_alpha(ia, b1, b2)
    xs = np.empty((config.n_reps, config.n_per_sample))
    ys = np.empty_like(xs)
    for rep in range(config.n_reps):
        stream = RngStream(config.seed, derive_stream_id("grid", b1, b2, ia, rep))
        s = sample_asym_logistic(params, config.n_per_sample, stream)
        xs[rep], ys[rep] = s.x, s.y
    return tail_tau_batch(xs, ys, config.k)


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


class _GridTask:
    def __init__(self, config):
        self.config = config

    def __call__(self, combo):
        return _grid_row(self.config, combo)


def simulate_grid(config: GridConfig, jobs: int = 1) -> dict:
    """Per-repetition ``(tau_xy, tau_yx)`` arrays for every ``(beta1, beta2, 1/alpha)``."""
    combos = config.combinations()
    out = _map(_GridTask(config), combos, jobs)
    return dict(zip(combos, out))


GRID_COLUMNS = ["beta1", "beta2", "inv_alpha", "n", "k", "n_reps"] + [
    f"{p}_{s}"
    for p in ("tau_xy", "tau_yx", "asymmetry", "max_tau")
    for s in ("min", "q25", "median", "q75", "max")
] + ["median_gap"]


def summarize_grid(config: GridConfig, runs: dict) -> ExperimentSummary:
    """One row per parameter combination.

    ``asymmetry_*`` and ``max_tau_*`` summarise the per-repetition values;
    ``median_gap`` is ``median(tau_xy) - median(tau_yx)``.
    """
    summary = ExperimentSummary("grid", GRID_COLUMNS, config_hash=config.hash)
    for (b1, b2, ia), (txy, tyx) in runs.items():
        row = {"beta1": b1, "beta2": b2, "inv_alpha": ia, "n": config.n_per_sample,
               "k": config.k, "n_reps": int(txy.size)}
        row.update(box_stats(txy, "tau_xy"))
        row.update(box_stats(tyx, "tau_yx"))
        row.update(box_stats(np.abs(txy - tyx), "asymmetry"))
        row.update(box_stats(np.maximum(txy, tyx), "max_tau"))
        row["median_gap"] = row["tau_xy_median"] - row["tau_yx_median"]
        summary.rows.append(row)
    return summary


def run_grid(config: GridConfig, jobs: int = 1) -> ExperimentSummary:
    return summarize_grid(config, simulate_grid(config, jobs))


DIRECTION_COLUMNS = [
    "beta1", "beta2", "inv_alpha", "beta_diff", "downstream", "n_reps",
    "median_tau_down", "median_tau_up", "median_asymmetry", "frac_down_smaller", "flagged",
]


def summarize_directionality(config: GridConfig, runs: dict) -> ExperimentSummary:
    """Orient every off-diagonal combination downstream-first.

    The downstream variable is the one with the smaller beta (more
    independent noise in the max-mixture).  ``tau_down`` conditions on it.
    Rows with ``beta1 == beta2`` have no direction and are flagged.
    """
    summary = ExperimentSummary("direction", DIRECTION_COLUMNS, config_hash=config.hash)
    nan = float("nan")
    for (b1, b2, ia), (txy, tyx) in runs.items():
        row = {"beta1": b1, "beta2": b2, "inv_alpha": ia,
               "beta_diff": round(abs(b1 - b2), 10), "n_reps": int(txy.size)}
        if b1 == b2:
            row.update(downstream="none", median_tau_down=nan, median_tau_up=nan,
                       median_asymmetry=float(np.median(np.abs(txy - tyx))),
                       frac_down_smaller=nan, flagged=True)
        else:
            down, up = (txy, tyx) if b1 < b2 else (tyx, txy)
            row.update(
                downstream="x" if b1 < b2 else "y",
                median_tau_down=float(np.median(down)),
                median_tau_up=float(np.median(up)),
                median_asymmetry=float(np.median(np.abs(down - up))),
                frac_down_smaller=float(np.mean(down < up)),
                flagged=False,
            )
        summary.rows.append(row)
    return summary


def run_directionality(config: GridConfig, jobs: int = 1) -> ExperimentSummary:
    return summarize_directionality(config, simulate_grid(config, jobs))


# ------------------------------------------------------------ causal study


def _causal_scenario(config: CausalExpConfig, scenario: str):
    sem = config.sem_config(scenario)
    k = config.k
    n = config.n_per_sample
    xs = np.empty((config.n_reps, n))
    ys = np.empty_like(xs)
    sym = np.full(config.n_reps, np.nan)
    spec = ThresholdSpec.from_k(k, n)
    for rep in range(config.n_reps):
        stream = RngStream(config.seed, derive_stream_id("causal", scenario, rep))
        s = sample_sem(sem, n, stream)
        xs[rep], ys[rep] = s.x, s.y
        try:
            sym[rep] = symmetric_tail_tau(s, spec)
        except InsufficientDataError:
            pass
    txy, tyx = tail_tau_batch(xs, ys, k)
    return txy, tyx, sym


class _CausalTask:
    def __init__(self, config):
        self.config = config

    def __call__(self, scenario):
        return _causal_scenario(self.config, scenario)


def simulate_causality(config: CausalExpConfig, jobs: int = 1) -> dict:
    out = _map(_CausalTask(config), list(config.scenarios), jobs)
    return dict(zip(config.scenarios, out))


CAUSAL_COLUMNS = ["scenario", "coefficient", "n", "k", "n_valid"] + [
    f"value_{s}" for s in ("min", "q25", "median", "q75", "max")
]


def summarize_causality(config: CausalExpConfig, runs: dict) -> ExperimentSummary:
    """One row per scenario and coefficient (``tau_xy``, ``tau_yx``, ``tau_sym``).

    ``tau_sym`` is undefined in repetitions with fewer than two joint
    exceedances; ``n_valid`` counts the repetitions that contribute.
    """
    summary = ExperimentSummary("causal", CAUSAL_COLUMNS, config_hash=config.hash)
    for scenario, (txy, tyx, sym) in runs.items():
        for name, vals in (("tau_xy", txy), ("tau_yx", tyx), ("tau_sym", sym)):
            row = {"scenario": scenario, "coefficient": name, "n": config.n_per_sample,
                   "k": config.k, "n_valid": int(np.isfinite(vals).sum())}
            row.update(box_stats(vals, "value"))
            summary.rows.append(row)
    return summary


def run_causality(config: CausalExpConfig, jobs: int = 1) -> ExperimentSummary:
    return summarize_causality(config, simulate_causality(config, jobs))


def causal_gap(summary: ExperimentSummary, scenario: str) -> float:
    """``median(tau_xy) - median(tau_yx)`` for one scenario."""
    med = {r["coefficient"]: r["value_median"] for r in summary.where(scenario=scenario)}
    return med["tau_xy"] - med["tau_yx"]
