"""Pairwise tail-dependence analysis of daily discharge records.

Input files
-----------
discharge CSV   ``station_id,date,flow_m3s`` (ISO dates, empty flow = missing)
stations CSV    ``station_id,basin_id,name``
relations CSV   ``station_a,station_b,relation`` where relation is one of
                ``diff_basin``, ``same_basin_unconnected``, ``a_upstream_of_b``,
                ``b_upstream_of_a``

Every unordered station pair is analysed on its common observation period;
failures are collected per pair and never abort a run.  The estimator is
applied to daily values directly, without declustering, so serially
dependent flood days all enter the exceedance set.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .core import InsufficientDataError, PairedSample, ThresholdSpec
from .tail import TailTauPair, tail_tau_pair

log = logging.getLogger(__name__)

DEFAULT_MIN_OVERLAP = 1095
OUTPUT_COLUMNS = (
    "station_a", "station_b", "relation", "overlap_days", "q", "k",
    "tau_ab", "tau_ba", "asymmetry", "max_tau", "arrow", "warnings",
)


class Relation(str, Enum):
    """Relation of station ``a`` to station ``b`` (ordered)."""

    DIFFERENT_BASIN = "different_basin"
    SAME_BASIN_UNCONNECTED = "same_basin_unconnected"
    UPSTREAM_OF = "connected_upstream_of"
    DOWNSTREAM_OF = "connected_downstream_of"

    def flipped(self) -> "Relation":
        if self is Relation.UPSTREAM_OF:
            return Relation.DOWNSTREAM_OF
        if self is Relation.DOWNSTREAM_OF:
            return Relation.UPSTREAM_OF
        return self

    @property
    def group(self) -> str:
        if self in (Relation.UPSTREAM_OF, Relation.DOWNSTREAM_OF):
            return "connected"
        return self.value


_CSV_RELATION = {
    "diff_basin": Relation.DIFFERENT_BASIN,
    "same_basin_unconnected": Relation.SAME_BASIN_UNCONNECTED,
    "a_upstream_of_b": Relation.UPSTREAM_OF,
    "b_upstream_of_a": Relation.DOWNSTREAM_OF,
}
_RELATION_CSV = {v: k for k, v in _CSV_RELATION.items()}


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class StationRecord:
    """Daily series of one gauge; missing days are NaN or absent."""

    station_id: str
    dates: np.ndarray  # datetime64[D], strictly increasing
    flow: np.ndarray
    basin_id: str = ""
    name: str = ""

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        flow = np.asarray(self.flow, dtype=float)
        if dates.shape != flow.shape:
            raise ValueError(f"station {self.station_id}: dates and flows differ in length")
        if dates.size > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise DataFormatError(f"non-monotone dates for station {self.station_id}")
        if np.any(flow < 0):
            raise ValueError(f"station {self.station_id}: negative discharge")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "flow", flow)

    def observed(self) -> tuple[np.ndarray, np.ndarray]:
        ok = ~np.isnan(self.flow)
        return self.dates[ok], self.flow[ok]


class RelationTable:
    """Hydraulic relation for every ordered station pair that was supplied."""

    def __init__(self):
        self._rel: dict[tuple[str, str], Relation] = {}

    def add(self, a: str, b: str, relation: Relation) -> None:
        if a == b:
            raise ValueError(f"relation of station {a} with itself")
        for key, rel in (((a, b), relation), ((b, a), relation.flipped())):
            old = self._rel.get(key)
            if old is not None and old is not rel:
                raise ValueError(f"conflicting relations for {key}: {old.value} vs {rel.value}")
            self._rel[key] = rel

    def get(self, a: str, b: str) -> Relation | None:
        return self._rel.get((a, b))

    def __len__(self) -> int:
        return len(self._rel) // 2

    @classmethod
    def from_csv(cls, path) -> "RelationTable":
        table = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            _require_columns(reader.fieldnames, ("station_a", "station_b", "relation"), path)
            for line, row in enumerate(reader, start=2):
                code = row["relation"].strip()
                if code not in _CSV_RELATION:
                    raise DataFormatError(f"{path}:{line}: unknown relation {code!r}")
                table.add(row["station_a"].strip(), row["station_b"].strip(), _CSV_RELATION[code])
        return table


def _require_columns(found, needed, path) -> None:
    found = [f.strip() for f in (found or [])]
    for col in needed:
        if col not in found:
            raise DataFormatError(f"{path}: missing column {col!r} (found {found})")


def load_stations(path) -> dict[str, dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, ("station_id", "basin_id", "name"), path)
        return {
            row["station_id"].strip(): {"basin_id": row["basin_id"].strip(), "name": row["name"].strip()}
            for row in reader
        }


def load_discharge(
    paths, metadata: Mapping[str, dict] | None = None
) -> tuple[dict[str, StationRecord], list[str]]:
    """Read one or more discharge CSV files into station records.

    Returns the records and a list of warnings.  Rows with a negative or
    unparseable flow are rejected (warning with file and line); dates must be
    strictly increasing within each station.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    rows: dict[str, list] = defaultdict(list)
    warnings: list[str] = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            _require_columns(reader.fieldnames, ("station_id", "date", "flow_m3s"), path)
            for line, row in enumerate(reader, start=2):
                sid = (row["station_id"] or "").strip()
                try:
                    day = np.datetime64(row["date"].strip(), "D")
                except (ValueError, AttributeError):
                    warnings.append(f"{path}:{line}: bad date {row['date']!r}, row rejected")
                    continue
                raw = (row["flow_m3s"] or "").strip()
                if raw == "":
                    flow = math.nan
                else:
                    try:
                        flow = float(raw)
                    except ValueError:
                        warnings.append(f"{path}:{line}: bad flow {raw!r}, row rejected")
                        continue
                    if flow < 0 or not math.isfinite(flow):
                        warnings.append(f"{path}:{line}: invalid discharge {raw} for {sid}, row rejected")
                        continue
                rows[sid].append((day, flow))
    meta = metadata or {}
    records = {}
    for sid, obs in rows.items():
        dates = np.array([d for d, _ in obs], dtype="datetime64[D]")
        if dates.size > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise DataFormatError(f"non-monotone dates for station {sid}")
        info = meta.get(sid, {})
        records[sid] = StationRecord(
            sid, dates, np.array([f for _, f in obs]), info.get("basin_id", ""), info.get("name", "")
        )
    for w in warnings:
        log.warning(w)
    return records, warnings


def _years(dates: np.ndarray) -> np.ndarray:
    return dates.astype("datetime64[Y]").astype(int) + 1970


def pair_common_period(
    a: StationRecord, b: StationRecord, min_overlap: int = DEFAULT_MIN_OVERLAP
) -> PairedSample:
    """Days observed at both stations, restricted to years observed at both.

    The sample's ``n`` is the overlap in days.
    """
    da, fa = a.observed()
    db, fb = b.observed()
    if da.size == 0 or db.size == 0:
        raise InsufficientDataError(f"insufficient overlap: {a.station_id} or {b.station_id} has no data")
    years = np.intersect1d(_years(da), _years(db))
    ka = np.isin(_years(da), years)
    kb = np.isin(_years(db), years)
    common, ia, ib = np.intersect1d(da[ka], db[kb], assume_unique=True, return_indices=True)
    if common.size < max(min_overlap, 2):
        raise InsufficientDataError(
            f"insufficient overlap: {common.size} common days < {min_overlap}"
        )
    return PairedSample.from_arrays(fa[ka][ia], fb[kb][ib], a.station_id, b.station_id)


class Arrow(str, Enum):
    A_TO_B = "a->b"
    B_TO_A = "b->a"
    NONE = "none"


def derive_arrow(result) -> Arrow:
    """Direction of influence from a :class:`TailTauPair` (or a PairResult).

    ``b -> a`` when ``tau_ab < tau_ba``: conditioning on ``b`` gives the
    stronger concordance, so ``b`` behaves as the upstream station.
    Differences below one discordant-pair step ``2 / C(k, 2)`` are undirected.
    """
    taus = result.taus if isinstance(result, PairResult) else result
    tol = 2.0 / (taus.k * (taus.k - 1) / 2)
    diff = taus.tau_xy - taus.tau_yx
    if abs(diff) < tol - 1e-12:
        return Arrow.NONE
    return Arrow.A_TO_B if diff > 0 else Arrow.B_TO_A


@dataclass(frozen=True)
class PairResult:
    station_a: str
    station_b: str
    relation: Relation | None
    overlap_days: int
    taus: TailTauPair
    arrow: Arrow
    warnings: tuple = ()

    def swapped(self) -> "PairResult":
        taus = self.taus.swapped()
        rel = self.relation.flipped() if self.relation is not None else None
        return PairResult(self.station_b, self.station_a, rel, self.overlap_days, taus,
                          derive_arrow(taus), self.warnings)

    def as_row(self) -> dict:
        t = self.taus
        return {
            "station_a": self.station_a,
            "station_b": self.station_b,
            "relation": _RELATION_CSV[self.relation] if self.relation is not None else "unknown",
            "overlap_days": self.overlap_days,
            "q": t.q,
            "k": t.k,
            "tau_ab": t.tau_xy,
            "tau_ba": t.tau_yx,
            "asymmetry": t.asymmetry,
            "max_tau": t.max_tau,
            "arrow": self.arrow.value,
            "warnings": ";".join(self.warnings),
        }


@dataclass
class PairAnalysis:
    results: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # (station_a, station_b, message)

    @property
    def attempted(self) -> int:
        return len(self.results) + len(self.errors)


SMALL_K = 20


def analyze_pair(
    a: StationRecord,
    b: StationRecord,
    relations: RelationTable | None,
    q: float,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
) -> PairResult:
    sample = pair_common_period(a, b, min_overlap)
    spec = ThresholdSpec.from_q(q, sample.n)
    taus = tail_tau_pair(sample, spec)
    warnings = []
    if "ties" in taus.flags:
        warnings.append("ties")
    if "threshold_tie" in taus.flags:
        warnings.append("threshold_tie")
    if spec.k < SMALL_K:
        warnings.append(f"short_overlap(k={spec.k})")
    relation = relations.get(a.station_id, b.station_id) if relations is not None else None
    if relation is None:
        warnings.append("no_relation")
    return PairResult(a.station_id, b.station_id, relation, sample.n, taus,
                      derive_arrow(taus), tuple(warnings))


class _PairTask:
    def __init__(self, stations, relations, q, min_overlap):
        self.args = (stations, relations, q, min_overlap)

    def __call__(self, pair):
        stations, relations, q, min_overlap = self.args
        a, b = pair
        try:
            return analyze_pair(stations[a], stations[b], relations, q, min_overlap)
        except (ValueError, ArithmeticError) as exc:
            return (a, b, str(exc))


def analyze_all_pairs(
    stations: Mapping[str, StationRecord],
    relations: RelationTable | None,
    q: float = 0.98,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
    jobs: int = 1,
) -> PairAnalysis:
    """Analyse every unordered pair; station ids are sorted so output order is fixed."""
    if len(stations) < 2:
        raise InsufficientDataError("need at least two stations")
    pairs = list(combinations(sorted(stations), 2))
    task = _PairTask(dict(stations), relations, q, min_overlap)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(task, pairs, chunksize=max(1, len(pairs) // (8 * jobs))))
    else:
        outcomes = [task(p) for p in pairs]
    out = PairAnalysis()
    for o in outcomes:
        (out.results if isinstance(o, PairResult) else out.errors).append(o)
    return out


def write_results(results: Iterable[PairResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=OUTPUT_COLUMNS)
        w.writeheader()
        for r in results:
            row = r.as_row()
            for key in ("q", "tau_ab", "tau_ba", "asymmetry", "max_tau"):
                row[key] = repr(float(row[key]))
            w.writerow(row)


def write_errors(errors, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["station_a", "station_b", "error"])
        w.writerows(errors)


@dataclass
class GroupSummary:
    scatter: list  # dicts: station_a, station_b, group, tau_ab, tau_ba
    medians: dict  # group -> median max_tau
    directional: list  # connected pairs: downstream, upstream, tau_down, tau_up
    counts: dict

    @property
    def fraction_above_diagonal(self) -> float:
        if not self.directional:
            return float("nan")
        return float(np.mean([d["tau_up"] > d["tau_down"] for d in self.directional]))


def group_summary(results: Iterable[PairResult]) -> GroupSummary:
    """Scatter rows per relation group plus downstream-first rows for connected pairs.

    In the directional rows ``tau_down`` conditions on the downstream station;
    points with ``tau_up > tau_down`` lie above the diagonal.
    """
    results = list(results)
    if not results:
        raise ValueError("no pair results to summarise")
    scatter, directional = [], []
    by_group = defaultdict(list)
    for r in results:
        group = r.relation.group if r.relation is not None else "unknown"
        scatter.append({"station_a": r.station_a, "station_b": r.station_b, "group": group,
                        "tau_ab": r.taus.tau_xy, "tau_ba": r.taus.tau_yx})
        by_group[group].append(r.taus.max_tau)
        if r.relation in (Relation.UPSTREAM_OF, Relation.DOWNSTREAM_OF):
            o = r if r.relation is Relation.DOWNSTREAM_OF else r.swapped()
            directional.append({"downstream": o.station_a, "upstream": o.station_b,
                                "tau_down": o.taus.tau_xy, "tau_up": o.taus.tau_yx})
    medians = {g: float(np.median(v)) for g, v in sorted(by_group.items())}
    counts = {g: len(v) for g, v in sorted(by_group.items())}
    return GroupSummary(scatter, medians, directional, counts)


def write_group_summary(summary: GroupSummary, stem) -> list[Path]:
    """Write ``<stem>_scatter.csv``, ``<stem>_groups.csv`` and ``<stem>_directional.csv``."""
    stem = Path(stem)
    paths = [Path(f"{stem}_scatter.csv"), Path(f"{stem}_groups.csv"), Path(f"{stem}_directional.csv")]
    with open(paths[0], "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["station_a", "station_b", "group", "tau_ab", "tau_ba"])
        w.writeheader()
        w.writerows(summary.scatter)
    with open(paths[1], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "n_pairs", "median_max_tau"])
        for g, m in summary.medians.items():
            w.writerow([g, summary.counts[g], repr(m)])
    with open(paths[2], "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["downstream", "upstream", "tau_down", "tau_up"])
        w.writeheader()
        w.writerows(summary.directional)
    return paths


def synthetic_river(
    n_years: int = 30,
    seed: int = 0,
    start: str = "1980-01-01",
) -> tuple[dict[str, StationRecord], RelationTable]:
    """Five-gauge fixture with known topology.

    ``S1 -> S2 -> S3 <- S4`` in basin ``A`` and an isolated ``S5`` in basin
    ``B``.  Each downstream gauge is the max-mixture
    ``max{beta * upstream * M, (1 - beta) * tributary}`` where ``M`` is a
    unit-mean log-normal attenuation and the tributary is independent
    Frechet noise.
    """
    from .rng import RngStream

    gen = RngStream(seed, 0).generator()
    dates = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + 365 * n_years)
    n = dates.size

    def frechet():
        return 1.0 / gen.standard_exponential(n)

    def route(up, beta, sigma=0.3):
        m = np.exp(gen.normal(-sigma**2 / 2, sigma, n))
        return np.maximum(beta * up * m, (1.0 - beta) * frechet())

    s1 = frechet()
    s4 = frechet()
    s2 = route(s1, 0.7)
    s3 = np.maximum(route(s2, 0.6), route(s4, 0.4))
    s5 = frechet()
    flows = {"S1": s1, "S2": s2, "S3": s3, "S4": s4, "S5": s5}
    basins = {"S1": "A", "S2": "A", "S3": "A", "S4": "A", "S5": "B"}
    stations = {
        sid: StationRecord(sid, dates, f, basins[sid], f"synthetic {sid}") for sid, f in flows.items()
    }
    rel = RelationTable()
    for a, b in (("S1", "S2"), ("S1", "S3"), ("S2", "S3"), ("S4", "S3")):
        rel.add(a, b, Relation.UPSTREAM_OF)
    rel.add("S1", "S4", Relation.SAME_BASIN_UNCONNECTED)
    rel.add("S2", "S4", Relation.SAME_BASIN_UNCONNECTED)
    for s in ("S1", "S2", "S3", "S4"):
        rel.add(s, "S5", Relation.DIFFERENT_BASIN)
    return stations, rel


def write_discharge_csv(stations: Mapping[str, StationRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["station_id", "date", "flow_m3s"])
        for sid in sorted(stations):
            rec = stations[sid]
            for d, f in zip(rec.dates, rec.flow):
                w.writerow([sid, str(d), "" if math.isnan(f) else repr(float(f))])


def write_relations_csv(stations: Iterable[str], relations: RelationTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["station_a", "station_b", "relation"])
        for a, b in combinations(sorted(stations), 2):
            rel = relations.get(a, b)
            if rel is not None:
                w.writerow([a, b, _RELATION_CSV[rel]])
