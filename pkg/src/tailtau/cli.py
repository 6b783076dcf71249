"""Command-line interface.

Exit codes: 0 success, 2 usage or bad input, 3 too little data,
4 numerical failure.  Options may come from ``--config`` (``key = value``
lines, or a JSON object / run-metadata file); command-line flags win over the
config file, which wins over built-in defaults.  Every command that writes
files also writes ``<stem>.meta.json`` holding the effective configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import InsufficientDataError, PairedSample, ThresholdSpec, kendall_tau
from .rng import RngStream

log = logging.getLogger("tailtau")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(ValueError):
    pass


# ----------------------------------------------------------------- helpers


def _floats(text: str) -> list[float]:
    """``"0.1,0.2"`` or ``"start:stop:num"`` (inclusive linspace)."""
    text = str(text).strip()
    if ":" in text:
        start, stop, num = text.split(":")
        return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
    return [float(v) for v in text.split(",") if v.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def load_config(path) -> dict:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return dict(data.get("config", data))
    out = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _effective(args) -> dict:
    skip = {"func", "config", "command", "kind", "model", "which", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


_UNHASHED = ("outdir", "output", "sweep_output", "jobs")


def _config_hash(command: list, cfg: dict) -> str:
    """Hash of everything that determines the results (not where they go)."""
    cfg = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    text = json.dumps({"command": command, "config": cfg}, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _write_meta(stem: Path, command: list, cfg: dict, outputs: list, config_hash: str | None = None) -> Path:
    meta = {
        "tool": "tailtau",
        "version": __version__,
        "command": command,
        "seed": cfg.get("seed"),
        "config_hash": config_hash or _config_hash(command, cfg),
        "config": cfg,
        "outputs": [Path(p).name for p in outputs],
    }
    path = Path(f"{stem}.meta.json")
    path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _outdir(args) -> Path:
    d = Path(args.outdir)
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------- estimate


def read_two_columns(path) -> PairedSample:
    """Two numeric columns, optional header row; blank or ``NA`` cells are missing."""
    xs, ys = [], []
    labels = ("x", "y")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise UsageError(f"{path}: empty file")

    def num(cell):
        cell = cell.strip()
        return float("nan") if cell.upper() in ("", "NA", "NAN") else float(cell)

    start = 0
    try:
        [num(c) for c in rows[0][:2]]
    except ValueError:
        labels = tuple(c.strip() for c in rows[0][:2])
        start = 1
    for line_no, row in enumerate(rows[start:], start=start + 1):
        if len(row) < 2:
            raise UsageError(f"{path}:{line_no}: expected two columns")
        try:
            xs.append(num(row[0]))
            ys.append(num(row[1]))
        except ValueError as exc:
            raise UsageError(f"{path}:{line_no}: {exc}") from None
    return PairedSample.from_arrays(xs, ys, *labels)


def cmd_estimate(args) -> int:
    from .tail import chi_hat, tail_tau_pair, threshold_sweep

    sample = read_two_columns(args.input)
    spec = ThresholdSpec.from_q(args.q, sample.n)
    pair = tail_tau_pair(sample, spec)
    try:
        chi = chi_hat(sample, args.q)
        chi_text, joint = repr(chi.chi), chi.joint_exceedances
    except ValueError as exc:
        chi_text, joint = "nan", "nan"
        log.info("chi not available: %s", exc)
    report = {
        "n": sample.n,
        "dropped": sample.dropped,
        "q": args.q,
        "k": spec.k,
        "tau_xy": pair.tau_xy,
        "tau_yx": pair.tau_yx,
        "asymmetry": pair.asymmetry,
        "max_tau": pair.max_tau,
        "kendall_tau": kendall_tau(sample),
        "chi": chi_text,
        "joint_exceedances": joint,
        "flags": ";".join(sorted(pair.flags)),
    }
    for key, val in report.items():
        print(f"{key}={val}")
    if args.output:
        with open(args.output, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(report))
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in report.values()])
    if args.sweep:
        rows = threshold_sweep(sample, _floats(args.sweep))
        out = args.sweep_output or "sweep.csv"
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q", "k", "tau_xy", "tau_yx", "asymmetry", "max_tau"])
            for p in rows:
                w.writerow([p.q, p.k, repr(p.tau_xy), repr(p.tau_yx), repr(p.asymmetry), repr(p.max_tau)])
    return 0


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    from . import sim

    stream = RngStream(args.seed, args.stream)
    model = args.model
    if model == "river":
        from .hydro import synthetic_river, write_discharge_csv, write_relations_csv

        out = _outdir(args)
        stations, rel = synthetic_river(n_years=args.years, seed=args.seed)
        write_discharge_csv(stations, out / "discharge.csv")
        with open(out / "stations.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["station_id", "basin_id", "name"])
            for sid in sorted(stations):
                w.writerow([sid, stations[sid].basin_id, stations[sid].name])
        write_relations_csv(stations, rel, out / "relations.csv")
        outputs = [out / "discharge.csv", out / "stations.csv", out / "relations.csv"]
        _write_meta(out / "river", ["simulate", model], _effective(args), outputs)
        print(f"wrote {', '.join(str(p) for p in outputs)}")
        return 0
    if model == "asym-logistic":
        params = sim.AsymLogisticParams.from_inv_alpha(args.inv_alpha, args.beta1, args.beta2)
        s = sim.sample_asym_logistic(params, args.n, stream)
    elif model == "sym-logistic":
        s = sim.sample_sym_logistic(args.inv_alpha, args.n, stream)
    elif model == "husler-reiss":
        s = sim.sample_husler_reiss(sim.HuslerReissParams(args.gamma), args.n, stream)
    elif model == "dirichlet":
        s = sim.sample_extremal_dirichlet(args.alpha1, args.alpha2, args.n, stream)
    else:
        cfg = sim.SemConfig(args.beta, args.dof, args.direction, args.confounded, args.loading)
        s = sim.sample_sem(cfg, args.n, stream)
    cfg = _effective(args)
    command = ["simulate", model]
    stem = _outdir(args) / f"simulate_{model}_{_config_hash(command, cfg)}"
    path = Path(args.output) if args.output else Path(f"{stem}.csv")
    np.savetxt(path, np.column_stack([s.x, s.y]), delimiter=",", header="x,y", comments="", fmt="%.17g")
    _write_meta(stem, command, cfg, [path])
    print(f"wrote {path} (n={s.n})")
    return 0


# ------------------------------------------------------------------ theory


def cmd_theory(args) -> int:
    from . import theory

    if args.which == "hr":
        print(f"tau={theory.hr_tau_closed(args.gamma):.5f}")
        print(f"chi={theory.hr_chi_closed(args.gamma):.5f}")
        if args.mc:
            est = theory.tau_limit_mc(theory.hr_extremal_sampler(args.gamma), args.n_mc, RngStream(args.seed))
            print(f"tau_mc={est.value:.5f} se={est.se:.5f}")
        return 0
    if args.which == "dirichlet":
        w12, w21 = theory.dirichlet_extremal_sampler(args.alpha1, args.alpha2)
        gen = RngStream(args.seed).generator()
        txy = theory.tau_limit_mc(w12, args.n_mc, gen)
        tyx = theory.tau_limit_mc(w21, args.n_mc, gen)
        chi = theory.chi_limit_mc(w12, args.n_mc, gen)
        print(f"tau_xy={txy.value:.5f} se_xy={txy.se:.5f}")
        print(f"tau_yx={tyx.value:.5f} se_yx={tyx.se:.5f}")
        print(f"chi={chi.value:.5f} se_chi={chi.se:.5f}")
        return 0
    family = "husler_reiss" if args.family in ("hr", "husler_reiss") else args.family
    if args.grid:
        grid = _floats(args.grid)
    else:
        grid = _floats("0.05:10:60") if family == "husler_reiss" else _floats("0.25:6:24")
    curve = theory.dependence_curves(family, grid, args.n_mc, RngStream(args.seed), args.alpha1)
    cfg = _effective(args)
    command = ["theory", "curves"]
    stem = _outdir(args) / f"curves_{family}_{_config_hash(command, cfg)}"
    path = Path(f"{stem}.csv")
    curve.write_csv(path)
    _write_meta(stem, command, cfg, [path])
    print(f"wrote {path} ({len(grid)} grid points)")
    return 0


# -------------------------------------------------------------- experiment


def cmd_experiment(args) -> int:
    from . import experiments as ex

    n_reps = args.n_reps or ex.PROFILES[args.profile]
    if args.kind in ("grid", "direction"):
        kw = {"n_reps": n_reps, "seed": args.seed, "q": args.q}
        if args.n is not None:
            kw["n_per_sample"] = args.n
        if args.betas:
            kw["beta_grid"] = tuple(_floats(args.betas))
        if args.inv_alphas:
            kw["inv_alpha_grid"] = tuple(_floats(args.inv_alphas))
        config = ex.GridConfig(**kw)
        runs = ex.simulate_grid(config, jobs=args.jobs)
        summary = (ex.summarize_grid if args.kind == "grid" else ex.summarize_directionality)(config, runs)
    else:
        kw = {"n_reps": n_reps, "seed": args.seed, "q": args.q, "beta": args.beta,
              "noise_dof": args.dof, "confounder_loading": args.loading}
        if args.n is not None:
            kw["n_per_sample"] = args.n
        config = ex.CausalExpConfig(**kw)
        summary = ex.run_causality(config, jobs=args.jobs)
    cfg = _effective(args)
    stem = _outdir(args) / f"{args.kind}_{config.hash}"
    path = Path(f"{stem}.csv")
    summary.write_csv(path)
    _write_meta(stem, ["experiment", args.kind], cfg, [path], config.hash)
    print(f"wrote {path} ({len(summary.rows)} rows)")
    return 0


# ------------------------------------------------------------------- hydro


def cmd_hydro(args) -> int:
    from . import hydro

    meta = hydro.load_stations(args.stations)
    discharge = args.discharge or [str(Path(args.stations).with_name("discharge.csv"))]
    stations, warnings = hydro.load_discharge(discharge, meta)
    relations = hydro.RelationTable.from_csv(args.relations) if args.relations else None
    unknown = sorted(set(stations) - set(meta))
    if unknown:
        log.warning("stations without metadata: %s", ", ".join(unknown))
    analysis = hydro.analyze_all_pairs(stations, relations, args.q, args.min_overlap, jobs=args.jobs)
    cfg = _effective(args)
    command = ["hydro"]
    stem = _outdir(args) / f"hydro_{_config_hash(command, cfg)}"
    outputs = [Path(f"{stem}_pairs.csv"), Path(f"{stem}_errors.csv")]
    hydro.write_results(analysis.results, outputs[0])
    hydro.write_errors(analysis.errors, outputs[1])
    if analysis.results:
        outputs += hydro.write_group_summary(hydro.group_summary(analysis.results), stem)
    _write_meta(stem, command, cfg, outputs)
    print(f"pairs attempted={analysis.attempted} analysed={len(analysis.results)} "
          f"errors={len(analysis.errors)} rejected_rows={len(warnings)}")
    print(f"wrote {outputs[0]}")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="tailtau", description="Directional tail Kendall's tau: estimation, simulation, limits, river pairs."
    )
    parser.add_argument("--version", action="version", version=f"tailtau {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict = {}

    def common(p, seed=True, out=True):
        p.add_argument("--config", help="key=value or JSON config file (flags override it)")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if out:
            p.add_argument("--outdir", default=".")

    p = sub.add_parser("estimate", help="tail Kendall's tau pair and chi for a two-column CSV")
    p.add_argument("input")
    p.add_argument("--q", type=float, default=0.98)
    p.add_argument("--output", help="write the report as a one-row CSV")
    p.add_argument("--sweep", help="comma list or start:stop:num of q levels")
    p.add_argument("--sweep-output")
    common(p, seed=False, out=False)
    p.set_defaults(func=cmd_estimate)
    registry[("estimate",)] = p

    p = sub.add_parser("simulate", help="draw a sample from one of the models")
    models = p.add_subparsers(dest="model", required=True)
    for name in ("asym-logistic", "sym-logistic", "husler-reiss", "dirichlet", "sem", "river"):
        m = models.add_parser(name)
        m.add_argument("-n", type=int, default=1000)
        m.add_argument("--stream", type=int, default=0)
        m.add_argument("--output")
        common(m)
        m.set_defaults(func=cmd_simulate)
        registry[("simulate", name)] = m
        if name in ("asym-logistic", "sym-logistic"):
            m.add_argument("--inv-alpha", type=float, default=0.5)
        if name == "asym-logistic":
            m.add_argument("--beta1", type=float, default=0.5)
            m.add_argument("--beta2", type=float, default=0.5)
        if name == "husler-reiss":
            m.add_argument("--gamma", type=float, default=1.0)
        if name == "dirichlet":
            m.add_argument("--alpha1", type=float, default=2.0)
            m.add_argument("--alpha2", type=float, default=2.0)
        if name == "sem":
            m.add_argument("--beta", type=float, default=0.3)
            m.add_argument("--dof", type=float, default=3.0)
            m.add_argument("--direction", choices=("independent", "xy", "yx"), default="xy")
            m.add_argument("--confounded", type=_bool, default=False)
            m.add_argument("--loading", type=float, default=0.3)
        if name == "river":
            m.add_argument("--years", type=int, default=30)

    p = sub.add_parser("theory", help="limiting coefficients from extremal functions")
    which = p.add_subparsers(dest="which", required=True)
    t = which.add_parser("hr", help="Husler-Reiss closed forms")
    t.add_argument("--gamma", type=float, required=True)
    t.add_argument("--mc", action="store_true", help="also print the Monte Carlo limit")
    t.add_argument("--n-mc", type=int, default=1_000_000)
    common(t, out=False)
    registry[("theory", "hr")] = t
    t = which.add_parser("dirichlet", help="extremal Dirichlet limits by Monte Carlo")
    t.add_argument("--alpha1", type=float, default=2.0)
    t.add_argument("--alpha2", type=float, default=2.0)
    t.add_argument("--n-mc", type=int, default=1_000_000)
    common(t, out=False)
    registry[("theory", "dirichlet")] = t
    t = which.add_parser("curves", help="tabulate chi and tau over a parameter grid")
    t.add_argument("--family", choices=("hr", "husler_reiss", "dirichlet"), default="hr")
    t.add_argument("--grid", help="comma list or start:stop:num")
    t.add_argument("--alpha1", type=float, default=2.0)
    t.add_argument("--n-mc", type=int, default=200_000)
    common(t)
    registry[("theory", "curves")] = t
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("experiment", help="simulation studies")
    kinds = p.add_subparsers(dest="kind", required=True)
    for name in ("grid", "direction", "causal"):
        e = kinds.add_parser(name)
        e.add_argument("--profile", choices=("desk", "paper"), default="desk")
        e.add_argument("--n-reps", type=int, help="override the profile's repetition count")
        e.add_argument("-n", type=int, help="sample size per repetition")
        e.add_argument("--q", type=float, default=0.98)
        e.add_argument("--jobs", type=int, default=1)
        common(e)
        if name == "causal":
            e.add_argument("--beta", type=float, default=0.3)
            e.add_argument("--dof", type=float, default=3.0)
            e.add_argument("--loading", type=float, default=0.3)
        else:
            e.add_argument("--betas", help="beta grid (default 0.1..0.9)")
            e.add_argument("--inv-alphas", help="1/alpha grid (default 0.005,0.2,0.4,0.6,0.8,0.98)")
        registry[("experiment", name)] = e
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("hydro", help="pairwise analysis of gauging stations")
    p.add_argument("--stations", required=True)
    p.add_argument("--relations")
    p.add_argument("--discharge", nargs="+", help="discharge CSV(s); default: discharge.csv beside --stations")
    p.add_argument("--q", type=float, default=0.98)
    p.add_argument("--min-overlap", type=int, default=1095)
    p.add_argument("--jobs", type=int, default=1)
    common(p, seed=False)
    p.set_defaults(func=cmd_hydro)
    registry[("hydro",)] = p
    return parser, registry


def parse_args(argv=None) -> argparse.Namespace:
    parser, registry = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        key = tuple(v for v in (args.command, getattr(args, "model", None),
                                getattr(args, "which", None), getattr(args, "kind", None)) if v)
        sub = registry[key]
        known = {a.dest for a in sub._actions}
        cfg = load_config(args.config)
        extra = sorted(set(cfg) - known)
        if extra:
            raise UsageError(f"unknown config keys for {' '.join(key)}: {', '.join(extra)}")
        sub.set_defaults(**{k: v for k, v in cfg.items() if k != "config"})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
