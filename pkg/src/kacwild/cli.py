"""Command-line front end.

One executable, one subcommand per capability:

    kacwild alpha        --s 4
    kacwild cumulants    --moments 0,1,0,1.8
    kacwild solve        --datum cfg --t 0.5,1,2 --method bobylev --out-dir out
    kacwild sample       --datum cfg --t 1 --n 100000 --stats m=4,6
    kacwild distance     --datum cfg --t 1,2,4
    kacwild verify-lemma --lemma l1 --datum cfg --trials 50
    kacwild rate         --config experiment.cfg
    kacwild demo         --out-dir demo_out

All outputs are plain CSV with a one-line header, written under
--out-dir together with a run.meta provenance file (version, config
hash, seed, timestamps).  Numbers are printed with repr-level precision
so reruns with the same config and seed are byte-identical (run.meta
carries the only timestamps).

Exit codes: 0 success, 1 domain/usage errors, 2 expectation mismatch
(rate --config with an expect= entry), 3 resource errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .angular import alpha_value, decay_exponent
from .cumulants import moments_to_cumulants
from .initial_data import datum_from_config, gaussian
from . import bounds, mckean, rates, spectral

log = logging.getLogger("kacwild")

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_EXPECT = 2
EXIT_RESOURCE = 3

_FMT = "%.17g"


def _fmt(x) -> str:
    return _FMT % float(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def _write_meta(out_dir: Path, args: argparse.Namespace, config_text: str = "") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": __version__,
        "command": args.subcommand,
        "seed": getattr(args, "seed", None),
        "threads": getattr(args, "threads", None),
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "argv": sys.argv[1:],
    }
    (out_dir / "run.meta").write_text(json.dumps(meta, indent=2) + "\n")


def _read_config(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    return parser


def _load_datum(path: str):
    parser = _read_config(path)
    if "datum" not in parser:
        raise ValueError(f"{path} has no [datum] section")
    return datum_from_config(dict(parser["datum"])), Path(path).read_text()


def _grid_from_args(args) -> spectral.GridParams | None:
    if getattr(args, "n_points", None) or getattr(args, "xi_max", None):
        return spectral.GridParams(
            n_points=args.n_points or 8192,
            xi_max=args.xi_max,
            theta_panels=getattr(args, "theta_panels", 256) or 256,
        )
    return None


def _parse_times(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(","))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_alpha(args) -> int:
    a = alpha_value(args.s)
    expo = 1.0 - 2.0 * a
    print(f"{args.s:g},{a!r},{expo!r}")
    return EXIT_OK


def cmd_cumulants(args) -> int:
    moments = [float(x) for x in args.moments.split(",")]
    kappa = moments_to_cumulants(moments)
    print(",".join(_fmt(k) for k in kappa))
    return EXIT_OK


def cmd_solve(args) -> int:
    d, cfg_text = _load_datum(args.datum)
    times = _parse_times(args.t)
    out_dir = Path(args.out_dir)
    _write_meta(out_dir, args, cfg_text)
    grid = _grid_from_args(args)
    if args.method == "wild":
        snaps = [spectral.wild_series(d, t, grid=grid, tol=args.tol) for t in times]
    else:
        snaps = spectral.bobylev_evolve(d, sorted(times), dt=args.dt, grid=grid)
    for snap in snaps:
        tag = ("%g" % snap.t).replace(".", "p")
        _write_csv(
            out_dir / f"cf_t{tag}.csv",
            ["xi", "re_phi", "im_phi"],
            zip(snap.xi, snap.phi.real, snap.phi.imag),
        )
        if d.density is not None:
            dens = spectral.invert_to_density(snap, edge_tol=args.edge_tol)
            _write_csv(out_dir / f"density_t{tag}.csv", ["v", "f"], zip(dens.v, dens.f))
    log.info("wrote %d snapshot(s) to %s", len(snaps), out_dir)
    return EXIT_OK


def cmd_sample(args) -> int:
    d, cfg_text = _load_datum(args.datum)
    out_dir = Path(args.out_dir)
    _write_meta(out_dir, args, cfg_text)
    batch = mckean.velocity_batch(d, args.t, args.n, seed=args.seed, batch_size=args.batch_size)
    _write_csv(out_dir / "samples.csv", ["v"], ((v,) for v in batch.values))
    if args.stats:
        ms = [float(m) for m in args.stats.replace("m=", "").split(",")]
        stats = mckean.power_sum_stats(args.t, ms, args.n, seed=args.seed, batch_size=args.batch_size)
        _write_csv(
            out_dir / "weight_power_sums.csv",
            ["t", "m", "mean", "std_error", "exact", "max_sphere_residual"],
            ((s.t, s.m, s.mean, s.std_error, s.exact, s.max_sphere_residual) for s in stats),
        )
    log.info("wrote %d samples to %s", args.n, out_dir)
    return EXIT_OK


def cmd_distance(args) -> int:
    d, cfg_text = _load_datum(args.datum)
    times = _parse_times(args.t)
    out_dir = Path(args.out_dir)
    _write_meta(out_dir, args, cfg_text)
    grid = _grid_from_args(args)
    snaps = spectral.bobylev_evolve(d, sorted(times), dt=args.dt, grid=grid)
    rows = []
    for snap in snaps:
        sup = spectral.sup_cf_distance(snap)
        tv = ""
        if d.density is not None:
            tv = spectral.tv_distance(spectral.invert_to_density(snap, edge_tol=args.edge_tol), d.sigma)
        rows.append((snap.t, tv, sup))
    _write_csv(out_dir / "distance.csv", ["t", "tv", "sup_cf"], rows)
    for row in rows:
        print(",".join(_fmt(c) if c != "" else "" for c in row))
    return EXIT_OK


def cmd_verify_lemma(args) -> int:
    d, cfg_text = _load_datum(args.datum)
    out_dir = Path(args.out_dir)
    _write_meta(out_dir, args, cfg_text)
    rng = mckean.stream(args.seed, 0)
    analysis = bounds.BaseAnalysis.from_datum(d, k=args.k, delta=args.delta)
    rows = []
    for _ in range(args.trials):
        n = int(rng.integers(1, args.max_n + 1))
        c = rng.normal(size=n)
        c /= math.sqrt(float(c @ c))
        cert = bounds.verify_lemma(
            args.lemma, d, c, k=args.k, delta=args.delta, analysis=analysis
        )
        weights_hash = hashlib.sha256(c.tobytes()).hexdigest()[:12]
        rows.append((n, weights_hash, cert.window, cert.max_violation, cert.argmax_xi))
    _write_csv(
        out_dir / "lemma_certificates.csv",
        ["n", "weights_hash", "window", "max_violation", "argmax_xi"],
        rows,
    )
    worst = max(r[3] for r in rows)
    print(f"{args.lemma}: {args.trials} trials, worst violation {worst!r}")
    return EXIT_OK if worst <= 0 else EXIT_DOMAIN


def _experiment_from_config(path: str) -> tuple[rates.ExperimentConfig, str]:
    parser = _read_config(path)
    if "datum" not in parser or "experiment" not in parser:
        raise ValueError(f"{path} needs [datum] and [experiment] sections")
    d = datum_from_config(dict(parser["datum"]))
    exp = parser["experiment"]
    t0 = exp.getfloat("t_start", 0.0)
    t1 = exp.getfloat("t_end", 10.0)
    dt_grid = exp.getfloat("t_step", 0.5)
    times = tuple(np.round(np.arange(t0, t1 + dt_grid / 2, dt_grid), 12))
    grid = None
    if "grid" in parser:
        g = parser["grid"]
        grid = spectral.GridParams(
            n_points=g.getint("n_points", 8192),
            xi_max=g.getfloat("xi_max", None),
            theta_panels=g.getint("theta_panels", 256),
        )
    cfg = rates.ExperimentConfig(
        datum=d,
        times=times,
        method=exp.get("method", "bobylev"),
        fit_window=(exp.getfloat("fit_lo", 3.0), exp.getfloat("fit_hi", min(10.0, t1))),
        dt=exp.getfloat("dt", 0.02),
        wild_tol=exp.getfloat("wild_tol", 1e-6),
        grid=grid,
        solver_tol=exp.getfloat("solver_tol", 1e-6),
        seed=exp.getint("seed", 0),
        expect=exp.get("expect", None),
    )
    return cfg, Path(path).read_text()


def cmd_rate(args) -> int:
    cfg, cfg_text = _experiment_from_config(args.config)
    out_dir = Path(args.out_dir)
    _write_meta(out_dir, args, cfg_text)
    series = rates.run_experiment(cfg)
    _write_csv(
        out_dir / "series.csv",
        ["t", "metric", "value", "method", "tol"],
        ((r["t"], r["metric"], _fmt(r["value"]), r["method"], r["tol"]) for r in series.rows),
    )
    pred = rates.predicted_rate(cfg.datum)
    fit = None
    verdict = "equilibrium"
    try:
        fit = rates.fit_rate(series, predicted=pred.exponent)
    except ValueError as err:
        log.info("fit skipped: %s", err)
    verdict = rates.theorem_verdict(series, fit)
    fit_row = (
        (fit.slope, fit.intercept, fit.residual, fit.compensated_liminf) if fit else ("", "", "", "")
    )
    _write_csv(
        out_dir / "fit.csv",
        ["slope", "intercept", "residual", "compensated_liminf", "predicted", "verdict"],
        [fit_row + (pred.exponent if pred.exponent is not None else "", verdict)],
    )
    print(f"verdict: {verdict} (predicted exponent {pred.exponent}, {pred.rationale})")
    if cfg.expect is not None and verdict != cfg.expect:
        log.error("expected verdict %s, got %s", cfg.expect, verdict)
        return EXIT_EXPECT
    return EXIT_OK


def cmd_demo(args) -> int:
    from .demo import run_demo

    out_dir = Path(args.out_dir)
    _write_meta(out_dir, args)
    ok = run_demo(out_dir, quick=args.quick, seed=args.seed)
    return EXIT_OK if ok else EXIT_DOMAIN


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kacwild", description=__doc__.split("\n")[0])
    ap.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, seed=True):
        p.add_argument("--out-dir", default="kacwild_out")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1, help="worker cap (results are thread-count independent)")

    p = sub.add_parser("alpha", help="angular moment and decay exponent for one order")
    p.add_argument("--s", type=float, required=True)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("cumulants", help="cumulants from a comma-separated raw-moment list")
    p.add_argument("--moments", required=True)
    p.set_defaults(func=cmd_cumulants)

    p = sub.add_parser("solve", help="evolve a datum and write cf/density snapshots")
    common(p, seed=False)
    p.add_argument("--datum", required=True, help="config file with a [datum] section")
    p.add_argument("--t", required=True, help="comma-separated times")
    p.add_argument("--method", default="bobylev", choices=["bobylev", "wild"])
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--tol", type=float, default=1e-6, help="wild-series tail tolerance")
    p.add_argument("--edge-tol", type=float, default=1e-6)
    p.add_argument("--n-points", type=int, default=None)
    p.add_argument("--xi-max", type=float, default=None)
    p.add_argument("--theta-panels", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sample", help="Monte Carlo velocity samples and weight power sums")
    common(p)
    p.add_argument("--datum", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--stats", default="", help="e.g. m=4,6 for power-sum summaries")
    p.add_argument("--batch-size", type=int, default=100_000)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("distance", help="TV and sup-cf distance to equilibrium over time")
    common(p, seed=False)
    p.add_argument("--datum", required=True)
    p.add_argument("--t", required=True)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--edge-tol", type=float, default=1e-6)
    p.add_argument("--n-points", type=int, default=None)
    p.add_argument("--xi-max", type=float, default=None)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("verify-lemma", help="bound certificates for random weight arrays")
    common(p)
    p.add_argument("--lemma", required=True, choices=sorted(bounds.LEMMA_IDS))
    p.add_argument("--datum", required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--max-n", type=int, default=8)
    p.set_defaults(func=cmd_verify_lemma)

    p = sub.add_parser("rate", help="decay experiment from an experiment config file")
    common(p, seed=False)
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("demo", help="end-to-end pipeline reproducing the acceptance runs")
    common(p)
    p.add_argument("--quick", action="store_true", help="reduced sizes (minutes -> seconds)")
    p.set_defaults(func=cmd_demo)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, spectral.AliasingError, spectral.DistanceError) as err:
        log.error("%s", err)
        return EXIT_DOMAIN
    except (mckean.ResourceError, spectral.TruncationError, MemoryError) as err:
        log.error("%s", err)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
