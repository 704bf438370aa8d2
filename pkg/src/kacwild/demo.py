"""End-to-end demo pipeline: runs every experiment family once and
writes the artifact set (CSV per stage) plus a report.md of verdicts.

``quick=True`` shrinks the time horizons and sample counts so the whole
pipeline finishes in under a minute; the full mode mirrors the
acceptance-suite scales (several minutes).
"""

from __future__ import annotations

import csv
import math
import time
from pathlib import Path

import numpy as np

from .angular import alpha_value, decay_exponent
from .cumulants import cumulants_to_moments, moments_to_cumulants
from . import bounds, initial_data, mckean, rates, spectral


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def run_demo(out_dir: Path, quick: bool = False, seed: int = 0) -> bool:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checks: list[tuple[str, bool, str]] = []
    t_start = time.time()

    def record(name: str, ok: bool, detail: str) -> None:
        checks.append((name, bool(ok), detail))

    # --- angular moments ---------------------------------------------------
    svals = np.arange(0.0, 12.5, 0.5)
    _write_csv(
        out_dir / "alpha.csv",
        ["s", "alpha", "exponent"],
        [(s, alpha_value(s), 1.0 - 2.0 * alpha_value(s)) for s in svals],
    )
    record(
        "angular-moments",
        alpha_value(4) == 0.375 and decay_exponent(4) == 0.25,
        "alpha(4)=3/8 exactly; exponent 1/4",
    )

    # --- cumulant round trip ----------------------------------------------
    rng = mckean.stream(seed, 900)
    worst = 0.0
    for _ in range(20 if quick else 100):
        order = int(rng.integers(2, 11))
        kap = rng.normal(size=order)
        kap[1] = abs(kap[1]) + 0.5
        back = moments_to_cumulants(cumulants_to_moments(kap))
        worst = max(worst, float(np.max(np.abs(back - kap) / np.maximum(np.abs(kap), 1.0))))
    record("cumulant-round-trip", worst < 1e-9, f"worst relative error {worst:.2e}")

    # --- equilibrium fixed point --------------------------------------------
    g = initial_data.gaussian(1.0)
    t_eq = [1.0, 3.0] if quick else [0.5, 1.0, 2.0, 3.0, 4.0, 5.0]
    snaps = spectral.bobylev_evolve(g, t_eq, dt=0.02)
    dev_b = max(spectral.sup_cf_distance(s) for s in snaps)
    dev_w = max(
        spectral.sup_cf_distance(spectral.wild_series(g, t, tol=1e-6)) for t in t_eq
    )
    record(
        "gaussian-equilibrium",
        dev_b < 1e-6 and dev_w < 1e-6,
        f"sup deviation bobylev {dev_b:.2e}, wild {dev_w:.2e}",
    )

    # --- exact fourth-cumulant decay ----------------------------------------
    u = initial_data.uniform(1.0)
    t_k4 = [1.0, 2.0] if quick else [1.0, 2.0, 4.0]
    snaps = spectral.bobylev_evolve(u, t_k4, dt=0.02)
    k40 = initial_data.kappa4_symmetrized(u)
    rel = max(
        abs(spectral.cf_moment_fit(s)["kappa4"] - k40 * math.exp(-s.t / 4.0)) / abs(k40)
        for s in snaps
    )
    record("kappa4-decay", rel <= 1e-3, f"worst relative deviation {rel:.2e}")

    # --- tree invariants and the moment identity ----------------------------
    n_mc = 20_000 if quick else 100_000
    rows = []
    worst_resid = 0.0
    worst_z = 0.0
    for t in (0.5, 1.0, 2.0):
        for st in mckean.power_sum_stats(t, [3, 4, 6], n_mc, seed=seed):
            rows.append((st.t, st.m, st.mean, st.std_error, st.exact, st.z_score))
            worst_resid = max(worst_resid, st.max_sphere_residual)
            worst_z = max(worst_z, abs(st.z_score))
    _write_csv(out_dir / "power_sums.csv", ["t", "m", "mean", "se", "exact", "z"], rows)
    record("tree-sphere-identity", worst_resid < 1e-12, f"worst residual {worst_resid:.2e}")
    record("weight-moment-identity", worst_z <= 3.0, f"worst |z| {worst_z:.2f} over (m,t) grid")

    # --- Monte Carlo vs spectral cf ------------------------------------------
    n_cf = 20_000 if quick else 100_000
    gp = spectral.GridParams(n_points=2048, xi_max=20.0, theta_panels=128)
    snap = spectral.bobylev_evolve(u, 1.0, dt=0.02, grid=gp)
    batch = mckean.velocity_batch(u, 1.0, n_cf, seed=seed)
    emp, _ = mckean.empirical_cf(batch, snap.xi)
    frac = float(np.mean(np.abs(emp - snap.phi) <= 4.0 / math.sqrt(n_cf)))
    record("mc-vs-spectral-cf", frac >= 0.99, f"{100 * frac:.2f}% of nodes within 4/sqrt(n)")

    # --- decay-rate experiments ----------------------------------------------
    grid_q = spectral.GridParams(n_points=4096) if quick else None
    t_hi, window = (6.0, (2.0, 6.0)) if quick else (10.0, (3.0, 10.0))
    times = tuple(np.round(np.arange(0.0, t_hi + 0.25, 0.5), 12))
    series_rows = []

    def rate_case(datum, expect, fit_pred):
        cfg = rates.ExperimentConfig(
            datum=datum, times=times, fit_window=window, grid=grid_q
        )
        series = rates.run_experiment(cfg)
        pred = rates.predicted_rate(datum)
        fit = rates.fit_rate(series, predicted=fit_pred)
        verdict = rates.theorem_verdict(series, fit)
        for r in series.rows:
            series_rows.append((datum.name, r["t"], r["metric"], r["value"], r["method"]))
        record(
            f"rate-{expect}",
            verdict == expect,
            f"{datum.name}: slope {fit.slope:.4f}, predicted {pred.exponent}, verdict {verdict}",
        )
        return fit

    fit_u = rate_case(u, "T1-sharp", 0.25)
    rate_case(initial_data.make_zero_kurtosis_mixture(), "T2-faster", None)

    pert = initial_data.make_odd_perturbed_gaussian(1.0, 0.3)
    cfg = rates.ExperimentConfig(
        datum=pert.datum,
        times=tuple(np.round(np.arange(0.0, 5.25, 0.5), 12)),
        fit_window=(0.5, 5.0),
    )
    series = rates.run_experiment(cfg)
    ts, vs = series.metric("tv")
    comp_dev = float(np.max(np.abs(vs * np.exp(ts) / vs[0] - 1.0)))
    verdict = rates.theorem_verdict(series)
    for r in series.rows:
        series_rows.append((pert.datum.name, r["t"], r["metric"], r["value"], r["method"]))
    record(
        "rate-P4-exact",
        verdict == "P4-exact" and comp_dev <= 0.01,
        f"max |d(t)e^t/d(0) - 1| = {comp_dev:.2e}, verdict {verdict}",
    )
    _write_csv(out_dir / "series.csv", ["datum", "t", "metric", "value", "method"], series_rows)

    # --- bound certificates ----------------------------------------------------
    trials = 20 if quick else 200
    cert_rows = []
    worst_violation = -np.inf
    bases = [initial_data.gaussian(1.0), u, initial_data.make_zero_kurtosis_mixture()]
    for base in bases:
        a4 = bounds.BaseAnalysis.from_datum(base, 4, 0.0)
        a41 = bounds.BaseAnalysis.from_datum(base, 4, 1.0)
        a60 = bounds.BaseAnalysis.from_datum(base, 6, 0.0)
        rng = mckean.stream(seed, 7000)
        for _ in range(trials):
            n = int(rng.integers(1, 9))
            c = rng.normal(size=n)
            c /= math.sqrt(float(c @ c))
            for lemma, analysis, k, delta in (
                ("l1", a4, 4, 0.0),
                ("l1fast", a4, 4, 0.0),
                ("l1der", a4, 4, 0.0),
                ("l2", a41, 4, 1.0),
                ("l2der", a41, 4, 1.0),
                ("l2", a60, 6, 0.0),
                ("l2der", a60, 6, 0.0),
            ):
                cert = bounds.verify_lemma(
                    lemma, base, c, k=k, delta=delta, n_grid=2001, analysis=analysis
                )
                worst_violation = max(worst_violation, cert.max_violation)
                cert_rows.append(
                    (base.name, cert.lemma, k, delta, n, cert.window, cert.max_violation)
                )
    _write_csv(
        out_dir / "lemma_certificates.csv",
        ["base", "lemma", "k", "delta", "n", "window", "max_violation"],
        cert_rows,
    )
    record(
        "bound-certificates",
        worst_violation <= 0.0,
        f"{len(cert_rows)} certificates, worst violation {worst_violation:.2e}",
    )

    # --- report ------------------------------------------------------------------
    ok_all = all(ok for _, ok, _ in checks)
    lines = [
        "# kacwild demo report",
        "",
        f"mode: {'quick' if quick else 'full'}  |  seed: {seed}  |  "
        f"elapsed: {time.time() - t_start:.1f}s",
        "",
        "| check | status | detail |",
        "|---|---|---|",
    ]
    for name, ok, detail in checks:
        lines.append(f"| {name} | {'PASS' if ok else 'FAIL'} | {detail} |")
    lines += ["", f"overall: {'PASS' if ok_all else 'FAIL'}", ""]
    (out_dir / "report.md").write_text("\n".join(lines))
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    print(f"overall: {'PASS' if ok_all else 'FAIL'} ({time.time() - t_start:.1f}s)")
    return ok_all
