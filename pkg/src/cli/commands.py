"""
The simulate, analyze and verify commands
"""

import hashlib
import logging
import time
from pathlib import Path

import numpy as np
import pandas as pd

from src.cli.scenario import prepare
from src.cli.schemas import (
    AnalysisReport,
    BoundReport,
    CheckResult,
    EigenvalueReport,
    RescaledReport,
    RunManifest,
    VerifyReport,
)
from src.config import CSV_FLOAT_FORMAT
from src.exceptions import NetwaveError, RationalDependenceViolated
from src.normalization.subdivision import rescale_state, similarity_solve, unrescale_state
from src.oracle.characteristics import CharacteristicsOracle, characteristics_solve
from src.oracle.compare import SampledSolution, compare
from src.oracle.resolvent import resolvent_apply
from src.oracle.upwind import upwind_solve
from src.semigroup.evaluator import Semigroup, semigroup_property_check
from src.semigroup.state_function import StateFunction
from src.spectral.asymptotics import classify
from src.spectral.decomposition import projector_norm, rank_one_estimate, spectral_decompose

logger = logging.getLogger(__name__)

PLOT_SCRIPT = '''"""Plot the snapshots listed in manifest.json"""

import json
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

here = Path(__file__).parent
manifest = json.loads((here / "manifest.json").read_text())
fig, axes = plt.subplots(len(manifest["labels"]), 1, sharex=True,
                         figsize=(8, 1.8 * len(manifest["labels"])), squeeze=False)
for t, name in zip(manifest["times"], manifest["files"]):
    frame = pd.read_csv(here / name)
    for ax, label in zip(axes[:, 0], manifest["labels"]):
        ax.plot(frame["x"], frame[label], label=f"t = {t:g}")
        ax.set_ylabel(label)
axes[-1, 0].set_xlabel("x")
axes[0, 0].legend(loc="upper right", fontsize="small")
fig.tight_layout()
fig.savefig(here / "snapshots.png", dpi=150)
'''


def banner(title):
    print("=" * 70)
    print(title)
    print("=" * 70)


def section(title):
    print(f"\n{title}")
    print("-" * 70)


def matrix_sha256(matrix):
    data = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    return hashlib.sha256(data.tobytes()).hexdigest()

# simulate

def snapshot_name(index, t):
    return f"snapshot_{index:03d}_t{t:.6g}.csv"


def write_snapshot(path, x, values, labels):
    """One CSV per time: x followed by the component columns"""
    frame = pd.DataFrame(np.real(values), columns=list(labels))
    frame.insert(0, "x", x)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    return frame


def render_plot(out_dir, manifest):
    """Draw every snapshot with matplotlib (non-interactive backend)"""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = manifest.labels
    fig, axes = plt.subplots(len(labels), 1, sharex=True, figsize=(8, 1.8 * len(labels)),
                             squeeze=False)
    for t, name in zip(manifest.times, manifest.files):
        frame = pd.read_csv(out_dir / name)
        for ax, label in zip(axes[:, 0], labels):
            ax.plot(frame["x"], frame[label], label=f"t = {t:g}")
            ax.set_ylabel(label)
    axes[-1, 0].set_xlabel("x")
    axes[0, 0].legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(out_dir / "snapshots.png", dpi=150)
    plt.close(fig)


def simulate(path, out_dir, times=None, oracle_only=False, grid=None, plot=False):
    """
    Evaluate a scenario at the requested times and write CSV snapshots

    Parameters:
    -----------
    path : str or Path
        Scenario file
    out_dir : str or Path
        Output directory (created if missing)
    times : list of float, optional
        Source times (default: run.times of the scenario)
    oracle_only : bool
        Use the upwind scheme (unit speed) or the characteristics oracle
        instead of the closed form; needs no common reference time
    grid : int, optional
        Upwind cells per edge (default: run.oracle_grid)
    plot : bool
        Also render snapshots.png

    Returns:
    --------
    RunManifest
    """

    try:
        setup = prepare(path, require_reference=not oracle_only)
    except RationalDependenceViolated as e:
        raise RationalDependenceViolated(f"{e}; rerun with --oracle-only") from e

    run = setup.scenario.run
    times = list(run.times if times is None else times)
    if any(t < 0 for t in times):
        raise ValueError("times must be nonnegative")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ph = setup.ph

    banner(f"NETWAVE SIMULATE - {setup.name}")
    print(f"  Components: {ph.dimension} (m+ = {ph.m_plus}, m- = {ph.m_minus})")

    grid = grid or run.oracle_grid
    if not oracle_only:
        method = "explicit"
        x = setup.sample_positions()
        if setup.sub is None:
            semigroup = Semigroup(ph, setup.tolerances)
            solve = lambda t: semigroup.evaluate(setup.f0, t, x)
        else:
            solve = lambda t: similarity_solve(setup.sub, setup.f0, t, setup.tolerances)(x)
    elif ph.is_unit_speed():
        method = "upwind"
        x = (np.arange(grid) + 0.5) / grid
        solve = lambda t: upwind_solve(ph, setup.f0, t, grid, fractional_step=True,
                                       tolerances=setup.tolerances).values
    else:
        method = "characteristics"
        x = setup.sample_positions()
        solve = lambda t: characteristics_solve(ph, setup.f0, t, x, setup.tolerances)
    print(f"  Method: {method}")
    if setup.sub is not None:
        print(f"  Reference time c = {setup.sub.c:.12g}, multiples {list(setup.table.multiples)}")

    section("📈 SNAPSHOTS")
    files = []
    for index, t in enumerate(times):
        name = snapshot_name(index, t)
        write_snapshot(out_dir / name, x, solve(t), ph.labels)
        files.append(name)
        print(f"  ✓ t = {t:<12g} → {name}")

    table = setup.table if setup.sub is not None else None
    boundary = setup.sub.system.B if setup.sub is not None else ph.B
    manifest = RunManifest(
        scenario=setup.name,
        method=method,
        times=times,
        files=files,
        samples=len(x),
        labels=list(ph.labels),
        c=table.c if table is not None else (1.0 if ph.is_unit_speed() else None),
        multiples=[int(l) for l in table.multiples] if table is not None else None,
        total_length=int(table.total_length) if table is not None else None,
        boundary_sha256=matrix_sha256(boundary),
        grid=grid if method == "upwind" else None,
    )
    (out_dir / "manifest.json").write_text(manifest.model_dump_json(indent=2) + "\n",
                                           encoding="utf-8")
    (out_dir / "plot_snapshots.py").write_text(PLOT_SCRIPT, encoding="utf-8")
    if plot:
        render_plot(out_dir, manifest)
        print("  ✓ snapshots.png")
    print(f"\n✓ Wrote {len(files)} snapshot(s) to {out_dir}")
    return manifest

# analyze

def analysis_report(setup, sd, report):
    """Collect the pieces of an analysis into the report schema"""

    kinds = {}
    for name, indices in zip(("peripheral", "stable", "unstable"),
                             (report.peripheral, report.stable, report.unstable)):
        for i in indices:
            kinds[i] = name
    eigenvalues = []
    for i, lam in enumerate(sd.eigenvalues):
        eigenvalues.append(EigenvalueReport(
            real=float(lam.real),
            imag=float(lam.imag),
            modulus=float(abs(lam)),
            multiplicity=int(sd.multiplicities[i]),
            semisimple=sd.is_semisimple(i),
            kind=kinds[i],
            projector_norm=report.projector_norms[i],
            rank_one_estimate=rank_one_estimate(sd, i),
        ))

    bound = None
    if report.bound is not None:
        b = report.bound
        bound = BoundReport(lambda_bar=b.lambda_bar, decay_rate=b.decay_rate, M=b.M,
                            projector_sum=b.projector_sum, envelope=b.envelope, p=b.p)

    rescaled = None
    if setup.sub is not None:
        c = float(setup.sub.c)
        rescaled = RescaledReport(
            c=c,
            multiples=[int(l) for l in setup.table.multiples],
            total_length=setup.table.total_length,
            decay_rate=c * bound.decay_rate if bound is not None else None,
            period=report.period / c if report.period is not None else None,
        )

    return AnalysisReport(
        scenario=setup.name,
        dimension=sd.dimension,
        m_plus=sd.m_plus,
        classification=report.classification,
        period=report.period,
        spectral_radius=report.spectral_radius,
        growth=report.growth,
        eigenvalues=eigenvalues,
        bound=bound,
        rescaled=rescaled,
        diagnostics=setup.diagnostics().as_dict(),
    )


def format_eigenvalue(e):
    if abs(e.imag) <= 1e-12:
        return f"{e.real:.10g}"
    return f"{e.real:.10g}{e.imag:+.10g}i"


def summary_line(result):
    """One-line verdict, e.g. 'periodic_limit, d=2; stable eigenvalues {0.5, -0.5}'"""
    parts = [result.classification]
    if result.period is not None:
        parts[0] += f", d={result.period}"
    stable = [format_eigenvalue(e) for e in result.eigenvalues if e.kind == "stable"]
    if result.classification == "uniformly_stable" and result.bound is not None:
        parts.append(f"rate {result.bound.decay_rate:.4f}, M ≈ {result.bound.M:.4g}")
    elif stable:
        parts.append("stable eigenvalues {" + ", ".join(stable) + "}")
    return "; ".join(parts)


def print_analysis(result):
    banner(f"NETWAVE ANALYZE - {result.scenario}")

    section("🔍 DIAGNOSTICS")
    d = result.diagnostics
    print(f"  Dimension: {d['dimension']} (m+ = {d['m_plus']}, m- = {d['m_minus']})")
    print(f"  Xi_out condition number: {d['xi_out_condition']:.4g}")
    print(f"  Xi consistency residual: {d['xi_consistency']:.2e}")
    print(f"  Minimum velocity: {d['min_velocity']:.6g}")
    print(f"  Unit speed: {'yes' if d['unit_speed'] else 'no'}")
    print(f"  Column stochastic: {'yes' if d['column_stochastic'] else 'no'}")
    print(f"  Row stochastic: {'yes' if d['row_stochastic'] else 'no'}")

    section("📊 SPECTRUM")
    print(f"  {'eigenvalue':>28s}  {'|λ|':>10s}  mult  kind        ‖Π‖")
    for e in result.eigenvalues:
        flag = "" if e.semisimple else "  (defective)"
        print(f"  {format_eigenvalue(e):>28s}  {e.modulus:10.6f}  {e.multiplicity:4d}  "
              f"{e.kind:10s}  {e.projector_norm:.6g}{flag}")
    print(f"  Spectral radius: {result.spectral_radius:.10g}")

    section("⏱  ASYMPTOTICS")
    print(f"  Classification: {result.classification}")
    if result.period is not None:
        print(f"  Period d: {result.period}")
    if result.growth:
        print("  ⚠ Defective peripheral eigenvalue: polynomial growth")
    if result.bound is not None:
        b = result.bound
        print(f"  λ̄ = {b.lambda_bar:.10g}, decay rate log λ̄ = {b.decay_rate:.6f}")
        print(f"  M = λ̄ Σ C_j = {b.M:.6g}, Σ C_j = {b.projector_sum:.6g}, "
              f"envelope Σ C_j / λ̄ = {b.envelope:.6g}  (p = {b.p:g})")
    if result.rescaled is not None:
        r = result.rescaled
        print(f"  Source time: c = {r.c:.12g}, multiples {r.multiples} (l = {r.total_length})")
        if r.decay_rate is not None:
            print(f"  Source decay rate c log λ̄ = {r.decay_rate:.6f}")
        if r.period is not None:
            print(f"  Source period d / c = {r.period:.10g}")
    print(f"\n✓ {summary_line(result)}")


def analyze(path, json_path=None, quiet=False):
    """
    Spectral analysis of the unit-speed boundary matrix of a scenario

    Parameters:
    -----------
    path : str or Path
        Scenario file
    json_path : str or Path, optional
        Where to write the machine-readable report
    quiet : bool
        Skip the console report

    Returns:
    --------
    AnalysisReport
    """

    setup = prepare(path, require_reference=True)
    run = setup.scenario.run
    unit = setup.unit_system
    sd = spectral_decompose(unit.B, unit.m_plus, setup.tolerances)
    report = classify(sd, p=run.p, lambda_bar=run.lambda_bar, tolerances=setup.tolerances)
    result = analysis_report(setup, sd, report)
    if not quiet:
        print_analysis(result)
    if json_path is not None:
        json_path = Path(json_path)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")
        if not quiet:
            print(f"✓ Report written to {json_path}")
    return result

# verify

VERIFY_SAMPLES = (np.arange(257) + 0.37) / 257


def run_check(name, check):
    """Time one check; a raised domain error counts as a failure"""
    start = time.perf_counter()
    try:
        value, limit = check()
        passed = bool(value <= limit)
        detail = ""
    except (NetwaveError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        value, limit, passed = None, None, False
        detail = f"{type(e).__name__}: {e}"
    return CheckResult(name=name, passed=passed, seconds=time.perf_counter() - start,
                       value=value, limit=limit, detail=detail)


def explicit_checks(setup, rng):
    """Checks of the closed-form path: (name, callable) pairs"""

    ph, tol = setup.ph, setup.tolerances
    unit = setup.unit_system
    f = StateFunction.random(rng, ph.dimension, pieces=4, degree=2)
    g = f if setup.sub is None else rescale_state(ph, setup.table, f, tol)
    x = VERIFY_SAMPLES

    def semigroup_law():
        t, s = 1.37, 0.81
        deviation = semigroup_property_check(unit, g, t, s, x, tolerances=tol)
        size = float(np.max(np.abs(Semigroup(unit, tol).evaluate(g, t + s, x))))
        return deviation, tol.semigroup_law * max(1.0, size)

    def oracle_equivalence():
        if setup.sub is None:
            N = setup.scenario.run.oracle_grid
            t = int(rng.integers(N, 4 * N)) / N
            cells = f.cell_averages(N)
            upwind = upwind_solve(ph, cells, t, N, tolerances=tol)
            centers = upwind.cell_centers()
            exact = Semigroup(ph, tol).evaluate(StateFunction.piecewise_constant(cells), t, centers)
            metrics = compare(upwind.sampled(), SampledSolution(centers, exact))
            return metrics.max, 1e-10 * max(1.0, float(np.max(np.abs(exact))))
        worst = 0.0
        for t in (0.37, 1.9):
            explicit = similarity_solve(setup.sub, f, t, tol)(x)
            oracle = characteristics_solve(ph, f, t, x, tol)
            worst = max(worst, compare(explicit, oracle, p=1, x=x).lp)
        return worst, 1e-8

    def spectral_identities():
        sd = spectral_decompose(unit.B, unit.m_plus, tol)
        n = 7
        direct = np.linalg.matrix_power(unit.B, n)
        size = max(1.0, max(projector_norm(P, np.inf) for P in sd.projections))
        limit = 1e-8 * sd.scale ** n * size
        return float(np.max(np.abs(sd.power(n) - direct))), limit

    def resolvent_residual():
        norm = float(np.linalg.norm(unit.B, 2))
        lam = complex(1.0 + max(0.0, np.log(max(norm, 1e-300))), 0.5)
        result = resolvent_apply(unit, lam, g, tol)
        residual = result.generator_residual(g, x)
        boundary = float(np.max(np.abs(result.boundary_residual(unit.B))))
        size = max(1.0, float(np.max(np.abs(g(x)))))
        return max(float(np.mean(np.sum(np.abs(residual), axis=1))), boundary), 1e-8 * size

    checks = [
        ("semigroup law", semigroup_law),
        ("oracle equivalence", oracle_equivalence),
        ("spectral identities", spectral_identities),
        ("resolvent residual", resolvent_residual),
    ]
    if setup.sub is not None:
        def rescaling_round_trip():
            back = unrescale_state(ph, setup.table, g, tol)
            return compare(back(x), f(x), p=1, x=x).lp, 1e-8
        checks.insert(2, ("rescaling round trip", rescaling_round_trip))
    return checks


def oracle_checks(setup, rng):
    """Checks that need no common reference time"""

    ph, tol = setup.ph, setup.tolerances
    f = StateFunction.random(rng, ph.dimension, pieces=4, degree=2)
    x = VERIFY_SAMPLES

    def initial_datum():
        values = characteristics_solve(ph, f, 0.0, x, tol)
        return float(np.max(np.abs(values - f(x)))), 1e-10

    def boundary_relation():
        oracle = CharacteristicsOracle(ph, f, tol)
        t = 2.3 * float(np.max(oracle.totals))
        at0, at1 = oracle.value(t, 0.0), oracle.value(t, 1.0)
        mp = ph.m_plus
        outgoing = np.concatenate([at0[:mp], at1[mp:]])
        incoming = np.concatenate([at1[:mp], at0[mp:]])
        size = max(1.0, float(np.max(np.abs(outgoing))))
        return float(np.max(np.abs(outgoing - ph.B @ incoming))), 1e-12 * size

    return [
        ("oracle initial datum", initial_datum),
        ("oracle boundary relation", boundary_relation),
    ]


def verify(path, seed=None):
    """
    Run the seeded invariant suites on a scenario

    Parameters:
    -----------
    path : str or Path
        Scenario file
    seed : int, optional
        Random seed (default: run.seed of the scenario)

    Returns:
    --------
    VerifyReport
        Failed checks are listed in report.failed
    """

    setup = prepare(path)
    seed = setup.scenario.run.seed if seed is None else seed
    rng = np.random.default_rng(seed)

    banner(f"NETWAVE VERIFY - {setup.name} (seed {seed})")
    checks = []
    if setup.explicit:
        checks += explicit_checks(setup, rng)
    else:
        print(f"  ⚠ Explicit path skipped: {setup.reference_error}")
    checks += oracle_checks(setup, rng)

    section("🧪 CHECKS")
    results = []
    for name, check in checks:
        result = run_check(name, check)
        results.append(result)
        mark = "✓" if result.passed else "❌"
        timing = f"{result.seconds * 1000:9.1f} ms"
        if result.value is not None:
            print(f"  {mark} {name:26s} {timing}   {result.value:.2e} ≤ {result.limit:.2e}")
        else:
            print(f"  {mark} {name:26s} {timing}   {result.detail}")

    report = VerifyReport(scenario=setup.name, seed=seed, explicit=setup.explicit,
                          checks=results)
    failed = report.failed
    if failed:
        print(f"\n❌ {len(failed)} check(s) failed: {', '.join(c.name for c in failed)}")
    else:
        print(f"\n✓ All {len(results)} checks passed")
    return report
