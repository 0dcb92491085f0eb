"""Experiment runner: build objects from a manifest, sweep, emit tables and figures.

Every subcommand writes CSV tables (byte-deterministic for a fixed manifest
and seed), a structured text report with per-check pass/fail lines and stage
timings, matplotlib figures, and for ``dualform`` a binary grid file. Exit
codes: 0 all checks pass, 1 a check failed, 2 manifest validation error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .circle import (
    GapSchedule,
    MorseSmaleMap,
    RigidRotation,
    RotationNumber,
    denjoy_build,
    rotation_number_estimates_all,
)
from .currents import dual_form_raster, generalized_current, pair_current_form
from .forms import TestForm, TrigPolynomial
from .homology import build_calibrating_pou, stable_norm
from .immersion import CycleLibrary, realize
from .intersection import intersection_pairing, leafwise_pairing_limit, pairing_with_perturbation
from .manifest import ExperimentManifest, ManifestError, alpha_value
from .reporting import (
    RunReport,
    render_cluster_figure,
    render_convergence_figure,
    render_crossings_figure,
    render_denjoy_figure,
    render_gridform_figure,
    render_norm_figure,
    render_torus_loops_figure,
    write_csv,
)
from .schwartzman import (
    LinearFlowCurve,
    cluster_estimate,
    curve_from_trace,
    five_estimator_table,
    one_sided_horizons,
    pairwise_agreement,
    symmetric_horizons,
    two_ray_oscillator,
)


def build_base_map(eff: dict):
    spec = eff["base_map"]
    kind = spec["type"]
    if kind == "rotation":
        return RigidRotation(alpha_value(spec["alpha"]))
    if kind == "morse_smale":
        return MorseSmaleMap([(p, k) for p, k in spec["fixed_points"]])
    rho = RotationNumber.from_value(alpha_value(spec["alpha"]))
    gaps = GapSchedule.unit_total(int(spec.get("gap_n_max", 2000)))
    return denjoy_build(rho, gaps)


def build_library(eff: dict) -> CycleLibrary:
    spec = eff["cycle_library"]
    return CycleLibrary(
        classes=tuple(tuple(int(x) for x in c) for c in spec["classes"]),
        base_center=tuple(spec["base_center"]),
        base_radius=float(spec["base_radius"]),
        lane_spread=float(spec["lane_spread"]),
        mode=spec["mode"],
    )


def _leaf_basepoints(dmap, count: int, rng) -> list:
    ys = rng.random(count)
    return [float(dmap.new_from_base(y)) for y in ys]


# ---- subcommand handlers ------------------------------------------------


def cmd_realize(eff: dict, out: Path, report: RunReport, workers: int):
    dmap = build_base_map(eff)
    lib = build_library(eff)
    target = np.asarray(eff["target_class"], dtype=float)
    sol = realize(target, lib, dmap, ribbon_halfwidth=eff["ribbon_halfwidth"])
    report.stage("build")
    cur = generalized_current(sol).as_array()
    err = float(np.max(np.abs(cur - target)))
    tol = eff["tolerances"]["current"]
    report.check("generalized current reproduces target class", err <= tol,
                 f"max err {err:.3e} vs {tol:.1e}")
    rows = [(j, target[j], cur[j], abs(cur[j] - target[j])) for j in range(len(target))]
    write_csv(out / "realize_current.csv",
              ["component", "target", "current", "abs_error"], rows)
    report.stage("current")

    rng = np.random.default_rng(eff["seed"])
    n_random = int(eff["realize"]["random_classes"])
    if n_random > 0:
        worst = 0.0
        for _ in range(n_random):
            a = rng.uniform(0.1, 2.0, size=2) * rng.choice([-1.0, 1.0], size=2)
            c = generalized_current(realize(a, lib, dmap)).as_array()
            worst = max(worst, float(np.max(np.abs(c - a))))
        report.check(f"realization identity on {n_random} random classes",
                     worst <= tol, f"worst err {worst:.3e}")
        report.stage("random classes")
    n_forms = int(eff["realize"]["exactness_forms"])
    if n_forms > 0:
        worst = max(abs(pair_current_form(sol, TestForm((0.0, 0.0),
                                                        TrigPolynomial.random(2, rng))))
                    for _ in range(n_forms))
        report.check(f"exact forms annihilated ({n_forms} random potentials)",
                     worst <= eff["tolerances"]["exactness"],
                     f"worst |pairing| {worst:.3e}")
        report.stage("exactness")

    (out / "realize_manifest.json").write_text(sol.manifest_text() + "\n")
    render_torus_loops_figure(sol, out / "realize.png")
    report.stage("figures")
    return {"solenoid": sol}


def cmd_schwartzman(eff: dict, out: Path, report: RunReport, workers: int):
    dmap = build_base_map(eff)
    lib = build_library(eff)
    target = np.asarray(eff["target_class"], dtype=float)
    sol = realize(target, lib, dmap, ribbon_halfwidth=eff["ribbon_halfwidth"])
    tol = eff["tolerances"]["agreement"]
    hz = eff["horizons"]
    t_max = float(hz["t_max"])
    report.stage("build")

    flow = LinearFlowCurve([0.2, 0.7], eff["flow_velocity"])
    table_flow = five_estimator_table(
        flow, symmetric_horizons(hz["t_min"], t_max, hz["count"]),
        phi=build_calibrating_pou(2))
    agree_flow = pairwise_agreement(table_flow)
    report.check("five estimators agree on the linear flow",
                 agree_flow <= tol, f"max gap {agree_flow:.3e}")
    report.stage("flow sweep")

    n_trace = int(min(t_max, eff["sweep"]["returns"]))
    x0 = float(dmap.new_from_base(0.37))
    trace = sol.trace_leaf(x0, n_trace, mode="time")
    table_leaf = five_estimator_table(
        curve_from_trace(trace), one_sided_horizons(hz["t_min"], n_trace, hz["count"]),
        phi=build_calibrating_pou(2))
    agree_leaf = pairwise_agreement(table_leaf)
    report.check("five estimators agree on the traced leaf",
                 agree_leaf <= tol, f"max gap {agree_leaf:.3e}")
    report.stage("leaf estimators")

    rng = np.random.default_rng(eff["seed"])
    leaves = _leaf_basepoints(dmap, int(eff["sweep"]["leaves"]), rng)
    n_ret = int(eff["sweep"]["returns"])
    horizon = np.asarray([n_ret])

    def leaf_class(x):
        return sol.leaf_horizon_classes(x, horizon, mode="time")[0]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            classes = list(ex.map(leaf_class, leaves))
    else:
        classes = [leaf_class(x) for x in leaves]
    classes = np.stack(classes)
    worst = float(np.max(np.abs(classes - target)))
    ltol = eff["tolerances"]["leaf_class"]
    report.check(f"time-mode classes of {len(leaves)} leaves near target",
                 worst <= ltol, f"worst dev {worst:.3e} vs {ltol:.1e}")
    report.stage("leaf sweep")

    lbar = sol.mean_return_length(n_returns=n_ret)
    arc = np.stack([sol.leaf_horizon_classes(x, horizon, mode="arclength")[0]
                    for x in leaves])
    worst_arc = float(np.max(np.abs(arc - target / lbar)))
    report.check("arc-length classes near target / mean return length",
                 worst_arc <= ltol,
                 f"worst dev {worst_arc:.3e}, mean return length {lbar!r}")
    report.stage("arc-length sweep")

    rows = []
    for name, run in {**{f"flow/{k}": v for k, v in table_flow.items()},
                      **{f"leaf/{k}": v for k, v in table_leaf.items()}}.items():
        for e in run.estimates:
            for j, val in enumerate(e.value):
                rows.append((name, e.s, e.t, e.span, j, val))
    write_csv(out / "schwartzman_convergence.csv",
              ["estimator", "s", "t", "span", "component", "value"], rows)
    fig_rows = [(name, span, comp, val) for name, s, t, span, comp, val in rows]
    render_convergence_figure(fig_rows, out / "schwartzman.png")
    report.stage("figures")
    return {}


def _cluster_two_ray(eff, report, count, radius):
    curve = two_ray_oscillator()
    grid = np.geomspace(curve.t_max / 200.0, curve.t_max, count)
    est = cluster_estimate(curve, grid, radius=radius)
    dirs = est.direction_set(norm_floor=0.05)
    ang = eff["tolerances"]["cluster_angle"]
    ok1 = dirs.size and float(np.min([np.arccos(np.clip(d @ [1, 0], -1, 1)) for d in dirs])) <= ang
    ok2 = dirs.size and float(np.min([np.arccos(np.clip(d @ [0, 1], -1, 1)) for d in dirs])) <= ang
    report.check("oscillator cluster contains the e1 direction", bool(ok1))
    report.check("oscillator cluster contains the e2 direction", bool(ok2))
    return est


def _cluster_flow(eff, report, count, radius):
    curve = LinearFlowCurve([0.2, 0.7], eff["flow_velocity"])
    grid = np.geomspace(100.0, eff["horizons"]["t_max"], count)
    est = cluster_estimate(curve, grid, radius=radius)
    pts = est.full + est.positive + est.negative
    diam = 0.0
    if len(pts) > 1:
        arr = np.asarray(pts)
        diam = float(max(np.linalg.norm(p - q) for p in arr for q in arr))
    report.check("flow cluster is a singleton",
                 len(est.full) == 1 and diam <= 0.02,
                 f"{len(est.full)} representatives, diameter {diam:.4f}")
    return est


def cmd_cluster(eff: dict, out: Path, report: RunReport, workers: int):
    fixture = eff["cluster"]["fixture"]
    count = int(eff["cluster"]["horizon_count"])
    radius = float(eff["cluster"]["radius"])
    if fixture == "two_ray":
        est = _cluster_two_ray(eff, report, count, radius)
    elif fixture == "flow":
        est = _cluster_flow(eff, report, count, radius)
    elif fixture == "both":
        _cluster_flow(eff, report, count, radius)
        est = _cluster_two_ray(eff, report, count, radius)
    else:
        raise ManifestError([f"cluster.fixture {fixture!r} not one of two_ray|flow|both"])
    report.stage("cluster")
    rows = []
    for name, pts in (("full", est.full), ("positive", est.positive),
                      ("negative", est.negative), ("balanced", est.balanced)):
        for p in pts:
            rows.append((name, p[0], p[1]))
    write_csv(out / "cluster_points.csv", ["set", "component_1", "component_2"], rows)
    render_cluster_figure(est, out / "cluster.png")
    report.stage("figures")
    return {}


def cmd_intersect(eff: dict, out: Path, report: RunReport, workers: int):
    dmap = build_base_map(eff)
    lib = build_library(eff)
    a = np.asarray(eff["target_class"], dtype=float)
    b = np.asarray(eff["intersect"]["second_class"], dtype=float)
    s1 = realize(a, lib, dmap, ribbon_halfwidth=eff["ribbon_halfwidth"])
    s2 = realize(b, lib, dmap, ribbon_halfwidth=eff["ribbon_halfwidth"]).translate(
        eff["intersect"]["shift"])
    report.stage("build")
    rng = np.random.default_rng(eff["seed"])
    rep = pairing_with_perturbation(s1, s2, rng)
    cup = float(a[0] * b[1] - a[1] * b[0])
    tol = eff["tolerances"]["pairing"]
    report.check("pairing equals the cup product a1 b2 - a2 b1",
                 abs(rep.total - cup) <= tol,
                 f"pairing {rep.total!r} vs cup {cup!r}")
    rep_back = intersection_pairing(s2, s1)
    report.check("antisymmetry is exact", rep_back.total == -rep.total)
    report.note(f"transversality status: {rep.status}")
    self_total = abs(intersection_pairing(
        s1, s1.translate(eff["intersect"]["shift"])).total)
    report.check("self-pairing of a translated copy vanishes",
                 self_total <= tol, f"|total| {self_total:.3e}")
    n_pairs = int(eff["intersect"]["random_pairs"])
    if n_pairs > 0:
        worst = 0.0
        for _ in range(n_pairs):
            u = rng.uniform(0.1, 1.5, size=2) * rng.choice([-1.0, 1.0], size=2)
            v = rng.uniform(0.1, 1.5, size=2) * rng.choice([-1.0, 1.0], size=2)
            r = intersection_pairing(
                realize(u, lib, dmap),
                realize(v, lib, dmap).translate(eff["intersect"]["shift"]))
            worst = max(worst, abs(r.total - (u[0] * v[1] - u[1] * v[0])))
        report.check(f"cup product identity on {n_pairs} random pairs",
                     worst <= tol, f"worst dev {worst:.3e}")
    report.stage("pairing")

    n_leaf = int(eff["intersect"]["leafwise_returns"])
    if n_leaf > 0:
        x1 = float(dmap.new_from_base(0.123))
        x2 = float(dmap.new_from_base(0.457))
        horizons, vals = leafwise_pairing_limit(s1, s2, x1, x2, n_leaf)
        l1 = s1.mean_return_length(n_returns=4000)
        l2 = s2.mean_return_length(n_returns=4000)
        expect = cup / (s1.measure_scale * s2.measure_scale) / (l1 * l2)
        dev = abs(vals[-1] - expect)
        report.check("leafwise Birkhoff pairing approaches the normalized total",
                     dev <= 0.05 * max(1.0, abs(expect)),
                     f"final {vals[-1]!r} vs {expect!r}")
        write_csv(out / "intersect_leafwise.csv", ["returns", "value"],
                  list(zip(horizons, vals)))
        report.stage("leafwise audit")

    write_csv(out / "intersect_records.csv",
              ["branch_a", "branch_b", "x", "y", "sign", "measure_a", "measure_b",
               "contribution"],
              [tuple(r.values()) for r in rep.table_rows()])
    render_crossings_figure(rep, out / "intersect.png")
    report.stage("figures")
    return {}


def cmd_dualform(eff: dict, out: Path, report: RunReport, workers: int):
    dmap = build_base_map(eff)
    lib = build_library(eff)
    target = np.asarray(eff["target_class"], dtype=float)
    sol = realize(target, lib, dmap, ribbon_halfwidth=eff["ribbon_halfwidth"])
    cur = generalized_current(sol).as_array()
    n_grid = int(eff["raster"]["n_grid"])
    eps = float(eff["raster"]["tube_radius"])
    report.stage("build")
    grid = dual_form_raster(sol, eps=eps, n_grid=n_grid)
    p = np.asarray(grid.pair_dx())
    tol = eff["tolerances"]["raster"]
    report.check("raster pairings reproduce the current components",
                 float(np.max(np.abs(p - cur))) <= tol,
                 f"pairings {tuple(p)} vs current {tuple(cur)}")
    grid_half = dual_form_raster(sol, eps=eps / 2.0, n_grid=n_grid, min_resolution=4.0)
    p_half = np.asarray(grid_half.pair_dx())
    report.check("pairings stable under tube radius halving",
                 float(np.max(np.abs(p - p_half))) <= tol,
                 f"moved by {float(np.max(np.abs(p - p_half))):.3e}")
    report.stage("raster")
    grid.save(out / "dualform.grid")
    write_csv(out / "dualform_pairings.csv",
              ["component", "current", "raster_pairing", "raster_pairing_half_eps"],
              [(j, cur[j], p[j], p_half[j]) for j in range(2)])
    render_gridform_figure(grid, out / "dualform.png")
    report.stage("figures")
    return {}


def cmd_norm(eff: dict, out: Path, report: RunReport, workers: int):
    classes = [np.asarray(c, dtype=float) for c in eff["norm"]["classes"]]
    n_max = int(eff["norm"]["n_max"])
    rows = []
    series = {}
    for c in classes:
        est, seq = stable_norm(c, n_max)
        label = "(" + ",".join(fmt_num(x) for x in c) + ")"
        series[label] = seq
        for n, v in enumerate(seq, start=1):
            rows.append((label, n, v))
        est2, _ = stable_norm(2.0 * c, n_max)
        report.check(f"homogeneity ||2 a|| = 2 ||a|| for a={label}",
                     abs(est2 - 2.0 * est) <= 1e-12)
    if any(np.allclose(c, [3.0, 4.0]) for c in classes):
        est34, _ = stable_norm([3.0, 4.0], n_max)
        report.check("||(3,4)|| = 5 on the flat 2-torus", abs(est34 - 5.0) <= 1e-12)
    rng = np.random.default_rng(eff["seed"])
    ok = True
    for _ in range(100):
        u = rng.integers(-6, 7, size=2).astype(float)
        v = rng.integers(-6, 7, size=2).astype(float)
        nu, _ = stable_norm(u, 10)
        nv, _ = stable_norm(v, 10)
        nuv, _ = stable_norm(u + v, 10)
        ok = ok and (nuv <= nu + nv + 1e-9)
    report.check("subadditivity on 100 random integer pairs", ok)
    report.stage("sequences")
    write_csv(out / "norm_sequence.csv", ["class", "n", "l(n a)/n"], rows)
    render_norm_figure(series, out / "norm.png")
    report.stage("figures")
    return {}


def cmd_denjoy(eff: dict, out: Path, report: RunReport, workers: int):
    dmap = build_base_map(eff)
    if not hasattr(dmap, "new_from_base"):
        raise ManifestError(["denjoy subcommand requires base_map.type = denjoy"])
    report.stage("build")
    n_rot = int(eff.get("denjoy", {}).get("rotation_returns", 100000))
    z0 = float(dmap.new_from_base(0.3333))
    ests = rotation_number_estimates_all(dmap, z0, n_rot)
    ns = np.arange(1, n_rot + 1, dtype=float)
    bound_ok = bool(np.all(np.abs(ests - dmap.alpha) <= 1.0 / ns + 1e-14))
    report.check(f"rotation estimate within 1/N at every N <= {n_rot}", bound_ok)
    report.stage("rotation sweep")

    gaps_zero = all(
        dmap.invariant_arc_measure(*_gap_arc(dmap, n)) == 0.0
        for n in (-5, -1, 0, 1, 7))
    report.check("invariant measure of gaps is exactly zero", gaps_zero)

    weights = eff.get("denjoy", {}).get("partition_weights", [0.3, 0.7])
    from .circle import partition_by_weights
    part = partition_by_weights(dmap, weights)
    devs = [abs(dmap.invariant_arc_measure(a, s) - w)
            for (a, s), w in zip(part.arcs(), part.weights)]
    report.check("partition weights match the request to 1e-10",
                 max(devs) <= 1e-10, f"max dev {max(devs):.3e}")
    report.note(f"semiconjugacy tail bound: {dmap.tail_bound!r}")
    report.stage("measure audit")

    checkpoints = np.unique(np.geomspace(1, n_rot, 200).astype(int))
    rows = [(int(n), float(ests[n - 1]), float(abs(ests[n - 1] - dmap.alpha)))
            for n in checkpoints]
    write_csv(out / "denjoy_audit.csv",
              ["n", "rotation_estimate", "abs_error"], rows)
    wrows = [(i, w, float(dmap.invariant_arc_measure(a, s)))
             for i, ((a, s), w) in enumerate(zip(part.arcs(), part.weights))]
    write_csv(out / "denjoy_partition.csv",
              ["piece", "requested_weight", "measured_weight"], wrows)
    render_denjoy_figure(dmap, out / "denjoy.png")
    report.stage("figures")
    return {}


def _gap_arc(dmap, n: int):
    lo, hi = dmap.gap_interval(n)
    return lo, hi - lo


def fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


HANDLERS = {
    "realize": cmd_realize,
    "schwartzman": cmd_schwartzman,
    "cluster": cmd_cluster,
    "intersect": cmd_intersect,
    "dualform": cmd_dualform,
    "norm": cmd_norm,
    "denjoy": cmd_denjoy,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="solenoidlab",
        description="measured solenoids on flat tori: build, sweep, verify")
    parser.add_argument("subcommand", choices=sorted(HANDLERS))
    parser.add_argument("--manifest", required=True, help="path to the JSON manifest")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed-override", type=int, default=None)
    parser.add_argument("--tolerance-scale", type=float, default=1.0)
    args = parser.parse_args(argv)

    try:
        man = ExperimentManifest.load(args.manifest)
        eff = man.effective(args.subcommand, seed_override=args.seed_override,
                            tolerance_scale=args.tolerance_scale)
    except ManifestError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read manifest: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(args.subcommand, str(args.manifest), int(eff["seed"]))
    try:
        HANDLERS[args.subcommand](eff, out, report, max(1, args.workers))
    except ManifestError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    report.save(out / f"{args.subcommand}_report.txt")
    print(report.render(), end="")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
