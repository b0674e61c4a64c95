"""periodforge command line.

Exit codes: 0 when everything passed, 1 when a numerical check failed, 2 for
bad input (unreadable graph, invalid flags).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from itertools import combinations

import numpy as np

from . import __version__
from .box_reduce import cross_ratios, one_loop_box, phi_box, z_from_cross_ratios
from .conformal_anomaly import (
    compose_res2,
    cocycle_check,
    cross_ratio_defect,
    dilation_anomaly_4pt,
    g4_amplitude,
    group_law_defect,
    nested_amplitude,
    omega,
    propagator_covariance_check,
)
from .graph_core import (
    FeynGraph,
    GraphFormatError,
    canonical_form,
    complete,
    is_completed_primitive,
    nontrivial_four_edge_cuts,
    read_graph,
    superficial_degree,
    wheel,
)
from .period_mc import (
    GaugeChoice,
    IntegrationError,
    Strategy,
    box_integrand,
    choose_box_vertices,
    default_gauges,
    gauge_fix,
    gauge_independence_check,
    mc_estimate,
)
from .periods_db import METADATA, SymbolicPeriod, entry_for, table, weight_bound_ok, wheel_period
from . import renorm_dist as rd

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# -- output -------------------------------------------------------------------------


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and any(isinstance(x, (dict, list)) for x in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    pairs = list(_flatten(report))
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in pairs:
            w.writerow([k, json.dumps(v) if isinstance(v, (list, bool)) or v is None else v])
        return buf.getvalue().rstrip("\n")
    width = max((len(k) for k, _ in pairs), default=0)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in pairs)


def _header(seed, samples, code) -> dict:
    return {
        "version": __version__,
        "seed": seed,
        "samples": samples,
        "code": code.decode() if isinstance(code, bytes) else code,
    }


def _check(name, value, expected, tol, relative=True) -> dict:
    defect = abs(value - expected)
    if relative and expected != 0:
        defect /= abs(expected)
    return {
        "name": name,
        "value": value,
        "expected": expected,
        "defect": defect,
        "tol": tol,
        "pass": bool(defect <= tol),
    }


# -- classify / period / box ---------------------------------------------------------


def _load(path) -> FeynGraph:
    try:
        return read_graph(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except GraphFormatError as exc:
        raise InputError(f"{path}: {exc}") from None


def _completion(g: FeynGraph):
    try:
        return complete(g)
    except ValueError as exc:
        return exc


def classify(g: FeynGraph) -> dict:
    c = _completion(g)
    out = {
        "vertices": g.vertex_count,
        "edges": g.edge_count,
        "external_legs": g.total_legs,
        "loops": g.loops,
        "kappa": superficial_degree(g) if g.is_connected() else None,
        "graph_code": canonical_form(g).decode(),
    }
    if isinstance(c, Exception):
        out.update(completion_code=None, primitive=None, note=str(c))
        entry = entry_for(canonical_form(g))
    else:
        out["completion_code"] = canonical_form(c).decode()
        if c.vertex_count >= 5:
            out["primitive"] = is_completed_primitive(c)
            if not out["primitive"]:
                out["cut"] = [v + 1 for v in nontrivial_four_edge_cuts(c)[0]]
        else:
            out["primitive"] = None
            out["note"] = "primitivity needs at least five vertices in the completion"
        entry = entry_for(canonical_form(c)) or entry_for(canonical_form(g))
    out["period"] = str(entry.period) if entry else None
    out["period_numeric"] = entry.period.numeric() if entry else None
    return out


def pick_gauge(c) -> GaugeChoice:
    """Infinity at the completion vertex; 0 and e chosen to allow the most boxes."""
    inf = c.vertex_count - 1
    best = None
    for a, b in combinations([v for v in range(c.vertex_count) if v != inf], 2):
        g = GaugeChoice(inf, a, b)
        n = len(choose_box_vertices(c, g))
        if best is None or n > best[0]:
            best = (n, g)
    return best[1]


def period_report(g: FeynGraph, samples, seed, workers=1, gauges=1, box=True, force=False, peak=1.5, error="variance"):
    c = _completion(g)
    if isinstance(c, Exception):
        raise InputError(f"graph has no vacuum completion: {c}")
    if c.vertex_count < 4:
        raise InputError("period needs at least four vertices in the completion")
    code = canonical_form(c)
    primitive = is_completed_primitive(c) if c.vertex_count >= 5 else False
    if not primitive and not force:
        raise InputError("graph is not completed-primitive (use --force to integrate anyway)")
    strategy = Strategy(peak=peak, error=error)
    report = _header(seed, samples, code)
    report["primitive"] = primitive
    entry = entry_for(code)
    if gauges > 1:
        gs = [pick_gauge(c)] + [x for x in default_gauges(c, gauges) if x.v_inf != c.vertex_count - 1]
        rep = gauge_independence_check(c, gs[:gauges], samples, seed, strategy, workers, box)
        report["gauge_check"] = rep.to_json()
        est = rep.estimates[0]
        passed = rep.passed
    else:
        est = mc_estimate(gauge_fix(c, pick_gauge(c), box), samples, seed, strategy, workers)
        passed = True
    report["estimate"] = est.to_json()
    if entry:
        exact = entry.period.numeric()
        report["reference"] = {
            "period": str(entry.period),
            "value": exact,
            "relative_error": abs(est.value - exact) / exact,
            "z": abs(est.value - exact) / est.std_error if est.std_error > 0 else None,
        }
    report["pass"] = passed
    return report


def _point(text: str):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise InputError(f"bad point {text!r}") from None
    if len(vals) != 4:
        raise InputError(f"point {text!r} needs four coordinates")
    return np.array(vals)


STAR = FeynGraph(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


def box_report(points, samples, seed, workers=1):
    pts = [_point(p) if isinstance(p, str) else np.asarray(p, float) for p in points]
    if len(pts) != 4:
        raise InputError("box needs four points")
    try:
        u, v = cross_ratios(*pts)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    z = complex(z_from_cross_ratios(u, v))
    report = _header(seed, samples, canonical_form(STAR))
    report.update(u=float(u), v=float(v), z=[z.real, z.imag], phi=float(phi_box(u, v)))
    value = float(one_loop_box(*pts))
    report["box"] = value
    report["pass"] = True
    if samples:
        est = mc_estimate(box_integrand(pts), samples, seed, workers=workers)
        zscore = abs(est.value - value) / est.std_error
        report["mc"] = est.to_json()
        report["mc_z"] = zscore
        report["pass"] = bool(zscore <= 3.0)
    return report


# -- suites -------------------------------------------------------------------------


def _renorm_fixtures():
    n = 4
    gauss = rd.TestFunction.gaussian(n)
    shifted = rd.TestFunction(
        rd.Polynomial({(0, 0, 0, 0): 1.0, (1, 0, 0, 0): 0.5, (0, 1, 1, 0): -0.3}, n),
        (0.3, -0.2, 0.1, 0.4),
        1.3,
    )
    return gauss, shifted


def renorm_suite(lambda_grid=(0.5, 1.0, 2.0, 4.0), seed=1) -> dict:
    gauss, shifted = _renorm_fixtures()
    checks = []
    g4 = rd.power_amplitude(4, 2)
    checks.append(_check("res(1/x^4)", rd.numeric_res(g4), 2.0, 1e-10, relative=False))
    checks.append(
        _check("res(x1^2/x^6)", rd.numeric_res(rd.monomial_amplitude((2, 0, 0, 0), 3)), 0.5, 1e-10, relative=False)
    )
    checks.append(
        _check("surface independence l8 vs sphere", rd.numeric_res(g4, rd.lp_norm(8)), rd.numeric_res(g4), 1e-8)
    )
    suite = [
        ("1/x^4", g4, gauss, rd.EUCLIDEAN),
        ("1/x^4 shifted l8", g4, shifted, rd.lp_norm(8)),
        ("x1/x^6 shifted", rd.monomial_amplitude((1, 0, 0, 0), 3), shifted, rd.EUCLIDEAN),
        ("x1/x^6 weighted", rd.monomial_amplitude((1, 0, 0, 0), 3), shifted, rd.weighted_norm([1, 2, 1, 0.5])),
        ("1/x^6", rd.power_amplitude(4, 3), gauss, rd.EUCLIDEAN),
        ("1/x^6 shifted l8", rd.power_amplitude(4, 3), shifted, rd.lp_norm(8)),
    ]
    for name, G, phi, rho in suite:
        checks.append(
            _check(
                f"pole subtraction kappa={G.kappa:g} {name}",
                rd.pole_subtracted_limit(G, rho, phi),
                rd.eval_renormalized(G, rho, phi),
                1e-6,
            )
        )
    phi0 = float(shifted(np.zeros(4))[0])
    fit = rd.scaling_defect(g4, shifted, lambda_grid)
    checks.append(_check("scaling c1 = 2 phi(0)", fit[1], 2 * phi0, 1e-6))
    checks.append(_check("scaling c2 = 0", fit[2], 0.0, 1e-6, relative=False))
    checks.append(_check("scaling c0 = 0", fit[0], 0.0, 1e-6, relative=False))
    d = {lam: rd.dilation_defect(g4, rd.EUCLIDEAN, shifted, lam) for lam in (2.0, 3.0, 6.0)}
    checks.append(_check("defect additivity d(6) = d(2) + d(3)", d[6.0], d[2.0] + d[3.0], 1e-8, relative=False))
    g6 = rd.power_amplitude(4, 3)
    fit6 = rd.scaling_defect(g6, shifted, lambda_grid)
    checks.append(_check("scaling c1 (kappa=2) = <Res, phi>", fit6[1], rd.residue_distribution(g6).pair(shifted), 1e-5))
    x1x2 = rd.Polynomial.monomial((1, 1, 0, 0))
    ref = rd.eval_renormalized(g6.times(x1x2), rd.EUCLIDEAN, shifted)
    checks.append(
        _check("MC2 p=x1x2 on 1/x^6", ref + rd.check_multiplier_commutation(g6, x1x2, shifted), ref, 1e-6)
    )
    x1sq = rd.Polynomial.monomial((2, 0, 0, 0))
    ref = rd.eval_renormalized(g6.times(x1sq), rd.EUCLIDEAN, shifted)
    checks.append(
        _check("MC2 p=x1^2 on 1/x^6", ref + rd.check_multiplier_commutation(g6, x1sq, shifted), ref, 1e-6)
    )
    r2 = rd.euler_residue([rd.LogTerm(g4, 1)], 2)
    checks.append(_check("R_2[(1/x^4) log rho]", r2.scalar, 2.0, 1e-10, relative=False))
    return {
        # no sampling here; the seed is recorded for uniformity
        **_header(seed, None, canonical_form(complete(FeynGraph(2, [(0, 1), (0, 1)])))),
        "G": "1/x^4 on R^4",
        "kappa": 0,
        "res": checks[0]["value"],
        "lambda_grid": list(lambda_grid),
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }


def anomaly_suite(seed=1, count=10_000) -> dict:
    rng = np.random.default_rng(seed)

    def draw(k):
        return rng.normal(size=(k, 4))

    def nonsingular(c, x, floor=0.05):
        return np.abs(omega(c, x)) > floor

    c1, c2, x, y = 0.4 * draw(4 * count), 0.4 * draw(4 * count), draw(4 * count), draw(4 * count)
    keep = nonsingular(c1, x) & nonsingular(c1 + c2, x) & nonsingular(c1, y)
    idx = np.flatnonzero(keep)[:count]
    c1, c2, x, y = c1[idx], c2[idx], x[idx], y[idx]
    gx = (x + c1 * np.sum(x * x, axis=1, keepdims=True)) / omega(c1, x)[:, None]
    ok = nonsingular(c2, gx)
    c1, c2, x, y = c1[ok], c2[ok], x[ok], y[ok]

    checks = [
        _check("group law g_c2 g_c1 = g_(c1+c2)", float(group_law_defect(c1, c2, x).max()), 0.0, 1e-10, False),
        _check("omega cocycle", float(cocycle_check(c1, c2, x).max()), 0.0, 1e-12, False),
        _check("omega(c,x) omega(-c, g_c x) = 1", float(cocycle_check(c1, -c1, x).max()), 0.0, 1e-12, False),
        _check("propagator covariance", float(propagator_covariance_check(c1, x, y).max()), 0.0, 1e-12, False),
    ]
    pts = [draw(len(c1)) for _ in range(4)]
    checks.append(_check("cross-ratio invariance", float(cross_ratio_defect(0.3 * c1, pts).max()), 0.0, 1e-10, False))

    config = [draw(1)[0] for _ in range(4)]
    for lam in (0.5, 2.0, 3.7):
        lhs, _ = dilation_anomaly_4pt(g4_amplitude, config, lam)
        checks.append(_check(f"G4 homogeneity lambda={lam}", lhs / float(g4_amplitude(*config)), 0.0, 1e-10, False))
    lhs, rhs = dilation_anomaly_4pt(g4_amplitude, config, 1.0)
    checks.append(_check("lambda=1 defect", abs(lhs) + abs(rhs), 0.0, 0.0, False))
    res_s = wheel_period(3)
    for lam in (0.5, 2.0):
        lhs, rhs = dilation_anomaly_4pt(nested_amplitude(res_s.numeric()), config, lam, res_s.numeric())
        checks.append(_check(f"order-one dilation law lambda={lam}", lhs, rhs, 1e-9))
    product = compose_res2(wheel_period(4), res_s)
    target = SymbolicPeriod.zeta(3, 5, coeff=120)
    checks.append(
        {
            "name": "res2 = res(G4) res(S)",
            "value": str(product),
            "expected": str(target),
            "pass": product == target,
        }
    )
    return {
        **_header(seed, count, canonical_form(complete(wheel(4)))),
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }


def db_report():
    rows = []
    for e in table():
        row = e.to_json()
        row["weight_ok"] = weight_bound_ok(e)
        rows.append(row)
    return rows


# -- argument handling -------------------------------------------------------------


def _seed_default():
    raw = os.environ.get("PERIODFORGE_SEED")
    if raw is None:
        return 1
    try:
        return int(raw, 0)
    except ValueError:
        raise InputError(f"PERIODFORGE_SEED={raw!r} is not an integer") from None


def _positive_grid(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda grid {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("lambda values must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="periodforge", description="Feynman periods and renormalization checks.")
    p.add_argument("--version", action="version", version=f"periodforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="completion, primitivity and known period of a graph")
    s.add_argument("path")

    s = sub.add_parser("period", parents=[common], help="Monte Carlo period of a completed-primitive graph")
    s.add_argument("path")
    s.add_argument("--samples", type=int, default=1_000_000)
    s.add_argument("--gauges", type=int, default=1)
    s.add_argument("--force", action="store_true")
    s.add_argument("--no-box-reduction", action="store_true")
    s.add_argument("--peak", type=float, default=1.5, help="anchor peak exponent p in (0, 2)")
    s.add_argument("--error", choices=("variance", "median-of-means"), default="variance")

    s = sub.add_parser("box", parents=[common], help="closed-form one-loop box at four points")
    s.add_argument("points", nargs=4, metavar="x1,x2,x3,x4")
    s.add_argument("--samples", type=int, default=0, help="also run the Monte Carlo oracle")

    s = sub.add_parser("renorm-suite", parents=[common], help="renormalization identities")
    s.add_argument("--lambda-grid", type=_positive_grid, default=[0.5, 1.0, 2.0, 4.0])

    s = sub.add_parser("anomaly-suite", parents=[common], help="conformal and dilation anomaly identities")
    s.add_argument("--samples", type=int, default=10_000)

    sub.add_parser("db", parents=[common], help="dump the period table")
    return p


def run(argv=None) -> tuple[int, str]:
    args = build_parser().parse_args(argv)
    seed = args.seed if args.seed is not None else _seed_default()
    if not 0 <= seed < 2**64:
        raise InputError("seed must be a 64-bit unsigned integer")
    if args.workers < 1:
        raise InputError("--workers must be at least 1")
    cmd = args.command
    if cmd == "classify":
        g = _load(args.path)
        report = {**_header(seed, None, canonical_form(g)), **classify(g)}
        return EXIT_OK, render(report, args.format)
    if cmd == "period":
        if args.samples < 10_000:
            raise InputError("--samples must be at least 10000")
        if args.gauges < 1:
            raise InputError("--gauges must be at least 1")
        if not 0 < args.peak < 2:
            raise InputError("--peak must lie in (0, 2)")
        g = _load(args.path)
        report = period_report(
            g, args.samples, seed, args.workers, args.gauges, not args.no_box_reduction, args.force, args.peak, args.error
        )
        return (EXIT_OK if report["pass"] else EXIT_FAIL), render(report, args.format)
    if cmd == "box":
        if args.samples and args.samples < 10_000:
            raise InputError("--samples must be 0 or at least 10000")
        report = box_report(args.points, args.samples, seed, args.workers)
        return (EXIT_OK if report["pass"] else EXIT_FAIL), render(report, args.format)
    if cmd == "renorm-suite":
        if len(set(args.lambda_grid)) < 4:
            raise InputError("--lambda-grid needs at least four distinct values")
        report = renorm_suite(tuple(args.lambda_grid), seed)
        return (EXIT_OK if report["pass"] else EXIT_FAIL), render(report, args.format)
    if cmd == "anomaly-suite":
        report = anomaly_suite(seed, args.samples)
        return (EXIT_OK if report["pass"] else EXIT_FAIL), render(report, args.format)
    if cmd == "db":
        rows = db_report()
        ok = all(r["weight_ok"] for r in rows)
        if args.format == "csv":
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            return (EXIT_OK if ok else EXIT_FAIL), buf.getvalue().rstrip("\n")
        report = {**_header(seed, None, None), "entries": rows, "metadata": METADATA}
        return (EXIT_OK if ok else EXIT_FAIL), render(report, args.format)
    raise InputError(f"unknown command {cmd}")  # pragma: no cover


def main(argv=None) -> int:
    try:
        code, text = run(argv)
    except InputError as exc:
        print(f"periodforge: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IntegrationError as exc:
        print(f"periodforge: integration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except SystemExit as exc:  # argparse
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
