"""Command-line front end.

Exit status: 0 on success, 1 when ``verify`` has failing checks, 2 when a
count scan was truncated by the node budget, 3 on configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Iterable, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .config import GLOBAL_DEFAULTS, Scenario, evaluate, load_scenario
from .convex import PressureSurface
from .counting import (
    count_scan,
    deviation_profile,
    fit_growth_rate,
    local_estimate,
    running_alpha,
)
from .errors import ConfigError, InsufficientData, ThermoCountError
from .manhattan import (
    bs_inequality_scan,
    correlation_number,
    point_at_slope,
    rigidity_gap,
    trace_curve,
)
from .potential import estimate_critical_exponent
from .saddle import (
    gaussian_problem,
    lipschitz_problem,
    pressure_problem,
    quadrature_oracle,
    quartic_problem,
    saddle_leading_term,
)
from .shift_core import Cylinder, pick_sample_word, str_to_word
from .thermo import bowen_root
from .verification import run_verify

COLUMN_DOCS = {
    "pressure": {
        "z1": "coefficient of f", "z2": "coefficient of g",
        "P": "pressure of z1 f + z2 g", "df": "int f dmu (dP/dz1)", "dg": "int g dmu (dP/dz2)",
        "var_f": "d2P/dz1^2", "cov": "d2P/dz1dz2", "var_g": "d2P/dz2^2",
    },
    "manhattan": {
        "s": "curve coordinate a (coefficient of f)", "q": "curve coordinate b = q(s)",
        "m": "slope int g dmu / int f dmu", "H": "correlation number a + m b",
        "t_m": "1 / int f dmu", "a": "a_m (= s)", "b": "b_m (= q)",
    },
    "count": {
        "t": "window threshold (length units)", "n": "word length",
        "M_n": "#{periodic words of length n in the window}",
        "M_t": "sum_n M_n / n", "alpha_hat_running": "growth-rate fit on t' <= t (1/length)",
        "nodes_visited": "enumeration nodes for this n (all t at once)",
    },
    "verify": {"check": "invariant name", "status": "pass / fail / skip",
               "measured": "measured deviation or count", "tolerance": "allowed deviation"},
    "saddle": {"n": "asymptotic parameter", "quadrature": "|midpoint-rule integral|",
               "leading": "|leading term|", "rel_error": "|quadrature - leading| / |leading|"},
    "truncation-study": {"N": "alphabet truncation", "delta_f": "Bowen root on the N-letter full shift",
                         "difference": "delta_f(N) - delta_f(previous N)"},
}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def emit_report(path: str, task: str, columns: Sequence[str], rows: Iterable, config: dict,
                summary: Optional[dict] = None) -> list:
    """Write a CSV whose header comment block holds the config and column definitions.

    With ``summary`` a sibling ``.json`` file receives the scalar results.
    Returns the list of written paths.
    """
    docs = COLUMN_DOCS.get(task, {})
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# thermocount {__version__} task={task}\n")
        fh.write("# resolved configuration:\n")
        for line in yaml.safe_dump(config, sort_keys=True).splitlines():
            fh.write(f"#   {line}\n")
        fh.write("# columns:\n")
        for c in columns:
            fh.write(f"#   {c}: {docs.get(c, docs.get(c.split('[')[0], ''))}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    written = [path]
    if summary is not None:
        jpath = os.path.splitext(path)[0] + ".json"
        with open(jpath, "w") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(jpath)
    return written


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _linspace(spec) -> np.ndarray:
    lo, hi, num = spec
    return np.linspace(evaluate(lo), evaluate(hi), int(num))


def _slope(value, curve) -> float:
    if isinstance(value, str) and value == "star":
        return curve.delta_f / curve.delta_g
    if isinstance(value, str) and value == "mid":
        lo, hi = curve.slope_range
        return 0.5 * (lo + hi)
    return evaluate(value)


def _need_pair(sc: Scenario):
    if sc.pair is None:
        raise ConfigError("this task needs potentials 'f' and 'g'")
    return sc.pair


# ---------------------------------------------------------------------------
# tasks


def task_pressure(sc, opts, args):
    pair = _need_pair(sc)
    S = PressureSurface(pair)
    rows = []
    for z1 in _linspace(opts["z1"]):
        for z2 in _linspace(opts["z2"]):
            z = (float(z1), float(z2))
            gr = S.grad(z)
            H = S.hess(z)
            rows.append((z[0], z[1], S.value(z), gr[0], gr[1], H[0, 0], H[0, 1], H[1, 1]))
    cols = ["z1", "z2", "P", "df", "dg", "var_f", "cov", "var_g"]
    emit_report(_out(args, "pressure.csv"), "pressure", cols, rows, sc.resolved())
    return 0


def task_manhattan(sc, opts, args):
    S = PressureSurface(_need_pair(sc))
    curve = trace_curve(S, int(opts["samples"]), float(opts.get("extend", 0.0)))
    m_star, gap = rigidity_gap(curve)
    rows = [(p.s, p.q, p.m, p.H, p.t_m, p.a, p.b) for p in curve.samples]
    summary = {"delta_f": curve.delta_f, "delta_g": curve.delta_g, "rigid": curve.rigid,
               "m_star": m_star, "gap": gap, "slope_range": list(curve.slope_range),
               "secant_deviation": curve.secant_deviation(), "warnings": curve.warnings}
    emit_report(_out(args, "curve.csv"), "manhattan", ["s", "q", "m", "H", "t_m", "a", "b"], rows,
                sc.resolved(), summary)
    print(f"delta_f={curve.delta_f!r} delta_g={curve.delta_g!r} rigid={str(curve.rigid).lower()} "
          f"m*={m_star!r} gap={gap!r}")
    return 0


def task_correlation(sc, opts, args):
    curve = trace_curve(PressureSurface(_need_pair(sc)), int(opts["samples"]))
    ms = opts["m"] if isinstance(opts["m"], list) else [opts["m"]]
    rows = []
    for raw in ms:
        m = _slope(raw, curve)
        H, a, b = correlation_number(curve, m)
        rows.append((m, H, a, b))
        print(f"m={m!r} H={H!r} a_m={a!r} b_m={b!r}")
    emit_report(_out(args, "correlation.csv"), "correlation", ["m", "H", "a", "b"], rows, sc.resolved())
    return 0


def task_bishop_steger(sc, opts, args):
    curve = trace_curve(PressureSurface(_need_pair(sc)), int(opts["samples"]))
    rep = bs_inequality_scan(curve, evaluate(opts["alpha"]), evaluate(opts["beta"]))
    summary = {k: getattr(rep, k) for k in ("alpha", "beta", "h_bs", "max_ratio", "refined_max",
                                            "argmax_m", "argmax_ab_ratio", "strict_margin", "degenerate")}
    rows = [(p.m, p.H / (rep.alpha + p.m * rep.beta)) for p in curve.samples]
    emit_report(_out(args, "bishop_steger.csv"), "bishop-steger", ["m", "ratio"], rows, sc.resolved(), summary)
    print(f"h_BS={rep.h_bs!r} max_ratio={rep.max_ratio!r} argmax a/b={float(rep.argmax_ab_ratio)!r}")
    return 0


def task_count(sc, opts, args):
    pair = _need_pair(sc)
    S = PressureSurface(pair)
    curve = trace_curve(S, int(opts["samples"]))
    m = _slope(opts["m"], curve)
    xi = evaluate(opts["xi"])
    t_min, t_max, t_step = (evaluate(opts[k]) for k in ("t_min", "t_max", "t_step"))
    t = np.round(t_min + t_step * np.arange(int(math.floor((t_max - t_min) / t_step + 1e-9)) + 1), 12)
    cyls = [Cylinder(str_to_word(str(c))) for c in opts.get("cylinders") or []]
    rep = count_scan(sc.shift, pair, m, xi, t, cyls, budget=int(args.budget), threads=args.threads)
    pw = float(opts.get("prefactor_power", 1.5))
    alpha_run = running_alpha(rep, pw)
    summary = {"m": m, "xi": xi, "truncated": rep.truncated, "t_complete": rep.t_complete,
               "nodes": rep.total_nodes}
    H, a, b = correlation_number(curve, m)
    pt = point_at_slope(curve, m)
    summary.update({"H": H, "a_m": a, "b_m": b, "t_m": pt.t_m,
                    "delta_f": curve.delta_f, "delta_g": curve.delta_g})
    for power in (0.0, pw):
        try:
            alpha, err = fit_growth_rate(rep, prefactor_power=power)
            summary[f"alpha_hat_c{power:g}"] = alpha
            summary[f"stderr_c{power:g}"] = err
        except InsufficientData as exc:
            summary[f"alpha_hat_c{power:g}"] = str(exc)
    dp = deviation_profile(rep, pt.t_m, 0.2)
    summary["far_fraction_eps0.2_last"] = float(dp.far_fraction[np.isfinite(dp.far_fraction)][-1]) \
        if np.isfinite(dp.far_fraction).any() else None
    for c in cyls:
        le = local_estimate(curve, m, c, pick_sample_word(sc.shift, c), xi)
        summary[f"local_estimate_constant[{c}]"] = le.constant
    cols = ["t", "n", "M_n"] + [f"W_n_p[{c}]" for c in cyls] + ["M_t", "alpha_hat_running", "nodes_visited"]
    idx = {float(tt): j for j, tt in enumerate(rep.t)}
    rows = []
    for tt, n, Mn, W, Mt in rep.rows():
        rows.append([tt, n, Mn] + [W.get(str(c), 0) for c in cyls] + [Mt, alpha_run[idx[tt]], rep.nodes.get(n, 0)])
    emit_report(_out(args, "report.csv"), "count", cols, rows, sc.resolved(), summary)
    print(f"alpha_hat={summary.get(f'alpha_hat_c{pw:g}')} H={H!r} truncated={rep.truncated}")
    return 2 if rep.truncated else 0


def task_verify(sc, opts, args):
    checks = run_verify(sc, int(opts["n_max"]), int(opts["samples"]), int(opts["random_words"]), int(args.seed))
    emit_report(_out(args, "verify.csv"), "verify", ["check", "status", "measured", "tolerance"],
                [c.row() for c in checks], sc.resolved())
    width = max(len(c.check) for c in checks)
    for c in checks:
        print(f"{c.check:<{width}}  {c.status.upper():4}  measured={c.measured:.3e}  tol={c.tolerance:.1e}")
    return 1 if any(c.status == "fail" for c in checks) else 0


def task_saddle(sc, opts, args):
    case = opts["case"]
    eps = evaluate(opts.get("epsilon", 1.0))
    rows = []
    for n in opts["n"]:
        n = float(n)
        if case == "gaussian":
            prob = gaussian_problem(n, eps)
        elif case == "quartic":
            prob = quartic_problem(n, evaluate(opts.get("c", 0.1)), eps)
        elif case == "lipschitz":
            prob = lipschitz_problem(n, eps)
        elif case == "pressure":
            pair = _need_pair(sc)
            S = PressureSurface(pair)
            prob = pressure_problem(S, S.grad((-0.5, -0.5)), n)
            lead = saddle_leading_term(prob)
            rows.append((n, math.nan, abs(lead), math.nan))
            continue
        else:
            raise ConfigError(f"unknown saddle case {case!r}")
        q = quadrature_oracle(prob, eps / (16 * math.sqrt(n)))
        lead = saddle_leading_term(prob)
        rows.append((n, abs(q), abs(lead), abs(q - lead) / abs(lead)))
    emit_report(_out(args, "saddle.csv"), "saddle", ["n", "quadrature", "leading", "rel_error"], rows,
                sc.resolved())
    for r in rows:
        print("n={:g} rel_error={!r}".format(r[0], r[3]))
    return 0


def task_truncation_study(sc, opts, args):
    fam = sc.family
    if fam is None:
        raise ConfigError("truncation-study needs a 'family' entry")
    rows, prev = [], None
    for N in opts["N"]:
        N = int(N)
        pot = fam.potential(N)
        d = bowen_root(pot.shift, pot)
        rows.append((N, d, math.nan if prev is None else d - prev))
        prev = d
    est = estimate_critical_exponent(fam, [int(N) for N in opts["N_grid"]])
    summary = {"d_hat": est.d_hat, "converges_for_all": est.converges_for_all,
               "monotone": all(r[2] >= 0 for r in rows[1:])}
    emit_report(_out(args, "truncation.csv"), "truncation-study", ["N", "delta_f", "difference"], rows,
                sc.resolved(), summary)
    for r in rows:
        print(f"N={r[0]} delta_f={r[1]!r}")
    print(f"d_hat={est.d_hat!r}")
    return 0


TASKS = {
    "pressure": task_pressure,
    "manhattan": task_manhattan,
    "correlation": task_correlation,
    "bishop-steger": task_bishop_steger,
    "count": task_count,
    "verify": task_verify,
    "saddle": task_saddle,
    "truncation-study": task_truncation_study,
}


def _out(args, default: str) -> str:
    name = args.out or default
    return name if os.path.isabs(name) else os.path.join(args.out_dir, name)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermocount", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="scenario file (YAML or JSON)")
    ap.add_argument("--scenario", default=None, help="built-in scenario name (default: standard)")
    ap.add_argument("--out-dir", default=".", help="directory for outputs")
    ap.add_argument("--threads", type=int, default=None, help="worker threads for enumeration")
    ap.add_argument("--budget", type=float, default=None, help="enumeration node budget")
    ap.add_argument("--seed", type=int, default=None, help="seed for randomised checks (never affects counts)")
    ap.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    sub = ap.add_subparsers(dest="task")
    for name in TASKS:
        sp = sub.add_parser(name)
        sp.add_argument("--out", default=None, help="output file name")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a task parameter (YAML value)")
        if name == "count":
            for flag in ("m", "xi", "t-min", "t-max", "t-step"):
                sp.add_argument(f"--{flag}")
            sp.add_argument("--cylinders", help="comma separated cylinder words, e.g. 0,01")
        if name in ("manhattan", "correlation", "bishop-steger", "count", "verify"):
            sp.add_argument("--samples", type=int)
        if name == "correlation":
            sp.add_argument("--m", action="append")
        if name == "bishop-steger":
            sp.add_argument("--alpha")
            sp.add_argument("--beta")
        if name == "saddle":
            sp.add_argument("--case", choices=["gaussian", "quartic", "lipschitz", "pressure"])
            sp.add_argument("--n", type=float, nargs="+")
        if name == "truncation-study":
            sp.add_argument("--N", type=int, nargs="+")
    return ap


def _task_options(sc: Scenario, args) -> dict:
    opts = sc.task(args.task)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        opts[k.replace("-", "_")] = yaml.safe_load(v)
    for key, val in vars(args).items():
        if key in ("task", "out", "set", "config", "scenario", "out_dir", "threads", "budget", "seed",
                   "print_config") or val is None:
            continue
        if key == "cylinders":
            val = [c for c in val.split(",") if c]
        elif isinstance(val, str):
            val = yaml.safe_load(val)
        opts[key] = val
    sc.raw.setdefault("tasks", {})[args.task] = opts
    return opts


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        sc = load_scenario(args.config, args.scenario)
        for key, default in GLOBAL_DEFAULTS.items():
            cli_val = getattr(args, key)
            if cli_val is None:
                cli_val = sc.raw.get(key, default)
            setattr(args, key, cli_val)
            sc.raw[key] = cli_val
        args.budget = int(args.budget)
        if args.print_config:
            if args.task:
                _task_options(sc, args)
            print(yaml.safe_dump(sc.resolved(), sort_keys=True), end="")
            return 0
        if not args.task:
            ap.print_help()
            return 0
        opts = _task_options(sc, args)
        return TASKS[args.task](sc, opts, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except ThermoCountError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
