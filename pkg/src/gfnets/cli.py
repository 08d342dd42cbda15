"""Batch command-line front end.

Every subcommand reads a TOML/JSON config, runs one pipeline and writes a
JSON report that embeds the resolved config.  Exit status: 0 when the
report's verdict passes, 1 when it fails, 2 on usage or config errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from . import config as C
from .errors import ExpressionSyntaxError, GFNetsError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _grid(cfg, domain):
    from .nets import default_grid

    g = cfg.get("grid")
    if g is None:
        return default_grid(domain)
    return np.linspace(float(g["a"]), float(g["b"]), int(g.get("points", 4001)))


def _series(classification):
    eps = classification.schedule.values
    return {
        "log_eps": np.log(eps).tolist(),
        "log_seminorm": np.log(np.maximum(classification.seminorms, 1e-300)).T.tolist(),
    }


# ---------------------------------------------------------------------------
# pipelines: each returns (passed, result dict, series dict or None, classification or None)


def run_classify(cfg):
    from .nets import Net, classify, null_characterization

    dom = cfg.get("domain", "R")
    net = Net.from_expression(cfg["net"], dom)
    sched, th = C.schedule(cfg), C.thresholds(cfg)
    grid = _grid(cfg, dom)
    cls = classify(net, cfg["kmax"], sched, grid, th)
    result = {"classification": cls.to_dict()}
    if cfg.get("null_check"):
        result["null_characterization"] = null_characterization(net, cfg["kmax"], sched, grid, th).to_dict()
    expect = cfg.get("expect")
    passed = cls.verdict == expect if expect else cls.verdict != "Neither"
    return passed, result, _series(cls), cls


def run_seeley(cfg):
    from .jetcalc import parse
    from .seeley import build_sequence, extension_bound_check, smoothness_gap

    seq = build_sequence(int(cfg["L"]), cfg.get("method", "auto"), int(cfg.get("digits", 50)))
    result = {"sequence": seq.to_dict(cfg["kmax"])}
    passed = True
    if "u" in cfg:
        u = parse(cfg["u"], params=())
        n_max = min(cfg["kmax"], seq.L - 1)
        gaps = smoothness_gap(u, seq, n_max)
        checks = [extension_bound_check(u, seq, k) for k in range(cfg["kmax"] + 1)]
        tol = float(cfg.get("tolerance", 1e-6))
        result["gaps"] = gaps
        result["bound_checks"] = [
            {"k": k, "holds": c.holds, "lhs": c.lhs, "rhs": c.rhs, "C_k": c.C_k} for k, c in enumerate(checks)
        ]
        passed = all(g < tol for g in gaps) and all(checks)
    return passed, result, None, None


def run_embed(cfg):
    from .embedding import DistributionRep, build_mollifier, consistency_residual, embed
    from .nets import classify

    mol = build_mollifier(int(cfg.get("K", 8)), float(cfg.get("plateau_tol", 1e-10)))
    sched, th = C.schedule(cfg), C.thresholds(cfg)
    rep = DistributionRep.from_config(cfg["f"])
    result = {"mollifier": mol.header()}
    if rep.order == 0 and len(rep.terms) == 1:
        f = rep.terms[0][1]
        res = consistency_residual(f, mol, sched, cfg.get("domain", "R"))
        cls = classify(res, cfg["kmax"], sched, _grid(cfg, res.domain), th)
        result["consistency_residual"] = cls.to_dict()
        result["taylor_order"] = res.meta.get("taylor_order")
        passed = cls.is_negligible
    else:
        net = embed(rep, mol, cfg.get("domain", "R"))
        cls = classify(net, cfg["kmax"], sched, _grid(cfg, net.domain), th)
        result["embedding"] = cls.to_dict()
        passed = cls.is_moderate
    return passed, result, _series(cls), cls


def run_decompose(cfg):
    from .aaa import AAASpec, decompose_net, decompose_uniqueness_test
    from .errors import UniquenessViolation

    spec = AAASpec(cfg["principal"], cfg["corrective"])
    kw = {}
    if "tolerance" in cfg:
        kw["probe_tol"] = float(cfg["tolerance"])
    d = decompose_net(spec, C.schedule(cfg), cfg["kmax"], thresholds=C.thresholds(cfg), **kw)
    result = {"decomposition": d.diagnostics}
    passed = d.diagnostics["passed"]
    if "alternative" in cfg:
        alt = AAASpec(cfg["alternative"]["principal"], cfg["alternative"]["corrective"])
        vals = C.schedule(cfg).values
        result["uniqueness"] = {}
        for eps in sorted({float(vals[0]), float(vals[-1])}):
            try:
                u = decompose_uniqueness_test(spec, alt, eps=eps)
                result["uniqueness"][repr(eps)] = u.to_dict()
                passed = passed and max(u.principal_diff, u.corrective_diff) < 1e-6
            except UniquenessViolation as exc:
                result["uniqueness"][repr(eps)] = {"violation": str(exc)}
                passed = False
    return passed, result, None, None


def run_compose(cfg):
    from .aaa import AAASpec, compose

    spec = AAASpec(cfg["principal"], cfg["corrective"])
    comp = compose(cfg["F"], spec, C.schedule(cfg), cfg["kmax"], thresholds=C.thresholds(cfg))
    return comp.diagnostics["passed"], {"composition": comp.diagnostics}, None, None


def _specs(items):
    from .aaa import AAASpec

    if isinstance(items, dict):
        items = [items]
    return [AAASpec(it["principal"], it.get("corrective", "0")) for it in items]


def run_solve(cfg):
    from .ndds import split_solve

    sol = split_solve(cfg["A"], _specs(cfg["forcing"]), C.schedule(cfg), cfg["kmax"], C.thresholds(cfg))
    d = sol.diagnostics
    tol = float(cfg.get("tolerance", 1e-6))
    subst_ok = all(v["v_residual"] < tol and v["w_residual"] < tol and v["w_vanishing"]
                   for v in d["per_eps"].values())
    return sol.report.verdict and subst_ok, {"solve": d}, None, None


def run_verify(cfg):
    from .jetcalc import parse
    from .ndds import NDDSystem, apply_operator, verify_solution
    from .nets import Net

    sysd = dict(cfg["system"])
    manufactured = bool(sysd.pop("manufactured", not sysd.get("forcing")))
    perturb = sysd.pop("perturbation", None)
    sys_ = NDDSystem.from_config(sysd)
    u = [Net.from_expression(e, "J") for e in cfg["u"]]
    if manufactured:
        Lu = apply_operator(sys_, u)
        forcing = []
        for r, net in enumerate(Lu):
            p = None if perturb is None else perturb[r]
            if p in (None, "0"):
                forcing.append(net)
            else:
                pe = parse(p)
                forcing.append(Net(lambda e, net=net, pe=pe: net(e) + pe.bind(eps=e), "J"))
    else:
        forcing = None
    kw = {}
    if "tolerance" in cfg:
        kw["noise_rtol"] = float(cfg["tolerance"])
    rep = verify_solution(sys_, u, C.schedule(cfg), forcing, _grid(cfg, "J"), cfg["kmax"],
                          C.thresholds(cfg), **kw)
    return rep.verdict, {"verify": rep.to_dict(), "kernel_tail_mass": sys_.tail_mass}, None, None


def run_primitive(cfg):
    from .aaa import AAASpec
    from .ndds import Primitive, split_primitive
    from .jetcalc import parse

    x0 = float(cfg.get("x0", 0.0))
    dom = cfg.get("domain", "R")
    grid = _grid(cfg, dom)
    u_cfg = cfg["u"]
    if isinstance(u_cfg, dict):
        spec = AAASpec(u_cfg["principal"], u_cfg.get("corrective", "0"))
        u = spec.at(None)
    else:
        spec, u = None, parse(u_cfg)
    U = Primitive(u, x0)
    h = 1e-3
    # fourth-order central difference of U against u
    xs = grid[(grid - 2 * h >= grid.min()) & (grid + 2 * h <= grid.max())]
    d = (-U(xs + 2 * h) + 8 * U(xs + h) - 8 * U(xs - h) + U(xs - 2 * h)) / (12 * h)
    err = float(np.max(np.abs(d - u(xs)) / np.maximum(1.0, np.abs(u(xs)))))
    tol = float(cfg.get("tolerance", 1e-8))
    result = {"derivative_error": err, "x": grid.tolist(), "U": U(grid).tolist()}
    passed = err <= tol
    if spec is not None:
        sp = split_primitive(spec, x0)
        jg = grid[grid >= 0]
        from .aaa import check_vanishing

        result["split"] = {
            "constant": sp.constant,
            "corrective_vanishing": check_vanishing(sp.corrective, 0),
            "reassembly_error": float(np.abs(sp.total(jg) - U(jg)).max()),
        }
        passed = passed and result["split"]["corrective_vanishing"] and result["split"]["reassembly_error"] <= tol
    return passed, result, {"x": grid.tolist(), "value": result["U"]}, None


PIPELINES = {
    "classify": run_classify,
    "seeley": run_seeley,
    "embed": run_embed,
    "decompose": run_decompose,
    "compose": run_compose,
    "solve": run_solve,
    "verify": run_verify,
    "primitive": run_primitive,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gfnets", description="Generalized-function net workbench")
    p.add_argument("--version", action="version", version=f"gfnets {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in C.SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="TOML or JSON config file")
        s.add_argument("--out", "--report", dest="out", help="JSON report path (default: stdout)")
        s.add_argument("--csv", help="semi-norm table CSV sidecar")
        s.add_argument("--series", help="plot-data JSON sidecar")
        s.add_argument("--schedule", help="eps0,ratio,N")
        s.add_argument("--kmax", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--tolerance", type=float)
        if name == "seeley":
            s.add_argument("--L", type=int, dest="L")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        file_cfg = C.load_file(args.config) if args.config else {}
        over = {"kmax": args.kmax, "seed": args.seed, "tolerance": args.tolerance,
                "L": getattr(args, "L", None)}
        if args.schedule:
            over["schedule"] = C.parse_schedule(args.schedule)
        cfg = C.resolve(args.subcommand, file_cfg, over)
    except C.ConfigError as exc:
        print(f"gfnets: {exc}", file=sys.stderr)
        return EXIT_USAGE
    np.random.seed(cfg["seed"])
    try:
        passed, result, series, cls = PIPELINES[args.subcommand](cfg)
        error = None
    except (ExpressionSyntaxError, KeyError, TypeError) as exc:
        print(f"gfnets: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GFNetsError, ValueError) as exc:
        passed, result, series, cls = False, {}, None, None
        error = f"{type(exc).__name__}: {exc}"
    report = {
        "gfnets_version": __version__,
        "subcommand": args.subcommand,
        "config": cfg,
        "result": result,
        "verdict": "pass" if passed else "fail",
    }
    if error:
        report["error"] = error
    text = dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv and cls is not None:
        from .nets import write_seminorm_csv

        write_seminorm_csv(args.csv, cls)
    if args.series and series is not None:
        with open(args.series, "w") as fh:
            fh.write(dumps(series))
    return EXIT_PASS if passed else EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
