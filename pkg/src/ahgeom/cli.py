"""Command-line front end: zoo listing, classification, identity checks and the R^L crosscheck."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, zoo
from .chart_calculus import SCHEMES, BoundaryMarginError
from .classification import StructureError, classify
from .complex_frame import DegenerateSeedError
from .connections import FDPlan
from .identities import (CATALOG, FAIL, NOT_APPLICABLE, SuiteReport, UnknownIdentityError, crosscheck,
                         resolve_selection, run_suite)
from .raw_bianchi import RAW_FD

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CROSSCHECK_TOL = 1e-4
CLASSIFY_TOL = 1e-6


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    manifold: str = ""
    params: dict = field(default_factory=dict)
    identities: list[str] = field(default_factory=list)
    points: int = 5
    seed: int = 0
    classify_tol: float = CLASSIFY_TOL
    tolerances: dict[str, float] = field(default_factory=dict)
    plan: FDPlan = field(default_factory=FDPlan)
    fmt: str = "json"
    out: str | None = None


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def parse_tolerances(values: list[str] | None) -> tuple[float | None, dict[str, float]]:
    """``--tol 1e-6`` sets the classification/crosscheck tolerance; ``--tol GEN-B2=1e-5`` overrides one identity."""
    scalar, per_code = None, {}
    for raw in values or []:
        for item in raw.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                if "=" in item:
                    code, val = item.split("=", 1)
                    code = code.strip().upper()
                    if code not in CATALOG:
                        raise UnknownIdentityError(f"unknown identity code in --tol: {code}")
                    per_code[code] = float(val)
                else:
                    scalar = float(item)
            except ValueError as exc:
                raise UsageError(f"bad --tol value {item!r}") from exc
    for v in ([scalar] if scalar is not None else []) + list(per_code.values()):
        if not v > 0:
            raise UsageError("tolerances must be positive")
    return scalar, per_code


def build_config(args: argparse.Namespace) -> RunConfig:
    manifold = args.manifold_opt or args.manifold
    if not manifold:
        raise UsageError("a manifold name is required (positional or --manifold)")
    if manifold not in zoo.ZOO_NAMES:
        raise UsageError(f"unknown manifold {manifold!r}; known: {', '.join(zoo.ZOO_NAMES)}")
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    scalar, per_code = parse_tolerances(args.tol)
    params = {"n": args.n, "radius": args.radius, "amplitude": args.amplitude}
    if manifold == "random_torus":
        params["seed"] = args.seed
    params = {k: v for k, v in params.items() if v is not None and k in {p.name for p in zoo.PARAMS[manifold]}}
    plan = FDPlan()
    if args.fd_step is not None or args.fd_scheme is not None:
        if args.fd_step is not None and not args.fd_step > 0:
            raise UsageError("--fd-step must be positive")
        plan = FDPlan.uniform(args.fd_step or plan.connection.step, args.fd_scheme or plan.connection.scheme)
    identities = []
    if args.command == "check":
        identities = resolve_selection(args.identities or "all")
    default_tol = CROSSCHECK_TOL if args.command == "crosscheck" else CLASSIFY_TOL
    return RunConfig(
        command=args.command, manifold=manifold, params=params, identities=identities, points=args.points,
        seed=args.seed, classify_tol=scalar if scalar is not None else default_tol, tolerances=per_code,
        plan=plan, fmt=args.format, out=args.out,
    )


def _meta(cfg: RunConfig, entry: zoo.ZooEntry, pts: np.ndarray) -> dict:
    fd = cfg.plan.as_dict()
    if cfg.command == "check":
        fd["raw"] = {"step": RAW_FD.step, "scheme": RAW_FD.scheme, "richardson": RAW_FD.richardson}
    return {
        "version": __version__,
        "command": cfg.command,
        "manifold": cfg.manifold,
        "structure": entry.structure.label,
        "params": dict(entry.params),
        "seed": cfg.seed,
        "points": pts.tolist(),
        "fd": fd,
    }


def _entry_and_points(cfg: RunConfig) -> tuple[zoo.ZooEntry, np.ndarray]:
    try:
        entry = zoo.build(cfg.manifold, **cfg.params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return entry, entry.sample_points(cfg.points, cfg.seed)


# ---- rendering ------------------------------------------------------------------------

def _classification_dict(report) -> dict:
    d = report.as_dict()
    d["residuals"] = {k: _finite(v) for k, v in d["residuals"].items()}
    return d


def _suite_rows(report: SuiteReport) -> list[dict]:
    rows = []
    for r in report.results:
        d = r.as_dict()
        d["residual"] = _finite(d["residual"])
        rows.append(d)
    return rows


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        flat = {k: (";".join(v) if isinstance(v, list) else v) for k, v in row.items()}
        writer.writerow(flat)
    return buf.getvalue()


def _fmt(x: float | None) -> str:
    return "nan" if x is None else f"{x:.3e}"


def render_suite_human(doc: dict, report: SuiteReport) -> str:
    cls = doc["classification"]
    lines = [
        f"{doc['meta']['structure']}: {report.points.shape[0]} point(s), seed {doc['meta']['seed']}",
        f"classification: {', '.join(cls['labels']) or '(none)'}"
        + (f"  inconclusive: {', '.join(cls['inconclusive'])}" if cls["inconclusive"] else ""),
        "",
        f"{'code':<11}{'max residual':>14}{'tol':>11}  status   worst",
    ]
    per_code: dict[str, dict] = {}
    for r in report.results:
        cur = per_code.get(r.code)
        if cur is None or (r.status != NOT_APPLICABLE and (cur["status"] == NOT_APPLICABLE or r.residual > cur["residual"])):
            per_code[r.code] = {"residual": r.residual, "tol": r.tolerance, "status": r.status,
                                "worst": r.worst_indices, "point": r.point}
        if r.status == FAIL:
            per_code[r.code]["status"] = FAIL
    applicable = sorted((c for c, v in per_code.items() if v["status"] != NOT_APPLICABLE),
                        key=lambda c: (-per_code[c]["residual"] if math.isfinite(per_code[c]["residual"])
                                       else -math.inf, c))
    for code in applicable:
        v = per_code[code]
        worst = f"({','.join(v['worst'])}) at point {v['point']}" if v["worst"] else f"at point {v['point']}"
        lines.append(f"{code:<11}{_fmt(_finite(v['residual'])):>14}{v['tol']:>11.0e}  {v['status']:<8} {worst}")
    skipped = [c for c, v in per_code.items() if v["status"] == NOT_APPLICABLE]
    if skipped:
        lines += ["", "not applicable: " + ", ".join(skipped)]
    lines += ["", "verdict: " + ("pass" if report.passed else f"FAIL ({len(report.failures)} failing result(s))")]
    return "\n".join(lines) + "\n"


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---- commands -------------------------------------------------------------------------

def zoo_listing() -> list[dict]:
    out = []
    for name in zoo.ZOO_NAMES:
        entry = zoo.build(name)
        out.append({
            "name": name,
            "expected": sorted(entry.expected),
            "params": [{"name": p.name, "type": p.type, "default": p.default, "description": p.description}
                       for p in zoo.PARAMS[name]],
            "doc": entry.doc,
        })
    return out


def cmd_zoo_list(args: argparse.Namespace) -> int:
    items = zoo_listing()
    if args.format == "json":
        emit(render_json({"meta": {"version": __version__}, "zoo": items}), args.out)
    elif args.format == "csv":
        rows = [{"name": it["name"], "expected": ";".join(it["expected"]),
                 "params": ";".join(f"{p['name']}:{p['type']}={p['default']}" for p in it["params"])}
                for it in items]
        emit(render_csv(rows, ["name", "expected", "params"]), args.out)
    else:
        lines = []
        for it in items:
            params = ", ".join(f"--{p['name']} {p['type']} (default {p['default']}; {p['description']})"
                               for p in it["params"]) or "none"
            lines += [it["name"], f"  expected: {', '.join(it['expected']) or '(no special class)'}",
                      f"  params:   {params}", f"  {it['doc']}", ""]
        emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    entry, pts = _entry_and_points(cfg)
    try:
        report = classify(entry.structure, pts, cfg.classify_tol, plan=cfg.plan)
    except StructureError as exc:
        emit(render_json({"meta": _meta(cfg, entry, pts), "error": str(exc)}), cfg.out)
        return EXIT_FAIL
    doc = {"meta": _meta(cfg, entry, pts), "classification": _classification_dict(report)}
    if cfg.fmt == "json":
        emit(render_json(doc), cfg.out)
    elif cfg.fmt == "csv":
        rows = [{"criterion": k, "residual": _finite(v), "tol": report.tol, "pass": report.passes(k),
                 "inconclusive": k in report.inconclusive} for k, v in report.residuals.items()]
        emit(render_csv(rows, ["criterion", "residual", "tol", "pass", "inconclusive"]), cfg.out)
    else:
        lines = [f"{entry.structure.label}: {report.samples} point(s), tol {report.tol:g}"]
        for k, v in report.residuals.items():
            verdict = "pass" if report.passes(k) else ("inconclusive" if k in report.inconclusive else "fail")
            lines.append(f"  {k:<10}{v:>12.3e}  {verdict}")
        strict = [k for k, v in report.strict.items() if v]
        lines.append(f"labels: {', '.join(report.labels) or '(none)'}")
        if strict:
            lines.append(f"strict: {', '.join(strict)}")
        emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    entry, pts = _entry_and_points(cfg)
    report = run_suite(entry.structure, pts, cfg.identities, plan=cfg.plan, classify_tol=cfg.classify_tol,
                       tolerances=cfg.tolerances, seed=cfg.seed)
    rows = _suite_rows(report)
    doc = {
        "meta": _meta(cfg, entry, pts),
        "classification": _classification_dict(report.classification),
        "identities": rows,
        "summary": {
            "per_code_max": {k: _finite(v) for k, v in report.per_code_max.items()},
            "pass": report.passed,
            "failures": [{"code": r.code, "point": r.point, "residual": _finite(r.residual),
                          "worst_indices": r.worst_indices} for r in report.failures],
        },
    }
    if cfg.fmt == "json":
        emit(render_json(doc), cfg.out)
    elif cfg.fmt == "csv":
        emit(render_csv(rows, ["code", "point", "residual", "tol", "pass", "status", "worst_indices", "part"]),
             cfg.out)
    else:
        emit(render_suite_human(doc, report), cfg.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_crosscheck(cfg: RunConfig) -> int:
    entry, pts = _entry_and_points(cfg)
    results = crosscheck(entry.structure, pts, cfg.plan)
    worst = max(results, key=lambda r: r.max_discrepancy if math.isfinite(r.max_discrepancy) else math.inf)
    ok = all(math.isfinite(r.max_discrepancy) and r.max_discrepancy < cfg.classify_tol for r in results)
    rows = [{**r.as_dict(), "max_discrepancy": _finite(r.max_discrepancy)} for r in results]
    doc = {
        "meta": _meta(cfg, entry, pts),
        "crosscheck": rows,
        "max_discrepancy": _finite(worst.max_discrepancy),
        "tol": cfg.classify_tol,
        "pass": ok,
    }
    if cfg.fmt == "json":
        emit(render_json(doc), cfg.out)
    elif cfg.fmt == "csv":
        emit(render_csv(rows, ["point", "max_discrepancy", "worst_indices"]), cfg.out)
    else:
        lines = [f"{entry.structure.label}: R^L direct vs reconstructed from canonical data"]
        lines += [f"  point {r.point}: {_fmt(_finite(r.max_discrepancy))} at ({','.join(r.worst_indices)})"
                  for r in results]
        lines.append(f"max discrepancy {_fmt(_finite(worst.max_discrepancy))} (tol {cfg.classify_tol:g}): "
                     + ("pass" if ok else "FAIL"))
        emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"classify": cmd_classify, "check": cmd_check, "crosscheck": cmd_crosscheck}


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("manifold", nargs="?", help="zoo entry name")
    p.add_argument("--manifold", dest="manifold_opt", help="zoo entry name (alternative to the positional)")
    p.add_argument("--n", type=int, help="complex dimension (flat_cn, random_torus)")
    p.add_argument("--radius", type=float, help="sphere radius (round_s2)")
    p.add_argument("--amplitude", type=float, help="perturbation size (random_torus)")
    p.add_argument("--points", type=int, default=5, help="number of sample points (default 5)")
    p.add_argument("--seed", type=int, default=0,
                   help="sampling seed; also the structure seed of random_torus (default 0)")
    p.add_argument("--tol", action="append",
                   help="classification (or crosscheck) tolerance, or CODE=VALUE identity overrides; repeatable")
    p.add_argument("--fd-step", type=float, help="finite-difference step for every nesting level")
    p.add_argument("--fd-scheme", choices=SCHEMES, help="finite-difference stencil for every level")
    p.add_argument("--identities", help="comma-separated identity codes, or 'all' (check only)")
    p.add_argument("--format", choices=("json", "csv", "human"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ahgeom", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    z = sub.add_parser("zoo", aliases=["zoo-list"], help="list built-in manifolds")
    z.add_argument("--format", choices=("json", "csv", "human"), default="human")
    z.add_argument("--out")
    for name, text in (("classify", "classify a structure"), ("check", "run the identity suite"),
                       ("crosscheck", "compare direct and reconstructed Levi-Civita curvature")):
        _add_run_args(sub.add_parser(name, help=text))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("zoo", "zoo-list"):
        return cmd_zoo_list(args)
    try:
        cfg = build_config(args)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, UnknownIdentityError, BoundaryMarginError, DegenerateSeedError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"ahgeom: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
