"""orthocurv <compute|verify|flatness> METRIC_FILE [options]

Exit codes: 0 success (agree / flat), 1 mismatch or not flat,
2 bad file or arguments, 3 evaluation left the domain.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cartan import cartan_table
from .curvature import LITERAL, RESOLVED, RtcTable, closed_form_table, flatness_check
from .expr import ZERO, size, to_str
from .metric import DiagonalMetric, MetricFormatError, load, validate
from .numeric import DomainError, SamplingError, compile_exprs, sample_points
from .oracle import compare, ll_applicable, ll_table, mathpages_table, riemann_frame
from .simplify import simplify

PIPELINES = ("closed_form", "cartan", "oracle", "ll", "mathpages")
CONVENTIONS = {"resolved": RESOLVED, "literal": LITERAL}
SIMPLIFY_GUARD = 1500
TABLE_POINTS = 3

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    path: str
    tol: float = 1e-9
    samples: int = 64
    seed: int = 0
    fmt: str = "text"
    pipelines: tuple[str, ...] = ("closed_form",)
    component: tuple[str, ...] | None = None
    convention: str = "resolved"

    def check(self) -> None:
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.samples < 1:
            raise UsageError("--samples must be at least 1")
        bad = [p for p in self.pipelines if p not in PIPELINES]
        if bad:
            raise UsageError(f"unknown pipeline {bad[0]!r}; choose from {', '.join(PIPELINES)}")
        if len(set(self.pipelines)) != len(self.pipelines):
            raise UsageError("pipeline listed twice")
        if self.command == "compute" and not self.pipelines:
            raise UsageError("compute needs at least one pipeline")
        if self.command == "verify" and len(self.pipelines) < 2:
            raise UsageError("verify needs at least two pipelines")


def _table(m: DiagonalMetric, name: str, cfg: RunConfig) -> RtcTable:
    if name == "closed_form":
        return closed_form_table(m, CONVENTIONS[cfg.convention])
    return {"cartan": cartan_table, "oracle": riemann_frame,
            "ll": ll_table, "mathpages": mathpages_table}[name](m)


def _select(m: DiagonalMetric, table: RtcTable, cfg: RunConfig) -> list[tuple[int, int, int, int]]:
    keys = table.keys()
    if cfg.component is None:
        return keys
    idx = [m.index(c) for c in cfg.component]
    if len(idx) == 2:
        idx = idx * 2
    if len(idx) != 4:
        raise UsageError("--component takes A,B or A,B,C,D")
    a, b, c, d = idx
    if a == b or c == d:
        raise UsageError("--component indices within a pair must differ")
    want = (min(a, b), max(a, b), min(c, d), max(c, d))
    return [k for k in keys if k == want]


def _display(e) -> str:
    if e.is_zero:
        return "0"
    return to_str(simplify(e) if size(e) < SIMPLIFY_GUARD else e)


def _num(v: float) -> float | None:
    return float(f"{v:.12g}") if np.isfinite(v) else None


def _metric_echo(m: DiagonalMetric) -> dict:
    return {
        "name": m.name,
        "coords": list(m.names),
        "signature": ["+" if e > 0 else "-" for e in m.eta],
        "params": [p.name for p in m.params],
        "g": {c: to_str(e) for c, e in zip(m.names, m.g)},
        "domain": {k: [lo, hi] for k, lo, hi in m.domain_items},
    }


def _components(m: DiagonalMetric, tables: dict[str, RtcTable], cfg: RunConfig,
                with_values: bool) -> tuple[dict, list]:
    pts = sample_points(m.sample_domain, min(cfg.samples, TABLE_POINTS), cfg.seed)
    points = [{k: _num(v[i]) for k, v in pts.items()} for i in range(len(next(iter(pts.values()))))]
    out = {}
    for name, table in tables.items():
        keys = _select(m, table, cfg)
        rows = {}
        exprs = [table.entries.get(k, ZERO) for k in keys]
        values = compile_exprs(exprs)(pts) if (with_values and exprs) else None
        for i, (k, e) in enumerate(zip(keys, exprs)):
            row = {"indices": [m.names[j] for j in k], "expr": _display(e)}
            if values is not None:
                row["values"] = [_num(v) for v in values[i]]
            rows[table.label(k)] = row
        out[name] = rows
    return out, points


def cmd_compute(m: DiagonalMetric, cfg: RunConfig) -> tuple[dict, int]:
    tables = {p: _table(m, p, cfg) for p in cfg.pipelines}
    comps, points = _components(m, tables, cfg, with_values=True)
    verdict = {"status": "computed", "exit_code": EXIT_OK,
               "sign_convention": CONVENTIONS[cfg.convention].label, "sample_points": points}
    return _report(m, cfg, comps, [], verdict), EXIT_OK


def _comparison_json(r, m: DiagonalMetric) -> dict:
    return {
        "left": r.left, "right": r.right, "patterns": list(r.patterns),
        "agree": r.agree, "max_residual": _num(r.max_residual),
        "worst_component": r.worst_component,
        "worst_point": {k: _num(v) for k, v in (r.worst_point or {}).items()} or None,
        "sign_flip": r.sign_flip, "rejected": r.rejected, "note": r.note,
        "components": {c.label: {"verdict": c.verdict, "residual": _num(c.max_residual)}
                       for c in r.components},
    }


def cmd_verify(m: DiagonalMetric, cfg: RunConfig) -> tuple[dict, int]:
    notes = {}
    names = list(cfg.pipelines)
    if "ll" in names and not ll_applicable(m, cfg.seed):
        names.remove("ll")
        notes["ll"] = "not applicable: some g_a is not positive on the sample domain"
        if len(names) < 2:
            raise UsageError("fewer than two applicable pipelines")
    tables = {p: _table(m, p, cfg) for p in names}
    comparisons = []
    for a, b in itertools.combinations(names, 2):
        r = compare(tables[a], tables[b], m, cfg.tol, cfg.seed, cfg.samples)
        comparisons.append(r)
    ok = all(r.agree for r in comparisons)
    comps, _ = _components(m, tables, cfg, with_values=False)
    worst = max(comparisons, key=lambda r: r.max_residual)
    verdict = {
        "status": "agree" if ok else "mismatch",
        "exit_code": EXIT_OK if ok else EXIT_MISMATCH,
        "sign_convention": CONVENTIONS[cfg.convention].label,
        "tol": cfg.tol, "samples": cfg.samples,
        "worst": {"pair": [worst.left, worst.right], "component": worst.worst_component,
                  "residual": _num(worst.max_residual)},
        "not_applicable": notes,
    }
    report = _report(m, cfg, comps, [_comparison_json(r, m) for r in comparisons], verdict)
    report["pipelines"] = names
    return report, verdict["exit_code"]


def cmd_flatness(m: DiagonalMetric, cfg: RunConfig) -> tuple[dict, int]:
    conv = CONVENTIONS[cfg.convention]
    v = flatness_check(m, "symbolic", cfg.tol, cfg.seed, cfg.samples, conv)
    table = closed_form_table(m, conv)
    comps = {"closed_form": {table.label(k): {"indices": [m.names[j] for j in k], "method": meth,
                                              "zero": k not in v.nonzero}
                             for k, meth in sorted(v.methods.items())}}
    verdict = {
        "status": "FLAT" if v.flat else "NOT FLAT",
        "exit_code": EXIT_OK if v.flat else EXIT_MISMATCH,
        "sign_convention": conv.label, "tol": cfg.tol, "samples": cfg.samples,
        "witness": None if v.flat else {
            "component": table.label(v.witness), "expr": v.witness_expr,
            "value_at_first_sample": _num(v.witness_value)},
        "nonzero": [table.label(k) for k in v.nonzero],
    }
    return _report(m, cfg, comps, [], verdict), verdict["exit_code"]


def _report(m, cfg, comps, comparisons, verdict) -> dict:
    return {
        "metric": _metric_echo(m),
        "pipelines": list(cfg.pipelines) if cfg.command != "flatness" else ["closed_form"],
        "components": comps,
        "comparisons": comparisons,
        "verdict": verdict,
        "seed": cfg.seed,
        "version": __version__,
    }


# ---------------------------------------------------------------------------
# text rendering
# ---------------------------------------------------------------------------

def render_text(report: dict) -> str:
    m = report["metric"]
    v = report["verdict"]
    lines = [f"metric {m['name'] or '<unnamed>'}: coords ({', '.join(m['coords'])}), "
             f"signature ({', '.join(m['signature'])})"]
    for c in m["coords"]:
        lines.append(f"  g[{c}] = {m['g'][c]}")
    lines.append(f"sign convention {v['sign_convention']}")
    if v["status"] == "computed":
        for name, rows in report["components"].items():
            lines.append(f"[{name}]")
            for label, row in rows.items():
                lines.append(f"  R^{{{label.split(',')[0]}}}_{{{label.split(',')[1]}}} = {row['expr']}")
    elif v["status"] in ("agree", "mismatch"):
        for c in report["comparisons"]:
            state = "agree" if c["agree"] else "MISMATCH"
            lines.append(f"  {c['left']} vs {c['right']}: {state}, max residual "
                         f"{c['max_residual']:.3g} over {', '.join(c['patterns'])}")
            if not c["agree"]:
                lines.append(f"    worst {c['worst_component']} at {c['worst_point']}")
                if c["sign_flip"]:
                    lines.append("    all mismatches are reconciled by a uniform sign flip")
        for k, why in v["not_applicable"].items():
            lines.append(f"  {k}: {why}")
        lines.append(v["status"].upper())
    else:
        lines.append(v["status"])
        if v["witness"]:
            w = v["witness"]
            lines.append(f"  witness {w['component']} = {w['expr']}")
    return "\n".join(lines) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orthocurv",
                                description="Riemann components of diagonal metrics.")
    p.add_argument("--version", action="version", version=f"orthocurv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, default in (("compute", "closed_form"), ("verify", ",".join(PIPELINES)),
                          ("flatness", "closed_form")):
        s = sub.add_parser(name)
        s.add_argument("metric_file")
        s.add_argument("--pipelines", "--pipeline", dest="pipelines", default=default)
        s.add_argument("--tol", type=float, default=1e-9)
        s.add_argument("--samples", type=int, default=64)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--format", choices=("text", "json"), default="text")
        s.add_argument("--component", default=None, help="A,B or A,B,C,D")
        s.add_argument("--convention", choices=tuple(CONVENTIONS), default="resolved")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command, path=args.metric_file, tol=args.tol, samples=args.samples,
        seed=args.seed, fmt=args.format,
        pipelines=tuple(p.strip() for p in args.pipelines.split(",") if p.strip()),
        component=tuple(c.strip() for c in args.component.split(",")) if args.component else None,
        convention=args.convention,
    )
    try:
        cfg.check()
        path = Path(cfg.path)
        m = load(path.read_text(encoding="utf-8"), name=path.stem)
        checked = validate(m, cfg.seed)
        if not checked:
            raise DomainError("; ".join(checked.problems))
        run = {"compute": cmd_compute, "verify": cmd_verify, "flatness": cmd_flatness}[cfg.command]
        report, code = run(m, cfg)
    except (OSError, MetricFormatError, UsageError, IndexError) as exc:
        print(f"orthocurv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DomainError, SamplingError) as exc:
        print(f"orthocurv: domain failure: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if cfg.fmt == "json":
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(render_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
