"""Command-line front end: ``sva --minpoly 0,0,13 --steps 500 --loop --out run1``.

Exit codes:

    0  success
    2  invalid input or configuration
    3  BigReal precision exhausted
    4  dependence found although not requested (``--dependence``)
    5  internal invariant violation
    6  a detected loop failed certification

``summary.json`` is written to the output directory in every case.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

from . import __version__
from .engine import DEFAULT_DIGITS, Target, run, write_trace_csv, write_trace_jsonl
from .errors import InvariantViolation, LoopError, SvaError, ValidationError
from .geometry import MetricsCollector, check_geometry_on_T, monotonic_subsequence_check, write_metrics_csv
from .loops import DEFAULT_MATCH_DIGITS, LoopScanner, extract_lambda, recover_ratios, round_trip, verify_loop
from .oracles import prism_check
from .scalars import DEFAULT_PRECISION, MinimalPolynomial, format_field_element, parse_decimal, parse_field_element

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PRECISION = 3
EXIT_DEPENDENCE = 4
EXIT_INVARIANT = 5
EXIT_LOOP = 6

DEFAULT_PRISM_STATES = (0, 5, 10, 20, 30)


@dataclass
class RunConfig:
    mode: str  # "cubic", "rational" or "bigreal"
    minpoly: Optional[tuple] = None
    root: int = 0
    triple: str = "1;r;r^2"
    values: Optional[tuple] = None  # rational or decimal coordinates as text
    steps: int = 5000
    precision: int = DEFAULT_PRECISION
    loop: bool = False
    metrics: bool = False
    prism: Optional[int] = None
    prism_states: tuple = DEFAULT_PRISM_STATES
    dependence: bool = False
    out: str = "sva-out"
    format: str = "jsonl"
    digits: int = DEFAULT_DIGITS
    rounding: str = "truncate"
    match_eps: Optional[str] = None
    check: bool = False

    def validate(self) -> None:
        errs = []
        if self.steps < 1:
            errs.append("--steps must be >= 1")
        if self.precision < 64:
            errs.append("--prec must be >= 64")
        if self.digits < 1 or self.digits > math.floor(self.precision * math.log10(2)):
            errs.append(f"--digits must be in [1, {math.floor(self.precision * math.log10(2))}] at {self.precision} bits")
        if self.prism is not None and self.prism < 1:
            errs.append("--prism M needs M >= 1")
        if self.format not in ("jsonl", "csv"):
            errs.append("--format is jsonl or csv")
        if errs:
            raise ValidationError("; ".join(errs))

    def describe(self) -> dict:
        d = asdict(self)
        d["prism_states"] = list(self.prism_states)
        if self.minpoly is not None:
            d["minpoly"] = [str(x) for x in self.minpoly]
        if self.values is not None:
            d["values"] = list(self.values)
        return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sva", description="Smallest Vector Algorithm runs and diagnostics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="JSON file whose keys are option names; flags override it")
    tgt = p.add_argument_group("target (choose one)")
    tgt.add_argument("--minpoly", help="a,b,c for r^3 = a r^2 + b r + c (cubic exact mode)")
    tgt.add_argument("--root", type=int, help="real root index, ascending (default 0)")
    tgt.add_argument("--triple", help='three field elements "e0;e1;e2" (default "1;r;r^2")')
    tgt.add_argument("--rational", help='"x0,x1,x2" as exact rationals')
    tgt.add_argument("--decimal", help='"d0,d1,d2" as BigReal values')
    p.add_argument("--prec", type=int, help=f"working precision in bits (default {DEFAULT_PRECISION})")
    p.add_argument("--steps", type=int, help="maximum number of steps (default 5000)")
    p.add_argument("--loop", action="store_true", default=None, help="detect a Lagrange loop and certify it")
    p.add_argument("--metrics", action="store_true", default=None, help="write per-step geometric metrics")
    p.add_argument("--prism", type=int, metavar="M", help="run the prism oracle on the box [-M, M]^3")
    p.add_argument("--prism-states", help="comma list of states for --prism (default 0,5,10,20,30)")
    p.add_argument("--dependence", "--expect-dependence", dest="dependence", action="store_true", default=None,
                   help="a rational dependence is expected; finding one exits 0")
    p.add_argument("--out", help="output directory (default sva-out)")
    p.add_argument("--format", choices=("jsonl", "csv"), help="trace format (default jsonl)")
    p.add_argument("--digits", type=int, help=f"significant digits in the trace (default {DEFAULT_DIGITS}, capped by --prec)")
    p.add_argument("--rounding", choices=("truncate", "round"), help="digit rendering (default truncate)")
    p.add_argument("--match-eps", help="relative tolerance for BigReal loop matches")
    p.add_argument("--check", action="store_true", default=None, help="check state invariants at every step")
    return p


def _split(text, sep=","):
    return [t.strip() for t in text.split(sep) if t.strip()]


def parse_config(argv=None) -> RunConfig:
    args = build_parser().parse_args(argv)
    opts = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            opts.update({k.replace("-", "_"): v for k, v in json.load(fh).items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None and k != "config"})

    modes = [m for m in ("minpoly", "rational", "decimal") if opts.get(m) is not None]
    if len(modes) != 1:
        raise ValidationError("give exactly one of --minpoly, --rational, --decimal")
    cfg = RunConfig(mode={"minpoly": "cubic", "rational": "rational", "decimal": "bigreal"}[modes[0]])
    if cfg.mode == "cubic":
        coeffs = _split(str(opts["minpoly"]))
        if len(coeffs) != 3:
            raise ValidationError("--minpoly needs three coefficients a,b,c")
        cfg.minpoly = tuple(Fraction(c) for c in coeffs)
        cfg.root = int(opts.get("root", 0))
        cfg.triple = opts.get("triple", cfg.triple)
    else:
        vals = _split(str(opts[modes[0]]))
        if len(vals) != 3:
            raise ValidationError("a target needs three coordinates")
        cfg.values = tuple(vals)
    for key, conv in (("steps", int), ("prism", int), ("digits", int), ("format", str), ("out", str),
                      ("rounding", str), ("match_eps", str)):
        if opts.get(key) is not None:
            setattr(cfg, key, conv(opts[key]))
    if opts.get("prec") is not None:
        cfg.precision = int(opts["prec"])
    if opts.get("digits") is None:
        cfg.digits = min(DEFAULT_DIGITS, math.floor(cfg.precision * math.log10(2)))
    for key in ("loop", "metrics", "dependence", "check"):
        if opts.get(key):
            setattr(cfg, key, True)
    if opts.get("prism_states") is not None:
        ps = opts["prism_states"]
        cfg.prism_states = tuple(int(x) for x in (_split(ps) if isinstance(ps, str) else ps))
    cfg.validate()
    return cfg


def build_target(cfg: RunConfig) -> Target:
    if cfg.mode == "cubic":
        P = MinimalPolynomial(*cfg.minpoly, root=cfg.root)
        parts = _split(cfg.triple, ";")
        if len(parts) != 3:
            raise ValidationError('--triple needs three elements separated by ";"')
        return Target.cubic(P, [parse_field_element(t, P) for t in parts], precision=cfg.precision)
    if cfg.mode == "rational":
        return Target.rational([_parse_rational(v) for v in cfg.values], precision=cfg.precision)
    return Target.bigreal([parse_decimal(v) for v in cfg.values], precision=cfg.precision)


def _parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"not a rational number: {text!r}") from exc


# ---------------------------------------------------------------------------
# execution


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _loop_section(scanner, res, target, cfg, files):
    first = scanner.first
    section = {"found": first is not None, "collisions": [list(c) for c in scanner.collisions[:20]]}
    if first is None:
        return section, EXIT_OK
    s, p = first
    section.update({"s": s, "p": p})
    try:
        loop = extract_lambda(s, p, res.states, target)
        section["checks"] = verify_loop(loop, target)
        recover_ratios(loop)
        section["round_trip"] = round_trip(loop, target)
        section["certified"] = loop.certified
        path = os.path.join(cfg.out, "loop.json")
        _write_json(path, loop.to_json(cfg.digits))
        files.append("loop.json")
    except LoopError as exc:
        section["error"] = str(exc)
        return section, EXIT_LOOP
    return section, EXIT_OK


def main_run(cfg: RunConfig) -> tuple:
    """Execute a validated config; returns ``(exit_code, summary)``."""
    os.makedirs(cfg.out, exist_ok=True)
    files = []
    summary = {"config": cfg.describe(), "files": files}
    target = build_target(cfg)
    summary["target"] = _describe_target(target)

    hooks = []
    scanner = None
    collector = None
    if cfg.loop:
        kwargs = {"match_digits": DEFAULT_MATCH_DIGITS}
        if cfg.match_eps is not None:
            kwargs["match_eps"] = cfg.match_eps
        scanner = LoopScanner(target, **kwargs)
        hooks.append(scanner)
    if cfg.metrics:
        collector = MetricsCollector(target)
        hooks.append(collector)

    code = EXIT_OK
    try:
        res = run(target, cfg.steps, hooks=hooks, check=cfg.check)
    except InvariantViolation as exc:
        summary.update({"stop_reason": "invariant", "error": str(exc)})
        return EXIT_INVARIANT, summary
    summary["stop_reason"] = res.stop_reason
    summary["steps"] = res.last.s

    records = res.trace(cfg.digits, cfg.rounding)
    trace_name = f"trace.{cfg.format}"
    (write_trace_jsonl if cfg.format == "jsonl" else write_trace_csv)(records, os.path.join(cfg.out, trace_name))
    files.append(trace_name)

    if res.stop_reason == "precision":
        summary["error"] = str(res.error)
        summary["error_step"] = res.error.step
        code = EXIT_PRECISION
    if res.dependence is not None:
        summary["dependence"] = res.dependence.to_json()
        _write_json(os.path.join(cfg.out, "dependence.json"), res.dependence.to_json())
        files.append("dependence.json")
        if not cfg.dependence:
            code = EXIT_DEPENDENCE
    elif cfg.dependence:
        summary["dependence"] = None

    if scanner is not None:
        section, loop_code = _loop_section(scanner, res, target, cfg, files)
        summary["loop"] = section
        code = code or loop_code
    if collector is not None:
        write_metrics_csv(collector.records, os.path.join(cfg.out, "metrics.csv"))
        files.append("metrics.csv")
        msum = collector.summary_json()
        msum["geometry_on_T_violations"] = len(
            check_geometry_on_T(collector.records, 2.0 ** -(cfg.precision // 4))
        )
        msum["monotonic_subsequence"] = monotonic_subsequence_check(collector.records)
        _write_json(os.path.join(cfg.out, "metrics_summary.json"), msum)
        files.append("metrics_summary.json")
        summary["metrics"] = msum
    if cfg.prism is not None:
        by_s = {st.s: st for st in res.states}
        verdicts = [prism_check(by_s[s], target, cfg.prism).to_json() for s in cfg.prism_states if s in by_s]
        _write_json(os.path.join(cfg.out, "prism.json"), verdicts)
        files.append("prism.json")
        summary["prism"] = {"states": [v["s"] for v in verdicts], "pass": all(v["pass"] for v in verdicts)}
    return code, summary


def _describe_target(target: Target) -> dict:
    d = {"kind": target.kind}
    if target.kind == "cubic":
        P = target.poly
        d["minpoly"] = [str(P.a), str(P.b), str(P.c)]
        d["root"] = P.root
        d["triple"] = [format_field_element(x) for x in target.X]
    elif target.kind == "rational":
        d["triple"] = [str(x) for x in target.X]
    else:
        d["precision"] = target.backend.precision
        d["triple"] = [target.backend.ctx.nstr(x, 20) for x in target.X]
    return d


def _requested_out(argv) -> str:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--out", default="sva-out")
    known, _ = pre.parse_known_args(argv)
    return known.out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    out = _requested_out(argv)
    summary = {}
    try:
        cfg = parse_config(argv)
        code, summary = main_run(cfg)
    except SystemExit as exc:  # argparse usage errors, --help, --version
        if not exc.code:
            return 0
        code = EXIT_VALIDATION
        summary = {"stop_reason": "validation", "error": "invalid command line"}
    except InvariantViolation as exc:
        code = EXIT_INVARIANT
        summary = {"stop_reason": "invariant", "error": str(exc)}
        print(f"sva: invariant violation: {exc}", file=sys.stderr)
    except (SvaError, ValueError) as exc:
        code = EXIT_VALIDATION
        summary = {"stop_reason": "validation", "error": str(exc)}
        print(f"sva: error: {exc}", file=sys.stderr)
    summary["exit_code"] = code
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "summary.json"), summary)
    if code == EXIT_OK:
        print(f"sva: {summary.get('stop_reason')} after {summary.get('steps')} steps; output in {out}")
    elif code != EXIT_VALIDATION:
        print(f"sva: exit {code} ({summary.get('stop_reason')}); see {os.path.join(out, 'summary.json')}",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
