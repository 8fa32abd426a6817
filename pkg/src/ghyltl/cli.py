"""Command-line interface: eval, check, compile, gadget, prenex, sat, oracle.

Formula files carry their proposition universe in a header line ``ap: p, q``
followed by the formula text.  Trace sets and transition systems are the JSON
documents defined in the traces module.  Exit status: 0 holds, 1 fails,
2 unknown, 3 error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import arith, semantics, traces, transform
from .pltl import ParseError
from .semantics import EvalConfig

EXIT = {"holds": 0, "fails": 1, "unknown": 2, "error": 3}


@dataclass
class RunReport:
    command: str
    inputs: dict
    bounds: dict
    verdict: str | None = None
    reason: str | None = None
    detail: dict = field(default_factory=dict)
    timing_ms: float = 0.0

    def to_obj(self) -> dict:
        obj = {
            "command": self.command,
            "inputs": self.inputs,
            "bounds": self.bounds,
            "verdict": self.verdict,
            "reason": self.reason,
            "detail": self.detail,
            "timing_ms": round(self.timing_ms, 3),
        }
        return obj

    def emit(self, as_json: bool) -> None:
        if as_json:
            print(json.dumps(self.to_obj(), sort_keys=True, indent=2))
            return
        print(f"command: {self.command}")
        for k in sorted(self.inputs):
            print(f"  {k}: {self.inputs[k]}")
        for k in sorted(self.bounds):
            print(f"  {k}: {self.bounds[k]}")
        if self.verdict is not None:
            print(f"verdict: {self.verdict}")
        if self.reason:
            print(f"reason: {self.reason}")
        for k in sorted(self.detail):
            print(f"{k}: {self.detail[k]}")


def read_formula_file(path: str) -> tuple[frozenset[str], semantics.Hyper]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].strip().startswith("ap:"):
        raise ParseError("formula file must start with an 'ap:' header line", 1, 1)
    header = lines[0].strip()[3:]
    ap = frozenset(p.strip() for p in header.split(",") if p.strip())
    body = "\n".join(lines[1:])
    return ap, semantics.parse_hyper(body, ap)


def write_formula_file(path: str, ap, formula: semantics.Hyper) -> None:
    text = f"ap: {', '.join(sorted(ap))}\n{semantics.render_hyper(formula)}\n"
    Path(path).write_text(text, encoding="utf-8")


def _cfg(args) -> EvalConfig:
    return EvalConfig(until_cutoff=args.until_cutoff, cycle_margin=args.cycle_margin)


def _eval_flags(sp) -> None:
    sp.add_argument("--until-cutoff", type=int, default=200)
    sp.add_argument("--cycle-margin", type=int, default=3)
    sp.add_argument("--json", action="store_true")


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    with open(args.traces, encoding="utf-8") as fp:
        _, universe = traces.load_trace_set(fp)
    _, formula = read_formula_file(args.formula)
    verdict = semantics.check_traceset(universe, formula, _cfg(args))
    report = RunReport(
        "eval", {"traces": args.traces, "formula": args.formula},
        {"until_cutoff": args.until_cutoff, "cycle_margin": args.cycle_margin},
        verdict.status, verdict.reason, timing_ms=(time.perf_counter() - t0) * 1e3)
    report.emit(args.json)
    return EXIT[verdict.status]


def cmd_check(args) -> int:
    t0 = time.perf_counter()
    with open(args.system, encoding="utf-8") as fp:
        ts = traces.load_transition_system(fp)
    _, formula = read_formula_file(args.formula)
    verdict = semantics.check_ts(ts, formula, args.max_prefix, args.max_loop, _cfg(args))
    report = RunReport(
        "check", {"system": args.system, "formula": args.formula},
        {"max_prefix": args.max_prefix, "max_loop": args.max_loop,
         "until_cutoff": args.until_cutoff, "cycle_margin": args.cycle_margin},
        verdict.status, verdict.reason, timing_ms=(time.perf_counter() - t0) * 1e3)
    report.emit(args.json)
    return EXIT[verdict.status]


def cmd_compile(args) -> int:
    t0 = time.perf_counter()
    raw = arith.parse_arith(Path(args.arith).read_text(encoding="utf-8"))
    flat = arith.flatten(raw)
    if args.encoding == "stutter":
        artifact = arith.compile_stutter(flat)
    else:
        artifact = arith.compile_context(flat, strict_fidelity=args.strict_fidelity)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "system.json", "w", encoding="utf-8") as fp:
        traces.save_transition_system(fp, artifact.system)
    write_formula_file(str(out / "formula.ghyltl"), artifact.system.ap, artifact.sentence)
    with open(out / "varmap.json", "w", encoding="utf-8") as fp:
        json.dump({"encoding": artifact.encoding, "varmap": artifact.var_map},
                  fp, sort_keys=True, indent=2)
        fp.write("\n")
    report = RunReport(
        "compile", {"arith": args.arith, "encoding": args.encoding,
                    "strict_fidelity": args.strict_fidelity},
        {}, "holds", None,
        {"outdir": str(out),
         "fragment": semantics.fragment_of(transform.hoist_prenex(artifact.sentence))},
        timing_ms=(time.perf_counter() - t0) * 1e3)
    report.emit(args.json)
    return 0


def cmd_gadget(args) -> int:
    t0 = time.perf_counter()
    bounds = None
    if args.max_period is not None or args.max_marker is not None:
        if args.max_period is None or args.max_marker is None:
            raise ValueError("--max-period and --max-marker must be given together")
        bounds = arith.GadgetBounds(args.max_period, args.max_marker)
    ok = arith.verify_gadget(args.op, args.n1, args.n2, args.n3, args.encoding,
                             bounds=bounds, cfg=_cfg(args),
                             strict_fidelity=args.strict_fidelity)
    verdict = "holds" if ok else "fails"
    report = RunReport(
        "gadget",
        {"encoding": args.encoding, "op": args.op,
         "n1": args.n1, "n2": args.n2, "n3": args.n3,
         "strict_fidelity": args.strict_fidelity},
        {"max_period": args.max_period, "max_marker": args.max_marker,
         "until_cutoff": args.until_cutoff, "cycle_margin": args.cycle_margin},
        verdict, timing_ms=(time.perf_counter() - t0) * 1e3)
    report.emit(args.json)
    return EXIT[verdict]


def cmd_prenex(args) -> int:
    t0 = time.perf_counter()
    ap, formula = read_formula_file(args.formula)
    out_formula = transform.prenexify(formula, ap)
    out_ap = ap if out_formula is formula else ap | {transform.MARK}
    rendered = semantics.render_hyper(out_formula)
    if args.out:
        write_formula_file(args.out, out_ap, out_formula)
    report = RunReport(
        "prenex", {"formula": args.formula}, {"pos_bound": args.pos_bound},
        "holds", None,
        {"already_prenex": out_formula is formula,
         "output": args.out if args.out else rendered,
         "ap": ", ".join(sorted(out_ap))},
        timing_ms=(time.perf_counter() - t0) * 1e3)
    report.emit(args.json)
    if not args.out and not args.json:
        print(rendered)
    return 0


def cmd_sat(args) -> int:
    t0 = time.perf_counter()
    ap, formula = read_formula_file(args.formula)
    model = semantics.bounded_sat(formula, args.max_traces, args.max_prefix,
                                  args.max_loop, ap, _cfg(args))
    verdict = "holds" if model is not None else "fails"
    detail = {}
    if model is not None:
        obj = traces.trace_set_to_obj(ap, model)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fp:
                json.dump(obj, fp, sort_keys=True, indent=2)
                fp.write("\n")
            detail["model"] = args.out
        else:
            detail["model"] = json.dumps(obj, sort_keys=True)
    report = RunReport(
        "sat", {"formula": args.formula},
        {"max_traces": args.max_traces, "max_prefix": args.max_prefix,
         "max_loop": args.max_loop, "until_cutoff": args.until_cutoff,
         "cycle_margin": args.cycle_margin},
        verdict, None, detail, timing_ms=(time.perf_counter() - t0) * 1e3)
    report.emit(args.json)
    return EXIT[verdict]


def cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    raw = arith.parse_arith(Path(args.arith).read_text(encoding="utf-8"))
    flat = arith.flatten(raw)
    value = arith.arith_eval_bounded(flat, args.bound, args.bit_cap)
    verdict = "holds" if value else "fails"
    report = RunReport(
        "oracle", {"arith": args.arith},
        {"bound": args.bound, "bit_cap": args.bit_cap},
        verdict, timing_ms=(time.perf_counter() - t0) * 1e3)
    report.emit(args.json)
    return EXIT[verdict]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ghyltl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eval", help="check a sentence against a trace-set file")
    sp.add_argument("traces")
    sp.add_argument("formula")
    _eval_flags(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("check", help="bounded check against a transition system")
    sp.add_argument("system")
    sp.add_argument("formula")
    sp.add_argument("--max-prefix", type=int, default=3)
    sp.add_argument("--max-loop", type=int, default=2)
    _eval_flags(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("compile", help="compile arithmetic into a (system, sentence) pair")
    sp.add_argument("arith")
    sp.add_argument("outdir")
    sp.add_argument("--encoding", choices=("stutter", "context"), required=True)
    sp.add_argument("--strict-fidelity", action="store_true")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("gadget", help="verify an addition/multiplication gadget instance")
    sp.add_argument("--encoding", choices=("stutter", "context"), required=True)
    sp.add_argument("--op", choices=("add", "mul"), required=True)
    sp.add_argument("--n1", type=int, required=True)
    sp.add_argument("--n2", type=int, required=True)
    sp.add_argument("--n3", type=int, required=True)
    sp.add_argument("--max-period", type=int, default=None)
    sp.add_argument("--max-marker", type=int, default=None)
    sp.add_argument("--strict-fidelity", action="store_true")
    _eval_flags(sp)
    sp.set_defaults(func=cmd_gadget)

    sp = sub.add_parser("prenex", help="hoist quantifiers using position traces")
    sp.add_argument("formula")
    sp.add_argument("--pos-bound", type=int, default=8)
    sp.add_argument("--out", default=None)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_prenex)

    sp = sub.add_parser("sat", help="bounded satisfiability search")
    sp.add_argument("formula")
    sp.add_argument("--max-traces", type=int, default=3)
    sp.add_argument("--max-prefix", type=int, default=3)
    sp.add_argument("--max-loop", type=int, default=2)
    sp.add_argument("--out", default=None)
    _eval_flags(sp)
    sp.set_defaults(func=cmd_sat)

    sp = sub.add_parser("oracle", help="bounded second-order arithmetic evaluation")
    sp.add_argument("arith")
    sp.add_argument("--bound", type=int, default=12)
    sp.add_argument("--bit-cap", type=int, default=12)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_oracle)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
