"""
Command-line front end: analyze sets, run single extensions, run the
constructions, and verify or summarize emitted JSON documents.

Exit codes: 0 success, 2 usage or parse error, 3 construction failure.
"""
import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

import config
from construction import run_rapid_no_w, run_w_not_q, spade_check
from dense import build_schedule, extend_g, extend_w, run_generic
from errors import ApForceError, GenericRunError, StageError, UsageError
from ideals import not_p_ideal_witness, parse_weight_spec, summable_diagnostic, tallness_probe, vdw_diagnostic
from model import FilterBase, parse_function_spec, parse_set_spec
from models import Scenario

logger = logging.getLogger(__name__)


def canonical_json(document: Any) -> str:
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def parse_ks(text: str) -> List[int]:
    """"1..5" or "1,2,3"."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            ks = list(range(int(lo), int(hi) + 1))
        else:
            ks = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"malformed ks {text!r}; use 1..5 or 1,2,3")
    if any(k < 1 for k in ks):
        raise UsageError("ks must be >= 1")
    return ks


def parse_condition(text: Optional[str]) -> List[int]:
    if text is None or text.strip() in ("", "empty"):
        return []
    try:
        return sorted({int(part) for part in text.split(",") if part.strip()})
    except ValueError:
        raise UsageError(f"malformed condition {text!r}; use a comma-separated list")


def parse_eps(text: str) -> Fraction:
    try:
        eps = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"malformed eps {text!r}; use a rational such as 1/100")
    if eps <= 0:
        raise UsageError("eps must be positive")
    return eps


def _universe(value: Optional[int]) -> int:
    return config.check_universe(value) if value is not None else config.default_universe()


def _dump(model) -> Any:
    return model.model_dump(mode="json", exclude_none=True)


def _error_document(command: str, inputs: Dict[str, Any], e: ApForceError) -> Dict[str, Any]:
    document = {"command": command, "inputs": inputs, "error": {"type": type(e).__name__, "detail": e.detail}}
    if isinstance(e, StageError):
        document["partial"] = [_dump(log) for log in e.completed]
    elif isinstance(e, GenericRunError):
        document["partial"] = e.partial_chain
    return document


# ------------------------------ Runners ------------------------------

def run_analyze(inputs: Dict[str, Any]) -> Dict[str, Any]:
    N = inputs["universe_bound"]
    g = parse_weight_spec(inputs["g"]) if inputs.get("g") else None
    results = []
    for spec in inputs["sets"]:
        A = parse_set_spec(spec, N)
        entry = {"spec": spec, "vdw": _dump(vdw_diagnostic(A)), "spade": _dump(spade_check(A, inputs["ks"], spec))}
        if g is not None:
            entry["summable"] = _dump(summable_diagnostic(A, g))
        results.append(entry)
    document: Dict[str, Any] = {"command": "analyze", "inputs": inputs, "sets": results}
    if inputs.get("shifted_powers"):
        document["shifted_powers"] = _dump(not_p_ideal_witness(inputs["shifted_powers"], N))
    if g is not None and inputs.get("eps"):
        document["tallness"] = {
            "horizon": N,
            "eps": inputs["eps"],
            "holds": tallness_probe(g, N, parse_eps(inputs["eps"])),
        }
    return document


def run_extend(inputs: Dict[str, Any]) -> Dict[str, Any]:
    N = inputs["universe_bound"]
    f = parse_function_spec(inputs["f"], N)
    F = parse_set_spec(inputs["F"], N)
    L = parse_set_spec(inputs["L"], N)
    if inputs["flavor"] == "W":
        _, trace = extend_w(L, F, f, inputs["k"])
    else:
        _, trace = extend_g(L, F, f, parse_weight_spec(inputs["g"]), inputs["k"])
    return {"command": "extend", "inputs": inputs, "trace": _dump(trace)}


def _stage_pairs(stages: Sequence[str], N: int, with_weights: bool):
    pairs = []
    for item in stages:
        if item.lower().startswith("table:") or not with_weights:
            pairs.append((parse_function_spec(item, N), None))
            continue
        f_spec, _, g_spec = item.partition(":")
        pairs.append((parse_function_spec(f_spec, N), parse_weight_spec(g_spec or None)))
    return pairs


def _base(generators: Sequence[Any], N: int) -> FilterBase:
    sets = [parse_set_spec(spec, N) for spec in generators]
    labels = [spec if isinstance(spec, str) else f"list{i}" for i, spec in enumerate(generators)]
    return FilterBase(sets, N, labels)


def run_construct(inputs: Dict[str, Any]) -> Dict[str, Any]:
    N = inputs["universe_bound"]
    mode = inputs["mode"]
    base = _base(inputs["generators"], N)
    if mode == "w-not-q":
        test_set = parse_set_spec(inputs["test_set"], N) if inputs.get("test_set") else None
        result = run_w_not_q(
            [f for f, _ in _stage_pairs(inputs["stages"], N, False)], inputs["ks"], N, seed=base,
            arity=inputs["arity"], margin=inputs["witness_margin"], preprocess_cap=inputs["preprocess_cap"],
            test_set=test_set,
        )
    elif mode == "rapid-no-w":
        result = run_rapid_no_w(
            _stage_pairs(inputs["stages"], N, True), inputs["ks"], N, seed=base,
            arity=inputs["arity"], margin=inputs["witness_margin"], preprocess_cap=inputs["preprocess_cap"],
        )
    else:
        f = parse_function_spec(inputs["f"], N)
        g = parse_weight_spec(inputs["g"]) if inputs["flavor"] == "G" else None
        schedule = [] if inputs["schedule"] == "empty" else build_schedule(base, inputs["ks"], inputs["flavor"], inputs["arity"])
        result = run_generic(parse_set_spec(inputs["start"], N), schedule, base, f, g, inputs["flavor"])
    return {"command": "construct", "inputs": inputs, "result": _dump(result)}


RUNNERS: Dict[str, Callable[[Dict[str, Any]], Dict[str, Any]]] = {
    "analyze": run_analyze,
    "extend": run_extend,
    "construct": run_construct,
}


def execute(command: str, inputs: Dict[str, Any]) -> Tuple[Dict[str, Any], int]:
    """Run a command on resolved inputs; failures become error documents."""
    try:
        return RUNNERS[command](inputs), 0
    except UsageError:
        raise
    except ApForceError as e:
        logger.error(f"❌ {command} failed: {e.detail}")
        return _error_document(command, inputs, e), e.exit_code


# ------------------------------ Inputs ------------------------------

def scenario_inputs(scenario: Scenario) -> Dict[str, Any]:
    """Resolve a scenario (and configuration defaults) into replayable inputs."""
    N = _universe(scenario.universe_bound)
    ks = scenario.ks or [1]
    return {
        "mode": scenario.mode,
        "universe_bound": N,
        "generators": scenario.generators,
        "stages": scenario.stages,
        "ks": ks,
        "flavor": scenario.flavor,
        "f": scenario.f,
        "g": scenario.g,
        "start": sorted(set(scenario.start)),
        "schedule": "all",
        "test_set": scenario.test_set,
        "arity": config.meet_arity(),
        "preprocess_cap": scenario.preprocess_cap if scenario.preprocess_cap is not None else (
            0 if scenario.mode == "w-not-q" else config.preprocess_cap()
        ),
        "witness_margin": scenario.witness_margin or config.witness_margin(),
    }


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return Scenario.model_validate(json.load(fh))
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"could not read scenario {path}: {e}")
    except ValidationError as e:
        raise UsageError(f"invalid scenario {path}: {e.errors()[0]['msg']}")


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    fields: Dict[str, Any] = {"mode": args.mode, "universe_bound": args.universe, "flavor": args.flavor.upper()}
    if args.stages:
        fields["stages"] = [s for item in args.stages for s in item.split(",") if s]
    if args.ks:
        fields["ks"] = parse_ks(args.ks)
    if args.generators:
        fields["generators"] = args.generators
    if args.f:
        fields["f"] = args.f
    if args.g:
        fields["g"] = args.g
    fields["start"] = parse_condition(args.start)
    for name in ("test_set", "preprocess_cap", "witness_margin", "output"):
        if getattr(args, name) is not None:
            fields[name] = getattr(args, name)
    try:
        return Scenario(**fields)
    except ValidationError as e:
        raise UsageError(f"invalid arguments: {e.errors()[0]['msg']}")


# ------------------------------ Output ------------------------------

def emit(document: Dict[str, Any], output: Optional[str]) -> None:
    text = canonical_json(document)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
        logger.info(f"✅ Wrote {output}")
    else:
        sys.stdout.write(text)


def verdict_lines(document: Dict[str, Any]) -> List[str]:
    """One line per verified check or stage."""
    if "error" in document:
        return [f"FAIL {document['command']}: {document['error']['detail']}"]
    lines: List[str] = []
    command = document["command"]
    if command == "analyze":
        for entry in document["sets"]:
            lines.append(f"{entry['spec']}: longest AP {entry['vdw']['longest_ap']}, size {entry['vdw']['size']}")
    elif command == "extend":
        trace = document["trace"]
        lines.append(f"extend {trace['case']} ({trace['rule']}) block {trace.get('block')}: K={trace['K']}")
    else:
        result = document["result"]
        if "stages" in result:
            for stage in result["stages"]:
                checks = " ".join(f"{name}={'ok' if ok else 'FAIL'}" for name, ok in sorted(stage["checks"].items()))
                lines.append(f"stage {stage['stage']} {stage['f']} {stage['branch']}: {checks}")
            if "dichotomy" in result:
                lines.append(f"dichotomy: {result['dichotomy']['branch']}")
        else:
            for name, ok in sorted(result["checks"].items()):
                lines.append(f"{name}: {'ok' if ok else 'FAIL'}")
    return lines


# ------------------------------ Commands ------------------------------

def cmd_analyze(args: argparse.Namespace) -> int:
    N = _universe(args.universe)
    if args.eps is not None:
        parse_eps(args.eps)
    inputs = {
        "sets": args.set or ["empty"],
        "universe_bound": N,
        "g": args.g,
        "ks": parse_ks(args.ks),
        "shifted_powers": args.shifted_powers,
        "eps": args.eps,
    }
    logger.info(f"🔄 Analyzing {len(inputs['sets'])} set(s) below {N}")
    document, code = execute("analyze", inputs)
    emit(document, args.output)
    return code


def cmd_extend(args: argparse.Namespace) -> int:
    flavor = args.flavor.upper()
    inputs: Dict[str, Any] = {
        "flavor": flavor,
        "L": parse_condition(args.L),
        "F": args.F,
        "f": args.f or "identity",
        "k": args.k,
        "universe_bound": _universe(args.universe),
    }
    if flavor == "G":
        inputs["g"] = args.g or "reciprocal"
    logger.info(f"🔄 Extending {inputs['L']} ({flavor}, k={args.k})")
    document, code = execute("extend", inputs)
    emit(document, args.output)
    return code


def _construct_one(inputs: Dict[str, Any], output: Optional[str]) -> Tuple[int, List[str]]:
    document, code = execute("construct", inputs)
    emit(document, output)
    return code, verdict_lines(document)


def cmd_construct(args: argparse.Namespace) -> int:
    if args.scenario:
        scenarios = [load_scenario(path) for path in args.scenario]
    else:
        scenarios = [_scenario_from_args(args)]
    jobs = []
    for scenario in scenarios:
        inputs = scenario_inputs(scenario)
        if not args.scenario and args.schedule:
            inputs["schedule"] = args.schedule
        jobs.append((inputs, scenario.output or (args.output if len(scenarios) == 1 else None)))

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_construct_one, *zip(*jobs)))
    else:
        outcomes = [_construct_one(inputs, output) for inputs, output in jobs]
    for _, lines in outcomes:
        for line in lines:
            print(line, file=sys.stderr)
    return max(code for code, _ in outcomes)


def _read_document(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"could not read {path}: {e}")


def cmd_verify(args: argparse.Namespace) -> int:
    """Recompute a document from its recorded inputs and compare canonically."""
    status = 0
    for path in args.trace:
        document = _read_document(path)
        command = document.get("command")
        if command not in RUNNERS or "inputs" not in document:
            raise UsageError(f"{path} is not an emitted document")
        logger.info(f"🔄 Verifying {path}")
        recomputed, _ = execute(command, document["inputs"])
        if canonical_json(recomputed) == canonical_json(document):
            logger.info(f"✅ {path} reproduces exactly")
        else:
            logger.error(f"❌ {path} does not reproduce from its inputs")
            status = 3
    return status


def cmd_report(args: argparse.Namespace) -> int:
    failed = False
    for path in args.trace:
        document = _read_document(path)
        for line in verdict_lines(document):
            print(f"{path}: {line}")
            failed = failed or "FAIL" in line
    return 3 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apforce", description="Desk-scale AP forcing engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="vdW / summable diagnostics and block-mass report for sets")
    p.add_argument("--set", action="append", help="named set spec (repeatable)")
    p.add_argument("--g", help="weight spec for summable diagnostics")
    p.add_argument("--ks", default="1..8", help="block-mass ks, e.g. 1..8")
    p.add_argument("--shifted-powers", type=int, dest="shifted_powers", help="report A_n = {2^i + n} for n below this")
    p.add_argument("--eps", help="tallness probe threshold, e.g. 1/100")
    p.add_argument("--universe", type=int)
    p.add_argument("--output")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("extend", help="extend one condition into one dense set")
    p.add_argument("--flavor", choices=["w", "g", "W", "G"], required=True)
    p.add_argument("--L", default="", help="comma-separated condition")
    p.add_argument("--F", required=True, help="set spec")
    p.add_argument("--f", help="ground function spec")
    p.add_argument("--g", help="weight spec (G flavor)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--universe", type=int)
    p.add_argument("--output")
    p.set_defaults(handler=cmd_extend)

    p = sub.add_parser("construct", help="run a construction")
    p.add_argument("--mode", choices=["w-not-q", "rapid-no-w", "generic"], default="generic")
    p.add_argument("--stages", action="append", help="stage functions, f or f:g, comma-separated")
    p.add_argument("--ks")
    p.add_argument("--generators", action="append", help="generator set spec (repeatable)")
    p.add_argument("--flavor", choices=["w", "g", "W", "G"], default="W")
    p.add_argument("--f")
    p.add_argument("--g")
    p.add_argument("--start", help="comma-separated start condition")
    p.add_argument("--schedule", choices=["all", "empty"])
    p.add_argument("--test-set", dest="test_set")
    p.add_argument("--preprocess-cap", type=int, dest="preprocess_cap")
    p.add_argument("--witness-margin", type=int, dest="witness_margin")
    p.add_argument("--scenario", nargs="+", help="scenario JSON file(s)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--universe", type=int)
    p.add_argument("--output")
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser("verify", help="recompute documents from their inputs")
    p.add_argument("trace", nargs="+")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("report", help="one-line summary per stage or check")
    p.add_argument("trace", nargs="+")
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ApForceError as e:
        logger.error(f"❌ {e.detail}")
        return e.exit_code
