"""scenario-forge command line.

Exit status: 0 success, 1 diagnostics (invalid scenario, schema or rule
failures, failed conformance), 2 I/O or usage problems. Errors go to stderr
as one JSON document.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .detailing import DetailingError
from .opendrive import check_ir, read_opendrive
from .openscenario import RulesFileError, logic_file, parse_rules_file, read_init
from .parameter_space import check_valuation
from .pipeline import CompileError, compile_file, realize
from .scenario_model import ScenarioError
from .svg import render_svg
from .validation import validate_opendrive, validate_openscenario
from .valuation import InfeasibleRuleError, SamplingError, sample_concrete

EXIT_OK, EXIT_DIAG, EXIT_IO = 0, 1, 2
FORMATS = ("xodr", "xosc", "rules")


class Failure(Exception):
    def __init__(self, code: int, errors: list[dict]):
        self.code = code
        self.errors = errors
        super().__init__(errors)


def _diag_errors(path: str, exc: Exception) -> list[dict]:
    if isinstance(exc, ScenarioError):
        return [{"file": path, "stage": "parse", **d.as_dict()} for d in exc.diagnostics]
    if isinstance(exc, CompileError):
        return [{"file": path, "stage": exc.stage, "message": m} for m in exc.errors]
    return [{"file": path, "stage": type(exc).__name__, "message": str(exc)}]


def _compile(path: str):
    try:
        return compile_file(path)
    except OSError as exc:
        raise Failure(EXIT_IO, [{"file": path, "stage": "io", "message": str(exc)}]) from None
    except (ScenarioError, CompileError, DetailingError, InfeasibleRuleError, ValueError) as exc:
        raise Failure(EXIT_DIAG, _diag_errors(path, exc)) from None


def _out_dir(args, path: str) -> Path:
    out = Path(args.out) if args.out else Path(path).parent
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise Failure(EXIT_IO, [{"file": str(out), "stage": "io", "message": str(exc)}]) from None
    return out


def _write(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise Failure(EXIT_IO, [{"file": str(path), "stage": "io", "message": str(exc)}]) from None


# -- commands (each returns a JSON-able result for one input) ---------------------

def cmd_compile(path: str, args) -> dict:
    c = _compile(path)
    if args.n:
        c = realize(c.fs, c.space, c.timeline, c.valuation, _samples(c.space, args, path))
    out = _out_dir(args, path)
    wanted = FORMATS if args.format == "all" else (args.format,)
    written = []
    for key in wanted:
        target = out / c.file_names()[key]
        _write(target, c.outputs()[key])
        written.append(str(target))
    return {"file": path, "written": written}


def _samples(space, args, path):
    try:
        return sample_concrete(space, args.seed, args.n)
    except (SamplingError, InfeasibleRuleError) as exc:
        raise Failure(EXIT_DIAG, _diag_errors(path, exc)) from None


def cmd_sample(path: str, args) -> dict:
    c = _compile(path)
    vals = _samples(c.space, args, path)
    return {"scenario": c.name, "seed": args.seed,
            "samples": [{str(r): v.values[r] for r in c.space.order} for v in vals]}


def cmd_check(path: str, args) -> dict:
    c = _compile(path)
    trace, report = c.run(args.dt)
    if args.out:
        lane_ids = c.storyboard.mapping.lane_ids
        _write(_out_dir(args, path) / f"{c.name}.trace.csv", trace.to_csv(lane_ids).encode("utf-8"))
    return {"file": path, "scenario": c.name, "ok": report.ok, **report.as_dict()}


def cmd_preview(path: str, args) -> dict:
    c = _compile(path)
    target = _out_dir(args, path) / f"{c.name}.svg"
    _write(target, render_svg(c.road, c.storyboard).encode("utf-8"))
    return {"file": path, "written": [str(target)]}


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise Failure(EXIT_IO, [{"file": path, "stage": "io", "message": str(exc)}]) from None


def _validate_xosc(path: str, data: bytes) -> list[str]:
    problems = validate_openscenario(data)
    if problems:
        return problems
    road_path = Path(path).parent / logic_file(data)
    if not road_path.exists():
        return [f"LogicFile {road_path.name} not found next to the scenario"]
    road = read_opendrive(road_path.read_bytes())
    for actor, road_id, lane_id, s in read_init(data):
        if road_id != road.road_id:
            problems.append(f"{actor}: unknown road {road_id}")
        elif lane_id not in {ln.id for ln in road.lane_sections[0].lanes}:
            problems.append(f"{actor}: lane {lane_id} not on road")
        elif not 0.0 <= s <= road.length:
            problems.append(f"{actor}: s={s} outside road")
    return problems


def _validate_rules(data: bytes) -> list[str]:
    try:
        rf = parse_rules_file(data.decode("utf-8"))
    except (RulesFileError, ValueError, KeyError) as exc:
        return [f"rules file: {exc}"]
    problems = [f"defaults: {v.subject}: {v.message}" for v in check_valuation(rf.space, rf.defaults)]
    for i, ex in enumerate(rf.examples):
        problems += [f"example {i}: {v.subject}: {v.message}" for v in check_valuation(rf.space, ex)]
    return problems


def cmd_validate(path: str, args) -> dict:
    if path.endswith(".fscn"):
        c = _compile(path)
        problems = validate_opendrive(c.xodr) + validate_openscenario(c.xosc) + check_ir(c.road)
        problems += _validate_rules(c.rules.encode("utf-8"))
    else:
        data = _read(path)
        if path.endswith(".xodr"):
            problems = validate_opendrive(data)
            if not problems:
                problems = check_ir(read_opendrive(data))
        elif path.endswith(".xosc"):
            problems = _validate_xosc(path, data)
        elif path.endswith(".json"):
            problems = _validate_rules(data)
        else:
            raise Failure(EXIT_IO, [{"file": path, "stage": "usage", "message": "unknown file type"}])
    if problems:
        raise Failure(EXIT_DIAG, [{"file": path, "stage": "validate", "message": p} for p in problems])
    return {"file": path, "valid": True}


COMMANDS = {
    "compile": cmd_compile,
    "validate": cmd_validate,
    "sample": cmd_sample,
    "check": cmd_check,
    "preview": cmd_preview,
}


def _one(job):
    name, path, args = job
    try:
        return path, COMMANDS[name](path, args), None
    except Failure as f:
        return path, None, f


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scenario-forge", description="Compile keyword freeway scenarios.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("inputs", nargs="+", help=".fscn inputs (validate also takes emitted files)")
    p.add_argument("--out", help="output directory (default: next to each input)")
    p.add_argument("--seed", type=int, default=0, help="sampler seed (U64)")
    p.add_argument("--n", type=int, default=0, help="number of sampled valuations")
    p.add_argument("--dt", type=float, default=0.02, help="checker step in seconds")
    p.add_argument("--format", choices=FORMATS + ("all",), default="all")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    if args.n < 0 or not 0 <= args.seed < 2 ** 64 or not 0.0 < args.dt <= 0.1 or args.jobs < 1:
        json.dump({"errors": [{"stage": "usage", "message": "--n >= 0, 0 <= --seed < 2**64, "
                               "0 < --dt <= 0.1, --jobs >= 1"}]}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_IO

    jobs = [(args.command, path, args) for path in args.inputs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_one, jobs))
    else:
        results = [_one(j) for j in jobs]

    code, errors, done = EXIT_OK, [], []
    for _, result, failure in results:
        if failure is not None:
            code = max(code, failure.code)
            errors += failure.errors
        else:
            done.append(result)
    if args.command == "sample" and done:
        out = Path(args.out) if args.out else Path(".")
        try:
            out.mkdir(parents=True, exist_ok=True)
            doc = done[0] if len(done) == 1 else {"scenarios": done}
            (out / "samples.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            code = EXIT_IO
            errors.append({"file": str(out), "stage": "io", "message": str(exc)})
    if args.command == "check":
        if any(not r["ok"] for r in done):
            code = max(code, EXIT_DIAG)
    if done:
        json.dump(done if len(done) > 1 else done[0], sys.stdout, sort_keys=True, indent=2)
        sys.stdout.write("\n")
    if errors:
        json.dump({"errors": errors}, sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
