"""Command-line interface: ``texpl <command> ...``.

Exit codes:
  0  success (including "no explanation exists" and "violated" verdicts)
  1  unexpected internal error
  2  bad command-line usage
  3  model file cannot be read, parsed or validated
  4  instance invalid for the model
  5  query unsupported for this model (variant, mode or attack mismatch)
  6  time limit reached
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .encode import ATTACK_VARIANTS, EncodingError
from .explain import (
    AXP,
    CXP,
    ExplainerConfig,
    ExplanationProblem,
    NoExplanation,
    enumerate_xps,
    find_axp,
    find_cxp,
    smallest_axp,
    smallest_cxp,
)
from .formula import dump_cnf, dump_dimacs, parse_dimacs
from .maxsat import MaxSatInfeasible, MaxSatState
from .model import (
    InstanceError,
    ModelError,
    bundled_model_path,
    class_scores,
    fmt_number,
    load_model_file,
    parse_instance,
    predict,
)
from .sat import SatSolver, SolverTimeout
from .verify import FairnessQuery, RobustnessQuery, UnsupportedVariant, check_fairness, check_robustness

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_MODEL, EXIT_INSTANCE, EXIT_UNSUPPORTED, EXIT_TIMEOUT = range(7)
SCHEMA = "texpl.report"
SCHEMA_VERSION = 1
TIME_LIMIT_ENV = "TEXPL_TIME_LIMIT"


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    instances: list = field(default_factory=list)  # raw value lists
    explainer: ExplainerConfig = field(default_factory=ExplainerConfig)
    output: str = "human"
    seed: int = 0
    jobs: int = 1
    timings: bool = False
    options: dict = field(default_factory=dict)  # command-specific arguments


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ inputs


def resolve_model(name: str):
    path = Path(name)
    if not path.exists():
        bundled = bundled_model_path(name.removesuffix(".json"))
        if not bundled.exists():
            raise CliError(EXIT_MODEL, f"model not found: {name}")
        path = bundled
    try:
        return load_model_file(path)
    except ModelError as err:
        raise CliError(EXIT_MODEL, f"{path}: {err}") from None
    except OSError as err:
        raise CliError(EXIT_MODEL, f"{path}: {err.strerror}") from None


def _split_row(text: str) -> list:
    return [x.strip() for x in text.split(",")]


def read_instances(args, feature_names) -> list:
    rows = []
    if getattr(args, "instance", None):
        rows += [_split_row(x) for x in args.instance]
    if getattr(args, "instance_file", None):
        for line in Path(args.instance_file).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append(_split_row(line))
    if getattr(args, "csv", None):
        with open(args.csv, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [n for n in feature_names if n not in (reader.fieldnames or [])]
            if missing:
                raise CliError(EXIT_INSTANCE, f"{args.csv}: missing columns {missing}")
            table = [[r[n] for n in feature_names] for r in reader]
        if args.row is not None:
            if not 0 <= args.row < len(table):
                raise CliError(EXIT_INSTANCE, f"{args.csv}: row {args.row} out of range (0..{len(table) - 1})")
            table = [table[args.row]]
        rows += table
    return rows


def explainer_config(args) -> ExplainerConfig:
    env = os.environ.get(TIME_LIMIT_ENV)
    limit = args.time_limit if args.time_limit is not None else (float(env) if env else None)
    return ExplainerConfig(
        mode=args.mode,
        attack=args.attack,
        stratify=not args.no_stratify,
        early_termination=not args.no_early_termination,
        reuse_cores=not args.no_core_reuse,
        class_order=not args.no_class_order,
        polarity_hints=not args.no_polarity_hints,
        use_cores=not args.no_core_pruning,
        decay=args.decay,
        period=args.period,
        time_limit=limit,
    )


# ----------------------------------------------------------------- commands


def _instance(e, raw):
    try:
        return parse_instance(e, raw)
    except InstanceError as err:
        raise CliError(EXIT_INSTANCE, str(err)) from None


def _problem(e, raw, cfg: RunConfig) -> ExplanationProblem:
    try:
        return ExplanationProblem(e, _instance(e, raw), cfg.explainer)
    except (EncodingError, ValueError) as err:
        if isinstance(err, InstanceError):
            raise
        raise CliError(EXIT_UNSUPPORTED, str(err)) from None


def _xp_record(p: ExplanationProblem, xp, cfg: RunConfig) -> dict:
    d = xp.to_dict(p)
    if not cfg.timings:
        d["stats"] = {k: v for k, v in d["stats"].items() if k != "seconds"}
    return d


def _header(e, v, p=None) -> dict:
    rec = {
        "instance": [_plain(x) for x in v],
        "prediction": e.classes[predict(e, v)],
    }
    if p is not None:
        rec["mode"] = p.mode
    return rec


def _plain(x):
    return x if isinstance(x, (str, int)) else fmt_number(x)


def cmd_predict(e, raw, cfg):
    v = _instance(e, raw)
    scores = class_scores(e, v)
    return {
        "instance": [_plain(x) for x in v],
        "prediction": e.classes[predict(e, v)],
        "scores": {c: fmt_number(s) for c, s in zip(e.classes, scores)},
    }


def cmd_explain(e, raw, cfg):
    p = _problem(e, raw, cfg)
    kind = cfg.options["kind"]
    rec = _header(e, p.instance, p)
    try:
        if kind == AXP:
            xp = smallest_axp(p) if cfg.options["smallest"] else find_axp(p)
        else:
            xp = smallest_cxp(p) if cfg.options["smallest"] else find_cxp(p)
    except NoExplanation as err:
        rec["explanation"] = None
        rec["note"] = str(err)
        return rec
    rec["explanation"] = _xp_record(p, xp, cfg)
    return rec


def cmd_enumerate(e, raw, cfg):
    p = _problem(e, raw, cfg)
    rec = _header(e, p.instance, p)
    kinds = cfg.options["kinds"]
    limit = cfg.options["limit"]
    rec["explanations"] = [_xp_record(p, xp, cfg) for xp in enumerate_xps(p, limit, kinds)]
    return rec


def cmd_robustness(e, raw, cfg):
    v = _instance(e, raw)
    try:
        verdict = check_robustness(RobustnessQuery(e, v, cfg.options["delta"]), cfg.explainer.time_limit)
    except (UnsupportedVariant, ValueError) as err:
        if isinstance(err, InstanceError):
            raise
        raise CliError(EXIT_UNSUPPORTED, str(err)) from None
    rec = _header(e, v)
    rec["delta"] = cfg.options["delta"]
    rec["robust"] = verdict.holds
    rec["verdict"] = verdict.to_dict(e)
    return rec


COMMANDS = {"predict": cmd_predict, "explain": cmd_explain, "enumerate": cmd_enumerate, "robustness": cmd_robustness}


def _run_one(job):
    """Worker entry point: must be importable for process pools."""
    command, e, raw, cfg = job
    try:
        return COMMANDS[command](e, raw, cfg), None
    except CliError as err:
        return None, (err.code, str(err))
    except SolverTimeout:
        return None, (EXIT_TIMEOUT, "time limit reached")


# ---------------------------------------------------------------- rendering


def render_human(rec: dict, command: str) -> str:
    lines = []
    if "instance" in rec:
        lines.append(f"instance: ({', '.join(map(str, rec['instance']))}) -> {rec['prediction']}")
    if command == "predict":
        lines.append("scores: " + ", ".join(f"{c}={s}" for c, s in rec["scores"].items()))
        lines.append(rec["prediction"])
    elif command == "explain":
        if rec["explanation"] is None:
            lines.append(f"no explanation: {rec['note']}")
        else:
            lines += _render_xp(rec["explanation"])
    elif command == "enumerate":
        for xp in rec["explanations"]:
            lines += _render_xp(xp)
        lines.append(f"{len(rec['explanations'])} explanation(s)")
    elif command in ("robustness", "fairness"):
        v = rec["verdict"]
        if command == "robustness":
            lines.append(f"delta {rec['delta']}: " + ("robust" if rec["robust"] else "not robust"))
        else:
            lines.append("protected: " + ", ".join(rec["protected"]))
            lines.append("fair" if rec["fair"] else "unfair")
        for w in v.get("witness", []):
            pt = ", ".join(f"{k}={x}" for k, x in w["point"].items())
            lines.append(f"  ({pt}) -> {w['class']}  scores [{', '.join(w['scores'])}]")
    else:
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines)


def _render_xp(xp: dict) -> list:
    names = ", ".join(xp["features"]) or "(none)"
    out = [f"{xp['kind']}: {{{names}}}"]
    out += [f"  {d}" for d in xp["intervals"]]
    if xp.get("witness"):
        w = xp["witness"]
        out.append(f"  witness ({', '.join(w['point'])}) -> {w['class']}")
    stats = ", ".join(f"{k}={v}" for k, v in xp["stats"].items())
    out.append(f"  [{stats}]")
    return out


class Writer:
    def __init__(self, cfg: RunConfig, out=None):
        self.cfg = cfg
        self.out = out or sys.stdout
        if cfg.output == "jsonl":
            header = {"schema": SCHEMA, "version": SCHEMA_VERSION, "command": cfg.command, "seed": cfg.seed}
            self._line(header)

    def _line(self, obj):
        self.out.write(json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n")

    def record(self, rec: dict) -> None:
        if self.cfg.output == "jsonl":
            self._line(rec)
        else:
            self.out.write(render_human(rec, self.cfg.command) + "\n")

    def error(self, code: int, message: str) -> None:
        if self.cfg.output == "jsonl":
            self._line({"error": message, "exit_code": code})
        print(f"error: {message}", file=sys.stderr)


# ------------------------------------------------------------------- parser


def _add_model_args(sp, instances=True):
    sp.add_argument("--model", "-m", required=True, help="model JSON file or bundled name (iris_bt, iris_rfmv, iris_rfwv)")
    if instances:
        g = sp.add_argument_group("instances")
        g.add_argument("--instance", "-i", action="append", help="comma-separated feature values (repeatable)")
        g.add_argument("--instance-file", help="file with one comma-separated instance per line")
        g.add_argument("--csv", help="CSV file with a header row naming the features")
        g.add_argument("--row", type=int, help="0-based data row of --csv to use (default: all rows)")
        sp.add_argument("--jobs", "-j", type=int, default=1, help="worker processes for multiple instances")


def _add_solver_args(sp):
    g = sp.add_argument_group("solver")
    g.add_argument("--mode", choices=("sat", "maxsat"), help="oracle route (default: sat for majority vote, maxsat otherwise)")
    g.add_argument("--attack", choices=ATTACK_VARIANTS, default="pairwise", help="majority-vote attack encoding")
    g.add_argument("--no-stratify", action="store_true", help="disable weight stratification")
    g.add_argument("--no-early-termination", action="store_true", help="always solve MaxSAT calls to optimality")
    g.add_argument("--no-core-reuse", action="store_true", help="do not replay cores across calls")
    g.add_argument("--no-class-order", action="store_true", help="fixed opponent order instead of the activity heap")
    g.add_argument("--no-polarity-hints", action="store_true", help="do not seed solver phases from witnesses")
    g.add_argument("--no-core-pruning", action="store_true", help="do not use oracle cores to skip features")
    g.add_argument("--decay", type=float, default=0.95, help="activity decay factor of the opponent heap")
    g.add_argument("--period", type=int, default=32, help="heap decay period in updates")
    g.add_argument("--time-limit", type=float, help=f"seconds per query (default: ${TIME_LIMIT_ENV} or none)")


def _add_output_args(sp):
    sp.add_argument("--output", "-o", choices=("human", "jsonl"), default="human")
    sp.add_argument("--seed", type=int, default=0, help="recorded in the report header; all algorithms are deterministic")
    sp.add_argument("--timings", action="store_true", help="include wall-clock times in reports")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="texpl",
        description="Formal explanations (AXp/CXp) and verification for tree ensembles.",
        epilog=__doc__.split("\n", 2)[2],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sp = sub.add_parser("predict", help="class scores and prediction")
    _add_model_args(sp)
    _add_output_args(sp)

    sp = sub.add_parser("explain", help="one AXp or CXp")
    _add_model_args(sp)
    kind = sp.add_mutually_exclusive_group()
    kind.add_argument("--axp", action="store_const", dest="kind", const=AXP, help="abductive explanation (default)")
    kind.add_argument("--cxp", action="store_const", dest="kind", const=CXP, help="contrastive explanation")
    sp.add_argument("--smallest", action="store_true", help="minimum-size instead of subset-minimal")
    _add_solver_args(sp)
    _add_output_args(sp)

    sp = sub.add_parser("enumerate", help="all (or the first --limit) AXps and CXps")
    _add_model_args(sp)
    sp.add_argument("--limit", type=int, help="stop after this many explanations")
    sp.add_argument("--kinds", default="axp,cxp", help="comma-separated subset of axp,cxp")
    _add_solver_args(sp)
    _add_output_args(sp)

    sp = sub.add_parser("verify", help="fairness or robustness queries (majority vote only)")
    vsub = sp.add_subparsers(dest="property", required=True, metavar="PROPERTY")
    fp = vsub.add_parser("fairness", help="individual fairness w.r.t. protected features")
    _add_model_args(fp, instances=False)
    fp.add_argument("--protected", "-p", required=True, help="comma-separated protected feature names")
    fp.add_argument("--time-limit", type=float)
    _add_output_args(fp)
    rp = vsub.add_parser("robustness", help="no class change within delta changed features")
    _add_model_args(rp)
    rp.add_argument("--delta", "-d", type=int, required=True, help="number of features allowed to change")
    rp.add_argument("--norm", default="l0", help="distance (only l0 is supported)")
    rp.add_argument("--time-limit", type=float)
    _add_output_args(rp)

    sp = sub.add_parser("encode", help="write the entailment formula of an instance as DIMACS")
    _add_model_args(sp)
    sp.add_argument("--dump", metavar="FILE", default="-", help="output file (default: stdout)")
    sp.add_argument("--opponent", help="opponent class for the weighted objective (default: first)")
    sp.add_argument("--names", metavar="FILE", help="also write a JSON map from variable to name")
    _add_solver_args(sp)

    sp = sub.add_parser("sat", help="solve a DIMACS CNF file")
    sp.add_argument("file")
    sp.add_argument("--assume", default="", help="comma-separated assumption literals")
    sp = sub.add_parser("maxsat", help="solve a weighted DIMACS file")
    sp.add_argument("file")
    sp.add_argument("--assume", default="", help="comma-separated assumption literals")

    sp = sub.add_parser("oracle")  # brute-force cross-check, kept out of the main help
    _add_model_args(sp)
    sp.add_argument("--budget", type=int, default=10**7)
    _add_output_args(sp)
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "oracle"]
    return ap


# ------------------------------------------------------------------ drivers


def _batch(e, cfg: RunConfig, writer: Writer) -> int:
    if not cfg.instances:
        raise CliError(EXIT_USAGE, "no instance given (use --instance, --instance-file or --csv)")
    jobs = [(cfg.command, e, raw, cfg) for raw in cfg.instances]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = map(_run_one, jobs)
    code = EXIT_OK
    for rec, err in results:
        if err is None:
            writer.record(rec)
        else:
            writer.error(*err)
            code = code or err[0]
    return code


def _encode(e, args, cfg: RunConfig) -> None:
    raws = cfg.instances
    if len(raws) != 1:
        raise CliError(EXIT_USAGE, "encode needs exactly one instance")
    p = _problem(e, raws[0], cfg)
    lits = [p.assumption[i] for i in p.free]
    header = "c assumptions " + " ".join(map(str, lits)) + "\n"
    if p.mode == "sat":
        text = header + dump_cnf(p.ctx.cnf)
    else:
        names = {c: k for k, c in enumerate(e.classes)}
        if args.opponent is None:
            opp = min(p.objectives)
        elif args.opponent in names and names[args.opponent] in p.objectives:
            opp = names[args.opponent]
        else:
            raise CliError(EXIT_USAGE, f"--opponent must be a class other than {e.classes[p.prediction]}")
        text = header + f"c objective {e.classes[opp]} minus {e.classes[p.prediction]}\n" + dump_dimacs(p.objectives[opp])
    if args.dump == "-":
        sys.stdout.write(text)
    else:
        Path(args.dump).write_text(text)
    if args.names:
        f = p.ctx.cnf
        mapping = {str(v): f.name_of(v) for v in range(1, f.nvars + 1) if f.name_of(v)}
        Path(args.names).write_text(json.dumps(mapping, indent=1, ensure_ascii=False) + "\n")


def _assumptions(text: str) -> list:
    return [int(x) for x in text.replace(",", " ").split()]


def _sat(args) -> int:
    doc = parse_dimacs(Path(args.file).read_text())
    s = SatSolver(doc.to_cnf().clauses)
    s._grow(doc.nvars)
    assume = _assumptions(args.assume)
    if s.solve(assume):
        print("s SATISFIABLE")
        print("v " + " ".join(str(x) for x in s.model_lits()[: doc.nvars]) + " 0")
    else:
        print("s UNSATISFIABLE")
        if assume:
            print("c core " + " ".join(map(str, s.core)))
    return EXIT_OK


def _maxsat(args) -> int:
    doc = parse_dimacs(Path(args.file).read_text())
    w = doc.to_wcnf()
    try:
        r = MaxSatState(w).maximize(_assumptions(args.assume))
    except MaxSatInfeasible:
        print("s UNSATISFIABLE")
        return EXIT_OK
    falsified = w.upper_bound() - r.value
    print(f"o {fmt_number(falsified * doc.scale)}")
    print("s OPTIMUM FOUND")
    print(f"c objective {fmt_number(r.value)}")
    print("v " + " ".join(str(v if r.holds(v) else -v) for v in range(1, doc.nvars + 1)) + " 0")
    return EXIT_OK


def _oracle(e, cfg: RunConfig, writer: Writer) -> int:
    from .oracle import BudgetExceeded, brute_xps, cell_grid

    try:
        grid = cell_grid(e, cfg.options["budget"])
    except BudgetExceeded as err:
        raise CliError(EXIT_UNSUPPORTED, str(err)) from None
    names = lambda s: sorted(e.features[i].name for i in s)
    for raw in cfg.instances or [[]]:
        if not raw:
            writer.record({"cells": len(grid), "interval_counts": list(grid.counts)})
            continue
        v = _instance(e, raw)
        axps, cxps = brute_xps(e, v, grid=grid)
        rec = _header(e, v)
        rec["cells"] = len(grid)
        rec["axps"] = [names(s) for s in axps]
        rec["cxps"] = [names(s) for s in cxps]
        writer.record(rec)
    return EXIT_OK


def run(argv=None, out=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    command = args.command
    if command == "verify":
        command = args.property
    if command == "sat":
        return _sat(args)
    if command == "maxsat":
        return _maxsat(args)

    cfg = RunConfig(command, args.model)
    if hasattr(args, "output"):
        cfg.output, cfg.seed, cfg.timings = args.output, args.seed, args.timings
    cfg.jobs = getattr(args, "jobs", 1)
    if hasattr(args, "mode"):
        cfg.explainer = explainer_config(args)
    elif getattr(args, "time_limit", None) is not None or os.environ.get(TIME_LIMIT_ENV):
        cfg.explainer.time_limit = args.time_limit or float(os.environ[TIME_LIMIT_ENV])
    writer = None
    try:
        e = resolve_model(args.model)
        cfg.instances = read_instances(args, [f.name for f in e.features])
        writer = Writer(cfg, out)
        if command == "explain":
            cfg.options = {"kind": args.kind or AXP, "smallest": args.smallest}
        elif command == "enumerate":
            kinds = {"axp": AXP, "cxp": CXP}
            try:
                chosen = tuple(kinds[k.strip().lower()] for k in args.kinds.split(","))
            except KeyError:
                raise CliError(EXIT_USAGE, "--kinds takes a comma-separated subset of axp,cxp") from None
            cfg.options = {"kinds": chosen, "limit": args.limit}
        elif command == "robustness":
            if args.norm != "l0":
                raise CliError(EXIT_UNSUPPORTED, f"only the l0 (changed-feature count) distance is supported, got {args.norm!r}")
            cfg.options = {"delta": args.delta}
        elif command == "oracle":
            cfg.options = {"budget": args.budget}
            return _oracle(e, cfg, writer)
        elif command == "encode":
            _encode(e, args, cfg)
            return EXIT_OK
        elif command == "fairness":
            return _fairness(e, args, cfg, writer)
        return _batch(e, cfg, writer)
    except CliError as err:
        if writer is not None:
            writer.error(err.code, str(err))
        else:
            print(f"error: {err}", file=sys.stderr)
        return err.code
    except SolverTimeout:
        print("error: time limit reached", file=sys.stderr)
        return EXIT_TIMEOUT
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


def _fairness(e, args, cfg: RunConfig, writer: Writer) -> int:
    index = {f.name: f.index for f in e.features}
    names = [x.strip() for x in args.protected.split(",") if x.strip()]
    unknown = [n for n in names if n not in index]
    if unknown:
        raise CliError(EXIT_USAGE, f"unknown features {unknown}; known: {list(index)}")
    try:
        verdict = check_fairness(FairnessQuery(e, [index[n] for n in names]), cfg.explainer.time_limit)
    except (UnsupportedVariant, ValueError) as err:
        raise CliError(EXIT_UNSUPPORTED, str(err)) from None
    writer.record({"protected": names, "fair": verdict.holds, "verdict": verdict.to_dict(e)})
    return EXIT_OK


def main(argv=None) -> None:
    try:
        code = run(argv)
    except KeyboardInterrupt:
        code = 130
    sys.exit(code)


if __name__ == "__main__":
    main()
