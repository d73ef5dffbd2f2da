"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 resource cap, 4 promise violation,
5 calibration failure.  Defaults for the global options can be put in a
``key=value`` file named by the ``QWB_CONFIG`` environment variable.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import analysis
from .backtrack import DEFAULT_VERTEX_CAP, BacktrackTree, build_tree, run_backtracking
from .csp import DEFAULT_ALGORITHM, KSatInstance, RngSpec, naive_heuristic, parse_dimacs, random_ksat
from .errors import (CalibrationError, ContractViolation, InputError, PromiseViolation,
                     ResourceError)
from .search import (CALIBRATED_BETA, CALIBRATED_GAMMA, DetectionConfig, calibrate_constants,
                     detect, find_all_in_tree, find_in_tree, unique_find_in_tree)
from .suite import tree_suite
from .walk import DEFAULT_MAX_DIM

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_PROMISE, EXIT_CALIBRATION = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    seed: int = 0
    algorithm_id: str = DEFAULT_ALGORITHM
    delta: float = 0.05
    beta: float = CALIBRATED_BETA
    gamma: float = CALIBRATED_GAMMA
    max_dim: int = DEFAULT_MAX_DIM
    vertex_cap: int = DEFAULT_VERTEX_CAP
    format: str = "json"

    def detection(self) -> DetectionConfig:
        return DetectionConfig(self.beta, self.gamma, self.delta)

    def rng(self) -> RngSpec:
        return RngSpec(self.seed, self.algorithm_id)


def load_config_file(path: str | os.PathLike) -> dict:
    out = {}
    types = {f.name: f.type for f in fields(RunConfig)}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise InputError(f"{path}:{lineno}: unknown config key {key!r}")
        conv = {"int": int, "float": float, "str": str}[types[key]]
        out[key] = conv(val)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = {}
    env = os.environ.get("QWB_CONFIG")
    if env:
        if not Path(env).is_file():
            raise InputError(f"QWB_CONFIG points at missing file {env}")
        cfg.update(load_config_file(env))
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            cfg[f.name] = val
    return RunConfig(**cfg)


def _read_input(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input file {path} not found")
    return p.read_text()


def load_problem(args: argparse.Namespace, cfg: RunConfig):
    """Instance or tree from the input file, or a fresh random instance from --n/--k/--m."""
    if getattr(args, "input", None) is None and args.n is not None:
        return _generate(args, cfg)
    text = _read_input(getattr(args, "input", None))
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        if "vertices" in data:
            return BacktrackTree.from_json(data)
        return KSatInstance.from_json(data)
    return parse_dimacs(text)


def _generate(args, cfg: RunConfig) -> KSatInstance:
    n = _single_n(args)
    if args.k is None:
        raise InputError("--k is required to generate an instance")
    m = args.m
    if m is None:
        if args.alpha is None:
            raise InputError("give --m or --alpha")
        m = round(args.alpha * n)
    return random_ksat(n, args.k, m, cfg.rng())


def _single_n(args) -> int:
    if args.n is None:
        raise InputError("--n is required")
    if len(args.n) != 1:
        raise InputError("this command takes a single --n")
    return args.n[0]


def _tree_for(problem, cfg: RunConfig, eager: bool, depth_limit=None) -> BacktrackTree:
    if isinstance(problem, BacktrackTree):
        return problem
    return build_tree(problem.predicate(eager), naive_heuristic, problem.n,
                      depth_limit=depth_limit, vertex_cap=cfg.vertex_cap)


def _report(args, cfg: RunConfig, body: dict) -> dict:
    out = dict(body)
    out["config"] = asdict(cfg)
    if not args.no_timestamp:
        out["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return out


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj):
    _emit(args, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_gen(args, cfg):
    inst = _generate(args, cfg)
    if cfg.format == "json":
        _emit_json(args, inst.to_json())
    else:
        _emit(args, inst.to_dimacs())


def cmd_solve(args, cfg):
    problem = load_problem(args, cfg)
    if isinstance(problem, BacktrackTree):
        raise InputError("solve needs a CNF instance, not a tree dump")
    stats = run_backtracking(problem.predicate(args.eager), naive_heuristic, problem.n)
    _emit_json(args, _report(args, cfg, stats.to_json()))


def cmd_tree(args, cfg):
    problem = load_problem(args, cfg)
    _emit_json(args, _tree_for(problem, cfg, args.eager, args.depth_limit).to_json())


def cmd_detect(args, cfg):
    tree = _tree_for(load_problem(args, cfg), cfg, args.eager, args.depth_limit)
    n = tree.n
    if tree.marked[0]:
        body = {"verdict": "marked-exists", "root_marked": True, "walk_steps": 0}
    else:
        t_bound = args.t_bound or tree.T
        out = detect(tree, n, t_bound, cfg.detection(), cfg.rng().generator(), max_dim=cfg.max_dim)
        body = {
            "verdict": out.verdict, "root_marked": False, "walk_steps": out.walk_steps,
            "acceptance_probability": out.probability, "ancillas": out.ancillas,
            "repetitions": len(out.accepts), "acceptances": int(out.accepts.sum()),
            "T": tree.T, "t_bound": t_bound,
        }
    _emit_json(args, _report(args, cfg, body))


def cmd_find(args, cfg):
    tree = _tree_for(load_problem(args, cfg), cfg, args.eager)
    res = find_in_tree(tree, cfg.detection(), cfg.rng().generator(), vertex_cap=cfg.vertex_cap,
                       max_dim=cfg.max_dim)
    _emit_json(args, _report(args, cfg, dict(res.to_json(), T=tree.T)))


def cmd_find_all(args, cfg):
    tree = _tree_for(load_problem(args, cfg), cfg, args.eager)
    found, transcript, passes = find_all_in_tree(tree, cfg.detection(), cfg.rng().generator(),
                                                 vertex_cap=cfg.vertex_cap, max_dim=cfg.max_dim)
    body = {"solutions": [tree.assignments[v].as_string() for v in found], "passes": passes, "T": tree.T}
    body.update(transcript.to_json())
    _emit_json(args, _report(args, cfg, body))


def cmd_unique_find(args, cfg):
    tree = _tree_for(load_problem(args, cfg), cfg, args.eager)
    res = unique_find_in_tree(tree, cfg.detection(), cfg.rng().generator(), t_bound=args.t_bound,
                              verify_unique=args.verify_unique, max_dim=cfg.max_dim)
    _emit_json(args, _report(args, cfg, dict(res.to_json(), T=tree.T)))


def cmd_calibrate(args, cfg):
    suite = tree_suite(seed=cfg.seed if args.suite_seed is None else args.suite_seed)
    cal = calibrate_constants([s.tree for s in suite["unmarked"]], [s.tree for s in suite["marked"]],
                              cfg.delta)
    if args.config_out:
        Path(args.config_out).write_text(cal.to_config())
    _emit_json(args, _report(args, cfg, cal.to_json()))


def cmd_expected_size(args, cfg):
    n = _single_n(args)
    if args.k is None:
        raise InputError("--k is required")
    m = args.m if args.m is not None else (round(args.alpha * n) if args.alpha is not None else None)
    if m is None:
        raise InputError("give --m or --alpha")
    model = analysis.expected_tree_size(n, args.k, m)
    if cfg.format == "csv":
        lines = ["level,expected_vertices"] + [f"{i},{2.0 ** t!r}" for i, t in enumerate(model.log2_terms)]
        _emit(args, "\n".join(lines) + "\n")
        return
    body = {"n": n, "k": args.k, "m": m, "E": model.E, "log2_E": model.log2_E,
            "expected_solutions": model.expected_solutions,
            "in_proposition_range": model.in_proposition_range}
    if args.k >= 2 and m > 0:
        C, Cp = analysis.exponent_bounds(args.k, m / n)
        body.update(C=C, C_prime=Cp)
    _emit_json(args, _report(args, cfg, body))


def cmd_experiment(args, cfg):
    ns = args.n or [10, 12, 14, 16]
    rep = analysis.separation_experiment(ns, args.samples, cfg.detection(), cfg.rng(),
                                         vertex_cap=cfg.vertex_cap, max_dim=cfg.max_dim,
                                         workers=args.workers)
    if cfg.format == "csv":
        _emit(args, rep.to_csv())
    else:
        _emit_json(args, _report(args, cfg, rep.summary_json()))
    if rep.partial:
        return EXIT_RESOURCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--algorithm-id", dest="algorithm_id")
    common.add_argument("--delta", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--max-dim", dest="max_dim", type=int)
    common.add_argument("--vertex-cap", dest="vertex_cap", type=int)
    common.add_argument("--format", choices=["json", "csv", "dimacs"])
    common.add_argument("--out")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    common.add_argument("--n", type=int, nargs="+")
    common.add_argument("--k", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--t-bound", dest="t_bound", type=int)
    common.add_argument("--depth-limit", dest="depth_limit", type=int)
    common.add_argument("--eager", action="store_true",
                        help="predicate returns true as soon as every clause is satisfied")

    p = argparse.ArgumentParser(prog="qbacktrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, with_input=True, **kw):
        sp = sub.add_parser(name, parents=[common], **kw)
        if with_input:
            sp.add_argument("input", nargs="?", help="DIMACS, instance JSON or tree JSON ('-' for stdin)")
        sp.set_defaults(func=func)
        return sp

    add("gen", cmd_gen, with_input=False, help="random k-SAT instance")
    add("solve", cmd_solve, help="classical backtracking")
    add("tree", cmd_tree, help="materialize and dump the backtracking tree")
    add("detect", cmd_detect, help="detection with repeated phase estimation")
    add("find", cmd_find, help="find one marked vertex")
    add("find-all", cmd_find_all, help="find every marked vertex")
    uf = add("unique-find", cmd_unique_find, help="search under a unique-solution promise")
    uf.add_argument("--verify-unique", action="store_true", help="brute-force check the promise")
    cal = add("calibrate", cmd_calibrate, with_input=False, help="calibrate beta and gamma")
    cal.add_argument("--suite-seed", type=int, default=2015)
    cal.add_argument("--config-out", help="write key=value config here")
    add("expected-size", cmd_expected_size, with_input=False, help="exact expected NaiveBt tree size")
    ex = add("experiment", cmd_experiment, with_input=False, help="average-case separation harness")
    ex.add_argument("--samples", type=int, default=200)
    ex.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.format == "dimacs" and args.command != "gen":
            raise InputError("--format dimacs only applies to gen")
        if args.command == "gen" and args.format is None:
            cfg.format = "dimacs"
        rc = args.func(args, cfg)
        return EXIT_OK if rc is None else rc
    except (InputError, ContractViolation, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except PromiseViolation as exc:
        print(f"promise violation: {exc}", file=sys.stderr)
        return EXIT_PROMISE
    except CalibrationError as exc:
        print(f"calibration failure: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION


if __name__ == "__main__":
    sys.exit(main())
