"""
Command line interface.

Subcommands:
    generate   params -> instance file
    reduce     instance + mode -> reduced instance + certificate
    solve      instance + solver -> solution
    translate  certificate + reduced instance + reduced solution -> original solution
    verify     instance + solution -> validation report (exit 0 / 1)
    bench      bench config -> report files

Exit codes: 0 success, 1 failed verification or bench invariant, 2 error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from marketchoice import config
from marketchoice.bench import BenchInvariantError, bench_run, load_bench_config
from marketchoice.formats import (
    certificate_to_dict,
    dumps,
    instance_to_dict,
    load_certificate,
    load_instance,
    load_solution,
    save_certificate,
    save_json,
    solution_to_dict,
)
from marketchoice.generators import GenParams, generate_instance, set_cover_instance
from marketchoice.model import MarketChoiceError, ProblemKind, verify
from marketchoice.reductions import reduce_instance, restore_source, translate_solution
from marketchoice.solvers import SOLVER_NAMES, Neighborhood, SolverParams, solve

logger = logging.getLogger(__name__)


def _emit(data: dict, out: Optional[str]):
    if out:
        save_json(data, out)
        logger.info(f"📄 Saved {out}")
    else:
        sys.stdout.write(dumps(data))


def _parse_subsets(text: str) -> List[List[int]]:
    """'0,1;1,2;2' -> [[0, 1], [1, 2], [2]]"""
    return [[int(e) for e in part.split(",") if e.strip()] for part in text.split(";")]


def cmd_generate(args) -> int:
    if args.set_cover:
        subsets = _parse_subsets(args.set_cover)
        universe = args.universe if args.universe is not None else 1 + max((e for s in subsets for e in s), default=-1)
        inst = set_cover_instance(universe, subsets)
    else:
        params = GenParams(
            kind=args.kind, m=args.m, n=args.n, grid=args.grid,
            max_capacity=args.max_capacity, max_demand=args.max_demand,
            max_penalty=args.max_penalty, max_opening_cost=args.max_opening_cost,
            max_cost=args.max_cost, seed=args.seed,
        )
        inst = generate_instance(params, args.mode)
    _emit(instance_to_dict(inst), args.out)
    return 0


def cmd_reduce(args) -> int:
    inst = load_instance(args.instance)
    reduced, cert = reduce_instance(inst, args.mode)
    logger.info(f"Reduced {inst} via {cert.direction.value} ({cert.mode.value}) to {reduced}")
    _emit(instance_to_dict(reduced), args.out)
    if args.certificate:
        save_certificate(cert, args.certificate)
    elif args.out:
        save_certificate(cert, Path(args.out).with_suffix(".cert.json"))
    else:
        sys.stdout.write(dumps(certificate_to_dict(cert)))
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    params = SolverParams(max_iterations=args.max_iterations, neighborhood=args.neighborhood, seed=args.seed)
    sol = solve(inst, args.solver, mode=args.mode, params=params, limit=args.limit)
    logger.info(f"{args.solver} on {inst}: objective {sol.objective}")
    _emit(solution_to_dict(sol), args.out)
    return 0


def cmd_translate(args) -> int:
    cert = load_certificate(args.certificate)
    reduced = load_instance(args.reduced)
    sol = load_solution(args.solution)
    translated = translate_solution(cert, reduced, sol)
    source = restore_source(cert, reduced)
    logger.info(f"Translated {cert.direction.value} solution onto {source}: objective {translated.objective}")
    _emit(solution_to_dict(translated), args.out)
    return 0


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    sol = load_solution(args.solution)
    report = verify(inst, sol)
    _emit(report.to_dict(), args.out)
    if report.ok:
        logger.info("✅ Solution is feasible")
        return 0
    logger.error(f"❌ {report.summary()}")
    return 1


def cmd_bench(args) -> int:
    bench_config = load_bench_config(args.config)
    if args.workers is not None:
        bench_config = bench_config.model_copy(update={"workers": args.workers})
    if args.limit is not None:
        bench_config = bench_config.model_copy(update={"oracle_limit": args.limit})
    output_dir = Path(args.out) if args.out else config.OUTPUT_DIR / "bench"
    show_progress = not args.quiet and sys.stderr.isatty()
    report = bench_run(bench_config, output_dir, show_progress=show_progress)
    print(report.render_table(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_tmc.py",
        description="Transportation with market choice and facility location: reductions, solvers, bench")
    parser.add_argument("--log-level", default=None, help="Logging level (default from MARKETCHOICE_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Generate a random instance")
    gen.add_argument("--kind", choices=[k.value for k in ProblemKind], default="tmc")
    gen.add_argument("--mode", choices=["metric", "general"], default="metric")
    gen.add_argument("--m", type=int, default=2, help="Number of facilities")
    gen.add_argument("--n", type=int, default=2, help="Number of clients")
    gen.add_argument("--grid", type=int, default=4)
    gen.add_argument("--max-capacity", type=int, default=10)
    gen.add_argument("--max-demand", type=int, default=5)
    gen.add_argument("--max-penalty", type=int, default=20)
    gen.add_argument("--max-opening-cost", type=int, default=20)
    gen.add_argument("--max-cost", type=int, default=10, help="Cost cap of general instances")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--set-cover", default=None, help="Set cover embedding instead, e.g. '0,1;1,2;2'")
    gen.add_argument("--universe", type=int, default=None, help="Universe size for --set-cover")
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=cmd_generate)

    red = sub.add_parser("reduce", help="Reduce an instance and write its certificate")
    red.add_argument("instance")
    red.add_argument("--mode", choices=["metric", "general"], default="metric")
    red.add_argument("--out", default=None, help="Reduced instance file")
    red.add_argument("--certificate", default=None, help="Certificate file (default: <out>.cert.json)")
    red.set_defaults(func=cmd_reduce)

    sol = sub.add_parser("solve", help="Solve an instance")
    sol.add_argument("instance")
    sol.add_argument("--solver", choices=SOLVER_NAMES, default="exact")
    sol.add_argument("--mode", choices=["metric", "general"], default="metric")
    sol.add_argument("--limit", type=int, default=config.ORACLE_LIMIT, help="Oracle enumeration cap")
    sol.add_argument("--max-iterations", type=int, default=config.DEFAULT_MAX_ITERATIONS)
    sol.add_argument("--neighborhood", choices=[n.value for n in Neighborhood], default="all")
    sol.add_argument("--seed", type=int, default=0,
                     help="Recorded in the solver parameters; current solvers are deterministic")
    sol.add_argument("--out", default=None)
    sol.set_defaults(func=cmd_solve)

    tr = sub.add_parser("translate", help="Translate a reduced-instance solution back")
    tr.add_argument("--certificate", required=True)
    tr.add_argument("--reduced", required=True, help="Reduced instance file")
    tr.add_argument("solution", help="Solution of the reduced instance")
    tr.add_argument("--out", default=None)
    tr.set_defaults(func=cmd_translate)

    ver = sub.add_parser("verify", help="Validate a solution against an instance")
    ver.add_argument("instance")
    ver.add_argument("solution")
    ver.add_argument("--out", default=None)
    ver.set_defaults(func=cmd_verify)

    ben = sub.add_parser("bench", help="Run a bench config")
    ben.add_argument("config", help="Bench config JSON (path or name under configs/)")
    ben.add_argument("--out", default=None, help="Report directory (default: output/bench)")
    ben.add_argument("--limit", type=int, default=None, help="Override the oracle enumeration cap")
    ben.add_argument("--workers", type=int, default=None)
    ben.add_argument("--quiet", action="store_true", help="Hide the progress bar")
    ben.set_defaults(func=cmd_bench)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config.setup_logging(args.log_level)

    try:
        return args.func(args)
    except BenchInvariantError as e:
        logger.error(f"❌ {e}; repro instances: {', '.join(e.instances)}")
        return 1
    except (MarketChoiceError, ValueError, OSError) as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return 2
