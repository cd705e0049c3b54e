"""
Exact Oracles and Heuristic Solvers

- Brute-force oracles: exact_tmc (unserved sets), exact_cfl (open sets),
  exact_cflmc (both), each solving a transportation problem per subset
- Heuristics: local_search_cfl (open / close / swap moves) and greedy_ufl
  (star greedy over prefix-by-cost client subsets)
- The reduce -> solve -> translate pipeline for market choice instances
"""

import enum
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from marketchoice.config import CFLMC_ORACLE_LIMIT, DEFAULT_MAX_ITERATIONS, ORACLE_LIMIT
from marketchoice.model import (
    EnumerationLimitError,
    InfeasibleInstanceError,
    Instance,
    MarketChoiceError,
    ProblemKind,
    Solution,
    WrongKindError,
    build_solution,
    feasible_cfl,
    flows_from_matrix,
    require_kind,
)
from marketchoice.reductions import (
    Mode,
    ReductionCertificate,
    cflmc_to_cfl,
    tmc_to_cfl,
    translate_solution,
    utmc_to_ufl,
)
from marketchoice.transport import TransportResult, min_cost_transport

logger = logging.getLogger(__name__)


class Neighborhood(str, enum.Enum):
    OPEN = "open"
    CLOSE = "close"
    SWAP = "swap"
    ALL = "all"


class SolverParams(BaseModel):
    """
    Heuristic parameters. Local search and greedy are deterministic and never
    read ``seed``, which is reserved for randomized solvers.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iterations: int = Field(DEFAULT_MAX_ITERATIONS, ge=1)
    neighborhood: Neighborhood = Neighborhood.ALL
    seed: int = Field(0, ge=0, lt=2**64)


def _subsets(items: List[int]) -> Iterator[Tuple[int, ...]]:
    """All subsets, smaller first, lexicographic within a size."""
    for size in range(len(items) + 1):
        yield from itertools.combinations(items, size)


def _check_limit(count: int, limit: int, what: str):
    if count > limit:
        raise EnumerationLimitError(f"{count} {what} exceed the enumeration limit {limit}")


def _transport_over(inst: Instance, open_set, unserved=()) -> Optional[TransportResult]:
    """Transportation restricted to open facilities and served clients; None if infeasible."""
    supplies = [s if i in open_set else 0 for i, s in enumerate(inst.capacities)]
    demands = [0 if j in unserved else d for j, d in enumerate(inst.demands)]
    result = min_cost_transport(supplies, demands, inst.costs)
    return result if result.feasible else None


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------

def exact_tmc(inst: Instance, limit: int = ORACLE_LIMIT) -> Solution:
    """
    Optimal TMC/UTMC solution by enumerating unserved client sets.

    Zero-demand clients are always served. Ties go to the smaller unserved
    set, then the lexicographically smaller one.
    """
    require_kind(inst, ProblemKind.TMC, ProblemKind.UTMC, operation="exact_tmc")
    _check_limit(inst.n, limit, "clients")

    candidates = [j for j, d in enumerate(inst.demands) if d > 0]
    every_facility = range(inst.m)
    best = None
    for unserved in _subsets(candidates):
        penalty = sum(inst.penalties[j] for j in unserved)
        if best is not None and penalty >= best[0]:
            continue
        result = _transport_over(inst, every_facility, unserved)
        if result is None:
            continue
        value = penalty + result.total_cost
        if best is None or value < best[0]:
            best = (value, unserved, result)

    value, unserved, result = best
    logger.debug(f"exact_tmc: optimum {value} with unserved {list(unserved)}")
    return build_solution(inst, flows_from_matrix(result.flows), unserved=unserved)


def exact_cfl(inst: Instance, limit: int = ORACLE_LIMIT) -> Solution:
    """Optimal CFL/UFL solution by enumerating open facility sets."""
    if inst.kind is ProblemKind.CFLMC:
        raise WrongKindError("exact_cfl expects cfl/ufl; use exact_cflmc or reduce with cflmc_to_cfl")
    require_kind(inst, ProblemKind.CFL, ProblemKind.UFL, operation="exact_cfl")
    if not feasible_cfl(inst):
        raise InfeasibleInstanceError(f"total demand {inst.total_demand} exceeds total supply {inst.total_supply}")
    _check_limit(inst.m, limit, "facilities")

    best = None
    for open_set in _subsets(list(range(inst.m))):
        opening = sum(inst.opening_costs[i] for i in open_set)
        if best is not None and opening >= best[0]:
            continue
        if sum(inst.capacities[i] for i in open_set) < inst.total_demand:
            continue
        result = _transport_over(inst, open_set)
        value = opening + result.total_cost
        if best is None or value < best[0]:
            best = (value, open_set, result)

    value, open_set, result = best
    logger.debug(f"exact_cfl: optimum {value} with open set {list(open_set)}")
    return build_solution(inst, flows_from_matrix(result.flows), open_set=open_set)


def exact_cflmc(inst: Instance, limit: int = CFLMC_ORACLE_LIMIT) -> Solution:
    """Optimal CFLMC solution by enumerating open sets x unserved sets."""
    require_kind(inst, ProblemKind.CFLMC, operation="exact_cflmc")
    _check_limit(inst.m, limit, "facilities")
    _check_limit(inst.n, limit, "clients")

    candidates = [j for j, d in enumerate(inst.demands) if d > 0]
    best = None
    for open_set in _subsets(list(range(inst.m))):
        opening = sum(inst.opening_costs[i] for i in open_set)
        capacity = sum(inst.capacities[i] for i in open_set)
        for unserved in _subsets(candidates):
            fixed = opening + sum(inst.penalties[j] for j in unserved)
            if best is not None and fixed >= best[0]:
                continue
            if inst.total_demand - sum(inst.demands[j] for j in unserved) > capacity:
                continue
            result = _transport_over(inst, open_set, unserved)
            value = fixed + result.total_cost
            if best is None or value < best[0]:
                best = (value, open_set, unserved, result)

    value, open_set, unserved, result = best
    logger.debug(f"exact_cflmc: optimum {value}")
    return build_solution(inst, flows_from_matrix(result.flows), unserved=unserved, open_set=open_set)


def exact_solve(inst: Instance, limit: int = ORACLE_LIMIT) -> Solution:
    """Run the oracle matching the instance kind."""
    if inst.kind in (ProblemKind.TMC, ProblemKind.UTMC):
        return exact_tmc(inst, limit)
    if inst.kind is ProblemKind.CFLMC:
        return exact_cflmc(inst, min(limit, CFLMC_ORACLE_LIMIT))
    return exact_cfl(inst, limit)


# ---------------------------------------------------------------------------
# Local search
# ---------------------------------------------------------------------------

def _moves(current: FrozenSet[int], m: int, neighborhood: Neighborhood) -> Iterator[FrozenSet[int]]:
    closed = [i for i in range(m) if i not in current]
    opened = sorted(current)
    if neighborhood in (Neighborhood.OPEN, Neighborhood.ALL):
        for i in closed:
            yield current | {i}
    if neighborhood in (Neighborhood.CLOSE, Neighborhood.ALL):
        for i in opened:
            yield current - {i}
    if neighborhood in (Neighborhood.SWAP, Neighborhood.ALL):
        for i in opened:
            for i2 in closed:
                yield (current - {i}) | {i2}


def local_search_trace(inst: Instance, params: SolverParams = None) -> Tuple[Solution, List[int]]:
    """
    Local search from the all-open configuration.

    Each iteration applies the best strictly improving open / close / swap
    move, re-solving the transportation problem for every candidate; the first
    move in scan order wins ties.

    Returns:
        (local optimum, objective after each accepted move, starting value first)
    """
    require_kind(inst, ProblemKind.CFL, ProblemKind.UFL, operation="local_search_cfl")
    if not feasible_cfl(inst):
        raise InfeasibleInstanceError(f"total demand {inst.total_demand} exceeds total supply {inst.total_supply}")
    params = params or SolverParams()

    evaluated: Dict[FrozenSet[int], Optional[Tuple[int, TransportResult]]] = {}

    def value_of(open_set: FrozenSet[int]) -> Optional[Tuple[int, TransportResult]]:
        if open_set not in evaluated:
            result = None
            if sum(inst.capacities[i] for i in open_set) >= inst.total_demand:
                transport = _transport_over(inst, open_set)
                result = (sum(inst.opening_costs[i] for i in open_set) + transport.total_cost, transport)
            evaluated[open_set] = result
        return evaluated[open_set]

    current = frozenset(range(inst.m))
    current_value, current_transport = value_of(current)
    history = [current_value]

    for _ in range(params.max_iterations):
        best = None
        for candidate in _moves(current, inst.m, params.neighborhood):
            outcome = value_of(candidate)
            if outcome is None:
                continue
            if outcome[0] < (best[1] if best else current_value):
                best = (candidate, outcome[0], outcome[1])
        if best is None:
            break
        current, current_value, current_transport = best
        history.append(current_value)

    logger.debug(f"Local search: {history[0]} -> {current_value} in {len(history) - 1} moves, "
                 f"{len(evaluated)} configurations evaluated")
    solution = build_solution(inst, flows_from_matrix(current_transport.flows), open_set=current)
    return solution, history


def local_search_cfl(inst: Instance, params: SolverParams = None) -> Solution:
    """Local search heuristic for CFL/UFL (see local_search_trace)."""
    solution, _ = local_search_trace(inst, params)
    return solution


# ---------------------------------------------------------------------------
# Greedy
# ---------------------------------------------------------------------------

def greedy_ufl(inst: Instance) -> Solution:
    """
    Star greedy for UFL.

    Every round considers, for each facility, the prefixes of the unassigned
    clients ordered by connection cost c_ij * d_j, and picks the star with the
    smallest (opening cost if still closed + connection costs) / size.
    Ratios are compared exactly by cross-multiplication.
    """
    require_kind(inst, ProblemKind.UFL, operation="greedy_ufl")
    unassigned = set(range(inst.n))
    open_set = set()
    assignment = {}

    while unassigned:
        best = None
        for i in range(inst.m):
            ranked = sorted(unassigned, key=lambda j: (inst.cost(i, j) * inst.demands[j], j))
            total = 0 if i in open_set else inst.opening_costs[i]
            for size, j in enumerate(ranked, start=1):
                total += inst.cost(i, j) * inst.demands[j]
                if best is None or total * best[1] < best[0] * size:
                    best = (total, size, i, ranked[:size])
        if best is None:
            raise MarketChoiceError("greedy_ufl needs at least one facility to assign clients")
        _, _, i, star = best
        open_set.add(i)
        for j in star:
            assignment[j] = i
        unassigned.difference_update(star)

    flows = [(i, j, inst.demands[j]) for j, i in sorted(assignment.items()) if inst.demands[j] > 0]
    solution = build_solution(inst, flows, open_set=open_set)
    logger.debug(f"Greedy UFL opened {sorted(open_set)} for objective {solution.objective}")
    return solution


# ---------------------------------------------------------------------------
# Reduce -> solve -> translate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineResult:
    reduced: Instance
    certificate: ReductionCertificate
    heuristic: Solution
    translated: Solution


def run_pipeline(inst: Instance, mode="metric", params: SolverParams = None) -> PipelineResult:
    """
    Reduce a market choice instance to facility location, solve the reduced
    instance heuristically and translate the result back.

    Metric UTMC goes through utmc_to_ufl + greedy_ufl; TMC, general-mode UTMC
    and CFLMC go through the capacitated gadget + local_search_cfl.
    """
    require_kind(inst, ProblemKind.TMC, ProblemKind.UTMC, ProblemKind.CFLMC, operation="run_pipeline")
    mode = Mode(mode)
    params = params or SolverParams()

    if inst.kind is ProblemKind.UTMC and mode is Mode.METRIC:
        reduced, cert = utmc_to_ufl(inst)
        heuristic = greedy_ufl(reduced)
    elif inst.kind is ProblemKind.CFLMC:
        reduced, cert = cflmc_to_cfl(inst, mode)
        heuristic = local_search_cfl(reduced, params)
    else:
        reduced, cert = tmc_to_cfl(inst, mode)
        heuristic = local_search_cfl(reduced, params)

    translated = translate_solution(cert, reduced, heuristic)
    logger.debug(f"Pipeline {cert.direction.value}: heuristic {heuristic.objective}, "
                 f"translated {translated.objective}")
    return PipelineResult(reduced, cert, heuristic, translated)


def approx_tmc_pipeline(inst: Instance, mode="metric", params: SolverParams = None) -> Solution:
    """Heuristic TMC/UTMC solution via reduction to facility location."""
    require_kind(inst, ProblemKind.TMC, ProblemKind.UTMC, operation="approx_tmc_pipeline")
    return run_pipeline(inst, mode, params).translated


SOLVER_NAMES = ("exact", "local-search", "greedy")


def solve(inst: Instance, solver: str = "exact", mode="metric",
          params: SolverParams = None, limit: int = ORACLE_LIMIT) -> Solution:
    """
    Solve any instance kind with the named solver.

    ``local-search`` and ``greedy`` on market choice kinds run the reduction
    pipeline; ``greedy`` needs a UFL instance or a metric UTMC one.
    """
    if solver == "exact":
        return exact_solve(inst, limit)
    if solver == "local-search":
        if inst.kind in (ProblemKind.CFL, ProblemKind.UFL):
            return local_search_cfl(inst, params)
        return run_pipeline(inst, mode, params).translated
    if solver == "greedy":
        if inst.kind is ProblemKind.UFL:
            return greedy_ufl(inst)
        if inst.kind is ProblemKind.UTMC and Mode(mode) is Mode.METRIC:
            return run_pipeline(inst, mode, params).translated
        raise WrongKindError(f"greedy needs ufl or metric utmc, got {inst.kind.value}")
    raise MarketChoiceError(f"unknown solver {solver!r}, expected one of {', '.join(SOLVER_NAMES)}")
