"""
Instance Generators

Seeded random instances for tests and benchmarks:
- generate_metric_instance: facilities and clients on an integer grid, L1 costs
- generate_general_instance: independent uniform costs
- set_cover_instance: the UFL embedding of a set cover instance

Every draw comes from SplitMix64 in a fixed order (docs/PRNG.md), so the same
parameters always produce the same instance.
"""

import logging
from typing import Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from marketchoice.config import GENERATOR_VALUE_CAP
from marketchoice.model import (
    Client,
    Facility,
    Instance,
    MarketChoiceError,
    ProblemKind,
    Solution,
    require_kind,
)
from marketchoice.rng import SplitMix64

logger = logging.getLogger(__name__)


class GeneratorError(MarketChoiceError):
    """The requested caps cannot produce a valid instance."""


class GenParams(BaseModel):
    """Generator parameters; every cap is an inclusive upper bound."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ProblemKind = ProblemKind.TMC
    m: int = Field(2, ge=0, le=256)
    n: int = Field(2, ge=0, le=256)
    grid: int = Field(4, ge=1, le=GENERATOR_VALUE_CAP)
    max_capacity: int = Field(10, ge=0, le=GENERATOR_VALUE_CAP)
    max_demand: int = Field(5, ge=0, le=GENERATOR_VALUE_CAP)
    max_penalty: int = Field(20, ge=0, le=GENERATOR_VALUE_CAP)
    max_opening_cost: int = Field(20, ge=0, le=GENERATOR_VALUE_CAP)
    max_cost: int = Field(10, ge=0, le=GENERATOR_VALUE_CAP)
    seed: int = Field(0, ge=0, lt=2**64)

    @property
    def value_caps(self):
        return (self.max_capacity, self.max_demand, self.max_penalty, self.max_opening_cost)


def l1_costs(facility_points: np.ndarray, client_points: np.ndarray) -> np.ndarray:
    """Pairwise L1 distances, facilities x clients."""
    deltas = facility_points[:, np.newaxis, :] - client_points[np.newaxis, :, :]
    return np.abs(deltas).sum(axis=-1).astype(np.int64).reshape(len(facility_points), len(client_points))


def _grid_points(rng: SplitMix64, count: int, grid: int) -> np.ndarray:
    points = [(rng.randint(0, grid), rng.randint(0, grid)) for _ in range(count)]
    return np.array(points, dtype=np.int64).reshape(count, 2)


def _capacities(rng: SplitMix64, params: GenParams, demands: List[int]) -> List[int]:
    """
    Draw capacities. Uncapacitated kinds get the total demand everywhere;
    facility location kinds are topped up from the last facility backwards
    until total supply covers total demand.
    """
    total_demand = sum(demands)
    if params.kind.has_opening_costs and params.m == 0 and total_demand > 0:
        raise GeneratorError(f"no facilities to cover demand {total_demand}")
    if params.kind.uncapacitated:
        return [total_demand] * params.m

    capacities = [rng.randint(0, params.max_capacity) for _ in range(params.m)]
    if params.kind in (ProblemKind.CFL, ProblemKind.CFLMC):
        deficit = total_demand - sum(capacities)
        for i in reversed(range(params.m)):
            if deficit <= 0:
                break
            raise_by = min(deficit, params.max_capacity - capacities[i])
            capacities[i] += raise_by
            deficit -= raise_by
        if deficit > 0:
            raise GeneratorError(
                f"{params.m} facilities with capacity cap {params.max_capacity} cannot cover demand {total_demand}")
    return capacities


def _assemble(rng: SplitMix64, params: GenParams, costs: np.ndarray, metric: bool) -> Instance:
    kind = params.kind
    demands = [rng.randint(0, params.max_demand) for _ in range(params.n)]
    capacities = _capacities(rng, params, demands)
    opening = ([rng.randint(0, params.max_opening_cost) for _ in range(params.m)]
               if kind.has_opening_costs else [None] * params.m)
    penalties = ([rng.randint(0, params.max_penalty) for _ in range(params.n)]
                 if kind.has_penalties else [None] * params.n)

    facilities = tuple(Facility(s, f) for s, f in zip(capacities, opening))
    clients = tuple(Client(d, r) for d, r in zip(demands, penalties))
    inst = Instance(kind, facilities, clients, costs, metric_claim=metric)
    logger.debug(f"Generated {inst} from seed {params.seed}")
    return inst


def generate_metric_instance(params: GenParams) -> Instance:
    """
    Random metric instance.

    Facilities and then clients are placed on the integer grid
    [0, grid] x [0, grid]; c_ij is their L1 distance, which satisfies the
    four-point inequality. Then demands, capacities, opening costs and
    penalties are drawn in that order.
    """
    rng = SplitMix64(params.seed)
    facility_points = _grid_points(rng, params.m, params.grid)
    client_points = _grid_points(rng, params.n, params.grid)
    return _assemble(rng, params, l1_costs(facility_points, client_points), metric=True)


def generate_general_instance(params: GenParams) -> Instance:
    """Random instance with independent costs uniform in [0, max_cost], row by row."""
    rng = SplitMix64(params.seed)
    costs = np.array([[rng.randint(0, params.max_cost) for _ in range(params.n)]
                      for _ in range(params.m)], dtype=np.int64).reshape(params.m, params.n)
    return _assemble(rng, params, costs, metric=False)


def generate_instance(params: GenParams, mode: str = "metric") -> Instance:
    if mode == "metric":
        return generate_metric_instance(params)
    if mode == "general":
        return generate_general_instance(params)
    raise GeneratorError(f"unknown generator mode {mode!r}")


# ---------------------------------------------------------------------------
# Set cover embedding
# ---------------------------------------------------------------------------

def set_cover_instance(universe_size: int, subsets: Sequence[Iterable[int]]) -> Instance:
    """
    UFL instance of a set cover problem.

    Each subset becomes a facility with opening cost 1, each element
    0..universe_size-1 a client with demand 1. Serving an element costs 0 from
    a subset containing it and 2 otherwise, so the optimum equals the minimum
    cover size.
    """
    members = [frozenset(int(e) for e in subset) for subset in subsets]
    for k, subset in enumerate(members):
        outside = [e for e in subset if not 0 <= e < universe_size]
        if outside:
            raise GeneratorError(f"subset {k} has elements {outside} outside 0..{universe_size - 1}")
    uncovered = set(range(universe_size)).difference(*members)
    if uncovered:
        raise GeneratorError(f"elements {sorted(uncovered)} are in no subset")

    facilities = tuple(Facility(universe_size, 1) for _ in members)
    clients = tuple(Client(1) for _ in range(universe_size))
    costs = [[0 if e in subset else 2 for e in range(universe_size)] for subset in members]
    return Instance(ProblemKind.UFL, facilities, clients, np.array(costs, dtype=np.int64).reshape(len(members), universe_size))


def cover_from_solution(inst: Instance, sol: Solution) -> List[int]:
    """
    Subsets forming a cover no larger than the solution objective: the
    facilities that serve some element at cost 0, plus, for each element
    served at cost 2, the first subset containing it.
    """
    require_kind(inst, ProblemKind.UFL, operation="cover_from_solution")
    chosen = set()
    for i, j, _ in sol.flows:
        if inst.cost(i, j) == 0:
            chosen.add(i)
    for i, j, _ in sol.flows:
        if inst.cost(i, j) != 0 and not any(inst.cost(k, j) == 0 for k in chosen):
            chosen.add(next(k for k in range(inst.m) if inst.cost(k, j) == 0))
    return sorted(chosen)
