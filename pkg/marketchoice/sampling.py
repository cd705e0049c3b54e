"""
Random feasible solutions of any instance kind, used as the corpus for
translation dominance and normalization checks.
"""

import logging
from typing import List

from marketchoice.model import (
    InfeasibleInstanceError,
    Instance,
    ProblemKind,
    Solution,
    build_solution,
)
from marketchoice.rng import SplitMix64

logger = logging.getLogger(__name__)


def _random_fill(rng: SplitMix64, inst: Instance, sources: List[int], served: List[int]):
    """Spread each served demand over random facilities with room left."""
    residual = {i: inst.capacities[i] for i in sources}
    flows = []
    for j in rng.shuffled(served):
        remaining = inst.demands[j]
        while remaining > 0:
            candidates = [i for i in sources if residual[i] > 0]
            i = rng.choice(candidates)
            amount = rng.randint(1, min(remaining, residual[i]))
            flows.append((i, j, amount))
            residual[i] -= amount
            remaining -= amount
    return flows


def sample_feasible_solution(inst: Instance, seed: int) -> Solution:
    """
    Draw a random feasible solution.

    Facilities open and positive-demand clients go unserved with probability
    1/2 each; then random facilities are opened (or, when every facility is
    open, random clients dropped) until the open capacity covers the served
    demand, and the served demand is spread over open facilities at random.

    Raises:
        InfeasibleInstanceError: for facility location instances whose demand exceeds supply
    """
    rng = SplitMix64(seed)
    kind = inst.kind
    if kind in (ProblemKind.CFL, ProblemKind.UFL) and inst.total_demand > inst.total_supply:
        raise InfeasibleInstanceError(
            f"total demand {inst.total_demand} exceeds total supply {inst.total_supply}")

    if kind.has_opening_costs:
        open_set = {i for i in range(inst.m) if rng.coin()}
    else:
        open_set = set(range(inst.m))

    unserved = set()
    if kind.has_penalties:
        unserved = {j for j in range(inst.n) if inst.demands[j] > 0 and rng.coin()}

    def shortfall() -> int:
        served_demand = sum(d for j, d in enumerate(inst.demands) if j not in unserved)
        return served_demand - sum(inst.capacities[i] for i in open_set)

    closed = rng.shuffled([i for i in range(inst.m) if i not in open_set])
    while shortfall() > 0 and closed:
        open_set.add(closed.pop())
    droppable = rng.shuffled([j for j in range(inst.n) if inst.demands[j] > 0 and j not in unserved])
    while shortfall() > 0:
        unserved.add(droppable.pop())

    served = [j for j in range(inst.n) if j not in unserved]
    flows = _random_fill(rng, inst, sorted(open_set), served)
    reported_open = open_set if kind.has_opening_costs else ()
    return build_solution(inst, flows, unserved=unserved, open_set=reported_open)
