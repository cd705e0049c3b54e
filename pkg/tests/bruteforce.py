"""
Independent brute-force oracles for tests.

Nothing here calls the transport solver: optima are found by enumerating
every integer flow matrix directly.
"""

import itertools
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from marketchoice.model import Instance, ProblemKind, Solution, build_solution
from marketchoice.rng import SplitMix64


def compositions(total: int, caps: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """All ways to write total as a sum of len(caps) parts, part k <= caps[k]."""
    if not caps:
        if total == 0:
            yield ()
        return
    for first in range(min(total, caps[0]) + 1):
        for rest in compositions(total - first, caps[1:]):
            yield (first,) + rest


def flow_matrices(supplies: Sequence[int], demands: Sequence[int]) -> Iterator[np.ndarray]:
    """Integer matrices with column sums equal to demands and row sums within supplies."""
    m, n = len(supplies), len(demands)
    columns = [list(compositions(d, supplies)) for d in demands]
    for choice in itertools.product(*columns):
        matrix = np.array(choice, dtype=np.int64).reshape(n, m).T
        if np.all(matrix.sum(axis=1) <= np.asarray(supplies, dtype=np.int64)):
            yield matrix


def brute_transport(supplies, demands, costs):
    """Minimum transport cost, or None when no flow matrix exists."""
    costs = np.asarray(costs, dtype=np.int64).reshape(len(supplies), len(demands))
    best = None
    for matrix in flow_matrices(supplies, demands):
        value = int((matrix * costs).sum())
        if best is None or value < best:
            best = value
    return best


def brute_tmc(inst: Instance) -> int:
    positive = [j for j, d in enumerate(inst.demands) if d > 0]
    best = None
    for size in range(len(positive) + 1):
        for unserved in itertools.combinations(positive, size):
            demands = [0 if j in unserved else d for j, d in enumerate(inst.demands)]
            transport = brute_transport(inst.capacities, demands, inst.costs)
            if transport is None:
                continue
            value = transport + sum(inst.penalties[j] for j in unserved)
            best = value if best is None else min(best, value)
    return best


def brute_cfl(inst: Instance) -> int:
    best = None
    for size in range(inst.m + 1):
        for open_set in itertools.combinations(range(inst.m), size):
            supplies = [s if i in open_set else 0 for i, s in enumerate(inst.capacities)]
            transport = brute_transport(supplies, inst.demands, inst.costs)
            if transport is None:
                continue
            value = transport + sum(inst.opening_costs[i] for i in open_set)
            best = value if best is None else min(best, value)
    return best


def all_cfl_solutions(inst: Instance) -> Iterator[Solution]:
    """Every feasible solution of a small CFL instance."""
    for size in range(inst.m + 1):
        for open_set in itertools.combinations(range(inst.m), size):
            supplies = [s if i in open_set else 0 for i, s in enumerate(inst.capacities)]
            for matrix in flow_matrices(supplies, inst.demands):
                flows = [(i, j, int(x)) for (i, j), x in np.ndenumerate(matrix) if x > 0]
                yield build_solution(inst, flows, open_set=open_set)


def saturated_dummy_solution(reduced: Instance, dummy_map, seed: int) -> Solution:
    """
    Random feasible solution of a dummy-facility gadget in which every open
    dummy ships exactly its capacity. Real facilities are all open. Dummies
    with zero opening cost are always chosen, since normalization opens them.
    """
    assert reduced.kind is ProblemKind.CFL
    rng = SplitMix64(seed)
    dummies = [k for k, _ in dummy_map]
    real = [i for i in range(reduced.m) if i not in dummies]
    chosen = [k for k in dummies if reduced.opening_costs[k] == 0 or rng.coin()]
    remaining = rng.shuffled([k for k in dummies if k not in chosen])
    real_capacity = sum(reduced.capacities[i] for i in real)

    def uncovered() -> int:
        return reduced.total_demand - sum(reduced.capacities[k] for k in chosen)

    while uncovered() > real_capacity:
        chosen.append(remaining.pop())

    residual = list(reduced.demands)
    flows: List[Tuple[int, int, int]] = []
    for k in sorted(chosen):
        supply = reduced.capacities[k]
        while supply > 0:
            j = rng.choice([j for j in range(reduced.n) if residual[j] > 0])
            amount = rng.randint(1, min(supply, residual[j]))
            flows.append((k, j, amount))
            residual[j] -= amount
            supply -= amount

    room = {i: reduced.capacities[i] for i in real}
    for j in range(reduced.n):
        while residual[j] > 0:
            i = rng.choice([i for i in real if room[i] > 0])
            amount = rng.randint(1, min(residual[j], room[i]))
            flows.append((i, j, amount))
            room[i] -= amount
            residual[j] -= amount

    return build_solution(reduced, flows, open_set=set(real) | set(chosen))


def brute_cflmc(inst: Instance) -> int:
    positive = [j for j, d in enumerate(inst.demands) if d > 0]
    best = None
    for size in range(inst.m + 1):
        for open_set in itertools.combinations(range(inst.m), size):
            supplies = [s if i in open_set else 0 for i, s in enumerate(inst.capacities)]
            for k in range(len(positive) + 1):
                for unserved in itertools.combinations(positive, k):
                    demands = [0 if j in unserved else d for j, d in enumerate(inst.demands)]
                    transport = brute_transport(supplies, demands, inst.costs)
                    if transport is None:
                        continue
                    value = (transport + sum(inst.opening_costs[i] for i in open_set)
                             + sum(inst.penalties[j] for j in unserved))
                    best = value if best is None else min(best, value)
    return best
