"""
Transportation Problem Solver

Exact solver for the capacitated transportation problem, the polynomial-time
subroutine behind every reduction: successive shortest augmenting paths with
node potentials on a source -> facilities -> clients -> sink network held in a
NetworkX DiGraph. Also provides the maximization form (by cost
complementation) and the completion of a partially fixed solution.
"""

import heapq
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import networkx as nx
import numpy as np

from marketchoice.model import (
    DimensionMismatchError,
    InfeasibleInstanceError,
    Instance,
    InvalidInstanceError,
    Solution,
    checked_mul,
    checked_sum,
)

logger = logging.getLogger(__name__)


class ResidualInfeasibleError(RuntimeError):
    """The residual transportation problem has no feasible flow."""


@dataclass(frozen=True, eq=False)
class TransportResult:
    feasible: bool
    flows: np.ndarray
    total_cost: int


def _as_cost_matrix(costs, m: int, n: int) -> np.ndarray:
    matrix = np.asarray(costs, dtype=object)
    if matrix.size == 0:
        if m * n != 0:
            raise DimensionMismatchError(f"empty cost matrix for {m} supplies and {n} demands")
        return np.zeros((m, n), dtype=object)
    if matrix.shape != (m, n):
        raise DimensionMismatchError(f"cost matrix has shape {matrix.shape}, expected ({m}, {n})")
    return matrix


def _check_vector(values: Sequence[int], what: str) -> List[int]:
    values = [int(v) for v in values]
    if any(v < 0 for v in values):
        raise InvalidInstanceError(f"{what} must be non-negative")
    return values


class TransportNetwork:
    """
    Residual network of one transportation problem.

    Node 0 is the source, nodes 1..m the facilities, nodes m+1..m+n the clients
    and node m+n+1 the sink. Arcs carry ``capacity``, ``cost`` and ``flow``.
    The network has no antiparallel arcs, so the residual reverse of an arc is
    read off its predecessor side.
    """

    def __init__(self, supplies: List[int], demands: List[int], costs: np.ndarray):
        self.m = len(supplies)
        self.n = len(demands)
        self.source = 0
        self.sink = self.m + self.n + 1

        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(range(self.sink + 1))
        for i, supply in enumerate(supplies):
            if supply > 0:
                self.graph.add_edge(self.source, self._facility(i), capacity=supply, cost=0, flow=0)
        for i, supply in enumerate(supplies):
            for j, demand in enumerate(demands):
                if supply > 0 and demand > 0:
                    self.graph.add_edge(self._facility(i), self._client(j),
                                        capacity=min(supply, demand), cost=int(costs[i, j]), flow=0)
        for j, demand in enumerate(demands):
            if demand > 0:
                self.graph.add_edge(self._client(j), self.sink, capacity=demand, cost=0, flow=0)

        # Scan order: neighbours by ascending node index
        self.neighbors = {u: sorted(set(self.graph.successors(u)) | set(self.graph.predecessors(u)))
                          for u in self.graph.nodes}

    def _facility(self, i: int) -> int:
        return 1 + i

    def _client(self, j: int) -> int:
        return 1 + self.m + j

    def residual_arcs(self, u: int):
        """Yield (v, cost, residual capacity) for residual arcs leaving u."""
        for v in self.neighbors[u]:
            if self.graph.has_edge(u, v):
                arc = self.graph[u][v]
                if arc["flow"] < arc["capacity"]:
                    yield v, arc["cost"], arc["capacity"] - arc["flow"]
            else:
                arc = self.graph[v][u]
                if arc["flow"] > 0:
                    yield v, -arc["cost"], arc["flow"]

    def shortest_path(self, potential: Dict[int, int]) -> Tuple[Dict[int, int], Dict[int, tuple]]:
        """
        Dijkstra on reduced costs. Among paths of equal length the
        lexicographically smallest node sequence wins.
        """
        dist = {self.source: 0}
        path = {self.source: (self.source,)}
        heap = [(0, (self.source,))]
        done = set()
        while heap:
            d, route = heapq.heappop(heap)
            u = route[-1]
            if u in done:
                continue
            done.add(u)
            for v, cost, _ in self.residual_arcs(u):
                if v in done:
                    continue
                candidate = (d + cost + potential[u] - potential[v], route + (v,))
                if v not in dist or candidate < (dist[v], path[v]):
                    dist[v], path[v] = candidate
                    heapq.heappush(heap, candidate)
        return dist, path

    def augment(self, route: tuple) -> int:
        arcs = list(zip(route, route[1:]))
        amount = min(cap for u, v in arcs
                     for w, _, cap in self.residual_arcs(u) if w == v)
        for u, v in arcs:
            if self.graph.has_edge(u, v):
                self.graph[u][v]["flow"] += amount
            else:
                self.graph[v][u]["flow"] -= amount
        return amount

    def solve(self, total_demand: int):
        potential = {u: 0 for u in self.graph.nodes}
        shipped = 0
        augmentations = 0
        while shipped < total_demand:
            dist, path = self.shortest_path(potential)
            if self.sink not in dist:
                raise ResidualInfeasibleError("no augmenting path left although supply covers demand")
            for v, d in dist.items():
                potential[v] += d
            shipped += self.augment(path[self.sink])
            augmentations += 1
        logger.debug(f"Transport solved with {augmentations} augmentations")

    def flow_matrix(self) -> np.ndarray:
        flows = np.zeros((self.m, self.n), dtype=np.int64)
        for i in range(self.m):
            for j in range(self.n):
                u, v = self._facility(i), self._client(j)
                if self.graph.has_edge(u, v):
                    flows[i, j] = self.graph[u][v]["flow"]
        return flows


def min_cost_transport(supplies: Sequence[int], demands: Sequence[int], costs) -> TransportResult:
    """
    Minimum-cost flow serving every demand within the supplies.

    Args:
        supplies: Facility capacities (length m)
        demands: Client demands (length n)
        costs: m x n per-unit costs

    Returns:
        TransportResult; feasible is False when total demand exceeds total supply
    """
    supplies = _check_vector(supplies, "supplies")
    demands = _check_vector(demands, "demands")
    m, n = len(supplies), len(demands)
    matrix = _as_cost_matrix(costs, m, n)
    if any(int(c) < 0 for c in matrix.flat):
        raise InvalidInstanceError("costs must be non-negative")

    total_demand = checked_sum(demands, "total demand")
    if total_demand > checked_sum(supplies, "total supply"):
        return TransportResult(False, np.zeros((m, n), dtype=np.int64), 0)

    network = TransportNetwork(supplies, demands, matrix)
    network.solve(total_demand)
    flows = network.flow_matrix()
    total_cost = checked_sum((checked_mul(matrix[i, j], flows[i, j])
                              for i in range(m) for j in range(n) if flows[i, j]), "transport cost")
    return TransportResult(True, flows, total_cost)


def max_value_transport(supplies: Sequence[int], demands: Sequence[int], costs) -> int:
    """
    Maximum total cost of a flow serving all demand, computed on the
    complemented costs C* - c so the core solver keeps non-negative costs.
    """
    supplies = _check_vector(supplies, "supplies")
    demands = _check_vector(demands, "demands")
    matrix = _as_cost_matrix(costs, len(supplies), len(demands))
    total_demand = checked_sum(demands, "total demand")
    if total_demand > sum(supplies):
        raise InfeasibleInstanceError(f"total demand {total_demand} exceeds total supply {sum(supplies)}")

    c_max = max((int(c) for c in matrix.flat), default=0)
    complemented = c_max - matrix
    result = min_cost_transport(supplies, demands, complemented)
    return checked_mul(c_max, total_demand, "maximum transport value") - result.total_cost


def residual_transport(inst: Instance, fixed: Solution) -> TransportResult:
    """
    Optimal completion of a partial solution.

    Remaining supply is capacity minus fixed shipments (only open facilities
    for kinds with opening costs); remaining demand is demand minus fixed
    receipts for clients not flagged unserved.

    Returns:
        TransportResult holding the additional flow only

    Raises:
        ResidualInfeasibleError: if the remainder cannot be served
    """
    shipped = fixed.shipped_totals(inst.m)
    received = fixed.received_totals(inst.n)

    supplies = []
    for i, capacity in enumerate(inst.capacities):
        usable = not inst.kind.has_opening_costs or i in fixed.open_set
        remaining = capacity - shipped[i] if usable else 0
        if remaining < 0 or (not usable and shipped[i] > 0):
            raise InvalidInstanceError(f"fixed flows overload or use closed facility {i}")
        supplies.append(remaining)

    demands = []
    for j, demand in enumerate(inst.demands):
        remaining = 0 if j in fixed.unserved else demand - received[j]
        if remaining < 0:
            raise InvalidInstanceError(f"fixed flows over-serve client {j}")
        demands.append(remaining)

    result = min_cost_transport(supplies, demands, inst.costs)
    if not result.feasible:
        raise ResidualInfeasibleError(
            f"residual demand {sum(demands)} exceeds residual supply {sum(supplies)}")
    return result
