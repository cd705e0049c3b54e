"""
Approximation-Preserving Reductions

Gadget constructions between market choice and facility location problems,
with the constructive back-translation of solutions:

- TMC -> CFL: one dummy facility per client (opening cost = penalty)
- CFL -> TMC: one dummy client per facility (penalty = opening cost),
  real clients get the instance upper bound as penalty
- UTMC -> UFL: as TMC -> CFL with uncapacitated dummies
- CFLMC -> CFL: as TMC -> CFL, real facilities keep their opening costs

Every reduction returns a ReductionCertificate that records the dummy
correspondence, so solutions of the reduced instance can be mapped back.
"""

import enum
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from marketchoice.model import (
    Client,
    Facility,
    InfeasibleInstanceError,
    Instance,
    InvalidSolutionError,
    MarketChoiceError,
    NonMetricError,
    ProblemKind,
    Solution,
    ValidationReport,
    build_solution,
    check_metric,
    checked_sum,
    evaluate,
    feasible_cfl,
    flows_from_matrix,
    instance_upper_bound,
    require_kind,
)
from marketchoice.transport import residual_transport

logger = logging.getLogger(__name__)


class Direction(str, enum.Enum):
    TMC_TO_CFL = "tmc->cfl"
    CFL_TO_TMC = "cfl->tmc"
    UTMC_TO_UFL = "utmc->ufl"
    CFLMC_TO_CFL = "cflmc->cfl"

    @property
    def dummy_facilities(self) -> bool:
        """True when the gadget adds facilities, False when it adds clients."""
        return self is not Direction.CFL_TO_TMC


class Mode(str, enum.Enum):
    METRIC = "metric"
    GENERAL = "general"


@dataclass(frozen=True)
class ReductionCertificate:
    """
    Correspondence between a reduced instance and its source.

    ``dummy_map`` pairs (reduced index, original index): dummy facility ->
    original client for facility gadgets, dummy client -> original facility for
    CFL -> TMC. Dummies occupy exactly the indices after ``source_dims``.
    """

    direction: Direction
    mode: Mode
    dummy_map: Tuple[Tuple[int, int], ...]
    source_dims: Tuple[int, int]
    source_kind: ProblemKind
    source_metric: bool = False
    iub: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "source_kind", ProblemKind(self.source_kind))
        object.__setattr__(self, "dummy_map", tuple(sorted((int(d), int(o)) for d, o in self.dummy_map)))
        object.__setattr__(self, "source_dims", tuple(int(x) for x in self.source_dims))

        m, n = self.source_dims
        offset, count = (m, n) if self.direction.dummy_facilities else (n, m)
        if [d for d, _ in self.dummy_map] != list(range(offset, offset + count)):
            raise MarketChoiceError("dummy_map must cover exactly the indices after the source dimensions")
        if sorted(o for _, o in self.dummy_map) != list(range(count)):
            raise MarketChoiceError("dummy_map must be a bijection onto the original indices")
        if (self.iub is not None) != (self.direction is Direction.CFL_TO_TMC):
            raise MarketChoiceError("iub is recorded for cfl->tmc reductions only")

    def original_of(self) -> Dict[int, int]:
        """Dummy index -> original index."""
        return dict(self.dummy_map)

    def inverse(self) -> Dict[int, int]:
        """Original index -> dummy index."""
        return {o: d for d, o in self.dummy_map}


# ---------------------------------------------------------------------------
# Gadget costs
# ---------------------------------------------------------------------------

def _dummy_rows(costs: np.ndarray, mode: Mode, empty_fill: int = 0) -> np.ndarray:
    """
    Cost rows of one dummy facility per client.

    Row j is 0 towards client j. Towards another client j0 it is the cheapest
    two-hop route j0 <- i0 -> j over the original facilities (metric mode) or
    the maximum unit cost of the input (general mode).
    """
    m, n = costs.shape
    c_max = int(costs.max()) if costs.size else 0
    rows = np.zeros((n, n), dtype=np.int64)
    for j in range(n):
        for j0 in range(n):
            if j0 == j:
                continue
            if mode is Mode.GENERAL:
                rows[j, j0] = c_max
            elif m == 0:
                rows[j, j0] = empty_fill
            else:
                rows[j, j0] = min(checked_sum([costs[i0, j0], costs[i0, j]], "gadget cost")
                                  for i0 in range(m))
    return rows


def _check_mode(inst: Instance, mode) -> Mode:
    mode = Mode(mode)
    if mode is Mode.METRIC and not check_metric(inst.costs):
        raise NonMetricError("metric mode needs costs satisfying the four-point triangle inequality")
    return mode


def _facility_gadget(inst: Instance, mode: Mode, kind: ProblemKind, keep_opening_costs: bool,
                     dummy_capacity: Optional[int] = None, empty_fill: int = 0) -> Instance:
    facilities = [Facility(f.capacity, f.opening_cost if keep_opening_costs else 0)
                  for f in inst.facilities]
    facilities += [Facility(c.demand if dummy_capacity is None else dummy_capacity, c.penalty)
                   for c in inst.clients]
    clients = [Client(c.demand) for c in inst.clients]
    costs = np.vstack([inst.costs, _dummy_rows(inst.costs, mode, empty_fill)]).reshape(inst.m + inst.n, inst.n)
    return Instance(kind, tuple(facilities), tuple(clients), costs, metric_claim=mode is Mode.METRIC)


def _facility_certificate(inst: Instance, direction: Direction, mode: Mode) -> ReductionCertificate:
    return ReductionCertificate(
        direction=direction,
        mode=mode,
        dummy_map=tuple((inst.m + j, j) for j in range(inst.n)),
        source_dims=(inst.m, inst.n),
        source_kind=inst.kind,
        source_metric=inst.metric_claim,
    )


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------

def tmc_to_cfl(inst: Instance, mode="metric") -> Tuple[Instance, ReductionCertificate]:
    """
    Reduce TMC to CFL.

    Real facilities open for free; each client j gets a dummy facility with
    opening cost r_j, capacity d_j and cost 0 to j. UTMC instances are accepted
    as well since they are TMC instances with large capacities.

    Args:
        inst: TMC or UTMC instance
        mode: "metric" (two-hop gadget costs) or "general" (maximum unit cost)

    Returns:
        (reduced CFL instance, certificate)
    """
    require_kind(inst, ProblemKind.TMC, ProblemKind.UTMC, operation="tmc_to_cfl")
    mode = _check_mode(inst, mode)
    reduced = _facility_gadget(inst, mode, ProblemKind.CFL, keep_opening_costs=False)
    logger.debug(f"tmc->cfl ({mode.value}): {inst.m}x{inst.n} -> {reduced.m}x{reduced.n}")
    return reduced, _facility_certificate(inst, Direction.TMC_TO_CFL, mode)


def cflmc_to_cfl(inst: Instance, mode="metric") -> Tuple[Instance, ReductionCertificate]:
    """Reduce CFLMC to CFL: the TMC gadget with real opening costs kept."""
    require_kind(inst, ProblemKind.CFLMC, operation="cflmc_to_cfl")
    mode = _check_mode(inst, mode)
    reduced = _facility_gadget(inst, mode, ProblemKind.CFL, keep_opening_costs=True)
    logger.debug(f"cflmc->cfl ({mode.value}): {inst.m}x{inst.n} -> {reduced.m}x{reduced.n}")
    return reduced, _facility_certificate(inst, Direction.CFLMC_TO_CFL, mode)


def utmc_to_ufl(inst: Instance) -> Tuple[Instance, ReductionCertificate]:
    """
    Reduce metric UTMC to UFL. Dummy facilities get capacity equal to the
    total demand, the finite stand-in for "no capacity limit".
    """
    require_kind(inst, ProblemKind.UTMC, operation="utmc_to_ufl")
    mode = _check_mode(inst, Mode.METRIC)
    # Without real facilities, serving a foreign client must cost more than its penalty
    empty_fill = max(inst.penalties, default=0) + 1
    reduced = _facility_gadget(inst, mode, ProblemKind.UFL, keep_opening_costs=False,
                               dummy_capacity=inst.total_demand, empty_fill=empty_fill)
    logger.debug(f"utmc->ufl: {inst.m}x{inst.n} -> {reduced.m}x{reduced.n}")
    return reduced, _facility_certificate(inst, Direction.UTMC_TO_UFL, mode)


def cfl_to_tmc(inst: Instance, mode="metric") -> Tuple[Instance, ReductionCertificate]:
    """
    Reduce CFL to TMC.

    Each facility i gets a dummy client with demand s_i, penalty f_i and cost 0
    from i; leaving that dummy unserved means opening i. Real clients get the
    instance upper bound as penalty so they are always worth serving.

    Raises:
        InfeasibleInstanceError: if total demand exceeds total supply
    """
    require_kind(inst, ProblemKind.CFL, operation="cfl_to_tmc")
    if not feasible_cfl(inst):
        raise InfeasibleInstanceError(
            f"total demand {inst.total_demand} exceeds total supply {inst.total_supply}")
    mode = _check_mode(inst, mode)
    iub = instance_upper_bound(inst)

    # Dummy columns are the facility-side mirror of the dummy rows
    dummy_columns = _dummy_rows(inst.costs.T, mode).T
    costs = np.hstack([inst.costs, dummy_columns]).reshape(inst.m, inst.n + inst.m)
    clients = [Client(c.demand, iub) for c in inst.clients]
    clients += [Client(f.capacity, f.opening_cost) for f in inst.facilities]
    facilities = [Facility(f.capacity) for f in inst.facilities]
    reduced = Instance(ProblemKind.TMC, tuple(facilities), tuple(clients), costs,
                       metric_claim=mode is Mode.METRIC)

    cert = ReductionCertificate(
        direction=Direction.CFL_TO_TMC,
        mode=mode,
        dummy_map=tuple((inst.n + i, i) for i in range(inst.m)),
        source_dims=(inst.m, inst.n),
        source_kind=inst.kind,
        source_metric=inst.metric_claim,
        iub=iub,
    )
    logger.debug(f"cfl->tmc ({mode.value}): {inst.m}x{inst.n} -> {reduced.m}x{reduced.n}, iub={iub}")
    return reduced, cert


def reduce_instance(inst: Instance, mode="metric") -> Tuple[Instance, ReductionCertificate]:
    """Pick the reduction matching the instance kind."""
    mode = Mode(mode)
    if inst.kind is ProblemKind.TMC:
        return tmc_to_cfl(inst, mode)
    if inst.kind is ProblemKind.UTMC:
        return utmc_to_ufl(inst) if mode is Mode.METRIC else tmc_to_cfl(inst, mode)
    if inst.kind is ProblemKind.CFL:
        return cfl_to_tmc(inst, mode)
    if inst.kind is ProblemKind.CFLMC:
        return cflmc_to_cfl(inst, mode)
    raise MarketChoiceError(f"no reduction starts from {inst.kind.value}")


def restore_source(cert: ReductionCertificate, reduced: Instance) -> Instance:
    """Rebuild the original instance from the reduced one and its certificate."""
    m, n = cert.source_dims
    expected = (m + n, n) if cert.direction.dummy_facilities else (m, n + m)
    if (reduced.m, reduced.n) != expected:
        raise MarketChoiceError(f"reduced instance is {reduced.m}x{reduced.n}, certificate "
                                f"{cert.direction.value} expects {expected[0]}x{expected[1]}")
    source_kind = cert.source_kind
    if cert.direction is Direction.CFL_TO_TMC:
        dummy_of = cert.inverse()
        facilities = [Facility(reduced.capacities[i], reduced.penalties[dummy_of[i]]) for i in range(m)]
        clients = [Client(reduced.demands[j]) for j in range(n)]
        costs = reduced.costs[:, :n]
    else:
        dummy_of = cert.inverse()
        facilities = [Facility(reduced.capacities[i],
                               reduced.opening_costs[i] if source_kind.has_opening_costs else None)
                      for i in range(m)]
        clients = [Client(reduced.demands[j], reduced.opening_costs[dummy_of[j]]) for j in range(n)]
        costs = reduced.costs[:m, :]
    return Instance(source_kind, tuple(facilities), tuple(clients), costs, cert.source_metric)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def _positive(flows: Counter) -> Iterable[Tuple[int, int, int]]:
    return [(i, j, x) for (i, j), x in sorted(flows.items()) if x > 0]


def _swap(flows: Counter, i0: int, j0: int, i1: int, j1: int) -> int:
    """Move min(x[i0,j1], x[i1,j0]) onto (i0,j0) and (i1,j1); row and column totals are kept."""
    amount = min(flows[(i0, j1)], flows[(i1, j0)])
    flows[(i0, j0)] += amount
    flows[(i1, j1)] += amount
    flows[(i0, j1)] -= amount
    flows[(i1, j0)] -= amount
    return amount


def normalize_dummy_service(reduced: Instance, sol: Solution, cert: ReductionCertificate) -> Solution:
    """
    Rewrite a feasible reduced solution so that every free facility is open
    and every open dummy facility fully serves its own client.

    Dummies are processed in ascending index. While dummy k does not yet cover
    its client j, the lowest-index other supplier i1 of j either swaps with k's
    lowest foreign client j1, or, when k serves nobody else, hands its flow to j
    over to k. The objective never increases.

    Args:
        reduced: Reduced CFL/UFL instance
        sol: Feasible solution of reduced
        cert: Certificate of a facility gadget

    Returns:
        The normalized solution with its objective
    """
    if not cert.direction.dummy_facilities:
        raise MarketChoiceError("normalize_dummy_service applies to dummy-facility gadgets")
    value = evaluate(reduced, sol)
    if isinstance(value, ValidationReport):
        raise InvalidSolutionError(value)

    flows = Counter({(f.facility, f.client): f.amount for f in sol.flows})
    open_set = set(sol.open_set) | {i for i, f in enumerate(reduced.opening_costs) if f == 0}

    swaps = 0
    for k, j in cert.dummy_map:
        if k not in open_set:
            continue
        demand = reduced.demands[j]
        while flows[(k, j)] < demand:
            partner = min(i for i in range(reduced.m) if i != k and flows[(i, j)] > 0)
            foreign = [j1 for j1 in range(reduced.n) if j1 != j and flows[(k, j1)] > 0]
            if foreign:
                _swap(flows, k, j, partner, foreign[0])
            else:
                amount = min(flows[(partner, j)], demand - flows[(k, j)])
                flows[(k, j)] += amount
                flows[(partner, j)] -= amount
            swaps += 1

    normalized = build_solution(reduced, _positive(flows), open_set=open_set)
    logger.debug(f"Normalized dummy service with {swaps} moves: {value} -> {normalized.objective}")
    return normalized


def _serve_dummy_clients_from_own_facility(reduced: Instance, sol: Solution,
                                           cert: ReductionCertificate) -> Solution:
    """
    Counterpart of normalize_dummy_service for the dummy-client gadget: each
    served dummy client receives its whole demand from its own facility.
    """
    flows = Counter({(f.facility, f.client): f.amount for f in sol.flows})
    for d, i in cert.dummy_map:
        if d in sol.unserved:
            continue
        demand = reduced.demands[d]
        while flows[(i, d)] < demand:
            supplier = min(i1 for i1 in range(reduced.m) if i1 != i and flows[(i1, d)] > 0)
            foreign = [j1 for j1 in range(reduced.n) if j1 != d and flows[(i, j1)] > 0]
            if foreign:
                _swap(flows, i, d, supplier, foreign[0])
            else:
                amount = min(flows[(supplier, d)], demand - flows[(i, d)])
                flows[(i, d)] += amount
                flows[(supplier, d)] -= amount
    return build_solution(reduced, _positive(flows), unserved=sol.unserved)


def _reroute_foreign_flows(reduced: Instance, sol: Solution, cert: ReductionCertificate) -> Solution:
    """
    Move every dummy -> foreign client flow to the real facility witnessing the
    dummy's gadget cost. Free facilities are opened on the way.
    """
    m, _ = cert.source_dims
    client_of = cert.original_of()
    flows = Counter({(f.facility, f.client): f.amount for f in sol.flows})
    for i, j1, amount in sol.flows:
        j = client_of.get(i)
        if j is None or j1 == j:
            continue
        witness = min(range(m), key=lambda i0: (reduced.cost(i0, j1) + reduced.cost(i0, j), i0))
        flows[(i, j1)] -= amount
        flows[(witness, j1)] += amount
    open_set = set(sol.open_set) | {i for i, f in enumerate(reduced.opening_costs) if f == 0}
    return build_solution(reduced, _positive(flows), open_set=open_set)


# ---------------------------------------------------------------------------
# Back-translation
# ---------------------------------------------------------------------------

def _require_direction(cert: ReductionCertificate, *directions: Direction):
    if cert.direction not in directions:
        expected = "/".join(d.value for d in directions)
        raise MarketChoiceError(f"certificate direction {cert.direction.value} is not {expected}")


def _complete(source: Instance, unserved=(), open_set=()) -> Solution:
    """Serve every remaining client optimally given the unserved and open sets."""
    fixed = Solution(unserved=frozenset(unserved), open_set=frozenset(open_set))
    result = residual_transport(source, fixed)
    return build_solution(source, flows_from_matrix(result.flows), unserved, open_set)


def _unserved_from_open_dummies(source: Instance, normalized: Solution, cert: ReductionCertificate):
    return {j for k, j in cert.dummy_map if k in normalized.open_set and source.demands[j] > 0}


def translate_cfl_solution_to_tmc(cert: ReductionCertificate, reduced: Instance, sol: Solution) -> Solution:
    """
    Map a CFL solution of a TMC -> CFL reduction back to TMC.

    Clients whose dummy facility is open (after normalization) pay their
    penalty; the rest are served by an optimal transportation over the real
    facilities. The result never costs more than sol.
    """
    _require_direction(cert, Direction.TMC_TO_CFL)
    source = restore_source(cert, reduced)
    normalized = normalize_dummy_service(reduced, sol, cert)
    return _complete(source, unserved=_unserved_from_open_dummies(source, normalized, cert))


def translate_ufl_solution_to_utmc(cert: ReductionCertificate, reduced: Instance, sol: Solution) -> Solution:
    """UFL -> UTMC: reroute foreign dummy flows, normalize, then as for TMC."""
    _require_direction(cert, Direction.UTMC_TO_UFL)
    source = restore_source(cert, reduced)
    if source.m == 0:
        # No real facility: every client with demand pays its penalty
        return build_solution(source, [], unserved=[j for j, d in enumerate(source.demands) if d > 0])
    rerouted = _reroute_foreign_flows(reduced, sol, cert)
    normalized = normalize_dummy_service(reduced, rerouted, cert)
    return _complete(source, unserved=_unserved_from_open_dummies(source, normalized, cert))


def translate_cfl_solution_to_cflmc(cert: ReductionCertificate, reduced: Instance, sol: Solution) -> Solution:
    """CFL -> CFLMC: open dummies become unserved clients, open real facilities stay open."""
    _require_direction(cert, Direction.CFLMC_TO_CFL)
    source = restore_source(cert, reduced)
    normalized = normalize_dummy_service(reduced, sol, cert)
    open_set = {i for i in normalized.open_set if i < source.m}
    return _complete(source, unserved=_unserved_from_open_dummies(source, normalized, cert), open_set=open_set)


def translate_tmc_solution_to_cfl(cert: ReductionCertificate, reduced: Instance, sol: Solution) -> Solution:
    """
    Map a TMC solution of a CFL -> TMC reduction back to CFL.

    A solution costing at least the IUB pays a real client's penalty and is
    replaced by the all-open fallback. Otherwise facilities whose dummy client
    is unserved are opened, served dummies are moved onto their own facility,
    dummies are stripped and the transportation is re-solved on the open set.
    """
    _require_direction(cert, Direction.CFL_TO_TMC)
    source = restore_source(cert, reduced)
    m, n = cert.source_dims

    value = evaluate(reduced, sol)
    if isinstance(value, ValidationReport):
        raise InvalidSolutionError(value)

    if value >= cert.iub or any(j < n for j in sol.unserved):
        logger.debug(f"Objective {value} reaches the IUB {cert.iub}: falling back to all facilities open")
        return _complete(source, open_set=range(m))

    normalized = _serve_dummy_clients_from_own_facility(reduced, sol, cert)
    open_set = {i for d, i in cert.dummy_map if d in normalized.unserved}
    return _complete(source, open_set=open_set)


def translate_solution(cert: ReductionCertificate, reduced: Instance, sol: Solution) -> Solution:
    """Dispatch to the back-translation of the certificate's direction."""
    translators = {
        Direction.TMC_TO_CFL: translate_cfl_solution_to_tmc,
        Direction.CFL_TO_TMC: translate_tmc_solution_to_cfl,
        Direction.UTMC_TO_UFL: translate_ufl_solution_to_utmc,
        Direction.CFLMC_TO_CFL: translate_cfl_solution_to_cflmc,
    }
    return translators[cert.direction](cert, reduced, sol)
