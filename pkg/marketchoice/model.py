"""
Instance and Solution Data Model

This module defines the problem instances shared by every reduction and solver:
- Transportation problem with Market Choice (TMC) and its uncapacitated form (UTMC)
- Capacitated / Uncapacitated Facility Location (CFL / UFL)
- Facility Location with Market Choice (CFLMC)

It also provides solution validation, objective evaluation, the four-point
metric check and the instance upper bound (IUB) of a CFL instance.
"""

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from marketchoice.config import INT64_MAX

logger = logging.getLogger(__name__)


class MarketChoiceError(ValueError):
    """Base class of all domain errors."""


class InvalidInstanceError(MarketChoiceError):
    pass


class InvalidSolutionError(MarketChoiceError):
    """A solver produced a solution that fails validation."""

    def __init__(self, report: "ValidationReport"):
        super().__init__(f"invalid solution: {report.summary()}")
        self.report = report


class WrongKindError(MarketChoiceError):
    pass


class InfeasibleInstanceError(MarketChoiceError):
    pass


class NonMetricError(MarketChoiceError):
    pass


class DimensionMismatchError(MarketChoiceError):
    pass


class EnumerationLimitError(MarketChoiceError):
    pass


class IntegerOverflowError(MarketChoiceError, OverflowError):
    pass


class ProblemKind(str, enum.Enum):
    TMC = "tmc"
    CFL = "cfl"
    UFL = "ufl"
    UTMC = "utmc"
    CFLMC = "cflmc"

    @property
    def has_opening_costs(self) -> bool:
        return self in (ProblemKind.CFL, ProblemKind.UFL, ProblemKind.CFLMC)

    @property
    def has_penalties(self) -> bool:
        return self in (ProblemKind.TMC, ProblemKind.UTMC, ProblemKind.CFLMC)

    @property
    def uncapacitated(self) -> bool:
        return self in (ProblemKind.UFL, ProblemKind.UTMC)


class Facility(NamedTuple):
    capacity: int
    opening_cost: Optional[int] = None


class Client(NamedTuple):
    demand: int
    penalty: Optional[int] = None


class Flow(NamedTuple):
    facility: int
    client: int
    amount: int


# ---------------------------------------------------------------------------
# Checked 64-bit arithmetic
# ---------------------------------------------------------------------------

def _check_range(value: int, what: str) -> int:
    if value > INT64_MAX or value < -INT64_MAX - 1:
        raise IntegerOverflowError(f"{what} does not fit in 64 bits: {value}")
    return value


def checked_sum(values: Iterable[int], what: str = "sum") -> int:
    """Sum integers, failing loudly instead of leaving the 64-bit range."""
    total = 0
    for value in values:
        total = _check_range(total + int(value), what)
    return total


def checked_mul(a: int, b: int, what: str = "product") -> int:
    return _check_range(int(a) * int(b), what)


def checked_value(value, what: str) -> int:
    """
    Validate one datum: an integer (not bool, not float) in [0, INT64_MAX].

    Args:
        value: Raw value
        what: Name used in error messages

    Returns:
        The value as a Python int
    """
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, (int, np.integer)):
        raise InvalidInstanceError(f"{what} must be an integer, got {value!r}")
    value = int(value)
    if value < 0:
        raise InvalidInstanceError(f"{what} must be non-negative, got {value}")
    if value > INT64_MAX:
        raise IntegerOverflowError(f"{what} does not fit in 64 bits: {value}")
    return value


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------

def _cost_matrix(costs, m: int, n: int) -> np.ndarray:
    rows = [list(row) for row in costs]
    if len(rows) != m or any(len(row) != n for row in rows):
        raise InvalidInstanceError(f"cost matrix must be {m}x{n}")
    values = [[checked_value(v, f"cost[{i}][{j}]") for j, v in enumerate(row)]
              for i, row in enumerate(rows)]
    matrix = np.array(values, dtype=np.int64).reshape(m, n)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class Instance:
    """
    Immutable problem instance.

    Facilities carry an opening cost only for CFL, UFL and CFLMC; clients carry
    a penalty only for TMC, UTMC and CFLMC. ``costs`` is an m x n read-only
    int64 matrix of per-unit transportation costs.
    """

    kind: ProblemKind
    facilities: Tuple[Facility, ...]
    clients: Tuple[Client, ...]
    costs: np.ndarray
    metric_claim: bool = False

    def __post_init__(self):
        kind = ProblemKind(self.kind)
        facilities = tuple(Facility(*f) for f in self.facilities)
        clients = tuple(Client(*c) for c in self.clients)
        object.__setattr__(self, "kind", kind)

        checked_facilities = []
        for i, fac in enumerate(facilities):
            capacity = checked_value(fac.capacity, f"capacity of facility {i}")
            if kind.has_opening_costs:
                if fac.opening_cost is None:
                    raise InvalidInstanceError(f"facility {i} needs an opening cost for kind {kind.value}")
                opening = checked_value(fac.opening_cost, f"opening cost of facility {i}")
            else:
                if fac.opening_cost is not None:
                    raise InvalidInstanceError(f"kind {kind.value} has no opening costs (facility {i})")
                opening = None
            checked_facilities.append(Facility(capacity, opening))

        checked_clients = []
        for j, cli in enumerate(clients):
            demand = checked_value(cli.demand, f"demand of client {j}")
            if kind.has_penalties:
                if cli.penalty is None:
                    raise InvalidInstanceError(f"client {j} needs a penalty for kind {kind.value}")
                penalty = checked_value(cli.penalty, f"penalty of client {j}")
            else:
                if cli.penalty is not None:
                    raise InvalidInstanceError(f"kind {kind.value} has no penalties (client {j})")
                penalty = None
            checked_clients.append(Client(demand, penalty))

        object.__setattr__(self, "facilities", tuple(checked_facilities))
        object.__setattr__(self, "clients", tuple(checked_clients))
        object.__setattr__(self, "costs", _cost_matrix(self.costs, len(facilities), len(clients)))
        object.__setattr__(self, "metric_claim", bool(self.metric_claim))

        # Totals must stay inside the checked range
        checked_sum(self.capacities, "total capacity")
        total_demand = checked_sum(self.demands, "total demand")

        if kind.uncapacitated:
            short = [i for i, s in enumerate(self.capacities) if s < total_demand]
            if short:
                raise InvalidInstanceError(
                    f"uncapacitated kind {kind.value}: facilities {short} have capacity below total demand {total_demand}")
        if self.metric_claim and not check_metric(self.costs):
            raise InvalidInstanceError("instance claims metric costs but fails the four-point inequality")

    @property
    def m(self) -> int:
        return len(self.facilities)

    @property
    def n(self) -> int:
        return len(self.clients)

    @property
    def capacities(self) -> Tuple[int, ...]:
        return tuple(f.capacity for f in self.facilities)

    @property
    def demands(self) -> Tuple[int, ...]:
        return tuple(c.demand for c in self.clients)

    @property
    def opening_costs(self) -> Tuple[int, ...]:
        """Opening costs, all zero for kinds without them."""
        return tuple(f.opening_cost or 0 for f in self.facilities)

    @property
    def penalties(self) -> Tuple[int, ...]:
        """Penalties, all zero for kinds without them."""
        return tuple(c.penalty or 0 for c in self.clients)

    @property
    def total_demand(self) -> int:
        return sum(self.demands)

    @property
    def total_supply(self) -> int:
        return sum(self.capacities)

    @property
    def max_unit_cost(self) -> int:
        return int(self.costs.max()) if self.costs.size else 0

    def cost(self, i: int, j: int) -> int:
        return int(self.costs[i, j])

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.kind == other.kind
                and self.facilities == other.facilities
                and self.clients == other.clients
                and self.metric_claim == other.metric_claim
                and np.array_equal(self.costs, other.costs))

    def __hash__(self):
        return hash((self.kind, self.facilities, self.clients, self.metric_claim, self.costs.tobytes()))

    def __repr__(self):
        return f"Instance(kind={self.kind.value}, m={self.m}, n={self.n}, metric={self.metric_claim})"


# ---------------------------------------------------------------------------
# Solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Solution:
    """
    Sparse flow assignment plus the unserved clients (penalty kinds) and the
    open facilities (opening-cost kinds). ``objective`` is filled by
    build_solution and by loaders; None means not evaluated yet.
    """

    flows: Tuple[Flow, ...] = ()
    unserved: FrozenSet[int] = frozenset()
    open_set: FrozenSet[int] = frozenset()
    objective: Optional[int] = None

    def __post_init__(self):
        flows = sorted(Flow(int(i), int(j), int(x)) for i, j, x in self.flows)
        object.__setattr__(self, "flows", tuple(flows))
        object.__setattr__(self, "unserved", frozenset(int(j) for j in self.unserved))
        object.__setattr__(self, "open_set", frozenset(int(i) for i in self.open_set))

    def as_matrix(self, m: int, n: int) -> np.ndarray:
        matrix = np.zeros((m, n), dtype=np.int64)
        for i, j, amount in self.flows:
            matrix[i, j] += amount
        return matrix

    def shipped_totals(self, m: int) -> List[int]:
        totals = [0] * m
        for i, _, amount in self.flows:
            totals[i] += amount
        return totals

    def received_totals(self, n: int) -> List[int]:
        totals = [0] * n
        for _, j, amount in self.flows:
            totals[j] += amount
        return totals

    def with_objective(self, objective: int) -> "Solution":
        return Solution(self.flows, self.unserved, self.open_set, objective)


def flows_from_matrix(matrix) -> Tuple[Flow, ...]:
    """Positive entries of a flow matrix as sparse flows, row-major."""
    return tuple(Flow(int(i), int(j), int(x))
                 for (i, j), x in np.ndenumerate(np.asarray(matrix)) if x > 0)


@dataclass
class Violation:
    code: str
    detail: str


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, detail: str):
        self.violations.append(Violation(code, detail))

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{v.code}: {v.detail}" for v in self.violations)

    def to_dict(self) -> dict:
        return {"ok": self.ok,
                "violations": [{"code": v.code, "detail": v.detail} for v in self.violations]}


def validate(inst: Instance, sol: Solution) -> ValidationReport:
    """
    Check every Solution invariant against an instance.

    Args:
        inst: Problem instance
        sol: Candidate solution

    Returns:
        ValidationReport listing all violations found
    """
    report = ValidationReport()
    m, n = inst.m, inst.n

    indices_ok = True
    for i, j, amount in sol.flows:
        if not (0 <= i < m and 0 <= j < n):
            report.add("index_out_of_range", f"flow ({i}, {j}) outside {m}x{n}")
            indices_ok = False
        if amount <= 0:
            report.add("nonpositive_flow", f"flow ({i}, {j}) has amount {amount}")
    for j in sorted(sol.unserved):
        if not 0 <= j < n:
            report.add("index_out_of_range", f"unserved client {j} outside 0..{n - 1}")
            indices_ok = False
    for i in sorted(sol.open_set):
        if not 0 <= i < m:
            report.add("index_out_of_range", f"open facility {i} outside 0..{m - 1}")
            indices_ok = False
    if not indices_ok:
        return report

    for (i, j), count in sorted(Counter((f.facility, f.client) for f in sol.flows).items()):
        if count > 1:
            report.add("duplicate_flow", f"pair ({i}, {j}) listed {count} times")

    shipped = sol.shipped_totals(m)
    for i, total in enumerate(shipped):
        if total > inst.capacities[i]:
            report.add("capacity_exceeded", f"facility {i} ships {total} > capacity {inst.capacities[i]}")

    if inst.kind.has_opening_costs:
        for i, j, amount in sol.flows:
            if i not in sol.open_set:
                report.add("flow_from_closed_facility", f"facility {i} ships {amount} to client {j} while closed")
    elif sol.open_set:
        report.add("open_set_not_allowed", f"kind {inst.kind.value} has no opening decisions")

    received = sol.received_totals(n)
    if inst.kind.has_penalties:
        for j, total in enumerate(received):
            demand = inst.demands[j]
            if j in sol.unserved:
                if demand == 0:
                    report.add("zero_demand_unserved", f"client {j} has zero demand and is always served")
                if total > 0:
                    report.add("unserved_client_flow", f"unserved client {j} receives {total}")
            elif total < demand:
                report.add("partially_served", f"client {j} receives {total} < demand {demand} but is not flagged unserved")
            elif total > demand:
                report.add("over_served", f"client {j} receives {total} > demand {demand}")
    else:
        if sol.unserved:
            report.add("unserved_not_allowed", f"kind {inst.kind.value} must serve every client")
        for j, total in enumerate(received):
            demand = inst.demands[j]
            if total < demand:
                report.add("demand_unmet", f"client {j} receives {total} < demand {demand}")
            elif total > demand:
                report.add("over_served", f"client {j} receives {total} > demand {demand}")

    return report


def _objective(inst: Instance, sol: Solution) -> int:
    transport = checked_sum((checked_mul(inst.cost(i, j), amount) for i, j, amount in sol.flows),
                            "transport cost")
    terms = [transport]
    if inst.kind.has_penalties:
        terms.append(checked_sum((inst.penalties[j] for j in sol.unserved), "penalty total"))
    if inst.kind.has_opening_costs:
        terms.append(checked_sum((inst.opening_costs[i] for i in sol.open_set), "opening total"))
    return checked_sum(terms, "objective")


def evaluate(inst: Instance, sol: Solution) -> Union[int, ValidationReport]:
    """
    Objective value of a solution: transport cost plus penalties of unserved
    clients and opening costs of open facilities, whichever the kind has.

    Returns:
        The objective, or the ValidationReport when the solution is infeasible
    """
    report = validate(inst, sol)
    if not report.ok:
        return report
    return _objective(inst, sol)


def verify(inst: Instance, sol: Solution) -> ValidationReport:
    """Validate a solution and check its stored objective against evaluate."""
    report = validate(inst, sol)
    if report.ok and sol.objective is not None:
        value = _objective(inst, sol)
        if value != sol.objective:
            report.add("objective_mismatch", f"stored objective {sol.objective} but evaluates to {value}")
    return report


def build_solution(inst: Instance,
                   flows: Iterable[Tuple[int, int, int]],
                   unserved: Iterable[int] = (),
                   open_set: Iterable[int] = ()) -> Solution:
    """
    Assemble a solution, dropping zero flows and merging repeated pairs, and
    attach its evaluated objective.

    Raises:
        InvalidSolutionError: if the result is infeasible for inst
    """
    merged = Counter()
    for i, j, amount in flows:
        merged[(int(i), int(j))] += int(amount)
    sparse = [Flow(i, j, x) for (i, j), x in merged.items() if x != 0]
    sol = Solution(tuple(sparse), frozenset(unserved), frozenset(open_set))
    value = evaluate(inst, sol)
    if isinstance(value, ValidationReport):
        raise InvalidSolutionError(value)
    return sol.with_objective(value)


# ---------------------------------------------------------------------------
# Instance-level checks
# ---------------------------------------------------------------------------

def check_metric(costs) -> bool:
    """
    Four-point triangle inequality on a facility x client cost matrix:
    c[i0, j0] <= c[i0, j1] + c[i1, j1] + c[i1, j0] for all i0, i1, j0, j1.
    """
    c = np.asarray(costs)
    if c.size == 0:
        return True
    if c.ndim != 2:
        raise DimensionMismatchError(f"cost matrix must be two-dimensional, got shape {c.shape}")
    if int(c.max()) > INT64_MAX // 3:
        c = c.astype(object)
    lhs = c[:, None, :, None]                                            # c[i0, j0]
    rhs = c[:, None, None, :] + c[None, :, None, :] + c[None, :, :, None]  # c[i0,j1] + c[i1,j1] + c[i1,j0]
    return bool(np.all(lhs <= rhs))


def feasible_cfl(inst: Instance) -> bool:
    """Total demand fits in total supply (linear time)."""
    if not inst.kind.has_opening_costs:
        raise WrongKindError(f"feasible_cfl needs a facility location instance, got {inst.kind.value} "
                             "(market choice instances are always feasible)")
    return inst.total_demand <= inst.total_supply


def instance_upper_bound(inst: Instance) -> int:
    """
    Strict upper bound on the objective of any feasible solution: all opening
    costs plus the maximum-value transportation with every facility open, plus 1.
    """
    from marketchoice.transport import max_value_transport

    if inst.kind not in (ProblemKind.CFL, ProblemKind.CFLMC):
        raise WrongKindError(f"instance upper bound is defined for cfl/cflmc, got {inst.kind.value}")
    if not feasible_cfl(inst):
        raise InfeasibleInstanceError(
            f"total demand {inst.total_demand} exceeds total supply {inst.total_supply}")
    max_transport = max_value_transport(inst.capacities, inst.demands, inst.costs)
    return checked_sum([checked_sum(inst.opening_costs, "opening total"), max_transport, 1], "instance upper bound")


def require_kind(inst: Instance, *kinds: ProblemKind, operation: str = "operation"):
    if inst.kind not in kinds:
        expected = "/".join(k.value for k in kinds)
        raise WrongKindError(f"{operation} expects {expected}, got {inst.kind.value}")


def make_instance(kind: ProblemKind,
                  capacities: Sequence[int],
                  demands: Sequence[int],
                  costs,
                  opening_costs: Optional[Sequence[int]] = None,
                  penalties: Optional[Sequence[int]] = None,
                  metric_claim: bool = False) -> Instance:
    """Convenience constructor from parallel vectors."""
    kind = ProblemKind(kind)
    facilities = [Facility(s, opening_costs[i] if opening_costs is not None else None)
                  for i, s in enumerate(capacities)]
    clients = [Client(d, penalties[j] if penalties is not None else None)
               for j, d in enumerate(demands)]
    return Instance(kind, tuple(facilities), tuple(clients), costs, metric_claim)
