"""
Instance, Solution and Certificate Files

JSON-shaped text files with bit-exact integers. Loaders parse through strict
pydantic schemas (no unknown fields, no negative numbers, no floats or
booleans where integers belong); writers emit keys in a fixed order with
indent=2 so identical objects always give identical files.
"""

import json
import logging
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, StrictBool, StrictInt, ValidationError

from marketchoice.model import Client, Facility, Instance, InvalidInstanceError, ProblemKind, Solution
from marketchoice.reductions import Direction, Mode, ReductionCertificate

logger = logging.getLogger(__name__)

NonNegInt = Annotated[StrictInt, Field(ge=0)]

PathLike = Union[str, Path]


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FacilityRecord(_Record):
    capacity: NonNegInt
    opening_cost: Optional[NonNegInt] = None


class ClientRecord(_Record):
    demand: NonNegInt
    penalty: Optional[NonNegInt] = None


class InstanceRecord(_Record):
    kind: ProblemKind
    facilities: List[FacilityRecord]
    clients: List[ClientRecord]
    costs: List[List[NonNegInt]]
    metric: StrictBool = False


class SolutionRecord(_Record):
    flows: List[Tuple[NonNegInt, NonNegInt, NonNegInt]] = []
    unserved: List[NonNegInt] = []
    open: List[NonNegInt] = []
    objective: Optional[NonNegInt] = None


class CertificateRecord(_Record):
    direction: Direction
    mode: Mode
    source_kind: ProblemKind
    source_metric: StrictBool = False
    source_dims: Tuple[NonNegInt, NonNegInt]
    dummy_map: List[Tuple[NonNegInt, NonNegInt]]
    iub: Optional[NonNegInt] = None


def _parse(schema, data: Any, what: str):
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        raise InvalidInstanceError(f"invalid {what} file: {e}") from e


# ---------------------------------------------------------------------------
# dict <-> object
# ---------------------------------------------------------------------------

def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    facilities = []
    for f in inst.facilities:
        record = {"capacity": f.capacity}
        if f.opening_cost is not None:
            record["opening_cost"] = f.opening_cost
        facilities.append(record)
    clients = []
    for c in inst.clients:
        record = {"demand": c.demand}
        if c.penalty is not None:
            record["penalty"] = c.penalty
        clients.append(record)
    return {
        "kind": inst.kind.value,
        "facilities": facilities,
        "clients": clients,
        "costs": [[int(v) for v in row] for row in inst.costs],
        "metric": inst.metric_claim,
    }


def instance_from_dict(data: Any) -> Instance:
    record = _parse(InstanceRecord, data, "instance")
    if len(record.costs) != len(record.facilities):
        raise InvalidInstanceError(
            f"costs has {len(record.costs)} rows for {len(record.facilities)} facilities")
    return Instance(
        kind=record.kind,
        facilities=tuple(Facility(f.capacity, f.opening_cost) for f in record.facilities),
        clients=tuple(Client(c.demand, c.penalty) for c in record.clients),
        costs=record.costs,
        metric_claim=record.metric,
    )


def solution_to_dict(sol: Solution) -> Dict[str, Any]:
    return {
        "flows": [[f.facility, f.client, f.amount] for f in sol.flows],
        "unserved": sorted(sol.unserved),
        "open": sorted(sol.open_set),
        "objective": sol.objective,
    }


def solution_from_dict(data: Any) -> Solution:
    """Parse a solution; duplicate pairs and zero flows are left for validate to report."""
    record = _parse(SolutionRecord, data, "solution")
    if len(set(record.unserved)) != len(record.unserved) or len(set(record.open)) != len(record.open):
        raise InvalidInstanceError("unserved and open lists must not repeat indices")
    return Solution(
        flows=tuple(record.flows),
        unserved=frozenset(record.unserved),
        open_set=frozenset(record.open),
        objective=record.objective,
    )


def certificate_to_dict(cert: ReductionCertificate) -> Dict[str, Any]:
    return {
        "direction": cert.direction.value,
        "mode": cert.mode.value,
        "source_kind": cert.source_kind.value,
        "source_metric": cert.source_metric,
        "source_dims": list(cert.source_dims),
        "dummy_map": [list(pair) for pair in cert.dummy_map],
        "iub": cert.iub,
    }


def certificate_from_dict(data: Any) -> ReductionCertificate:
    record = _parse(CertificateRecord, data, "certificate")
    return ReductionCertificate(
        direction=record.direction,
        mode=record.mode,
        dummy_map=tuple(record.dummy_map),
        source_dims=record.source_dims,
        source_kind=record.source_kind,
        source_metric=record.source_metric,
        iub=record.iub,
    )


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def dumps(data: Dict[str, Any]) -> str:
    """Deterministic JSON text with a trailing newline."""
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


def save_json(data: Dict[str, Any], output_path: PathLike):
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, 'w', encoding='utf-8') as f:
        f.write(dumps(data))
    logger.debug(f"Saved {output_path}")


def load_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InvalidInstanceError(f"{path} is not valid JSON: {e}") from e


def save_instance(inst: Instance, path: PathLike):
    save_json(instance_to_dict(inst), path)


def load_instance(path: PathLike) -> Instance:
    return instance_from_dict(load_json(path))


def save_solution(sol: Solution, path: PathLike):
    save_json(solution_to_dict(sol), path)


def load_solution(path: PathLike) -> Solution:
    return solution_from_dict(load_json(path))


def save_certificate(cert: ReductionCertificate, path: PathLike):
    save_json(certificate_to_dict(cert), path)


def load_certificate(path: PathLike) -> ReductionCertificate:
    return certificate_from_dict(load_json(path))
