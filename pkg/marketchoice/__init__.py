"""
marketchoice: transportation with market choice and facility location.

Reductions between TMC, CFL, UFL, UTMC and CFLMC with solution
back-translation, an exact transportation solver, brute-force oracles,
heuristics and a benchmark harness.
"""

from marketchoice.model import (
    Client,
    Facility,
    Flow,
    Instance,
    MarketChoiceError,
    ProblemKind,
    Solution,
    ValidationReport,
    check_metric,
    evaluate,
    feasible_cfl,
    instance_upper_bound,
    make_instance,
    validate,
    verify,
)
from marketchoice.reductions import (
    Mode,
    ReductionCertificate,
    cfl_to_tmc,
    cflmc_to_cfl,
    normalize_dummy_service,
    reduce_instance,
    tmc_to_cfl,
    translate_solution,
    utmc_to_ufl,
)
from marketchoice.transport import TransportResult, max_value_transport, min_cost_transport

__version__ = "0.1.0"
