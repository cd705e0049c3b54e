"""
Tests for instance, solution and certificate files: strict parsing, stable
output and file round trips.
"""

import json

import pytest

from conftest import small_params
from marketchoice.formats import (
    certificate_from_dict,
    dumps,
    instance_from_dict,
    instance_to_dict,
    load_certificate,
    load_instance,
    load_json,
    load_solution,
    save_certificate,
    save_instance,
    save_solution,
    solution_from_dict,
    solution_to_dict,
)
from marketchoice.generators import generate_instance
from marketchoice.model import InvalidInstanceError, MarketChoiceError, ProblemKind
from marketchoice.reductions import cfl_to_tmc, tmc_to_cfl
from marketchoice.solvers import exact_tmc

T1_DICT = {
    "kind": "tmc",
    "facilities": [{"capacity": 5}],
    "clients": [{"demand": 3, "penalty": 10}, {"demand": 4, "penalty": 2}],
    "costs": [[1, 3]],
    "metric": True,
}


def test_instance_dict_layout(t1):
    data = instance_to_dict(t1)
    assert data == T1_DICT
    assert list(data) == ["kind", "facilities", "clients", "costs", "metric"]


def test_instance_from_dict(t1):
    assert instance_from_dict(T1_DICT) == t1


@pytest.mark.parametrize("patch", [
    {"extra": 1},
    {"costs": [[1, -3]]},
    {"costs": [[1, 3.0]]},
    {"costs": [[1, True]]},
    {"costs": [[1, "3"]]},
    {"kind": "vrp"},
    {"metric": "yes"},
    {"facilities": [{"capacity": 5, "size": 2}]},
])
def test_instance_parsing_is_strict(patch):
    with pytest.raises(InvalidInstanceError):
        instance_from_dict({**T1_DICT, **patch})


def test_instance_semantics_are_checked():
    with pytest.raises(InvalidInstanceError):
        instance_from_dict({**T1_DICT, "costs": [[1, 3], [2, 2]]})
    with pytest.raises(InvalidInstanceError):
        instance_from_dict({**T1_DICT, "clients": [{"demand": 3}, {"demand": 4, "penalty": 2}]})
    with pytest.raises(InvalidInstanceError):
        instance_from_dict({**T1_DICT, "costs": [[0, 10], [0, 0]],
                            "facilities": [{"capacity": 5}, {"capacity": 5}]})


def test_huge_integers_stay_exact():
    data = {**T1_DICT, "metric": False, "costs": [[2**62, 3]]}
    inst = instance_from_dict(data)
    assert int(inst.costs[0, 0]) == 2**62
    assert instance_to_dict(inst)["costs"] == [[2**62, 3]]


def test_solution_dict(t1):
    sol = exact_tmc(t1)
    data = solution_to_dict(sol)
    assert data == {"flows": [[0, 0, 3]], "unserved": [1], "open": [], "objective": 5}
    assert solution_from_dict(data) == sol


def test_solution_parsing_is_strict():
    with pytest.raises(InvalidInstanceError):
        solution_from_dict({"flows": [[0, 0]]})
    with pytest.raises(InvalidInstanceError):
        solution_from_dict({"flows": [], "unserved": [1, 1]})
    with pytest.raises(InvalidInstanceError):
        solution_from_dict({"flows": [], "served": [0]})
    with pytest.raises(InvalidInstanceError):
        solution_from_dict({"flows": [[0, 0, -1]]})


def test_certificate_validation_on_load(t1):
    _, cert = tmc_to_cfl(t1)
    data = {"direction": "tmc->cfl", "mode": "metric", "source_kind": "tmc", "source_metric": True,
            "source_dims": [1, 2], "dummy_map": [[1, 0], [2, 1]], "iub": None}
    assert certificate_from_dict(data) == cert
    with pytest.raises(MarketChoiceError):
        certificate_from_dict({**data, "dummy_map": [[1, 0], [1, 1]]})
    with pytest.raises(InvalidInstanceError):
        certificate_from_dict({**data, "direction": "tmc->ufl"})


def test_file_round_trips(tmp_path, single_cfl):
    reduced, cert = cfl_to_tmc(single_cfl)
    sol = exact_tmc(reduced)
    save_instance(reduced, tmp_path / "nested" / "reduced.json")
    save_certificate(cert, tmp_path / "reduced.cert.json")
    save_solution(sol, tmp_path / "sol.json")
    assert load_instance(tmp_path / "nested" / "reduced.json") == reduced
    assert load_certificate(tmp_path / "reduced.cert.json") == cert
    assert load_solution(tmp_path / "sol.json") == sol


def test_files_are_byte_stable(tmp_path):
    for seed in range(5):
        inst = generate_instance(small_params(ProblemKind.CFLMC, seed), "metric")
        save_instance(inst, tmp_path / "a.json")
        save_instance(load_instance(tmp_path / "a.json"), tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_dumps_format():
    text = dumps({"b": 1, "a": [1, 2]})
    assert text.endswith("}\n")
    assert json.loads(text) == {"b": 1, "a": [1, 2]}
    assert text.index('"b"') < text.index('"a"')


def test_load_json_rejects_garbage(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(InvalidInstanceError):
        load_json(path)
