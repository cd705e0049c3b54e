"""
Tests for SplitMix64, the seeded instance generators, the set cover embedding
and random feasible solutions.
"""

from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import small_instances, small_params
from marketchoice.formats import dumps, instance_to_dict
from marketchoice.generators import (
    GeneratorError,
    GenParams,
    cover_from_solution,
    generate_general_instance,
    generate_instance,
    generate_metric_instance,
    l1_costs,
    set_cover_instance,
)
from marketchoice.model import (
    InfeasibleInstanceError,
    ProblemKind,
    build_solution,
    check_metric,
    feasible_cfl,
    make_instance,
    verify,
)
from marketchoice.rng import SplitMix64
from marketchoice.sampling import sample_feasible_solution


# ---------------------------------------------------------------------------
# SplitMix64
# ---------------------------------------------------------------------------

def test_splitmix64_reference_outputs():
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4


def test_randint_stays_in_range():
    rng = SplitMix64(5)
    values = [rng.randint(2, 4) for _ in range(300)]
    assert set(values) == {2, 3, 4}
    assert rng.randint(7, 7) == 7
    with pytest.raises(ValueError):
        rng.randint(3, 2)


def test_shuffled_is_a_permutation():
    items = list(range(10))
    out = SplitMix64(1).shuffled(items)
    assert sorted(out) == items
    assert items == list(range(10))
    assert out == SplitMix64(1).shuffled(items)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["metric", "general"])
@pytest.mark.parametrize("kind", list(ProblemKind))
def test_generation_is_deterministic(kind, mode):
    params = GenParams(kind=kind, m=3, n=4, seed=12345)
    assert generate_instance(params, mode) == generate_instance(params, mode)


def test_different_seeds_give_different_instances():
    instances = {generate_metric_instance(GenParams(m=3, n=3, seed=s)) for s in range(10)}
    assert len(instances) > 1


def test_general_draw_order():
    params = GenParams(kind=ProblemKind.TMC, m=1, n=1, seed=42)
    rng = SplitMix64(42)
    cost = rng.randint(0, params.max_cost)
    demand = rng.randint(0, params.max_demand)
    capacity = rng.randint(0, params.max_capacity)
    penalty = rng.randint(0, params.max_penalty)
    inst = generate_general_instance(params)
    assert inst.costs.tolist() == [[cost]]
    assert (inst.demands, inst.capacities, inst.penalties) == ((demand,), (capacity,), (penalty,))


GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.mark.parametrize("filename,mode,params", [
    ("metric_tmc_m2_n2_grid4_seed1.json", "metric",
     GenParams(kind=ProblemKind.TMC, m=2, n=2, grid=4, seed=1)),
    ("general_cflmc_m3_n3_seed7.json", "general",
     GenParams(kind=ProblemKind.CFLMC, m=3, n=3, seed=7)),
])
def test_generator_matches_golden_file(filename, mode, params):
    golden = (GOLDEN_DIR / filename).read_text(encoding="utf-8")
    assert dumps(instance_to_dict(generate_instance(params, mode))) == golden


def test_metric_instances_are_metric():
    for seed in range(50):
        params = GenParams(kind=ProblemKind.TMC, m=1 + seed % 4, n=1 + seed % 5, grid=6, seed=seed)
        inst = generate_metric_instance(params)
        assert inst.metric_claim
        assert check_metric(inst.costs)
        assert inst.max_unit_cost <= 2 * params.grid


def test_l1_costs():
    costs = l1_costs(np.array([[0, 0], [2, 1]]), np.array([[1, 1], [0, 3], [2, 1]]))
    assert costs.tolist() == [[2, 3, 3], [1, 4, 0]]


def test_general_costs_respect_cap():
    for seed in range(20):
        inst = generate_general_instance(GenParams(m=3, n=3, max_cost=4, seed=seed))
        assert inst.max_unit_cost <= 4
    flat = generate_general_instance(GenParams(m=3, n=3, max_cost=0, seed=1))
    assert not flat.costs.any()


@pytest.mark.parametrize("kind", [ProblemKind.CFL, ProblemKind.CFLMC])
def test_capacitated_facility_location_is_feasible(kind):
    for seed in range(100):
        inst = generate_instance(small_params(kind, seed), "general")
        assert inst.total_supply >= inst.total_demand
        assert all(s <= 5 for s in inst.capacities)
    assert all(feasible_cfl(inst) for inst in small_instances(ProblemKind.CFL, "metric", 50))


@pytest.mark.parametrize("kind", [ProblemKind.UTMC, ProblemKind.UFL])
def test_uncapacitated_kinds_cover_total_demand(kind):
    for seed in range(20):
        inst = generate_instance(GenParams(kind=kind, m=2, n=3, seed=seed))
        assert inst.capacities == (inst.total_demand,) * 2


def test_generator_reports_unreachable_caps():
    failures = 0
    for seed in range(10):
        params = GenParams(kind=ProblemKind.CFL, m=1, n=4, max_capacity=1, max_demand=5, seed=seed)
        try:
            inst = generate_general_instance(params)
        except GeneratorError:
            failures += 1
        else:
            assert inst.total_demand <= 1
    assert failures > 0
    with pytest.raises(GeneratorError):
        generate_instance(GenParams(), "euclidean")


def test_gen_params_are_validated():
    with pytest.raises(ValidationError):
        GenParams(m=257)
    with pytest.raises(ValidationError):
        GenParams(grid=0)
    with pytest.raises(ValidationError):
        GenParams(density=0.5)


def test_empty_dimensions_are_generated():
    inst = generate_instance(GenParams(kind=ProblemKind.TMC, m=0, n=3, seed=3))
    assert (inst.m, inst.n) == (0, 3)
    inst = generate_instance(GenParams(kind=ProblemKind.CFL, m=2, n=0, seed=3))
    assert (inst.m, inst.n) == (2, 0)


# ---------------------------------------------------------------------------
# Set cover
# ---------------------------------------------------------------------------

def test_set_cover_embedding(set_cover_example):
    inst = set_cover_instance(*set_cover_example)
    assert inst.kind is ProblemKind.UFL
    assert inst.opening_costs == (1, 1, 1)
    assert inst.demands == (1, 1, 1)
    assert inst.capacities == (3, 3, 3)
    assert inst.costs.tolist() == [[0, 0, 2], [2, 0, 0], [2, 2, 0]]


def test_set_cover_rejects_bad_systems():
    with pytest.raises(GeneratorError):
        set_cover_instance(2, [[0, 2]])
    with pytest.raises(GeneratorError):
        set_cover_instance(3, [[0, 1]])


def test_cover_from_solution_repairs_expensive_service(set_cover_example):
    inst = set_cover_instance(*set_cover_example)
    sol = build_solution(inst, [(0, 0, 1), (0, 1, 1), (0, 2, 1)], open_set=[0])
    assert sol.objective == 3
    cover = cover_from_solution(inst, sol)
    assert cover == [0, 1]
    assert len(cover) <= sol.objective


# ---------------------------------------------------------------------------
# Random feasible solutions
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind", list(ProblemKind))
def test_samples_are_feasible(kind):
    for seed, inst in enumerate(small_instances(kind, "general", 40)):
        for k in range(3):
            sol = sample_feasible_solution(inst, 100 * seed + k)
            assert verify(inst, sol).ok
            assert all(inst.demands[j] > 0 for j in sol.unserved)


def test_samples_are_deterministic(t1):
    assert sample_feasible_solution(t1, 9) == sample_feasible_solution(t1, 9)


def test_sampling_rejects_infeasible_facility_location():
    with pytest.raises(InfeasibleInstanceError):
        sample_feasible_solution(make_instance("cfl", [1], [2], [[0]], opening_costs=[0]), 0)
