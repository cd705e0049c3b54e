"""
Shared fixtures: the worked instances used across test modules and a small
seeded corpus builder.
"""

import sys
from pathlib import Path

import pytest

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from marketchoice.generators import GenParams, generate_instance  # noqa: E402
from marketchoice.model import ProblemKind, make_instance  # noqa: E402


def small_params(kind: ProblemKind, seed: int, cap: int = 5, grid: int = 2) -> GenParams:
    """
    Parameters of a desk-scale instance: m, n in 1..3 cycling with the seed,
    every value at most cap, demand cap shrunk so capacitated kinds stay
    feasible.
    """
    m = 1 + seed % 3
    n = 1 + (seed // 3) % 3
    return GenParams(kind=kind, m=m, n=n, grid=grid, max_capacity=cap,
                     max_demand=min(cap, (cap * m) // n), max_penalty=cap,
                     max_opening_cost=cap, max_cost=cap, seed=seed)


def small_instances(kind: ProblemKind, mode: str, count: int, cap: int = 5):
    return [generate_instance(small_params(kind, seed, cap), mode) for seed in range(count)]


@pytest.fixture
def t1():
    """One facility (s=5); clients j0 (d=3, r=10, c=1) and j1 (d=4, r=2, c=3)."""
    return make_instance("tmc", capacities=[5], demands=[3, 4], costs=[[1, 3]],
                         penalties=[10, 2], metric_claim=True)


@pytest.fixture
def single_cfl():
    """One facility (f=3, s=5), one client (d=2), c=4."""
    return make_instance("cfl", capacities=[5], demands=[2], costs=[[4]], opening_costs=[3])


@pytest.fixture
def set_cover_example():
    """Universe {0, 1, 2} with subsets {0, 1}, {1, 2}, {2}."""
    return 3, [[0, 1], [1, 2], [2]]
