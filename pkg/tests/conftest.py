import json
import random
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from permjunta.perm import PartialBijection, PermFamily, RestrictionClass, all_permutations

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def frozen():
    return json.loads((DATA / "oracles.json").read_text())


@st.composite
def permutations_of(draw, n):
    return tuple(draw(st.permutations(range(n))))


@st.composite
def partial_bijections(draw, n, max_size=None):
    size = draw(st.integers(0, n if max_size is None else min(n, max_size)))
    xs = draw(st.permutations(range(n)))[:size]
    ys = draw(st.permutations(range(n)))[:size]
    return PartialBijection(tuple(zip(xs, ys)))


@st.composite
def partitions(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    parts = []
    left = n
    while left:
        k = draw(st.integers(1, min(left, parts[-1] if parts else left)))
        parts.append(k)
        left -= k
    return tuple(parts)


@st.composite
def families(draw, n, ambient=None, max_density=1.0):
    amb = RestrictionClass(n) if ambient is None else ambient
    density = draw(st.floats(0.0, max_density))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    return PermFamily(amb, frozenset(p for p in sorted(amb.members()) if rng.random() < density))


def family_of(n, predicate):
    return PermFamily.of(n, [p for p in all_permutations(n) if predicate(p)])
