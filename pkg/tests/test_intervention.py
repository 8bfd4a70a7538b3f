import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairkit.dag import CausalDag
from fairkit.data import Dataset, prob
from fairkit.errors import DatasetError, PositivityError
from fairkit.intervention import (CausalModel, InterventionQuery, interventional_distribution,
                                  interventional_prob, truncated_joint)

from conftest import load_fixture
from oracles import brute_interventional, random_dag


def test_chain_and_reversed_chain():
    d, g, _ = load_fixture("chain")
    assert interventional_prob(d, g, InterventionQuery("Y", "0", {"X": "0"})) == 1.0
    rev = load_fixture("chain")[0], CausalDag(g.variables, [("Y", "X"), ("X", "Z")])
    assert interventional_prob(rev[0], rev[1], InterventionQuery("Y", "0", {"X": "0"})) == 0.5


def test_college_interventions(college1):
    d, g, _ = college1
    m = CausalModel(d, g)
    assert m.prob("O", "1", {"G": "male", "D": "A"}) == pytest.approx(0.8, abs=1e-12)
    assert m.prob("O", "1", {"G": "female", "D": "A"}) == pytest.approx(0.2, abs=1e-12)
    assert m.prob("O", "1", {"G": "female"}) == pytest.approx(0.32, abs=1e-12)


def test_college2_contexts_all_half(college2):
    d, g, _ = college2
    m = CausalModel(d, g)
    for gender, dept in itertools.product(("male", "female"), ("A", "B")):
        assert m.prob("O", "1", {"G": gender, "D": dept}) == pytest.approx(0.5, abs=1e-12)


def test_root_intervention_equals_conditioning(college1):
    d, g, _ = college1
    for s in ("male", "female"):
        assert interventional_prob(d, g, InterventionQuery("O", "1", {"G": s})) == pytest.approx(
            prob(d, {"O": "1"}, {"G": s}), abs=1e-12)


def test_truncated_joint_sums_to_one(college1):
    d, g, _ = college1
    joint = truncated_joint(d, g, {"D": "B"})
    assert joint.columns == ("G", "H", "O")
    assert sum(joint.probs.values()) == pytest.approx(1.0, abs=1e-12)


def test_positivity_violation_names_the_stratum():
    g = CausalDag([("X", ("0", "1")), ("Y", ("0", "1"))], [("X", "Y")])
    d = Dataset(g.variables, {("0", "0"): 3, ("0", "1"): 1})
    with pytest.raises(PositivityError) as err:
        interventional_distribution(d, g, "Y", {"X": "1"})
    assert err.value.stratum == {"X": "1"}


def test_zero_weight_strata_are_skipped():
    # Y's factor is only reached through X=0, so the unobserved X=1 parent stratum never matters
    g = CausalDag([("Z", ("0", "1")), ("X", ("0", "1")), ("Y", ("0", "1"))], [("Z", "X"), ("X", "Y")])
    d = Dataset(g.variables, {("0", "0", "1"): 2, ("1", "0", "0"): 2})
    assert interventional_prob(d, g, InterventionQuery("Y", "1", {"Z": "1"})) == 0.5


def test_bad_queries():
    d, g, _ = load_fixture("chain")
    with pytest.raises(DatasetError):
        InterventionQuery("X", "0", {"X": "1"})
    with pytest.raises(DatasetError):
        interventional_prob(d, g, InterventionQuery("Y", "0", {"X": "7"}))
    with pytest.raises(DatasetError):
        interventional_prob(d, g, InterventionQuery("Y", "0", {"Q": "0"}))


def _random_counts(rng, names):
    grid = list(itertools.product("01", repeat=len(names)))
    return {k: int(rng.integers(1, 6)) for k in grid}


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
def test_matches_brute_force_truncated_product(seed, n):
    rng = np.random.default_rng(seed)
    g = random_dag(rng, n, p=0.5)
    names = list(g.names)
    d = Dataset(g.variables, _random_counts(rng, names))
    outcome = names[int(rng.integers(n))]
    others = [v for v in names if v != outcome]
    k = int(rng.integers(0, len(others) + 1))
    do = {v: str(rng.integers(2)) for v in rng.permutation(others)[:k]}
    got = CausalModel(d, g).prob(outcome, "1", do)
    assert got == pytest.approx(brute_interventional(d, g, outcome, "1", do), abs=1e-12)
