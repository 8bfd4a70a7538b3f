import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chi2_contingency

from fairkit.data import (CiStatement, Dataset, Distribution, ci_holds, cond_mutual_info, conditional,
                          empirical_distribution, entropy, load_csv, marginal, prob, write_csv)
from fairkit.errors import DatasetError, UndefinedStratumError

from oracles import cmi_bits


def csv_of(text, **kw):
    return load_csv(io.StringIO(text), **kw)


def test_weights_and_domains():
    d = csv_of("A,B,weight\nx,1,2\ny,0,3\nx,1,1\n")
    assert d.total == 6
    assert d.counts[("x", "1")] == 3
    assert d.domain("B") == ("0", "1")


def test_numeric_labels_sort_numerically():
    d = csv_of("N\n10\n9\n2\n")
    assert d.domain("N") == ("2", "9", "10")


def test_cells_are_stripped():
    d = csv_of("A , B\n x , 1\n")
    assert d.columns == ("A", "B")
    assert d.counts == {("x", "1"): 1}


@pytest.mark.parametrize("text,msg", [
    ("A,B\nx\n", "row 2"),
    ("A,weight\nx,-1\n", "negative"),
    ("A,weight\nx,1.5\n", "not an integer"),
    ("A\n", "empty dataset"),
])
def test_malformed_csv(text, msg):
    with pytest.raises(DatasetError, match=msg):
        csv_of(text)


def test_pinned_domain_rejects_unknown_label():
    with pytest.raises(DatasetError, match="pinned domain"):
        csv_of("A\nz\n", schema=[("A", ("x", "y"))])
    with pytest.raises(DatasetError, match="absent"):
        csv_of("A\nx\n", schema=[("Q", ("x",))])


def test_pinned_domain_keeps_unobserved_labels():
    d = csv_of("A\nx\n", schema=[("A", ("x", "y"))])
    assert d.domain("A") == ("x", "y")
    assert marginal(d, ["A"])[("y",)] == 0.0


def test_csv_round_trip(college1):
    d, _, _ = college1
    back = csv_of(write_csv(d), schema=[(c, d.domain(c)) for c in d.columns])
    assert back == d


def test_row_order_does_not_matter():
    a = csv_of("A,B\nx,1\ny,0\nx,0\n")
    b = csv_of("A,B\nx,0\ny,0\nx,1\n")
    assert a == b and write_csv(a) == write_csv(b)


def test_apply_rejects_negative_multiplicity():
    d = Dataset([("A", ("0", "1"))], {("0",): 2})
    assert d.apply({("0",): -1, ("1",): 2}).counts == {("0",): 1, ("1",): 2}
    with pytest.raises(DatasetError):
        d.apply({("0",): -3})


def test_distribution_must_sum_to_one():
    with pytest.raises(DatasetError):
        Distribution([("A", ("0", "1"))], {("0",): 0.5, ("1",): 0.6})


def test_college_admission_rates(college1):
    d, _, _ = college1
    assert prob(d, {"O": "1"}, {"G": "female"}) == pytest.approx(0.32, abs=1e-12)
    assert prob(d, {"O": "1"}, {"G": "male", "D": "A"}) == pytest.approx(0.8, abs=1e-12)
    assert empirical_distribution(d).weight == pytest.approx(1.0)


def test_undefined_stratum():
    d = Dataset([("A", ("0", "1")), ("B", ("0", "1"))], {("0", "0"): 1})
    with pytest.raises(UndefinedStratumError):
        conditional(d, "B", {"A": "1"})


def test_independent_counts_give_exact_zero():
    d = Dataset([("X", ("0", "1")), ("Y", ("0", "1"))],
                {("0", "0"): 2, ("0", "1"): 6, ("1", "0"): 3, ("1", "1"): 9})
    assert cond_mutual_info(d, "X", "Y") == 0.0
    assert ci_holds(d, CiStatement("X", "Y"), epsilon=0.0).verdict


def test_stratum_entropy_identity():
    d = Dataset([("X", ("0", "1")), ("Y", ("0", "1"))],
                {("0", "0"): 3, ("0", "1"): 1, ("1", "0"): 1, ("1", "1"): 3})
    hx, hxy = entropy(d, "X"), entropy(d, "X", ["Y"])
    assert cond_mutual_info(d, "X", "Y") == pytest.approx(hx - hxy, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=8, max_size=8))
def test_cmi_matches_plain_sum(cells):
    if sum(cells) == 0:
        return
    keys = [(a, b, c) for a in "01" for b in "01" for c in "01"]
    d = Dataset([(n, ("0", "1")) for n in "XYZ"], dict(zip(keys, cells)))
    total = sum(cells)
    ref = cmi_bits({k: v / total for k, v in zip(keys, cells)}, ["X", "Y", "Z"], ["X"], ["Y"], ["Z"])
    assert cond_mutual_info(d, "X", "Y", "Z") == pytest.approx(max(ref, 0), abs=1e-12)


def test_gtest_matches_scipy_likelihood_ratio():
    t = np.array([[30, 10, 5], [12, 20, 9]])
    keys = {(str(i), str(j)): int(t[i, j]) for i in range(2) for j in range(3)}
    d = Dataset([("X", ("0", "1")), ("Y", ("0", "1", "2"))], keys)
    res = ci_holds(d, CiStatement("X", "Y"), policy="gtest")
    g, p, dof, _ = chi2_contingency(t, correction=False, lambda_="log-likelihood")
    assert res.statistic == pytest.approx(g, rel=1e-9)
    assert res.dof == dof and res.p_value == pytest.approx(p, rel=1e-9)
    assert not res.verdict


def test_gtest_dof_counts_observed_levels():
    d = Dataset([("Z", ("a", "b")), ("X", ("0", "1", "2")), ("Y", ("0", "1"))],
                {("a", "0", "0"): 3, ("a", "1", "1"): 2, ("a", "0", "1"): 1, ("b", "2", "0"): 4})
    res = ci_holds(d, CiStatement("X", "Y", "Z"), policy="gtest")
    assert res.dof == 1  # stratum a is 2x2, stratum b has one level of each
    smooth = ci_holds(d, CiStatement("X", "Y", "Z"), policy="gtest", smoothing=0.5)
    assert smooth.dof == 2 * (3 - 1) * (2 - 1)


def test_ci_statement_parsing():
    s = CiStatement.parse("O _|_ H,G | D")
    assert (s.left, s.right, s.given) == (("O",), ("G", "H"), ("D",))
    assert str(s) == "(O _|_ G,H | D)"
    with pytest.raises(DatasetError):
        CiStatement("A", "A")


def test_college_ci_statements(college1, college2):
    d1, _, _ = college1
    assert cond_mutual_info(d1, "O", ["G", "H"], ["D"]) == pytest.approx(0.18245, abs=1e-5)
    assert not ci_holds(d1, CiStatement.parse("O _|_ G,H | D"))
    d2, _, _ = college2
    assert ci_holds(d2, CiStatement.parse("O _|_ G | D,Q")).cmi == 0.0
    assert math.isclose(entropy(d2, "O", ["Q"]), 0.0, abs_tol=1e-15)
