import json
import math
from fractions import Fraction as F
from itertools import product
from pathlib import Path

import numpy as np
import pytest

from scexp.errors import BudgetExceededError, NotRationalError
from scexp.exponent import exponent, exponent_noiseless
from scexp.oracle import (
    CSV_COLUMNS,
    exponent_trajectory,
    finite_n_converse_bound,
    optimal_pc,
    trajectory_csv,
)
from scexp.probability import DistortionMatrix, JointPmf
from scexp.types_method import (
    SuccessTable,
    all_sequences,
    build_scheme,
    evaluate_scheme,
    score_matrices,
)

HAM = DistortionMatrix.hamming(2)
REF = JointPmf([["9/20", "1/20"], ["1/20", "9/20"]])
GOLDEN = Path(__file__).parent / "data" / "reference_oracle.json"


def rational_joint(seed, shape=(2, 2), den=12):
    rng = np.random.default_rng(seed)
    w = rng.integers(1, den, size=shape)
    tot = int(w.sum())
    return JointPmf([[F(int(v), tot) for v in r] for r in w])


def encoder_optimum(p_xy, d, delta, n, m):
    """max over every encoder Y^n -> [m] with the best decoder per message, exactly."""
    ys, xs = all_sequences(n, p_xy.shape[1]), all_sequences(n, d.shape[1])
    ex, _ = score_matrices(p_xy, d, delta, n, ys, xs)
    den = math.lcm(*(v.denominator for v in ex.ravel()))
    s = np.array([[int(v * den) for v in r] for r in ex], dtype=object).astype(np.int64)
    best = 0
    for enc in product(range(m), repeat=len(ys)):
        enc = np.array(enc)
        val = sum(int(s[enc == i].sum(axis=0).max()) for i in range(m) if np.any(enc == i))
        best = max(best, val)
    return F(best, den), s, den


# -- examples ---------------------------------------------------------------------

def test_single_letter_exact_decoding():
    r = optimal_pc(REF, HAM, 0, 1, 1.0)
    assert r.M == 2
    assert r.p_c == F(9, 10)


@pytest.mark.parametrize("seed", range(4))
def test_n1_matches_single_letter_formula(seed):
    p = rational_joint(seed, (3, 2))
    d = DistortionMatrix([[0, 1, 2], [1, 0, "1/2"], [2, 1, 0]])
    delta = F(1, 2)
    r = optimal_pc(p, d, delta, 1, math.log2(3))
    cond = p.conditional(1).exact  # rows P(x | y)
    p_y = p.marginal(1).exact
    want = sum(p_y[y] * max(sum(cond[y][x] for x in range(3) if d.exact[x][h] <= delta) for h in range(3))
               for y in range(2))
    assert r.p_c == want


@pytest.mark.parametrize("n, rate", [(1, 0.0), (2, 0.5), (3, 0.0), (4, 0.25)])
def test_large_delta_is_certain(n, rate):
    r = exponent_trajectory(REF, HAM, 1, rate, [n])[0]
    assert r.p_c == 1
    assert r.scheme_prob == 1
    assert r.converse_bound >= 1
    assert r.sandwich_holds


def test_golden_reference_rows():
    doc = json.loads(GOLDEN.read_text())
    ns = [row["n"] for row in doc["rows"]]
    reps = exponent_trajectory(REF, HAM, F(1, 5), 0.5, ns)
    for row, rep in zip(doc["rows"], reps):
        assert rep.M == row["M"]
        assert rep.exhaustive
        assert rep.p_c == F(row["p_c"])
        assert rep.scheme_prob == F(row["scheme_prob"])
        assert rep.scheme_prob_uncharged == F(row["scheme_prob_uncharged"])
        assert rep.converse_bound == F(row["converse_bound"])


# -- exhaustiveness ---------------------------------------------------------------

@pytest.mark.parametrize("seed, n, m", [(0, 2, 2), (1, 2, 3), (2, 3, 2), (3, 2, 4), (4, 3, 3)])
def test_codebook_search_equals_encoder_enumeration(seed, n, m):
    p = rational_joint(seed)
    delta = F(1, 3)
    rate = math.log2(m) / n
    want, _, _ = encoder_optimum(p, HAM, delta, n, m)
    assert optimal_pc(p, HAM, delta, n, rate).p_c == want


@pytest.mark.parametrize("seed, n, m", [(5, 4, 2), (6, 4, 3), (7, 4, 4), (8, 3, 4)])
def test_random_encoder_climb_never_beats_optimum(seed, n, m):
    p = rational_joint(seed)
    delta = F(1, 4)
    rep = optimal_pc(p, HAM, delta, n, math.log2(m) / n + 1e-12)
    assert rep.M == m
    ys, xs = all_sequences(n, 2), all_sequences(n, 2)
    ex, _ = score_matrices(p, HAM, delta, n, ys, xs)
    den = math.lcm(*(v.denominator for v in ex.ravel()))
    s = np.array([[int(v * den) for v in r] for r in ex], dtype=object).astype(np.int64)

    def value(enc):
        return sum(int(s[enc == i].sum(axis=0).max()) for i in range(m) if np.any(enc == i))

    rng = np.random.default_rng(seed)
    best = 0
    for _ in range(20):
        enc = rng.integers(0, m, size=len(ys))
        v = value(enc)
        improved = True
        while improved:
            improved = False
            for y in rng.permutation(len(ys)):
                for i in range(m):
                    old = enc[y]
                    enc[y] = i
                    w = value(enc)
                    if w > v:
                        v, improved = w, True
                    else:
                        enc[y] = old
        best = max(best, v)
    assert F(best, den) <= rep.p_c


# -- invariants -------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_witness_reproduces_value_and_sandwich(seed):
    p = rational_joint(seed)
    delta = F(seed % 3 + 1, 6)
    for n in (2, 3, 4):
        rep = exponent_trajectory(p, HAM, delta, 0.5, [n])[0]
        assert evaluate_scheme(rep.witness, p, HAM, delta) == rep.p_c
        assert rep.witness.messages_used <= rep.M
        assert rep.scheme_prob <= rep.p_c <= rep.converse_bound
        assert rep.scheme_prob_uncharged is not None
        assert rep.exponent_estimate >= rep.bound_exponent - 1e-12
        assert rep.exponent_estimate >= 0


def test_monotone_in_rate_and_delta():
    p = rational_joint(11)
    n = 3
    deltas = [F(0), F(1, 3), F(2, 3), F(1)]
    rates = [0.0, 1 / 3, 2 / 3, 1.0]
    table = [[optimal_pc(p, HAM, dl, n, r + 1e-12).p_c for dl in deltas] for r in rates]
    for i in range(len(rates)):
        for j in range(len(deltas)):
            if i:
                assert table[i][j] >= table[i - 1][j]
            if j:
                assert table[i][j] >= table[i][j - 1]


def test_converse_bound_on_ternary_instance():
    p = rational_joint(12, (3, 2))
    d = DistortionMatrix([[0, 1], [1, 0], ["1/2", "1/2"]])
    for n in (1, 2, 3):
        rep = exponent_trajectory(p, d, F(1, 3), 0.6, [n])[0]
        assert rep.sandwich_holds


def test_converse_bound_is_exact_rational():
    b = finite_n_converse_bound(REF, HAM, F(1, 5), 3, 0.5)
    assert isinstance(b, F)
    assert b == F(141, 200)


# -- budget and errors --------------------------------------------------------------

def test_budget_exceeded():
    with pytest.raises(BudgetExceededError):
        optimal_pc(REF, HAM, F(1, 5), 5, 0.5, budget=10)
    reps = exponent_trajectory(REF, HAM, F(1, 5), 0.5, [2, 5], budget=10)
    assert reps[0].error is None
    assert "budget" in reps[1].error
    # the bound and the scheme are still reported on the failed row
    assert reps[1].converse_bound > 0 and reps[1].scheme_prob > 0


def test_hill_climb_is_a_lower_bound():
    exact = optimal_pc(REF, HAM, F(1, 5), 5, 0.5)
    climbed = optimal_pc(REF, HAM, F(1, 5), 5, 0.5, mode="hill-climb")
    assert not climbed.exhaustive
    assert climbed.p_c <= exact.p_c
    assert evaluate_scheme(climbed.witness, REF, HAM, F(1, 5)) == climbed.p_c


def test_rejects_float_instance_and_bad_mode():
    with pytest.raises(NotRationalError):
        optimal_pc(JointPmf([[0.45, 0.05], [0.05, 0.45]]), HAM, F(1, 5), 2, 0.5)
    with pytest.raises(ValueError):
        optimal_pc(REF, HAM, F(1, 5), 2, 0.5, mode="guess")


# -- trajectory output ---------------------------------------------------------------

def test_trajectory_csv_layout():
    reps = exponent_trajectory(REF, HAM, F(1, 5), 0.5, [2, 3])
    text = trajectory_csv(reps)
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("2,2,1,0.45,0.45,0.955,")
    assert text.endswith("\n") and "\r" not in text


def test_noiseless_estimate_near_exponent_at_n8():
    # Delta = 1/8 so that n Delta is an integer at n = 8
    p = JointPmf([["3/10", "0"], ["0", "7/10"]])
    e = exponent_noiseless([0.3, 0.7], 0.3, 0.125, [[0, 1], [1, 0]]).value
    assert e == pytest.approx(exponent(np.diag([0.3, 0.7]), 0.3, 0.125, [[0, 1], [1, 0]]).value, abs=1e-6)
    rep = exponent_trajectory(p, HAM, F(1, 8), 0.3, [8], mode="hill-climb")[0]
    assert rep.sandwich_holds
    assert abs(rep.exponent_estimate - e) <= 0.25


def test_success_table_cache_is_per_joint_type():
    t = SuccessTable(REF.conditional(1), HAM, F(1, 2), 4)
    assert t.prob((0, 1, 0, 1), (0, 1, 1, 1)) == t.prob((1, 0, 1, 0), (1, 0, 1, 1))
    assert len(t._cache) == 1
