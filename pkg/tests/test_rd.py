from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import HAMMING2, h2, hamming, random_joint
from scexp.errors import InfeasibleError
from scexp.probability import (
    DistortionMatrix,
    JointPmf,
    conditional_mutual_information,
    entropy,
    mutual_information,
)
from scexp.rd import (
    REMOTE_AGREEMENT_TOL,
    conditional_rd,
    delta_min,
    remote_distortion_measure,
    remote_rd,
    standard_rd,
)

BSC = JointPmf([["9/20", "1/20"], ["1/20", "9/20"]])


# -- delta_min ------------------------------------------------------------------

def test_delta_min_examples():
    assert delta_min(np.diag([0.3, 0.7]), HAMMING2) == 0.0
    val, wit = delta_min(BSC, DistortionMatrix.hamming(2), return_witness=True)
    assert val == F(1, 10)
    assert wit.tolist() == [0, 1]
    # one reproduction letter
    assert delta_min(np.array([[0.2, 0.1], [0.3, 0.4]]), np.array([[2.0], [5.0]])) == pytest.approx(0.6 + 3.5)


# -- standard -------------------------------------------------------------------

def test_standard_binary_hamming_closed_form():
    # |h(p) - h(delta)|^+ for binary Hamming
    res = standard_rd([0.5, 0.5], HAMMING2, 0.11)
    assert res.rate == pytest.approx(1 - h2(0.11), abs=1e-9)
    assert res.rate == pytest.approx(0.500084041835472, abs=1e-9)


@pytest.mark.parametrize("p, delta", [(0.3, 0.1), (0.2, 0.05), (0.45, 0.3)])
def test_standard_binary_hamming_more(p, delta):
    assert standard_rd([p, 1 - p], HAMMING2, delta).rate == pytest.approx(h2(p) - h2(delta), abs=1e-8)


def test_standard_trivial_points():
    assert standard_rd([0.3, 0.7], HAMMING2, 0.3).rate == pytest.approx(0.0, abs=1e-12)
    q = np.array([0.2, 0.5, 0.3])
    assert standard_rd(q, hamming(3), 0.0).rate == pytest.approx(entropy(q), abs=1e-9)


def test_standard_infeasible():
    with pytest.raises(InfeasibleError):
        standard_rd([0.5, 0.5], np.array([[1.0, 2.0], [1.0, 2.0]]), 0.5)


# -- remote distortion and remote rd ----------------------------------------------

def test_remote_distortion_examples():
    dt = remote_distortion_measure(BSC, DistortionMatrix.hamming(2))
    assert dt.exact.tolist() == [[F(1, 10), F(9, 10)], [F(9, 10), F(1, 10)]]
    assert np.allclose(remote_distortion_measure(np.diag([0.4, 0.6]), HAMMING2).values, HAMMING2)
    d = np.array([[0.5, 2.0, 1.0]])
    assert np.allclose(remote_distortion_measure(np.array([[0.3, 0.7]]), d).values, [d[0], d[0]])


def test_remote_distortion_drops_empty_y():
    dt = remote_distortion_measure(np.array([[0.5, 0.0], [0.5, 0.0]]), HAMMING2)
    assert dt.shape == (1, 2)


def test_remote_rd_symmetric_example():
    # only x^ = y is feasible at delta_min
    assert remote_rd(BSC, HAMMING2, 0.1).rate == pytest.approx(1.0, abs=1e-9)
    for delta in (0.15, 0.2, 0.3):
        assert remote_rd(BSC, HAMMING2, delta).rate == pytest.approx(1 - h2((delta - 0.1) / 0.8), abs=1e-8)
    assert remote_rd(BSC, HAMMING2, 0.5).rate == pytest.approx(0.0, abs=1e-12)


def test_remote_rd_noiseless_reduces_to_standard():
    p = np.array([0.3, 0.7])
    assert remote_rd(np.diag(p), HAMMING2, 0.1).rate == pytest.approx(standard_rd(p, HAMMING2, 0.1).rate, abs=1e-10)


def test_remote_rd_infeasible():
    with pytest.raises(InfeasibleError):
        remote_rd(BSC, HAMMING2, 0.05)


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.floats(0.05, 0.95))
def test_remote_rd_paths_agree(seed, frac):
    rng = np.random.default_rng(seed)
    p = random_joint(rng, (3, 2))
    d = rng.integers(0, 4, size=(3, 3)).astype(float)
    lo = delta_min(p, d)
    hi = float(np.min(p.sum(1) @ d))
    res = remote_rd(p, d, lo + frac * (hi - lo) if hi > lo else lo)
    if "agreement" in res.diagnostics:
        assert res.diagnostics["agreement"] <= REMOTE_AGREEMENT_TOL


# -- conditional rd -------------------------------------------------------------------

def test_conditional_rd_grid_oracle():
    # independent oracle: per-y binary closed form with a 2e6-point grid over the distortion split
    q = np.array([[0.2214, 0.3207], [0.1779, 0.2800]])
    assert conditional_rd(q, HAMMING2, 0.2).rate == pytest.approx(0.2726559920553212, abs=1e-6)


def test_conditional_rd_constant_y_is_standard():
    q = np.array([[0.35], [0.65]])
    assert conditional_rd(q, HAMMING2, 0.1).rate == pytest.approx(standard_rd([0.35, 0.65], HAMMING2, 0.1).rate,
                                                                  abs=1e-10)


def test_conditional_rd_zero_iff_above_delta_min(rng):
    for _ in range(5):
        q = random_joint(rng, (2, 3))
        d = hamming(2)
        dm = float(delta_min(q, d))
        assert conditional_rd(q, d, dm).rate == pytest.approx(0.0, abs=1e-8)
        if dm > 1e-3:
            assert conditional_rd(q, d, dm * 0.9).rate > 1e-8


def test_conditional_rd_witness_reproduces(rng):
    q = random_joint(rng, (2, 2))
    res = conditional_rd(q, HAMMING2, 0.5 * float(delta_min(q, HAMMING2)))
    j = q[:, :, None] * res.achieving_kernel.rows
    assert conditional_mutual_information(j) == pytest.approx(res.rate, abs=1e-9)
    assert float(np.einsum("xyh,xh->", j, HAMMING2)) <= 0.5 * float(delta_min(q, HAMMING2)) + 1e-9


# -- shared invariants -------------------------------------------------------------------

def _curve(fn, deltas):
    return np.array([fn(dv) for dv in deltas])


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_curves_nonincreasing_and_convex(seed):
    rng = np.random.default_rng(seed)
    p = random_joint(rng, (2, 2), alpha=0.7)
    d = HAMMING2
    dm = float(delta_min(p, d))
    top = float(np.min(p.sum(1) @ d))
    floor = float(p.sum(1) @ d.min(axis=1))
    checks = [
        (lambda v: standard_rd(p.sum(1), d, v).rate, floor, top),
        (lambda v: remote_rd(p, d, v, cross_check=False).rate, dm, top),
        (lambda v: conditional_rd(p, d, v).rate, floor, max(dm, floor + 1e-3)),
    ]
    for fn, lo, hi in checks:
        if hi - lo < 1e-3:
            continue
        xs = np.linspace(lo, hi, 7)
        ys = _curve(fn, xs)
        assert np.all(np.diff(ys) <= 1e-9)
        mids = _curve(fn, (xs[:-1] + xs[1:]) / 2)
        assert np.all(mids <= (ys[:-1] + ys[1:]) / 2 + 1e-8)


def test_rate_upper_bounds(rng):
    for _ in range(5):
        p = random_joint(rng, (3, 2))
        d = hamming(3)
        delta = float(delta_min(p, d)) + 0.05
        assert standard_rd(p.sum(1), d, delta).rate <= entropy(p.sum(1)) + 1e-9
        assert remote_rd(p, d, delta, cross_check=False).rate <= entropy(p.sum(0)) + 1e-9
        cond = p / p.sum(0)
        assert conditional_rd(p, d, delta).rate <= max(entropy(cond[:, y]) for y in range(2)) + 1e-9


def test_kernels_reproduce_reported_values(rng):
    p = random_joint(rng, (2, 3))
    d = hamming(2)
    delta = float(delta_min(p, d)) + 0.02
    s = standard_rd(p.sum(1), d, delta)
    js = p.sum(1)[:, None] * s.achieving_kernel.rows
    assert mutual_information(js) == pytest.approx(s.rate, abs=1e-9)
    assert float(np.sum(js * d)) <= delta + 1e-9
    r = remote_rd(p, d, delta)
    jr = p.sum(0)[:, None] * r.achieving_kernel.rows
    assert mutual_information(jr) == pytest.approx(r.rate, abs=1e-9)
    assert float(np.einsum("xy,yh,xh->", p, r.achieving_kernel.rows, d)) <= delta + 1e-9
    assert r.achieved_distortion <= delta + 1e-9
