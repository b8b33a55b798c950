from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkorovkin.gridfunction import builtin
from qkorovkin.operators import (
    OperatorSpec,
    SequenceSpec,
    Truncation,
    TruncationWarning,
    evaluate_classical,
    evaluate_enumerated,
    evaluate_K,
    evaluate_K_grid,
    evaluate_K_polynomial,
    evaluate_P_auxiliary,
    evaluate_S,
    node_functional_K,
    reciprocal_q,
)
from qkorovkin.qcore import QIntegralBounds, q_integer, q_riemann_monomial

one = lambda s: np.ones_like(s)  # noqa: E731
ident = lambda s: s  # noqa: E731
square = lambda s: s**2  # noqa: E731

# exhaust degrees 0..p_max exactly: the mass target 1 - 1e-300 is never met
EXACT8 = Truncation(mass_tol=1e-300, p_max=8)


@st.composite
def specs(draw, max_r=3):
    r = draw(st.integers(1, max_r))
    return OperatorSpec(
        n=draw(st.integers(2, 40)),
        q=draw(st.floats(0.3, 0.95)),
        betas=tuple(draw(st.lists(st.floats(0.01, 0.99), min_size=r, max_size=r))),
    )


def _k_node_oracle(spec, m):
    n, q = spec.n, spec.q

    def node(l):
        d = q_integer(n + l - 1, q)
        bounds = QIntegralBounds(q_integer(l, q) / d, q_integer(l + 1, q) / d)
        return d * q**-l * q_riemann_monomial(m, bounds, q)

    return node


def _s_node_oracle(spec, f):
    return lambda l: f(q_integer(l, spec.q) / q_integer(spec.n + l - 1, spec.q))


def _exact8(fn, *args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return fn(*args, EXACT8)


def test_spec_validation():
    with pytest.raises(ValueError):
        OperatorSpec(n=1, q=0.5, betas=(0.5,))
    with pytest.raises(ValueError):
        OperatorSpec(n=3, q=0.5, betas=(1.0,))
    with pytest.raises(ValueError):
        OperatorSpec(n=3, q=1.0, betas=(0.5,))
    with pytest.raises(ValueError):
        OperatorSpec(n=3, q=0.5, betas=())
    spec = OperatorSpec(n=3, q=0.5, betas=(0.2, 0.7))
    assert spec.r == 2 and spec.beta_r == 0.7


@pytest.mark.parametrize("kw", [{"mass_tol": 0.0}, {"mass_tol": 1.0}, {"p_max": 0}, {"p_max": 2.5}])
def test_truncation_validation(kw):
    with pytest.raises(ValueError):
        Truncation(**kw)


@pytest.mark.parametrize("l", [0, 1, 7, 300])
def test_node_functional_constant_is_exact(l):
    spec = OperatorSpec(n=5, q=0.83, betas=(0.5,))
    assert node_functional_K(spec, l, one) == 1.0


def test_node_functional_examples():
    spec = OperatorSpec(n=2, q=0.5, betas=(0.5,))
    assert node_functional_K(spec, 0, ident) == pytest.approx(2 / 3, abs=1e-14)
    spec = OperatorSpec(n=6, q=0.7, betas=(0.5,))
    for l in (0, 1, 4, 25):
        ql = lambda k: q_integer(k, spec.q)  # noqa: E731
        expected = (ql(l) + spec.q**l / ql(2)) / ql(spec.n + l - 1)
        assert node_functional_K(spec, l, ident) == pytest.approx(expected, abs=1e-13)


def test_node_functional_rejects_negative_index():
    with pytest.raises(ValueError):
        node_functional_K(OperatorSpec(n=2, q=0.5, betas=(0.5,)), -1, ident)


def test_evaluate_k_examples():
    spec = OperatorSpec(n=2, q=0.5, betas=(0.5,))
    assert evaluate_K(spec, ident, 0.0).value == pytest.approx(2 / 3, abs=1e-14)
    res = evaluate_K(OperatorSpec(n=4, q=0.6, betas=(0.3, 0.9)), one, 0.7)
    assert res.value == res.captured_mass
    assert res.value >= 1 - 1e-10 - 1e-12


def test_evaluate_k_small_instance_matches_enumeration():
    spec = OperatorSpec(n=3, q=0.5, betas=(0.5, 0.5))
    got = _exact8(evaluate_K, spec, square, 0.5).value
    want = evaluate_enumerated(spec, _k_node_oracle(spec, 2), 0.5, 8)
    assert got == pytest.approx(want, rel=1e-12)


@given(specs(), st.floats(0.0, 1.0), st.integers(0, 2))
def test_k_matches_enumeration(spec, x, m):
    got = _exact8(evaluate_K, spec, lambda s: s**m, x).value
    want = evaluate_enumerated(spec, _k_node_oracle(spec, m), x, 8)
    assert got == pytest.approx(want, rel=1e-12)


@given(specs(), st.floats(0.0, 1.0))
def test_s_matches_enumeration(spec, x):
    f = lambda s: np.cos(2 * s) + s  # noqa: E731
    got = _exact8(evaluate_S, spec, f, x).value
    want = evaluate_enumerated(spec, _s_node_oracle(spec, f), x, 8)
    assert got == pytest.approx(want, rel=1e-12)


def test_evaluate_s_examples():
    spec = OperatorSpec(n=5, q=0.7, betas=(0.4, 0.8))
    res = evaluate_S(spec, one, 0.9)
    assert res.value == res.captured_mass >= 1 - 1e-10
    assert evaluate_S(spec, lambda s: np.exp(s) + 2, 0.0).value == 3.0


def test_truncation_cap_warns_and_reports_tail():
    spec = OperatorSpec(n=20, q=0.9, betas=(0.95, 0.95))
    with pytest.warns(TruncationWarning):
        res = evaluate_K(spec, one, 1.0, Truncation(p_max=16))
    assert not res.reached_target and res.p_used == 16
    assert res.tail_bound == pytest.approx(1 - res.captured_mass, rel=1e-9)
    full = evaluate_K(spec, square, 1.0)
    with pytest.warns(TruncationWarning):
        cut = evaluate_K(spec, square, 1.0, Truncation(p_max=16))
    assert abs(full.value - cut.value) <= cut.tail_bound + full.tail_bound


def test_classical_examples():
    for kind in ("L", "E"):
        res = evaluate_classical(kind, 2, 6, (0.4, 0.7), one, 0.8)
        assert res.value == pytest.approx(1.0, abs=1e-10)
    assert evaluate_classical("E", 1, 2, (0.5,), ident, 0.0).value == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        evaluate_classical("X", 1, 2, (0.5,), ident, 0.0)
    with pytest.raises(ValueError):
        evaluate_classical("L", 2, 2, (0.5,), ident, 0.0)


def test_q_to_one_recovers_classical():
    betas, n, x = (0.6, 0.8), 8, 0.5
    e = evaluate_classical("E", 2, n, betas, square, x).value
    l = evaluate_classical("L", 2, n, betas, square, x).value
    dk, ds = [], []
    for q in (0.9, 0.99, 0.999):
        spec = OperatorSpec(n=n, q=q, betas=betas)
        dk.append(abs(evaluate_K(spec, square, x).value - e))
        ds.append(abs(evaluate_S(spec, square, x).value - l))
    assert dk[0] > dk[1] > dk[2] and ds[0] > ds[1] > ds[2]
    assert dk[2] < 1e-2 and ds[2] < 1e-2


def test_auxiliary_operator():
    spec = OperatorSpec(n=4, q=0.75, betas=(0.5, 0.6))
    base = evaluate_K(spec, square, 0.3)
    assert evaluate_P_auxiliary(spec, 3, square, 0.3) == base
    for m in (4, 9):
        aux = evaluate_P_auxiliary(spec, m, one, 0.3)
        assert aux.value == 2 * evaluate_K(spec, one, 0.3).value
        assert aux.value == pytest.approx(2.0, abs=3e-10)
    assert evaluate_P_auxiliary(spec, 16, one, 0.0).value == 2.0


def test_polynomial_path_matches_numeric_path():
    spec = OperatorSpec(n=9, q=0.8, betas=(0.5, 0.9))
    xs = np.linspace(0, 1, 7)
    numeric = evaluate_K_grid(spec, lambda s: 1 - 2 * s + 3 * s**2, xs)
    closed = evaluate_K_polynomial(spec, (1, -2, 3), xs)
    for a, b in zip(numeric, closed):
        assert a.value == pytest.approx(b.value, abs=1e-13)
        assert a.p_used == b.p_used
    f = builtin("square", 17)
    via_flag = evaluate_K_grid(spec, f, xs, exact_polynomial=True)
    assert [r.value for r in via_flag] == [r.value for r in evaluate_K_polynomial(spec, (0, 0, 1), xs)]


def test_x_outside_unit_interval_rejected():
    with pytest.raises(ValueError):
        evaluate_K(OperatorSpec(n=2, q=0.5, betas=(0.5,)), ident, 1.5)


@given(specs(), st.floats(0.0, 1.0))
def test_normalization(spec, x):
    res = evaluate_K(spec, one, x)
    assert 1 - 1e-10 - 1e-12 <= res.value <= 1 + 1e-12
    assert res.captured_mass <= 1 + 1e-12 and res.tail_bound >= 0


@given(specs(max_r=2), st.floats(0.0, 1.0), st.floats(-3, 3), st.floats(-3, 3))
def test_positive_monotone_linear(spec, x, a, b):
    f, g = square, lambda s: np.sin(3 * s) ** 2
    kf, kg = evaluate_K(spec, f, x), evaluate_K(spec, g, x)
    assert kf.value >= 0 and kg.value >= 0
    # s^2 <= s on [0, 1]
    ks = evaluate_K(spec, ident, x)
    assert kf.value <= ks.value + kf.tail_bound + ks.tail_bound
    combo = evaluate_K(spec, lambda s: a * f(s) + b * g(s), x)
    slack = combo.tail_bound + abs(a) * kf.tail_bound + abs(b) * kg.tail_bound + 1e-13
    assert abs(combo.value - a * kf.value - b * kg.value) <= slack


@given(st.integers(2, 200), st.floats(0.05, 0.99), st.integers(0, 2000))
def test_nodes_stay_in_unit_interval(n, q, l):
    d = q_integer(n + l - 1, q)
    assert 0 <= q_integer(l, q) / d <= q_integer(l + 1, q) / d <= 1 + 1e-15


def test_sequence_spec_default():
    seq = SequenceSpec()
    assert seq.limit == pytest.approx(math.exp(-1))
    gaps = [seq.power_gap(n) for n in (2, 4, 8, 16, 32, 64, 128)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    spec = seq.at(7)
    assert spec.q == reciprocal_q(7) and spec.betas == (7 / 8, 7 / 8)
    with pytest.raises(ValueError):
        SequenceSpec(limit=1.0)
