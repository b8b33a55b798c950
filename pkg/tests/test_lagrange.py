from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkorovkin.lagrange import (
    coefficient_sequence,
    compositions,
    convolve_truncated,
    generating_function_residual,
    lagrange_coefficients,
    lagrange_polynomial,
    lagrange_polynomial_enumerated,
)
from qkorovkin.qcore import q_integer, q_pochhammer

zs = st.floats(0.01, 0.99)


def _quotient(n, z, q, l):
    return q_pochhammer(q**n, q, l) * z**l / q_pochhammer(q, q, l)


def test_coefficient_sequence_examples():
    seq = coefficient_sequence(2, 0.5, 0.5, 3)
    assert seq[0] == 1.0
    assert seq[1] == pytest.approx(q_integer(2, 0.5) * 0.5, rel=1e-15)
    assert seq[1] == 0.75
    assert seq[2] == pytest.approx(_quotient(2, 0.5, 0.5, 2), rel=1e-15)
    assert seq[2] == 0.4375
    assert len(seq) == 3


def test_coefficient_sequence_is_read_only():
    seq = coefficient_sequence(3, 0.2, 0.4, 5)
    with pytest.raises(ValueError):
        seq.entries[0] = 2.0


@pytest.mark.parametrize("z", [0.0, 1.0, -0.5, 1.2])
def test_coefficient_sequence_rejects_z(z):
    with pytest.raises(ValueError):
        coefficient_sequence(2, z, 0.5, 4)


@given(st.integers(1, 30), zs, st.floats(0.05, 0.97))
def test_coefficient_recurrence(n, z, q):
    e = coefficient_sequence(n, z, q, 40).entries
    assert e[0] == 1.0 and np.all(e >= 0)
    l = np.arange(1, 40)
    ratio = z * (1 - q ** (n + l - 1)) / (1 - q**l)
    assert np.allclose(e[1:], e[:-1] * ratio, rtol=1e-12, atol=0)


def test_compositions_count_and_content():
    comps = list(compositions(3, 3))
    assert len(comps) == math.comb(5, 2)
    assert all(sum(c) == 3 and len(c) == 3 for c in comps)
    assert len(set(comps)) == len(comps)
    assert list(compositions(4, 1)) == [(4,)]


def test_polynomial_examples():
    assert lagrange_polynomial(4, 0.6, [0.3, 0.2], 0) == 1.0
    n, q, z1, z2 = 5, 0.7, 0.3, 0.45
    assert lagrange_polynomial(n, q, [z1, z2], 1) == pytest.approx(q_integer(n, q) * (z1 + z2), rel=1e-14)
    z = (0.3, 0.4, 0.5)
    oracle = math.fsum(
        math.prod(_quotient(2, zk, 0.5, lk) for zk, lk in zip(z, ls)) for ls in compositions(3, 3)
    )
    assert lagrange_polynomial(2, 0.5, z, 3) == pytest.approx(oracle, rel=1e-13)


def test_polynomial_rejects_empty():
    with pytest.raises(ValueError):
        lagrange_polynomial(2, 0.5, [], 2)
    with pytest.raises(ValueError):
        lagrange_polynomial(2, 0.5, [0.5], -1)


@given(
    st.integers(1, 12),
    st.floats(0.1, 0.95),
    st.lists(zs, min_size=1, max_size=3),
    st.integers(0, 6),
)
def test_convolution_matches_enumeration(n, q, z, p):
    conv = lagrange_polynomial(n, q, z, p)
    enum = lagrange_polynomial_enumerated(n, q, z, p)
    assert conv == pytest.approx(enum, rel=1e-12)
    assert conv >= 0


@given(st.integers(1, 8), st.floats(0.1, 0.95), st.lists(zs, min_size=2, max_size=4), st.randoms())
def test_convolution_order_independent(n, q, z, rnd):
    ref = lagrange_coefficients(n, q, z, 20)
    shuffled = list(z)
    rnd.shuffle(shuffled)
    assert np.allclose(lagrange_coefficients(n, q, shuffled, 20), ref, rtol=1e-13, atol=0)


def test_convolve_truncated():
    out = convolve_truncated(np.array([1.0, 1.0, 1.0]), np.array([1.0, 2.0, 3.0]), 3)
    assert out.tolist() == [1.0, 3.0, 6.0]


def test_generating_function_examples():
    assert generating_function_residual(3, 0.4, [0.2, 0.6], 0.0, 5) == 0.0
    assert generating_function_residual(2, 0.5, [0.5, 0.5], 0.5, 60) <= 1e-10
    assert generating_function_residual(6, 0.8, [0.3, 0.5, 0.7], 0.9, 400) <= 1e-10


def test_generating_function_residual_shrinks():
    res = [generating_function_residual(4, 0.6, [0.4, 0.7], 0.8, p) for p in (5, 10, 20, 40, 80)]
    assert all(b <= a for a, b in zip(res, res[1:]))


def test_generating_function_radius():
    with pytest.raises(ValueError):
        generating_function_residual(2, 0.5, [0.5], 2.0, 10)
    with pytest.raises(ValueError):
        generating_function_residual(2, 0.5, [0.5], -2.5, 10)
