import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from parastab.forms import HilbertMetric, PositiveTypeOperator, associated_operator, random_accretive_form, random_metric
from parastab.fracpow import (
    IllConditionedError,
    ImaginaryPowerBoundError,
    decompose,
    fractional_power,
    imaginary_power_norm,
    j_isometry,
    power_semigroup_check,
    scale_norm,
)


def op(a, g=None):
    a = np.asarray(a, dtype=complex)
    return PositiveTypeOperator(a, g or HilbertMetric.euclidean(a.shape[0]))


def test_square_root_upper_triangular_both_paths():
    a = op([[2, 1], [0, 3]])
    for method in ("eig", "schur"):
        r = fractional_power(a, 0.5, method).entries
        assert r[0, 1] == pytest.approx(math.sqrt(3) - math.sqrt(2), abs=1e-14)
        np.testing.assert_allclose(r @ r, a.entries, atol=1e-14)


def test_jordan_block_takes_schur_path():
    a = op([[2, 1], [0, 2]])
    assert a.decomposition.kind == "schur"
    r = fractional_power(a, 0.5).entries
    # f(J) = [[f(2), f'(2)], [0, f(2)]]
    np.testing.assert_allclose(r, [[math.sqrt(2), 1 / (2 * math.sqrt(2))], [0, math.sqrt(2)]], atol=1e-14)
    with pytest.raises(IllConditionedError):
        fractional_power(a, 0.5, method="eig")


def test_defective_cluster_against_scipy():
    a = np.array([[3, 1, 0, 0.5], [0, 3, 1, 0], [0, 0, 3, 2], [0, 0, 0, 5.0]])
    for alpha in (0.5, -0.75, 1.3):
        ours = fractional_power(op(a), alpha).entries
        np.testing.assert_allclose(ours, sla.fractional_matrix_power(a, alpha), rtol=1e-9, atol=1e-11)


def test_nearly_confluent_eigenvalues_cluster():
    a = np.array([[1.0, 1.0], [0.0, 1.0 + 1e-10]])
    dec = decompose(op(a), kind="schur")
    assert dec.blocks == ((0, 2),)
    r = fractional_power(op(a), 0.5, "schur").entries
    np.testing.assert_allclose(r @ r, a, atol=1e-13)


@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.floats(-2, 2))
def test_power_matches_scipy(n, seed, alpha):
    rng = np.random.default_rng(seed)
    a = associated_operator(random_accretive_form(rng, n))
    ref = sla.fractional_matrix_power(np.asarray(a.entries), alpha)
    np.testing.assert_allclose(fractional_power(a, alpha).entries, ref, rtol=1e-8, atol=1e-10)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_power_law(n, seed, g, d):
    rng = np.random.default_rng(seed)
    a = associated_operator(random_accretive_form(rng, n), random_metric(rng, n))
    assert power_semigroup_check(a, g, d, trials=4, rng=rng) < 1e-9


def test_alpha_zero_is_identity(rng):
    a = associated_operator(random_accretive_form(rng, 3))
    np.testing.assert_array_equal(fractional_power(a, 0).entries, np.eye(3))


def test_self_adjoint_in_metric_uses_eigh(rng):
    g = random_metric(rng, 4)
    s = rng.standard_normal((4, 4))
    # G A = S S^T + I is Hermitian, so A is self-adjoint in G
    a = op(np.linalg.solve(g.gram, s @ s.T + np.eye(4)), g)
    assert a.is_self_adjoint
    r = fractional_power(a, 0.5)
    np.testing.assert_allclose(r.entries @ r.entries, a.entries, atol=1e-12)
    assert r.norm() == pytest.approx(math.sqrt(a.norm()), rel=1e-10)


def test_scale_norm_and_isometry(rng):
    a = associated_operator(random_accretive_form(rng, 4))
    u = rng.standard_normal(4)
    for alpha, beta in [(0.0, 1.0), (-1.0, 0.5), (1.5, -2.0)]:
        j = j_isometry(a, alpha, beta)
        assert scale_norm(a, beta, j @ u) == pytest.approx(scale_norm(a, alpha, u), rel=1e-10)


def test_imaginary_power_bound_and_violation():
    a = associated_operator(random_accretive_form(np.random.default_rng(1), 4))
    for s in (-1.0, 0.5, 2.0):
        assert imaginary_power_norm(a, s) <= math.exp(math.pi * abs(s) / 2) + 1e-10
    # a non-accretive positive-type operator can break the bound
    bad = op([[1, 100], [0, 1.2]])
    with pytest.raises(ImaginaryPowerBoundError):
        imaginary_power_norm(bad, 1.0)
