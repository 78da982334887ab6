import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structnorm.errors import ModelError
from structnorm.model import (CovarianceModel, VariancePattern, build_coefficient,
                              build_diagonal, build_pattern, build_wigner,
                              coefficients_from_pattern)
from structnorm.structural import (
    effective_rank, row_profiles, sigma, sigma_star, sigma_star_ascent, sigma_tilde_estimate,
    structural_params, tropp_matrix,
)

from .strategies import patterns


def test_sigma_examples():
    assert sigma(build_wigner(9)) == pytest.approx(3.0)
    for n in (1, 7, 50):
        assert sigma(build_diagonal(n)) == 1.0
    assert sigma(build_pattern(np.zeros((3, 3)))) == 0.0


@given(patterns(max_n=8, allow_zero=False))
def test_sigma_coefficient_form_matches_pattern(b):
    ens = coefficients_from_pattern(VariancePattern(b))
    assert sigma(build_coefficient(ens.A)) == pytest.approx(sigma(build_pattern(b)), rel=1e-12)


def test_sigma_star_examples():
    assert sigma_star(build_wigner(5)) == 1.0
    assert sigma_star(build_pattern(2 * np.ones((3, 3)))) == 2.0
    ens = coefficients_from_pattern(build_diagonal(2).pattern)
    assert sigma_star(build_coefficient(ens.A)) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ModelError):
        sigma_star(build_wigner(2), restarts=0)


@settings(max_examples=50)
@given(patterns(max_n=5, allow_zero=False))
def test_sigma_star_closed_form_brackets_ascent(b):
    # for independent entries, sup_v E<v,Xv>^2 lies in [max b, sqrt(2) max b];
    # the lower end is attained at a basis vector, so the ascent never returns less
    closed = float(b.max())
    ens = coefficients_from_pattern(VariancePattern(b))
    asc = sigma_star_ascent(ens, restarts=8, max_iter=300, seed=1)
    assert closed * (1 - 1e-9) <= asc <= math.sqrt(2) * closed * (1 + 1e-9)


@given(st.lists(st.sampled_from([0.0, 0.5, 1.0, 2.0]), min_size=1, max_size=6))
def test_sigma_star_ascent_exact_for_diagonal(d):
    if not any(d):
        d[0] = 1.0
    ens = coefficients_from_pattern(VariancePattern(np.diag(d)))
    assert sigma_star_ascent(ens, restarts=4, seed=0) == pytest.approx(max(d), abs=1e-6)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_sigma_star_ascent_wigner_supremum(n):
    # E<v,Xv>^2 = 2 - sum v_i^4 for Wigner, maximised by the flat vector
    ens = coefficients_from_pattern(build_wigner(n).pattern)
    assert sigma_star_ascent(ens, restarts=8, seed=0) == pytest.approx(math.sqrt(2 - 1 / n), rel=1e-6)


def test_sigma_tilde_examples():
    for n in (1, 3, 6):
        ens = coefficients_from_pattern(build_diagonal(n).pattern)
        assert sigma_tilde_estimate(ens) == pytest.approx(1.0, abs=1e-6)
    single = build_coefficient([np.eye(2)]).data
    assert sigma_tilde_estimate(single, restarts=3) == pytest.approx(1.0, abs=1e-12)
    w16 = coefficients_from_pattern(build_wigner(16).pattern)
    val = sigma_tilde_estimate(w16, restarts=2, max_iter=20)
    assert 0.3 * 16 ** 0.25 <= val <= 4 * (1 + 1e-6)


def _brute_tropp(A, u1, u2, u3):
    out = np.zeros(A[0].shape, dtype=complex)
    for ak in A:
        for al in A:
            out += ak @ u1 @ al @ u2 @ ak @ u3 @ al
    return out


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 31))
def test_tropp_matrix_matches_double_sum(n, s, seed):
    r = np.random.default_rng(seed)
    A = []
    for _ in range(s):
        m = r.standard_normal((n, n))
        A.append(m + m.T)
    u = [np.diag(np.exp(1j * r.uniform(0, 2 * np.pi, n))) for _ in range(3)]
    ens = build_coefficient(A).data
    np.testing.assert_allclose(tropp_matrix(ens, *u), _brute_tropp(ens.A, *u), atol=1e-9)


@given(patterns(max_n=4, allow_zero=False), st.integers(0, 2 ** 31))
def test_tropp_matrix_entrywise_path_matches_double_sum(b, seed):
    ens = coefficients_from_pattern(VariancePattern(b))
    r = np.random.default_rng(seed)
    u = [np.diag(np.exp(1j * r.uniform(0, 2 * np.pi, ens.n))) for _ in range(3)]
    np.testing.assert_allclose(tropp_matrix(ens, *u), _brute_tropp(ens.A, *u), atol=1e-9)


@settings(max_examples=15)
@given(patterns(min_n=2, max_n=5, allow_zero=False), st.integers(0, 100))
def test_sigma_tilde_below_sigma_and_monotone_in_restarts(b, seed):
    ens = coefficients_from_pattern(VariancePattern(b))
    s = sigma(build_pattern(b))
    few = sigma_tilde_estimate(ens, restarts=1, max_iter=15, seed=seed)
    more = sigma_tilde_estimate(ens, restarts=3, max_iter=15, seed=seed)
    assert few <= more
    assert more <= s * (1 + 1e-6)


def test_effective_rank_examples():
    assert effective_rank(CovarianceModel(np.eye(5), 3)).r == pytest.approx(5.0)
    assert effective_rank(CovarianceModel(np.diag([1.0, 0, 0]), 3)).r == 1.0
    assert effective_rank(CovarianceModel(np.diag([1.0, 0.5, 0.25]), 3)).r == 1.75
    with pytest.raises(ModelError):
        effective_rank(CovarianceModel(np.zeros((2, 2)), 3))


@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=8),
       st.sampled_from([0.5, 2.0, 4.0, 0.125]))
def test_effective_rank_bounds_and_scale_invariance(eig, c):
    sig = np.diag(eig)
    r = effective_rank(CovarianceModel(sig, 1)).r
    assert 1 - 1e-12 <= r <= len(eig) + 1e-12
    # power-of-two scalings are exact in floating point
    assert effective_rank(CovarianceModel(c * sig, 1)).r == r


def test_row_profiles_examples():
    l2, l4, mx = row_profiles(build_wigner(4).pattern)
    np.testing.assert_allclose(l2, 2.0)
    np.testing.assert_allclose(l4, math.sqrt(2))
    assert mx == 1.0
    l2, l4, mx = row_profiles(build_diagonal(6).pattern)
    assert np.array_equal(l2, np.ones(6)) and np.array_equal(l4, np.ones(6)) and mx == 1.0
    l2, l4, mx = row_profiles(VariancePattern(np.zeros((3, 3))))
    assert not l2.any() and not l4.any() and mx == 0.0


def test_structural_params_routes():
    p = structural_params(build_wigner(4))
    assert p.sigma == 2.0 and p.sigma_star == 1.0 and p.sigma_tilde_lb is not None
    assert structural_params(build_wigner(40)).sigma_tilde_lb is None
    z = structural_params(build_pattern(np.zeros((2, 2))), tilde=True)
    assert z.sigma == 0 and z.sigma_tilde_lb == 0
    gen = structural_params(build_coefficient([np.ones((2, 2))]), tilde=False)
    assert not gen.sigma_star_exact
    assert gen.sigma_star == pytest.approx(2.0, rel=1e-6)  # <v,Av>^2 maximised at v = (1,1)/sqrt 2
