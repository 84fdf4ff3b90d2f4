import numpy as np
import pytest
from hypothesis import given, strategies as st

from scalesteer.frame import MeyerProfile, analyze, build_filter_bank
from scalesteer.multipliers import (MultiplierBank, SteeringOperator, TrigMultiplierSpec,
                                    admissibility_defect, argmax_scale, bspline_spec, eval_bank,
                                    make_spec, pseudo_dilate, quality_metric, quality_sweep,
                                    response_polynomial, sincos_spec, steer_coefficients,
                                    steer_pyramid, steering_matrix)

SPEC = bspline_spec()
dil = st.floats(0.05, 20.0)


def test_bspline_alpha_identity_exact():
    # sum alpha^2 = 1 reduces to an integer identity
    assert 125 ** 2 + 2 * (101 ** 2 + 53 ** 2 + 16 ** 2 + 2 ** 2) == 42165
    assert 14055 ** 2 == 42165 * 4685
    assert sum(a * a for a in SPEC.alpha) == pytest.approx(1.0, abs=1e-15)
    assert SPEC.n_channels == 9 and SPEC.sigma == 2.0


def test_spec_validation():
    with pytest.raises(ValueError, match="alpha"):
        TrigMultiplierSpec((0.5, 0.5), 2.0, 3)
    with pytest.raises(ValueError, match="n_max"):
        TrigMultiplierSpec((0.6, 0.8), 2.0, 2)
    with pytest.raises(ValueError):
        make_spec((1.0,), sigma=0.0)
    assert make_spec((0.6, 0.8)).n_max == 3


def test_admissibility_on_grid():
    w = 2 * np.pi * np.fft.fftfreq(256)
    rho = np.hypot(w[:, None], w[None, :])
    assert admissibility_defect(SPEC, rho) < 1e-12
    assert admissibility_defect(sincos_spec(), rho) < 1e-12
    assert np.all(eval_bank(SPEC, [0.0]) == 0)


@given(x=st.floats(-8, 8))
def test_admissible_pointwise(x):
    v = SPEC.channels(np.array([x]))
    assert abs(np.sum(v ** 2) - 1.0) < 1e-12


def test_factorization_matches_channels():
    op = SteeringOperator(SPEC)
    rho = np.geomspace(0.01, 3.0, 50)
    for a in (1.0, 1.37, 3.0):
        lhs = MultiplierBank(SPEC, a).evaluate(rho)
        rhs = op.U @ op.D(a) @ op.B(rho)
        np.testing.assert_allclose(rhs.imag, 0, atol=1e-12)
        np.testing.assert_allclose(rhs.real, lhs, atol=1e-12)


@given(a=dil, b=dil, rho=st.floats(1e-3, 10.0))
def test_steering_exact(a, b, rho):
    T = steering_matrix(SPEC, a, b)
    lhs = T @ MultiplierBank(SPEC, a).evaluate(np.array([rho]))
    rhs = MultiplierBank(SPEC, b).evaluate(np.array([rho]))
    assert np.max(np.abs(lhs - rhs)) < 1e-10


@given(a=dil, b=dil, c=dil)
def test_steering_composition(a, b, c):
    lhs = steering_matrix(SPEC, b, c) @ steering_matrix(SPEC, a, b)
    assert np.max(np.abs(lhs - steering_matrix(SPEC, a, c))) < 1e-10


def test_steering_identity_orthogonal_and_periodic():
    np.testing.assert_allclose(steering_matrix(SPEC, 1.7, 1.7), np.eye(9), atol=1e-12)
    T = steering_matrix(SPEC, 1.0, 2 ** 0.3)
    np.testing.assert_allclose(T @ T.T, np.eye(9), atol=1e-12)
    # a full period of dilation is the identity on the family
    np.testing.assert_allclose(steering_matrix(SPEC, 1.0, 4.0), np.eye(9), atol=1e-12)
    # one channel step is a cyclic shift
    P = steering_matrix(SPEC, 1.0, 2 ** (2 / 9))
    np.testing.assert_allclose(np.abs(P).max(axis=1), 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        steering_matrix(SPEC, 0.0, 1.0)


def test_quadrature_steering():
    spec = sincos_spec()
    rho = np.geomspace(0.05, 3, 20)
    T = steering_matrix(spec, 1.2, 2.9)
    lhs = T @ MultiplierBank(spec, 1.2).evaluate(rho)
    np.testing.assert_allclose(lhs, MultiplierBank(spec, 2.9).evaluate(rho), atol=1e-12)


def test_coefficient_steering_matches_reanalysis(bank64, rng):
    f = rng.standard_normal((64, 64))
    a, b = 1.0, 2 ** 0.77
    src = analyze(f, bank64, MultiplierBank(SPEC, a))
    steered = steer_pyramid(src, SPEC, a, b)
    direct = analyze(f, bank64, MultiplierBank(SPEC, b))
    err = np.linalg.norm(steered.channels - direct.channels) / np.linalg.norm(direct.channels)
    assert err < 1e-8
    assert steered.multiplier_key == direct.multiplier_key
    with pytest.raises(ValueError):
        steer_pyramid(src, SPEC, 2.0, 1.0)
    with pytest.raises(ValueError):
        steer_coefficients(np.eye(9), np.zeros((8, 4, 4)))


@given(t=st.floats(0, 1.999), seed=st.integers(0, 1000))
def test_response_polynomial_is_steered_channel(t, seed):
    w = np.random.default_rng(seed).standard_normal(9)
    p = response_polynomial(w, SPEC)
    # channel n is the response at t = shift_n up to sqrt(n_max); steering moves t
    T = steering_matrix(SPEC, 1.0, 2.0 ** t)
    direct = np.sqrt(9) * (T @ w)[-1]
    assert p(t + SPEC.shifts[-1]) == pytest.approx(direct, abs=1e-9)


@given(seed=st.integers(0, 10 ** 6))
def test_argmax_is_global(seed):
    w = np.random.default_rng(seed).standard_normal(9)
    p = response_polynomial(w, SPEC)
    t, r = argmax_scale(p)
    grid = np.linspace(0, 2, 20001)
    assert 0 <= t < 2
    assert r >= p(grid).max() - 1e-9
    assert p(t) == pytest.approx(r, abs=1e-12)


def test_argmax_vectorized_and_degenerate():
    W = np.random.default_rng(1).standard_normal((9, 5, 3))
    t, r = argmax_scale(response_polynomial(W, SPEC))
    assert t.shape == (5, 3)
    t1, r1 = argmax_scale(response_polynomial(W[:, 2, 1], SPEC))
    assert t[2, 1] == pytest.approx(t1) and r[2, 1] == pytest.approx(r1)
    assert argmax_scale(response_polynomial(np.zeros(9), SPEC)) == (0.0, 0.0)


@given(s=st.floats(0, 1.99))
def test_argmax_recovers_dilation_of_pure_channel(s):
    # coefficients of M(2^-s .) evaluated against a flat spectrum peak at t = s
    e0 = np.zeros(9); e0[-1] = 1.0
    w = steering_matrix(SPEC, 1.0, 2.0 ** s).T @ e0
    t, _ = argmax_scale(response_polynomial(w, SPEC))
    d = (t - (s + SPEC.shifts[-1])) % 2.0
    assert min(d, 2.0 - d) < 1e-6


def test_quality_at_one_and_minimum():
    assert quality_metric(SPEC, a=1.0) == 1.0
    a, q = quality_sweep(SPEC, a_values=2.0 ** np.linspace(0, 2, 129))
    assert q[0] == 1.0
    assert 0.988 <= q.min() <= 1.0
    assert np.all((q >= 0) & (q <= 1))


def test_quality_period_shift():
    base = 2.0 ** np.linspace(0, 2, 65)
    _, q0 = quality_sweep(SPEC, a_values=base)
    _, q1 = quality_sweep(SPEC, a_values=base * 4.0)
    np.testing.assert_allclose(q0, q1, atol=1e-9)


def test_pseudo_dilation_errors():
    with pytest.raises(ValueError):
        pseudo_dilate(SPEC, a=0.0)
    with pytest.raises(ValueError):
        pseudo_dilate(SPEC, MeyerProfile(0.125), 1.0, eps_prime=10.0)
    pd = pseudo_dilate(SPEC, a=1.0)
    rho = np.geomspace(0.05, 3.0, 64)
    np.testing.assert_allclose(pd(rho), pd.reference(rho), atol=1e-15)
