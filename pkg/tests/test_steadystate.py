import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from kerrmag import (
    CovarianceMatrix,
    DriftModel,
    DriftUnstableError,
    DivergenceError,
    InvalidParameterError,
    NumericalError,
    SingularityError,
    build_drift,
    direct_couplings,
    integrate_cm,
    lyapunov_steady,
    resolve_params,
    solve_lyapunov,
    symplectic_eigenvalues,
    two_time_cm,
)

TWO_PI = 2.0 * math.pi


def toy_params(**kw):
    base = {
        "omega_m1": 1e9, "omega_m2": 1e9, "delta_m1": 0.0, "delta_m2": 0.0,
        "delta_c": 7.0, "g1": 5.0, "g2": 6.0,
        "gamma_m1": 0.5, "gamma_m2": 0.25, "gamma_c": 2.0,
        "kerr1": 0.0, "kerr2": 0.0, "temperature": 0.0, "power": 0.0,
    }
    base.update(kw)
    return resolve_params(base)


def toy_model(G=3.0, F=4.0, **kw):
    p = toy_params(**kw)
    c1 = direct_couplings(G, F, 12.0)
    c2 = direct_couplings(1.0, 2.0, 8.0)
    return build_drift(c1, c2, p)


def unstable_model():
    # Squeezing rate far above damping at vanishing effective detuning.
    p = toy_params()
    c1 = direct_couplings(0.0, 50.0, -100.0)
    c2 = direct_couplings(1.0, 2.0, 8.0)
    model = build_drift(c1, c2, p)
    assert not model.stable
    return model


def random_stable_model(rng):
    """Random 6x6 stable drift with positive diagonal diffusion."""
    re = rng.uniform(-1.5, -0.7, size=3)
    im = rng.uniform(0.5, 2.0, size=3)
    lam = np.empty(6, dtype=complex)
    lam[0::2] = re + 1j * im
    lam[1::2] = re - 1j * im
    blocks = [np.array([[l.real, l.imag], [-l.imag, l.real]]) for l in lam[0::2]]
    L = scipy.linalg.block_diag(*blocks)
    S = np.eye(6) + 0.3 * rng.normal(size=(6, 6))
    A = S @ L @ np.linalg.inv(S)
    D = np.diag(rng.uniform(0.2, 2.0, size=6))
    stable = bool(np.max(np.linalg.eigvals(A).real) < 0)
    return DriftModel(A=A, D=D, eigenvalues_A=np.linalg.eigvals(A), stable=stable)


class TestCovarianceMatrix:
    def test_symmetrized_and_read_only(self):
        M = np.arange(36, dtype=float).reshape(6, 6)
        cm = CovarianceMatrix(M)
        assert np.allclose(cm.C, (M + M.T) / 2.0)
        with pytest.raises(ValueError):
            cm.C[0, 0] = 1.0

    def test_shape_and_finiteness_validated(self):
        with pytest.raises(InvalidParameterError):
            CovarianceMatrix(np.eye(4))
        bad = np.eye(6)
        bad[2, 2] = np.inf
        with pytest.raises(InvalidParameterError):
            CovarianceMatrix(bad)

    def test_vacuum_is_physical(self):
        assert CovarianceMatrix(0.5 * np.eye(6)).is_physical()

    def test_sub_vacuum_noise_is_unphysical(self):
        assert not CovarianceMatrix(0.4 * np.eye(6)).is_physical()


class TestSymplecticEigenvalues:
    def test_vacuum(self):
        nus = symplectic_eigenvalues(0.5 * np.eye(6))
        assert np.allclose(nus, [0.5, 0.5, 0.5])

    def test_thermal_values_sorted(self):
        C = np.diag([2.5, 2.5, 0.5, 0.5, 1.25, 1.25])
        assert np.allclose(symplectic_eigenvalues(C), [0.5, 1.25, 2.5])

    def test_single_mode_squeezing_is_invariant(self):
        r = 0.8
        C = 0.5 * np.diag([math.exp(2 * r), math.exp(-2 * r)])
        assert np.allclose(symplectic_eigenvalues(C), [0.5])

    def test_odd_dimension_rejected(self):
        with pytest.raises(InvalidParameterError):
            symplectic_eigenvalues(np.eye(3))


class TestLyapunovSteady:
    def test_scalar_balance(self):
        # A = -gamma I, D = gamma (2n+1) I: C = (n + 1/2) I.
        gamma, n = 0.7, 1.3
        C = lyapunov_steady(-gamma * np.eye(2), gamma * (2 * n + 1) * np.eye(2))
        assert np.allclose(C, (n + 0.5) * np.eye(2), rtol=1e-12)

    def test_diagonal_hand_case(self):
        A = np.diag([-1.0, -2.0])
        D = np.diag([2.0, 8.0])
        assert np.allclose(lyapunov_steady(A, D), np.diag([1.0, 2.0]), rtol=1e-12)

    def test_residual_bound_and_positivity_random(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            model = random_stable_model(rng)
            C = lyapunov_steady(model.A, model.D)
            residual = np.max(np.abs(model.A @ C + C @ model.A.T + model.D))
            assert residual < 1e-10 * np.max(np.abs(model.D))
            assert np.allclose(C, C.T)
            assert np.min(np.linalg.eigvalsh(C)) > -1e-10

    def test_linear_in_diffusion(self):
        rng = np.random.default_rng(11)
        model = random_stable_model(rng)
        D1 = np.diag(rng.uniform(0.1, 1.0, size=6))
        D2 = np.diag(rng.uniform(0.1, 1.0, size=6))
        C12 = lyapunov_steady(model.A, D1 + D2)
        C1 = lyapunov_steady(model.A, D1)
        C2 = lyapunov_steady(model.A, D2)
        assert np.allclose(C12, C1 + C2, rtol=1e-10, atol=1e-12)

    def test_eigenvalue_pair_summing_to_zero_is_singular(self):
        with pytest.raises(SingularityError):
            lyapunov_steady(np.diag([1.0, -1.0]), np.eye(2))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidParameterError):
            lyapunov_steady(-np.eye(2), np.eye(3))


class TestSolveLyapunov:
    def test_unstable_model_rejected(self):
        with pytest.raises(DriftUnstableError):
            solve_lyapunov(unstable_model())

    def test_passive_dynamics_preserves_vacuum(self):
        # G = F = 0 at zero temperature: beam-splitter coupling alone
        # cannot squeeze, so the stationary state is the vacuum.
        p = toy_params()
        model = build_drift(direct_couplings(0.0, 0.0, 12.0),
                            direct_couplings(0.0, 0.0, 8.0), p)
        C = solve_lyapunov(model)
        assert np.allclose(C.C, 0.5 * np.eye(6), rtol=0, atol=1e-12)

    def test_result_is_physical(self):
        model = toy_model()
        assert model.stable
        assert solve_lyapunov(model).is_physical()


class TestIntegrateCm:
    def test_zero_duration_returns_initial(self):
        model = toy_model()
        C0 = CovarianceMatrix(0.5 * np.eye(6))
        out = integrate_cm(model, C0, 0.0)
        assert np.array_equal(out.C, C0.C)

    def test_fixed_point_of_stationary_state(self):
        model = toy_model()
        Css = solve_lyapunov(model)
        out = integrate_cm(model, Css, 3.0)
        assert np.allclose(out.C, Css.C, rtol=1e-9, atol=1e-12)

    def test_converges_to_lyapunov_solution(self):
        model = toy_model()
        slowest = 1.0 / abs(np.max(model.eigenvalues_A.real))
        out = integrate_cm(model, CovarianceMatrix(0.5 * np.eye(6)), 40.0 * slowest)
        Css = solve_lyapunov(model)
        rel = np.linalg.norm(out.C - Css.C) / np.linalg.norm(Css.C)
        assert rel < 1e-8

    def test_explicit_step_size_accepted(self):
        model = toy_model()
        Css = solve_lyapunov(model)
        out = integrate_cm(model, CovarianceMatrix(0.5 * np.eye(6)), 30.0, dt=1e-3)
        assert np.allclose(out.C, Css.C, rtol=1e-6, atol=1e-10)

    def test_trailing_fractional_step_lands_on_duration(self):
        # Duration chosen as a non-integer multiple of dt; compare with
        # a two-piece integration that splits at a full-step boundary.
        model = toy_model()
        C0 = CovarianceMatrix(0.5 * np.eye(6))
        dt = 0.013
        whole = integrate_cm(model, C0, 0.26 + 0.005, dt=dt)
        first = integrate_cm(model, C0, 0.26, dt=dt)
        rest = integrate_cm(model, first, 0.005, dt=dt)
        assert np.allclose(whole.C, rest.C, rtol=1e-10, atol=1e-13)

    def test_oversized_step_diverges(self):
        model = toy_model()
        fastest = np.max(np.abs(model.eigenvalues_A))
        with pytest.raises(DivergenceError):
            integrate_cm(model, CovarianceMatrix(0.5 * np.eye(6)), 5000.0,
                         dt=500.0 / fastest)

    def test_invalid_duration_rejected(self):
        model = toy_model()
        with pytest.raises(InvalidParameterError):
            integrate_cm(model, CovarianceMatrix(0.5 * np.eye(6)), -1.0)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_oracle_equivalence_random_models(self, seed):
        rng = np.random.default_rng(seed)
        model = random_stable_model(rng)
        duration = 25.0 / abs(np.max(model.eigenvalues_A.real))
        out = integrate_cm(model, CovarianceMatrix(np.zeros((6, 6))), duration)
        Css = lyapunov_steady(model.A, model.D)
        rel = np.linalg.norm(out.C - Css) / np.linalg.norm(Css)
        assert rel < 1e-6


class TestTwoTimeCm:
    def test_zero_lag_returns_stationary(self):
        model = toy_model()
        Css = solve_lyapunov(model)
        assert np.allclose(two_time_cm(model, Css, 0.0), Css.C, rtol=0, atol=1e-15)

    def test_matches_matrix_exponential(self):
        model = toy_model()
        Css = solve_lyapunov(model)
        tau = 0.37
        expected = scipy.linalg.expm(model.A * tau) @ Css.C
        assert np.allclose(two_time_cm(model, Css, tau), expected, rtol=1e-12)

    def test_long_lag_decays(self):
        model = toy_model()
        Css = solve_lyapunov(model)
        slowest = 1.0 / abs(np.max(model.eigenvalues_A.real))
        out = two_time_cm(model, Css, 60.0 * slowest)
        assert np.max(np.abs(out)) < 1e-12 * np.linalg.norm(Css.C)

    def test_initial_slope_is_a_times_css(self):
        model = toy_model()
        Css = solve_lyapunov(model)
        h = 1e-6 / np.linalg.norm(model.A)
        slope = (two_time_cm(model, Css, h) - Css.C) / h
        expected = model.A @ Css.C
        assert np.linalg.norm(slope - expected) < 1e-5 * np.linalg.norm(expected)

    def test_unstable_model_rejected(self):
        C = CovarianceMatrix(0.5 * np.eye(6))
        with pytest.raises(DriftUnstableError):
            two_time_cm(unstable_model(), C, 1.0)
