import warnings

import numpy as np
import pytest

from metaqnn.errors import ParameterError
from metaqnn.gates import IsingParams, NetworkConfig, PauliCoeffTable, ising_coeffs, random_coeffs
from metaqnn.oracle import (
    build_lindbladian,
    choi_matrix,
    column_unvec,
    column_vec,
    dense_channel_step,
    dense_mz,
    dense_superoperator,
    exact_evolution,
    first_order_limit_check,
    is_cptp,
    matrix_to_doubled,
    doubled_to_matrix,
    metastable_projection,
    product_state,
    random_density_matrix,
    random_product_state,
    spectral_analysis,
    trace_distance,
)

DECAY = ising_coeffs(IsingParams(0.0, 0.0, 1.0))
H_ONLY = PauliCoeffTable(np.zeros((4, 4)), ising_coeffs(IsingParams(1.0, 2.0)).d)


def lindbladian(h, jumps):
    n = h.shape[0]
    one = np.eye(n)
    out = -1j * (np.kron(one, h) - np.kron(h.T, one))
    for j in jumps:
        jj = j.conj().T @ j
        out = out + np.kron(j.conj(), j) - 0.5 * np.kron(one, jj) - 0.5 * np.kron(jj.T, one)
    return out


def test_lindbladian_matches_reference():
    from metaqnn.oracle import lattice_operators

    t = random_coeffs(np.random.default_rng(9))
    h, jumps = lattice_operators(t, 3)
    np.testing.assert_allclose(build_lindbladian(t, 3), lindbladian(h, jumps), atol=1e-12)


class TestChannel:
    def test_zero_is_identity(self, rng):
        rho = random_density_matrix(3, rng)
        out = dense_channel_step(rho, NetworkConfig(3, 1, 0.1, PauliCoeffTable()))
        np.testing.assert_allclose(out, rho, atol=1e-13)

    @pytest.mark.parametrize("seed", range(3))
    def test_trace_and_hermiticity(self, seed):
        rng = np.random.default_rng(seed)
        cfg = NetworkConfig(3, 1, 0.1, random_coeffs(rng))
        out = dense_channel_step(random_density_matrix(3, rng), cfg)
        assert abs(np.trace(out) - 1) < 1e-13
        np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(out).min() > -1e-10

    def test_width_refused(self):
        with pytest.raises(ParameterError):
            dense_channel_step(np.eye(128) / 128, NetworkConfig(7, 1, 0.1, DECAY))

    def test_choi_of_identity(self):
        s = np.eye(4)
        c = choi_matrix(s)
        # unnormalized maximally entangled projector
        assert np.linalg.matrix_rank(c) == 1 and np.trace(c) == pytest.approx(2.0)
        assert is_cptp(s)

    def test_not_cptp(self):
        assert not is_cptp(2 * np.eye(4))

    def test_vectorization_bridges(self, rng):
        rho = random_density_matrix(2, rng)
        np.testing.assert_allclose(column_unvec(column_vec(rho)), rho)
        np.testing.assert_allclose(doubled_to_matrix(matrix_to_doubled(rho), 2), rho)

    def test_product_state(self):
        assert dense_mz(product_state(0.2, 3, 1.1)) == pytest.approx(0.2)


class TestLindbladian:
    def test_amplitude_damping_spectrum(self):
        ev = np.sort_complex(np.linalg.eigvals(build_lindbladian(DECAY, 1)))
        np.testing.assert_allclose(ev, [-1.0, -0.5, -0.5, 0.0], atol=1e-12)

    def test_hamiltonian_only_is_imaginary(self):
        ev = np.linalg.eigvals(build_lindbladian(H_ONLY, 3))
        assert np.abs(ev.real).max() < 1e-10

    @pytest.mark.parametrize("width", [1, 2, 3])
    def test_identity_left_null(self, rng, width):
        lm = build_lindbladian(random_coeffs(rng), width)
        np.testing.assert_allclose(column_vec(np.eye(2**width)) @ lm, 0, atol=1e-10)

    def test_width_refused(self):
        with pytest.raises(ParameterError):
            build_lindbladian(DECAY, 6)

    def test_steady_state_nearly_fixed(self):
        # the channel fixes the Lindblad steady state up to O(dt^1.5)
        t = ising_coeffs(IsingParams(1.0, 2.0))
        rss = spectral_analysis(build_lindbladian(t, 3)).steady_state
        gaps = [trace_distance(dense_channel_step(rss, NetworkConfig(3, 1, dt, t)), rss) for dt in (0.01, 0.0025)]
        assert np.log(gaps[0] / gaps[1]) / np.log(4) > 1.4


class TestFirstOrder:
    def test_zero_table(self):
        rep = first_order_limit_check(PauliCoeffTable(), 2, [0.1, 0.05])
        assert np.all(rep.residuals < 1e-13)

    def test_decreasing_residual(self):
        rep = first_order_limit_check(ising_coeffs(IsingParams(1.0, 2.0)), 2, [0.1, 0.05, 0.025])
        assert np.all(np.diff(rep.residuals) < 0)
        assert rep.slope > 1.4

    def test_width_refused(self):
        with pytest.raises(ParameterError):
            first_order_limit_check(DECAY, 5, [0.1])


class TestSpectrum:
    def test_single_qubit_decay(self):
        rep = spectral_analysis(build_lindbladian(DECAY, 1))
        assert rep.separation_index == 1
        np.testing.assert_allclose(rep.steady_state, [[1, 0], [0, 0]], atol=1e-12)
        assert rep.tau == np.inf and rep.tau_prime == pytest.approx(2.0)

    @pytest.mark.parametrize("seed", range(3))
    def test_invariants(self, seed):
        rep = spectral_analysis(build_lindbladian(random_coeffs(np.random.default_rng(seed)), 2))
        assert abs(rep.eigenvalues[0]) < 1e-10
        assert rep.eigenvalues.real.max() <= 1e-10
        np.testing.assert_allclose(rep.left[0], np.eye(4), atol=1e-10)
        gram = np.einsum("jab,kba->jk", rep.left, rep.right)
        np.testing.assert_allclose(gram, np.eye(16), atol=1e-8)
        assert np.all(np.diff(rep.eigenvalues.real) <= 1e-12)

    def test_metastable_manifold(self):
        # a fast and a slow decaying qubit: the slow qubit spans the manifold
        sm = np.array([[0, 1], [0, 0]], dtype=complex)
        one = np.eye(2)
        lm = lindbladian(0.01 * np.kron([[0, 1], [1, 0]], np.diag([1, -1])), [np.kron(sm, one), 0.01 * np.kron(one, sm)])
        rep = spectral_analysis(lm)
        assert rep.separation_index == 4
        assert rep.tau_prime < rep.tau
        t = np.sqrt(rep.tau * rep.tau_prime)
        rng = np.random.default_rng(5)
        for _ in range(3):
            rho0 = random_product_state(2, rng)
            assert trace_distance(metastable_projection(rep, rho0, t), exact_evolution(lm, rho0, t)) < 0.05

    def test_projection_m1_is_steady_state(self, rng):
        rep = spectral_analysis(build_lindbladian(DECAY, 2))
        rho0 = random_density_matrix(2, rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = metastable_projection(rep, rho0, 50.0)
        np.testing.assert_allclose(out, rep.steady_state, atol=1e-12)

    def test_projection_of_steady_state(self):
        rep = spectral_analysis(build_lindbladian(ising_coeffs(IsingParams(1.0, 2.0)), 2))
        for k in range(1, len(rep.eigenvalues)):
            assert abs(np.trace(rep.left[k] @ rep.steady_state)) < 1e-10

    def test_window_warning(self):
        rep = spectral_analysis(build_lindbladian(DECAY, 1))
        with pytest.warns(RuntimeWarning):
            metastable_projection(rep, np.eye(2) / 2, 0.1)

    def test_late_time_agrees(self, rng):
        lm = build_lindbladian(ising_coeffs(IsingParams(1.0, 2.0)), 2)
        rep = spectral_analysis(lm)
        rho0 = random_density_matrix(2, rng)
        t = 40 * rep.tau_prime
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            approx = metastable_projection(rep, rho0, t)
        assert trace_distance(approx, exact_evolution(lm, rho0, t)) < 1e-6

    def test_defective_warning(self):
        jordan = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.warns(RuntimeWarning):
            spectral_analysis(np.kron(np.eye(2), jordan) - 0 * np.eye(4))
