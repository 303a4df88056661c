import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metaqnn.channels import measure_mz
from metaqnn.errors import ParameterError
from metaqnn.gates import (
    SWAP,
    GlobalGate,
    IsingParams,
    NetworkConfig,
    PauliCoeffTable,
    build_backward_mpo,
    build_forward_mpo,
    build_gradient_mpo,
    build_local_gate,
    gradient_insertion,
    hamiltonian_operator,
    ising_coeffs,
    jump_operator,
    pauli_string,
    random_coeffs,
    sigma_y_jump_coeffs,
    unitarity_error,
)
from metaqnn.mps import compress_mpo, from_dense, flat_overlap, identity_mps, product_mps
from metaqnn.oracle import (
    dense_channel_step,
    dense_global_gate,
    dense_superoperator,
    doubled_to_matrix,
    is_cptp,
    matrix_to_doubled,
    random_density_matrix,
)

DECAY = ising_coeffs(IsingParams(0.0, 0.0, 1.0))


def cfg_for(t, width, dt=0.1):
    return NetworkConfig(width, 1, dt, t, chi_mps=4**width)


class TestTables:
    @pytest.mark.parametrize("omega,v,d01,d33", [(59, 250, 29.5, 62.5), (70, 250, 35.0, 62.5)])
    def test_ising_couplings(self, omega, v, d01, d33):
        t = ising_coeffs(IsingParams(omega, v))
        assert t.d[0, 1] == d01 and t.d[3, 3] == d33
        assert np.count_nonzero(t.d) == 2

    def test_pure_decay_only_jump(self):
        assert not np.any(DECAY.d)
        assert set(zip(*np.nonzero(DECAY.c))) == {(0, 1), (0, 2)}
        # J = sqrt(kappa) |0><1| on the new site
        np.testing.assert_allclose(jump_operator(DECAY, 1), [[0, 1], [0, 0]], atol=1e-15)

    def test_sigma_y_jump(self):
        j = jump_operator(sigma_y_jump_coeffs(IsingParams(70, 250, 1.0)), 1)
        np.testing.assert_allclose(j, -1j * np.array([[0, -1j], [1j, 0]]))

    def test_kappa_positive(self):
        with pytest.raises(ParameterError):
            IsingParams(1.0, 1.0, 0.0)

    def test_hamiltonian_must_be_real(self):
        with pytest.raises(ParameterError):
            PauliCoeffTable(np.zeros((4, 4)), 1j * np.ones((4, 4)))

    def test_read_only_and_hashable(self):
        t = ising_coeffs(IsingParams(1, 2))
        with pytest.raises(ValueError):
            t.d[0, 0] = 1.0
        assert hash(t) == hash(ising_coeffs(IsingParams(1, 2)))
        assert PauliCoeffTable.from_dict(t.to_dict()) == t

    def test_boundary_rule(self):
        assert pauli_string(1, 3, 1) is None
        assert pauli_string(0, 3, 1).shape == (2, 2)
        assert pauli_string(1, 3, 2).shape == (4, 4)

    @pytest.mark.parametrize("kw", [dict(width=1), dict(depth=0), dict(dt=0.0), dict(chi_mps=0)])
    def test_config_invariants(self, kw):
        args = dict(width=3, depth=2, dt=0.1, coeffs=DECAY)
        args.update(kw)
        with pytest.raises(ParameterError):
            NetworkConfig(**args)


class TestLocalGate:
    def test_zero_is_swap(self):
        g = build_local_gate(PauliCoeffTable(), 0.1, 2, 3)
        np.testing.assert_allclose(g, np.kron(np.eye(2), SWAP), atol=1e-15)

    def test_ising_boundary(self):
        g = build_local_gate(ising_coeffs(IsingParams(59, 250)), 0.1, 1, 4)
        assert g.shape == (4, 4)
        assert unitarity_error(g) < 1e-12

    def test_pure_decay_amplitudes(self):
        # |1>_(1,l-1) |0>_(1,l): the excitation moves to the fresh site with
        # amplitude -i sin; the final SWAP exchanges the two qubits
        g = build_local_gate(DECAY, 0.1, 1, 2)
        out = g @ np.array([0, 0, 1, 0])
        a = np.sqrt(0.1)
        np.testing.assert_allclose(out, [0, np.cos(a), -1j * np.sin(a), 0], atol=1e-14)

    @given(st.integers(0, 2**31 - 1), st.sampled_from([1, 2]), st.floats(0.001, 0.5))
    def test_unitary(self, seed, k, dt):
        t = random_coeffs(np.random.default_rng(seed), scale=2.0)
        assert unitarity_error(build_local_gate(t, dt, k, 3)) < 1e-12

    def test_site_range(self):
        with pytest.raises(ParameterError):
            build_local_gate(DECAY, 0.1, 5, 4)

    def test_global_gate_zero_is_layer_swap(self):
        # with zero couplings each old qubit moves to the fresh layer
        u = dense_global_gate(GlobalGate.from_table(PauliCoeffTable(), 0.1, 2))
        psi = np.zeros(16)
        psi[0b1000] = 1.0  # old layer |10>, fresh |00>
        out = u @ psi
        assert abs(out[0b0010]) == pytest.approx(1.0)


class TestForwardMpo:
    @pytest.mark.parametrize("width", [2, 3])
    def test_zero_is_identity(self, width):
        f = build_forward_mpo(cfg_for(PauliCoeffTable(), width))
        np.testing.assert_allclose(f.to_dense(), np.eye(4**width), atol=1e-13)

    @pytest.mark.parametrize("width", [2, 3, 4])
    def test_matches_dense_channel(self, rng, width):
        cfg = cfg_for(random_coeffs(rng), width)
        f = build_forward_mpo(cfg)
        rho = random_density_matrix(width, rng)
        out = doubled_to_matrix(f.to_dense() @ matrix_to_doubled(rho), width)
        np.testing.assert_allclose(out, dense_channel_step(rho, cfg), atol=1e-12)

    def test_ising_compression_machine_precision(self):
        cfg = cfg_for(ising_coeffs(IsingParams(59, 250)), 4)
        f = build_forward_mpo(cfg)
        assert f.max_bond <= 16 and f.truncation_error < 1e-12
        g = compress_mpo(f, 16)
        assert g.truncation_error < 1e-12
        np.testing.assert_allclose(g.to_dense(), f.to_dense(), atol=1e-12)

    def test_translation_invariance(self, rng):
        f = build_forward_mpo(cfg_for(random_coeffs(rng), 5))
        for t in f.tensors[2:-1]:
            np.testing.assert_array_equal(t, f.tensors[1])

    def test_decay_on_mixed_state(self):
        cfg = cfg_for(DECAY, 3)
        s = from_dense(matrix_to_doubled(np.eye(8) / 8), 3)
        f = build_forward_mpo(cfg)
        out = from_dense(f.to_dense() @ s.to_dense(), 3)
        assert flat_overlap(identity_mps(3), out) == pytest.approx(1.0)
        assert measure_mz(out) > measure_mz(s) == pytest.approx(0.0)

    @pytest.mark.parametrize("width", [2, 3, 4])
    def test_cptp(self, rng, width):
        assert is_cptp(dense_superoperator(cfg_for(random_coeffs(rng), width)))


class TestBackwardMpo:
    def test_zero_is_identity(self):
        b = build_backward_mpo(cfg_for(PauliCoeffTable(), 3))
        np.testing.assert_allclose(b.to_dense(), np.eye(64), atol=1e-13)

    def test_duality(self, rng):
        cfg = cfg_for(random_coeffs(rng), 3)
        f, b = build_forward_mpo(cfg), build_backward_mpo(cfg)
        rho = from_dense(matrix_to_doubled(random_density_matrix(3, rng)), 3)
        e = from_dense(rng.normal(size=64) + 1j * rng.normal(size=64), 3)
        lhs = flat_overlap(e, from_dense(f.to_dense() @ rho.to_dense(), 3))
        rhs = flat_overlap(from_dense(b.to_dense() @ e.to_dense(), 3), rho)
        assert abs(lhs - rhs) < 1e-10

    def test_fixes_identity(self, rng):
        b = build_backward_mpo(cfg_for(random_coeffs(rng), 3))
        np.testing.assert_allclose(b.to_dense() @ identity_mps(3).to_dense(), identity_mps(3).to_dense(), atol=1e-12)


class TestGradientMpo:
    def test_boundary_marker(self, rng):
        assert build_gradient_mpo(cfg_for(random_coeffs(rng), 3), 1, (2, 1), "hamiltonian") is None
        assert gradient_insertion(random_coeffs(rng), 0.1, 1, (3, 0), "jump_plus") is None

    def test_unknown_kind(self, rng):
        with pytest.raises(ParameterError):
            gradient_insertion(random_coeffs(rng), 0.1, 2, (0, 1), "bogus")

    @pytest.mark.parametrize("kind", ["hamiltonian", "jump_plus", "jump_minus"])
    @pytest.mark.parametrize("site", [1, 2, 3])
    def test_matches_dense_product(self, rng, kind, site):
        t = random_coeffs(rng)
        cfg = cfg_for(t, 3)
        g = build_gradient_mpo(cfg, site, (0, 3), kind)
        gg = GlobalGate.from_table(t, cfg.dt, 3)
        mod = gg.replaced(site, gradient_insertion(t, cfg.dt, site, (0, 3), kind))
        rho = random_density_matrix(3, rng)
        ref = dense_channel_step(rho, mod, bra=gg)
        out = doubled_to_matrix(g.to_dense() @ matrix_to_doubled(rho), 3)
        np.testing.assert_allclose(out, ref, atol=1e-12)

    def test_column_sum(self, rng):
        cfg = cfg_for(random_coeffs(rng), 3)
        total = build_gradient_mpo(cfg, None, (1, 2), "jump_minus").to_dense()
        parts = [build_gradient_mpo(cfg, k, (1, 2), "jump_minus") for k in (1, 2, 3)]
        ref = sum(p.to_dense() for p in parts if p is not None)
        np.testing.assert_allclose(total, ref, atol=1e-12)

    def test_identity_hamiltonian_trace_is_real(self, rng):
        # S = 1 makes the u-trace Tr(sigma F rho) real, so its imaginary part vanishes
        cfg = cfg_for(random_coeffs(rng), 3)
        g = build_gradient_mpo(cfg, None, (0, 0), "hamiltonian")
        rho = from_dense(matrix_to_doubled(random_density_matrix(3, rng)), 3)
        e = from_dense(matrix_to_doubled(np.diag(rng.normal(size=8)).astype(complex)), 3)
        val = flat_overlap(e, from_dense(g.to_dense() @ rho.to_dense(), 3))
        assert abs(val.imag) < 1e-12


class TestUpdateForms:
    @staticmethod
    def gap(t, u, dt, eps):
        a = dense_global_gate(GlobalGate.from_table(t.shifted(u.c, u.d, eps), dt, 2))
        b = dense_global_gate(GlobalGate.from_table(t, dt, 2, update=u, eps=eps))
        return np.linalg.norm(a - b, 2)

    def test_shift_vs_sandwich_linear_in_eps(self, rng):
        t, u = random_coeffs(rng), random_coeffs(rng)
        per_eps = [self.gap(t, u, 0.1, eps) / eps for eps in (1e-1, 1e-2, 1e-3)]
        np.testing.assert_allclose(per_eps, per_eps[-1], rtol=0.05)

    def test_shift_vs_sandwich_dt_power(self, rng):
        t, u = random_coeffs(rng), random_coeffs(rng)
        dts = [0.1, 0.025, 0.00625]
        gaps = [self.gap(t, u, dt, 1e-3) for dt in dts]
        slope = np.polyfit(np.log(dts), np.log(gaps), 1)[0]
        assert slope == pytest.approx(1.5, abs=0.05)

    def test_hamiltonian_operator_boundary(self):
        t = ising_coeffs(IsingParams(2.0, 4.0))
        np.testing.assert_allclose(hamiltonian_operator(t, 1), [[0, 1], [1, 0]])
