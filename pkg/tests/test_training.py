import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metaqnn.channels import InputSpec
from metaqnn.errors import ParameterError, TrainingAborted
from metaqnn.experiments import gradient_check
from metaqnn.gates import IsingParams, NetworkConfig, PauliCoeffTable, ising_coeffs, random_coeffs
from metaqnn.training import (
    TrainingPair,
    UpdateDirection,
    apply_update,
    compute_update_direction,
    evaluate_loss,
    full_mask,
    generate_training_data,
    jump_sigma_x_mask,
    loss,
    magnetization_difference,
    network_output,
    normalize_mask,
    sandwich_update_gate,
    train,
    uniform_inputs,
)
from metaqnn.oracle import dense_loss_gate, product_state

DECAY = ising_coeffs(IsingParams(0.0, 0.0, 1.0))


def small_net(seed, width=2, depth=2):
    return NetworkConfig(width, depth, 0.1, random_coeffs(np.random.default_rng(seed)), chi_mps=4**width)


def pairs_for(seed, n=2):
    rng = np.random.default_rng(seed + 1)
    return [TrainingPair(InputSpec(float(m)), float(t)) for m, t in zip(rng.uniform(-0.5, 0.5, n), rng.uniform(-0.3, 0.3, n))]


class TestLoss:
    @pytest.mark.parametrize(
        "outputs,expected",
        [([(0.2, 0.2), (-0.1, -0.1)], 0.0), ([(0.3, 0.1)], 0.04), ([(0.5, 0.0), (-0.5, 0.0)], 0.25)],
    )
    def test_values(self, outputs, expected):
        assert loss(outputs) == pytest.approx(expected)

    def test_empty(self):
        with pytest.raises(ParameterError):
            loss([])

    @pytest.mark.parametrize("a,t,c", [(0.1, 0.1, 0.0), (0.2, -0.1, 0.3)])
    def test_difference(self, a, t, c):
        assert magnetization_difference(a, t) == pytest.approx(c)

    @given(st.lists(st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5)), min_size=1, max_size=8))
    def test_mean_square_of_differences(self, outputs):
        ref = np.mean([magnetization_difference(a, t) ** 2 for a, t in outputs])
        assert loss(outputs) == pytest.approx(ref)

    def test_target_range(self):
        with pytest.raises(ParameterError):
            TrainingPair(InputSpec(0.0), 0.6)


class TestDirection:
    def test_stationary_point(self):
        cfg = small_net(3)
        pairs = [TrainingPair(s, network_output(s, cfg)) for s in uniform_inputs(3)]
        d = compute_update_direction(pairs, cfg)
        assert d.norm() == 0.0

    def test_restricted_mask(self):
        cfg = small_net(4)
        d = compute_update_direction(pairs_for(4), cfg, jump_sigma_x_mask())
        assert np.count_nonzero(d.d_tilde) == 0 and np.count_nonzero(d.y_tilde) == 0
        assert np.flatnonzero(d.x_tilde).tolist() == [1]

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_finite_differences(self, seed):
        assert gradient_check(pairs_for(seed), small_net(seed), full_mask()) < 1e-4

    def test_descent(self):
        # a tiny step along the direction never raises the loss
        cfg = small_net(7, width=3)
        pairs = pairs_for(7, 3)
        d = compute_update_direction(pairs, cfg)
        eps = 1e-6
        before = evaluate_loss(pairs, cfg)
        after = evaluate_loss(pairs, cfg.with_coeffs(apply_update(cfg.coeffs, d, eps)))
        assert (after - before) / eps <= 1e-8

    def test_exact_directional_derivative(self):
        # along the multiplicative update the slope is exactly -|direction|^2
        cfg = small_net(8, width=3)
        pairs = pairs_for(8, 3)
        d = compute_update_direction(pairs, cfg)
        dense = [(product_state(p.input.mz_in, 3), p.target_mz) for p in pairs]
        h = 1e-6
        up = dense_loss_gate(dense, sandwich_update_gate(cfg.coeffs, d, h, cfg.dt, 3), cfg.depth)
        down = dense_loss_gate(dense, sandwich_update_gate(cfg.coeffs, d, -h, cfg.dt, 3), cfg.depth)
        assert (up - down) / (2 * h) == pytest.approx(-(d.norm() ** 2), rel=1e-5)

    def test_masked_entries_are_zero(self):
        ones = np.ones((4, 4))
        d = UpdateDirection(ones, ones, ones, frozenset({("hamiltonian", (1, 2))}))
        assert d.d_tilde.sum() == 1.0 and d.x_tilde.sum() == 0.0 and d.y_tilde.sum() == 0.0
        with pytest.raises(ValueError):
            d.d_tilde[0, 0] = 2.0

    def test_bad_mask(self):
        with pytest.raises(ParameterError):
            normalize_mask([("jump_plus", (0, 4))])

    def test_needs_pairs(self):
        with pytest.raises(ParameterError):
            compute_update_direction([], small_net(0))


class TestUpdate:
    def test_eps_zero(self):
        t = random_coeffs(np.random.default_rng(0))
        assert apply_update(t, UpdateDirection.zeros(), 0.0) is t

    def test_shift(self):
        d = UpdateDirection(np.zeros((4, 4)), np.eye(4), 2 * np.eye(4))
        t = apply_update(PauliCoeffTable(), d, 10.0)
        assert t.c[1, 1] == 10 + 20j


class TestTrain:
    def test_zero_rounds(self):
        cfg = small_net(1)
        recs = train(pairs_for(1), pairs_for(2), cfg, 0, 10.0)
        assert len(recs) == 1 and recs[0].coeffs == cfg.coeffs
        assert recs[0].train_loss == pytest.approx(evaluate_loss(pairs_for(1), cfg))

    def test_eps_zero_flat(self):
        recs = train(pairs_for(1), [], small_net(1), 3, 0.0)
        assert len({r.train_loss for r in recs}) == 1
        assert np.isnan(recs[0].validation_loss)

    def test_mask_preserved(self):
        cfg = small_net(5)
        recs = train(pairs_for(5), [], cfg, 3, 5.0, jump_sigma_x_mask())
        for r in recs:
            np.testing.assert_array_equal(r.coeffs.d, cfg.coeffs.d)
            changed = np.argwhere(r.coeffs.c != cfg.coeffs.c).tolist()
            assert changed in ([], [[0, 1]])
            assert r.coeffs.c[0, 1].imag == cfg.coeffs.c[0, 1].imag

    def test_loss_decreases(self):
        teacher = NetworkConfig(3, 3, 0.1, ising_coeffs(IsingParams(2.0, 3.0)), chi_mps=64)
        student = teacher.with_coeffs(ising_coeffs(IsingParams(0.5, 3.0)))
        pairs = generate_training_data(teacher, uniform_inputs(5))
        recs = train(pairs, [], student, 4, 2.0, [("hamiltonian", (0, 1))])
        losses = [r.train_loss for r in recs]
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_abort_keeps_records(self, monkeypatch):
        import metaqnn.training as tr

        calls = []
        real = tr.loss

        def flaky(outputs):
            calls.append(1)
            return real(outputs) if len(calls) < 3 else float("nan")

        monkeypatch.setattr(tr, "loss", flaky)
        seen = []
        with pytest.raises(TrainingAborted) as err:
            train(pairs_for(6), [], small_net(6), 5, 1.0, callback=seen.append)
        assert len(err.value.records) >= 1
        assert err.value.records == seen

    def test_needs_pairs(self):
        with pytest.raises(ParameterError):
            train([], [], small_net(0), 1, 1.0)


class TestTeacher:
    def test_identity_teacher(self):
        cfg = NetworkConfig(3, 4, 0.1, PauliCoeffTable())
        inputs = uniform_inputs(5)
        for p, s in zip(generate_training_data(cfg, inputs), inputs):
            assert p.target_mz == pytest.approx(s.mz_in, abs=1e-12)

    def test_pure_decay_teacher(self):
        layers = 6
        cfg = NetworkConfig(3, layers, 0.1, DECAY)
        inputs = uniform_inputs(4)
        q = np.cos(np.sqrt(0.1)) ** (2 * layers)
        for p, s in zip(generate_training_data(cfg, inputs), inputs):
            # the excited population decays by cos^2(sqrt(dt)) per layer
            assert p.target_mz == pytest.approx(0.5 - (0.5 - s.mz_in) * q, abs=1e-12)

    def test_uniform_inputs(self):
        assert [s.mz_in for s in uniform_inputs(3)] == [-0.5, 0.0, 0.5]
        assert uniform_inputs(1)[0].mz_in == 0.0
