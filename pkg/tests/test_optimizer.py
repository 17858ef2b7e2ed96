import csv

import numpy as np
import pytest

from risbeam.channel import ChannelRealization, near_channel, synthesize_channel
from risbeam.codebook import SamplingGrid
from risbeam.geometry import LINK_BS_RIS, LINK_RIS_UE, SystemGeometry
from risbeam.optimizer import (
    AOState,
    Combiner,
    Precoder,
    achievable_rate,
    ao_loop,
    default_stream_count,
    mse_matrix,
    optimal_combiner,
    rates_for_phase_batch,
    solve_precoder,
    weight_update,
)
from risbeam.training import TrainingBudget

NOISE = 0.5


def rand_matrix(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def desk_setup(ue=(0.24, 0.0, 0.0)):
    g = SystemGeometry.build(30e9, n_bs=8, n_ue=4, m_x=16, m_y=2,
                             bs_mid=(0, 0, 0), ue_mid=ue, ris_mid=(0.1, 0, 0.08))
    real = ChannelRealization(g_bs_ris=near_channel(LINK_BS_RIS, g),
                              g_ris_ue=near_channel(LINK_RIS_UE, g),
                              model_tag="NN")
    half = 10 * g.wavelength_m
    def mk(cx, cy, z):
        return SamplingGrid(x_min=cx - half, x_max=cx + half,
                            y_min=cy - half, y_max=cy + half,
                            s_x=2, s_y=2, fixed_z=z)
    return g, real, mk(0, 0, 0), mk(0.24, 0, 0)


class TestAchievableRate:
    def test_zero_precoder(self):
        rng = np.random.default_rng(0)
        h = rand_matrix(rng, (4, 6))
        assert achievable_rate(h, np.zeros((6, 2)), NOISE) == 0.0

    def test_rank_one_scalar_reduction(self):
        rng = np.random.default_rng(1)
        u = rand_matrix(rng, (4,))
        v = rand_matrix(rng, (6,))
        w = rand_matrix(rng, (6, 1))
        h = np.outer(u, v.conj())
        expected = np.log2(1 + np.abs(v.conj() @ w[:, 0]) ** 2
                           * np.linalg.norm(u) ** 2 / NOISE)
        assert achievable_rate(h, w, NOISE) == pytest.approx(expected, rel=1e-12)

    def test_rate_decreases_with_noise(self):
        rng = np.random.default_rng(2)
        h, w = rand_matrix(rng, (4, 6)), rand_matrix(rng, (6, 3))
        assert achievable_rate(h, w, 2 * NOISE) < achievable_rate(h, w, NOISE)

    def test_determinant_identity(self):
        # log2|I_nu + HWW^H H^H/s2| == log2|I_q + W^H H^H H W/s2|
        rng = np.random.default_rng(3)
        h, w = rand_matrix(rng, (4, 6)), rand_matrix(rng, (6, 3))
        b = h @ w
        direct = np.log2(np.linalg.det(np.eye(4) + b @ b.conj().T / NOISE).real)
        gram = np.log2(np.linalg.det(np.eye(3) + b.conj().T @ b / NOISE).real)
        got = achievable_rate(h, w, NOISE)
        assert got == pytest.approx(direct, rel=1e-9)
        assert got == pytest.approx(gram, rel=1e-9)

    def test_nonpositive_noise_rejected(self):
        with pytest.raises(ValueError):
            achievable_rate(np.eye(2), np.eye(2), 0.0)

    def test_batch_matches_scalar_evaluation(self):
        g, real, _, _ = desk_setup()
        rng = np.random.default_rng(4)
        w = rand_matrix(rng, (g.n_bs, 2)) * 1e-5
        phis = np.exp(-1j * rng.uniform(0, 2 * np.pi, (5, g.m)))
        batch = rates_for_phase_batch(real, phis, w, 1e-13)
        from risbeam.channel import cascade
        singles = [achievable_rate(cascade(real, p), w, 1e-13) for p in phis]
        np.testing.assert_allclose(batch, singles, rtol=1e-10)


class TestMseMatrix:
    def test_zero_combiner_gives_identity(self):
        rng = np.random.default_rng(5)
        h, w = rand_matrix(rng, (4, 6)), rand_matrix(rng, (6, 3))
        np.testing.assert_allclose(mse_matrix(h, w, np.zeros((4, 3)), NOISE),
                                   np.eye(3))

    def test_perfectly_equalized_orthonormal_combiner(self):
        # U^H H W = I with orthonormal U columns -> E = noise * I
        q = 3
        u = np.linalg.qr(rand_matrix(np.random.default_rng(6), (5, q)))[0]
        h = np.eye(5)
        w = u  # then U^H H W = U^H U = I
        e = mse_matrix(h, w, u, NOISE)
        np.testing.assert_allclose(e, NOISE * np.eye(q), atol=1e-12)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(7)
        h, w = rand_matrix(rng, (4, 6)), 0.4 * rand_matrix(rng, (6, 2))
        u = 0.3 * rand_matrix(rng, (4, 2))
        e = mse_matrix(h, w, u, NOISE)
        n_draws = 100_000
        x = rand_matrix(rng, (n_draws, 2)) / np.sqrt(2)
        noise = np.sqrt(NOISE / 2) * rand_matrix(rng, (n_draws, 4))
        y = (h @ w @ x.T).T + noise
        err = (u.conj().T @ y.T).T - x
        mc = np.mean(np.sum(np.abs(err) ** 2, axis=1))
        assert mc == pytest.approx(np.trace(e).real, rel=0.01)

    def test_hermitian_psd(self):
        rng = np.random.default_rng(8)
        h, w, u = (rand_matrix(rng, (4, 6)), rand_matrix(rng, (6, 3)),
                   rand_matrix(rng, (4, 3)))
        e = mse_matrix(h, w, u, NOISE)
        np.testing.assert_allclose(e, e.conj().T)
        assert np.linalg.eigvalsh(e).min() >= -1e-12


class TestOptimalCombiner:
    def test_zero_channel(self):
        u = optimal_combiner(np.zeros((4, 6)), np.ones((6, 2)), NOISE).u
        np.testing.assert_allclose(u, 0.0)

    def test_scalar_closed_form(self):
        h, w = 1.7, 0.6
        u = optimal_combiner(np.array([[h]]), np.array([[w]]), NOISE).u
        assert u[0, 0] == pytest.approx(h * w / ((h * w) ** 2 + NOISE))

    def test_beats_random_alternatives(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            h, w = rand_matrix(rng, (4, 6)), rand_matrix(rng, (6, 2))
            u_opt = optimal_combiner(h, w, NOISE).u
            best = np.trace(mse_matrix(h, w, u_opt, NOISE)).real
            for _ in range(100):
                u = rand_matrix(rng, (4, 2))
                assert best <= np.trace(mse_matrix(h, w, u, NOISE)).real + 1e-12

    def test_finite_difference_stationarity(self):
        rng = np.random.default_rng(10)
        h, w = rand_matrix(rng, (4, 6)), rand_matrix(rng, (6, 2))
        u_opt = optimal_combiner(h, w, NOISE).u
        eps = 1e-4
        for _ in range(100):
            d = rand_matrix(rng, (4, 2))
            d /= np.linalg.norm(d)
            plus = np.trace(mse_matrix(h, w, u_opt + eps * d, NOISE)).real
            minus = np.trace(mse_matrix(h, w, u_opt - eps * d, NOISE)).real
            assert abs(plus - minus) / (2 * eps) < 1e-6


class TestWeightUpdate:
    def test_identity(self):
        np.testing.assert_allclose(weight_update(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(weight_update(np.diag([0.5, 0.25])),
                                   np.diag([2.0, 4.0]), rtol=1e-12)

    def test_surrogate_value_at_optimum(self):
        # log|F| - Tr(F E) at F = E^-1 equals -log|E| - q
        rng = np.random.default_rng(11)
        a = rand_matrix(rng, (3, 3))
        e = a @ a.conj().T + 0.1 * np.eye(3)
        f = weight_update(e)
        sign, logdet_f = np.linalg.slogdet(f)
        _, logdet_e = np.linalg.slogdet(e)
        value = logdet_f - np.trace(f @ e).real
        assert value == pytest.approx(-logdet_e - 3, rel=1e-9)

    def test_singular_matrix_diagnosed(self):
        e = np.diag([1.0, 0.0])
        with pytest.raises(ValueError, match="singular"):
            weight_update(e)


class TestSolvePrecoder:
    def test_zero_channel_gives_zero(self):
        w = solve_precoder(np.zeros((4, 6)), np.zeros((4, 2)), np.eye(2), 1.0).w
        np.testing.assert_allclose(w, 0.0)

    def test_scalar_unconstrained_stationary_point(self):
        h, u, f = 2.0, 0.4, 3.0
        p = solve_precoder(np.array([[h]]), np.array([[u]]), np.array([[f]]),
                           p_max=100.0)
        assert p.w[0, 0] == pytest.approx(1.0 / (h * u), rel=1e-10)

    def _instance(self, rng, p_max):
        h = rand_matrix(rng, (4, 6))
        u = rand_matrix(rng, (4, 2))
        a = rand_matrix(rng, (2, 2))
        f = a @ a.conj().T + 0.5 * np.eye(2)
        return h, u, f, solve_precoder(h, u, f, p_max)

    def test_active_budget_met_with_equality(self):
        rng = np.random.default_rng(12)
        h, u, f, p = self._instance(rng, p_max=1e-4)
        assert np.sum(np.abs(p.w) ** 2) == pytest.approx(1e-4, rel=1e-6)

    def test_kkt_residuals(self):
        rng = np.random.default_rng(13)
        active = inactive = 0
        for _ in range(50):
            p_max = float(rng.choice([1e-4, 1e6]))
            h, u, f, p = self._instance(rng, p_max)
            a = h.conj().T @ u @ f @ u.conj().T @ h
            b = h.conj().T @ u @ f
            power = np.sum(np.abs(p.w) ** 2)
            resid = b - a @ p.w
            mu = max(0.0, np.real(np.vdot(p.w, resid)) / max(power, 1e-300))
            stat = np.linalg.norm(a @ p.w + mu * p.w - b) / np.linalg.norm(b)
            assert stat <= 1e-8
            assert mu * (p_max - power) <= 1e-6 * p_max
            if p_max - power < 1e-6 * p_max:
                active += 1
            else:
                inactive += 1
        assert active > 10 and inactive > 10

    def test_invalid_budget_rejected(self):
        with pytest.raises(ValueError):
            solve_precoder(np.eye(2), np.eye(2), np.eye(2), p_max=0.0)


class TestStreamCounts:
    def test_defaults_per_tag(self, desk):
        assert default_stream_count("NN", desk) == 4      # min(8, 4, 32)
        assert default_stream_count("FF", desk, l_b=3, l_u=3) == 3
        assert default_stream_count("NF", desk, l_u=2) == 2
        assert default_stream_count("FN", desk, l_b=1) == 1

    def test_unknown_tag(self, desk):
        with pytest.raises(ValueError):
            default_stream_count("XX", desk)


class TestAOLoop:
    P_MAX = 1e-8
    NOISE_W = 10 ** (-13.5)

    def run(self, scheme="auto", max_iters=20, tag="NN", q=None, seed=0):
        g, real, gb, gu = desk_setup()
        if tag != "NN":
            real = synthesize_channel(tag, g, np.random.default_rng(seed))
        return ao_loop(real, g, p_max=self.P_MAX, noise_var=self.NOISE_W,
                       grid_bs=gb, grid_ue=gu,
                       budget=TrainingBudget(max_layers=4, s_x=2, s_y=2),
                       max_iters=max_iters, tol=1e-4, scheme=scheme, q=q)

    def test_zero_iterations_returns_initialization(self):
        state = self.run(max_iters=0)
        assert state.iterations == 0
        assert len(state.rate_history) == 1
        assert state.evaluations == 0

    def test_rate_history_monotone(self):
        for seed in range(5):
            state = self.run(tag="NF", seed=seed)
            diffs = np.diff(state.rate_history)
            assert np.all(diffs >= -1e-6)

    def test_converges_on_desk_instance(self):
        state = self.run()
        assert state.gamma < 1e-4
        assert state.iterations <= 20

    def test_forced_angular_scheme_on_nn(self):
        state = self.run(scheme="angular")
        # angular sweep costs m_x*m_y per iteration
        assert state.evaluations == state.iterations * 32

    def test_hierarchical_evaluation_accounting(self):
        state = self.run()
        assert state.evaluations == state.iterations * 16 * 4 * 16

    def test_phases_stay_unit_modulus(self):
        state = self.run()
        np.testing.assert_allclose(np.abs(state.phases.coefficients), 1.0,
                                   atol=1e-12)

    def test_final_weight_matrix_positive_definite(self):
        state = self.run(max_iters=3)
        eigs = np.linalg.eigvalsh(state.weight)
        assert eigs.min() > 0.0
        np.testing.assert_allclose(state.weight, state.weight.conj().T)

    def test_trace_export(self, tmp_path):
        state = self.run(max_iters=3)
        out = tmp_path / "ao.csv"
        state.trace_to_csv(out)
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iteration", "rate_bps_hz", "gamma", "evaluations"]
        assert len(rows) == len(state.rate_history) + 1

    def test_missing_grids_diagnosed(self):
        g, real, _, _ = desk_setup()
        with pytest.raises(ValueError, match="grids"):
            ao_loop(real, g, p_max=self.P_MAX, noise_var=self.NOISE_W,
                    max_iters=2)


class TestContainers:
    def test_precoder_budget_enforced(self):
        with pytest.raises(ValueError, match="budget"):
            Precoder(w=np.ones((2, 2)), p_max=1.0)

    def test_combiner_requires_finite(self):
        with pytest.raises(ValueError):
            Combiner(u=np.array([[np.inf, 0.0]]))
