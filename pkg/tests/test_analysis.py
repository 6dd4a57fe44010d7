import numpy as np
import pytest

from srshift.analysis import (DivergentTrajectoryError, build_companion,
                              find_fixed_point, lstm_jacobian,
                              pole_multiset_distance, poles_dense,
                              poles_structured, predict_stability, ringdown,
                              stft_table)
from srshift.filters import lagrange_coeffs
from srshift.model import LinearModel, RnnModel, UnstableOutputError, process_adjusted

from conftest import make_random_model, one_pole


def finite_difference_jacobian(model, a, step=1e-5):
    h = model.state_dim
    jac = np.zeros((h, h))
    for j in range(h):
        e = np.zeros(h)
        e[j] = step
        jac[:, j] = (model.step(a + e, 0.0) - model.step(a - e, 0.0)) / (2 * step)
    return jac


class TestFixedPoint:
    def test_zero_weight_model(self):
        n = 2
        m = RnnModel(hidden_size=n, w_ih=np.zeros((4 * n, 1)),
                     w_hh=np.zeros((4 * n, n)), b=np.zeros(4 * n),
                     out_w=np.zeros((1, n)), out_b=0.0)
        fp = find_fixed_point(m, run_len=200, avg_len=20)
        assert np.array_equal(fp.state, np.zeros(2 * n))
        assert fp.residual == 0.0

    def test_linear_contraction_closed_form(self):
        model = one_pole(0.5, offset=0.3)
        fp = find_fixed_point(model, run_len=300, avg_len=10)
        assert fp.state[0] == pytest.approx(0.3 / (1 - 0.5), abs=1e-12)
        assert fp.residual <= 1e-12
        assert not fp.low_confidence

    def test_limit_cycle_flags_low_confidence(self):
        # rotation keeps |s| constant: the average never settles to a point
        theta = 2.2
        rot = np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
        model = LinearModel(a=rot, b_in=np.zeros(2), c_out=np.ones(2),
                            offset=np.array([0.5, 0.0]))
        fp = find_fixed_point(model, run_len=500, avg_len=100)
        assert fp.residual > 1e-6
        assert fp.low_confidence

    def test_divergent_trajectory_raises(self):
        with pytest.raises(DivergentTrajectoryError):
            find_fixed_point(one_pole(3.0, offset=1.0), run_len=2000, avg_len=100)

    def test_arg_validation(self, small_model):
        with pytest.raises(ValueError):
            find_fixed_point(small_model, run_len=10, avg_len=20)


class TestJacobian:
    def test_zero_weight_blocks(self):
        n = 3
        m = RnnModel(hidden_size=n, w_ih=np.zeros((4 * n, 1)),
                     w_hh=np.zeros((4 * n, n)), b=np.zeros(4 * n),
                     out_w=np.zeros((1, n)), out_b=0.0)
        jac = lstm_jacobian(m, np.zeros(2 * n))
        # dc'/dc = f = sigma(0) = 0.5; dh'/dc = o * tanh'(0) * f = 0.25
        assert np.allclose(jac[n:, n:], 0.5 * np.eye(n), atol=1e-15)
        assert np.allclose(jac[:n, n:], 0.25 * np.eye(n), atol=1e-15)
        assert np.allclose(jac[:, :n], 0.0, atol=1e-15)

    def test_matches_finite_differences(self, rng):
        for _ in range(6):
            m = make_random_model(rng, hidden_size=int(rng.integers(2, 9)))
            a = rng.normal(0, 0.5, m.state_dim)
            jac = lstm_jacobian(m, a)
            fd = finite_difference_jacobian(m, a)
            scale = max(1.0, np.max(np.abs(fd)))
            assert np.max(np.abs(jac - fd)) / scale <= 1e-5

    def test_linear_model_exact(self, rng):
        a = rng.normal(0, 0.4, (3, 3))
        model = LinearModel(a=a, b_in=np.zeros(3), c_out=np.ones(3))
        assert np.array_equal(model.jacobian(rng.normal(size=3)), a)


class TestCompanion:
    def test_k0_is_jacobian(self, rng):
        jac = rng.normal(size=(4, 4))
        sys = build_companion(jac, [1.0])
        assert np.array_equal(sys.companion, jac)

    def test_scalar_example(self):
        sys = build_companion(np.array([[0.9]]), [0.5, 0.5])
        assert np.allclose(sys.companion, [[0.45, 0.45], [1.0, 0.0]], atol=1e-15)

    def test_block_structure(self, rng):
        h, k = 4, 3
        jac = rng.normal(size=(h, h))
        taps = lagrange_coeffs(0.3, k).taps
        A = build_companion(jac, taps).companion
        assert A.shape == (h * (k + 1), h * (k + 1))
        for i in range(k + 1):
            assert np.array_equal(A[:h, i * h:(i + 1) * h], taps[i] * jac)
        below = A[h:]
        assert np.array_equal(below[:, :h * k], np.eye(h * k))
        assert np.count_nonzero(below[:, h * k:]) == 0

    def test_offset_block(self, rng):
        jac = rng.normal(size=(3, 3))
        a = rng.normal(size=3)
        fa = rng.normal(size=3)
        sys = build_companion(jac, [0.5, 0.5], step_at_a=fa, a=a)
        assert np.allclose(sys.offset[:3], fa - jac @ a)
        assert np.count_nonzero(sys.offset[3:]) == 0


class TestPoles:
    def test_diagonal(self):
        got = np.sort_complex(poles_dense(np.diag([0.2, -0.7])))
        assert np.allclose(got, [-0.7, 0.2], atol=1e-15)

    def test_scaled_rotation(self):
        r, theta = 0.8, 0.6
        mat = r * np.array([[np.cos(theta), -np.sin(theta)],
                            [np.sin(theta), np.cos(theta)]])
        want = np.array([r * np.exp(1j * theta), r * np.exp(-1j * theta)])
        assert pole_multiset_distance(poles_dense(mat), want) <= 1e-12

    def test_structured_k0(self, rng):
        jac = rng.normal(size=(5, 5))
        mus = np.linalg.eigvals(jac)
        assert pole_multiset_distance(poles_structured(jac, [1.0]), mus) <= 1e-12

    def test_structured_quadratic_example(self):
        got = np.sort_complex(poles_structured(np.array([[0.9]]), [0.5, 0.5]))
        want = np.sort_complex(np.roots([1.0, -0.45, -0.45]))
        assert np.max(np.abs(got - want)) <= 1e-12
        dense = poles_dense(build_companion(np.array([[0.9]]), [0.5, 0.5]).companion)
        assert pole_multiset_distance(got, dense) <= 1e-12

    def test_dense_vs_structured(self, rng):
        for _ in range(10):
            h = int(rng.integers(2, 9))
            k = int(rng.integers(1, 6))
            jac = rng.normal(0, 0.4, (h, h))
            taps = lagrange_coeffs(float(rng.uniform(-0.5, 0.5)), k).taps
            dense = poles_dense(build_companion(jac, taps).companion)
            structured = poles_structured(jac, taps)
            assert dense.size == h * (k + 1)
            assert pole_multiset_distance(dense, structured) <= 1e-8

    def test_conjugate_symmetry(self, rng):
        jac = rng.normal(0, 0.4, (6, 6))
        taps = lagrange_coeffs(-13 / 160, 3).taps
        poles = poles_dense(build_companion(jac, taps).companion)
        assert pole_multiset_distance(poles, np.conj(poles)) <= 1e-9


class TestPredictStability:
    def test_contractive_linear_stable(self):
        report = predict_stability(one_pole(0.5), lagrange_coeffs(13 / 147, 3),
                                   run_len=500, avg_len=50)
        assert report.stable
        assert report.confidence == "high"
        assert report.spectral_radius < 1
        assert report.poles.size == 4

    def test_extrapolation_verdict_matches_simulation(self):
        # one-pole at 0.99 with linear extrapolation: verdict must agree with
        # an explicit zero-input divergence run from a perturbed start
        taps = lagrange_coeffs(-13 / 160, 1)
        model = one_pole(0.99)
        report = predict_stability(model, taps, run_len=500, avg_len=50)
        roots = np.roots([1.0, -0.99 * taps.taps[0], -0.99 * taps.taps[1]])
        assert report.spectral_radius == pytest.approx(np.max(np.abs(roots)), abs=1e-12)
        x = np.zeros(4000)
        x[0] = 1e-6
        try:
            y = process_adjusted(model, x, taps)
            diverged = np.max(np.abs(y[-100:])) > 1e3 * np.max(np.abs(y[:100]))
        except UnstableOutputError:
            diverged = True
        assert diverged == (not report.stable)

    def test_divergent_model_indeterminate(self):
        report = predict_stability(one_pole(3.0, offset=1.0), [1.0],
                                   run_len=2000, avg_len=100)
        assert report.confidence == "indeterminate"
        assert not report.stable

    def test_unstable_angles_and_frequencies(self):
        theta = 2 * np.pi * 0.22
        rot = 1.05 * np.array([[np.cos(theta), -np.sin(theta)],
                               [np.sin(theta), np.cos(theta)]])
        model = LinearModel(a=rot, b_in=np.zeros(2), c_out=np.ones(2),
                            train_rate=40500.0)
        report = predict_stability(model, [1.0], run_len=100, avg_len=10)
        assert not report.stable
        assert report.unstable_angles == pytest.approx([theta, theta], abs=1e-9)
        assert report.ringing_frequencies[0] == pytest.approx(0.22 * 40500.0, rel=1e-9)


class TestRingdown:
    def test_engages_filter_after_preamble(self, rng):
        m = make_random_model(rng, hidden_size=3)
        y = ringdown(m, lagrange_coeffs(-13 / 160, 1), pre_len=512, post_len=1024,
                     kick=0.1)
        assert len(y) == 1536
        assert np.all(np.isfinite(y))

    def test_stft_shape(self):
        sig = np.sin(2 * np.pi * 0.1 * np.arange(4096))
        db, frames, bins = stft_table(sig)
        assert db.shape == (len(frames), len(bins))
        assert bins.size == 513
        peak_bin = np.argmax(db[0])
        assert peak_bin == pytest.approx(0.1 * 1024, abs=1)

    def test_stft_too_short(self):
        with pytest.raises(ValueError):
            stft_table(np.zeros(100))
