import math

import numpy as np
import pytest

from traymaze.nets import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    AdamState,
    GaussianHead,
    Mlp,
    TwinMlp,
    adam_step,
    squash_log_prob,
    squash_sample,
)


def reference_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Independent re-computation: per-row dot products, float64."""
    h = np.asarray(x, dtype=np.float64)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = np.empty((h.shape[0], w.shape[0]))
        for r in range(h.shape[0]):
            for j in range(w.shape[0]):
                z[r, j] = np.dot(np.asarray(w[j], dtype=np.float64), h[r]) + b[j]
        h = np.tanh(z) if i < len(net.weights) - 1 else z
    return h


class TestForward:
    def test_zero_net_zero_output(self):
        net = Mlp((3, 4, 2), np.random.default_rng(0))
        net.flat[...] = 0.0
        assert np.array_equal(net.forward(np.ones(3)), np.zeros(2))

    def test_identity_single_unit(self):
        net = Mlp((1, 1), np.random.default_rng(0))
        net.weights[0][0, 0] = 1.0
        net.biases[0][0] = 0.0
        assert net.forward(np.array([0.5]))[0] == 0.5

    def test_matches_reference_oracle(self):
        rng = np.random.default_rng(1)
        net = Mlp((6, 64, 64, 2), rng)
        x = rng.uniform(-1, 1, size=(9, 6))
        got = net.forward(x)
        want = reference_forward(net, x)
        assert np.max(np.abs(got - want)) < 1e-12

    def test_shape_mismatch_raises(self):
        net = Mlp((3, 2), np.random.default_rng(0))
        with pytest.raises(ValueError, match="input width"):
            net.forward(np.zeros(4))


class TestBackward:
    def fd_param_grads(self, net: Mlp, x, gout, h=1e-5):
        """Central finite differences of sum(forward * gout)."""
        grads = np.zeros_like(net.flat)
        for i in range(net.flat.size):
            orig = net.flat[i]
            net.flat[i] = orig + h
            up = float(np.sum(net.forward(x) * gout))
            net.flat[i] = orig - h
            dn = float(np.sum(net.forward(x) * gout))
            net.flat[i] = orig
            grads[i] = (up - dn) / (2 * h)
        return grads

    def test_gradients_match_finite_differences(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            net = Mlp((4, 8, 3), rng)
            x = rng.uniform(-1, 1, size=(5, 4))
            gout = rng.uniform(-1, 1, size=(5, 3))
            analytic, _ = net.backward(x, gout)
            flat_analytic = net.flat_grad(analytic)
            flat_fd = self.fd_param_grads(net, x, gout)
            scale = np.maximum(np.abs(flat_fd), 1e-6)
            assert np.max(np.abs(flat_analytic - flat_fd) / scale) < 1e-4

    def test_input_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        net = Mlp((4, 6, 2), rng)
        x = rng.uniform(-1, 1, size=4)
        gout = rng.uniform(-1, 1, size=2)
        _, gin = net.backward(x, gout)
        h = 1e-6
        for i in range(4):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd = (np.sum(net.forward(xp) * gout) - np.sum(net.forward(xm) * gout)) / (2 * h)
            assert gin[i] == pytest.approx(fd, rel=1e-4)

    def test_zero_output_grad_gives_zero(self):
        rng = np.random.default_rng(2)
        net = Mlp((4, 8, 3), rng)
        grads, gin = net.backward(np.ones(4), np.zeros(3))
        assert all(np.all(g == 0) for g in grads)
        assert np.all(gin == 0)

    def test_linearity_in_output_grad(self):
        rng = np.random.default_rng(4)
        net = Mlp((4, 8, 3), rng)
        x = rng.uniform(-1, 1, size=(6, 4))
        gout = rng.uniform(-1, 1, size=(6, 3))
        g1, _ = net.backward(x, gout)
        g2, _ = net.backward(x, 2.0 * gout)
        for a, b in zip(g1, g2):
            assert np.allclose(2.0 * a, b, rtol=1e-12, atol=1e-13)


class TestTwinMlp:
    def test_forward_matches_two_singles(self):
        rng = np.random.default_rng(5)
        a = Mlp((7, 16, 1), rng)
        b = Mlp((7, 16, 1), rng)
        twin = TwinMlp.from_nets(a, b)
        x = rng.uniform(-1, 1, size=(12, 7))
        got = twin.forward(x)
        assert np.allclose(got[0], a.forward(x), rtol=1e-12, atol=1e-14)
        assert np.allclose(got[1], b.forward(x), rtol=1e-12, atol=1e-14)

    def test_backward_matches_two_singles(self):
        rng = np.random.default_rng(6)
        a = Mlp((5, 8, 1), rng)
        b = Mlp((5, 8, 1), rng)
        twin = TwinMlp.from_nets(a, b)
        x = rng.uniform(-1, 1, size=(9, 5))
        gout = rng.uniform(-1, 1, size=(2, 9, 1))
        _, trace = twin.forward_trace(x)
        tg, tgin = twin.backward(trace, gout)
        ga, gina = a.backward(x, gout[0])
        gb, ginb = b.backward(x, gout[1])
        for t, one_a, one_b in zip(tg, ga, gb):
            assert np.allclose(t[0], one_a, rtol=1e-12, atol=1e-14)
            assert np.allclose(t[1], one_b, rtol=1e-12, atol=1e-14)
        assert np.allclose(tgin[0], gina, rtol=1e-12, atol=1e-14)
        assert np.allclose(tgin[1], ginb, rtol=1e-12, atol=1e-14)

    def test_net_extraction_round_trip(self):
        rng = np.random.default_rng(7)
        a = Mlp((5, 8, 1), rng)
        b = Mlp((5, 8, 1), rng)
        twin = TwinMlp.from_nets(a, b)
        assert np.array_equal(twin.net(0).flat, a.flat)
        assert np.array_equal(twin.net(1).flat, b.flat)


class TestAdam:
    def test_zero_grad_leaves_params(self):
        p = np.array([1.0, -2.0])
        st = AdamState([p], lr=1e-2)
        adam_step([p], [np.zeros(2)], st)
        assert np.array_equal(p, [1.0, -2.0])
        assert st.step == 1

    def test_first_step_magnitude_is_lr(self):
        # closed form: |delta| = lr * mhat / (sqrt(vhat) + eps) with
        # mhat = g, vhat = g^2 on step one
        g = 0.37
        p = np.array(1.0)
        st = AdamState([p], lr=3e-4, eps=1e-8)
        adam_step([p], [np.array(g)], st)
        expected = 3e-4 * g / (math.sqrt(g * g) + 1e-8)
        assert float(1.0 - p) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(3e-4, rel=1e-4)

    def test_ten_step_trace_matches_closed_form_oracle(self):
        rng = np.random.default_rng(8)
        gs = rng.uniform(-1, 1, size=10)
        lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8

        # oracle: moments from explicit geometric sums, fresh each step
        theta_ref = 0.5
        for t in range(1, 11):
            m = (1 - b1) * sum(b1 ** (t - i) * gs[i - 1] for i in range(1, t + 1))
            v = (1 - b2) * sum(b2 ** (t - i) * gs[i - 1] ** 2 for i in range(1, t + 1))
            mhat = m / (1 - b1 ** t)
            vhat = v / (1 - b2 ** t)
            theta_ref -= lr * mhat / (math.sqrt(vhat) + eps)

        p = np.array(0.5)
        st = AdamState([p], lr=lr, beta1=b1, beta2=b2, eps=eps)
        for g in gs:
            adam_step([p], [np.array(g)], st)
        assert float(p) == pytest.approx(theta_ref, abs=1e-10)


class TestSerialization:
    @pytest.mark.parametrize("dtype", [np.float64, np.float32])
    def test_mlp_round_trip_bit_exact(self, dtype):
        net = Mlp((6, 16, 2), np.random.default_rng(9), dtype=dtype)
        back = Mlp.from_bytes(net.to_bytes())
        assert back.sizes == net.sizes
        assert back.dtype == net.dtype
        assert np.array_equal(back.flat, net.flat)

    def test_adam_round_trip_bit_exact(self):
        net = Mlp((4, 8, 2), np.random.default_rng(10))
        st = AdamState([net.flat], lr=2e-4)
        adam_step([net.flat], [np.ones_like(net.flat)], st)
        back = AdamState.from_bytes(st.to_bytes())
        assert back.step == st.step and back.lr == st.lr
        assert np.array_equal(back.m[0], st.m[0])
        assert np.array_equal(back.v[0], st.v[0])

    def test_wrong_blob_rejected(self):
        with pytest.raises(ValueError):
            Mlp.from_bytes(b"garbage")
        net = Mlp((2, 2), np.random.default_rng(0))
        with pytest.raises(ValueError, match="adam"):
            AdamState.from_bytes(net.to_bytes())


class TestSquashedGaussian:
    def test_zero_noise_gives_tanh_mean(self):
        head = GaussianHead(mean=0.7, log_std=-1.0)
        a, _ = head.sample(0.0)
        assert a == pytest.approx(math.tanh(0.7), rel=1e-12)

    def test_standard_head_log_prob_closed_form(self):
        # logN(0;0,1) - log(1 - 0 + eps)
        a, lp = squash_sample(0.0, 0.0, 0.0)
        expected = -0.5 * math.log(2 * math.pi) - math.log(1.0 + 1e-6)
        assert a == 0.0
        assert lp == pytest.approx(expected, rel=1e-12)
        assert lp == pytest.approx(-0.9189, abs=1e-4)

    def test_density_integrates_to_one(self):
        # quadrature oracle over the action interval
        rng = np.random.default_rng(11)
        grid = np.linspace(-1 + 1e-9, 1 - 1e-9, 400001)
        for _ in range(5):
            mean = rng.uniform(-1.5, 1.5)
            log_std = rng.uniform(-1.0, 0.5)
            lp = squash_log_prob(mean, log_std, grid)
            integral = np.trapezoid(np.exp(lp), grid)
            assert integral == pytest.approx(1.0, abs=1e-2)

    def test_actions_strictly_inside_interval(self):
        rng = np.random.default_rng(12)
        a, _ = squash_sample(rng.uniform(-3, 3, 1000), 2.0,
                             rng.standard_normal(1000))
        assert np.all(a > -1.0) and np.all(a < 1.0)

    def test_head_clamp_enforced(self):
        with pytest.raises(ValueError):
            GaussianHead(mean=0.0, log_std=LOG_STD_MAX + 1.0)
        with pytest.raises(ValueError):
            GaussianHead(mean=0.0, log_std=LOG_STD_MIN - 1.0)

    def test_sample_consistent_with_density(self):
        # squash_log_prob at a sampled action equals the sampled log_prob
        mean, log_std = 0.3, -0.5
        a, lp = squash_sample(mean, log_std, 0.8)
        lp2 = squash_log_prob(mean, log_std, a)
        assert lp == pytest.approx(float(lp2), rel=1e-6)
