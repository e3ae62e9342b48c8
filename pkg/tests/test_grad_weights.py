"""Alpha maps and channel-weight baselines against hand-derived oracles."""

import numpy as np
import pytest

from msrd.grad_weights import alpha_maps, rectified_alpha_weights, global_average_weights, rectified_gradients


def scalar_alpha(acts, grads):
    """Independent per-pixel evaluation of the alpha closed form."""
    acts = np.asarray(acts, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    out = np.zeros_like(grads)
    for k in range(grads.shape[0]):
        s = 0.0
        for a in range(grads.shape[1]):
            for b in range(grads.shape[2]):
                s += acts[k, a, b] * grads[k, a, b] ** 3
        for i in range(grads.shape[1]):
            for j in range(grads.shape[2]):
                g = grads[k, i, j]
                denom = 2.0 * g * g + s
                out[k, i, j] = (g * g) / denom if denom > 0 else 0.0
    return out


class TestGlobalAverageWeights:
    def test_mean_of_channel(self):
        g = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        assert global_average_weights(g)[0] == pytest.approx(2.5)

    def test_constant_channel(self):
        g = np.full((3, 5, 7), 0.4)
        np.testing.assert_allclose(global_average_weights(g), 0.4)

    def test_signed_values_average_to_zero(self):
        g = np.array([[[-1.0, 1.0], [-1.0, 1.0]]])
        assert global_average_weights(g)[0] == 0.0

    def test_weight_times_z_equals_sum(self, rng):
        g = rng.normal(0, 1, (4, 9, 11))
        w = global_average_weights(g)
        np.testing.assert_allclose(w * 9 * 11, g.sum(axis=(1, 2)), rtol=1e-6)

    def test_rank_checked(self):
        with pytest.raises(ValueError):
            global_average_weights(np.zeros((2, 2)))


class TestAlphaMaps:
    def test_zero_gradients_give_zero(self):
        a = np.ones((2, 3, 3))
        g = np.zeros((2, 3, 3))
        result = alpha_maps(a, g)
        assert np.all(result.values == 0.0)
        assert result.clamped == 0

    def test_single_pixel_third(self):
        result = alpha_maps(np.ones((1, 1, 1)), np.ones((1, 1, 1)))
        assert result.values[0, 0, 0] == pytest.approx(1.0 / 3.0)

    def test_uniform_closed_form(self):
        c, a, h, w = 0.7, 1.3, 4, 6
        expected = c**2 / (2 * c**2 + h * w * a * c**3)
        result = alpha_maps(np.full((1, h, w), a), np.full((1, h, w), c))
        np.testing.assert_allclose(result.values, expected, rtol=1e-12)

    def test_matches_scalar_implementation(self, rng):
        acts = np.abs(rng.normal(0, 1, (3, 5, 4)))
        grads = rng.normal(0, 1, (3, 5, 4))
        result = alpha_maps(acts, grads)
        np.testing.assert_allclose(result.values, scalar_alpha(acts, grads), rtol=1e-12)

    def test_nonnegative_everywhere(self, rng):
        acts = np.abs(rng.normal(0, 1, (4, 8, 8)))
        grads = rng.normal(0, 1, (4, 8, 8))
        assert np.all(alpha_maps(acts, grads).values >= 0.0)

    def test_negative_denominator_clamped_and_counted(self):
        # sum A g^3 = -4 < -2 g^2: forced to zero, counted once
        result = alpha_maps(np.array([[[4.0]]]), np.array([[[-1.0]]]))
        assert result.values[0, 0, 0] == 0.0
        assert result.clamped == 1

    def test_negative_activation_warns(self):
        with pytest.warns(RuntimeWarning, match="negative activations"):
            alpha_maps(np.array([[[-1.0]]]), np.array([[[1.0]]]))

    def test_shape_mismatch_names_both(self):
        with pytest.raises(ValueError, match=r"\(1, 2, 2\).*\(1, 2, 3\)"):
            alpha_maps(np.zeros((1, 2, 2)), np.zeros((1, 2, 3)))


class TestRectifiedGradients:
    def test_clips_negative(self):
        np.testing.assert_array_equal(rectified_gradients(np.array([[-1.0, 2.0]])), [[0.0, 2.0]])

    def test_identity_on_nonnegative(self, rng):
        t = np.abs(rng.normal(0, 1, (3, 4)))
        np.testing.assert_array_equal(rectified_gradients(t), t)

    def test_idempotent(self, rng):
        t = rng.normal(0, 1, (5, 6))
        once = rectified_gradients(t)
        np.testing.assert_array_equal(rectified_gradients(once), once)


class TestRectifiedAlphaWeights:
    def test_nonpositive_gradients_annihilate(self):
        a = np.ones((2, 3, 3))
        g = -np.abs(np.ones((2, 3, 3)))
        np.testing.assert_array_equal(rectified_alpha_weights(a, g), [0.0, 0.0])

    def test_single_pixel(self):
        assert rectified_alpha_weights(np.ones((1, 1, 1)), np.ones((1, 1, 1)))[0] == pytest.approx(1.0 / 3.0)

    def test_matches_brute_force(self, rng):
        acts = np.abs(rng.normal(0, 1, (8, 16, 16)))
        grads = rng.normal(0, 1, (8, 16, 16))
        alpha = scalar_alpha(acts, grads)
        expected = np.zeros(8)
        for k in range(8):
            for i in range(16):
                for j in range(16):
                    expected[k] += alpha[k, i, j] * max(grads[k, i, j], 0.0)
        np.testing.assert_allclose(rectified_alpha_weights(acts, grads), expected, rtol=1e-6)
