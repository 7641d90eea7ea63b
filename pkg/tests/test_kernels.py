"""Layer primitives: shapes, hand-checked values, gradients, backends."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rawseq import gradcheck, kernels
from rawseq.errors import ConfigError, DimensionError, InputTooShortError


class TestOutputLength:
    def test_hand_cases(self):
        assert kernels.output_length(4, 2, 1) == 3
        assert kernels.output_length(10, 10, 10) == 1
        assert kernels.output_length(7, 3, 2) == 3

    @given(
        t=st.integers(1, 200),
        kw=st.integers(1, 20),
        dw=st.integers(1, 20),
    )
    @settings(deadline=None)
    def test_matches_window_enumeration(self, t, kw, dw):
        if t < kw:
            with pytest.raises(InputTooShortError):
                kernels.output_length(t, kw, dw)
            return
        starts = [s for s in range(0, t, dw) if s + kw <= t]
        assert kernels.output_length(t, kw, dw) == len(starts)
        assert kernels.output_length(t, kw, dw) == (t - kw) // dw + 1

    def test_bad_spec(self):
        with pytest.raises(ConfigError):
            kernels.output_length(5, 0, 1)
        with pytest.raises(ConfigError):
            kernels.output_length(5, 2, 0)


class TestConvForward:
    def test_sliding_sum(self, backend):
        out = kernels.conv1d_forward(
            np.array([1.0, 2.0, 3.0, 4.0]), np.array([[1.0, 1.0]]), np.array([0.0]), 2, 1
        )
        np.testing.assert_array_equal(out, [[3.0], [5.0], [7.0]])

    def test_kw1_identity(self, backend):
        rng = np.random.default_rng(0)
        x = rng.uniform(-1, 1, (7, 3))
        out = kernels.conv1d_forward(x, np.eye(3), np.zeros(3), 1, 1)
        np.testing.assert_allclose(out, x, atol=1e-15)

    def test_full_width_single_output(self, backend):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, (10, 1))
        out = kernels.conv1d_forward(x, rng.uniform(-1, 1, (5, 10)), rng.uniform(-1, 1, 5), 10, 10)
        assert out.shape == (1, 5)

    def test_bias_added(self, backend):
        out = kernels.conv1d_forward(np.zeros((4, 1)), np.zeros((2, 2)), np.array([3.0, -1.0]), 2, 2)
        np.testing.assert_array_equal(out, [[3.0, -1.0], [3.0, -1.0]])

    def test_window_values_match_direct_dot(self, backend):
        rng = np.random.default_rng(2)
        x = rng.uniform(-2, 2, (9, 2))
        w = rng.uniform(-2, 2, (3, 8))
        b = rng.uniform(-2, 2, 3)
        out = kernels.conv1d_forward(x, w, b, 4, 2)
        for u in range(out.shape[0]):
            window = x[u * 2 : u * 2 + 4].ravel()
            np.testing.assert_allclose(out[u], w @ window + b, rtol=1e-12)

    def test_linearity_with_zero_bias(self, backend):
        rng = np.random.default_rng(3)
        x1 = rng.uniform(-1, 1, (8, 2))
        x2 = rng.uniform(-1, 1, (8, 2))
        w = rng.uniform(-1, 1, (3, 6))
        zero = np.zeros(3)
        lhs = kernels.conv1d_forward(2.5 * x1 - 1.5 * x2, w, zero, 3, 2)
        rhs = 2.5 * kernels.conv1d_forward(x1, w, zero, 3, 2) - 1.5 * kernels.conv1d_forward(
            x2, w, zero, 3, 2
        )
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_too_short_names_minimum(self, backend):
        with pytest.raises(InputTooShortError, match="at least 5"):
            kernels.conv1d_forward(np.zeros((3, 1)), np.zeros((1, 5)), np.zeros(1), 5, 1)

    def test_weight_shape_mismatch(self, backend):
        with pytest.raises(DimensionError):
            kernels.conv1d_forward(np.zeros((6, 2)), np.zeros((1, 5)), np.zeros(1), 2, 1)
        with pytest.raises(DimensionError):
            kernels.conv1d_forward(np.zeros((6, 1)), np.zeros((2, 2)), np.zeros(3), 2, 1)


class TestConvBackward:
    def test_zero_grad_out(self, backend):
        g_x, g_w, g_b = kernels.conv1d_backward(
            np.ones((6, 2)), np.ones((3, 4)), 2, 2, np.zeros((3, 3))
        )
        assert not g_x.any() and not g_w.any() and not g_b.any()

    def test_kw1_reduces_to_linear_layer(self, backend):
        rng = np.random.default_rng(4)
        x = rng.uniform(-1, 1, (5, 3))
        w = rng.uniform(-1, 1, (2, 3))
        g = rng.uniform(-1, 1, (5, 2))
        g_x, g_w, g_b = kernels.conv1d_backward(x, w, 1, 1, g)
        np.testing.assert_allclose(g_w, g.T @ x, rtol=1e-12)
        np.testing.assert_allclose(g_x, g @ w, rtol=1e-12)
        np.testing.assert_allclose(g_b, g.sum(axis=0), rtol=1e-12)

    def test_overlapping_windows_accumulate(self, backend):
        # kw=2, dw=1: interior frame j feeds windows j-1 and j
        x = np.zeros((3, 1))
        w = np.array([[1.0, 1.0]])
        g = np.ones((2, 1))
        g_x, _, _ = kernels.conv1d_backward(x, w, 2, 1, g)
        np.testing.assert_array_equal(g_x, [[1.0], [2.0], [1.0]])

    def test_grad_out_shape_checked(self, backend):
        with pytest.raises(DimensionError):
            kernels.conv1d_backward(np.zeros((6, 1)), np.zeros((1, 2)), 2, 2, np.zeros((5, 1)))

    def test_finite_differences(self, backend):
        result = gradcheck.check_conv(seed=10, instances=100)
        assert result.passed, result.line()


class TestMaxPool:
    def test_hand_case_with_tape(self, backend):
        y, tape = kernels.maxpool_forward(np.array([1.0, 3.0, 2.0, 5.0]), 2, 2)
        np.testing.assert_array_equal(y, [[3.0], [5.0]])
        # tape holds 0-based input frame indices
        np.testing.assert_array_equal(tape, [[1], [3]])

    def test_constant_input_takes_first_index(self, backend):
        y, tape = kernels.maxpool_forward(np.full((9, 2), 7.0), 3, 3)
        np.testing.assert_array_equal(y, np.full((3, 2), 7.0))
        np.testing.assert_array_equal(tape, [[0, 0], [3, 3], [6, 6]])

    def test_matches_exhaustive_window_max(self, backend):
        rng = np.random.default_rng(5)
        x = rng.uniform(-3, 3, (12, 4))
        y, tape = kernels.maxpool_forward(x, 3, 3)
        for u in range(4):
            window = x[u * 3 : u * 3 + 3]
            np.testing.assert_array_equal(y[u], window.max(axis=0))

    @given(t=st.integers(1, 30), kw=st.integers(1, 6), dw=st.integers(1, 6), seed=st.integers(0, 99))
    @settings(deadline=None, max_examples=60)
    def test_tape_indices_inside_their_window(self, t, kw, dw, seed):
        if t < kw:
            return
        x = np.random.default_rng(seed).uniform(-1, 1, (t, 2))
        y, tape = kernels.maxpool_forward(x, kw, dw)
        for u in range(y.shape[0]):
            assert np.all(tape[u] >= u * dw) and np.all(tape[u] < u * dw + kw)
            np.testing.assert_array_equal(y[u], x[tape[u], [0, 1]])

    def test_kw1_is_identity(self, backend):
        rng = np.random.default_rng(6)
        x = rng.uniform(-1, 1, (7, 2))
        y1, _ = kernels.maxpool_forward(x, 1, 1)
        y2, _ = kernels.maxpool_forward(y1, 1, 1)
        np.testing.assert_array_equal(y1, x)
        np.testing.assert_array_equal(y2, x)

    def test_too_short(self, backend):
        with pytest.raises(InputTooShortError):
            kernels.maxpool_forward(np.zeros((2, 1)), 3, 3)

    def test_backward_routes_to_tape_positions(self, backend):
        _, tape = kernels.maxpool_forward(np.array([1.0, 3.0, 2.0, 5.0]), 2, 2)
        g_x = kernels.maxpool_backward(tape, np.array([[4.0], [9.0]]), 4)
        np.testing.assert_array_equal(g_x, [[0.0], [4.0], [0.0], [9.0]])

    def test_backward_zero(self, backend):
        _, tape = kernels.maxpool_forward(np.ones((6, 2)), 2, 2)
        assert not kernels.maxpool_backward(tape, np.zeros((3, 2)), 6).any()

    def test_backward_accumulates_on_overlap(self, backend):
        # kw=2, dw=1 over a peaked signal: frame 1 wins both window 0 and 1
        x = np.array([0.0, 9.0, 0.0])
        _, tape = kernels.maxpool_forward(x, 2, 1)
        np.testing.assert_array_equal(tape, [[1], [1]])
        g_x = kernels.maxpool_backward(tape, np.array([[2.0], [3.0]]), 3)
        np.testing.assert_array_equal(g_x, [[0.0], [5.0], [0.0]])

    def test_backward_shape_mismatch(self, backend):
        with pytest.raises(DimensionError):
            kernels.maxpool_backward(np.zeros((2, 1), dtype=np.int64), np.zeros((3, 1)), 6)

    def test_finite_differences_away_from_ties(self, backend):
        result = gradcheck.check_maxpool(seed=11, instances=100)
        assert result.passed, result.line()


class TestTanh:
    def test_zero_fixed_point_and_unit_gradient(self):
        x = np.zeros((3, 2))
        y = kernels.tanh_forward(x)
        np.testing.assert_array_equal(y, x)
        g = np.random.default_rng(7).uniform(-1, 1, (3, 2))
        np.testing.assert_array_equal(kernels.tanh_backward(y, g), g)

    def test_saturation(self):
        y = kernels.tanh_forward(np.array([50.0, -50.0]))
        np.testing.assert_allclose(y, [1.0, -1.0])
        g = kernels.tanh_backward(y, np.ones(2))
        np.testing.assert_allclose(g, [0.0, 0.0], atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            kernels.tanh_backward(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_finite_differences(self):
        result = gradcheck.check_tanh(seed=12, instances=100)
        assert result.passed, result.line()


class TestLinear:
    def test_identity(self):
        x = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(kernels.linear_forward(x, np.eye(3), np.zeros(3)), x)

    def test_zero_input_gives_bias(self):
        b = np.array([4.0, 5.0])
        np.testing.assert_array_equal(
            kernels.linear_forward(np.zeros(3), np.ones((2, 3)), b), b
        )

    def test_backward_values(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(-1, 1, 4)
        w = rng.uniform(-1, 1, (3, 4))
        g = rng.uniform(-1, 1, 3)
        g_x, g_w, g_b = kernels.linear_backward(x, w, g)
        np.testing.assert_allclose(g_x, w.T @ g, rtol=1e-12)
        np.testing.assert_allclose(g_w, np.outer(g, x), rtol=1e-12)
        np.testing.assert_array_equal(g_b, g)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            kernels.linear_forward(np.zeros(3), np.zeros((2, 4)), np.zeros(2))
        with pytest.raises(DimensionError):
            kernels.linear_backward(np.zeros(3), np.zeros((2, 3)), np.zeros(4))

    def test_finite_differences(self):
        result = gradcheck.check_linear(seed=13, instances=100)
        assert result.passed, result.line()


class TestBackendAgreement:
    """Both backends must produce the same numbers on the same inputs."""

    def test_conv_and_pool(self):
        names = kernels.available_backends()
        if len(names) < 2:
            pytest.skip("only one backend available")
        rng = np.random.default_rng(9)
        x = rng.uniform(-2, 2, (50, 3))
        w = rng.uniform(-1, 1, (4, 9))
        b = rng.uniform(-1, 1, 4)
        g = rng.uniform(-1, 1, (16, 4))
        outs = {}
        for name in names:
            prev = kernels.use_backend(name)
            try:
                conv = kernels.conv1d_forward(x, w, b, 3, 3)
                grads = kernels.conv1d_backward(x, w, 3, 3, g)
                pool, tape = kernels.maxpool_forward(conv, 2, 2)
                back = kernels.maxpool_backward(tape, pool.copy(), conv.shape[0])
                outs[name] = (conv, grads, pool, tape, back)
            finally:
                kernels.use_backend(prev)
        ref = outs[names[0]]
        for name in names[1:]:
            got = outs[name]
            np.testing.assert_allclose(got[0], ref[0], rtol=1e-13)
            for a, b_ in zip(got[1], ref[1]):
                np.testing.assert_allclose(a, b_, rtol=1e-13)
            np.testing.assert_allclose(got[2], ref[2], rtol=1e-13)
            np.testing.assert_array_equal(got[3], ref[3])
            np.testing.assert_allclose(got[4], ref[4], rtol=1e-13)

    def test_crf_recursions(self):
        names = kernels.available_backends()
        if len(names) < 2:
            pytest.skip("only one backend available")
        rng = np.random.default_rng(10)
        scores = rng.uniform(-2, 2, (20, 5))
        trans = rng.uniform(-2, 2, (5, 5))
        init = rng.uniform(-2, 2, 5)
        outs = {}
        for name in names:
            prev = kernels.use_backend(name)
            try:
                outs[name] = (
                    kernels.crf_alpha(scores, trans, init),
                    kernels.crf_beta(scores, trans),
                    kernels.crf_viterbi(scores, trans, init),
                )
            finally:
                kernels.use_backend(prev)
        ref = outs[names[0]]
        for name in names[1:]:
            got = outs[name]
            np.testing.assert_allclose(got[0], ref[0], rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(got[1], ref[1], rtol=1e-12, atol=1e-12)
            np.testing.assert_array_equal(got[2][0], ref[2][0])
            np.testing.assert_allclose(got[2][1], ref[2][1], rtol=1e-12)

    def test_backend_selection_api(self):
        names = kernels.available_backends()
        assert "python" in names
        active = kernels.active_backend()
        assert active in names
        prev = kernels.use_backend("python")
        try:
            assert kernels.active_backend() == "python"
        finally:
            kernels.use_backend(prev)
        with pytest.raises(ConfigError):
            kernels.get_backend("gpu")


class TestLogadd:
    def test_singleton(self):
        assert kernels.logadd(np.array([3.5])) == 3.5

    def test_two_zeros(self):
        assert abs(kernels.logadd(np.zeros(2)) - np.log(2)) < 1e-15

    def test_large_values_no_overflow(self):
        out = kernels.logadd(np.array([1000.0, 1000.0]))
        assert abs(out - (1000.0 + np.log(2))) < 1e-12

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            kernels.logadd(np.array([]))
