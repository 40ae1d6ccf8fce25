import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from MelGAN.Algorithm import kernels
from MelGAN.Algorithm.ops import (Conv1d, ConvSpec, affine, avg_pool1d, conv1d, conv_transpose1d, crop_time,
                                  elementwise_add, l1_mean, leaky_relu, relu, tanh, tensor_sum, weight_norm_forward)
from MelGAN.Algorithm.oracle import (analytic_grad, finite_difference_grad, naive_avg_pool1d, naive_conv1d,
                                     naive_conv_transpose1d, relative_error)
from MelGAN.Algorithm.tensor import Tensor, float_dtype, precision
from MelGAN.Utils.errors import ConfigError, DimensionError


def t(values):
    return Tensor(np.asarray(values, dtype=np.float32))


def check_grad(fn, tensors, tolerance=1e-3):
    analytic = analytic_grad(fn, tensors)
    numeric = finite_difference_grad(fn, tensors, h=1e-3)
    for a, n in zip(analytic, numeric):
        assert relative_error(a, n) < tolerance


def away_from_zero(rng, shape, margin=0.05):
    values = rng.uniform(margin, 1.0, size=shape)
    return values * rng.choice([-1.0, 1.0], size=shape)


# conv1d

def test_conv1d_identity_kernel():
    spec = ConvSpec(1, 1, 1)
    out = conv1d(t([[[1, 2, 3, 4]]]), t([[[1]]]), t([[[0]]]), spec)
    np.testing.assert_array_equal(out.data, [[[1, 2, 3, 4]]])


def test_conv1d_is_cross_correlation():
    spec = ConvSpec(1, 1, 3)
    out = conv1d(t([[[1, 2, 3, 4]]]), t([[[1, 0, -1]]]), t([[[0]]]), spec)
    np.testing.assert_array_equal(out.data, [[[-2, -2]]])


def test_conv1d_grouped_identity():
    spec = ConvSpec(2, 2, 1, groups=2)
    x = t([[[1, 2, 3, 4], [5, 6, 7, 8]]])
    out = conv1d(x, t([[[1]], [[1]]]), None, spec)
    np.testing.assert_array_equal(out.data, x.data)


def test_conv1d_rejects_channel_mismatch():
    spec = ConvSpec(2, 1, 1)
    with pytest.raises(DimensionError) as info:
        conv1d(Tensor.zeros((1, 3, 4)), Tensor.zeros((1, 2, 1)), None, spec)
    assert info.value.axis == 'channels'


def test_conv1d_rejects_reflect_padding_longer_than_input():
    spec = ConvSpec(1, 1, 7, padding=3, padding_mode='reflect')
    with pytest.raises(DimensionError):
        conv1d(Tensor.zeros((1, 1, 3)), Tensor.zeros((1, 1, 7)), None, spec)


def test_conv1d_rejects_input_shorter_than_kernel():
    spec = ConvSpec(1, 1, 5)
    with pytest.raises(DimensionError):
        conv1d(Tensor.zeros((1, 1, 3)), Tensor.zeros((1, 1, 5)), None, spec)


def test_convspec_invariants():
    with pytest.raises(ConfigError):
        ConvSpec(3, 4, 1, groups=2)
    with pytest.raises(ConfigError):
        ConvSpec(2, 2, 3, transposed=True, dilation=2)
    with pytest.raises(ConfigError):
        ConvSpec(2, 2, 3, transposed=True, padding_mode='reflect')
    assert ConvSpec(4, 8, 3, groups=2).weight_shape == (8, 2, 3)
    assert ConvSpec(4, 8, 3, groups=2, transposed=True).weight_shape == (4, 4, 3)


@st.composite
def conv_cases(draw):
    groups = draw(st.sampled_from([1, 2]))
    in_channels = groups * draw(st.integers(1, 2))
    out_channels = groups * draw(st.integers(1, 2))
    kernel = draw(st.integers(1, 5))
    stride = draw(st.integers(1, 3))
    dilation = draw(st.integers(1, 3))
    mode = draw(st.sampled_from(['zeros', 'reflect']))
    length = draw(st.integers(1, 14))
    padding = draw(st.integers(0, 3))
    if mode == 'reflect':
        padding = min(padding, length - 1)
    extent = (kernel - 1) * dilation + 1
    if length + 2 * padding < extent:
        length = extent
    batch = draw(st.integers(1, 2))
    seed = draw(st.integers(0, 2 ** 16))
    spec = ConvSpec(in_channels, out_channels, kernel, stride=stride, dilation=dilation, groups=groups,
                    padding=padding, padding_mode=mode)
    return spec, batch, length, seed


@settings(max_examples=200, deadline=None)
@given(conv_cases())
def test_conv1d_matches_naive_loops(case):
    spec, batch, length, seed = case
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(batch, spec.in_channels, length)).astype(np.float32)
    w = rng.normal(size=spec.weight_shape).astype(np.float32)
    b = rng.normal(size=(1, spec.out_channels, 1)).astype(np.float32)
    out = conv1d(Tensor(x), Tensor(w), Tensor(b), spec)
    assert out.time == spec.output_length(length)
    np.testing.assert_allclose(out.data, naive_conv1d(x, w, b, spec), atol=1e-5)


@st.composite
def transposed_cases(draw):
    groups = draw(st.sampled_from([1, 2]))
    in_channels = groups * draw(st.integers(1, 2))
    out_channels = groups * draw(st.integers(1, 2))
    stride = draw(st.integers(1, 4))
    kernel = draw(st.integers(1, 8))
    padding = draw(st.integers(0, (kernel - 1) // 2))
    length = draw(st.integers(1, 10))
    seed = draw(st.integers(0, 2 ** 16))
    spec = ConvSpec(in_channels, out_channels, kernel, stride=stride, groups=groups, transposed=True,
                    padding=padding)
    return spec, length, seed


@settings(max_examples=200, deadline=None)
@given(transposed_cases())
def test_conv_transpose1d_matches_naive_loops(case):
    spec, length, seed = case
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, spec.in_channels, length)).astype(np.float32)
    w = rng.normal(size=spec.weight_shape).astype(np.float32)
    b = rng.normal(size=(1, spec.out_channels, 1)).astype(np.float32)
    out = conv_transpose1d(Tensor(x), Tensor(w), Tensor(b), spec)
    assert out.time == (length - 1) * spec.stride - 2 * spec.padding + spec.kernel_size
    np.testing.assert_allclose(out.data, naive_conv_transpose1d(x, w, b, spec), atol=1e-5)


def test_conv_transpose1d_scatter_example():
    spec = ConvSpec(1, 1, 2, stride=2, transposed=True)
    out = conv_transpose1d(t([[[1]]]), t([[[1, 2]]]), None, spec)
    np.testing.assert_array_equal(out.data, [[[1, 2]]])


@pytest.mark.parametrize('frames', [1, 3, 10])
def test_conv_transpose1d_eightfold_stage(frames):
    spec = ConvSpec(2, 1, 16, stride=8, transposed=True, padding=4)
    out = conv_transpose1d(Tensor.zeros((1, 2, frames)), Tensor(np.ones((2, 1, 16))), Tensor.zeros((1, 1, 1)),
                           spec)
    assert out.time == 8 * frames
    assert not out.data.any()


def test_conv_transpose1d_rejects_negative_length():
    spec = ConvSpec(1, 1, 1, stride=1, transposed=True, padding=3)
    with pytest.raises(DimensionError):
        conv_transpose1d(Tensor.zeros((1, 1, 2)), Tensor.zeros((1, 1, 1)), None, spec)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 2), st.integers(1, 6), st.integers(0, 2 ** 16))
def test_conv_transpose_is_adjoint_of_conv(stride, kernel, padding, frames, seed):
    rng = np.random.default_rng(seed)
    length = (frames - 1) * stride + kernel - 2 * padding
    if length < 1:
        return
    conv = ConvSpec(3, 2, kernel, stride=stride, padding=padding)
    transposed = ConvSpec(2, 3, kernel, stride=stride, padding=padding, transposed=True)
    x = rng.normal(size=(1, 3, length)).astype(np.float32)
    w = rng.normal(size=conv.weight_shape).astype(np.float32)
    y = conv1d(Tensor(x), Tensor(w), None, conv)
    if y.time != frames:
        return
    upstream = rng.normal(size=y.shape).astype(np.float32)
    back = conv_transpose1d(Tensor(upstream), Tensor(w), None, transposed)
    assert back.shape == x.shape
    fn = Conv1d(Tensor(x), Tensor(w))
    fn.needs_grad = [True, False]
    fn.forward(x, w, None, spec=conv)
    vjp = fn.backward(upstream)[0]
    np.testing.assert_allclose(back.data, vjp, atol=1e-5)
    np.testing.assert_allclose((y.data * upstream).sum(), (x * back.data).sum(), rtol=1e-4, atol=1e-4)


def test_grouped_conv_equals_independent_slices(rng):
    spec = ConvSpec(4, 6, 3, groups=2, padding=1)
    x = rng.normal(size=(2, 4, 9)).astype(np.float32)
    w = rng.normal(size=spec.weight_shape).astype(np.float32)
    out = conv1d(Tensor(x), Tensor(w), None, spec).data
    half = ConvSpec(2, 3, 3, padding=1)
    first = conv1d(Tensor(x[:, :2]), Tensor(w[:3]), None, half).data
    second = conv1d(Tensor(x[:, 2:]), Tensor(w[3:]), None, half).data
    np.testing.assert_allclose(out, np.concatenate([first, second], axis=1), atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(1, 9), st.integers(1, 4), st.integers(1, 4), st.integers(0, 5))
def test_output_length_formula(length, kernel, stride, dilation, padding):
    extent = (kernel - 1) * dilation + 1
    if length + 2 * padding < extent:
        return
    spec = ConvSpec(1, 1, kernel, stride=stride, dilation=dilation, padding=padding)
    out = conv1d(Tensor.zeros((1, 1, length)), Tensor.zeros(spec.weight_shape), None, spec)
    assert out.time == (length + 2 * padding - (kernel - 1) * dilation - 1) // stride + 1
    assert out.time == kernels.conv_output_length(length, kernel, stride, dilation, padding)


# pooling and elementwise ops

def test_avg_pool_windowed_mean():
    out = avg_pool1d(t([[[1, 2, 3, 4, 5, 6]]]), 4, 2)
    np.testing.assert_allclose(out.data, [[[2.5, 4.5]]])


def test_avg_pool_constant_and_identity(rng):
    np.testing.assert_allclose(avg_pool1d(Tensor(np.full((1, 2, 9), 3.0)), 4, 2, 1).data, 3.0, rtol=1e-6)
    x = rng.normal(size=(1, 2, 5)).astype(np.float32)
    np.testing.assert_array_equal(avg_pool1d(Tensor(x), 1, 1).data, x)


def test_avg_pool_halves_even_lengths_with_padding():
    assert avg_pool1d(Tensor.zeros((1, 1, 16384)), 4, 2, 1).time == 8192


def test_avg_pool_rejects_kernel_longer_than_input():
    with pytest.raises(DimensionError):
        avg_pool1d(Tensor.zeros((1, 1, 3)), 4, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2), st.integers(5, 20), st.integers(0, 2 ** 16))
def test_avg_pool_matches_naive_loops(kernel, stride, padding, length, seed):
    padding = min(padding, kernel - 1)
    x = np.random.default_rng(seed).normal(size=(2, 3, length)).astype(np.float32)
    out = avg_pool1d(Tensor(x), kernel, stride, padding)
    np.testing.assert_allclose(out.data, naive_avg_pool1d(x, kernel, stride, padding), atol=1e-5)


def test_leaky_relu_values():
    out = leaky_relu(t([[[1.0, -1.0, 0.0]]]), 0.2)
    np.testing.assert_allclose(out.data, [[[1.0, -0.2, 0.0]]])


def test_leaky_relu_rejects_bad_slope():
    with pytest.raises(ConfigError):
        leaky_relu(t([[[1.0]]]), 1.5)


def test_tanh_values():
    out = tanh(t([[[0.0, 20.0, 0.7, -0.7]]])).data[0, 0]
    assert out[0] == 0
    assert abs(out[1] - 1.0) < 1e-6
    assert out[2] == -out[3]


def test_elementwise_add():
    a = t([[[1, 2]]])
    np.testing.assert_array_equal(elementwise_add(a, Tensor.zeros((1, 1, 2))).data, a.data)
    np.testing.assert_array_equal(elementwise_add(a, t([[[3, 4]]])).data, [[[4, 6]]])
    with pytest.raises(DimensionError):
        elementwise_add(a, Tensor.zeros((1, 1, 3)))


def test_l1_mean_values():
    a, b = t([[[1, 2]]]), t([[[0, 0]]])
    assert l1_mean(a, a).item() == 0
    assert l1_mean(a, b).item() == pytest.approx(1.5)
    assert l1_mean(b, a).item() == l1_mean(a, b).item()
    with pytest.raises(DimensionError):
        l1_mean(a, Tensor.zeros((1, 2, 2)))


def test_crop_time_window():
    out = crop_time(t([[[1, 2, 3, 4]]]), 1, 2)
    np.testing.assert_array_equal(out.data, [[[2, 3]]])
    with pytest.raises(DimensionError):
        crop_time(t([[[1, 2]]]), 1, 2)


# weight normalisation

def test_weight_norm_rescales_direction():
    w = weight_norm_forward(t([[[3, 4]]]), t([[[5]]]))
    np.testing.assert_allclose(w.data, [[[3, 4]]], rtol=1e-6)


def test_weight_norm_identity_at_init(rng):
    v = rng.normal(size=(4, 3, 5)).astype(np.float32)
    g = np.sqrt((v.astype(np.float64) ** 2).sum(axis=(1, 2), keepdims=True)).astype(np.float32)
    np.testing.assert_allclose(weight_norm_forward(Tensor(v), Tensor(g)).data, v, rtol=1e-6, atol=1e-7)


def test_weight_norm_direction_invariance(rng):
    v = rng.normal(size=(4, 3, 5)).astype(np.float32)
    g = Tensor(rng.uniform(0.5, 2.0, size=(4, 1, 1)))
    first = weight_norm_forward(Tensor(v), g).data
    second = weight_norm_forward(Tensor(3 * v), g).data
    assert np.abs(first - second).max() < 1e-6


def test_weight_norm_rejects_zero_channel():
    v = np.ones((2, 1, 3), dtype=np.float32)
    v[1] = 0
    with pytest.raises(DimensionError) as info:
        weight_norm_forward(Tensor(v), Tensor(np.ones((2, 1, 1))))
    assert info.value.actual == 1


# gradients against central differences

def test_grad_conv1d(rng):
    spec = ConvSpec(4, 4, 3, stride=2, dilation=2, groups=2, padding=2, padding_mode='reflect')
    x = Tensor(rng.normal(size=(2, 4, 10)))
    w = Tensor(rng.normal(0, 0.5, size=spec.weight_shape))
    b = Tensor(rng.normal(size=(1, 4, 1)))
    check_grad(lambda x, w, b: tensor_sum(tanh(conv1d(x, w, b, spec))), [x, w, b])


def test_grad_conv_transpose1d(rng):
    spec = ConvSpec(4, 2, 4, stride=2, groups=2, padding=1, transposed=True)
    x = Tensor(rng.normal(size=(2, 4, 6)))
    w = Tensor(rng.normal(0, 0.5, size=spec.weight_shape))
    b = Tensor(rng.normal(size=(1, 2, 1)))
    check_grad(lambda x, w, b: tensor_sum(tanh(conv_transpose1d(x, w, b, spec))), [x, w, b])


def test_grad_avg_pool(rng):
    x = Tensor(rng.normal(size=(2, 3, 12)))
    check_grad(lambda x: tensor_sum(tanh(avg_pool1d(x, 4, 2, 1))), [x])


def test_grad_activations(rng):
    x = Tensor(away_from_zero(rng, (2, 3, 8)))
    check_grad(lambda x: tensor_sum(leaky_relu(x, 0.2)), [x])
    check_grad(lambda x: tensor_sum(tanh(relu(x))), [x])
    check_grad(lambda x: tensor_sum(tanh(affine(x, 1.5, -0.25))), [x])


def test_grad_add_and_crop(rng):
    a = Tensor(rng.normal(size=(2, 2, 8)))
    b = Tensor(rng.normal(size=(2, 2, 8)))
    check_grad(lambda a, b: tensor_sum(tanh(crop_time(elementwise_add(a, b), 2, 5))), [a, b])


def test_grad_l1_mean(rng):
    b = rng.normal(size=(2, 3, 8))
    a = b + away_from_zero(rng, (2, 3, 8), margin=0.1)
    check_grad(lambda a, b: l1_mean(a, b), [Tensor(a), Tensor(b)])


def test_grad_weight_norm(rng):
    v = Tensor(rng.normal(size=(3, 2, 4)))
    g = Tensor(rng.uniform(0.5, 1.5, size=(3, 1, 1)))
    check_grad(lambda v, g: tensor_sum(tanh(weight_norm_forward(v, g))), [v, g])


def test_grad_weight_norm_inside_conv(rng):
    spec = ConvSpec(2, 3, 3, padding=1)
    x = Tensor(rng.normal(size=(1, 2, 7)))
    v = Tensor(rng.normal(size=spec.weight_shape))
    g = Tensor(rng.uniform(0.5, 1.5, size=(3, 1, 1)))
    check_grad(lambda v, g: tensor_sum(tanh(conv1d(x, weight_norm_forward(v, g), None, spec))), [v, g])


def test_grad_pointwise_conv_with_zero_padding(rng):
    spec = ConvSpec(8, 8, 1, padding=1)
    x = Tensor(rng.normal(size=(1, 8, 21)))
    w = Tensor(rng.normal(0, 0.5, size=spec.weight_shape))
    b = Tensor(rng.normal(size=(1, 8, 1)))
    check_grad(lambda x, w, b: tensor_sum(tanh(conv1d(x, w, b, spec))), [x, w, b])


def test_precision_switches_tensor_storage(rng):
    spec = ConvSpec(2, 2, 3, padding=1, padding_mode='reflect')
    w = Tensor(rng.normal(size=spec.weight_shape))
    with precision(np.float64):
        assert float_dtype() is np.float64
        x = Tensor(rng.normal(size=(1, 2, 6)))
        out = tensor_sum(tanh(avg_pool1d(conv1d(x, w, None, spec), 2, 2)))
        assert x.data.dtype == np.float64
        assert out.data.dtype == np.float64
    assert float_dtype() is np.float32
    assert Tensor(x.data).data.dtype == np.float32


@st.composite
def grad_conv_cases(draw):
    groups = draw(st.sampled_from([1, 2, 4]))
    in_channels = groups * draw(st.integers(1, 8 // groups))
    out_channels = groups * draw(st.integers(1, 8 // groups))
    kernel = draw(st.integers(1, 5))
    stride = draw(st.integers(1, 2))
    dilation = draw(st.integers(1, 3))
    mode = draw(st.sampled_from(['zeros', 'reflect']))
    length = draw(st.integers(2, 32))
    padding = draw(st.integers(0, 3))
    if mode == 'reflect':
        padding = min(padding, length - 1)
    extent = (kernel - 1) * dilation + 1
    if length + 2 * padding < extent:
        length = extent
    batch = draw(st.integers(1, 2))
    seed = draw(st.integers(0, 2 ** 16))
    spec = ConvSpec(in_channels, out_channels, kernel, stride=stride, dilation=dilation, groups=groups,
                    padding=padding, padding_mode=mode)
    return spec, batch, length, seed


@settings(max_examples=25, deadline=None)
@given(grad_conv_cases())
def test_grad_conv1d_random_layouts(case):
    spec, batch, length, seed = case
    rng = np.random.default_rng(seed)
    x = Tensor(rng.normal(size=(batch, spec.in_channels, length)))
    w = Tensor(rng.normal(0, 0.5, size=spec.weight_shape))
    b = Tensor(rng.normal(size=(1, spec.out_channels, 1)))
    check_grad(lambda x, w, b: tensor_sum(tanh(conv1d(x, w, b, spec))), [x, w, b])


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([1, 2, 4]), st.integers(1, 8), st.integers(1, 8), st.integers(1, 4), st.integers(1, 8),
       st.integers(1, 2), st.integers(0, 2 ** 16))
def test_grad_conv_transpose1d_random_layouts(groups, in_channels, out_channels, stride, kernel, batch, seed):
    in_channels = groups * max(1, in_channels // groups)
    out_channels = groups * max(1, out_channels // groups)
    spec = ConvSpec(in_channels, out_channels, kernel, stride=stride, groups=groups, transposed=True,
                    padding=(kernel - 1) // 2)
    rng = np.random.default_rng(seed)
    length = int(rng.integers(1, 32 // stride + 1))
    x = Tensor(rng.normal(size=(batch, in_channels, length)))
    w = Tensor(rng.normal(0, 0.5, size=spec.weight_shape))
    b = Tensor(rng.normal(size=(1, out_channels, 1)))
    check_grad(lambda x, w, b: tensor_sum(tanh(conv_transpose1d(x, w, b, spec))), [x, w, b])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(1, 8), st.integers(5, 32), st.integers(1, 5), st.integers(1, 3),
       st.integers(0, 2), st.integers(0, 2 ** 16))
def test_grad_avg_pool_random_layouts(batch, channels, length, kernel, stride, padding, seed):
    padding = min(padding, kernel - 1)
    x = Tensor(np.random.default_rng(seed).normal(size=(batch, channels, length)))
    check_grad(lambda x: tensor_sum(tanh(avg_pool1d(x, kernel, stride, padding))), [x])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(1, 7), st.integers(0, 2 ** 16))
def test_grad_weight_norm_random_layouts(out_channels, in_channels, kernel, seed):
    rng = np.random.default_rng(seed)
    v = Tensor(rng.normal(size=(out_channels, in_channels, kernel)))
    g = Tensor(rng.uniform(0.5, 1.5, size=(out_channels, 1, 1)))
    check_grad(lambda v, g: tensor_sum(tanh(weight_norm_forward(v, g))), [v, g])
