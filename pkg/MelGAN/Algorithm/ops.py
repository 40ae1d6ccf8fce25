from dataclasses import dataclass

import numpy as np

from MelGAN.Algorithm import kernels
from MelGAN.Algorithm.tensor import Function, Tensor, float_dtype
from MelGAN.Utils.errors import ConfigError, DimensionError

DEFAULT_SLOPE = 0.2


@dataclass(frozen=True)
class ConvSpec:
    """
    Declarative description of one 1-D convolution layer.

    Weight shape is ``(out_channels, in_channels/groups, kernel_size)`` for a
    regular convolution and ``(in_channels, out_channels/groups, kernel_size)``
    for a transposed one.
    """
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    dilation: int = 1
    groups: int = 1
    transposed: bool = False
    padding: int = 0
    padding_mode: str = 'zeros'

    def __post_init__(self):
        self.validate()

    def validate(self):
        for field in ('in_channels', 'out_channels', 'kernel_size', 'stride', 'dilation', 'groups'):
            if getattr(self, field) < 1:
                raise ConfigError('must be >= 1, got ' + str(getattr(self, field)), field=field)
        if self.padding < 0:
            raise ConfigError('must be >= 0, got ' + str(self.padding), field='padding')
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise ConfigError('in_channels and out_channels must be divisible by groups', field='groups')
        if self.padding_mode not in ('zeros', 'reflect'):
            raise ConfigError('must be zeros or reflect, got ' + str(self.padding_mode), field='padding_mode')
        if self.transposed and (self.dilation != 1 or self.padding_mode != 'zeros'):
            raise ConfigError('transposed convolutions need dilation=1 and zeros padding', field='transposed')

    @property
    def weight_shape(self):
        if self.transposed:
            return self.in_channels, self.out_channels // self.groups, self.kernel_size
        return self.out_channels, self.in_channels // self.groups, self.kernel_size

    @property
    def extent(self):
        """Effective kernel extent, (kernel - 1) * dilation + 1."""
        return (self.kernel_size - 1) * self.dilation + 1

    def output_length(self, length):
        if self.transposed:
            return kernels.conv_transpose_output_length(length, self.kernel_size, self.stride, self.padding)
        return kernels.conv_output_length(length, self.kernel_size, self.stride, self.dilation, self.padding)


def _check_same_shape(a, b, what):
    if a.shape != b.shape:
        for axis, name in enumerate(('batch', 'channels', 'time')):
            if a.shape[axis] != b.shape[axis]:
                raise DimensionError(what + ' needs identical shapes', axis=name,
                                     expected=a.shape[axis], actual=b.shape[axis])


def _check_conv_inputs(x, w, b, spec):
    if x.shape[1] != spec.in_channels:
        raise DimensionError('input channels do not match the layer', axis='channels',
                             expected=spec.in_channels, actual=x.shape[1])
    if tuple(w.shape) != spec.weight_shape:
        raise DimensionError('weight shape does not match the layer', axis='weight',
                             expected=spec.weight_shape, actual=tuple(w.shape))
    if b is not None and b.size != spec.out_channels:
        raise DimensionError('bias length does not match out_channels', axis='bias',
                             expected=spec.out_channels, actual=b.size)


class Conv1d(Function):
    op_name = 'conv1d'

    def forward(self, x, w, b, spec=None):
        _check_conv_inputs(x, w, b, spec)
        if spec.transposed:
            raise ConfigError('conv1d needs a regular (non-transposed) spec', field='transposed')
        padded = x.shape[2] + 2 * spec.padding
        if padded < spec.extent:
            raise DimensionError('padded input shorter than the kernel extent', axis='time',
                                 expected='>= ' + str(spec.extent), actual=padded)
        out, cols = kernels.conv1d_array(x, w, b, spec.stride, spec.dilation, spec.groups,
                                         spec.padding, spec.padding_mode)
        self.spec = spec
        self.cols = cols
        self.w = w
        self.padded_length = padded
        return out

    def backward(self, grad):
        spec = self.spec
        groups = spec.groups
        batch, out_channels, out_length = grad.shape
        grad_g = grad.reshape(batch, groups, out_channels // groups, out_length)
        cols_g = self.cols.reshape(batch, groups, -1, out_length)
        grad_x = grad_w = grad_b = None
        if self.needs_grad[0]:
            w_g = kernels.grouped_weight(self.w, groups)
            grad_cols = np.matmul(w_g.transpose(0, 2, 1)[None], grad_g)
            grad_cols = grad_cols.reshape(batch, spec.in_channels, spec.kernel_size, out_length)
            grad_padded = kernels.col2im(grad_cols, spec.stride, spec.dilation, self.padded_length)
            grad_x = kernels.pad_backward(grad_padded, spec.padding, spec.padding_mode)
        if self.needs_grad[1]:
            grad_w = np.matmul(grad_g, cols_g.transpose(0, 1, 3, 2)).sum(axis=0).reshape(self.w.shape)
        if len(self.needs_grad) > 2 and self.needs_grad[2]:
            grad_b = grad.sum(axis=(0, 2)).reshape(1, -1, 1)
        return grad_x, grad_w, grad_b


class ConvTranspose1d(Function):
    op_name = 'conv_transpose1d'

    def forward(self, x, w, b, spec=None):
        _check_conv_inputs(x, w, b, spec)
        if not spec.transposed:
            raise ConfigError('conv_transpose1d needs a transposed spec', field='transposed')
        out_length = spec.output_length(x.shape[2])
        if out_length < 0:
            raise DimensionError('transposed convolution output length is negative', axis='time',
                                 expected='>= 0', actual=out_length)
        self.spec = spec
        self.x = x
        self.w = w
        return kernels.conv_transpose1d_array(x, w, b, spec.stride, spec.groups, spec.padding)

    def backward(self, grad):
        spec = self.spec
        groups = spec.groups
        batch, in_channels, in_length = self.x.shape
        grad_full = kernels.pad(grad, spec.padding, 'zeros')
        cols = kernels.im2col(grad_full, spec.kernel_size, spec.stride, 1, in_length)
        cols_g = cols.reshape(batch, groups, -1, in_length)
        w_g = self.w.reshape(groups, in_channels // groups, -1)
        grad_x = grad_w = grad_b = None
        if self.needs_grad[0]:
            grad_x = np.matmul(w_g[None], cols_g).reshape(batch, in_channels, in_length)
        if self.needs_grad[1]:
            x_g = self.x.reshape(batch, groups, in_channels // groups, in_length)
            grad_w = np.matmul(x_g, cols_g.transpose(0, 1, 3, 2)).sum(axis=0).reshape(self.w.shape)
        if len(self.needs_grad) > 2 and self.needs_grad[2]:
            grad_b = grad.sum(axis=(0, 2)).reshape(1, -1, 1)
        return grad_x, grad_w, grad_b


class AvgPool1d(Function):
    """Average pooling; zero padding frames are excluded from each window's count."""
    op_name = 'avg_pool1d'

    def forward(self, x, kernel_size=4, stride=2, padding=0):
        if kernel_size < 1 or stride < 1 or padding < 0:
            raise ConfigError('kernel and stride must be >= 1 and padding >= 0', field='kernel_size')
        padded = x.shape[2] + 2 * padding
        if kernel_size > padded:
            raise DimensionError('pooling kernel longer than the input', axis='time',
                                 expected='>= ' + str(kernel_size), actual=padded)
        out_length = kernels.conv_output_length(padded, kernel_size, stride)
        ones = kernels.pad(np.ones((1, 1, x.shape[2]), dtype=x.dtype), padding)
        counts = kernels.im2col(ones, kernel_size, stride, 1, out_length).sum(axis=2)
        windows = kernels.im2col(kernels.pad(x, padding), kernel_size, stride, 1, out_length)
        self.counts = counts
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.padded_length = padded
        return (windows.sum(axis=2) / counts).astype(float_dtype())

    def backward(self, grad):
        share = (grad / self.counts)[:, :, None, :]
        share = np.broadcast_to(share, share.shape[:2] + (self.kernel_size, share.shape[3]))
        grad_padded = kernels.col2im(np.ascontiguousarray(share), self.stride, 1, self.padded_length)
        return (kernels.pad_backward(grad_padded, self.padding),)


class LeakyReLU(Function):
    op_name = 'leaky_relu'

    def forward(self, x, slope=DEFAULT_SLOPE):
        if not 0 < slope < 1:
            raise ConfigError('slope must lie in (0, 1), got ' + str(slope), field='slope')
        self.slope = np.float32(slope)
        self.positive = x >= 0
        return np.where(self.positive, x, self.slope * x)

    def backward(self, grad):
        return (np.where(self.positive, grad, self.slope * grad),)


class ReLU(Function):
    op_name = 'relu'

    def forward(self, x):
        self.positive = x > 0
        return np.where(self.positive, x, np.float32(0))

    def backward(self, grad):
        return (np.where(self.positive, grad, np.float32(0)),)


class Tanh(Function):
    op_name = 'tanh'

    def forward(self, x):
        self.y = np.tanh(x)
        return self.y

    def backward(self, grad):
        return (grad * (1 - self.y * self.y),)


class Add(Function):
    op_name = 'add'

    def forward(self, a, b):
        _check_same_shape(a, b, 'elementwise_add')
        return a + b

    def backward(self, grad):
        return grad, grad


class Affine(Function):
    """``scale * x + shift`` with scalar coefficients."""
    op_name = 'affine'

    def forward(self, x, scale=1.0, shift=0.0):
        self.scale = np.float32(scale)
        return self.scale * x + np.float32(shift)

    def backward(self, grad):
        return (self.scale * grad,)


class Mean(Function):
    op_name = 'mean'

    def forward(self, x):
        self.shape = x.shape
        return np.full((1, 1, 1), x.mean(dtype=np.float64), dtype=float_dtype())

    def backward(self, grad):
        return (np.full(self.shape, grad.reshape(-1)[0] / np.prod(self.shape), dtype=grad.dtype),)


class Sum(Function):
    op_name = 'sum'

    def forward(self, x):
        self.shape = x.shape
        return np.full((1, 1, 1), x.sum(dtype=np.float64), dtype=float_dtype())

    def backward(self, grad):
        return (np.full(self.shape, grad.reshape(-1)[0], dtype=grad.dtype),)


class L1Mean(Function):
    op_name = 'l1_mean'

    def forward(self, a, b):
        _check_same_shape(a, b, 'l1_mean')
        diff = a - b
        self.sign = np.sign(diff)
        self.count = diff.size
        return np.full((1, 1, 1), np.abs(diff).mean(dtype=np.float64), dtype=float_dtype())

    def backward(self, grad):
        share = self.sign * (grad.reshape(-1)[0] / self.count)
        return share.astype(grad.dtype), (-share).astype(grad.dtype)


class WeightNorm(Function):
    """
    ``w = g * v / ||v||`` with the norm taken per leading-axis slice of ``v``.
    """
    op_name = 'weight_norm'

    def forward(self, v, g):
        if g.size != v.shape[0]:
            raise DimensionError('g needs one entry per output channel of v', axis='channels',
                                 expected=v.shape[0], actual=g.size)
        norm = np.sqrt(np.square(v, dtype=np.float64).sum(axis=(1, 2), keepdims=True))
        if np.any(norm == 0):
            channel = int(np.flatnonzero(norm.reshape(-1) == 0)[0])
            raise DimensionError('weight norm of a zero vector is undefined', axis='channel',
                                 expected='nonzero norm', actual=channel)
        self.v = v
        self.dtype = v.dtype
        self.g = g.reshape(-1, 1, 1).astype(np.float64)
        self.norm = norm
        return (self.g * v / norm).astype(float_dtype())

    def backward(self, grad):
        v = self.v.astype(np.float64)
        grad = grad.astype(np.float64)
        projection = (grad * v).sum(axis=(1, 2), keepdims=True)
        grad_g = projection / self.norm
        grad_v = self.g / self.norm * grad - self.g * projection / self.norm ** 3 * v
        return grad_v.astype(self.dtype), grad_g.astype(self.dtype)


def conv1d(x, weight, bias, spec, label=None):
    """
    Cross-correlation of a [B, C_in, T] tensor with a (possibly grouped, dilated, strided) kernel.

    Padding is applied here according to ``spec.padding_mode``; groups partition
    channels contiguously.
    :rtype: Tensor
    """
    if bias is None:
        return Conv1d.apply(x, weight, label=label, spec=spec, b=None)
    return Conv1d.apply(x, weight, bias, label=label, spec=spec)


def conv_transpose1d(x, weight, bias, spec, label=None):
    """
    Transposed convolution; output time is ``(T - 1) * stride - 2 * padding + kernel``.
    :rtype: Tensor
    """
    if bias is None:
        return ConvTranspose1d.apply(x, weight, label=label, spec=spec, b=None)
    return ConvTranspose1d.apply(x, weight, bias, label=label, spec=spec)


def avg_pool1d(x, kernel_size, stride, padding=0, label=None):
    return AvgPool1d.apply(x, label=label, kernel_size=kernel_size, stride=stride, padding=padding)


def leaky_relu(x, slope=DEFAULT_SLOPE, label=None):
    return LeakyReLU.apply(x, label=label, slope=slope)


def relu(x, label=None):
    return ReLU.apply(x, label=label)


def tanh(x, label=None):
    return Tanh.apply(x, label=label)


def elementwise_add(a, b, label=None):
    return Add.apply(a, b, label=label)


def affine(x, scale=1.0, shift=0.0, label=None):
    return Affine.apply(x, label=label, scale=scale, shift=shift)


def mean(x, label=None):
    return Mean.apply(x, label=label)


def tensor_sum(x, label=None):
    return Sum.apply(x, label=label)


def l1_mean(a, b, label=None):
    """
    Mean absolute difference of two same-shaped tensors, as a [1, 1, 1] scalar.
    """
    return L1Mean.apply(a, b, label=label)


def weight_norm_forward(v, g, label=None):
    return WeightNorm.apply(v, g, label=label)


def add_all(tensors, label=None):
    """Left fold of :func:`elementwise_add` over a non-empty sequence."""
    tensors = list(tensors)
    if not tensors:
        raise DimensionError('add_all needs at least one tensor', axis='count', expected='>= 1', actual=0)
    total = tensors[0]
    for tensor in tensors[1:]:
        total = elementwise_add(total, tensor, label=label)
    return total


class Crop(Function):
    """Keep ``length`` frames starting at ``start`` along time."""
    op_name = 'crop'

    def forward(self, x, start=0, length=None):
        if start < 0 or length is None or start + length > x.shape[2]:
            raise DimensionError('crop window outside the input', axis='time',
                                 expected='<= ' + str(x.shape[2]), actual=start + (length or 0))
        self.shape = x.shape
        self.start = start
        return np.ascontiguousarray(x[:, :, start:start + length])

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=grad.dtype)
        out[:, :, self.start:self.start + grad.shape[2]] = grad
        return (out,)


def crop_time(x, start, length, label=None):
    return Crop.apply(x, label=label, start=start, length=length)
