"""
Array-level kernels shared by the differentiable ops.

Every function here works on plain ``np.ndarray`` values laid out as
[batch, channels, time]; none of them touch the autodiff graph.
"""
import numpy as np
from numpy.lib.stride_tricks import as_strided

from MelGAN.Utils.errors import DimensionError


def conv_output_length(length, kernel_size, stride=1, dilation=1, padding=0):
    """
    Output length of a strided, dilated, padded cross-correlation.

    .. math:: \\lfloor (T + 2p - d(k - 1) - 1) / s \\rfloor + 1
    """
    span = (length + 2 * padding - dilation * (kernel_size - 1) - 1)
    if span < 0:
        return 0
    return span // stride + 1


def conv_transpose_output_length(length, kernel_size, stride=1, padding=0):
    return (length - 1) * stride - 2 * padding + kernel_size


def pad(x, padding, mode='zeros'):
    if padding == 0:
        return x
    if mode == 'reflect':
        if padding > x.shape[2] - 1:
            raise DimensionError('reflect padding must be smaller than the input length',
                                 axis='time', expected='> ' + str(padding), actual=x.shape[2])
        return np.pad(x, ((0, 0), (0, 0), (padding, padding)), mode='reflect')
    if mode == 'zeros':
        return np.pad(x, ((0, 0), (0, 0), (padding, padding)), mode='constant')
    raise ValueError('Unknown padding mode: ' + str(mode))


def pad_backward(grad_padded, padding, mode='zeros'):
    """
    Fold the gradient of a padded signal back onto the unpadded signal.
    Reflected frames send their gradient to the sample they mirror.
    """
    if padding == 0:
        return grad_padded
    length = grad_padded.shape[2] - 2 * padding
    grad = grad_padded[:, :, padding:padding + length].copy()
    if mode == 'reflect':
        grad[:, :, 1:padding + 1] += grad_padded[:, :, :padding][:, :, ::-1]
        grad[:, :, length - 1 - padding:length - 1] += grad_padded[:, :, padding + length:][:, :, ::-1]
    return grad


def im2col(x, kernel_size, stride, dilation, out_length):
    """
    Gather the kernel taps of every output position.

    :param x: padded input, [B, C, T]
    :type x: np.ndarray
    :return: contiguous columns, [B, C, K, out_length]; ``cols[b, c, k, t] = x[b, c, t*stride + k*dilation]``
    :rtype: np.ndarray
    """
    x = np.ascontiguousarray(x)
    batch, channels, _ = x.shape
    s_b, s_c, s_t = x.strides
    view = as_strided(x,
                      shape=(batch, channels, kernel_size, out_length),
                      strides=(s_b, s_c, dilation * s_t, stride * s_t),
                      writeable=False)
    return np.ascontiguousarray(view)


def col2im(cols, stride, dilation, length):
    """
    Scatter-accumulate columns back onto a signal; the adjoint of :func:`im2col`.

    :param cols: [B, C, K, T_cols]
    :param length: time length of the reconstructed signal
    :return: [B, C, length]
    """
    batch, channels, kernel_size, n_cols = cols.shape
    out = np.zeros((batch, channels, length), dtype=cols.dtype)
    if n_cols == 0:
        return out
    last = stride * (n_cols - 1) + 1
    for k in range(kernel_size):
        start = k * dilation
        out[:, :, start:start + last:stride] += cols[:, :, k, :]
    return out


def grouped_weight(w, groups):
    """[O, I/G, K] -> [G, O/G, I/G*K]"""
    out_channels = w.shape[0]
    return w.reshape(groups, out_channels // groups, -1)


def conv1d_array(x, w, b, stride=1, dilation=1, groups=1, padding=0, padding_mode='zeros'):
    """
    Forward cross-correlation returning the output and the gathered columns.
    """
    xp = pad(x, padding, padding_mode)
    batch, in_channels, padded = xp.shape
    kernel_size = w.shape[2]
    out_length = conv_output_length(padded, kernel_size, stride, dilation)
    cols = im2col(xp, kernel_size, stride, dilation, out_length)
    cols_g = cols.reshape(batch, groups, -1, out_length)
    out = np.matmul(grouped_weight(w, groups)[None], cols_g)
    out = out.reshape(batch, w.shape[0], out_length)
    if b is not None:
        out = out + b.reshape(1, -1, 1)
    return out.astype(np.result_type(x, w), copy=False), cols


def conv_transpose1d_array(x, w, b, stride=1, groups=1, padding=0):
    """
    Transposed convolution: every input frame scatters a scaled kernel
    ``stride`` frames apart, then ``padding`` frames are trimmed each side.
    """
    batch, in_channels, in_length = x.shape
    kernel_size = w.shape[2]
    out_channels = w.shape[1] * groups
    full = conv_transpose_output_length(in_length, kernel_size, stride, 0)
    x_g = x.reshape(batch, groups, in_channels // groups, in_length)
    w_g = w.reshape(groups, in_channels // groups, -1)
    prod = np.matmul(w_g.transpose(0, 2, 1)[None], x_g)
    prod = prod.reshape(batch, out_channels, kernel_size, in_length)
    out = col2im(prod, stride, 1, full)
    out = out[:, :, padding:full - padding]
    if b is not None:
        out = out + b.reshape(1, -1, 1)
    return np.ascontiguousarray(out, dtype=np.result_type(x, w))
