"""
Brute-force references for the tensor ops.

Every loop here accumulates in float64 and follows the textbook definition
directly; the test suite compares the vectorized ops against them.
"""
import numpy as np

from MelGAN.Algorithm.tensor import Graph, Tensor, backward, precision


def _pad64(x, padding, mode):
    x = np.asarray(x, dtype=np.float64)
    if padding == 0:
        return x
    np_mode = 'reflect' if mode == 'reflect' else 'constant'
    return np.pad(x, ((0, 0), (0, 0), (padding, padding)), mode=np_mode)


def naive_conv1d(x, w, b, spec):
    xp = _pad64(x, spec.padding, spec.padding_mode)
    w = np.asarray(w, dtype=np.float64)
    batch, _, length = xp.shape
    out_length = (length - (spec.kernel_size - 1) * spec.dilation - 1) // spec.stride + 1
    in_per_group = spec.in_channels // spec.groups
    out_per_group = spec.out_channels // spec.groups
    out = np.zeros((batch, spec.out_channels, out_length))
    for n in range(batch):
        for o in range(spec.out_channels):
            group = o // out_per_group
            for t in range(out_length):
                acc = 0.0 if b is None else float(np.asarray(b).reshape(-1)[o])
                for i in range(in_per_group):
                    channel = group * in_per_group + i
                    for k in range(spec.kernel_size):
                        acc += w[o, i, k] * xp[n, channel, t * spec.stride + k * spec.dilation]
                out[n, o, t] = acc
    return out


def naive_conv_transpose1d(x, w, b, spec):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    batch, _, length = x.shape
    full = (length - 1) * spec.stride + spec.kernel_size
    in_per_group = spec.in_channels // spec.groups
    out_per_group = spec.out_channels // spec.groups
    out = np.zeros((batch, spec.out_channels, full))
    for n in range(batch):
        for c in range(spec.in_channels):
            group = c // in_per_group
            for j in range(out_per_group):
                o = group * out_per_group + j
                for t in range(length):
                    for k in range(spec.kernel_size):
                        out[n, o, t * spec.stride + k] += x[n, c, t] * w[c, j, k]
    out = out[:, :, spec.padding:full - spec.padding]
    if b is not None:
        out = out + np.asarray(b, dtype=np.float64).reshape(1, -1, 1)
    return out


def naive_avg_pool1d(x, kernel_size, stride, padding=0):
    x = np.asarray(x, dtype=np.float64)
    batch, channels, length = x.shape
    out_length = (length + 2 * padding - kernel_size) // stride + 1
    out = np.zeros((batch, channels, out_length))
    for t in range(out_length):
        start = t * stride - padding
        lo = max(start, 0)
        hi = min(start + kernel_size, length)
        out[:, :, t] = x[:, :, lo:hi].sum(axis=2) / (hi - lo)
    return out


def finite_difference_grad(fn, tensors, h=1e-3):
    """
    Central differences of a scalar function of several tensors.

    ``fn`` receives fresh leaf tensors built from the perturbed arrays and must
    return a scalar Tensor. Each evaluation runs under ``precision(np.float64)``.
    :return: one float64 gradient array per input
    """
    bases = [np.asarray(t.data, dtype=np.float64) for t in tensors]
    grads = []
    for index, base in enumerate(bases):
        grad = np.zeros_like(base)
        flat = grad.reshape(-1)
        for position in range(base.size):
            values = []
            for direction in (1.0, -1.0):
                perturbed = base.copy().reshape(-1)
                perturbed[position] += direction * h
                arrays = [b if i != index else perturbed.reshape(base.shape) for i, b in enumerate(bases)]
                with precision(np.float64):
                    values.append(fn(*[Tensor(a) for a in arrays]).item())
            flat[position] = (values[0] - values[1]) / (2 * h)
        grads.append(grad)
    return grads


def analytic_grad(fn, tensors):
    leaves = [Tensor(t.data, requires_grad=True) for t in tensors]
    with Graph() as graph:
        root = fn(*leaves)
    backward(root, graph)
    return [np.zeros(leaf.shape) if leaf.grad is None else leaf.grad.astype(np.float64) for leaf in leaves]


def relative_error(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-8)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)
