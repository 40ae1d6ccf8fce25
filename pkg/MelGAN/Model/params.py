import logging
from collections import OrderedDict

import numpy as np

from MelGAN.Algorithm.ops import affine, conv1d, conv_transpose1d, weight_norm_forward
from MelGAN.Algorithm.tensor import Tensor
from MelGAN.Utils.errors import CheckpointError

logger = logging.getLogger(__name__)

WEIGHT = 'weight'
SPECTRAL = 'spectral'
PLAIN = 'plain'


def channel_norm(v):
    """L2 norm of every leading-axis slice, shaped [O, 1, 1]."""
    return np.sqrt(np.square(v, dtype=np.float64).sum(axis=(1, 2), keepdims=True))


class LayerParams:
    """
    Learned tensors of one convolution layer.

    ``kind`` selects how the effective weight is formed:
     - ``weight``: ``w = g * v / ||v||`` (weight normalization)
     - ``spectral``: ``w = v / sigma(v)`` with sigma from one power iteration
     - ``plain``: ``w = v``
    """

    def __init__(self, spec, v, g, bias, kind=WEIGHT, u=None):
        self.spec = spec
        self.kind = kind
        self.v = v
        self.g = g
        self.bias = bias
        self.u = u

    def named_tensors(self):
        yield 'v', self.v
        if self.g is not None:
            yield 'g', self.g
        yield 'bias', self.bias

    def count(self):
        return sum(t.size for _, t in self.named_tensors())

    def _sigma(self, update):
        matrix = self.v.data.reshape(self.v.shape[0], -1).astype(np.float64)
        u = self.u.data.reshape(-1).astype(np.float64)
        right = matrix.T @ u
        right /= max(np.linalg.norm(right), 1e-12)
        left = matrix @ right
        left /= max(np.linalg.norm(left), 1e-12)
        if update:
            self.u.data = left.reshape(self.u.shape)
        return float(left @ matrix @ right)

    def weight(self, label=None, update_power=False):
        """
        Effective weight as a graph tensor; gradients reach ``v`` (and ``g``).
        The spectral sigma is treated as a constant in the backward pass.
        """
        if self.kind == WEIGHT:
            return weight_norm_forward(self.v, self.g, label=label)
        if self.kind == SPECTRAL:
            return affine(self.v, scale=1.0 / self._sigma(update_power), label=label)
        return self.v

    def __call__(self, x, label=None, update_power=False):
        """Run the layer on a tensor, building the effective weight on the active graph."""
        weight = self.weight(label=label, update_power=update_power)
        if self.spec.transposed:
            return conv_transpose1d(x, weight, self.bias, self.spec, label=label)
        return conv1d(x, weight, self.bias, self.spec, label=label)

    def folded_weight(self):
        """Effective weight as a plain float32 array, outside any graph."""
        if self.kind == WEIGHT:
            return (self.g.data.astype(np.float64) * self.v.data / channel_norm(self.v.data)).astype(np.float32)
        if self.kind == SPECTRAL:
            return (self.v.data / self._sigma(False)).astype(np.float32)
        return self.v.data.copy()


def init_layer(spec, rng, std=0.02, kind=WEIGHT):
    """
    Draw ``v ~ N(0, std)``, set ``g = ||v||`` so the initial weight equals ``v``, zero the bias.
    """
    v = rng.normal(0.0, std, size=spec.weight_shape).astype(np.float32)
    bias = np.zeros((1, spec.out_channels, 1), dtype=np.float32)
    g = u = None
    if kind == WEIGHT:
        g = Tensor(channel_norm(v).astype(np.float32), requires_grad=True)
    elif kind == SPECTRAL:
        u0 = rng.normal(0.0, 1.0, size=spec.weight_shape[0])
        u = Tensor((u0 / np.linalg.norm(u0)).reshape(1, 1, -1))
    return LayerParams(spec, Tensor(v, requires_grad=True), g, Tensor(bias, requires_grad=True), kind, u)


class ModelParams:
    """
    Ordered ``name -> LayerParams`` map of one network together with the config it was built from.
    """

    def __init__(self, config, layers=None, prefix=''):
        self.config = config
        self.layers = OrderedDict() if layers is None else OrderedDict(layers)
        self.prefix = prefix
        self.training = False

    def __getitem__(self, name):
        return self.layers[name]

    def __contains__(self, name):
        return name in self.layers

    def __iter__(self):
        return iter(self.layers.items())

    def __len__(self):
        return len(self.layers)

    def add(self, name, layer):
        if name in self.layers:
            raise CheckpointError('duplicate layer name ' + name, reason='name collision')
        self.layers[name] = layer

    def named_parameters(self):
        """Learned tensors as ``(qualified name, Tensor)`` pairs in layer order."""
        out = []
        for layer_name, layer in self.layers.items():
            for tensor_name, tensor in layer.named_tensors():
                out.append((self.prefix + layer_name + '.' + tensor_name, tensor))
        return out

    def named_buffers(self):
        return [(self.prefix + name + '.u', layer.u) for name, layer in self.layers.items() if layer.u is not None]

    def named_tensors(self):
        return self.named_parameters() + self.named_buffers()

    def parameters(self):
        return [t for _, t in self.named_parameters()]

    def zero_grad(self):
        for tensor in self.parameters():
            tensor.zero_grad()

    def snapshot(self):
        return {name: t.data.copy() for name, t in self.named_tensors()}


def count_parameters(params):
    """
    Sum of v, g and bias element counts over every layer.
    :param params: a built network
    :type params: ModelParams
    :rtype: int
    """
    return int(sum(layer.count() for _, layer in params))
