"""
Adam with bias correction, applied in place to leaf tensors.

Update rule::

    m_t = beta1 * m_{t-1} + (1 - beta1) * g
    v_t = beta2 * v_{t-1} + (1 - beta2) * g^2
    param -= lr * (m_t / (1 - beta1^t)) / (sqrt(v_t / (1 - beta2^t)) + eps)
"""
import numpy as np

from MelGAN.Utils.errors import GraphError

ADAM_LR = 1e-4
ADAM_BETA1 = 0.5
ADAM_BETA2 = 0.9
ADAM_EPS = 1e-8


class AdamState:
    """Moment buffers of one parameter group plus its update counter."""

    def __init__(self):
        self.t = 0
        self.m = {}
        self.v = {}

    def moments(self, name, shape):
        if name not in self.m:
            self.m[name] = np.zeros(shape, dtype=np.float32)
            self.v[name] = np.zeros(shape, dtype=np.float32)
        return self.m[name], self.v[name]

    def named_buffers(self):
        for name in sorted(self.m):
            yield 'm.' + name, self.m[name]
            yield 'v.' + name, self.v[name]


def adam_step(params, state, lr=ADAM_LR, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS, grads=None):
    """
    One bias-corrected Adam update.

    :param params: ordered ``(name, Tensor)`` pairs
    :type params: list
    :param state: moment buffers of this parameter group; ``state.t`` is incremented
    :type state: AdamState
    :param grads: optional ``name -> array`` overriding ``Tensor.grad``
    :type grads: dict
    """
    params = list(params)
    resolved = []
    for name, tensor in params:
        grad = tensor.grad if grads is None else grads.get(name)
        if grad is None:
            raise GraphError('missing gradient for parameter ' + name)
        resolved.append((name, tensor, grad))
    state.t += 1
    correction1 = 1 - beta1 ** state.t
    correction2 = 1 - beta2 ** state.t
    for name, tensor, grad in resolved:
        m, v = state.moments(name, tensor.shape)
        m *= beta1
        m += (1 - beta1) * grad
        v *= beta2
        v += (1 - beta2) * np.square(grad)
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(np.float32)
