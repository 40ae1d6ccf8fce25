import logging
from contextlib import contextmanager

import numpy as np

from MelGAN.Utils.errors import DimensionError, GraphError, NonFiniteError

logger = logging.getLogger(__name__)

_PRECISION = [np.float32]


def float_dtype():
    """Floating dtype new tensors are stored in; float32 unless inside :func:`precision`."""
    return _PRECISION[-1]


@contextmanager
def precision(dtype):
    """
    Store every tensor built inside the block, op outputs included, as ``dtype``.

    Used with ``np.float64`` to evaluate a float32 model as a high-precision reference.
    """
    _PRECISION.append(np.dtype(dtype).type)
    try:
        yield
    finally:
        _PRECISION.pop()


class Tensor:
    """
    Rank-3 float32 array laid out as [batch, channels, time] with an optional gradient buffer;
    float64 inside :func:`precision`.

    Leaves are tensors created directly; non-leaves are produced by a :class:`Function`
    recorded on a :class:`Graph` and remember the node that made them.
    """

    def __init__(self, data, requires_grad=False, name=None):
        array = np.ascontiguousarray(data, dtype=float_dtype())
        if array.ndim != 3:
            raise DimensionError('Tensor must be rank-3 [batch, channels, time]',
                                 axis='rank', expected=3, actual=array.ndim)
        if array.shape[0] < 1:
            raise DimensionError('batch must be >= 1', axis='batch', expected='>= 1', actual=array.shape[0])
        if array.shape[1] < 1:
            raise DimensionError('channels must be >= 1', axis='channels', expected='>= 1',
                                 actual=array.shape[1])
        self._data = array
        self._shape = array.shape
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.node = None

    @property
    def data(self):
        return self._data

    @data.setter
    def data(self, value):
        array = np.ascontiguousarray(value, dtype=float_dtype())
        if array.shape != self._shape:
            raise DimensionError('Tensor shape is immutable', axis='shape', expected=self._shape,
                                 actual=array.shape)
        self._data = array

    @property
    def shape(self):
        return self._shape

    @property
    def batch(self):
        return self._shape[0]

    @property
    def channels(self):
        return self._shape[1]

    @property
    def time(self):
        return self._shape[2]

    @property
    def size(self):
        return self._data.size

    def is_scalar(self):
        return self.size == 1

    def item(self):
        if not self.is_scalar():
            raise DimensionError('item() needs a scalar tensor', axis='size', expected=1, actual=self.size)
        return float(self._data.reshape(-1)[0])

    def numpy(self):
        return self._data

    def detach(self):
        return Tensor(self._data, requires_grad=False, name=self.name)

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, grad):
        grad = np.asarray(grad, dtype=self._data.dtype).reshape(self._shape)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def __repr__(self):
        label = '' if self.name is None else ' name=' + self.name
        return 'Tensor(shape=' + str(self._shape) + ', requires_grad=' + str(self.requires_grad) + label + ')'

    @classmethod
    def zeros(cls, shape, requires_grad=False, name=None):
        return cls(np.zeros(shape, dtype=float_dtype()), requires_grad=requires_grad, name=name)

    @classmethod
    def scalar(cls, value, requires_grad=False, name=None):
        return cls(np.full((1, 1, 1), value, dtype=float_dtype()), requires_grad=requires_grad, name=name)


class Graph:
    """
    Ordered record of the operations executed while the graph is active.

    Usage::

        with Graph() as graph:
            loss = l1_mean(a, b)
        backward(loss, graph)
    """
    _active = []

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        Graph._active.append(self)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        Graph._active.remove(self)
        return False

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, tensor):
        return tensor.node is not None and tensor.node.graph is self

    @classmethod
    def current(cls):
        return cls._active[-1] if cls._active else None

    def record(self, node):
        node.graph = self
        node.index = len(self.nodes)
        self.nodes.append(node)

    def first_non_finite(self):
        """
        Name of the first recorded output holding NaN or Inf, in execution order.
        :return: the node label, or None when every output is finite
        """
        for node in self.nodes:
            if not np.all(np.isfinite(node.output.data)):
                return node.label
        return None

    def check_finite(self, *tensors):
        for tensor in tensors:
            if not np.all(np.isfinite(tensor.data)):
                culprit = self.first_non_finite() or tensor.name or 'input'
                raise NonFiniteError('non-finite value first produced by ' + culprit, tensor=culprit)


@contextmanager
def no_graph():
    """Run the block with recording suspended; outputs are constants."""
    saved = list(Graph._active)
    Graph._active.clear()
    try:
        yield
    finally:
        Graph._active.extend(saved)


@contextmanager
def frozen(tensors):
    """Temporarily stop gradient accumulation into the given leaves."""
    tensors = list(tensors)
    flags = [t.requires_grad for t in tensors]
    for t in tensors:
        t.requires_grad = False
    try:
        yield
    finally:
        for t, flag in zip(tensors, flags):
            t.requires_grad = flag


class Function:
    """
    Base of the differentiable operations.

    Subclasses implement ``forward`` on arrays and ``backward`` returning one
    gradient array (or None) per input tensor.
    """
    op_name = 'function'

    def __init__(self, *inputs):
        self.inputs = inputs
        self.needs_grad = [t.requires_grad for t in inputs]
        self.output = None
        self.graph = None
        self.index = -1
        self.label = self.op_name

    def forward(self, *arrays, **kwargs):
        raise NotImplementedError('Forward pass not implemented for ' + self.op_name)

    def backward(self, grad):
        raise NotImplementedError('Backward pass not implemented for ' + self.op_name)

    @classmethod
    def apply(cls, *inputs, label=None, **kwargs):
        fn = cls(*inputs)
        if label is not None:
            fn.label = cls.op_name + ':' + label
        out = Tensor(fn.forward(*(t.data for t in inputs), **kwargs), name=fn.label)
        graph = Graph.current()
        if graph is not None and any(fn.needs_grad):
            out.requires_grad = True
            out.node = fn
            fn.output = out
            graph.record(fn)
        return out


def backward(root, graph=None):
    """
    Reverse-mode sweep from a scalar root.

    Every node of the graph is visited at most once, newest first. Leaf
    gradients are accumulated into ``Tensor.grad``; call ``zero_grad`` between
    optimizer steps.

    :param root: scalar tensor produced while ``graph`` was active
    :type root: Tensor
    :param graph: the graph that recorded ``root``; defaults to the root's own graph
    :type graph: Graph
    """
    if not isinstance(root, Tensor) or not root.is_scalar():
        raise GraphError('backward root must be a scalar tensor, got ' + repr(root))
    if root.node is None:
        raise GraphError('backward root is detached: it was not produced inside a graph')
    if graph is None:
        graph = root.node.graph
    if root.node.graph is not graph:
        raise GraphError('backward root was recorded on a different graph')
    pending = {id(root): np.ones(root.shape, dtype=root.data.dtype)}
    for node in reversed(graph.nodes[:root.node.index + 1]):
        grad = pending.pop(id(node.output), None)
        if grad is None:
            continue
        input_grads = node.backward(grad)
        for tensor, needs, input_grad in zip(node.inputs, node.needs_grad, input_grads):
            if not needs or input_grad is None:
                continue
            if tensor.node is None or tensor.node.graph is not graph:
                if tensor.requires_grad:
                    tensor.accumulate_grad(input_grad)
                continue
            key = id(tensor)
            if key in pending:
                pending[key] = pending[key] + input_grad
            else:
                pending[key] = input_grad
    logger.debug('backward visited %d nodes', root.node.index + 1)
