import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit
from threadpoolctl import threadpool_limits

from MelGAN.IO.read_wav import AudioClip
from MelGAN.Model.generator import CONV_POST, CONV_PRE, min_frames, resblock_name, upsample_name
from MelGAN.Utils.errors import CapacityError, DimensionError
from MelGAN.Utils.utils import resolve_threads

logger = logging.getLogger(__name__)


@njit
def leaky_relu_inplace(x, slope):
    rows, cols = x.shape
    for i in range(rows):
        for j in range(cols):
            if x[i, j] < 0:
                x[i, j] *= slope


@njit
def leaky_relu_into(src, dst, slope):
    rows, cols = src.shape
    for i in range(rows):
        for j in range(cols):
            v = src[i, j]
            dst[i, j] = v if v >= 0 else v * slope


@njit
def reflect_pad_into(src, dst, padding):
    channels, length = src.shape
    for c in range(channels):
        for j in range(length):
            dst[c, padding + j] = src[c, j]
        for j in range(padding):
            dst[c, padding - 1 - j] = src[c, j + 1]
            dst[c, padding + length + j] = src[c, length - 2 - j]


@njit
def im2col_into(xp, kernel_size, dilation, out_length, cols):
    channels = xp.shape[0]
    for c in range(channels):
        for k in range(kernel_size):
            row = c * kernel_size + k
            offset = k * dilation
            for t in range(out_length):
                cols[row, t] = xp[c, t + offset]


@njit
def col2im_into(prod, kernel_size, stride, padding, bias, out):
    out_channels, out_length = out.shape
    in_length = prod.shape[1]
    for o in range(out_channels):
        for t in range(out_length):
            out[o, t] = bias[o]
        for k in range(kernel_size):
            row = o * kernel_size + k
            for i in range(in_length):
                t = i * stride + k - padding
                if 0 <= t < out_length:
                    out[o, t] += prod[row, i]


ROW_BLOCK = 32


def row_blocks(rows, block=ROW_BLOCK):
    """Fixed output-channel blocks; the split never depends on the worker count."""
    return [(start, min(start + block, rows)) for start in range(0, rows, block)]


class _Conv:
    """One folded convolution: 2-D weight matrix, bias vector, its geometry and output-channel blocks."""

    def __init__(self, layer):
        spec = layer.spec
        w = layer.folded_weight()
        self.spec = spec
        self.bias = np.ascontiguousarray(layer.bias.data.reshape(-1))
        if spec.transposed:
            # [C_in, O, K] -> [O * K, C_in]
            self.matrix = np.ascontiguousarray(w.transpose(1, 2, 0).reshape(-1, spec.in_channels))
        else:
            self.matrix = np.ascontiguousarray(w.reshape(spec.out_channels, -1))
        self.folded = w
        self.blocks = row_blocks(spec.out_channels)


class Scratch:
    """Flat buffers sized for the largest layer at ``max_frames``."""

    def __init__(self, sizes):
        self.buffers = {name: np.empty(size, dtype=np.float32) for name, size in sizes.items()}

    def view(self, name, rows, cols):
        return self.buffers[name][:rows * cols].reshape(rows, cols)

    @property
    def nbytes(self):
        return sum(buffer.nbytes for buffer in self.buffers.values())


class _Workers:
    """Runs one task per output-channel block, inline or on a thread pool."""

    def __init__(self, pool=None):
        self.pool = pool

    def each(self, task, blocks):
        if self.pool is None or len(blocks) == 1:
            for block in blocks:
                task(block)
        else:
            list(self.pool.map(task, blocks))


class CompiledGenerator:
    """
    Autodiff-free generator with weight normalisation folded into plain weights.

    Usage::

        gen = CompiledGenerator.compile(params, max_frames=512)
        clip = gen.synthesize(mel)

    Each convolution's output channels are cut into fixed blocks of ``ROW_BLOCK``
    rows; with several threads the blocks of one layer run concurrently. Every
    output element comes from the same block product whatever the thread count,
    so results are bit-identical across thread counts.
    """

    def __init__(self, config, convs, max_frames, sample_rate=22050):
        self.config = config
        self.convs = convs
        self.max_frames = int(max_frames)
        self.sample_rate = sample_rate
        self.scratch = Scratch(self._buffer_sizes())

    @classmethod
    def compile(cls, params, max_frames, sample_rate=22050):
        """
        :param params: generator parameters
        :type params: ModelParams
        :param max_frames: largest mel frame count accepted by :meth:`synthesize`
        :type max_frames: int
        :rtype: CompiledGenerator
        """
        if max_frames < 1:
            raise CapacityError('max_frames must be >= 1', limit=max_frames, requested=max_frames)
        convs = {name: _Conv(layer) for name, layer in params}
        logger.debug('Compiled %d layers for up to %d frames', len(convs), max_frames)
        return cls(params.config, convs, max_frames, sample_rate)

    def _buffer_sizes(self):
        cfg = self.config
        frames = max(self.max_frames, min_frames(cfg))
        sizes = {'h0': 0, 'h1': 0, 'y': 0, 'y2': 0, 'padded': 0, 'cols': 0, 'prod': 0}

        def grow(name, size):
            sizes[name] = max(sizes[name], size)

        length = frames
        grow('padded', cfg.mel_channels * (length + 2 * (cfg.edge_kernel // 2)))
        grow('cols', cfg.mel_channels * cfg.edge_kernel * length)
        grow('h0', cfg.base_width * length)
        for stage, ratio in enumerate(cfg.upsample_ratios):
            up = self.convs[upsample_name(stage)].spec
            grow('prod', up.out_channels * up.kernel_size * length)
            length *= ratio
            width = up.out_channels
            for name in ('h0', 'h1', 'y', 'y2'):
                grow(name, width * length)
            for d in cfg.resblock_dilations:
                grow('padded', width * (length + 2 * (d * (cfg.resblock_kernel - 1) // 2)))
                grow('cols', width * cfg.resblock_kernel * length)
        post = self.convs[CONV_POST].spec
        grow('padded', post.in_channels * (length + 2 * (cfg.edge_kernel // 2)))
        grow('cols', post.in_channels * cfg.edge_kernel * length)
        grow('y', length)
        return sizes

    def _conv(self, workers, conv, x, out_name):
        """Regular convolution of x [C_in, T] into buffer ``out_name``."""
        scratch = self.scratch
        spec = conv.spec
        length = x.shape[1]
        if spec.kernel_size == 1 and spec.padding == 0:
            cols = x
        else:
            padded = scratch.view('padded', spec.in_channels, length + 2 * spec.padding)
            if spec.padding_mode == 'reflect':
                if spec.padding > length - 1:
                    raise DimensionError('reflect padding must be smaller than the input length', axis='time',
                                         expected='> ' + str(spec.padding), actual=length)
                reflect_pad_into(x, padded, spec.padding)
            else:
                padded[:] = 0
                padded[:, spec.padding:spec.padding + length] = x
            out_length = padded.shape[1] - spec.extent + 1
            cols = scratch.view('cols', spec.in_channels * spec.kernel_size, out_length)
            im2col_into(padded, spec.kernel_size, spec.dilation, out_length, cols)
        out = scratch.view(out_name, spec.out_channels, cols.shape[1])

        def rows(block):
            start, stop = block
            np.matmul(conv.matrix[start:stop], cols, out=out[start:stop])
            np.add(out[start:stop], conv.bias[start:stop, None], out=out[start:stop])

        workers.each(rows, conv.blocks)
        return out

    def _conv_transpose(self, workers, conv, x, out_name):
        spec = conv.spec
        k = spec.kernel_size
        prod = self.scratch.view('prod', spec.out_channels * k, x.shape[1])
        out = self.scratch.view(out_name, spec.out_channels, spec.output_length(x.shape[1]))

        def rows(block):
            start, stop = block
            np.matmul(conv.matrix[start * k:stop * k], x, out=prod[start * k:stop * k])
            col2im_into(prod[start * k:stop * k], k, spec.stride, spec.padding, conv.bias[start:stop],
                        out[start:stop])

        workers.each(rows, conv.blocks)
        return out

    def _forward_one(self, workers, mel):
        """mel [n_mels, T'] -> waveform view [hop * T']"""
        cfg = self.config
        scratch = self.scratch
        slope = np.float32(cfg.leaky_slope)
        h = self._conv(workers, self.convs[CONV_PRE], mel, 'h0')
        current, spare = 'h0', 'h1'
        for stage in range(len(cfg.upsample_ratios)):
            leaky_relu_inplace(h, slope)
            h = self._conv_transpose(workers, self.convs[upsample_name(stage)], h, spare)
            current, spare = spare, current
            for block in range(len(cfg.resblock_dilations)):
                y = scratch.view('y', h.shape[0], h.shape[1])
                leaky_relu_into(h, y, slope)
                y2 = self._conv(workers, self.convs[resblock_name(stage, block, 'dilated')], y, 'y2')
                leaky_relu_inplace(y2, slope)
                y = self._conv(workers, self.convs[resblock_name(stage, block, 'pointwise')], y2, 'y')
                shortcut = resblock_name(stage, block, 'shortcut')
                if shortcut in self.convs:
                    skip = self._conv(workers, self.convs[shortcut], h, 'y2')
                    np.add(skip, y, out=h)
                else:
                    np.add(h, y, out=h)
        leaky_relu_inplace(h, slope)
        out = self._conv(workers, self.convs[CONV_POST], h, 'y')
        np.tanh(out, out=out)
        return out[0]

    def _run(self, workers, values, frames, out):
        need = min_frames(self.config)
        samples = self.config.hop * frames
        for item in range(values.shape[0]):
            mel = values[item]
            if frames < need:
                mel = np.concatenate([mel, np.repeat(mel[:, -1:], need - frames, axis=1)], axis=1)
            out[item] = self._forward_one(workers, np.ascontiguousarray(mel))[:samples]

    def forward_array(self, values, threads=1, out=None):
        """
        Waveforms of a mel batch.
        :param values: log-mel array [B, n_mels, T]
        :type values: np.ndarray
        :param threads: worker count for the output-channel blocks, capped by MELGAN_THREADS
        :type threads: int
        :param out: optional [B, hop * T] destination
        :return: [B, hop * T] float32
        :rtype: np.ndarray
        """
        cfg = self.config
        values = np.asarray(values, dtype=np.float32)
        if values.ndim != 3 or values.shape[1] != cfg.mel_channels:
            raise DimensionError('mel must be [B, ' + str(cfg.mel_channels) + ', T]', axis='channels',
                                 expected=cfg.mel_channels, actual=values.shape[1] if values.ndim == 3 else None)
        batch, _, frames = values.shape
        if frames > self.max_frames:
            raise CapacityError('mel has ' + str(frames) + ' frames, compiled for at most ' + str(self.max_frames),
                                limit=self.max_frames, requested=frames)
        if frames < 1:
            raise DimensionError('mel needs at least one frame', axis='time', expected='>= 1', actual=0)
        if out is None:
            out = np.empty((batch, cfg.hop * frames), dtype=np.float32)
        threads = resolve_threads(threads)
        with threadpool_limits(limits=1):
            if threads == 1:
                self._run(_Workers(), values, frames, out)
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    self._run(_Workers(pool), values, frames, out)
        return out

    def synthesize(self, mel, threads=1):
        """
        Invert one mel-spectrogram.
        :param mel: log-mel features, batch 1
        :type mel: MelSpectrogram
        :return: ``hop * frames`` samples in (-1, 1)
        :rtype: AudioClip
        :raises CapacityError: when the mel is longer than ``max_frames``
        """
        values = mel.values.data
        if values.shape[0] != 1:
            raise DimensionError('synthesize takes one mel; use forward_array for batches', axis='batch',
                                 expected=1, actual=values.shape[0])
        return AudioClip(self.forward_array(values, threads)[0], self.sample_rate)


def compile_generator(params, max_frames, sample_rate=22050):
    return CompiledGenerator.compile(params, max_frames, sample_rate)
