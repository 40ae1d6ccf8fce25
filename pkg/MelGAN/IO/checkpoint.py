"""
Binary checkpoint codec.

Layout (little-endian)::

    "MGK1" | u32 version | u32 tensor count
    per tensor: u16 name length | UTF-8 name | u8 ndim | u64 dims[ndim] | f32 payload
    u32 metadata length | UTF-8 key=value metadata

Metadata carries the configs (keys prefixed ``mel.``, ``generator.``,
``discriminator.``, ``train.``), the step and the Adam update counters.
"""
import logging
import os
import struct
from dataclasses import dataclass

import numpy as np

from MelGAN.Algorithm.optim import AdamState
from MelGAN.IO.IOUtil import config_from_text, config_to_text
from MelGAN.Model.config import DiscriminatorConfig, GeneratorConfig
from MelGAN.Model.discriminator import build_discriminator
from MelGAN.Model.generator import build_generator
from MelGAN.Preprocess.mel import MelConfig
from MelGAN.Train.config import TrainConfig
from MelGAN.Utils.errors import CheckpointError, ConfigError, DataError

logger = logging.getLogger(__name__)

MAGIC = b'MGK1'
VERSION = 1
G_OPTIM = 'optim.generator.'
D_OPTIM = 'optim.discriminator.'
SECTIONS = (('mel.', MelConfig), ('generator.', GeneratorConfig),
            ('discriminator.', DiscriminatorConfig), ('train.', TrainConfig))


@dataclass
class Checkpoint:
    """
    Everything needed to resume training or run inference.
    ``discriminator`` and the optimizer states are None in generator-only exports.
    """
    generator: object
    discriminator: object = None
    g_optim: AdamState = None
    d_optim: AdamState = None
    mel_config: MelConfig = MelConfig()
    train_config: TrainConfig = None
    step: int = 0

    def named_tensors(self):
        out = list(self.generator.named_tensors())
        if self.discriminator is not None:
            out += self.discriminator.named_tensors()
        for prefix, state in ((G_OPTIM, self.g_optim), (D_OPTIM, self.d_optim)):
            if state is not None:
                out += [(prefix + name, array) for name, array in state.named_buffers()]
        return out

    def metadata(self):
        lines = ['step=' + str(self.step)]
        configs = (self.mel_config, self.generator.config,
                   None if self.discriminator is None else self.discriminator.config, self.train_config)
        for (prefix, _), config in zip(SECTIONS, configs):
            if config is None:
                continue
            for line in config_to_text(config).splitlines():
                if not line.startswith('#'):
                    lines.append(prefix + line)
        for name, state in (('g_adam_t', self.g_optim), ('d_adam_t', self.d_optim)):
            if state is not None:
                lines.append(name + '=' + str(state.t))
        return '\n'.join(lines) + '\n'


def _array_of(value):
    return value.data if hasattr(value, 'data') and not isinstance(value, np.ndarray) else value


def encode_checkpoint(checkpoint):
    """
    Serialize a checkpoint to bytes; equal checkpoints give equal bytes.
    :rtype: bytes
    """
    tensors = checkpoint.named_tensors()
    names = [name for name, _ in tensors]
    if len(set(names)) != len(names):
        duplicate = next(n for n in names if names.count(n) > 1)
        raise CheckpointError('tensor name ' + duplicate + ' appears twice', reason='name collision')
    chunks = [MAGIC, struct.pack('<II', VERSION, len(tensors))]
    for name, value in tensors:
        array = np.ascontiguousarray(_array_of(value), dtype='<f4')
        encoded = name.encode('utf-8')
        chunks.append(struct.pack('<H', len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack('<B', array.ndim))
        chunks.append(struct.pack('<' + 'Q' * array.ndim, *array.shape))
        chunks.append(array.tobytes())
    meta = checkpoint.metadata().encode('utf-8')
    chunks.append(struct.pack('<I', len(meta)))
    chunks.append(meta)
    return b''.join(chunks)


class _Reader:
    def __init__(self, raw):
        self.raw = raw
        self.offset = 0

    def take(self, size, what):
        if self.offset + size > len(self.raw):
            raise CheckpointError('file truncated while reading ' + what, reason='truncated')
        out = self.raw[self.offset:self.offset + size]
        self.offset += size
        return out

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _parse_metadata(text):
    sections = {prefix: [] for prefix, _ in SECTIONS}
    scalars = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition('=')
        for prefix, _ in SECTIONS:
            if key.startswith(prefix):
                sections[prefix].append(key[len(prefix):] + '=' + value)
                break
        else:
            scalars[key] = value
    configs = {}
    for prefix, cls in SECTIONS:
        if sections[prefix]:
            try:
                configs[prefix] = config_from_text(cls, '\n'.join(sections[prefix]))
            except ConfigError as e:
                raise CheckpointError('metadata ' + prefix.rstrip('.') + ' config invalid: ' + str(e),
                                      reason='metadata') from e
    return configs, scalars


def decode_checkpoint(raw):
    """
    Parse :func:`encode_checkpoint` output. Nothing is returned unless the whole file is valid.
    :rtype: Checkpoint
    """
    reader = _Reader(raw)
    if reader.take(4, 'magic') != MAGIC:
        raise CheckpointError('bad magic bytes, not a checkpoint', reason='magic')
    version, count = reader.unpack('<II', 'header')
    if version != VERSION:
        raise CheckpointError('unsupported checkpoint version ' + str(version) + ', expected ' + str(VERSION),
                              reason='version')
    tensors = {}
    for _ in range(count):
        (length,) = reader.unpack('<H', 'name length')
        name = reader.take(length, 'name').decode('utf-8')
        (ndim,) = reader.unpack('<B', name + ' rank')
        shape = reader.unpack('<' + 'Q' * ndim, name + ' dims')
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        payload = reader.take(4 * size, name + ' payload')
        if name in tensors:
            raise CheckpointError('tensor name ' + name + ' appears twice', reason='name collision')
        tensors[name] = np.frombuffer(payload, dtype='<f4').reshape(shape).astype(np.float32)
    (meta_length,) = reader.unpack('<I', 'metadata length')
    meta = reader.take(meta_length, 'metadata').decode('utf-8')
    if reader.offset != len(raw):
        raise CheckpointError(str(len(raw) - reader.offset) + ' trailing bytes after metadata', reason='trailing')
    configs, scalars = _parse_metadata(meta)
    if 'generator.' not in configs:
        raise CheckpointError('metadata lacks a generator config', reason='metadata')
    generator = build_generator(configs['generator.'])
    discriminator = None
    if 'discriminator.' in configs:
        discriminator = build_discriminator(configs['discriminator.'])
    checkpoint = Checkpoint(generator=generator,
                            discriminator=discriminator,
                            mel_config=configs.get('mel.', MelConfig()),
                            train_config=configs.get('train.'),
                            step=int(scalars.get('step', 0)))
    for key, attr, prefix, params in (('g_adam_t', 'g_optim', G_OPTIM, generator),
                                      ('d_adam_t', 'd_optim', D_OPTIM, discriminator)):
        if key in scalars:
            state = AdamState()
            state.t = int(scalars[key])
            for name, tensor in params.named_parameters():
                m, v = tensors.pop(prefix + 'm.' + name, None), tensors.pop(prefix + 'v.' + name, None)
                if m is not None and v is not None:
                    state.m[name], state.v[name] = m, v
            setattr(checkpoint, attr, state)
    models = [generator] if discriminator is None else [generator, discriminator]
    for params in models:
        for name, tensor in params.named_tensors():
            if name not in tensors:
                raise CheckpointError('missing tensor ' + name, reason='missing')
            array = tensors.pop(name)
            if array.shape != tensor.shape:
                raise CheckpointError('tensor ' + name + ' has shape ' + str(array.shape) + ', expected '
                                      + str(tensor.shape), reason='shape')
            tensor.data = array
    if tensors:
        raise CheckpointError('unexpected tensors: ' + ', '.join(sorted(tensors)), reason='unknown')
    return checkpoint


def save_checkpoint(checkpoint, path):
    """
    Write a checkpoint atomically (temp file then rename).
    :type checkpoint: Checkpoint
    :type path: str
    """
    raw = encode_checkpoint(checkpoint)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = path + '.tmp'
    with open(tmp, 'wb') as f:
        f.write(raw)
    os.replace(tmp, path)
    logger.info('Saved checkpoint at step %d to %s', checkpoint.step, path)


def load_checkpoint(path):
    """
    :param path: file written by :func:`save_checkpoint`
    :rtype: Checkpoint
    """
    if not os.path.isfile(path):
        raise DataError('no such checkpoint: ' + str(path), path=path)
    with open(path, 'rb') as f:
        raw = f.read()
    checkpoint = decode_checkpoint(raw)
    logger.debug('Loaded checkpoint %s (step %d)', path, checkpoint.step)
    return checkpoint
