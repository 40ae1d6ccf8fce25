import io
import logging
import os
import struct
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from MelGAN.Utils.errors import DataError, WavFormatError

logger = logging.getLogger(__name__)

PCM = 1
IEEE_FLOAT = 3
EXTENSIBLE = 0xFFFE
PCM16_SCALE = 32768.0


@dataclass
class AudioClip:
    """
    Mono waveform in [-1, 1].
    """
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.clip(np.asarray(self.samples, dtype=np.float32).reshape(-1), -1.0, 1.0)
        self.sample_rate = int(self.sample_rate)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate


def _scan_chunks(raw):
    """
    Walk the RIFF chunk list and return the decoded fmt fields.
    :raises WavFormatError: naming the chunk that is malformed or unsupported
    """
    if len(raw) < 12:
        raise WavFormatError('file shorter than the RIFF header', chunk='RIFF')
    riff, _, form = struct.unpack('<4sI4s', raw[:12])
    if riff != b'RIFF':
        raise WavFormatError('missing RIFF magic', chunk='RIFF')
    if form != b'WAVE':
        raise WavFormatError('RIFF form is not WAVE', chunk='WAVE')
    offset = 12
    fmt = None
    data_seen = False
    while offset + 8 <= len(raw):
        chunk_id, size = struct.unpack('<4sI', raw[offset:offset + 8])
        name = chunk_id.decode('latin-1')
        body = raw[offset + 8:offset + 8 + size]
        if len(body) < size:
            raise WavFormatError('chunk truncated: declared ' + str(size) + ' bytes, found ' + str(len(body)),
                                 chunk=name)
        if chunk_id == b'fmt ':
            if size < 16:
                raise WavFormatError('fmt chunk shorter than 16 bytes', chunk=name)
            audio_format, channels, sample_rate, _, _, bits = struct.unpack('<HHIIHH', body[:16])
            if audio_format == EXTENSIBLE and size >= 26:
                audio_format = struct.unpack('<H', body[24:26])[0]
            fmt = (audio_format, channels, sample_rate, bits)
        elif chunk_id == b'data':
            if fmt is None:
                raise WavFormatError('data chunk before fmt chunk', chunk=name)
            data_seen = True
        offset += 8 + size + (size & 1)
    if fmt is None:
        raise WavFormatError('no fmt chunk', chunk='fmt ')
    if not data_seen:
        raise WavFormatError('no data chunk', chunk='data')
    audio_format, channels, sample_rate, bits = fmt
    supported = (audio_format == PCM and bits == 16) or (audio_format == IEEE_FLOAT and bits == 32)
    if not supported:
        raise WavFormatError('unsupported codec: format=' + str(audio_format) + ' bits=' + str(bits),
                             chunk='fmt ')
    if channels < 1:
        raise WavFormatError('channel count is zero', chunk='fmt ')
    return fmt


def read_wav(path):
    """
    Read a PCM-16 or float-32 RIFF/WAVE file; multi-channel files keep the first channel.
    :param path: wav file
    :type path: str
    :return: the decoded clip
    :rtype: AudioClip
    """
    if not os.path.isfile(path):
        raise DataError('no such wav file: ' + str(path), path=path)
    with open(path, 'rb') as f:
        raw = f.read()
    _scan_chunks(raw)
    try:
        sample_rate, data = wavfile.read(io.BytesIO(raw))
    except ValueError as e:
        raise WavFormatError(str(e), chunk='data') from e
    if data.ndim > 1:
        data = data[:, 0]
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / PCM16_SCALE
    else:
        samples = data.astype(np.float32)
    return AudioClip(samples, sample_rate)


def encode_pcm16(samples):
    scaled = np.round(np.clip(samples, -1.0, 1.0).astype(np.float64) * PCM16_SCALE)
    return np.clip(scaled, -32768, 32767).astype(np.int16)


def write_wav(path, clip):
    """
    Write a clip as mono PCM-16; samples outside [-1, 1] are clipped.
    :param path: output file
    :type path: str
    :param clip: the audio to store
    :type clip: AudioClip
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    wavfile.write(path, clip.sample_rate, encode_pcm16(clip.samples))
    logger.debug('Wrote %d samples to %s', len(clip), path)


def list_wavs(directory):
    if not os.path.isdir(directory):
        raise DataError('The path is not a directory: ' + str(directory), path=directory)
    return sorted(os.path.join(directory, name) for name in os.listdir(directory)
                  if name.lower().endswith('.wav'))
