import logging
from dataclasses import dataclass
from functools import lru_cache

import librosa
import numpy as np

from MelGAN.Algorithm.tensor import Tensor
from MelGAN.Utils.errors import ConfigError, DimensionError

logger = logging.getLogger(__name__)

HOP = 256


@dataclass(frozen=True)
class MelConfig:
    """
    Mel frontend settings. The hop is tied to the generator's 256x upsampling.
    """
    sample_rate: int = 22050
    n_fft: int = 1024
    hop: int = HOP
    win_length: int = 1024
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 11025.0
    log_floor: float = 1e-5

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.hop != HOP:
            raise ConfigError('hop is fixed at ' + str(HOP) + ', got ' + str(self.hop), field='hop')
        if self.sample_rate <= 0:
            raise ConfigError('must be positive', field='sample_rate')
        if self.n_fft < 2 or self.n_fft % 2:
            raise ConfigError('must be an even count >= 2', field='n_fft')
        if not 0 < self.win_length <= self.n_fft:
            raise ConfigError('must lie in (0, n_fft]', field='win_length')
        if self.n_mels < 1:
            raise ConfigError('must be >= 1', field='n_mels')
        if not 0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise ConfigError('need 0 <= fmin < fmax <= sample_rate / 2', field='fmax')
        if self.log_floor <= 0:
            raise ConfigError('must be positive', field='log_floor')

    @property
    def n_bins(self):
        return self.n_fft // 2 + 1

    def frames_for(self, n_samples):
        """Frame count with 256 * frames >= n_samples > 256 * (frames - 1)."""
        return -(-n_samples // self.hop)


@dataclass
class MelSpectrogram:
    """
    Natural-log mel magnitudes, Tensor [batch, n_mels, frames].
    """
    values: Tensor
    config: MelConfig = MelConfig()

    @property
    def frames(self):
        return self.values.time

    @property
    def n_mels(self):
        return self.values.channels


@lru_cache(maxsize=8)
def mel_filterbank(config):
    """
    Slaney-style area-normalized triangular filters, [n_mels, n_fft/2 + 1].
    """
    bank = librosa.filters.mel(sr=config.sample_rate,
                               n_fft=config.n_fft,
                               n_mels=config.n_mels,
                               fmin=config.fmin,
                               fmax=config.fmax,
                               htk=False,
                               norm='slaney')
    return np.ascontiguousarray(bank, dtype=np.float32)


def band_centers(config):
    """Center frequency (Hz) of each mel band."""
    edges = librosa.mel_frequencies(n_mels=config.n_mels + 2, fmin=config.fmin, fmax=config.fmax, htk=False)
    return edges[1:-1]


def _stft_array(samples, config):
    if samples.shape[0] < 1:
        raise DimensionError('clip must hold at least one sample', axis='time', expected='>= 1', actual=0)
    spectrum = librosa.stft(np.asarray(samples, dtype=np.float32),
                            n_fft=config.n_fft,
                            hop_length=config.hop,
                            win_length=config.win_length,
                            window='hann',
                            center=True,
                            pad_mode='reflect')
    return np.abs(spectrum).astype(np.float32)


def stft_magnitude(clip, config):
    """
    Hann-windowed magnitude STFT with reflect centering.
    :return: Tensor [1, n_fft/2 + 1, floor(len / hop) + 1]
    """
    return Tensor(_stft_array(clip.samples, config)[None])


def mel_array(samples, config):
    """
    Log-mel matrix [n_mels, ceil(len / hop)] of one mono signal.
    """
    magnitudes = _stft_array(samples, config)
    frames = config.frames_for(samples.shape[0])
    mel = mel_filterbank(config) @ magnitudes[:, :frames]
    return np.log(np.maximum(mel, config.log_floor)).astype(np.float32)


def mel_spectrogram(clip, config):
    """
    Conditioning features of a clip.
    :param clip: mono audio
    :type clip: AudioClip
    :param config: frontend settings; the clip rate must match
    :type config: MelConfig
    :rtype: MelSpectrogram
    """
    if clip.sample_rate != config.sample_rate:
        raise ConfigError('clip rate ' + str(clip.sample_rate) + ' differs from ' + str(config.sample_rate)
                          + '; resampling is not supported', field='sample_rate')
    return MelSpectrogram(Tensor(mel_array(clip.samples, config)[None]), config)


def batch_mel(windows, config):
    """
    Stack the log-mels of equally long windows, [len(windows), n_mels, frames].
    """
    return MelSpectrogram(Tensor(np.stack([mel_array(w, config) for w in windows])), config)
