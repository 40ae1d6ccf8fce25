import logging
import os

import numpy as np
from tqdm import tqdm

from MelGAN.IO.read_wav import AudioClip, write_wav
from MelGAN.Simulate.simUtils import fade, get_gauss_noise, get_uniform_noise, harmonic_tone
from MelGAN.Utils.errors import ConfigError
from MelGAN.Utils.utils import make_rng

logger = logging.getLogger(__name__)

NOISE_KINDS = ('gauss', 'uniform')


class Simulator:
    """
    Synthetic tone clips for smoke training and tests.
    """

    def __init__(self, sample_rate=22050, seed=0):
        self.sample_rate = sample_rate
        self.seed = seed
        self.noise_kind = None
        self.noise_level = 0.0

    def set_noise_type(self, kind, level):
        """
        Add noise to every generated clip.
        ``gauss`` takes a standard deviation relative to the clip's tone amplitude, in (0, 1];
        ``uniform`` takes an absolute half-range, >= 0. ``None`` switches noise off.
        """
        if kind is None:
            self.noise_kind, self.noise_level = None, 0.0
            return
        if kind not in NOISE_KINDS:
            raise ConfigError('expected one of ' + ', '.join(NOISE_KINDS) + ', got ' + repr(kind), field='noise')
        if kind == 'gauss' and not 0 < level <= 1:
            raise ConfigError('relative gauss level must lie in (0, 1], got ' + str(level), field='noise_level')
        if kind == 'uniform' and level < 0:
            raise ConfigError('uniform half-range must be >= 0, got ' + str(level), field='noise_level')
        self.noise_kind, self.noise_level = kind, float(level)

    def _noise(self, n_samples, amplitude, rng):
        if self.noise_kind == 'gauss':
            return get_gauss_noise(n_samples, self.noise_level * amplitude, rng)
        return get_uniform_noise(n_samples, self.noise_level, rng)

    def tone(self, freq, duration, amplitude=0.5, harmonics=1):
        """
        A pure (or harmonic) tone.
        :param freq: fundamental in Hz
        :type freq: float
        :param duration: length in seconds
        :type duration: float
        :rtype: AudioClip
        """
        n_samples = int(round(duration * self.sample_rate))
        return AudioClip(amplitude * harmonic_tone(freq, n_samples, self.sample_rate, harmonics), self.sample_rate)

    def generate(self, count, duration, add_noise=True, fmin=110.0, fmax=880.0):
        """
        ``count`` clips, each a harmonic tone with a random fundamental and level.
        :rtype: list
        """
        clips = []
        n_samples = int(round(duration * self.sample_rate))
        for index in range(count):
            rng = make_rng(self.seed, 5, index)
            freq = rng.uniform(fmin, fmax)
            amplitude = rng.uniform(0.2, 0.8)
            wave = amplitude * harmonic_tone(freq, n_samples, self.sample_rate, harmonics=3,
                                             phase=rng.uniform(0, 2 * np.pi))
            if add_noise and self.noise_kind is not None:
                wave = np.clip(wave + self._noise(n_samples, amplitude, rng), -1.0, 1.0)
            clips.append(AudioClip(fade(wave, self.sample_rate // 100), self.sample_rate))
        return clips

    def write(self, directory, count, duration, add_noise=True):
        """
        Write :meth:`generate` output as ``sim_000.wav``, ``sim_001.wav``, ... under ``directory``.
        :return: the written paths
        :rtype: list
        """
        os.makedirs(directory, exist_ok=True)
        paths = []
        for i, clip in enumerate(tqdm(self.generate(count, duration, add_noise), desc='Writing clips',
                                      disable=count < 16)):
            path = os.path.join(directory, 'sim_' + str(i).zfill(3) + '.wav')
            write_wav(path, clip)
            paths.append(path)
        logger.info('Wrote %d synthetic clips to %s', count, directory)
        return paths
