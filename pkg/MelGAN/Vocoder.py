import logging

from MelGAN.IO.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from MelGAN.IO.read_wav import read_wav, write_wav
from MelGAN.Inference.bench import benchmark
from MelGAN.Inference.compiled import CompiledGenerator
from MelGAN.Model.config import GeneratorConfig
from MelGAN.Model.generator import build_generator
from MelGAN.Preprocess.mel import MelConfig, mel_spectrogram
from MelGAN.Utils.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_MAX_FRAMES = 1024


class Vocoder:
    """
    Mel-spectrogram inversion front door: holds a generator, its mel settings and a compiled inference path.

    Usage::

        vocoder = Vocoder.from_checkpoint('run/latest.mgk')
        clip = vocoder.resynthesize(vocoder.read_wav('speech.wav'))
        vocoder.write_wav('copy.wav', clip)
    """

    def __init__(self, generator=None, mel_config=MelConfig()):
        self.generator = generator
        self.mel_config = mel_config
        self.checkpoint = None
        self.compiled = None
        if generator is None:
            self.generator = build_generator(GeneratorConfig(mel_channels=mel_config.n_mels))

    @classmethod
    def from_checkpoint(cls, path):
        checkpoint = load_checkpoint(path)
        vocoder = cls(checkpoint.generator, checkpoint.mel_config)
        vocoder.checkpoint = checkpoint
        return vocoder

    def save(self, path):
        """Write a generator-only checkpoint."""
        save_checkpoint(Checkpoint(self.generator, mel_config=self.mel_config,
                                   step=0 if self.checkpoint is None else self.checkpoint.step), path)

    @staticmethod
    def read_wav(path):
        return read_wav(path)

    @staticmethod
    def write_wav(path, clip):
        write_wav(path, clip)

    def mel(self, clip):
        return mel_spectrogram(clip, self.mel_config)

    def compile(self, max_frames=DEFAULT_MAX_FRAMES):
        """
        Fold the generator weights and preallocate buffers for up to ``max_frames`` mel frames.
        :rtype: CompiledGenerator
        """
        self.compiled = CompiledGenerator.compile(self.generator, max_frames, self.mel_config.sample_rate)
        return self.compiled

    def _compiled_for(self, frames):
        if self.compiled is None or self.compiled.max_frames < frames:
            self.compile(max(frames, DEFAULT_MAX_FRAMES))
        return self.compiled

    def synthesize(self, mel, threads=1):
        """
        Invert a mel-spectrogram computed with this vocoder's frontend settings.
        :param mel: log-mel features, batch 1
        :type mel: MelSpectrogram
        :rtype: AudioClip
        :raises ConfigError: if the mel was made with different frontend settings
        """
        if mel.config != self.mel_config:
            raise ConfigError('mel settings differ from the checkpoint: ' + str(mel.config) + ' vs '
                              + str(self.mel_config), field='mel')
        return self._compiled_for(mel.frames).synthesize(mel, threads)

    def resynthesize(self, clip, threads=1):
        """
        Copy-synthesis: waveform -> mel -> waveform, trimmed to the input length.
        :type clip: AudioClip
        :rtype: AudioClip
        """
        out = self.synthesize(self.mel(clip), threads)
        out.samples = out.samples[:len(clip)]
        return out

    def benchmark(self, frames=256, repeats=5, threads=1, warmup=1):
        return benchmark(self._compiled_for(frames), frames, repeats, threads, warmup)
