import logging
import queue
import threading
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from MelGAN.Algorithm.tensor import Tensor
from MelGAN.IO.read_wav import list_wavs, read_wav
from MelGAN.Preprocess.mel import MelConfig, MelSpectrogram, batch_mel
from MelGAN.Utils.errors import ConfigError, DataError
from MelGAN.Utils.utils import make_rng

logger = logging.getLogger(__name__)

WINDOW_STREAM = 2
EPOCH_STREAM = 3


@dataclass
class Batch:
    """
    One training batch: audio windows [B, 1, W] and their mels [B, n_mels, W / hop].
    """
    audio: Tensor
    mel: MelSpectrogram
    step: int


class WindowDataset:
    """
    Random fixed-length windows over a directory of WAV files.

    Window ``n`` (counted across the whole run) comes from epoch ``n // n_files``;
    the file is picked through a per-epoch seeded permutation and the offset
    from a generator seeded on ``(seed, n)``, so any window can be regenerated
    without replaying the ones before it.
    """

    def __init__(self, clips, window_samples, seed=0, mel_config=MelConfig()):
        if not clips:
            raise DataError('dataset holds no clips')
        for clip in clips:
            if clip.sample_rate != mel_config.sample_rate:
                raise ConfigError('clip rate ' + str(clip.sample_rate) + ' differs from '
                                  + str(mel_config.sample_rate), field='sample_rate')
        self.clips = clips
        self.window_samples = int(window_samples)
        self.seed = int(seed)
        self.mel_config = mel_config
        self._order = {}

    @classmethod
    def from_directory(cls, directory, window_samples, seed=0, mel_config=MelConfig()):
        paths = list_wavs(directory)
        if not paths:
            raise DataError('no .wav files in ' + str(directory), path=directory)
        clips = [read_wav(p) for p in tqdm(paths, desc='Loading clips', disable=len(paths) < 16)]
        logger.info('Loaded %d clips (%.1f s) from %s', len(clips), sum(c.duration for c in clips), directory)
        return cls(clips, window_samples, seed, mel_config)

    def __len__(self):
        return len(self.clips)

    def epoch_order(self, epoch):
        if epoch not in self._order:
            self._order = {epoch: make_rng(self.seed, EPOCH_STREAM, epoch).permutation(len(self.clips))}
        return self._order[epoch]

    def window(self, n):
        """
        The ``n``-th window of the run; clips shorter than the window are zero-padded at the tail.
        :rtype: np.ndarray
        """
        epoch, position = divmod(n, len(self.clips))
        samples = self.clips[self.epoch_order(epoch)[position]].samples
        spare = samples.shape[0] - self.window_samples
        if spare <= 0:
            out = np.zeros(self.window_samples, dtype=np.float32)
            out[:samples.shape[0]] = samples
            return out
        start = int(make_rng(self.seed, WINDOW_STREAM, n).integers(0, spare + 1))
        return samples[start:start + self.window_samples].copy()

    def batch(self, step, batch_size):
        windows = [self.window(step * batch_size + i) for i in range(batch_size)]
        audio = Tensor(np.stack(windows)[:, None, :])
        return Batch(audio, batch_mel(windows, self.mel_config), step)

    def batches(self, batch_size, start_step=0, stop_step=None):
        step = start_step
        while stop_step is None or step < stop_step:
            yield self.batch(step, batch_size)
            step += 1


def dataset_windows(directory, window_samples, seed=0, batch_size=16, mel_config=MelConfig(), start_step=0):
    """
    Endless seeded batch stream over a WAV directory.
    :param directory: folder of WAV files at ``mel_config.sample_rate``
    :type directory: str
    :param window_samples: samples per window, a multiple of the hop
    :type window_samples: int
    :param seed: stream seed
    :type seed: int
    :rtype: Iterator[Batch]
    """
    dataset = WindowDataset.from_directory(directory, window_samples, seed, mel_config)
    return dataset.batches(batch_size, start_step)


_DONE = object()


def prefetched(iterable, depth=4):
    """
    Run ``iterable`` on a producer thread through a bounded queue.
    Items come out in the producer's order; producer errors are re-raised on the consumer side.
    """
    buffer = queue.Queue(maxsize=depth)
    stop = threading.Event()

    def produce():
        try:
            for item in iterable:
                while not stop.is_set():
                    try:
                        buffer.put(item, timeout=0.1)
                        break
                    except queue.Full:
                        continue
                if stop.is_set():
                    return
            buffer.put(_DONE)
        except BaseException as e:
            buffer.put(e)

    worker = threading.Thread(target=produce, name='melgan-prefetch', daemon=True)
    worker.start()
    try:
        while True:
            item = buffer.get()
            if item is _DONE:
                return
            if isinstance(item, BaseException):
                raise item
            yield item
    finally:
        stop.set()
