import json
import logging
import time
from dataclasses import asdict, dataclass

import numpy as np
from tqdm import tqdm

from MelGAN.Utils.errors import ConfigError
from MelGAN.Utils.utils import make_rng, resolve_threads

logger = logging.getLogger(__name__)

# single-core CPU throughput reported for the reference implementation
REFERENCE_KHZ = 51.9


@dataclass
class BenchReport:
    """
    Timing of one benchmark run. ``throughput_khz = samples / seconds / 1000`` and
    ``real_time_factor = samples / seconds / sample_rate``.
    """
    samples_generated: int
    seconds: float
    throughput_khz: float
    real_time_factor: float
    sample_rate: int
    threads: int
    warmup: int
    repeats: int
    frames: int
    reference_khz: float = REFERENCE_KHZ

    @classmethod
    def from_timing(cls, samples, seconds, sample_rate=22050, threads=1, warmup=1, repeats=3, frames=0):
        rate = samples / seconds
        return cls(int(samples), float(seconds), rate / 1000.0, rate / sample_rate, int(sample_rate), int(threads),
                   int(warmup), int(repeats), int(frames))

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def table(self):
        rows = [('frames', str(self.frames)),
                ('samples', str(self.samples_generated)),
                ('median seconds', '%.4f' % self.seconds),
                ('throughput', '%.1f kHz' % self.throughput_khz),
                ('real-time factor', '%.2fx at %d Hz' % (self.real_time_factor, self.sample_rate)),
                ('threads', str(self.threads)),
                ('warmup / repeats', '%d / %d' % (self.warmup, self.repeats)),
                ('reference', '%.1f kHz on one CPU core' % self.reference_khz)]
        width = max(len(k) for k, _ in rows)
        return '\n'.join(k.ljust(width) + '  ' + v for k, v in rows)


def benchmark(gen, frames, repeats=5, threads=1, warmup=1, seed=0, progress=False):
    """
    Median-of-repeats synthesis timing of a batch of ``threads`` random mels.
    :param gen: compiled generator
    :type gen: CompiledGenerator
    :param frames: mel frames per call
    :type frames: int
    :param repeats: timed calls, >= 3
    :type repeats: int
    :param threads: worker count; 1 mirrors a single-core measurement
    :type threads: int
    :param warmup: untimed calls first, >= 1
    :type warmup: int
    :rtype: BenchReport
    """
    if repeats < 3:
        raise ConfigError('needs at least 3 timed repeats', field='repeats')
    if warmup < 1:
        raise ConfigError('needs at least one warmup call', field='warmup')
    threads = resolve_threads(threads)
    cfg = gen.config
    mel = make_rng(seed, 4).normal(-4.0, 2.0, size=(threads, cfg.mel_channels, frames)).astype(np.float32)
    out = np.empty((threads, cfg.hop * frames), dtype=np.float32)
    for _ in range(warmup):
        gen.forward_array(mel, threads, out=out)
    timings = []
    for _ in tqdm(range(repeats), desc='Benchmarking', disable=not progress):
        start = time.perf_counter()
        gen.forward_array(mel, threads, out=out)
        timings.append(time.perf_counter() - start)
    seconds = float(np.median(timings))
    report = BenchReport.from_timing(out.size, seconds, gen.sample_rate, threads, warmup, repeats, frames)
    logger.info('Benchmark: %.1f kHz (%.2fx real time) with %d thread(s)', report.throughput_khz,
                report.real_time_factor, threads)
    return report
