import tracemalloc
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from MelGAN.Algorithm.tensor import Tensor, no_graph
from MelGAN.Inference import compiled
from MelGAN.Inference.bench import benchmark
from MelGAN.Inference.compiled import CompiledGenerator, compile_generator, row_blocks
from MelGAN.Model.config import GeneratorConfig
from MelGAN.Model.generator import build_generator, generator_forward
from MelGAN.Model.params import channel_norm
from MelGAN.Preprocess.mel import MelConfig, MelSpectrogram
from MelGAN.Utils.errors import CapacityError, DimensionError


def perturbed_generator(cfg, rng, seed=0):
    # move g and bias off their initial values so folding is exercised
    params = build_generator(cfg, seed)
    for _, layer in params:
        layer.g.data = layer.g.data * rng.uniform(0.5, 2.0, size=layer.g.shape)
        layer.bias.data = rng.normal(0, 0.01, size=layer.bias.shape)
    return params


def mels(rng, cfg, frames, batch=1):
    return rng.normal(-4.0, 2.0, size=(batch, cfg.mel_channels, frames)).astype(np.float32)


@pytest.mark.parametrize('shortcut', ['conv1x1', 'identity'])
@pytest.mark.parametrize('frames', [1, 3, 9])
def test_matches_autodiff_forward(rng, shortcut, frames):
    cfg = GeneratorConfig(mel_channels=16, base_width=16, upsample_ratios=(16, 16), hop=256,
                          resblock_dilations=(1, 3), residual_shortcut=shortcut)
    params = perturbed_generator(cfg, rng)
    values = mels(rng, cfg, frames, batch=2)
    with no_graph():
        expected = generator_forward(params, Tensor(values)).data[:, 0]
    gen = CompiledGenerator.compile(params, 16)
    np.testing.assert_allclose(gen.forward_array(values), expected, atol=1e-5)


def test_default_layout_thirty_two_frames(rng):
    params = build_generator(GeneratorConfig())
    gen = compile_generator(params, 32)
    clip = gen.synthesize(MelSpectrogram(Tensor(mels(rng, params.config, 32)), MelConfig()))
    assert len(clip) == 8192
    assert clip.sample_rate == 22050
    assert np.abs(clip.samples).max() < 1.0


def test_rejects_mels_past_capacity(small_generator_config, rng):
    gen = CompiledGenerator.compile(build_generator(small_generator_config), 4)
    with pytest.raises(CapacityError) as info:
        gen.forward_array(mels(rng, small_generator_config, 5))
    assert (info.value.limit, info.value.requested) == (4, 5)
    with pytest.raises(CapacityError):
        CompiledGenerator.compile(build_generator(small_generator_config), 0)


def test_rejects_bad_mel_shapes(small_generator_config, rng):
    gen = CompiledGenerator.compile(build_generator(small_generator_config), 4)
    with pytest.raises(DimensionError):
        gen.forward_array(np.zeros((1, 8, 3), dtype=np.float32))
    with pytest.raises(DimensionError):
        gen.synthesize(MelSpectrogram(Tensor(mels(rng, small_generator_config, 3, batch=2)), MelConfig(n_mels=16)))


def test_repeated_calls_are_bit_identical(small_generator_config, rng):
    gen = CompiledGenerator.compile(perturbed_generator(small_generator_config, rng), 8)
    values = mels(rng, small_generator_config, 6)
    first = gen.forward_array(values).copy()
    for frames in (6, 2, 8):
        gen.forward_array(mels(rng, small_generator_config, frames))
    np.testing.assert_array_equal(gen.forward_array(values), first)


def test_steady_state_calls_allocate_no_buffers(small_generator_config, rng):
    gen = CompiledGenerator.compile(perturbed_generator(small_generator_config, rng), 64)
    values = mels(rng, small_generator_config, 64)
    out = np.empty((1, 64 * 256), dtype=np.float32)
    gen.forward_array(values, out=out)
    tracemalloc.start()
    try:
        gen.forward_array(values, out=out)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    # the smallest activation buffer alone is larger than this
    assert peak < min(b.nbytes for b in gen.scratch.buffers.values() if b.nbytes) // 4


class RecordingPool(ThreadPoolExecutor):
    sizes = []

    def __init__(self, max_workers):
        RecordingPool.sizes.append(max_workers)
        super().__init__(max_workers=max_workers)


def test_one_mel_is_split_across_threads(rng, monkeypatch):
    monkeypatch.setenv('MELGAN_THREADS', '4')
    monkeypatch.setattr(compiled, 'ThreadPoolExecutor', RecordingPool)
    RecordingPool.sizes = []
    cfg = GeneratorConfig(mel_channels=16, base_width=128, upsample_ratios=(16, 16), hop=256,
                          resblock_dilations=(1, 3))
    gen = CompiledGenerator.compile(perturbed_generator(cfg, rng), 8)
    assert len(gen.convs['conv_pre'].blocks) == 4
    mel = MelSpectrogram(Tensor(mels(rng, cfg, 7)), MelConfig(n_mels=16))
    single = gen.synthesize(mel, threads=1).samples.copy()
    assert RecordingPool.sizes == []
    np.testing.assert_array_equal(gen.synthesize(mel, threads=4).samples, single)
    assert RecordingPool.sizes == [4]


def test_thread_count_does_not_change_a_batch(small_generator_config, rng, monkeypatch):
    monkeypatch.setenv('MELGAN_THREADS', '3')
    gen = CompiledGenerator.compile(perturbed_generator(small_generator_config, rng), 8)
    values = mels(rng, small_generator_config, 5, batch=3)
    single = gen.forward_array(values, threads=1).copy()
    np.testing.assert_array_equal(gen.forward_array(values, threads=3), single)


def test_row_blocks_cover_every_channel_once():
    assert row_blocks(512) == [(s, s + 32) for s in range(0, 512, 32)]
    assert row_blocks(40) == [(0, 32), (32, 40)]
    assert row_blocks(1) == [(0, 1)]


def test_folded_weights(small_generator_config, rng):
    params = perturbed_generator(small_generator_config, rng)
    gen = CompiledGenerator.compile(params, 4)
    layer = params['conv_pre']
    expected = layer.g.data.astype(np.float64) * layer.v.data / channel_norm(layer.v.data)
    np.testing.assert_allclose(gen.convs['conv_pre'].folded, expected, rtol=1e-6)
    fresh = build_generator(small_generator_config)
    folded = CompiledGenerator.compile(fresh, 4).convs['up.0'].folded
    np.testing.assert_allclose(folded, fresh['up.0'].v.data, rtol=1e-5, atol=1e-8)


def test_matches_autodiff_on_many_random_mels(small_generator_config, rng):
    params = perturbed_generator(small_generator_config, rng, seed=5)
    gen = CompiledGenerator.compile(params, 16)
    worst = 0.0
    for _ in range(100):
        values = mels(rng, small_generator_config, int(rng.integers(1, 17)))
        with no_graph():
            expected = generator_forward(params, Tensor(values)).data[:, 0]
        worst = max(worst, float(np.abs(gen.forward_array(values) - expected).max()))
    assert worst < 1e-5


@pytest.mark.slow
def test_default_layout_runs_faster_than_real_time():
    gen = compile_generator(build_generator(GeneratorConfig()), 256)
    report = benchmark(gen, 256, repeats=3, threads=1)
    assert report.real_time_factor >= 1.0
