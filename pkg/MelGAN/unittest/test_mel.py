import numpy as np
import pytest

from MelGAN.IO.read_wav import AudioClip
from MelGAN.Preprocess.mel import (MelConfig, band_centers, batch_mel, mel_filterbank, mel_spectrogram,
                                   stft_magnitude)
from MelGAN.Utils.errors import ConfigError, DimensionError


def test_silence_sits_at_the_log_floor():
    mel = mel_spectrogram(AudioClip(np.zeros(2048), 22050), MelConfig())
    assert mel.values.shape == (1, 80, 8)
    np.testing.assert_allclose(mel.values.data, np.log(1e-5), rtol=1e-6)
    assert mel.values.data[0, 0, 0] == pytest.approx(-11.5129, abs=1e-4)


def test_tone_peaks_in_the_band_around_its_frequency():
    config = MelConfig()
    t = np.arange(22050) / 22050
    mel = mel_spectrogram(AudioClip(0.5 * np.sin(2 * np.pi * 440 * t), 22050), config)
    peak = int(np.argmax(mel.values.data[0].mean(axis=1)))
    assert peak == int(np.argmin(np.abs(band_centers(config) - 440)))


@pytest.mark.parametrize('frames', [1, 2, 7, 32])
def test_frame_count_follows_the_hop(frames):
    mel = mel_spectrogram(AudioClip(np.zeros(256 * frames), 22050), MelConfig())
    assert mel.frames == frames
    assert MelConfig().frames_for(256 * frames + 1) == frames + 1


def test_stft_of_silence_is_zero():
    spectrum = stft_magnitude(AudioClip(np.zeros(1000), 22050), MelConfig())
    assert spectrum.shape == (1, 513, 1000 // 256 + 1)
    assert not spectrum.data.any()


def test_stft_peaks_at_bin_center_frequency():
    config = MelConfig()
    k = 40
    t = np.arange(8192) / config.sample_rate
    spectrum = stft_magnitude(AudioClip(0.5 * np.sin(2 * np.pi * k * config.sample_rate / config.n_fft * t),
                                        config.sample_rate), config)
    interior = spectrum.data[0, :, 4:-4]
    assert (np.argmax(interior, axis=0) == k).all()


def test_filterbank_shape_and_nonnegative():
    bank = mel_filterbank(MelConfig(n_mels=16))
    assert bank.shape == (16, 513)
    assert bank.min() >= 0
    assert (bank.sum(axis=1) > 0).all()


def test_rate_mismatch_is_rejected():
    with pytest.raises(ConfigError) as info:
        mel_spectrogram(AudioClip(np.zeros(512), 16000), MelConfig())
    assert info.value.field == 'sample_rate'


def test_empty_clip_is_rejected():
    with pytest.raises(DimensionError):
        mel_spectrogram(AudioClip(np.zeros(0), 22050), MelConfig())


@pytest.mark.parametrize('field, value', [('hop', 128), ('n_fft', 1023), ('win_length', 2048), ('n_mels', 0),
                                          ('fmax', 20000.0), ('log_floor', 0.0)])
def test_config_rejects_bad_values(field, value):
    with pytest.raises(ConfigError):
        MelConfig(**{field: value})


def test_batch_mel_matches_single_clips(rng):
    windows = [rng.uniform(-0.5, 0.5, 1024).astype(np.float32) for _ in range(3)]
    batch = batch_mel(windows, MelConfig())
    assert batch.values.shape == (3, 80, 4)
    single = mel_spectrogram(AudioClip(windows[1], 22050), MelConfig())
    np.testing.assert_allclose(batch.values.data[1], single.values.data[0], rtol=1e-6)
