import numpy as np


def harmonic_tone(freq, n_samples, sample_rate, harmonics=3, phase=0.0):
    """Sum of ``harmonics`` partials at 1/k amplitude, peak-normalised to 1."""
    t = np.arange(n_samples, dtype=np.float64) / sample_rate
    wave = np.zeros(n_samples, dtype=np.float64)
    for k in range(1, harmonics + 1):
        if k * freq >= sample_rate / 2:
            break
        wave += np.sin(2 * np.pi * k * freq * t + phase) / k
    peak = np.abs(wave).max()
    return wave / peak if peak > 0 else wave


def get_gauss_noise(n_samples, scale, rng):
    return rng.normal(0.0, scale, size=n_samples)


def get_uniform_noise(n_samples, scale, rng):
    return rng.uniform(-scale, scale, size=n_samples)


def fade(wave, n_fade):
    """Linear fade-in and fade-out over ``n_fade`` samples each."""
    n_fade = min(n_fade, wave.shape[0] // 2)
    if n_fade == 0:
        return wave
    ramp = np.linspace(0.0, 1.0, n_fade)
    wave = wave.copy()
    wave[:n_fade] *= ramp
    wave[-n_fade:] *= ramp[::-1]
    return wave
