import numpy as np
import pytest

from MelGAN.Model.config import DiscriminatorConfig, GeneratorConfig
from MelGAN.Preprocess.mel import MelConfig
from MelGAN.Train.config import TrainConfig


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: full-size runs (overfit training, default-size sweeps)')


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_generator_config():
    # hop 4: widths 16 -> 8 -> 4
    return GeneratorConfig(mel_channels=8, base_width=16, upsample_ratios=(2, 2), hop=4)


@pytest.fixture
def tiny_discriminator_config():
    return DiscriminatorConfig(num_scales=2, layers=((5, 1, 1, 4), (9, 2, 2, 8), (3, 1, 1, 1)))


@pytest.fixture
def small_mel_config():
    return MelConfig(n_mels=16)


@pytest.fixture
def small_generator_config():
    # trainable against the fixed 256 hop at desk cost
    return GeneratorConfig(mel_channels=16, base_width=16, upsample_ratios=(16, 16), hop=256,
                           resblock_dilations=(1,))


@pytest.fixture
def small_discriminator_config():
    return DiscriminatorConfig(num_scales=2, layers=((15, 1, 1, 4), (41, 4, 4, 8), (41, 4, 4, 8), (3, 1, 1, 1)))


@pytest.fixture
def small_train_config():
    return TrainConfig(batch_size=2, window_samples=1024, steps=3, checkpoint_every=2, prefetch=2, seed=7)
