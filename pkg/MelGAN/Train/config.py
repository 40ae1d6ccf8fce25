from dataclasses import dataclass

from MelGAN.Algorithm.optim import ADAM_BETA1, ADAM_BETA2, ADAM_LR
from MelGAN.Preprocess.mel import HOP
from MelGAN.Train.loss import LAMBDA_FM
from MelGAN.Utils.errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimisation settings. Defaults follow the published recipe: Adam(1e-4, 0.5, 0.9)
    for both networks, batch 16, feature-matching weight 10.
    """
    batch_size: int = 16
    window_samples: int = 8192
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    lambda_fm: float = LAMBDA_FM
    seed: int = 0
    steps: int = 1000
    checkpoint_every: int = 500
    prefetch: int = 4

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.batch_size < 1:
            raise ConfigError('must be >= 1', field='batch_size')
        if self.window_samples < HOP or self.window_samples % HOP:
            raise ConfigError('must be a positive multiple of ' + str(HOP), field='window_samples')
        if self.lr <= 0:
            raise ConfigError('must be positive', field='lr')
        for name in ('beta1', 'beta2'):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError('must lie in [0, 1)', field=name)
        if self.lambda_fm < 0:
            raise ConfigError('must be >= 0', field='lambda_fm')
        if self.steps < 0:
            raise ConfigError('must be >= 0', field='steps')
        if self.checkpoint_every < 0:
            raise ConfigError('must be >= 0', field='checkpoint_every')
        if self.prefetch < 1:
            raise ConfigError('must be >= 1', field='prefetch')
