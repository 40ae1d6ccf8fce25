from dataclasses import dataclass
from math import prod

from MelGAN.Utils.errors import ConfigError

# (kernel, stride, groups, out_channels) per discriminator layer
DEFAULT_DISCRIMINATOR_LAYERS = (
    (15, 1, 1, 16),
    (41, 4, 4, 64),
    (41, 4, 16, 256),
    (41, 4, 64, 1024),
    (41, 4, 256, 1024),
    (5, 1, 1, 1024),
    (3, 1, 1, 1),
)


@dataclass(frozen=True)
class GeneratorConfig:
    """
    Layer description of the generator.

    ``residual_shortcut`` selects the skip path of each residual block:
    ``conv1x1`` (a learned weight-normalized 1x1 conv) or ``identity``.
    """
    mel_channels: int = 80
    base_width: int = 512
    upsample_ratios: tuple = (8, 8, 2, 2)
    upsample_kernel_sizes: tuple = ()
    hop: int = 256
    resblock_kernel: int = 3
    resblock_dilations: tuple = (1, 3, 9)
    leaky_slope: float = 0.2
    residual_shortcut: str = 'conv1x1'
    edge_kernel: int = 7
    weight_norm: bool = True
    init_std: float = 0.02

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mel_channels < 1:
            raise ConfigError('must be >= 1', field='mel_channels')
        if not self.upsample_ratios:
            raise ConfigError('needs at least one stage', field='upsample_ratios')
        if any(r < 1 for r in self.upsample_ratios):
            raise ConfigError('ratios must be >= 1', field='upsample_ratios')
        if prod(self.upsample_ratios) != self.hop:
            raise ConfigError('product of ratios is ' + str(prod(self.upsample_ratios)) + ', expected hop '
                              + str(self.hop), field='upsample_ratios')
        if self.upsample_kernel_sizes and len(self.upsample_kernel_sizes) != len(self.upsample_ratios):
            raise ConfigError('needs one kernel per stage', field='upsample_kernel_sizes')
        if self.base_width % (2 ** len(self.upsample_ratios)):
            raise ConfigError('base_width must halve cleanly at every stage', field='base_width')
        if self.resblock_kernel < 1 or self.resblock_kernel % 2 == 0:
            raise ConfigError('must be odd', field='resblock_kernel')
        if not 0 < self.leaky_slope < 1:
            raise ConfigError('must lie in (0, 1)', field='leaky_slope')
        if self.residual_shortcut not in ('conv1x1', 'identity'):
            raise ConfigError('must be conv1x1 or identity', field='residual_shortcut')
        if self.edge_kernel < 1 or self.edge_kernel % 2 == 0:
            raise ConfigError('must be odd', field='edge_kernel')
        if self.init_std <= 0:
            raise ConfigError('must be positive', field='init_std')

    def check_buildable(self):
        """Every stage must grow the length by exactly its ratio with integral padding."""
        for ratio, kernel in zip(self.upsample_ratios, self.upsample_kernels()):
            if kernel < ratio or (kernel - ratio) % 2:
                raise ConfigError('stage ratio ' + str(ratio) + ' with kernel ' + str(kernel)
                                  + ' needs fractional padding', field='upsample_ratios')

    def upsample_kernels(self):
        if self.upsample_kernel_sizes:
            return tuple(self.upsample_kernel_sizes)
        return tuple(2 * r for r in self.upsample_ratios)

    def upsample_paddings(self):
        return tuple((k - r) // 2 for k, r in zip(self.upsample_kernels(), self.upsample_ratios))

    def stage_widths(self):
        return tuple(self.base_width // 2 ** (i + 1) for i in range(len(self.upsample_ratios)))


@dataclass(frozen=True)
class DiscriminatorConfig:
    """
    Multi-scale window discriminator: ``num_scales`` identical blocks, each fed
    the audio average-pooled one more time than the previous block.

    ``norm`` is ``weight`` or ``spectral``.
    """
    num_scales: int = 3
    pool_kernel: int = 4
    pool_stride: int = 2
    pool_padding: int = 1
    layers: tuple = DEFAULT_DISCRIMINATOR_LAYERS
    leaky_slope: float = 0.2
    norm: str = 'weight'
    init_std: float = 0.02

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.num_scales < 1:
            raise ConfigError('must be >= 1', field='num_scales')
        if self.pool_kernel < 1 or self.pool_stride < 1 or self.pool_padding < 0:
            raise ConfigError('pool kernel and stride must be >= 1', field='pool_kernel')
        if not self.layers:
            raise ConfigError('needs at least one layer', field='layers')
        in_channels = 1
        for index, layer in enumerate(self.layers):
            if len(layer) != 4 or any(v < 1 for v in layer):
                raise ConfigError('layer ' + str(index) + ' must be four positive ints', field='layers')
            kernel, stride, groups, out_channels = layer
            if in_channels % groups or out_channels % groups:
                raise ConfigError('layer ' + str(index) + ' channels not divisible by groups', field='layers')
            in_channels = out_channels
        if self.layers[-1][3] != 1:
            raise ConfigError('last layer must output one channel', field='layers')
        if not 0 < self.leaky_slope < 1:
            raise ConfigError('must lie in (0, 1)', field='leaky_slope')
        if self.norm not in ('weight', 'spectral'):
            raise ConfigError('must be weight or spectral', field='norm')
