import logging

from MelGAN.Algorithm.ops import ConvSpec, avg_pool1d, leaky_relu
from MelGAN.Model.params import SPECTRAL, WEIGHT, ModelParams, init_layer
from MelGAN.Utils.errors import DimensionError
from MelGAN.Utils.utils import make_rng

logger = logging.getLogger(__name__)


def layer_name(scale, index):
    return 'scale.' + str(scale) + '.layer.' + str(index)


def block_plan(cfg):
    """``ConvSpec`` of each layer of one block; zero padding of ``kernel // 2`` keeps score maps dense."""
    specs = []
    in_channels = 1
    for kernel, stride, groups, out_channels in cfg.layers:
        specs.append(ConvSpec(in_channels, out_channels, kernel, stride=stride, groups=groups, padding=kernel // 2))
        in_channels = out_channels
    return specs


def block_receptive_field(cfg):
    """
    Input samples seen by one score frame of a block.
    :type cfg: DiscriminatorConfig
    :rtype: int
    """
    field, jump = 1, 1
    for kernel, stride, _, _ in cfg.layers:
        field += (kernel - 1) * jump
        jump *= stride
    return field


def build_discriminator(cfg, seed=0):
    """
    ``num_scales`` blocks with identical layer specs and independent weights.
    :type cfg: DiscriminatorConfig
    :rtype: ModelParams
    """
    rng = make_rng(seed, 1)
    kind = SPECTRAL if cfg.norm == 'spectral' else WEIGHT
    params = ModelParams(cfg, prefix='discriminator.')
    specs = block_plan(cfg)
    for scale in range(cfg.num_scales):
        for index, spec in enumerate(specs):
            params.add(layer_name(scale, index), init_layer(spec, rng, cfg.init_std, kind))
    logger.debug('Built %d-scale discriminator, receptive field %d samples', cfg.num_scales,
                 block_receptive_field(cfg))
    return params


def discriminator_forward(params, audio):
    """
    Score a waveform at every scale.

    Scale ``k`` sees the audio average-pooled ``k`` times.
    :param params: discriminator parameters
    :type params: ModelParams
    :param audio: waveform [B, 1, T]
    :type audio: Tensor
    :return: per scale, ``(score map, features)`` where features holds every layer output, score last
    :rtype: list
    """
    cfg = params.config
    if audio.channels != 1:
        raise DimensionError('discriminator input must be mono', axis='channels', expected=1,
                             actual=audio.channels)
    field = block_receptive_field(cfg)
    if audio.time < field:
        raise DimensionError('input shorter than one discriminator receptive field', axis='time',
                             expected='>= ' + str(field), actual=audio.time)
    outputs = []
    x = audio
    last = len(cfg.layers) - 1
    for scale in range(cfg.num_scales):
        if scale > 0:
            x = avg_pool1d(x, cfg.pool_kernel, cfg.pool_stride, cfg.pool_padding, label='pool.' + str(scale))
        h = x
        features = []
        for index in range(len(cfg.layers)):
            name = layer_name(scale, index)
            h = params[name](h, label=name, update_power=params.training)
            if index < last:
                h = leaky_relu(h, cfg.leaky_slope)
            features.append(h)
        outputs.append((h, features))
    return outputs
