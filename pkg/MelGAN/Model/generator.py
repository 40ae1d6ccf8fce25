import logging

import numpy as np

from MelGAN.Algorithm.ops import ConvSpec, crop_time, elementwise_add, leaky_relu, tanh
from MelGAN.Algorithm.tensor import Tensor
from MelGAN.Model.params import PLAIN, WEIGHT, ModelParams, init_layer
from MelGAN.Model.validate import validate_checkerboard_free
from MelGAN.Utils.errors import DimensionError
from MelGAN.Utils.utils import make_rng

logger = logging.getLogger(__name__)

CONV_PRE = 'conv_pre'
CONV_POST = 'conv_post'


def upsample_name(stage):
    return 'up.' + str(stage)


def resblock_name(stage, block, part):
    return 'res.' + str(stage) + '.' + str(block) + '.' + part


def generator_plan(cfg):
    """
    Ordered ``(name, ConvSpec)`` list of every convolution in the generator.
    :param cfg: generator layout
    :type cfg: GeneratorConfig
    :rtype: list
    """
    edge_pad = cfg.edge_kernel // 2
    plan = [(CONV_PRE, ConvSpec(cfg.mel_channels, cfg.base_width, cfg.edge_kernel,
                                padding=edge_pad, padding_mode='reflect'))]
    width = cfg.base_width
    for stage, (ratio, kernel, padding, out_width) in enumerate(zip(cfg.upsample_ratios,
                                                                    cfg.upsample_kernels(),
                                                                    cfg.upsample_paddings(),
                                                                    cfg.stage_widths())):
        plan.append((upsample_name(stage), ConvSpec(width, out_width, kernel, stride=ratio,
                                                    transposed=True, padding=padding)))
        width = out_width
        for block, dilation in enumerate(cfg.resblock_dilations):
            plan.append((resblock_name(stage, block, 'dilated'),
                         ConvSpec(width, width, cfg.resblock_kernel, dilation=dilation,
                                  padding=dilation * (cfg.resblock_kernel - 1) // 2, padding_mode='reflect')))
            plan.append((resblock_name(stage, block, 'pointwise'), ConvSpec(width, width, 1)))
            if cfg.residual_shortcut == 'conv1x1':
                plan.append((resblock_name(stage, block, 'shortcut'), ConvSpec(width, width, 1)))
    plan.append((CONV_POST, ConvSpec(width, 1, cfg.edge_kernel, padding=edge_pad, padding_mode='reflect')))
    return plan


def min_frames(cfg):
    """
    Smallest mel frame count for which every reflect padding in the generator is shorter than its input.
    """
    frames = 1
    while True:
        length = frames
        ok = length > cfg.edge_kernel // 2
        for ratio in cfg.upsample_ratios:
            length *= ratio
            ok = ok and all(length > d * (cfg.resblock_kernel - 1) // 2 for d in cfg.resblock_dilations)
        ok = ok and length > cfg.edge_kernel // 2
        if ok:
            return frames
        frames += 1


def extend_frames(values, cfg):
    """
    Repeat the last frame of a short mel until it reaches :func:`min_frames`.
    :param values: mel array [B, n_mels, T]
    :return: the (possibly extended) array and the original frame count
    """
    frames = values.shape[2]
    need = min_frames(cfg)
    if frames >= need:
        return values, frames
    tail = np.repeat(values[:, :, -1:], need - frames, axis=2)
    return np.concatenate([values, tail], axis=2), frames


def build_generator(cfg, seed=0):
    """
    Initialise generator parameters: ``v ~ N(0, init_std)``, ``g = ||v||``, zero bias.
    :param cfg: generator layout
    :type cfg: GeneratorConfig
    :param seed: initialisation seed
    :type seed: int
    :rtype: ModelParams
    """
    cfg.check_buildable()
    report = validate_checkerboard_free(cfg)
    for violation in report.violations:
        logger.warning('Generator layout: %s', violation)
    rng = make_rng(seed, 0)
    kind = WEIGHT if cfg.weight_norm else PLAIN
    params = ModelParams(cfg, prefix='generator.')
    for name, spec in generator_plan(cfg):
        params.add(name, init_layer(spec, rng, cfg.init_std, kind))
    logger.debug('Built generator with %d layers', len(params))
    return params


def _mel_values(mel):
    return getattr(mel, 'values', mel)


def generator_forward(params, mel):
    """
    Map a mel-spectrogram [B, n_mels, T] to a waveform [B, 1, hop * T]. No noise input.

    Mels shorter than :func:`min_frames` are extended by repeating their last
    frame and the waveform is cropped back to ``hop * T`` samples.
    :param params: generator parameters
    :type params: ModelParams
    :param mel: MelSpectrogram or Tensor
    :rtype: Tensor
    """
    cfg = params.config
    x = _mel_values(mel)
    if x.channels != cfg.mel_channels:
        raise DimensionError('mel channel count does not match the generator', axis='channels',
                             expected=cfg.mel_channels, actual=x.channels)
    values, frames = extend_frames(x.data, cfg)
    if values.shape[2] != frames:
        x = Tensor(values)
    slope = cfg.leaky_slope
    update = params.training
    h = params[CONV_PRE](x, label=CONV_PRE, update_power=update)
    for stage in range(len(cfg.upsample_ratios)):
        name = upsample_name(stage)
        h = leaky_relu(h, slope)
        h = params[name](h, label=name, update_power=update)
        for block in range(len(cfg.resblock_dilations)):
            y = leaky_relu(h, slope)
            y = params[resblock_name(stage, block, 'dilated')](y, label=resblock_name(stage, block, 'dilated'))
            y = leaky_relu(y, slope)
            y = params[resblock_name(stage, block, 'pointwise')](y, label=resblock_name(stage, block, 'pointwise'))
            shortcut = resblock_name(stage, block, 'shortcut')
            skip = params[shortcut](h, label=shortcut) if shortcut in params else h
            h = elementwise_add(skip, y, label=resblock_name(stage, block, 'sum'))
    h = leaky_relu(h, slope)
    h = params[CONV_POST](h, label=CONV_POST, update_power=update)
    out = tanh(h, label='output')
    if out.time != cfg.hop * frames:
        out = crop_time(out, 0, cfg.hop * frames, label='trim')
    return out
