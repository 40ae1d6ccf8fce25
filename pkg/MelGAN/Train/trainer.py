import logging
import os
import time
from dataclasses import dataclass

import pandas as pd
from tqdm import tqdm

from MelGAN.Algorithm.optim import AdamState, adam_step
from MelGAN.Algorithm.tensor import Graph, backward, frozen, no_graph
from MelGAN.IO.IOUtil import save_config
from MelGAN.IO.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from MelGAN.Model.discriminator import block_receptive_field, build_discriminator, discriminator_forward
from MelGAN.Model.generator import build_generator, generator_forward
from MelGAN.Preprocess.dataset import prefetched
from MelGAN.Preprocess.mel import MelConfig
from MelGAN.Train.config import TrainConfig
from MelGAN.Train.loss import (discriminator_loss, feature_matching_loss, generator_adversarial_loss,
                               generator_total_loss)
from MelGAN.Utils.errors import ConfigError

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ['step', 'd_loss', 'g_adv', 'g_fm', 'wall_ms']
LOSS_COLUMNS = ['d_loss', 'g_adv', 'g_fm']
LATEST = 'latest.mgk'


def checkpoint_name(step):
    return 'ckpt_' + str(step).zfill(6) + '.mgk'


def check_compatible(gen_config, disc_config, train_config, mel_config):
    """Cross-config constraints that no single config can check on its own."""
    if gen_config.mel_channels != mel_config.n_mels:
        raise ConfigError('generator expects ' + str(gen_config.mel_channels) + ' mel channels, frontend gives '
                          + str(mel_config.n_mels), field='mel_channels')
    if gen_config.hop != mel_config.hop:
        raise ConfigError('generator hop ' + str(gen_config.hop) + ' differs from mel hop ' + str(mel_config.hop),
                          field='hop')
    field = block_receptive_field(disc_config)
    if train_config.window_samples < field:
        raise ConfigError('window shorter than the discriminator receptive field (' + str(field) + ' samples)',
                          field='window_samples')


@dataclass
class TrainState:
    """
    Mutable training state: both networks, their Adam moments and the number of completed steps.
    """
    generator: object
    discriminator: object
    g_optim: AdamState
    d_optim: AdamState
    config: TrainConfig
    mel_config: MelConfig
    step: int = 0

    @classmethod
    def initial(cls, gen_config, disc_config, train_config=TrainConfig(), mel_config=MelConfig()):
        check_compatible(gen_config, disc_config, train_config, mel_config)
        return cls(build_generator(gen_config, train_config.seed),
                   build_discriminator(disc_config, train_config.seed),
                   AdamState(), AdamState(), train_config, mel_config)

    @classmethod
    def from_checkpoint(cls, checkpoint, train_config=None):
        """Resume from a full checkpoint; ``train_config`` overrides the stored one (e.g. more steps)."""
        if checkpoint.discriminator is None or checkpoint.g_optim is None or checkpoint.d_optim is None:
            raise ConfigError('checkpoint holds no discriminator or optimizer state, cannot resume')
        config = train_config or checkpoint.train_config or TrainConfig()
        check_compatible(checkpoint.generator.config, checkpoint.discriminator.config, config,
                         checkpoint.mel_config)
        return cls(checkpoint.generator, checkpoint.discriminator, checkpoint.g_optim, checkpoint.d_optim,
                   config, checkpoint.mel_config, checkpoint.step)

    def to_checkpoint(self):
        return Checkpoint(self.generator, self.discriminator, self.g_optim, self.d_optim,
                          self.mel_config, self.config, self.step)


def _discriminator_step(state, batch):
    config = state.config
    disc = state.discriminator
    with no_graph():
        fake = generator_forward(state.generator, batch.mel)
    disc.training = True
    try:
        with Graph() as graph:
            real_out = discriminator_forward(disc, batch.audio)
            fake_out = discriminator_forward(disc, fake)
            d_loss = discriminator_loss(real_out, fake_out)
    finally:
        disc.training = False
    graph.check_finite(d_loss)
    disc.zero_grad()
    backward(d_loss, graph)
    adam_step(disc.named_parameters(), state.d_optim, config.lr, config.beta1, config.beta2)
    return d_loss.item()


def _generator_step(state, batch):
    config = state.config
    gen, disc = state.generator, state.discriminator
    with no_graph():
        real_features = [features for _, features in discriminator_forward(disc, batch.audio)]
    with frozen(disc.parameters()), Graph() as graph:
        fake = generator_forward(gen, batch.mel)
        fake_out = discriminator_forward(disc, fake)
        g_adv = generator_adversarial_loss(fake_out)
        g_fm = feature_matching_loss(real_features, [features for _, features in fake_out])
        g_total = generator_total_loss(g_adv, g_fm, config.lambda_fm)
    graph.check_finite(g_adv, g_fm, g_total)
    gen.zero_grad()
    backward(g_total, graph)
    adam_step(gen.named_parameters(), state.g_optim, config.lr, config.beta1, config.beta2)
    return g_adv.item(), g_fm.item()


def train_step(batch, state):
    """
    One discriminator update followed by one generator update.

    The discriminator sees generated audio as a constant; the generator step
    freezes the discriminator so its parameters receive no gradient.
    :param batch: audio windows and their mels
    :type batch: Batch
    :param state: updated in place
    :type state: TrainState
    :return: ``{step, d_loss, g_adv, g_fm, wall_ms}``
    :rtype: dict
    :raises NonFiniteError: naming the first non-finite tensor
    """
    start = time.perf_counter()
    d_loss = _discriminator_step(state, batch)
    g_adv, g_fm = _generator_step(state, batch)
    state.step += 1
    return {'step': state.step, 'd_loss': d_loss, 'g_adv': g_adv, 'g_fm': g_fm,
            'wall_ms': (time.perf_counter() - start) * 1000.0}


class MetricsLog:
    """Append-only CSV of per-step metrics."""

    def __init__(self, path):
        self.path = path

    def append(self, row):
        frame = pd.DataFrame([row], columns=METRIC_COLUMNS)
        exists = os.path.isfile(self.path)
        frame.to_csv(self.path, mode='a', header=not exists, index=False, float_format='%.9g')

    def truncate(self, step):
        """Drop rows past ``step``, left over from a run that stopped after its last checkpoint."""
        if not os.path.isfile(self.path):
            return
        frame = self.read()
        kept = frame[frame['step'] <= step]
        if len(kept) != len(frame):
            logger.info('Dropping %d metric rows past step %d', len(frame) - len(kept), step)
            kept.to_csv(self.path, index=False, float_format='%.9g')

    def read(self):
        return pd.read_csv(self.path)


def write_run_configs(state, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    save_config(state.mel_config, os.path.join(out_dir, 'mel.cfg'))
    save_config(state.generator.config, os.path.join(out_dir, 'generator.cfg'))
    save_config(state.discriminator.config, os.path.join(out_dir, 'discriminator.cfg'))
    save_config(state.config, os.path.join(out_dir, 'train.cfg'))


def run_header(state):
    c = state.config
    return ('lr=' + str(c.lr) + ' beta1=' + str(c.beta1) + ' beta2=' + str(c.beta2) + ' batch='
            + str(c.batch_size) + ' lambda_fm=' + str(c.lambda_fm) + ' window=' + str(c.window_samples)
            + ' seed=' + str(c.seed))


def train(state, dataset, out_dir, progress=True):
    """
    Train until ``state.config.steps`` steps are done, writing metrics and checkpoints under ``out_dir``.
    :param state: fresh or resumed state
    :type state: TrainState
    :param dataset: window source seeded with the run seed
    :type dataset: WindowDataset
    :param out_dir: output directory
    :type out_dir: str
    :return: path of the final checkpoint
    :rtype: str
    """
    config = state.config
    write_run_configs(state, out_dir)
    metrics = MetricsLog(os.path.join(out_dir, 'metrics.csv'))
    metrics.truncate(state.step)
    logger.info('Training: %s', run_header(state))
    latest = os.path.join(out_dir, LATEST)
    if state.step >= config.steps:
        logger.info('Nothing to do: %d of %d steps already done', state.step, config.steps)
        save_checkpoint(state.to_checkpoint(), latest)
        return latest
    stream = prefetched(dataset.batches(config.batch_size, state.step, config.steps), config.prefetch)
    with tqdm(total=config.steps, initial=state.step, desc='Training', disable=not progress) as bar:
        for batch in stream:
            row = train_step(batch, state)
            metrics.append(row)
            bar.set_postfix(d=round(row['d_loss'], 3), adv=round(row['g_adv'], 3), fm=round(row['g_fm'], 3))
            bar.update(1)
            if config.checkpoint_every and state.step % config.checkpoint_every == 0:
                save_checkpoint(state.to_checkpoint(), os.path.join(out_dir, checkpoint_name(state.step)))
    save_checkpoint(state.to_checkpoint(), latest)
    return latest


def resume(path, train_config=None):
    return TrainState.from_checkpoint(load_checkpoint(path), train_config)
