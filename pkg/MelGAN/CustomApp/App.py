"""
``melgan`` command line: train, synth, mel, bench, validate-arch, count-params, mos-ci.

Exit codes: 0 ok, 1 usage, 2 I/O, 3 validation failure. Failures print one
line ``error: <ErrorClass>: <message>`` on stderr.
"""
import argparse
import json
import logging
import os
import sys

from MelGAN.IO.IOUtil import load_config, load_mel, save_mel
from MelGAN.IO.read_wav import read_wav, write_wav
from MelGAN.Inference.bench import benchmark
from MelGAN.Inference.compiled import CompiledGenerator
from MelGAN.Model.config import DiscriminatorConfig, GeneratorConfig
from MelGAN.Model.discriminator import block_plan
from MelGAN.Model.generator import build_generator, generator_plan
from MelGAN.Model.validate import plan_parameter_count, validate_checkerboard_free
from MelGAN.Preprocess.dataset import WindowDataset
from MelGAN.Preprocess.mel import MelConfig, mel_spectrogram
from MelGAN.Train.config import TrainConfig
from MelGAN.Train.trainer import TrainState, resume, run_header, train
from MelGAN.Utils.errors import CheckpointError, DataError, MelGANError
from MelGAN.Utils.mos import format_mos, mos_confidence, read_scores
from MelGAN.Utils.utils import setup_logging
from MelGAN.Vocoder import Vocoder

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INVALID = 3


class UsageError(Exception):
    pass


class ValidationFailure(MelGANError):
    """A check ran to completion and reported failure."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(',') if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma-separated integers, got ' + repr(text))


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _generator_config(args):
    if getattr(args, 'generator_config', None):
        return load_config(GeneratorConfig, args.generator_config)
    return GeneratorConfig()


def cmd_train(args):
    if not os.path.isdir(args.data):
        raise DataError('data directory does not exist: ' + args.data, path=args.data)
    mel_config = load_config(MelConfig, args.mel_config) if args.mel_config else MelConfig()
    gen_config = _generator_config(args)
    disc_config = (load_config(DiscriminatorConfig, args.discriminator_config) if args.discriminator_config
                   else DiscriminatorConfig())
    train_config = TrainConfig(batch_size=args.batch, window_samples=args.window, lr=args.lr, beta1=args.beta1,
                               beta2=args.beta2, lambda_fm=args.lambda_fm, seed=args.seed, steps=args.steps,
                               checkpoint_every=args.checkpoint_every, prefetch=args.prefetch)
    if args.resume:
        state = resume(args.resume, train_config)
    else:
        state = TrainState.initial(gen_config, disc_config, train_config, mel_config)
    dataset = WindowDataset.from_directory(args.data, train_config.window_samples, train_config.seed,
                                           state.mel_config)
    if not args.json:
        print('run: ' + run_header(state))
    path = train(state, dataset, args.out, progress=not args.json and not args.quiet)
    _emit(args, {'checkpoint': path, 'steps': state.step},
          'trained ' + str(state.step) + ' steps, checkpoint ' + path)
    return EXIT_OK


def cmd_synth(args):
    vocoder = Vocoder.from_checkpoint(args.ckpt)
    if args.wav:
        clip = read_wav(args.wav)
        out = vocoder.resynthesize(clip, args.threads)
    else:
        out = vocoder.synthesize(load_mel(args.mel), args.threads)
    write_wav(args.out, out)
    _emit(args, {'out': args.out, 'samples': len(out), 'sample_rate': out.sample_rate},
          'wrote ' + str(len(out)) + ' samples to ' + args.out)
    return EXIT_OK


def cmd_mel(args):
    mel_config = load_config(MelConfig, args.mel_config) if args.mel_config else MelConfig()
    mel = mel_spectrogram(read_wav(args.wav), mel_config)
    save_mel(mel, args.out)
    _emit(args, {'out': args.out, 'frames': mel.frames, 'n_mels': mel.n_mels},
          'wrote ' + str(mel.n_mels) + 'x' + str(mel.frames) + ' mel to ' + args.out)
    return EXIT_OK


def cmd_bench(args):
    if args.ckpt:
        vocoder = Vocoder.from_checkpoint(args.ckpt)
        params, sample_rate = vocoder.generator, vocoder.mel_config.sample_rate
    else:
        params, sample_rate = build_generator(_generator_config(args), args.seed), MelConfig().sample_rate
    gen = CompiledGenerator.compile(params, args.frames, sample_rate)
    report = benchmark(gen, args.frames, args.repeats, args.threads, args.warmup, progress=not args.json)
    _emit(args, report.to_dict(), report.table())
    return EXIT_OK


def cmd_validate_arch(args):
    cfg = _generator_config(args)
    overrides = {}
    if args.ratios:
        overrides['upsample_ratios'] = args.ratios
        overrides['hop'] = 1
        for r in args.ratios:
            overrides['hop'] *= r
    if args.kernels:
        overrides['upsample_kernel_sizes'] = args.kernels
    if args.dilations is not None:
        overrides['resblock_dilations'] = args.dilations
    if args.resblock_kernel:
        overrides['resblock_kernel'] = args.resblock_kernel
    if overrides:
        values = {name: getattr(cfg, name) for name in cfg.__dataclass_fields__}
        values.update(overrides)
        cfg = GeneratorConfig(**values)
    report = validate_checkerboard_free(cfg)
    lines = ['PASS' if report.passed else 'FAIL'] + ['  ' + str(v) for v in report.violations]
    lines.append('receptive field per stack: ' + str(report.receptive_field))
    _emit(args, report.to_dict(), '\n'.join(lines))
    if not report.passed:
        raise ValidationFailure('; '.join(report.rules()))
    return EXIT_OK


def cmd_count_params(args):
    cfg = _generator_config(args)
    disc = DiscriminatorConfig()
    generator = plan_parameter_count([spec for _, spec in generator_plan(cfg)], norm=cfg.weight_norm)
    discriminator = disc.num_scales * plan_parameter_count(block_plan(disc), norm=disc.norm == 'weight')
    payload = {'generator': generator, 'generator_millions': round(generator / 1e6, 2),
               'discriminator': discriminator}
    _emit(args, payload, 'generator      ' + format(generator, ',') + ' (' + '%.2fM' % (generator / 1e6)
          + ')\ndiscriminator  ' + format(discriminator, ','))
    return EXIT_OK


def cmd_mos_ci(args):
    table = mos_confidence(read_scores(args.scores))
    records = table.to_dict(orient='records')
    text = '\n'.join(str(r['model']) + '  ' + format_mos(r) + '  (n=' + str(r['n']) + ')' for r in records)
    _emit(args, [dict(r, mean=round(r['mean'], 6), std=round(r['std'], 6), halfwidth=round(r['halfwidth'], 6),
                      ci_low=round(r['ci_low'], 6), ci_high=round(r['ci_high'], 6)) for r in records], text)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog='melgan', description='Mel-spectrogram inversion with a GAN vocoder.')
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)
    commands.required = True

    def command(name, handler, help_text):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('--json', action='store_true', help='machine-readable output')
        sub.set_defaults(handler=handler)
        return sub

    sub = command('train', cmd_train, 'train a generator/discriminator pair')
    sub.add_argument('--data', required=True)
    sub.add_argument('--out', required=True)
    sub.add_argument('--steps', type=int, default=TrainConfig.steps)
    sub.add_argument('--seed', type=int, default=TrainConfig.seed)
    sub.add_argument('--batch', type=int, default=TrainConfig.batch_size)
    sub.add_argument('--window', type=int, default=TrainConfig.window_samples)
    sub.add_argument('--lr', type=float, default=TrainConfig.lr)
    sub.add_argument('--beta1', type=float, default=TrainConfig.beta1)
    sub.add_argument('--beta2', type=float, default=TrainConfig.beta2)
    sub.add_argument('--lambda-fm', type=float, default=TrainConfig.lambda_fm)
    sub.add_argument('--checkpoint-every', type=int, default=TrainConfig.checkpoint_every)
    sub.add_argument('--prefetch', type=int, default=TrainConfig.prefetch)
    sub.add_argument('--resume', help='checkpoint to continue from')
    sub.add_argument('--mel-config')
    sub.add_argument('--generator-config')
    sub.add_argument('--discriminator-config')
    sub.add_argument('--quiet', action='store_true', help='no progress bar')

    sub = command('synth', cmd_synth, 'invert a mel file or copy-synthesize a wav')
    sub.add_argument('--ckpt', required=True)
    source = sub.add_mutually_exclusive_group(required=True)
    source.add_argument('--mel')
    source.add_argument('--wav')
    sub.add_argument('--out', required=True)
    sub.add_argument('--threads', type=int, default=1)

    sub = command('mel', cmd_mel, 'extract a log-mel spectrogram')
    sub.add_argument('--wav', required=True)
    sub.add_argument('--out', required=True)
    sub.add_argument('--mel-config')

    sub = command('bench', cmd_bench, 'measure compiled synthesis throughput')
    sub.add_argument('--ckpt')
    sub.add_argument('--generator-config')
    sub.add_argument('--frames', type=int, default=256)
    sub.add_argument('--repeats', type=int, default=5)
    sub.add_argument('--warmup', type=int, default=1)
    sub.add_argument('--threads', type=int, default=1)
    sub.add_argument('--seed', type=int, default=0)

    sub = command('validate-arch', cmd_validate_arch, 'check the artifact-avoidance layout rules')
    sub.add_argument('--generator-config')
    sub.add_argument('--ratios', type=_int_list)
    sub.add_argument('--kernels', type=_int_list)
    sub.add_argument('--dilations', type=_int_list)
    sub.add_argument('--resblock-kernel', type=int)

    sub = command('count-params', cmd_count_params, 'count learned parameters')
    sub.add_argument('--generator-config')

    sub = command('mos-ci', cmd_mos_ci, 'mean opinion scores with 95% confidence intervals')
    sub.add_argument('--scores', required=True, help='CSV with model and score columns')
    return parser


def exit_code_for(error):
    if isinstance(error, UsageError):
        return EXIT_USAGE
    if isinstance(error, (CheckpointError, DataError, OSError)):
        return EXIT_IO
    return EXIT_INVALID


def _fail(error):
    message = str(error).replace('\n', ' ')
    print('error: ' + type(error).__name__ + ': ' + message, file=sys.stderr)
    return exit_code_for(error)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        return _fail(e)
    setup_logging(args.verbose)
    try:
        return args.handler(args)
    except (MelGANError, OSError, ValueError) as e:
        logger.debug('command failed', exc_info=True)
        return _fail(e)


if __name__ == '__main__':
    sys.exit(main())
