import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

THREADS_ENV = 'MELGAN_THREADS'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def setup_logging(verbose=False):
    level = logging.DEBUG if verbose else logging.INFO
    root = logging.getLogger('MelGAN')
    root.setLevel(level)
    if not any(isinstance(h, logging.StreamHandler) and not isinstance(h, logging.NullHandler)
               for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    return root


def max_threads():
    """
    Worker cap from the MELGAN_THREADS environment variable.
    :return: the cap, or the cpu count when unset
    :rtype: int
    """
    value = os.environ.get(THREADS_ENV)
    cpu = os.cpu_count() or 1
    if value is None or value.strip() == '':
        return cpu
    try:
        cap = int(value)
    except ValueError:
        logger.warning('Ignoring non-integer %s=%r', THREADS_ENV, value)
        return cpu
    return max(1, cap)


def resolve_threads(requested):
    cap = max_threads()
    if requested is None or requested <= 0:
        return cap
    return min(int(requested), cap)


def make_rng(seed, *stream):
    # Streams are keyed on (seed, *stream) so any position can be regenerated.
    return np.random.default_rng([int(seed)] + [int(s) for s in stream])
