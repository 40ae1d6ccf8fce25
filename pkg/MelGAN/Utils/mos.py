import numpy as np
import pandas as pd
from scipy import stats

from MelGAN.Utils.errors import DataError

Z_95 = 1.96
MOS_COLUMNS = ['model', 'n', 'mean', 'std', 'halfwidth', 'ci_low', 'ci_high']


def z_value(confidence=0.95):
    if confidence == 0.95:
        return Z_95
    return float(stats.norm.ppf(0.5 + confidence / 2))


def mos_confidence(scores, confidence=0.95):
    """
    Per-model mean opinion score with a normal-approximation confidence interval,
    ``halfwidth = z * std / sqrt(n)`` using the sample standard deviation.
    :param scores: rows with ``model`` and ``score`` columns
    :type scores: pd.DataFrame
    :return: one row per model, columns ``MOS_COLUMNS``
    :rtype: pd.DataFrame
    """
    for column in ('model', 'score'):
        if column not in scores.columns:
            raise DataError('scores table lacks a ' + repr(column) + ' column')
    z = z_value(confidence)
    rows = []
    for model, group in scores.groupby('model', sort=True):
        values = pd.to_numeric(group['score'], errors='coerce').dropna().to_numpy(dtype=np.float64)
        if values.size == 0:
            raise DataError('model ' + str(model) + ' has no numeric scores')
        std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        halfwidth = z * std / np.sqrt(values.size)
        mean = float(values.mean())
        rows.append([model, int(values.size), mean, std, halfwidth, mean - halfwidth, mean + halfwidth])
    if not rows:
        raise DataError('scores table is empty')
    return pd.DataFrame(rows, columns=MOS_COLUMNS)


def format_mos(row):
    """``3.61 ±0.06``"""
    return '%.2f ±%.2f' % (row['mean'], row['halfwidth'])


def read_scores(path):
    try:
        return pd.read_csv(path)
    except FileNotFoundError as e:
        raise DataError('no such scores file: ' + str(path), path=path) from e
    except pd.errors.EmptyDataError as e:
        raise DataError('scores file is empty: ' + str(path), path=path) from e
