import dataclasses
import os

import numpy as np

from MelGAN.Algorithm.tensor import Tensor
from MelGAN.Preprocess.mel import MelConfig, MelSpectrogram
from MelGAN.Utils.errors import ConfigError, DataError


def _default_of(field):
    if field.default is not dataclasses.MISSING:
        return field.default
    if field.default_factory is not dataclasses.MISSING:
        return field.default_factory()
    raise ConfigError('field has no default to infer its type from', field=field.name)


def _encode(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ','.join(':'.join(str(v) for v in item) if isinstance(item, tuple) else str(item)
                        for item in value)
    return str(value)


def _decode(text, template, name):
    try:
        if isinstance(template, bool):
            if text.lower() not in ('true', 'false'):
                raise ValueError(text)
            return text.lower() == 'true'
        if isinstance(template, int):
            return int(text)
        if isinstance(template, float):
            return float(text)
        if isinstance(template, tuple):
            if text.strip() == '':
                return ()
            items = [item.strip() for item in text.split(',')]
            if template and isinstance(template[0], tuple):
                return tuple(tuple(int(v) for v in item.split(':')) for item in items)
            return tuple(int(item) for item in items)
        return text
    except ValueError:
        raise ConfigError('cannot parse ' + repr(text) + ' as ' + type(template).__name__, field=name)


def config_to_text(config):
    """
    Flat ``key=value`` form of a config dataclass, one key per line, sorted by key.
    :rtype: str
    """
    lines = ['# ' + type(config).__name__]
    for field in sorted(dataclasses.fields(config), key=lambda f: f.name):
        lines.append(field.name + '=' + _encode(getattr(config, field.name)))
    return '\n'.join(lines) + '\n'


def config_from_text(cls, text):
    """
    Parse :func:`config_to_text` output back into ``cls``; unknown keys are rejected.
    """
    fields = {f.name: f for f in dataclasses.fields(cls)}
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise ConfigError('line ' + str(number) + ' is not key=value: ' + repr(line))
        key, raw = line.split('=', 1)
        key = key.strip()
        if key not in fields:
            raise ConfigError('unknown key for ' + cls.__name__, field=key)
        values[key] = _decode(raw.strip(), _default_of(fields[key]), key)
    return cls(**values)


def save_config(config, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(config_to_text(config))


def load_config(cls, path):
    with open(path, 'r', encoding='utf-8') as f:
        return config_from_text(cls, f.read())


def save_mel(mel, path):
    """
    Store a mel-spectrogram as ``.npz`` with its frontend config embedded as text.
    :type mel: MelSpectrogram
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'wb') as f:
        np.savez(f, values=mel.values.data, config=np.array(config_to_text(mel.config)))


def load_mel(path):
    """
    :return: the stored mel-spectrogram with its config
    :rtype: MelSpectrogram
    """
    if not os.path.isfile(path):
        raise DataError('no such mel file: ' + str(path), path=path)
    try:
        with np.load(path, allow_pickle=False) as data:
            values = data['values']
            text = str(data['config'])
    except (KeyError, ValueError, OSError) as e:
        raise DataError('not a mel file: ' + str(path) + ' (' + str(e) + ')', path=path) from e
    config = config_from_text(MelConfig, text)
    if values.ndim == 2:
        values = values[None]
    return MelSpectrogram(Tensor(values), config)
