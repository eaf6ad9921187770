# coding: utf-8
# vim:sw=4:ts=4:et:
"""Quasi-random loading paths and labeled datasets from the classical model."""
import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import qmc

from thermonet.classical import AmbientState, MaterialParams, integrate
from thermonet.const import (
    DATASET_FORMAT_VERSION, EXTRAPOLATION_BOUNDS_DIAG,
    EXTRAPOLATION_BOUNDS_OFFDIAG, MAX_REDRAWS, MAX_SKIP_RATE,
    META_SUFFIX, MSG_BAD_VALUE, MSG_REDRAW, MSG_SHAPE, MSG_SKIP_RATE,
    MSG_UNKNOWN_KEY, PATH_DEFAULTS, VALIDATION_SUFFIX)
from thermonet.exceptions import (
    ConfigError, DataError, GenerationError, ThermoNetError)
from thermonet.kinematics import (
    IDENTITY, frobenius_norm, green_strain, invariants,
    sym_to_voigt, voigt_to_sym)
from thermonet.utils import (
    _check_version, _read_json, _read_jsonl, _save_json, _save_jsonl)

_LOGGER = logging.getLogger(__name__)

DIMENSION = 9


@dataclass
class PathConfig(object):
    """Loading path and dataset generation settings."""

    bounds_diag: list = field(
        default_factory=lambda: list(PATH_DEFAULTS['bounds_diag']))
    bounds_offdiag: list = field(
        default_factory=lambda: list(PATH_DEFAULTS['bounds_offdiag']))
    points_P: int = PATH_DEFAULTS['points_P']
    steps_per_segment: int = PATH_DEFAULTS['steps_per_segment']
    dt: float = PATH_DEFAULTS['dt']
    rate_min: float = PATH_DEFAULTS['rate_min']
    rate_max: float = PATH_DEFAULTS['rate_max']
    ambient_grid: dict = field(
        default_factory=lambda: dict(PATH_DEFAULTS['ambient_grid']))
    sequence_count: int = PATH_DEFAULTS['sequence_count']
    validation_count: int = PATH_DEFAULTS['validation_count']
    halton_seed_offset: int = PATH_DEFAULTS['halton_seed_offset']
    extrapolation: bool = PATH_DEFAULTS['extrapolation']

    def __post_init__(self):
        if not self.rate_min < self.rate_max:
            raise ConfigError(MSG_BAD_VALUE.format(
                'rate_min/rate_max', (self.rate_min, self.rate_max)))
        for name in ('points_P', 'steps_per_segment'):
            if int(getattr(self, name)) < 1:
                raise ConfigError(MSG_BAD_VALUE.format(
                    name, getattr(self, name)))
        if not self.dt > 0:
            raise ConfigError(MSG_BAD_VALUE.format('dt', self.dt))
        if self.sequence_count < 0 or self.validation_count < 0:
            raise ConfigError(MSG_BAD_VALUE.format(
                'sequence_count', self.sequence_count))
        for bounds in (self.bounds_diag, self.bounds_offdiag):
            if len(bounds) != 2 or not bounds[0] <= bounds[1]:
                raise ConfigError(MSG_BAD_VALUE.format('bounds', bounds))
        grid = dict(PATH_DEFAULTS['ambient_grid'])
        unknown = sorted(set(self.ambient_grid) - set(grid))
        if unknown:
            raise ConfigError(MSG_UNKNOWN_KEY.format('ambient_grid', unknown))
        grid.update(self.ambient_grid)
        self.ambient_grid = grid
        if self.extrapolation:
            self.bounds_diag = list(EXTRAPOLATION_BOUNDS_DIAG)
            self.bounds_offdiag = list(EXTRAPOLATION_BOUNDS_OFFDIAG)

    @classmethod
    def from_dict(cls, data):
        """Build the config from a key-value block."""
        known = set(item.name for item in fields(cls))
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(MSG_UNKNOWN_KEY.format('paths', unknown))
        return cls(**data)

    def to_dict(self):
        """Return the config as a plain dict."""
        return asdict(self)

    @property
    def lower(self):
        """Return the lower bound of each row-major component."""
        return np.array([self.bounds_diag[0] if i == j
                         else self.bounds_offdiag[0]
                         for i in range(3) for j in range(3)])

    @property
    def upper(self):
        """Return the upper bound of each row-major component."""
        return np.array([self.bounds_diag[1] if i == j
                         else self.bounds_offdiag[1]
                         for i in range(3) for j in range(3)])

    def ambient_states(self):
        """Return the cartesian product of the ambient grid."""
        grid = self.ambient_grid
        return [AmbientState(w_w=w_w, v_np=v_np, v_f=v_f, T=T)
                for w_w, (v_np, v_f), T in itertools.product(
                    grid['w_w'], grid['materials'], grid['T'])]


# pylint: disable=too-many-instance-attributes
@dataclass
class LoadedSequence(object):
    """One loading path with its labels."""

    F: np.ndarray
    dt: np.ndarray
    ambient: AmbientState
    sigma: np.ndarray = None
    sigma_undamaged: np.ndarray = None
    d: np.ndarray = None
    index: int = 0
    rate: float = None

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float).reshape(-1, 3, 3)
        steps = len(self.F)
        self.dt = np.broadcast_to(
            np.asarray(self.dt, dtype=float), (steps,)).copy()
        if self.sigma is not None:
            self.sigma = _stress_array(self.sigma, steps)
        if self.sigma_undamaged is None:
            self.sigma_undamaged = self.sigma
        else:
            self.sigma_undamaged = _stress_array(self.sigma_undamaged, steps)
        if self.d is None:
            self.d = np.zeros(steps)
        self.d = np.asarray(self.d, dtype=float)
        if self.d.shape != (steps,):
            raise DataError(MSG_SHAPE.format((steps,), self.d.shape))

    def __len__(self):
        return len(self.F)

    @property
    def is_labeled(self):
        """Return whether stress labels are present."""
        return self.sigma_undamaged is not None

    def to_record(self):
        """Return the JSON-lines record of the sequence."""
        record = {
            'format_version': DATASET_FORMAT_VERSION,
            'index': int(self.index),
            'ambient': self.ambient.to_dict(),
            'F': self.F.reshape(-1, 9).tolist(),
            'dt': self.dt.tolist(),
            'd': self.d.tolist(),
        }
        if self.rate is not None:
            record['rate'] = float(self.rate)
        if self.sigma is not None:
            record['sigma'] = sym_to_voigt(self.sigma).tolist()
            record['sigma_undamaged'] = \
                sym_to_voigt(self.sigma_undamaged).tolist()
        return record

    @classmethod
    def from_record(cls, record):
        """Build a sequence from a JSON-lines record."""
        _check_version(record.get('format_version', DATASET_FORMAT_VERSION),
                       DATASET_FORMAT_VERSION, 'dataset')
        try:
            return cls(F=record['F'], dt=record['dt'],
                       ambient=AmbientState.from_dict(record['ambient']),
                       sigma=record.get('sigma'),
                       sigma_undamaged=record.get('sigma_undamaged'),
                       d=record.get('d'), index=record.get('index', 0),
                       rate=record.get('rate'))
        except (KeyError, TypeError, ValueError) as err:
            raise DataError('Malformed sequence record: {0}'.format(err))


def _stress_array(values, steps):
    values = np.asarray(values, dtype=float)
    if values.shape == (steps, 6):
        return voigt_to_sym(values)
    if values.shape == (steps, 3, 3):
        return values
    raise DataError(MSG_SHAPE.format((steps, 6), values.shape))


def halton(index, base):
    """Return the radical inverse of index in the given base.

    Digits are reversed in integer arithmetic so the result is the
    correctly rounded quotient of two integers.
    """
    if index < 1 or base < 2:
        raise ValueError('halton needs index >= 1 and base >= 2')
    reversed_digits, denominator = 0, 1
    while index > 0:
        index, digit = divmod(index, base)
        reversed_digits = reversed_digits * base + digit
        denominator *= base
    return reversed_digits / denominator


def _stream_start(config, sequence_index, attempt=0, validation=False):
    """Return the first Halton index drawn for a sequence attempt."""
    block = config.points_P * MAX_REDRAWS
    start = 1 + config.halton_seed_offset + sequence_index * block
    if validation:
        start += config.sequence_count * block
    return start + attempt * config.points_P


def sample_targets(config, sequence_index, attempt=0, validation=False):
    """Return points_P target deformation gradients as 9-vectors."""
    engine = qmc.Halton(d=DIMENSION, scramble=False)
    engine.fast_forward(_stream_start(config, sequence_index, attempt,
                                      validation))
    unit = engine.random(config.points_P)
    lower, upper = config.lower, config.upper
    targets = lower + (upper - lower) * unit
    return [np.clip(row, lower, upper) for row in targets]


def build_path(targets, config):
    """Return frames interpolating linearly from I through the targets."""
    if len(targets) == 0:
        raise ValueError('build_path needs at least one target')
    points = [IDENTITY.reshape(9)] + [np.asarray(t, dtype=float).reshape(9)
                                      for t in targets]
    steps = config.steps_per_segment
    frames = [points[0]]
    for start, end in zip(points[:-1], points[1:]):
        for k in range(1, steps + 1):
            frames.append(start + (end - start) * (k / steps))
        frames[-1] = end
    return np.array(frames).reshape(-1, 3, 3)


def effective_rate(path, dt):
    """Return the largest frame to frame change of ||E||_F per second."""
    path = np.asarray(path, dtype=float)
    if len(path) < 2:
        raise ValueError('effective_rate needs at least two frames')
    norms = frobenius_norm(green_strain(path))
    return float(np.max(np.abs(np.diff(norms))) / dt)


def _draw_path(config, sequence_index, validation):
    """Return (path, rate) of the first path inside the rate window."""
    for attempt in range(MAX_REDRAWS):
        targets = sample_targets(config, sequence_index, attempt, validation)
        path = build_path(targets, config)
        rate = effective_rate(path, config.dt)
        if config.rate_min < rate < config.rate_max:
            return path, rate
        _LOGGER.debug("Sequence %d attempt %d rejected (rate %.3e)",
                      sequence_index, attempt, rate)
    raise GenerationError(MSG_REDRAW.format(MAX_REDRAWS))


def _generate_one(job):
    """Generate one labeled sequence; returns (index, record, reason)."""
    config_data, params_data, index, validation = job
    config = PathConfig.from_dict(config_data)
    params = MaterialParams.from_dict(params_data)
    states = config.ambient_states()
    ambient = states[index % len(states)]
    try:
        path, rate = _draw_path(config, index, validation)
        dts = np.full(len(path), config.dt)
        sigma, sigma_und, damage = integrate(path, dts, ambient, params)
    except (ThermoNetError, np.linalg.LinAlgError, ValueError,
            FloatingPointError) as err:
        return index, None, '{0}: {1}'.format(type(err).__name__, err)
    sequence = LoadedSequence(F=path, dt=dts, ambient=ambient, sigma=sigma,
                              sigma_undamaged=sigma_und, d=damage,
                              index=index, rate=rate)
    return index, sequence.to_record(), None


def generate_dataset(config, params, validation=False, threads=None):
    """Generate the labeled training (or validation) sequences.

    Sequences come back ordered by index whatever the worker count.
    """
    count = config.validation_count if validation else config.sequence_count
    jobs = [(config.to_dict(), params.to_dict(), index, validation)
            for index in range(count)]
    if threads == 1 or count < 2:
        results = [_generate_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(_generate_one, jobs))

    dataset, skipped = [], 0
    for index, record, reason in results:
        if record is None:
            skipped += 1
            _LOGGER.warning("Skipping sequence %d: %s", index, reason)
            continue
        dataset.append(LoadedSequence.from_record(record))
    if count and skipped > MAX_SKIP_RATE * count:
        _LOGGER.error(MSG_SKIP_RATE.format(skipped, count))
        raise GenerationError(MSG_SKIP_RATE.format(skipped, count))
    rates = [seq.rate for seq in dataset]
    _LOGGER.info("Generated %d sequences (%d skipped), rate %.3e..%.3e",
                 len(dataset), skipped, min(rates or [0.0]),
                 max(rates or [0.0]))
    return dataset


def feature_ranges(dataset, frame, ambient_features):
    """Return (names, minima, maxima, stress_scale) over a dataset.

    Features are the invariants of C, the time increment and the named
    ambient features, in that order.
    """
    names = ['I{0}'.format(k + 1) for k in range(frame.invariant_count)]
    names += ['dt'] + list(ambient_features)
    rows = []
    for seq in dataset:
        C = np.einsum('tki,tkj->tij', seq.F, seq.F)
        extra = np.tile([seq.ambient.features(ambient_features)],
                        (len(seq), 1))
        rows.append(np.column_stack([invariants(C, frame), seq.dt, extra]))
    if not rows:
        raise DataError('Cannot compute feature ranges of an empty dataset.')
    table = np.concatenate(rows)
    scale = max((float(np.max(np.abs(seq.sigma_undamaged)))
                 for seq in dataset if seq.is_labeled), default=0.0)
    return names, table.min(axis=0), table.max(axis=0), scale


def meta_path(filename):
    """Return the sidecar file name of a dataset."""
    return os.path.splitext(filename)[0] + META_SUFFIX


def validation_path(filename):
    """Return the validation file name next to a training file."""
    stem, ext = os.path.splitext(filename)
    return stem + VALIDATION_SUFFIX + (ext or '.jsonl')


def save_dataset(dataset, filename, frame=None,
                 ambient_features=('w_w', 'v_np', 'v_f', 'T'), config=None):
    """Write the dataset as JSON lines plus the metadata sidecar."""
    _save_jsonl((seq.to_record() for seq in dataset), filename)
    frame = frame or MaterialParams().frame
    meta = {'format_version': DATASET_FORMAT_VERSION,
            'sequences': len(dataset)}
    if dataset:
        names, lower, upper, scale = feature_ranges(dataset, frame,
                                                    ambient_features)
        meta.update({'features': names, 'minima': lower.tolist(),
                     'maxima': upper.tolist(), 'stress_scale': scale})
    if config is not None:
        meta['config'] = config.to_dict()
    _save_json(meta, meta_path(filename))
    _LOGGER.info("Saved %d sequences to %s", len(dataset), filename)
    return True


def load_dataset(filename):
    """Read sequences written by save_dataset or supplied externally."""
    dataset = [LoadedSequence.from_record(record)
               for record in _read_jsonl(filename)]
    _LOGGER.debug("Loaded %d sequences from %s", len(dataset), filename)
    return dataset


def load_meta(filename):
    """Read the metadata sidecar of a dataset."""
    return _read_json(meta_path(filename))


def split_dataset(dataset, n_train):
    """Return the first n_train sequences and the remainder."""
    if not 0 <= n_train <= len(dataset):
        raise ValueError(MSG_BAD_VALUE.format('n_train', n_train))
    return list(dataset[:n_train]), list(dataset[n_train:])
