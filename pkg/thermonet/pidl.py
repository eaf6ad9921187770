# coding: utf-8
# vim:sw=4:ts=4:et:
"""Physics-informed recurrent constitutive model.

An LSTM encodes the loading history, a dense head maps the hidden state
to internal variables z and a second head maps (z, invariants of C) to a
free energy psi.  Stress and dissipation follow from derivatives of psi:

    S = 2 sum_a dpsi/dI_a dI_a/dC,  sigma = J^-1 F S F^T,
    D = -sum_a dpsi/dz_a dz_a/dt.
"""
import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import torch

from thermonet.const import (
    CHECKPOINT_FORMAT_VERSION, ISOTROPIC, MODEL_DEFAULTS, MSG_BAD_VALUE,
    MSG_DAMAGE_RANGE, MSG_NON_FINITE, MSG_SYMMETRY_MISMATCH, MSG_UNFITTED,
    MSG_UNKNOWN_KEY, SYMMETRY_CLASSES)
from thermonet.exceptions import (
    ConfigError, DataError, EvaluationError, InvalidInputError, UsageError)
from thermonet.generic import ConstitutiveModel
from thermonet.kinematics import (
    VOIGT_INDEX, VOIGT_LABELS, FiberFrame, identity_invariants,
    invariant_derivatives, invariants, right_cauchy_green)
from thermonet.neural import (
    DTYPE, DenseNet, LSTMStack, clamp_non_negative, differentiate,
    init_parameters)
from thermonet.pathgen import feature_ranges
from thermonet.utils import _check_version, _ensure_parent, _exists_file

_LOGGER = logging.getLogger(__name__)

# below this half-range a feature is treated as constant
_DEGENERATE_RANGE = 1e-14


# pylint: disable=too-many-instance-attributes
@dataclass
class PIDLConfig(object):
    """Architecture of the physics-informed model."""

    n_internal: int = MODEL_DEFAULTS['n_internal']
    symmetry: str = MODEL_DEFAULTS['symmetry']
    lstm_width: int = MODEL_DEFAULTS['lstm_width']
    lstm_layers: int = MODEL_DEFAULTS['lstm_layers']
    znn_widths: list = field(
        default_factory=lambda: list(MODEL_DEFAULTS['znn_widths']))
    psi_widths: list = field(
        default_factory=lambda: list(MODEL_DEFAULTS['psi_widths']))
    ambient_features: list = field(
        default_factory=lambda: list(MODEL_DEFAULTS['ambient_features']))
    fiber_a0: list = field(
        default_factory=lambda: list(MODEL_DEFAULTS['fiber_a0']))
    fiber_g0: list = field(
        default_factory=lambda: list(MODEL_DEFAULTS['fiber_g0']))

    def __post_init__(self):
        if int(self.n_internal) < 1:
            raise ConfigError(MSG_BAD_VALUE.format('n_internal',
                                                   self.n_internal))
        if self.symmetry not in SYMMETRY_CLASSES:
            raise ConfigError(MSG_BAD_VALUE.format('symmetry', self.symmetry))
        widths = [self.lstm_width, self.lstm_layers] + \
            list(self.znn_widths) + list(self.psi_widths)
        if any(int(width) < 1 for width in widths):
            raise ConfigError(MSG_BAD_VALUE.format('widths', widths))
        for name in self.ambient_features:
            if name not in ('w_w', 'v_np', 'v_f', 'T'):
                raise ConfigError(MSG_BAD_VALUE.format('ambient_features',
                                                       name))

    @classmethod
    def from_dict(cls, data):
        """Build the config from a key-value block."""
        known = set(item.name for item in fields(cls))
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(MSG_UNKNOWN_KEY.format('model', unknown))
        return cls(**data)

    def to_dict(self):
        """Return the config as a plain dict."""
        return asdict(self)

    @property
    def frame(self):
        """Return the fiber frame of the symmetry class."""
        if self.symmetry == ISOTROPIC:
            return FiberFrame()
        return FiberFrame(self.fiber_a0, self.fiber_g0)

    @property
    def feature_names(self):
        """Return the LSTM input feature names."""
        count = self.frame.invariant_count
        return ['I{0}'.format(k + 1) for k in range(count)] + ['dt'] + \
            list(self.ambient_features)


class FeatureScaler(object):
    """Affine map of every input feature onto [-1, 1]."""

    def __init__(self, names=None, minima=None, maxima=None,
                 stress_scale=None):
        """Initialize the scaler, unfitted unless ranges are given."""
        self.names = list(names) if names is not None else None
        self.minima = None
        self.maxima = None
        self.stress_scale = stress_scale
        if minima is not None:
            self._set_ranges(minima, maxima)

    def __repr__(self):
        """Return __repr__."""
        return "<{0}: {1}>".format(self.__class__.__name__, self.names)

    def _set_ranges(self, minima, maxima):
        self.minima = np.asarray(minima, dtype=float)
        self.maxima = np.asarray(maxima, dtype=float)

    @property
    def fitted(self):
        """Return whether ranges are known."""
        return self.minima is not None

    @property
    def center(self):
        """Return m_f, the minimum for constant features."""
        self._require_fitted()
        center = 0.5 * (self.maxima + self.minima)
        return np.where(self._degenerate, self.minima, center)

    @property
    def scale(self):
        """Return s_f, one for constant features."""
        self._require_fitted()
        half = 0.5 * (self.maxima - self.minima)
        return np.where(self._degenerate, 1.0, half)

    @property
    def _degenerate(self):
        return 0.5 * (self.maxima - self.minima) <= _DEGENERATE_RANGE

    def _require_fitted(self):
        if not self.fitted:
            raise UsageError(MSG_UNFITTED)

    def fit(self, dataset, frame, ambient_features):
        """Collect feature ranges and the stress scale of a dataset."""
        names, minima, maxima, scale = feature_ranges(
            dataset, frame, ambient_features)
        self.names = names
        self._set_ranges(minima, maxima)
        self.stress_scale = scale if scale > 0 else 1.0
        _LOGGER.debug("Scaler fitted on %d sequences, stress scale %.4g",
                      len(dataset), self.stress_scale)
        return self

    def transform(self, raw):
        """Return (x - m_f) / s_f for numpy or torch input."""
        center, scale = self.center, self.scale
        if isinstance(raw, torch.Tensor):
            center = torch.as_tensor(center, dtype=raw.dtype)
            scale = torch.as_tensor(scale, dtype=raw.dtype)
        return (raw - center) / scale

    def inverse(self, scaled):
        """Return m_f + s_f x."""
        return self.center + self.scale * np.asarray(scaled, dtype=float)

    def to_dict(self):
        """Return the scaler as a plain dict."""
        self._require_fitted()
        return {'features': list(self.names),
                'minima': self.minima.tolist(),
                'maxima': self.maxima.tolist(),
                'stress_scale': float(self.stress_scale)}

    @classmethod
    def from_dict(cls, data):
        """Build a fitted scaler from to_dict() or dataset metadata."""
        try:
            return cls(data['features'], data['minima'], data['maxima'],
                       data.get('stress_scale') or 1.0)
        except KeyError as err:
            raise DataError('Scaler block lacks {0}.'.format(err))


@dataclass
class StepOutput(object):
    """Response of the model at one timestep."""

    psi: float
    S: np.ndarray
    sigma: np.ndarray
    z: np.ndarray
    D: float
    state: tuple


class PIDLNetwork(torch.nn.Module):
    """History encoder with internal-variable and free-energy heads."""

    def __init__(self, config):
        super(PIDLNetwork, self).__init__()
        n_inv = config.frame.invariant_count
        n_input = len(config.feature_names)
        self.n_invariants = n_inv
        self.frame = config.frame
        self.encoder = LSTMStack(n_input, config.lstm_width,
                                 config.lstm_layers)
        self.znn = DenseNet(
            [config.lstm_width] + list(config.znn_widths) +
            [config.n_internal],
            ['swish'] * len(config.znn_widths) + ['linear'])
        self.psinn = DenseNet(
            [config.n_internal + n_inv] + list(config.psi_widths) + [1],
            ['softplus'] * len(config.psi_widths) + ['linear'],
            non_negative=True, last_bias=False)

    def psi_raw(self, z, invariants_scaled):
        """Return the unnormalized free energy, >= 0 by construction."""
        return self.psinn(torch.cat([z, invariants_scaled], dim=-1))[..., 0]


class SequenceBatch(object):
    """Padded tensors of one or more sequences.

    Sequences shorter than the longest are padded with F = I and their
    last time increment; ``mask`` marks the real steps.
    """

    def __init__(self, sequences, config):
        """Stack sequences into padded tensors."""
        frame = config.frame
        steps = max(len(seq) for seq in sequences)
        count = len(sequences)
        F = np.tile(np.eye(3), (count, steps, 1, 1))
        dt = np.ones((count, steps))
        mask = np.zeros((count, steps))
        sigma = np.zeros((count, steps, 3, 3))
        damage = np.zeros((count, steps))
        ambient = np.zeros((count, len(config.ambient_features)))
        for b, seq in enumerate(sequences):
            length = len(seq)
            F[b, :length] = seq.F
            dt[b, :length] = seq.dt
            dt[b, length:] = seq.dt[-1]
            mask[b, :length] = 1.0
            damage[b, :length] = seq.d
            if seq.is_labeled:
                sigma[b, :length] = seq.sigma_undamaged
            ambient[b] = seq.ambient.features(config.ambient_features)
        C = right_cauchy_green(F)
        self.lengths = [len(seq) for seq in sequences]
        self.F = torch.as_tensor(F, dtype=DTYPE)
        self.invariants = torch.as_tensor(invariants(C, frame), dtype=DTYPE)
        self.derivatives = torch.as_tensor(
            invariant_derivatives(C, frame), dtype=DTYPE)
        self.dt = torch.as_tensor(dt, dtype=DTYPE)
        self.mask = torch.as_tensor(mask, dtype=DTYPE)
        self.sigma = torch.as_tensor(sigma, dtype=DTYPE)
        self.d = torch.as_tensor(damage, dtype=DTYPE)
        self.ambient = torch.as_tensor(ambient, dtype=DTYPE)

    def __len__(self):
        return self.F.shape[0]

    def features(self):
        """Return the raw LSTM input (batch, T, features)."""
        steps = self.F.shape[1]
        ambient = self.ambient[:, None, :].expand(-1, steps, -1)
        return torch.cat([self.invariants, self.dt[..., None], ambient],
                         dim=-1)

    def subset(self, indices):
        """Return the batch restricted to the given sequence indices."""
        part = SequenceBatch.__new__(SequenceBatch)
        indices = torch.as_tensor(indices, dtype=torch.long)
        for name in ('F', 'invariants', 'derivatives', 'dt', 'mask', 'sigma',
                     'd', 'ambient'):
            setattr(part, name, getattr(self, name)[indices])
        part.lengths = [self.lengths[int(k)] for k in indices]
        return part


def _constitutive(network, scaler, inv_raw, inv_derivs, F, z, z_prev, dt,
                  weights, create_graph):
    """Return psi, S, sigma, D for given invariants and internal variables.

    ``weights`` multiplies psi before differentiation; a zero weight
    switches a padded entry off.
    """
    center, scale, identity = _invariant_scaling(scaler, network.frame)

    inv_leaf = inv_raw.detach().clone().requires_grad_(True)
    if not z.requires_grad:
        z = z.detach().requires_grad_(True)
    psi = network.psi_raw(z, (inv_leaf - center) / scale) - \
        network.psi_raw(z, identity.expand_as(inv_leaf))
    dpsi_di, dpsi_dz = differentiate((psi * weights).sum(), [inv_leaf, z],
                                     create_graph=create_graph)
    S = 2.0 * torch.einsum('...k,...kij->...ij', dpsi_di, inv_derivs)
    J = torch.linalg.det(F)
    sigma = torch.einsum('...ik,...kl,...jl->...ij', F, S, F) / \
        J[..., None, None]
    z_rate = (z - z_prev) / dt[..., None]
    dissipation = -(dpsi_dz * z_rate).sum(dim=-1)
    for name, value in (('psi', psi), ('stress', sigma)):
        if not bool(torch.isfinite(value).all()):
            raise EvaluationError(MSG_NON_FINITE.format(name))
    return psi, S, sigma, dissipation, z


def _invariant_scaling(scaler, frame):
    """Return (m_f, s_f, scaled identity invariants) of the invariants."""
    count = frame.invariant_count
    center = torch.as_tensor(scaler.center[:count], dtype=DTYPE)
    scale = torch.as_tensor(scaler.scale[:count], dtype=DTYPE)
    identity = torch.as_tensor(identity_invariants(frame), dtype=DTYPE)
    return center, scale, (identity - center) / scale


def forward_sequence(model, batch, create_graph=False):
    """Return the model response over a SequenceBatch as tensors.

    Numerically equal to iterating :func:`forward_step` over each
    sequence; z_prev of the first step is its own z.
    """
    network, scaler = model.network, model.scaler
    x = scaler.transform(batch.features())
    hidden, _ = network.encoder(x)
    z = network.znn(hidden)
    z_prev = torch.cat([z[:, :1], z[:, :-1]], dim=1)
    psi, S, sigma, dissipation, z = _constitutive(
        network, scaler, batch.invariants, batch.derivatives, batch.F,
        z, z_prev, batch.dt, batch.mask, create_graph)
    return {'psi': psi, 'S': S, 'sigma': sigma, 'D': dissipation, 'z': z}


def forward_step(F_next, dt, ambient, state, z_prev, model):
    """Advance the model by one timestep of a single sequence.

    ``state`` is the recurrent (h, c) pair or None at the first step;
    ``z_prev`` is None at the first step.
    """
    network, scaler, config = model.network, model.scaler, model.config
    F_next = np.asarray(F_next, dtype=float)
    C = right_cauchy_green(F_next)
    inv = torch.as_tensor(invariants(C, config.frame), dtype=DTYPE)
    derivs = torch.as_tensor(invariant_derivatives(C, config.frame),
                             dtype=DTYPE)
    features = torch.cat([
        inv, torch.tensor([float(dt)], dtype=DTYPE),
        torch.as_tensor(ambient.features(config.ambient_features),
                        dtype=DTYPE)])
    x = scaler.transform(features)[None, :]
    if state is None:
        state = network.encoder.initial_state(1)
    hidden, state = network.encoder.step(x, state)
    z = network.znn(hidden[0])
    z_prev = z.detach() if z_prev is None else \
        torch.as_tensor(z_prev, dtype=DTYPE)
    psi, S, sigma, dissipation, z = _constitutive(
        network, scaler, inv, derivs, torch.as_tensor(F_next, dtype=DTYPE),
        z, z_prev, torch.tensor(float(dt), dtype=DTYPE),
        torch.tensor(1.0, dtype=DTYPE), create_graph=False)
    return StepOutput(psi=float(psi), S=S.detach().numpy(),
                      sigma=sigma.detach().numpy(), z=z.detach().numpy(),
                      D=float(dissipation),
                      state=tuple(s.detach() for s in state))


def rollout(sequence, model, state=None, z_prev=None):
    """Iterate forward_step over a sequence, threading state and z."""
    _check_compatible(sequence, model)
    outputs = []
    for F, dt in zip(sequence.F, sequence.dt):
        out = forward_step(F, dt, sequence.ambient, state, z_prev, model)
        state, z_prev = out.state, out.z
        outputs.append(out)
    return outputs


def _check_compatible(sequence, model):
    names = model.config.ambient_features
    try:
        sequence.ambient.features(names)
    except AttributeError:
        raise UsageError(MSG_SYMMETRY_MISMATCH.format('ambient features'))


def free_energy(model, C, z):
    """Return psi(C, z) for fixed internal variables."""
    network, scaler, config = model.network, model.scaler, model.config
    inv = torch.as_tensor(invariants(np.asarray(C, dtype=float),
                                     config.frame), dtype=DTYPE)
    z = torch.as_tensor(np.asarray(z, dtype=float), dtype=DTYPE)
    center, scale, identity = _invariant_scaling(scaler, config.frame)
    scaled = (inv - center) / scale
    with torch.no_grad():
        psi = network.psi_raw(z, scaled) - \
            network.psi_raw(z, identity.expand_as(scaled))
    return psi.numpy()


def apply_damage(sigma_pred, d):
    """Return (1 - d) sigma_pred."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0) or np.any(d >= 1.0):
        raise InvalidInputError(MSG_DAMAGE_RANGE.format(d))
    return (1.0 - d)[..., None, None] * np.asarray(sigma_pred, dtype=float)


class PIDLConstitutiveModel(ConstitutiveModel):
    """Implementation of the learned free-energy model."""

    def __init__(self, config=None, scaler=None, network=None, seed=0,
                 name='pidl'):
        """Initialize the model, building a fresh network if none is given."""
        self.config = config or PIDLConfig()
        super(PIDLConstitutiveModel, self).__init__(name, self.config.frame)
        self.scaler = scaler or FeatureScaler()
        if self.scaler.fitted and \
                self.scaler.names != self.config.feature_names:
            raise UsageError(MSG_SYMMETRY_MISMATCH.format('input features'))
        if network is None:
            generator = torch.Generator().manual_seed(int(seed))
            network = PIDLNetwork(self.config)
            init_parameters(network, generator=generator)
            clamp_non_negative(network)
        self.network = network

    @property
    def family(self):
        """Return model family."""
        return 'pidl'

    def has_capability(self, capability):
        """Return if model exposes a specific output."""
        return capability in ('stress', 'psi', 'dissipation',
                              'internal-variables')

    def fit_scaler(self, dataset):
        """Fit the feature scaler on the training sequences."""
        self.scaler.fit(dataset, self.config.frame,
                        self.config.ambient_features)
        return self.scaler

    def batch(self, sequences):
        """Return a SequenceBatch for this model."""
        return SequenceBatch(sequences, self.config)

    def forward_sequence(self, batch, create_graph=False):
        """See :func:`forward_sequence`."""
        return forward_sequence(self, batch, create_graph=create_graph)

    def predict(self, sequences):
        """Return per-sequence numpy outputs of a batched forward pass."""
        batch = self.batch(sequences)
        out = self.forward_sequence(batch)
        results = []
        for b, length in enumerate(batch.lengths):
            results.append({key: value[b, :length].detach().numpy()
                            for key, value in out.items()})
        return results

    def rollout(self, sequence):
        """Return stacked per-step outputs of :func:`rollout`."""
        steps = rollout(sequence, self)
        return {'psi': np.array([out.psi for out in steps]),
                'S': np.array([out.S for out in steps]),
                'sigma': np.array([out.sigma for out in steps]),
                'z': np.array([out.z for out in steps]),
                'D': np.array([out.D for out in steps])}

    def stresses_from(self, outputs):
        """Return the predicted undamaged stress."""
        return outputs['sigma']

    def _extra_columns(self, sequence, outputs):
        damaged = apply_damage(outputs['sigma'], sequence.d)
        columns = {}
        for label, (i, j) in zip(VOIGT_LABELS, VOIGT_INDEX):
            columns['s' + label + '_damaged'] = damaged[:, i, j]
        columns['psi'] = outputs['psi']
        columns['D'] = outputs['D']
        for k in range(outputs['z'].shape[-1]):
            columns['z{0}'.format(k + 1)] = outputs['z'][:, k]
        return columns

    def save(self, filename, training_state=None):
        """Write the model checkpoint."""
        payload = {'format_version': CHECKPOINT_FORMAT_VERSION,
                   'config': self.config.to_dict(),
                   'scaler': self.scaler.to_dict(),
                   'state_dict': self.network.state_dict()}
        if training_state is not None:
            payload['training_state'] = training_state
        _ensure_parent(filename)
        torch.save(payload, filename)
        _LOGGER.debug("Saved checkpoint %s", filename)
        return True

    @classmethod
    def load(cls, filename):
        """Return (model, training_state) from a checkpoint."""
        _exists_file(filename)
        try:
            payload = torch.load(filename, weights_only=False)
        except (RuntimeError, EOFError, OSError) as err:
            raise DataError('{0}: {1}'.format(filename, err))
        _check_version(payload.get('format_version'),
                       CHECKPOINT_FORMAT_VERSION, 'checkpoint')
        config = PIDLConfig.from_dict(payload['config'])
        model = cls(config, FeatureScaler.from_dict(payload['scaler']))
        model.network.load_state_dict(payload['state_dict'])
        return model, payload.get('training_state')
