# coding: utf-8
# vim:sw=4:ts=4:et:
"""Loss, adaptive weighting, training loop and evaluation metrics."""
import copy
import logging
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import pandas as pd
import torch
from torch.utils.data import DataLoader, TensorDataset

from thermonet.const import (
    DISSIPATION_REL_TOL, MSG_BAD_VALUE, MSG_NON_FINITE, MSG_SHAPE,
    MSG_UNKNOWN_KEY, PSI_NEGATIVE_TOL, TRAINING_DEFAULTS)
from thermonet.exceptions import (
    ConfigError, TrainingAbortError, UsageError)
from thermonet.kinematics import VOIGT_INDEX, VOIGT_LABELS
from thermonet.neural import make_optimizer, optimizer_step
from thermonet.pidl import PIDLConstitutiveModel, forward_sequence

_LOGGER = logging.getLogger(__name__)

HISTORY_COLUMNS = ('epoch', 'train_stress_loss', 'train_dissipation_loss',
                   'train_total', 'beta', 'alpha', 'val_stress_loss')

SWEEP_RANGE = (1, 32)


# pylint: disable=too-many-instance-attributes
@dataclass
class TrainingConfig(object):
    """Hyperparameters of a training run."""

    learning_rate: float = TRAINING_DEFAULTS['learning_rate']
    epochs: int = TRAINING_DEFAULTS['epochs']
    batch_size: int = TRAINING_DEFAULTS['batch_size']
    hidden_layers: int = TRAINING_DEFAULTS['hidden_layers']
    neurons: int = TRAINING_DEFAULTS['neurons']
    n_internal: int = TRAINING_DEFAULTS['n_internal']
    beta_init: float = TRAINING_DEFAULTS['beta_init']
    beta_update_every: int = TRAINING_DEFAULTS['beta_update_every']
    adaptive_beta: bool = TRAINING_DEFAULTS['adaptive_beta']
    alpha_start: float = TRAINING_DEFAULTS['alpha_start']
    alpha_end: float = TRAINING_DEFAULTS['alpha_end']
    decay_horizon: int = TRAINING_DEFAULTS['decay_horizon']
    seed: int = TRAINING_DEFAULTS['seed']
    checkpoint_every: int = TRAINING_DEFAULTS['checkpoint_every']

    def __post_init__(self):
        for name in ('learning_rate', 'batch_size', 'hidden_layers',
                     'neurons', 'n_internal', 'beta_update_every',
                     'decay_horizon', 'checkpoint_every'):
            if not getattr(self, name) > 0:
                raise ConfigError(MSG_BAD_VALUE.format(
                    name, getattr(self, name)))
        if self.epochs < 0 or self.beta_init < 0:
            raise ConfigError(MSG_BAD_VALUE.format(
                'epochs/beta_init', (self.epochs, self.beta_init)))
        if not 0 < self.alpha_end <= self.alpha_start <= 1:
            raise ConfigError(MSG_BAD_VALUE.format(
                'alpha_start/alpha_end', (self.alpha_start, self.alpha_end)))

    @classmethod
    def from_dict(cls, data):
        """Build the config from a key-value block."""
        known = set(item.name for item in fields(cls))
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(MSG_UNKNOWN_KEY.format('training', unknown))
        return cls(**data)

    def to_dict(self):
        """Return the config as a plain dict."""
        return asdict(self)


@dataclass
class LossBreakdown(object):
    """Terms of the training loss."""

    stress_loss: float
    dissipation_loss: float
    beta: float
    total: float


@dataclass
class BetaSchedule(object):
    """Adaptive weight of the dissipation penalty."""

    beta: float = TRAINING_DEFAULTS['beta_init']
    alpha_ema: float = TRAINING_DEFAULTS['alpha_start']
    alpha_start: float = TRAINING_DEFAULTS['alpha_start']
    alpha_end: float = TRAINING_DEFAULTS['alpha_end']
    decay_horizon: int = TRAINING_DEFAULTS['decay_horizon']

    @classmethod
    def from_config(cls, config):
        """Return the initial schedule of a training config."""
        return cls(beta=config.beta_init, alpha_ema=config.alpha_start,
                   alpha_start=config.alpha_start,
                   alpha_end=config.alpha_end,
                   decay_horizon=config.decay_horizon)


def alpha_at(epoch, alpha_start=TRAINING_DEFAULTS['alpha_start'],
             alpha_end=TRAINING_DEFAULTS['alpha_end'],
             decay_horizon=TRAINING_DEFAULTS['decay_horizon']):
    """Return the mixing rate, decaying from alpha_start to alpha_end."""
    ratio = alpha_end / alpha_start
    return max(alpha_end, alpha_start * ratio ** (epoch / decay_horizon))


def _as_tensor(values):
    if isinstance(values, torch.Tensor):
        return values
    return torch.as_tensor(np.asarray(values, dtype=float))


def _components(stress):
    """Return the independent entries of symmetric tensors, else as is."""
    if stress.shape[-2:] == (3, 3):
        return torch.stack([stress[..., i, j] for i, j in VOIGT_INDEX],
                           dim=-1)
    return stress[..., None]


def loss_terms(sigma_pred, sigma_true, dissipation, mask=None,
               stress_scale=1.0):
    """Return (stress MAE, mean ReLU(-D)) as differentiable tensors.

    ``mask`` weights each step; the stress error is divided by
    ``stress_scale`` before averaging.
    """
    sigma_pred, sigma_true = _as_tensor(sigma_pred), _as_tensor(sigma_true)
    dissipation = _as_tensor(dissipation)
    if sigma_pred.shape != sigma_true.shape:
        raise UsageError(MSG_SHAPE.format(tuple(sigma_true.shape),
                                          tuple(sigma_pred.shape)))
    if mask is None:
        mask = torch.ones_like(dissipation)
    mask = _as_tensor(mask).to(dissipation.dtype)
    if mask.shape != dissipation.shape:
        raise UsageError(MSG_SHAPE.format(tuple(dissipation.shape),
                                          tuple(mask.shape)))
    error = _components(sigma_pred - sigma_true).abs() / stress_scale
    stress_loss = (error * mask[..., None]).sum() / \
        (mask.sum() * error.shape[-1])
    dissipation_loss = (torch.relu(-dissipation) * mask).sum() / mask.sum()
    return stress_loss, dissipation_loss


def loss(predictions, targets, beta, mask=None, stress_scale=1.0):
    """Return the LossBreakdown of predicted against target stresses.

    ``predictions`` is a mapping with ``sigma`` and ``D``; ``targets``
    holds the undamaged oracle stress.
    """
    stress_loss, dissipation_loss = loss_terms(
        predictions['sigma'], targets, predictions['D'], mask, stress_scale)
    stress_loss = float(stress_loss)
    dissipation_loss = float(dissipation_loss)
    return LossBreakdown(stress_loss, dissipation_loss, float(beta),
                         stress_loss + beta * dissipation_loss)


def _flat_abs(grads):
    return torch.cat([g.detach().reshape(-1).abs() for g in grads])


def update_beta(schedule, grad_stress, grad_dissipation, epoch):
    """Return the schedule after one adaptive weighting update.

    ``grad_dissipation`` holds the gradients of the already weighted
    dissipation term.
    """
    grad_stress, grad_dissipation = list(grad_stress), list(grad_dissipation)
    if not grad_stress or not grad_dissipation:
        raise UsageError('update_beta needs non-empty gradient collections')
    alpha = alpha_at(epoch, schedule.alpha_start, schedule.alpha_end,
                     schedule.decay_horizon)
    numerator = float(_flat_abs(map(_as_tensor, grad_stress)).max())
    denominator = float(_flat_abs(map(_as_tensor, grad_dissipation)).mean())
    if denominator == 0.0 or not math.isfinite(denominator):
        _LOGGER.info("Dissipation gradient vanishes, beta kept at %.4g",
                     schedule.beta)
        return replace(schedule, alpha_ema=alpha)
    beta_hat = numerator / denominator
    beta = (1.0 - alpha) * schedule.beta + alpha * beta_hat
    _LOGGER.debug("beta %.4g -> %.4g (estimate %.4g, alpha %.3f)",
                  schedule.beta, beta, beta_hat, alpha)
    return replace(schedule, beta=beta, alpha_ema=alpha)


def _parameter_grads(value, parameters):
    grads = torch.autograd.grad(value, parameters, retain_graph=True,
                                allow_unused=True)
    return [torch.zeros_like(p) if g is None else g
            for p, g in zip(parameters, grads)]


def _batch_loss(model, batch, create_graph):
    out = forward_sequence(model, batch, create_graph=create_graph)
    return loss_terms(out['sigma'], batch.sigma, out['D'], batch.mask,
                      model.scaler.stress_scale)


def _validation_loss(model, batch):
    if batch is None:
        return float('nan')
    stress_loss, _ = _batch_loss(model, batch, create_graph=False)
    return float(stress_loss)


def _shuffled(count, batch_size, seed, epoch):
    """Return index batches of one epoch, reproducible per epoch."""
    generator = torch.Generator().manual_seed(int(seed) * 1000003 + epoch)
    loader = DataLoader(TensorDataset(torch.arange(count)),
                        batch_size=batch_size, shuffle=True,
                        generator=generator)
    return [indices for (indices,) in loader]


# pylint: disable=too-many-arguments
def _training_state(epoch, step, optimizer, schedule, history, best,
                    network, config):
    """Return the resumable training state stored in checkpoints."""
    best_loss, best_state = best
    return {
        'epoch': epoch, 'step': step,
        'optimizer': copy.deepcopy(optimizer.state_dict()),
        'schedule': asdict(schedule), 'history': list(history),
        'best_loss': best_loss, 'best_state': best_state,
        'network_state': copy.deepcopy(network.state_dict()),
        'config': config.to_dict()}


# pylint: disable=too-many-locals,too-many-arguments,too-many-statements
# pylint: disable=too-many-branches
def train(model, train_set, val_set, config, checkpoint_path=None,
          resume_state=None, threads=None):
    """Fit the model; returns (model, history).

    The returned model carries the parameters of the epoch with the
    lowest validation stress loss (training stress loss without a
    validation set).  A non-finite loss or gradient restores the last
    good parameters, writes them to ``checkpoint_path`` and raises
    :class:`TrainingAbortError`.
    """
    if threads:
        torch.set_num_threads(int(threads))
    if not train_set:
        raise UsageError('Training needs at least one sequence.')
    if not model.scaler.fitted:
        model.fit_scaler(train_set)
    network = model.network
    parameters = [p for p in network.parameters() if p.requires_grad]
    optimizer = make_optimizer(parameters, config.learning_rate)
    schedule = BetaSchedule.from_config(config)
    history, start_epoch, step = [], 0, 0
    best_loss, best_state = math.inf, copy.deepcopy(network.state_dict())
    if resume_state is not None:
        optimizer.load_state_dict(resume_state['optimizer'])
        schedule = BetaSchedule(**resume_state['schedule'])
        history = list(resume_state['history'])
        start_epoch = resume_state['epoch']
        step = resume_state['step']
        best_loss = resume_state['best_loss']
        best_state = resume_state['best_state']
        network.load_state_dict(resume_state['network_state'])
        _LOGGER.info("Resuming training at epoch %d", start_epoch)

    full = model.batch(train_set)
    val_batch = model.batch(val_set) if val_set else None
    last_good = copy.deepcopy(network.state_dict())
    training_state = resume_state

    for epoch in range(start_epoch, config.epochs):
        sums = np.zeros(3)
        try:
            for indices in _shuffled(len(full), config.batch_size,
                                     config.seed, epoch):
                batch = full.subset(indices)
                stress_loss, dissipation_loss = _batch_loss(model, batch,
                                                            True)
                total = stress_loss + schedule.beta * dissipation_loss
                if not bool(torch.isfinite(total)):
                    raise TrainingAbortError(MSG_NON_FINITE.format('loss'))
                if config.adaptive_beta and \
                        step % config.beta_update_every == 0:
                    grad_stress = _parameter_grads(stress_loss, parameters)
                    grad_diss = [schedule.beta * g for g in _parameter_grads(
                        dissipation_loss, parameters)]
                    schedule = update_beta(schedule, grad_stress, grad_diss,
                                           epoch)
                optimizer.zero_grad()
                total.backward()
                optimizer_step(optimizer, network)
                last_good = copy.deepcopy(network.state_dict())
                step += 1
                weight = len(indices)
                sums += weight * np.array([float(stress_loss),
                                           float(dissipation_loss),
                                           float(total)])
        except TrainingAbortError as err:
            _LOGGER.error("Training aborted at epoch %d: %s", epoch, err)
            network.load_state_dict(last_good)
            if checkpoint_path:
                model.save(checkpoint_path, training_state=_training_state(
                    epoch, step, optimizer, schedule, history,
                    (best_loss, best_state), network, config))
            raise TrainingAbortError(str(err), last_good_state=last_good,
                                     history=list(history)) from err

        sums /= len(full)
        val_loss = _validation_loss(model, val_batch)
        row = dict(zip(HISTORY_COLUMNS, (
            epoch, sums[0], sums[1], sums[2], schedule.beta,
            alpha_at(epoch, config.alpha_start, config.alpha_end,
                     config.decay_horizon), val_loss)))
        history.append(row)
        _LOGGER.info("epoch %d: stress %.5g dissipation %.3g beta %.4g "
                     "val %.5g", epoch, sums[0], sums[1], schedule.beta,
                     val_loss)
        selection = val_loss if val_batch is not None else sums[0]
        if selection < best_loss:
            best_loss = selection
            best_state = copy.deepcopy(network.state_dict())

        if checkpoint_path and ((epoch + 1) % config.checkpoint_every == 0
                                or epoch + 1 == config.epochs):
            training_state = _training_state(
                epoch + 1, step, optimizer, schedule, history,
                (best_loss, best_state), network, config)
            model.save(checkpoint_path, training_state=training_state)

    network.load_state_dict(best_state)
    if checkpoint_path and training_state is not None:
        # best weights for use, current weights kept for resuming
        model.save(checkpoint_path, training_state=training_state)
    return model, history


def history_frame(history):
    """Return the per-epoch history as a DataFrame."""
    return pd.DataFrame(list(history), columns=list(HISTORY_COLUMNS))


def sweep_internal_variables(counts, train_set, val_set, model_config,
                             config, threads=None):
    """Train one model per internal-variable count.

    Returns a DataFrame with the final training and validation stress
    losses of each count.
    """
    counts = list(counts)
    for count in counts:
        if not SWEEP_RANGE[0] <= count <= SWEEP_RANGE[1]:
            raise ConfigError(MSG_BAD_VALUE.format('n_internal', count))
    rows = []
    for count in counts:
        model = PIDLConstitutiveModel(replace(model_config, n_internal=count),
                                      seed=config.seed)
        model.fit_scaler(train_set)
        _, history = train(model, train_set, val_set, config,
                           threads=threads)
        final = history[-1] if history else {}
        rows.append({'n_internal': count,
                     'final_loss': final.get('train_stress_loss', math.nan),
                     'val_loss': final.get('val_stress_loss', math.nan)})
        _LOGGER.info("n_internal %d: final loss %.5g", count,
                     rows[-1]['final_loss'])
    return pd.DataFrame(rows, columns=['n_internal', 'final_loss',
                                       'val_loss'])


def metrics(outputs, dataset, stress_scale):
    """Return evaluation metrics of per-sequence outputs.

    ``outputs`` holds one mapping per sequence with ``sigma``, ``D`` and
    ``psi`` arrays aligned with the sequence steps.
    """
    errors, dissipation, psi = [], [], []
    for out, seq in zip(outputs, dataset):
        errors.append(_components(torch.as_tensor(
            np.asarray(out['sigma']) - seq.sigma_undamaged)).numpy())
        dissipation.append(np.asarray(out['D'], dtype=float))
        psi.append(np.asarray(out['psi'], dtype=float))
    errors = np.concatenate(errors)
    dissipation = np.concatenate(dissipation)
    psi = np.concatenate(psi)
    scale = float(np.max(np.abs(dissipation))) if dissipation.size else 0.0
    result = {
        'stress_mae': float(np.mean(np.abs(errors)) / stress_scale),
        'stress_mae_mpa': float(np.mean(np.abs(errors))),
        'dissipation_violation_rate':
            float(np.mean(dissipation < -DISSIPATION_REL_TOL * scale))
            if scale > 0 else 0.0,
        'psi_negativity_rate': float(np.mean(psi < -PSI_NEGATIVE_TOL)),
        'sequences': len(outputs),
        'steps': int(len(dissipation)),
    }
    for k, label in enumerate(VOIGT_LABELS):
        result['rmse_' + label] = float(np.sqrt(np.mean(errors[:, k] ** 2)))
    return result


def evaluate(model, dataset):
    """Return stress error, dissipation and free-energy metrics."""
    if not dataset:
        raise UsageError('Evaluation needs at least one sequence.')
    outputs = model.predict(dataset)
    result = metrics(outputs, dataset, model.scaler.stress_scale)
    _LOGGER.info("stress_mae %.5g, dissipation violations %.3g, "
                 "psi negativity %.3g", result['stress_mae'],
                 result['dissipation_violation_rate'],
                 result['psi_negativity_rate'])
    return result
