# coding: utf-8
# vim:sw=4:ts=4:et:
"""Physics-informed learning of fiber reinforced epoxy constitutive laws."""
import copy
import logging
import os

import pandas as pd

from thermonet.classical import ClassicalModel, MaterialParams
from thermonet.const import DEFAULT_OUTPUT_DIR, QUICK_PROFILE
from thermonet.exceptions import ConfigError, DataError
from thermonet.kinematics import VOIGT_LABELS
from thermonet.pathgen import (
    PathConfig, generate_dataset, load_dataset, save_dataset,
    validation_path)
from thermonet.pidl import PIDLConfig, PIDLConstitutiveModel
from thermonet.training import (
    TrainingConfig, evaluate, history_frame, sweep_internal_variables, train)
from thermonet.utils import (
    _read_json, _resolve_seed, _save_csv, _save_json)

_LOGGER = logging.getLogger(__name__)

__version__ = '0.1.0'

PROFILES = ('full', 'quick')
BLOCKS = ('material', 'paths', 'model', 'training')


def load_config(filename=None, profile='full'):
    """Return the run config blocks, defaults filled in."""
    if profile not in PROFILES:
        raise ConfigError('Unknown profile {0!r}.'.format(profile))
    data = _read_json(filename, error=ConfigError) if filename else {}
    if not isinstance(data, dict):
        raise ConfigError('Configuration must be a JSON object.')
    unknown = sorted(set(data) - set(BLOCKS))
    if unknown:
        raise ConfigError('Unknown configuration block(s): {0}.'.format(
            unknown))
    blocks = {name: {} for name in BLOCKS}
    if profile == 'quick':
        for name, values in QUICK_PROFILE.items():
            blocks[name].update(copy.deepcopy(values))
    for name in BLOCKS:
        blocks[name].update(data.get(name) or {})
    return blocks


# pylint: disable=useless-object-inheritance
class ThermoNet(object):
    """A Python abstraction of the data generation and training pipeline."""

    def __init__(self, config_file=None, profile='full', threads=None,
                 config=None):
        """Initialize the pipeline from a config file or block dict."""
        blocks = config if config is not None else \
            load_config(config_file, profile)
        self.params = MaterialParams.from_dict(blocks.get('material', {}))
        self.path_config = PathConfig.from_dict(blocks.get('paths', {}))
        self.training_config = TrainingConfig.from_dict(
            blocks.get('training', {}))
        self.training_config.seed = _resolve_seed(self.training_config.seed)
        self.model_config = self._model_config(blocks.get('model', {}))
        self.threads = threads
        self.oracle = ClassicalModel(self.params)

    def __repr__(self):
        """Return __repr__."""
        return "<{0}: {1} sequences, n_z={2}>".format(
            self.__class__.__name__, self.path_config.sequence_count,
            self.model_config.n_internal)

    def _model_config(self, block):
        """Return the model config, widths defaulting to the training block."""
        train_cfg = self.training_config
        widths = [train_cfg.neurons] * train_cfg.hidden_layers
        data = {'n_internal': train_cfg.n_internal,
                'lstm_width': train_cfg.neurons,
                'lstm_layers': train_cfg.hidden_layers,
                'znn_widths': widths, 'psi_widths': list(widths)}
        data.update(block)
        return PIDLConfig.from_dict(data)

    def build_model(self):
        """Return a freshly initialized physics-informed model."""
        return PIDLConstitutiveModel(self.model_config,
                                     seed=self.training_config.seed)

    def generate_data(self, filename, extrapolation=False):
        """Write the training and validation datasets.

        Returns ``(train, validation)`` lists of sequences.
        """
        config = self.path_config
        if extrapolation and not config.extrapolation:
            data = config.to_dict()
            data['extrapolation'] = True
            config = PathConfig.from_dict(data)
        frame = self.model_config.frame
        features = self.model_config.ambient_features
        train_set = generate_dataset(config, self.params,
                                     threads=self.threads)
        save_dataset(train_set, filename, frame, features, config)
        val_set = generate_dataset(config, self.params, validation=True,
                                   threads=self.threads)
        save_dataset(val_set, validation_path(filename), frame, features,
                     config)
        return train_set, val_set

    @staticmethod
    def load_datasets(filename):
        """Return the training sequences and the validation sequences."""
        train_set = load_dataset(filename)
        val_file = validation_path(filename)
        val_set = load_dataset(val_file) if os.path.isfile(val_file) else []
        if not train_set:
            raise DataError('Dataset {0} is empty.'.format(filename))
        return train_set, val_set

    def train(self, dataset_file, model_file, history_file=None,
              resume=False):
        """Train a model and write checkpoint and history."""
        train_set, val_set = self.load_datasets(dataset_file)
        resume_state = None
        if resume and os.path.isfile(model_file):
            model, resume_state = PIDLConstitutiveModel.load(model_file)
        else:
            model = self.build_model()
            model.fit_scaler(train_set)
        model, history = train(model, train_set, val_set,
                               self.training_config,
                               checkpoint_path=model_file,
                               resume_state=resume_state,
                               threads=self.threads)
        if not os.path.isfile(model_file):
            model.save(model_file)
        history_file = history_file or \
            os.path.splitext(model_file)[0] + '_history.csv'
        _save_csv(history_frame(history), history_file)
        return model, history

    @staticmethod
    def evaluate(model_file, dataset_file, output_file=None):
        """Return the evaluation metrics, written to output_file if given."""
        model, _ = PIDLConstitutiveModel.load(model_file)
        result = evaluate(model, load_dataset(dataset_file))
        if output_file:
            _save_json(result, output_file)
        return result

    def sweep(self, dataset_file, counts, output_file):
        """Train one model per internal-variable count."""
        train_set, val_set = self.load_datasets(dataset_file)
        table = sweep_internal_variables(counts, train_set, val_set,
                                         self.model_config,
                                         self.training_config,
                                         threads=self.threads)
        _save_csv(table, output_file)
        return table

    @staticmethod
    def predict(model_file, dataset_file, output_dir=DEFAULT_OUTPUT_DIR):
        """Write one prediction table per sequence; returns the paths."""
        model, _ = PIDLConstitutiveModel.load(model_file)
        written = []
        for seq in load_dataset(dataset_file):
            filename = os.path.join(
                output_dir, 'prediction_{0:04d}.csv'.format(seq.index))
            _save_csv(model.curves(seq), filename)
            written.append(filename)
        return written

    def export_curves(self, model_file, dataset_file, index=0,
                      output_dir=DEFAULT_OUTPUT_DIR):
        """Write stress-strain, psi, D and z tables of one sequence."""
        model, _ = PIDLConstitutiveModel.load(model_file)
        dataset = load_dataset(dataset_file)
        matches = [seq for seq in dataset if seq.index == index]
        if not matches:
            raise DataError('Sequence {0} not in {1}.'.format(
                index, dataset_file))
        seq = matches[0]
        outputs = model.rollout(seq)
        learned = model.curves(seq, outputs)
        if seq.is_labeled:
            oracle = self.oracle.curves(seq, {
                'sigma': seq.sigma, 'sigma_undamaged': seq.sigma_undamaged,
                'd': seq.d})
        else:
            oracle = self.oracle.curves(seq)
        strain = [col for col in learned.columns if col.startswith('E')]
        stress = ['s' + label for label in VOIGT_LABELS]
        tables = {
            'stress_strain': pd.concat(
                [learned[['t'] + strain],
                 oracle[stress].add_prefix('oracle_'),
                 learned[stress].add_prefix('model_')], axis=1),
            'psi': learned[['t', 'psi']],
            'dissipation': learned[['t', 'D']],
            'internal_variables': learned[
                ['t'] + [c for c in learned.columns if c.startswith('z')]],
        }
        written = []
        for name, table in tables.items():
            filename = os.path.join(output_dir, '{0}_{1:04d}.csv'.format(
                name, index))
            _save_csv(table, filename)
            written.append(filename)
        return written
