# -*- coding: utf-8 -*-
"""The tests for the physics-informed recurrent model."""
import os

import numpy as np
import torch

from tests.helpers import random_deformation, random_rotation
from tests.test_base import ThermoNetUnitTestBase
from thermonet.const import CHECKPOINT_FORMAT_VERSION, ISOTROPIC
from thermonet.exceptions import (
    ConfigError, DataError, InvalidInputError, UsageError)
from thermonet.kinematics import right_cauchy_green
from thermonet.neural import DTYPE
from thermonet.pathgen import LoadedSequence
from thermonet.pidl import (
    FeatureScaler, PIDLConfig, PIDLConstitutiveModel, apply_damage,
    forward_step, free_energy, rollout)


def _head(sequence, steps):
    return LoadedSequence(F=sequence.F[:steps], dt=sequence.dt[:steps],
                          ambient=sequence.ambient)


def _tail(sequence, steps):
    return LoadedSequence(F=sequence.F[steps:], dt=sequence.dt[steps:],
                          ambient=sequence.ambient)


class TestPIDLConfig(ThermoNetUnitTestBase):
    """Test the architecture and the feature scaler."""

    def test_config(self):
        """Test feature names of both symmetry classes."""
        self.assertEqual(13, len(PIDLConfig().feature_names))
        iso = PIDLConfig(symmetry=ISOTROPIC)
        self.assertEqual(['I1', 'I2', 'I3', 'dt', 'w_w', 'v_np', 'v_f', 'T'],
                         iso.feature_names)
        self.assertRaises(ConfigError, PIDLConfig, n_internal=0)
        self.assertRaises(ConfigError, PIDLConfig, symmetry='cubic')
        self.assertRaises(ConfigError, PIDLConfig,
                          ambient_features=['humidity'])
        self.assertRaises(ConfigError, PIDLConfig.from_dict, {'width': 3})

    def test_scaler(self):
        """Test the affine map onto [-1, 1]."""
        scaler = self.model.scaler
        maxima, minima = scaler.maxima, scaler.minima
        varying = maxima - minima > 1e-12
        np.testing.assert_allclose(np.ones(varying.sum()),
                                   scaler.transform(maxima)[varying])
        np.testing.assert_allclose(-np.ones(varying.sum()),
                                   scaler.transform(minima)[varying])
        middle = 0.5 * (maxima + minima)
        np.testing.assert_allclose(np.zeros(varying.sum()),
                                   scaler.transform(middle)[varying],
                                   atol=1e-12)
        dt_index = scaler.names.index('dt')
        self.assertFalse(varying[dt_index])
        self.assertEqual(1.0, scaler.scale[dt_index])
        self.assertEqual(0.0, scaler.transform(minima)[dt_index])
        np.testing.assert_allclose(middle,
                                   scaler.inverse(scaler.transform(middle)))
        torch.testing.assert_close(
            torch.as_tensor(scaler.transform(maxima), dtype=DTYPE),
            scaler.transform(torch.as_tensor(maxima, dtype=DTYPE)))
        copy = FeatureScaler.from_dict(scaler.to_dict())
        np.testing.assert_array_equal(scaler.center, copy.center)
        self.assertEqual(scaler.stress_scale, copy.stress_scale)

    def test_unfitted(self):
        """Test an unfitted scaler refuses to transform."""
        scaler = FeatureScaler()
        self.assertFalse(scaler.fitted)
        self.assertRaises(UsageError, scaler.transform, np.zeros(3))
        self.assertRaises(UsageError, scaler.to_dict)
        self.assertRaises(DataError, FeatureScaler.from_dict, {'minima': []})

    def test_mismatched_scaler(self):
        """Test a scaler fitted for other features is rejected."""
        iso = PIDLConfig(symmetry=ISOTROPIC, n_internal=2, lstm_width=4,
                         lstm_layers=1, znn_widths=[4], psi_widths=[4])
        self.assertRaises(UsageError, PIDLConstitutiveModel, iso,
                          self.model.scaler)


class TestPIDLResponse(ThermoNetUnitTestBase):
    """Test the stress, free energy and dissipation of the model."""

    def setUp(self):
        """Add a random generator."""
        super(TestPIDLResponse, self).setUp()
        self.rng = np.random.default_rng(21)
        self.ambient = self.dataset[0].ambient

    def test_attributes(self):
        """Test the generic model interface."""
        self.assertEqual('<PIDLConstitutiveModel: pidl>', repr(self.model))
        self.assertEqual('pidl', self.model.family)
        self.assertTrue(self.model.has_capability('dissipation'))
        self.assertFalse(self.model.has_capability('damage'))

    def test_identity_step(self):
        """Test psi vanishes at C = I and D on the first step."""
        out = forward_step(np.eye(3), 1.0, self.ambient, None, None,
                           self.model)
        self.assertAlmostEqual(0.0, out.psi, places=12)
        self.assertEqual(0.0, out.D)
        self.assertEqual((2,), out.z.shape)
        np.testing.assert_allclose(out.S, out.S.T, atol=1e-12)

    def test_objectivity(self):
        """Test a superposed rotation rotates the stress only."""
        F = random_deformation(self.rng)
        Q = random_rotation(self.rng)
        plain = forward_step(F, 1.0, self.ambient, None, None, self.model)
        rotated = forward_step(Q @ F, 1.0, self.ambient, None, None,
                               self.model)
        self.assertAlmostEqual(plain.psi, rotated.psi, places=10)
        np.testing.assert_allclose(plain.S, rotated.S, atol=1e-9)
        np.testing.assert_allclose(Q @ plain.sigma @ Q.T, rotated.sigma,
                                   atol=1e-9)
        np.testing.assert_allclose(plain.S, plain.S.T, atol=1e-12)

    def test_isotropic_permutation(self):
        """Test permuted principal stretches permute the stress."""
        iso = PIDLConfig(symmetry=ISOTROPIC, n_internal=2, lstm_width=4,
                         lstm_layers=1, znn_widths=[4], psi_widths=[4])
        model = PIDLConstitutiveModel(iso, seed=5)
        model.fit_scaler(self.dataset)
        weights = np.linspace(0.0, 1.0, 4)[:, None]
        stretches = 1.0 + weights * np.array([0.012, -0.009, 0.004])
        perm = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        path = np.array([np.diag(row) for row in stretches])
        permuted = np.array([perm @ F @ perm.T for F in path])
        plain = model.rollout(LoadedSequence(F=path, dt=1.0,
                                             ambient=self.ambient))
        other = model.rollout(LoadedSequence(F=permuted, dt=1.0,
                                             ambient=self.ambient))
        np.testing.assert_allclose(plain['psi'], other['psi'], atol=1e-12)
        for sigma, sigma_perm in zip(plain['sigma'], other['sigma']):
            np.testing.assert_allclose(perm @ sigma @ perm.T, sigma_perm,
                                       atol=1e-10)
            np.testing.assert_allclose(np.diag(np.diag(sigma)), sigma,
                                       atol=1e-10)

    def test_stresses(self):
        """Test the stress history of the generic interface."""
        seq = self.dataset[1]
        np.testing.assert_array_equal(self.model.rollout(seq)['sigma'],
                                      self.model.stresses(seq))

    def test_stress_is_energy_derivative(self):
        """Test S = 2 dpsi/dC by central differences."""
        F = random_deformation(self.rng)
        out = forward_step(F, 1.0, self.ambient, None, None, self.model)
        C = right_cauchy_green(F)
        step = 1e-6
        for i in range(3):
            for j in range(i, 3):
                delta = np.zeros((3, 3))
                delta[i, j] += 0.5 * step
                delta[j, i] += 0.5 * step
                diff = (free_energy(self.model, C + delta, out.z) -
                        free_energy(self.model, C - delta, out.z)) / step
                self.assertAlmostEqual(float(diff), out.S[i, j], delta=1e-6 +
                                       1e-5 * abs(out.S[i, j]))

    def test_free_energy_non_negative(self):
        """Test the raw free energy head is non-negative."""
        network = self.model.network
        self.assertIsNone(network.psinn.layers[-1].bias)
        z = torch.randn(50, 2, dtype=DTYPE)
        invariants = 3.0 * torch.randn(50, 8, dtype=DTYPE)
        with torch.no_grad():
            self.assertTrue(bool((network.psi_raw(z, invariants) >= 0).all()))

    def test_rollout_deterministic(self):
        """Test repeated rollouts agree bit for bit."""
        first = self.model.rollout(self.dataset[0])
        second = self.model.rollout(self.dataset[0])
        for key in ('psi', 'sigma', 'z', 'D'):
            np.testing.assert_array_equal(first[key], second[key])
        self.assertEqual(len(self.dataset[0]), len(first['psi']))

    def test_batched_matches_steps(self):
        """Test the padded batch pass equals per-step rollouts."""
        batched = self.model.predict(self.dataset)
        for seq, out in zip(self.dataset, batched):
            steps = self.model.rollout(seq)
            self.assertEqual(len(seq), len(out['psi']))
            for key in ('psi', 'sigma', 'z', 'D'):
                np.testing.assert_allclose(steps[key], out[key], atol=1e-10)

    def test_resume_from_state(self):
        """Test a rollout split in two equals the unsplit one."""
        seq = self.dataset[0]
        whole = rollout(seq, self.model)
        head = rollout(_head(seq, 3), self.model)
        tail = rollout(_tail(seq, 3), self.model, state=head[-1].state,
                       z_prev=head[-1].z)
        for expected, found in zip(whole, head + tail):
            self.assertAlmostEqual(expected.psi, found.psi, places=12)
            self.assertAlmostEqual(expected.D, found.D, places=12)
            np.testing.assert_allclose(expected.sigma, found.sigma,
                                       atol=1e-12)

    def test_constant_identity(self):
        """Test a sequence held at rest dissipates nothing."""
        seq = LoadedSequence(F=np.tile(np.eye(3), (5, 1, 1)), dt=1.0,
                             ambient=self.ambient)
        out = self.model.rollout(seq)
        np.testing.assert_allclose(np.zeros(5), out['psi'], atol=1e-12)
        np.testing.assert_array_equal(np.zeros(5), out['D'])

    def test_apply_damage(self):
        """Test the damage degradation of predicted stress."""
        sigma = np.tile(np.eye(3), (2, 1, 1))
        np.testing.assert_array_equal(sigma, apply_damage(sigma, [0.0, 0.0]))
        np.testing.assert_allclose(0.7 * sigma[1],
                                   apply_damage(sigma, [0.0, 0.3])[1])
        self.assertRaises(InvalidInputError, apply_damage, sigma, [0.0, 1.0])

    def test_curves(self):
        """Test the exported columns."""
        table = self.model.curves(self.dataset[1])
        for column in ('t', 'E11', 's11', 's11_damaged', 'psi', 'D', 'z1',
                       'z2'):
            self.assertIn(column, table.columns)
        self.assertEqual(len(self.dataset[1]), len(table))

    def test_save_load(self):
        """Test a checkpoint reproduces the predictions."""
        filename = os.path.join(self.workdir, 'model.pt')
        self.assertTrue(self.model.save(filename))
        loaded, state = PIDLConstitutiveModel.load(filename)
        self.assertIsNone(state)
        self.assertEqual(self.model.config, loaded.config)
        before = self.model.rollout(self.dataset[0])
        after = loaded.rollout(self.dataset[0])
        np.testing.assert_array_equal(before['sigma'], after['sigma'])

        payload = torch.load(filename, weights_only=False)
        self.assertEqual(CHECKPOINT_FORMAT_VERSION, payload['format_version'])
        payload['format_version'] = 99
        torch.save(payload, filename)
        self.assertRaises(DataError, PIDLConstitutiveModel.load, filename)
        self.assertRaises(DataError, PIDLConstitutiveModel.load,
                          os.path.join(self.workdir, 'missing.pt'))
