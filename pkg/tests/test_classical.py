# -*- coding: utf-8 -*-
"""The tests for the classical viscoelastic-viscoplastic damage model."""
import math
import unittest

import mock
import numpy as np

from tests.helpers import load_json_fixture, uniaxial_path
from thermonet.classical import (
    AmbientState, ClassicalModel, MaterialParams, OracleState,
    amplification_factor, athermal_yield, branch_kinematics, branch_stress,
    damage_increment, energy_derivatives, integrate, shear_ratio,
    shear_ratio_slope, step, stiffness_ratio, stiffness_ratio_slope,
    viscoplastic_flow, viscous_flow, volumetric_split)
from thermonet.exceptions import (
    ConfigError, DegenerateDeformationError, IntegrationError,
    InvalidInputError, InvalidParameterError, InvalidStateError)
from thermonet.pathgen import (
    LoadedSequence, PathConfig, build_path, sample_targets)

PARAMS = MaterialParams()
DRY = AmbientState(w_w=0.0, v_np=0.05, v_f=0.25)
SATURATED = AmbientState(w_w=0.05, v_np=0.05, v_f=0.25)
FIBERS = [np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])]


def _loop_area(path, sigma):
    strain = path[:, 0, 0] - 1.0
    return float(np.sum(0.5 * (sigma[1:, 0, 0] + sigma[:-1, 0, 0]) *
                        np.diff(strain)))


class TestMaterial(unittest.TestCase):
    """Test parameter and ambient containers."""

    def test_defaults(self):
        """Test the calibrated parameter set."""
        params = MaterialParams.from_dict(
            load_json_fixture('material_params.json'))
        self.assertEqual(PARAMS, params)
        self.assertEqual(8, params.frame.invariant_count)
        self.assertEqual([1.0, 0.0, 0.0], params.to_dict()['a0'])

    def test_invalid(self):
        """Test rejected parameter blocks."""
        self.assertRaises(ConfigError, MaterialParams.from_dict,
                          {'mu_eqq': 1.0})
        self.assertRaises(InvalidParameterError, MaterialParams, mu_eq=0.0)
        self.assertRaises(InvalidParameterError, MaterialParams, a2=-1.0)

    def test_ambient(self):
        """Test ambient state checks and fiber sharing."""
        self.assertEqual((0.125, 0.125), DRY.v_f_families)
        self.assertAlmostEqual(0.75, DRY.v_m)
        self.assertEqual([0.0, 0.25], DRY.features(['w_w', 'v_f']))
        self.assertEqual(DRY, AmbientState.from_dict(DRY.to_dict()))
        self.assertRaises(InvalidInputError, AmbientState, w_w=0.2)
        self.assertRaises(InvalidInputError, AmbientState, v_np=1.0)
        self.assertRaises(InvalidInputError, AmbientState, v_f=1.2)
        self.assertRaises(InvalidInputError, AmbientState, T=0.0)


class TestConstitutiveFunctions(unittest.TestCase):
    """Test the pointwise constitutive functions."""

    def test_amplification(self):
        """Test the filler and moisture factor."""
        self.assertEqual(1.0, amplification_factor(0.0, 0.0))
        self.assertAlmostEqual(1.68, amplification_factor(0.1, 0.0))
        self.assertAlmostEqual(0.8100228, amplification_factor(0.0, 0.02))
        self.assertEqual(0.01, amplification_factor(0.0, 0.11))

    def test_volumetric_split(self):
        """Test the swelling-aware split."""
        J_m, F_iso, J_w = volumetric_split(np.eye(3), 0.0, PARAMS.alpha_w)
        self.assertEqual(1.0, J_m)
        self.assertEqual(1.0, J_w)
        np.testing.assert_allclose(np.eye(3), F_iso)
        J_m, F_iso, J_w = volumetric_split(np.diag([1.01, 1.0, 1.0]), 0.05,
                                           PARAMS.alpha_w)
        self.assertAlmostEqual(1.00195, J_w)
        self.assertAlmostEqual(1.01 / 1.00195, J_m)
        self.assertAlmostEqual(1.0, np.linalg.det(F_iso))
        self.assertRaises(DegenerateDeformationError, volumetric_split,
                          np.diag([1.0, 1.0, -1.0]), 0.0, PARAMS.alpha_w)

    def test_stiffness_ratio(self):
        """Test f(I4) and its slope."""
        self.assertAlmostEqual(10.0, stiffness_ratio(1.0, PARAMS))
        flat = MaterialParams(a2=0.0)
        self.assertEqual(9.0, stiffness_ratio(1.3, flat))
        self.assertEqual(0.0, stiffness_ratio_slope(1.3, flat))
        step_size = 1e-6
        diff = (stiffness_ratio(1.05 + step_size, PARAMS) -
                stiffness_ratio(1.05 - step_size, PARAMS)) / (2 * step_size)
        self.assertAlmostEqual(diff, stiffness_ratio_slope(1.05, PARAMS),
                               places=6)

    def test_shear_ratio(self):
        """Test the composite shear modulus ratio."""
        for zeta in (1.0, 0.4):
            self.assertAlmostEqual(1.0, shear_ratio(1.0, 0.3, zeta))
            self.assertAlmostEqual(1.0, shear_ratio(7.0, 0.0, zeta))
            self.assertAlmostEqual((1 + zeta * 0.125) / 0.875,
                                   shear_ratio(1e9, 0.125, zeta), places=7)
        self.assertRaises(InvalidParameterError, shear_ratio, -10.0, 0.0,
                          0.4)
        step_size = 1e-6
        diff = (shear_ratio(10.0 + step_size, 0.125, 0.4) -
                shear_ratio(10.0 - step_size, 0.125, 0.4)) / (2 * step_size)
        self.assertAlmostEqual(diff, shear_ratio_slope(10.0, 0.125, 0.4),
                               places=7)

    def test_energy_derivatives(self):
        """Test the fiber family energy derivatives term by term."""
        I1, I4, I5, mu, v_f, v_m = 3.1, 1.05, 1.12, 500.0, 0.125, 0.75
        f = 9.0 + math.exp(I4 - 1.0)
        df = math.exp(I4 - 1.0)
        g_in = ((1 + v_f) * f + (1 - v_f)) / ((1 - v_f) * f + 1 + v_f)
        g_tr = ((1 + 0.4 * v_f) * f + (1 - v_f) * 0.4) / \
            ((1 - v_f) * f + 0.4 + v_f)
        dg_tr = shear_ratio_slope(f, v_f, 0.4) * df
        expected_4 = 0.5 * mu * (
            v_f * df * (I4 + 2 / math.sqrt(I4) - 3)
            + (v_m + v_f * f) * (1 - I4 ** -1.5)
            - g_in * (I5 / I4 ** 2 + 1)
            + g_tr * (I5 / I4 ** 2 + I4 ** -1.5)
            + (I5 - I4 ** 2) / (2 * I4) * dg_tr
            + 0.5 * (I1 - (I5 + 2 * math.sqrt(I4)) / I4) * dg_tr)
        d1, d4, d5 = energy_derivatives(I1, I4, I5, mu, v_f, v_m, PARAMS)
        self.assertAlmostEqual(0.5 * g_tr * mu, d1)
        self.assertAlmostEqual(expected_4, d4)
        self.assertAlmostEqual((g_in - g_tr) * mu / (2 * I4), d5)
        self.assertRaises(InvalidStateError, energy_derivatives,
                          3.0, 0.0, 1.0, mu, v_f, v_m, PARAMS)

    def test_branch_reference_state(self):
        """Test both branches are stress free at B = I."""
        B, J, inv, cur = branch_kinematics(np.eye(3), FIBERS)
        sigma = branch_stress(B, cur, inv, PARAMS, DRY, 'eq', J_branch=J)
        np.testing.assert_allclose(np.zeros((3, 3)), sigma, atol=1e-9)
        sigma = branch_stress(B, cur, inv, PARAMS, DRY, 'neq', J_branch=J,
                              J_m=1.01)
        np.testing.assert_allclose(
            PARAMS.kappa_v * (1.01 - 1 / 1.01) * np.eye(3), sigma,
            atol=1e-9)
        self.assertRaises(InvalidInputError, branch_stress, B, cur, inv,
                          PARAMS, DRY, 'other')

    def test_branch_deviatoric(self):
        """Test the isochoric branch stress is traceless and symmetric."""
        rng = np.random.default_rng(5)
        F = np.eye(3) + 0.03 * rng.uniform(-1, 1, size=(3, 3))
        F /= np.linalg.det(F) ** (1.0 / 3.0)
        B, J, inv, cur = branch_kinematics(F, FIBERS)
        sigma = branch_stress(B, cur, inv, PARAMS, DRY, 'eq', J_branch=J)
        self.assertLess(abs(np.trace(sigma)),
                        1e-9 * np.linalg.norm(sigma))
        np.testing.assert_allclose(sigma, sigma.T)
        self.assertGreater(np.linalg.norm(sigma), 0.0)

    def test_athermal_yield(self):
        """Test the chain stretch modulated yield."""
        self.assertAlmostEqual(59.915, athermal_yield(1.72, PARAMS))
        self.assertAlmostEqual(PARAMS.y0, athermal_yield(-1e6, PARAMS))
        self.assertAlmostEqual(PARAMS.y0 + PARAMS.a_s,
                               athermal_yield(1e6, PARAMS))
        self.assertRaises(InvalidParameterError, athermal_yield, 1e6,
                          MaterialParams(a_s=-90.0))

    def test_viscous_flow(self):
        """Test the thermally activated flow rule."""
        tau0 = athermal_yield(1.0, PARAMS)
        self.assertAlmostEqual(1.0, viscous_flow(tau0, 1.0, 296.15, PARAMS) /
                               PARAMS.eps0_dot)
        rates = [viscous_flow(tau, 1.0, 296.15, PARAMS)
                 for tau in (0.0, 10.0, 30.0, 60.0)]
        self.assertEqual(sorted(rates), rates)
        self.assertGreater(viscous_flow(30.0, 1.0, 350.0, PARAMS),
                           viscous_flow(30.0, 1.0, 250.0, PARAMS))

    def test_viscoplastic_flow(self):
        """Test the phenomenological flow rule."""
        self.assertEqual(0.0, viscoplastic_flow(0.9 * 5.5, 0.01, 1e-3,
                                                PARAMS))
        self.assertEqual(0.0, viscoplastic_flow(10.0, 0.0, 1e-3, PARAMS))
        self.assertAlmostEqual(4.4114e-4,
                               viscoplastic_flow(10.0, 0.01, 1e-3, PARAMS),
                               delta=1e-7)

    def test_damage(self):
        """Test the exact damage increment."""
        self.assertEqual((0.2, 1.3), damage_increment(0.2, 1.1, 1.3))
        d, lam = damage_increment(0.0, 1.001, 1.0)
        self.assertAlmostEqual(1.0 - math.exp(-0.94387), d, places=6)
        self.assertEqual(1.001, lam)
        d, _ = damage_increment(0.0, 1.5, 1.0, delta_lambda=0.001)
        self.assertAlmostEqual(1.0 - math.exp(-0.94387), d, places=9)
        d, _ = damage_increment(0.5, 100.0, 1.0)
        self.assertLess(d, 1.0)
        self.assertRaises(InvalidInputError, damage_increment, 1.0, 1.0,
                          1.0)
        self.assertRaises(InvalidInputError, damage_increment, -0.1, 1.0,
                          1.0)


class TestIntegration(unittest.TestCase):
    """Test the time integration of the classical model."""

    def test_rest_state(self):
        """Test the undeformed state stays stress free."""
        state = OracleState()
        for _ in range(3):
            state, sigma, sigma_und = step(state, np.eye(3), 1.0, DRY,
                                           PARAMS)
            np.testing.assert_allclose(np.zeros((3, 3)), sigma, atol=1e-9)
            np.testing.assert_allclose(np.zeros((3, 3)), sigma_und,
                                       atol=1e-9)
        np.testing.assert_allclose(np.eye(3), state.F_v)
        np.testing.assert_allclose(np.eye(3), state.F_vp)
        self.assertEqual(0.0, state.d)
        self.assertRaises(InvalidInputError, step, state, np.eye(3), 0.0,
                          DRY, PARAMS)

    def test_integrate_ramp(self):
        """Test a short uniaxial ramp."""
        path = uniaxial_path(0.01, 5)
        sigma, sigma_und, damage = integrate(path, 1.0, DRY, PARAMS)
        self.assertEqual((6, 3, 3), sigma.shape)
        np.testing.assert_allclose(np.zeros((3, 3)), sigma[0], atol=1e-9)
        self.assertGreater(sigma_und[-1, 0, 0], 0.0)
        self.assertTrue(np.all(np.diff(damage) >= 0.0))
        self.assertTrue(np.all(damage < 1.0))
        np.testing.assert_allclose((1.0 - damage)[:, None, None] * sigma_und,
                                   sigma, atol=1e-12)
        for tensor in sigma_und:
            np.testing.assert_allclose(tensor, tensor.T, atol=1e-10)

    def test_rate_dependence(self):
        """Test the peak stress at 1e-3/s exceeds the one at 1e-5/s."""
        path = uniaxial_path(0.02, 10)
        # 0.002 strain per step
        _, fast, _ = integrate(path, 2.0, DRY, PARAMS)
        _, slow, _ = integrate(path, 200.0, DRY, PARAMS)
        self.assertGreater(np.max(fast[:, 0, 0]), np.max(slow[:, 0, 0]))

    def test_time_step_convergence(self):
        """Test halving dt on generated paths barely moves the end stress."""
        coarse = PathConfig(steps_per_segment=50, dt=2.0)
        fine = PathConfig(steps_per_segment=100, dt=1.0)
        states = coarse.ambient_states()
        for index in range(3):
            targets = sample_targets(coarse, index)
            ambient = states[index % len(states)]
            _, end_coarse, _ = integrate(build_path(targets, coarse),
                                         coarse.dt, ambient, PARAMS)
            _, end_fine, _ = integrate(build_path(targets, fine), fine.dt,
                                       ambient, PARAMS)
            change = np.linalg.norm(end_fine[-1] - end_coarse[-1])
            self.assertLessEqual(change,
                                 0.01 * np.linalg.norm(end_fine[-1]))

    def test_damage_monotone(self):
        """Test damage never heals along generated load-unload paths."""
        config = PathConfig(points_P=3, steps_per_segment=20, dt=5.0)
        states = config.ambient_states()
        for index in range(6):
            path = build_path(sample_targets(config, index), config)
            _, _, damage = integrate(path, config.dt,
                                     states[index % len(states)], PARAMS)
            self.assertEqual(0.0, damage[0])
            self.assertTrue(np.all(np.diff(damage) >= 0.0))
            self.assertTrue(np.all(damage < 1.0))

    def test_hysteresis(self):
        """Test a load-unload cycle dissipates energy."""
        path = uniaxial_path(0.01, 5, unload=True)
        _, sigma_und, _ = integrate(path, 10.0, DRY, PARAMS)
        self.assertGreater(_loop_area(path, sigma_und), 0.0)

    def test_moisture_softens(self):
        """Test the saturated response is softer than the dry one."""
        path = uniaxial_path(0.01, 4)
        _, dry, _ = integrate(path, 1.0, DRY, PARAMS)
        _, wet, _ = integrate(path, 1.0, SATURATED, PARAMS)
        self.assertGreater(dry[-1, 0, 0], wet[-1, 0, 0])

    def test_no_convergence(self):
        """Test a stalled fixed point raises with its residual."""
        with mock.patch('thermonet.classical.FIXED_POINT_MAX_ITER', 1):
            with self.assertRaises(IntegrationError) as ctx:
                step(OracleState(), np.diag([1.01, 1.0, 1.0]), 1.0, DRY,
                     PARAMS)
        self.assertGreater(ctx.exception.residual, 0.0)


class TestClassicalModel(unittest.TestCase):
    """Test the ClassicalModel wrapper."""

    def test_attributes(self):
        """Test the generic model interface."""
        model = ClassicalModel()
        self.assertEqual('<ClassicalModel: classical>', repr(model))
        self.assertEqual('classical', model.family)
        self.assertTrue(model.has_capability('damage'))
        self.assertFalse(model.has_capability('psi'))

    def test_curves(self):
        """Test the stress-strain table of a short sequence."""
        model = ClassicalModel()
        sequence = LoadedSequence(F=uniaxial_path(0.005, 3), dt=1.0,
                                  ambient=DRY)
        table = model.curves(sequence)
        self.assertEqual(4, len(table))
        for column in ('t', 'E11', 'E12', 's11', 's12', 'd'):
            self.assertIn(column, table.columns)
        self.assertEqual([0.0, 1.0, 2.0, 3.0], list(table['t']))
        self.assertAlmostEqual(0.5 * (1.005 ** 2 - 1.0),
                               table['E11'].iloc[-1])

    def test_stresses(self):
        """Test the undamaged stress history of a sequence."""
        model = ClassicalModel()
        path = uniaxial_path(0.005, 3)
        sequence = LoadedSequence(F=path, dt=1.0, ambient=DRY)
        _, expected, _ = integrate(path, 1.0, DRY, PARAMS)
        stresses = model.stresses(sequence)
        self.assertEqual((4, 3, 3), stresses.shape)
        np.testing.assert_allclose(expected, stresses)
