# coding: utf-8
# vim:sw=4:ts=4:et:
"""Viscoelastic-viscoplastic damage model of fiber reinforced,
nanoparticle filled epoxy.

The model splits the isochoric deformation into a viscoplastic and a
viscoelastic part, the latter again into an elastic and a viscous part.
An equilibrium branch acts on the viscoelastic deformation, a
non-equilibrium branch on the elastic one; both branches carry two
in-plane fiber families.  The undamaged stress is degraded by a scalar
Mullins-type damage variable driven by the maximum chain stretch.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.optimize import brentq

from thermonet.const import (
    AMPLIFICATION_FLOOR, BOLTZMANN, DEFAULT_TEMPERATURE, DET_TOL,
    FIBER_A0, FIBER_G0, FIXED_POINT_MAX_ITER, FIXED_POINT_TOL,
    MATERIAL_DEFAULTS, MOISTURE_RANGE, MSG_BAD_VALUE, MSG_DAMAGE_RANGE,
    MSG_DEGENERATE, MSG_DENOMINATOR, MSG_FIBER_STRETCH, MSG_FRACTION,
    MSG_NO_CONVERGENCE, MSG_UNKNOWN_KEY, MSG_YIELD, ZETA_IN_PLANE,
    ZETA_TRANSVERSE)
from thermonet.exceptions import (
    ConfigError, DegenerateDeformationError, IntegrationError,
    InvalidInputError, InvalidParameterError, InvalidStateError)
from thermonet.generic import ConstitutiveModel
from thermonet.kinematics import (
    IDENTITY, FiberFrame, deviatoric, frobenius_norm, green_strain,
    left_cauchy_green, polar_rotation)

_LOGGER = logging.getLogger(__name__)

EQUILIBRIUM = 'eq'
NON_EQUILIBRIUM = 'neq'

# largest exponent handed to exp() in the flow rule
_MAX_EXPONENT = 700.0


@dataclass
class MaterialParams(object):
    """Calibrated parameter set of the classical model."""

    mu_eq: float = MATERIAL_DEFAULTS['mu_eq']
    mu_neq: float = MATERIAL_DEFAULTS['mu_neq']
    kappa_v: float = MATERIAL_DEFAULTS['kappa_v']
    eps0_dot: float = MATERIAL_DEFAULTS['eps0_dot']
    deltaH: float = MATERIAL_DEFAULTS['deltaH']
    m: float = MATERIAL_DEFAULTS['m']
    y0: float = MATERIAL_DEFAULTS['y0']
    x0: float = MATERIAL_DEFAULTS['x0']
    b_s: float = MATERIAL_DEFAULTS['b_s']
    a_s: float = MATERIAL_DEFAULTS['a_s']
    a: float = MATERIAL_DEFAULTS['a']
    b: float = MATERIAL_DEFAULTS['b']
    sigma0: float = MATERIAL_DEFAULTS['sigma0']
    A_damage: float = MATERIAL_DEFAULTS['A_damage']
    alpha_w: float = MATERIAL_DEFAULTS['alpha_w']
    a1: float = MATERIAL_DEFAULTS['a1']
    a2: float = MATERIAL_DEFAULTS['a2']
    a3: float = MATERIAL_DEFAULTS['a3']
    eps0: float = MATERIAL_DEFAULTS['eps0']
    k_b: float = BOLTZMANN
    a0: tuple = FIBER_A0
    g0: tuple = FIBER_G0

    def __post_init__(self):
        for name in ('mu_eq', 'mu_neq', 'kappa_v', 'a1', 'sigma0', 'b_s',
                     'eps0_dot', 'deltaH', 'm'):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(
                    MSG_BAD_VALUE.format(name, getattr(self, name)))
        for name in ('a2', 'a3', 'eps0'):
            if getattr(self, name) < 0:
                raise InvalidParameterError(
                    MSG_BAD_VALUE.format(name, getattr(self, name)))
        self.a0 = tuple(float(v) for v in self.a0)
        self.g0 = tuple(float(v) for v in self.g0)

    @classmethod
    def from_dict(cls, data):
        """Build parameters from a nested key-value block."""
        known = set(item.name for item in fields(cls))
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(MSG_UNKNOWN_KEY.format('material', unknown))
        return cls(**data)

    def to_dict(self):
        """Return parameters as a plain dict."""
        data = asdict(self)
        data['a0'] = list(self.a0)
        data['g0'] = list(self.g0)
        return data

    @property
    def frame(self):
        """Return the reference fiber frame."""
        return FiberFrame(self.a0, self.g0)


@dataclass
class AmbientState(object):
    """Moisture, filler and temperature of a material point.

    ``v_f`` is the total fiber fraction, shared evenly by the two
    families unless ``v_f_families`` is given.
    """

    w_w: float = 0.0
    v_np: float = 0.0
    v_f: float = 0.0
    T: float = DEFAULT_TEMPERATURE
    v_f_families: tuple = None

    def __post_init__(self):
        if not MOISTURE_RANGE[0] <= self.w_w <= MOISTURE_RANGE[1]:
            raise InvalidInputError(
                MSG_FRACTION.format('w_w', MOISTURE_RANGE, self.w_w))
        if not 0.0 <= self.v_np < 1.0:
            raise InvalidInputError(
                MSG_FRACTION.format('v_np', '[0, 1)', self.v_np))
        if self.v_f_families is None:
            self.v_f_families = (0.5 * self.v_f, 0.5 * self.v_f)
        self.v_f_families = tuple(float(v) for v in self.v_f_families)
        if any(not 0.0 <= v < 1.0 for v in self.v_f_families) or \
                sum(self.v_f_families) >= 1.0:
            raise InvalidInputError(
                MSG_FRACTION.format('v_f', '[0, 1)', self.v_f_families))
        self.v_f = sum(self.v_f_families)
        if not self.T > 0:
            raise InvalidInputError(MSG_FRACTION.format('T', '(0, inf)',
                                                        self.T))

    @property
    def v_m(self):
        """Return the matrix volume fraction."""
        return 1.0 - sum(self.v_f_families)

    def features(self, names):
        """Return the named ambient features as a list."""
        return [float(getattr(self, name)) for name in names]

    def to_dict(self):
        """Return the state as a plain dict."""
        return {'w_w': self.w_w, 'v_np': self.v_np, 'v_f': self.v_f,
                'T': self.T, 'v_f_families': list(self.v_f_families)}

    @classmethod
    def from_dict(cls, data):
        """Build the state from a plain dict."""
        data = dict(data)
        if data.get('v_f_families') is not None:
            data['v_f_families'] = tuple(data['v_f_families'])
        return cls(**data)


@dataclass
class OracleState(object):
    """History variables carried between integration steps."""

    F_v: np.ndarray = field(default_factory=lambda: np.eye(3))
    F_vp: np.ndarray = field(default_factory=lambda: np.eye(3))
    d: float = 0.0
    lambda_chain_max: float = 1.0
    E_prev: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def copy(self):
        """Return a deep copy."""
        return OracleState(self.F_v.copy(), self.F_vp.copy(), self.d,
                           self.lambda_chain_max, self.E_prev.copy())


def amplification_factor(v_np, w_w):
    """Return the filler and moisture stiffness amplification X."""
    filler = 1.0 + 5.0 * v_np + 18.0 * v_np ** 2
    moisture = 1.0 + 0.057 * w_w ** 2 - 9.5 * w_w
    return max(filler * moisture, AMPLIFICATION_FLOOR)


def volumetric_split(F, w_w, alpha_w):
    """Return (J_m, F_iso, J_w) of the swelling-aware volumetric split."""
    F = np.asarray(F, dtype=float)
    det = np.linalg.det(F)
    if det <= DET_TOL:
        raise DegenerateDeformationError(MSG_DEGENERATE.format(det))
    J_w = 1.0 + alpha_w * w_w
    return det / J_w, det ** (-1.0 / 3.0) * F, J_w


def stiffness_ratio(I4, params):
    """Return the fiber to matrix stiffness ratio f(I4)."""
    return params.a1 + params.a2 * math.exp(params.a3 * (I4 - 1.0))


def stiffness_ratio_slope(I4, params):
    """Return df/dI4."""
    return params.a2 * params.a3 * math.exp(params.a3 * (I4 - 1.0))


def _shear_denominator(f, v_f, zeta):
    denominator = (1.0 - v_f) * f + (zeta + v_f)
    if denominator <= 0:
        raise InvalidParameterError(MSG_DENOMINATOR.format(denominator))
    return denominator


def shear_ratio(f, v_f, zeta):
    """Return the composite to matrix shear modulus ratio g."""
    numerator = (1.0 + zeta * v_f) * f + (1.0 - v_f) * zeta
    return numerator / _shear_denominator(f, v_f, zeta)


def shear_ratio_slope(f, v_f, zeta):
    """Return dg/df."""
    denominator = _shear_denominator(f, v_f, zeta)
    top = (1.0 + zeta * v_f) * (zeta + v_f) - (1.0 - v_f) * zeta * (1.0 - v_f)
    return top / denominator ** 2


def energy_derivatives(I1, I4, I5, mu, v_f, v_m, params):
    """Return (dpsi/dI1, dpsi/dI4, dpsi/dI5) of one fiber family."""
    if I4 <= 0:
        raise InvalidStateError(MSG_FIBER_STRETCH.format(I4))
    f = stiffness_ratio(I4, params)
    df = stiffness_ratio_slope(I4, params)
    g_in = shear_ratio(f, v_f, ZETA_IN_PLANE)
    g_tr = shear_ratio(f, v_f, ZETA_TRANSVERSE)
    dg_tr = shear_ratio_slope(f, v_f, ZETA_TRANSVERSE) * df
    root = math.sqrt(I4)

    dpsi_di1 = 0.5 * g_tr * mu
    # printed grouping kept term by term
    dpsi_di4 = 0.5 * mu * (
        v_f * df * (I4 + 2.0 / root - 3.0)
        + (v_m + v_f * f) * (1.0 - I4 ** -1.5)
        - g_in * (I5 / I4 ** 2 + 1.0)
        + g_tr * (I5 / I4 ** 2 + I4 ** -1.5)
        + (I5 - I4 ** 2) / (2.0 * I4) * dg_tr
        + 0.5 * (I1 - (I5 + 2.0 * root) / I4) * dg_tr)
    dpsi_di5 = (g_in - g_tr) * mu / (2.0 * I4)
    return dpsi_di1, dpsi_di4, dpsi_di5


def branch_kinematics(F_branch, fibers):
    """Return (B, J, (I1, I4s, I5s), current fiber directions)."""
    F_branch = np.asarray(F_branch, dtype=float)
    B = left_cauchy_green(F_branch)
    C = F_branch.T @ F_branch
    I4s, I5s, current = [], [], []
    for a0 in fibers:
        stretched = F_branch @ a0
        I4 = float(stretched @ stretched)
        c_a0 = C @ a0
        I4s.append(I4)
        I5s.append(float(c_a0 @ c_a0))
        current.append(stretched / math.sqrt(I4))
    return B, float(np.linalg.det(F_branch)), \
        (float(np.trace(C)), I4s, I5s), current


def branch_stress(B_branch, fibers_current, invariants_branch, params,
                  ambient, branch_tag, J_branch=1.0, J_m=1.0):
    """Return the Cauchy stress of the equilibrium or non-equilibrium branch.

    ``invariants_branch`` is ``(I1, I4s, I5s)`` with one I4/I5 entry per
    fiber family; ``fibers_current`` holds the matching current unit
    fiber directions.
    """
    if branch_tag == EQUILIBRIUM:
        mu = params.mu_eq
    elif branch_tag == NON_EQUILIBRIUM:
        mu = params.mu_neq
    else:
        raise InvalidInputError(MSG_BAD_VALUE.format('branch', branch_tag))
    mu *= amplification_factor(ambient.v_np, ambient.w_w)

    B_branch = np.asarray(B_branch, dtype=float)
    I1, I4s, I5s = invariants_branch
    dev_b = deviatoric(B_branch)
    sigma = np.zeros((3, 3))
    for a_cur, I4, I5, v_f in zip(fibers_current, I4s, I5s,
                                  ambient.v_f_families):
        d1, d4, d5 = energy_derivatives(I1, I4, I5, mu, v_f, ambient.v_m,
                                        params)
        b_a = B_branch @ a_cur
        sigma += d1 * dev_b
        sigma += d4 * I4 * (np.outer(a_cur, a_cur) - IDENTITY / 3.0)
        sigma += d5 * (I4 * (np.outer(a_cur, b_a) + np.outer(b_a, a_cur))
                       - 2.0 / 3.0 * I5 * IDENTITY)
    sigma *= 2.0 / J_branch
    if branch_tag == NON_EQUILIBRIUM:
        sigma += params.kappa_v * (J_m - 1.0 / J_m) * IDENTITY
    return 0.5 * (sigma + sigma.T)


def athermal_yield(lambda_chain_max, params):
    """Return tau_0 modulated by the maximum chain stretch."""
    argument = -(lambda_chain_max - params.x0) / params.b_s
    if argument > _MAX_EXPONENT:
        tau0 = params.y0
    else:
        tau0 = params.y0 + params.a_s / (1.0 + math.exp(argument))
    if tau0 <= 0:
        raise InvalidParameterError(MSG_YIELD.format(tau0))
    return tau0


def viscous_flow(tau_neq, lambda_chain_max, T, params):
    """Return the thermally activated viscous flow rate."""
    tau0 = athermal_yield(lambda_chain_max, params)
    exponent = params.deltaH / (params.k_b * T) * \
        ((tau_neq / tau0) ** params.m - 1.0)
    return params.eps0_dot * math.exp(min(exponent, _MAX_EXPONENT))


def viscoplastic_flow(tau_tot, eps_eff, eps_eff_rate, params):
    """Return the phenomenological viscoplastic flow rate."""
    if tau_tot < params.sigma0 or eps_eff <= params.eps0:
        return 0.0
    return params.a * (eps_eff - params.eps0) ** params.b * eps_eff_rate


def damage_increment(d, lambda_chain, lambda_chain_max, delta_lambda=None,
                     A=MATERIAL_DEFAULTS['A_damage']):
    """Return (d, lambda_chain_max) after one increment.

    The growth law is integrated exactly over the increment, so the
    result stays below one for any finite stretch.
    """
    if not 0.0 <= d < 1.0:
        raise InvalidInputError(MSG_DAMAGE_RANGE.format(d))
    if lambda_chain < lambda_chain_max:
        return d, lambda_chain_max
    growth = lambda_chain - lambda_chain_max
    if delta_lambda is not None:
        growth = min(growth, max(delta_lambda, 0.0))
    d_next = 1.0 - (1.0 - d) * math.exp(-A * growth)
    return min(d_next, np.nextafter(1.0, 0.0)), lambda_chain


def _unimodular(tensor):
    det = np.linalg.det(tensor)
    if det <= DET_TOL:
        raise InvalidStateError(MSG_DEGENERATE.format(det))
    return tensor / det ** (1.0 / 3.0)


def _implicit_magnitude(tau_of, rate_of, dt):
    """Solve g = dt * rate(tau(g)) for the flow increment g >= 0."""
    tau_start = tau_of(0.0)
    upper = dt * rate_of(tau_start)
    if tau_start <= 0.0 or upper <= 0.0:
        return 0.0
    # stop at full relaxation of the driving stress
    small = min(upper, 1e-7)
    slope = (tau_start - tau_of(small)) / small
    if slope > 0:
        upper = min(upper, tau_start / slope)

    def residual(increment):
        return increment - dt * rate_of(tau_of(increment))

    if residual(upper) <= 0.0:
        return upper
    return brentq(residual, 0.0, upper, xtol=1e-16, rtol=1e-12)


class _Iterate(object):
    """Stresses of the two branches for given inelastic parts."""

    def __init__(self, F_iso, F_v, F_vp, J_m, ambient, params):
        fibers = [np.asarray(params.a0), np.asarray(params.g0)]
        self.F_ve = F_iso @ np.linalg.inv(F_vp)
        self.F_e = self.F_ve @ np.linalg.inv(F_v)
        B, J, inv, cur = branch_kinematics(self.F_ve, fibers)
        self.sigma_eq = branch_stress(B, cur, inv, params, ambient,
                                      EQUILIBRIUM, J_branch=J)
        B, J, inv, cur = branch_kinematics(self.F_e, fibers)
        self.sigma_neq = branch_stress(B, cur, inv, params, ambient,
                                       NON_EQUILIBRIUM, J_branch=J, J_m=J_m)

    @property
    def sigma(self):
        """Return the undamaged total stress."""
        return self.sigma_eq + self.sigma_neq


def _neq_driving_stress(F_ve, F_v, J_m, ambient, params):
    fibers = [np.asarray(params.a0), np.asarray(params.g0)]
    F_e = F_ve @ np.linalg.inv(F_v)
    B, J, inv, cur = branch_kinematics(F_e, fibers)
    sigma = branch_stress(B, cur, inv, params, ambient, NON_EQUILIBRIUM,
                          J_branch=J, J_m=J_m)
    return frobenius_norm(deviatoric(sigma))


def step(state, F_next, dt, ambient, params):
    """Advance the classical model by one backward Euler increment.

    Returns ``(state, sigma_total, sigma_undamaged)``.
    """
    if not dt > 0:
        raise InvalidInputError(MSG_BAD_VALUE.format('dt', dt))
    F_next = np.asarray(F_next, dtype=float)
    J_m, F_iso, _ = volumetric_split(F_next, ambient.w_w, params.alpha_w)

    E_next = green_strain(F_next)
    eps_eff = float(frobenius_norm(E_next))
    eps_rate = max(0.0, (eps_eff - float(frobenius_norm(state.E_prev))) / dt)

    F_v, F_vp = state.F_v.copy(), state.F_vp.copy()
    increment = np.inf
    for iteration in range(FIXED_POINT_MAX_ITER):
        it = _Iterate(F_iso, F_v, F_vp, J_m, ambient, params)

        # viscoplastic update in the relaxed configuration of F_ve
        rot = polar_rotation(it.F_ve)
        relaxed_tot = rot.T @ it.sigma @ rot
        tau_tot = float(frobenius_norm(relaxed_tot))
        rate_vp = viscoplastic_flow(tau_tot, eps_eff, eps_rate, params)
        F_vp_new = state.F_vp
        if rate_vp > 0:
            flow = np.linalg.inv(it.F_ve) @ deviatoric(relaxed_tot) @ F_iso
            F_vp_new = _unimodular(state.F_vp + dt * rate_vp / tau_tot * flow)

        # viscous update, magnitude implicit along the current direction
        F_v_new = state.F_v
        dev_neq = deviatoric(it.sigma_neq)
        tau_neq = float(frobenius_norm(dev_neq))
        if tau_neq > 0:
            rot = polar_rotation(it.F_e)
            direction = np.linalg.inv(it.F_e) @ (rot.T @ dev_neq @ rot) \
                @ it.F_ve / tau_neq
            F_ve_new = F_iso @ np.linalg.inv(F_vp_new)

            def trial(gamma, start=state.F_v, direction=direction):
                return _unimodular(start + gamma * direction)

            def tau_of(gamma, F_ve_new=F_ve_new, trial=trial):
                return _neq_driving_stress(F_ve_new, trial(gamma), J_m,
                                           ambient, params)

            def rate_of(tau):
                return viscous_flow(tau, state.lambda_chain_max, ambient.T,
                                    params)

            F_v_new = trial(_implicit_magnitude(tau_of, rate_of, dt))

        increment = float(frobenius_norm(F_v_new - F_v) +
                          frobenius_norm(F_vp_new - F_vp))
        F_v, F_vp = F_v_new, F_vp_new
        if increment < FIXED_POINT_TOL:
            break
    else:
        _LOGGER.warning("Fixed point stalled at residual %.3e", increment)
        raise IntegrationError(
            MSG_NO_CONVERGENCE.format(FIXED_POINT_MAX_ITER, increment),
            residual=increment)
    _LOGGER.debug("Converged after %d iterations", iteration + 1)

    it = _Iterate(F_iso, F_v, F_vp, J_m, ambient, params)
    sigma_undamaged = it.sigma
    lambda_chain = math.sqrt(np.trace(left_cauchy_green(F_iso)) / 3.0)
    d_next, lambda_max = damage_increment(
        state.d, lambda_chain, state.lambda_chain_max, A=params.A_damage)
    next_state = OracleState(F_v, F_vp, d_next, lambda_max, E_next)
    return next_state, (1.0 - d_next) * sigma_undamaged, sigma_undamaged


def integrate(path, dts, ambient, params, state=None):
    """Run step() along a path of deformation gradients.

    Returns ``(sigma_total, sigma_undamaged, damage)`` with one entry per
    frame; the first frame is evaluated with zero elapsed time and
    leaves the state untouched.
    """
    state = OracleState() if state is None else state.copy()
    path = np.asarray(path, dtype=float)
    dts = np.broadcast_to(np.asarray(dts, dtype=float), (len(path),))
    sig_tot = np.zeros((len(path), 3, 3))
    sig_und = np.zeros((len(path), 3, 3))
    damage = np.zeros(len(path))
    for k, F in enumerate(path):
        if k == 0:
            J_m, F_iso, _ = volumetric_split(F, ambient.w_w, params.alpha_w)
            it = _Iterate(F_iso, state.F_v, state.F_vp, J_m, ambient, params)
            sig_und[k] = it.sigma
            sig_tot[k] = (1.0 - state.d) * it.sigma
            damage[k] = state.d
            state.E_prev = green_strain(F)
            continue
        state, sig_tot[k], sig_und[k] = step(state, F, dts[k], ambient,
                                             params)
        damage[k] = state.d
    return sig_tot, sig_und, damage


class ClassicalModel(ConstitutiveModel):
    """Implementation of the classical damage model as a data oracle."""

    def __init__(self, params=None, name='classical'):
        """Initialize the classical model."""
        self.params = params or MaterialParams()
        super(ClassicalModel, self).__init__(name, self.params.frame)

    @property
    def family(self):
        """Return model family."""
        return 'classical'

    def has_capability(self, capability):
        """Return if model exposes a specific output."""
        return capability in ('damage', 'stress')

    def step(self, state, F_next, dt, ambient):
        """Advance one increment, see :func:`step`."""
        return step(state, F_next, dt, ambient, self.params)

    def integrate(self, path, dts, ambient, state=None):
        """Integrate a path, see :func:`integrate`."""
        return integrate(path, dts, ambient, self.params, state=state)

    def rollout(self, sequence):
        """Return damaged stress, undamaged stress and damage histories."""
        sig_tot, sig_und, damage = self.integrate(
            sequence.F, sequence.dt, sequence.ambient)
        return {'sigma': sig_tot, 'sigma_undamaged': sig_und, 'd': damage}

    def stresses_from(self, outputs):
        """Return the undamaged stress of rollout outputs."""
        return outputs['sigma_undamaged']

    def _extra_columns(self, sequence, outputs):
        return {'d': outputs['d']}
