# coding: utf-8
# vim:sw=4:ts=4:et:
"""Constants."""
import os

# package data format versions
DATASET_FORMAT_VERSION = 1
CHECKPOINT_FORMAT_VERSION = 1

# Boltzmann constant (J/K)
BOLTZMANN = 1.380649e-23

# symmetry tolerance, relative
SYMMETRY_TOL = 1e-12

# smallest admissible det F
DET_TOL = 1e-12

# lower clamp of the filler/moisture amplification factor
AMPLIFICATION_FLOOR = 0.01

# shear ratio selectors
ZETA_IN_PLANE = 1.0
ZETA_TRANSVERSE = 0.4

# fiber directions of the two in-plane families
FIBER_A0 = (1.0, 0.0, 0.0)
FIBER_G0 = (0.0, 1.0, 0.0)

# symmetry classes
ISOTROPIC = 'isotropic'
TRANSVERSE = 'transversely-isotropic'
SYMMETRY_CLASSES = (ISOTROPIC, TRANSVERSE)

# calibrated viscoelastic-viscoplastic damage parameters
MATERIAL_DEFAULTS = {
    'mu_eq': 525.0,
    'mu_neq': 295.0,
    'kappa_v': 1311.0,
    'eps0_dot': 1.0447e12,
    'deltaH': 1.977e-19,
    'm': 0.837,
    'y0': 80.0,
    'x0': 1.72,
    'b_s': 0.394,
    'a_s': -40.17,
    'a': 48.37,
    'b': 1.02,
    'sigma0': 5.5,
    'A_damage': 943.87,
    'alpha_w': 0.039,
    'a1': 9.0,
    'a2': 1.0,
    'a3': 1.0,
    'eps0': 0.0,
}

# ambient defaults
DEFAULT_TEMPERATURE = 296.15
SATURATED_MOISTURE = 0.05
MOISTURE_RANGE = (0.0, 0.1)

# backward Euler fixed point
FIXED_POINT_TOL = 1e-8
FIXED_POINT_MAX_ITER = 50

# loading path bounds
TRAIN_BOUNDS_DIAG = (0.98, 1.02)
TRAIN_BOUNDS_OFFDIAG = (-0.02, 0.02)
EXTRAPOLATION_BOUNDS_DIAG = (0.97, 1.03)
EXTRAPOLATION_BOUNDS_OFFDIAG = (-0.03, 0.03)

# one prime base per deformation component, row-major
HALTON_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23)

# redraws allowed per sequence before the rate filter gives up
MAX_REDRAWS = 20
MAX_SKIP_RATE = 0.5

PATH_DEFAULTS = {
    'bounds_diag': list(TRAIN_BOUNDS_DIAG),
    'bounds_offdiag': list(TRAIN_BOUNDS_OFFDIAG),
    'points_P': 2,
    'steps_per_segment': 100,
    'dt': 1.0,
    'rate_min': 1e-5,
    'rate_max': 1e-3,
    'ambient_grid': {
        'w_w': [0.0, SATURATED_MOISTURE],
        'materials': [[0.05, 0.25], [0.20, 0.20]],
        'T': [DEFAULT_TEMPERATURE],
    },
    'sequence_count': 1000,
    'validation_count': 200,
    'halton_seed_offset': 0,
    'extrapolation': False,
}

MODEL_DEFAULTS = {
    'n_internal': 10,
    'symmetry': TRANSVERSE,
    'lstm_width': 100,
    'lstm_layers': 2,
    'znn_widths': [100, 100],
    'psi_widths': [100, 100],
    'ambient_features': ['w_w', 'v_np', 'v_f', 'T'],
    'fiber_a0': list(FIBER_A0),
    'fiber_g0': list(FIBER_G0),
}

# hyperparameters, names as published
TRAINING_DEFAULTS = {
    'learning_rate': 1e-3,
    'epochs': 5000,
    'batch_size': 32,
    'hidden_layers': 2,
    'neurons': 100,
    'n_internal': 10,
    'beta_init': 1.0,
    'beta_update_every': 10,
    'adaptive_beta': True,
    'alpha_start': 0.2,
    'alpha_end': 0.05,
    'decay_horizon': 5000,
    'seed': 42,
    'checkpoint_every': 100,
}

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

# quick profile for CI
QUICK_PROFILE = {
    'paths': {'sequence_count': 50, 'validation_count': 10},
    'model': {'lstm_width': 20, 'znn_widths': [20, 20],
              'psi_widths': [20, 20]},
    'training': {'epochs': 500, 'neurons': 20},
}

# evaluation tolerances
DISSIPATION_REL_TOL = 1e-6
PSI_NEGATIVE_TOL = 1e-8

# environment
SEED_ENV = 'THERMONET_SEED'

# file naming
META_SUFFIX = '.meta.json'
VALIDATION_SUFFIX = '_val'
CSV_FLOAT_FORMAT = '%.12g'

# CLI exit codes
EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

try:
    DEFAULT_OUTPUT_DIR = os.path.join(os.getcwd(), 'thermonet-out')
except OSError:
    DEFAULT_OUTPUT_DIR = os.path.join('.', 'thermonet-out')

# error strings
MSG_DEGENERATE = 'Deformation gradient is degenerate (det F = {0:.3e}).'
MSG_ASYMMETRIC = 'Tensor is not symmetric (|T - T^T| = {0:.3e}).'
MSG_SINGULAR = 'Tensor is singular and cannot be inverted.'
MSG_NOT_UNIT = 'Fiber direction must be a unit vector (|a| = {0:.15g}).'
MSG_DENOMINATOR = 'Shear ratio denominator is not positive ({0:.3e}).'
MSG_YIELD = 'Athermal yield stress is not positive ({0:.3e}).'
MSG_FIBER_STRETCH = 'Fiber invariant I4 must be positive ({0:.3e}).'
MSG_NO_CONVERGENCE = ('Fixed-point iteration did not converge after {0} '
                      'iterations (residual {1:.3e}).')
MSG_DAMAGE_RANGE = 'Damage must lie in [0, 1) (d = {0}).'
MSG_FRACTION = '{0} must lie in {1} (got {2}).'
MSG_SHAPE = 'Shape mismatch: expected {0}, got {1}.'
MSG_NOT_SCALAR = 'Differentiation target must be a scalar (shape {0}).'
MSG_NON_FINITE = 'Non-finite value in {0}.'
MSG_UNFITTED = 'Feature scaler has not been fitted.'
MSG_UNKNOWN_KEY = 'Unknown configuration key(s) in {0}: {1}.'
MSG_BAD_VALUE = 'Invalid configuration value for {0}: {1}.'
MSG_SKIP_RATE = 'Generation failed: {0} of {1} sequences skipped.'
MSG_REDRAW = 'No loading path within the rate window after {0} redraws.'
MSG_MISSING_FILE = 'File {0} does not exist.'
MSG_FORMAT = 'Unsupported {0} format version {1}.'
MSG_SYMMETRY_MISMATCH = 'Sequence and model disagree on {0}.'
