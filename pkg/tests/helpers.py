"""Helper methods for thermonet tests."""
import json
import os

import numpy as np


def load_fixture(filename):
    """Load a fixture."""
    path = os.path.join(os.path.dirname(__file__), 'fixtures', filename)
    with open(path) as fdp:
        return fdp.read()


def load_json_fixture(filename):
    """Load a JSON fixture."""
    return json.loads(load_fixture(filename))


def random_rotation(rng):
    """Return a proper rotation drawn from rng."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_deformation(rng, amplitude=0.02):
    """Return a deformation gradient close to the identity."""
    return np.eye(3) + amplitude * rng.uniform(-1.0, 1.0, size=(3, 3))


def uniaxial_path(strain, steps, unload=False):
    """Return frames of a uniaxial stretch along e1, optionally unloaded."""
    amounts = list(np.linspace(0.0, strain, steps + 1))
    if unload:
        amounts += list(np.linspace(strain, 0.0, steps + 1))[1:]
    path = np.tile(np.eye(3), (len(amounts), 1, 1))
    path[:, 0, 0] += amounts
    return path
