# coding: utf-8
# vim:sw=4:ts=4:et:
"""Generic constitutive model shared by the classical and learned models."""
import logging

import numpy as np
import pandas as pd

from thermonet.kinematics import (
    VOIGT_LABELS, green_strain, sym_to_voigt)

_LOGGER = logging.getLogger(__name__)


# pylint: disable=useless-object-inheritance
class ConstitutiveModel(object):
    """Generic implementation for a path-dependent material model."""

    def __init__(self, name, frame):
        """Initialize the generic model."""
        self.name = name
        self.frame = frame

    def __repr__(self):
        """Return __repr__."""
        return "<{0}: {1}>".format(self.__class__.__name__, self.name)

    @property
    def family(self):
        """Return model family."""
        return None

    def has_capability(self, capability):
        """Return if model exposes a specific output."""
        return False

    def rollout(self, sequence):
        """Return the per-step outputs over a loaded sequence."""
        raise NotImplementedError

    def stresses(self, sequence):
        """Return the undamaged Cauchy stress history, shape (T, 3, 3)."""
        return self.stresses_from(self.rollout(sequence))

    def _extra_columns(self, sequence, outputs):
        """Return model specific curve columns."""
        return {}

    def curves(self, sequence, outputs=None):
        """Return a stress-strain table of the sequence."""
        if outputs is None:
            outputs = self.rollout(sequence)
        sigma = self.stresses_from(outputs)
        strain = sym_to_voigt(green_strain(sequence.F))
        stress = sym_to_voigt(sigma)
        table = {'t': np.concatenate([[0.0], np.cumsum(sequence.dt[1:])])}
        for k, label in enumerate(VOIGT_LABELS):
            table['E' + label] = strain[:, k]
        for k, label in enumerate(VOIGT_LABELS):
            table['s' + label] = stress[:, k]
        table.update(self._extra_columns(sequence, outputs))
        _LOGGER.debug("%s built %d curve rows", self.name, len(strain))
        return pd.DataFrame(table)

    def stresses_from(self, outputs):
        """Return the stress history contained in rollout outputs."""
        raise NotImplementedError
