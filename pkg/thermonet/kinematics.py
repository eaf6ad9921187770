# coding: utf-8
# vim:sw=4:ts=4:et:
"""Finite-deformation tensor algebra.

Every function accepts a single 3x3 tensor or a stack of them with shape
(..., 3, 3) and returns arrays of matching leading shape.
"""
import logging

import numpy as np

from thermonet.const import (
    DET_TOL, MSG_ASYMMETRIC, MSG_DEGENERATE, MSG_NOT_UNIT, MSG_SINGULAR,
    SYMMETRY_TOL)
from thermonet.exceptions import DegenerateDeformationError, InvalidInputError

_LOGGER = logging.getLogger(__name__)

IDENTITY = np.eye(3)


class FiberFrame(object):
    """Reference fiber directions of up to two fiber families."""

    def __init__(self, a0=None, g0=None):
        """Initialize the frame, leave both empty for isotropy."""
        self.a0 = _unit(a0)
        self.g0 = _unit(g0)
        if self.a0 is None and self.g0 is not None:
            raise InvalidInputError('Second fiber family requires a first.')

    def __repr__(self):
        """Return __repr__."""
        return "<{0}: a0={1} g0={2}>".format(
            self.__class__.__name__, self.a0, self.g0)

    @property
    def families(self):
        """Return the fiber directions present."""
        return [vec for vec in (self.a0, self.g0) if vec is not None]

    @property
    def invariant_count(self):
        """Return number of invariants this frame yields."""
        if self.g0 is not None:
            return 8
        if self.a0 is not None:
            return 5
        return 3

    @property
    def is_isotropic(self):
        """Return whether the frame carries no fibers."""
        return self.a0 is None


def _unit(vec):
    """Return vec as array after checking its length."""
    if vec is None:
        return None
    vec = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > 1e-12:
        raise InvalidInputError(MSG_NOT_UNIT.format(norm))
    return vec


def transpose(tensor):
    """Swap the last two axes."""
    return np.swapaxes(tensor, -1, -2)


def frobenius_norm(tensor):
    """Return ||T||_F."""
    return np.sqrt(np.einsum('...ij,...ij->...', tensor, tensor))


def trace(tensor):
    """Return tr T."""
    return np.einsum('...ii->...', tensor)


def deviatoric(tensor):
    """Return dev[T] = T - tr(T)/3 I."""
    return tensor - trace(tensor)[..., None, None] / 3.0 * IDENTITY


def _check_invertible(F):
    det = np.linalg.det(F)
    if np.any(det <= DET_TOL):
        raise DegenerateDeformationError(MSG_DEGENERATE.format(np.min(det)))
    return det


def _symmetrized(tensor):
    """Return (T + T^T)/2 after checking T is symmetric."""
    tensor = np.asarray(tensor, dtype=float)
    skew = np.max(np.abs(tensor - transpose(tensor)))
    scale = max(1.0, float(np.max(frobenius_norm(tensor))))
    if skew > SYMMETRY_TOL * scale:
        raise InvalidInputError(MSG_ASYMMETRIC.format(skew))
    return 0.5 * (tensor + transpose(tensor))


def right_cauchy_green(F):
    """Return C = F^T F."""
    F = np.asarray(F, dtype=float)
    _check_invertible(F)
    return np.einsum('...ki,...kj->...ij', F, F)


def left_cauchy_green(F):
    """Return B = F F^T."""
    F = np.asarray(F, dtype=float)
    return np.einsum('...ik,...jk->...ij', F, F)


def green_strain(F):
    """Return E = (F^T F - I)/2."""
    F = np.asarray(F, dtype=float)
    return 0.5 * (np.einsum('...ki,...kj->...ij', F, F) - IDENTITY)


def _quadratic(vec_a, tensor, vec_b):
    return np.einsum('i,...ij,j->...', vec_a, tensor, vec_b)


def invariants(C, frame):
    """Return the invariants I1..I3 (isotropic) or I1..I8 of C.

    The last axis of the result indexes the invariant.
    """
    C = _symmetrized(C)
    C2 = np.einsum('...ik,...kj->...ij', C, C)
    tr_c = trace(C)
    values = [tr_c, 0.5 * (tr_c ** 2 - trace(C2)), np.linalg.det(C)]
    if frame.a0 is not None:
        values += [_quadratic(frame.a0, C, frame.a0),
                   _quadratic(frame.a0, C2, frame.a0)]
    if frame.g0 is not None:
        cosine = float(np.dot(frame.a0, frame.g0))
        values += [_quadratic(frame.g0, C, frame.g0),
                   _quadratic(frame.g0, C2, frame.g0),
                   cosine * _quadratic(frame.a0, C, frame.g0)]
    return np.stack(values, axis=-1)


def identity_invariants(frame):
    """Return the invariants of the undeformed state C = I."""
    return invariants(IDENTITY, frame)


def _dyad(vec_a, vec_b):
    return np.einsum('...i,...j->...ij', vec_a, vec_b)


def invariant_derivatives(C, frame):
    """Return dI_k/dC stacked along axis -3, each one symmetric."""
    C = _symmetrized(C)
    det = np.linalg.det(C)
    if np.any(np.abs(det) <= DET_TOL):
        raise InvalidInputError(MSG_SINGULAR)
    try:
        c_inv = np.linalg.inv(C)
    except np.linalg.LinAlgError:
        raise InvalidInputError(MSG_SINGULAR)
    c_inv = 0.5 * (c_inv + transpose(c_inv))
    ones = np.ones(C.shape[:-2] + (3, 3))
    i1 = trace(C)[..., None, None]
    derivs = [ones * IDENTITY, i1 * IDENTITY - C, det[..., None, None] * c_inv]
    for vec in frame.families:
        c_vec = np.einsum('...ij,j->...i', C, vec)
        derivs.append(ones * np.outer(vec, vec))
        derivs.append(_dyad(vec, c_vec) + _dyad(c_vec, vec))
    if frame.g0 is not None:
        cosine = float(np.dot(frame.a0, frame.g0))
        mixed = np.outer(frame.a0, frame.g0) + np.outer(frame.g0, frame.a0)
        derivs.append(ones * 0.5 * cosine * mixed)
    return np.stack(derivs, axis=-3)


def polar_rotation(F):
    """Return R of F = R U from the eigendecomposition of C."""
    F = np.asarray(F, dtype=float)
    _check_invertible(F)
    C = np.einsum('...ki,...kj->...ij', F, F)
    eigval, eigvec = np.linalg.eigh(C)
    inv_stretch = np.einsum('...ik,...k,...jk->...ij',
                            eigvec, 1.0 / np.sqrt(eigval), eigvec)
    return np.einsum('...ik,...kj->...ij', F, inv_stretch)


def polar_stretch(F):
    """Return the right stretch U = C^(1/2)."""
    C = right_cauchy_green(F)
    eigval, eigvec = np.linalg.eigh(C)
    return np.einsum('...ik,...k,...jk->...ij',
                     eigvec, np.sqrt(eigval), eigvec)


def cauchy_from_pk2(F, S):
    """Return sigma = J^-1 F S F^T."""
    F = np.asarray(F, dtype=float)
    det = np.linalg.det(F)
    sigma = np.einsum('...ik,...kl,...jl->...ij', F, S, F)
    return sigma / det[..., None, None]


def sym_to_voigt(tensor):
    """Return the six independent entries 11, 22, 33, 23, 13, 12."""
    return np.stack([tensor[..., 0, 0], tensor[..., 1, 1], tensor[..., 2, 2],
                     tensor[..., 1, 2], tensor[..., 0, 2], tensor[..., 0, 1]],
                    axis=-1)


def voigt_to_sym(values):
    """Return the symmetric tensor of six Voigt entries."""
    values = np.asarray(values, dtype=float)
    out = np.empty(values.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(VOIGT_INDEX):
        out[..., i, j] = values[..., k]
        out[..., j, i] = values[..., k]
    return out


VOIGT_INDEX = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
VOIGT_LABELS = ('11', '22', '33', '23', '13', '12')
