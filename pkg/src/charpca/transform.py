"""Characteristic lift ``y -> (cos y, sin y)`` and its inverse.

The lift maps each coordinate onto the unit circle, so the lifted data is
bounded no matter how heavy the tails of the input are. Going back needs a
complex argument plus an integer number of turns (the branch), which is
estimated against a reference sample.
"""
import enum
import logging
import math

import numpy as np

from .errors import DegenerateReconstructionError, DimensionError, ValidationError
from .linalg import as_data_matrix

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
MODULUS_FLOOR = 1e-12


class BranchMode(enum.Enum):
    """How the integer number of turns is chosen when inverting the lift."""

    PER_SAMPLE = "per-sample"
    PER_COORDINATE = "per-coordinate"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower().replace("_", "-"))


def char_transform(Y):
    """Lift a ``p x n`` matrix to ``2p x n``: cosines on top, sines below."""
    Y = as_data_matrix(Y, "Y")
    return np.vstack([np.cos(Y), np.sin(Y)])


def principal_arg(z_re, z_im):
    """Principal argument in ``(-pi, pi]``.

    The negative real axis maps to ``+pi`` (``atan2`` would give ``-pi`` for a
    negative-zero imaginary part).
    """
    if z_re == 0.0 and z_im == 0.0:
        raise DegenerateReconstructionError("argument of zero is undefined", [(0, 0)])
    a = math.atan2(z_im, z_re)
    return math.pi if a == -math.pi else a


def _arg_array(Z_re, Z_im):
    a = np.arctan2(Z_im, Z_re)
    a[a == -math.pi] = math.pi
    return a


def estimate_branch(y, arg_recon, mode=BranchMode.PER_SAMPLE):
    """Integer turns ``h`` minimising ``||y - (arg_recon + 2 pi h)||^2``.

    ``y`` and ``arg_recon`` are either length-``p`` vectors (one sample) or
    ``p x n`` matrices (columns are samples). Per-sample mode returns one
    integer per sample, the rounded mean of the coordinate gaps in turns;
    per-coordinate mode rounds each gap separately.
    """
    mode = BranchMode.parse(mode)
    y = np.asarray(y, dtype=float)
    arg_recon = np.asarray(arg_recon, dtype=float)
    if y.shape != arg_recon.shape:
        raise DimensionError(f"shape mismatch: {y.shape} vs {arg_recon.shape}")
    turns = (y - arg_recon) / TWO_PI
    if mode is BranchMode.PER_COORDINATE:
        h = np.floor(turns + 0.5)
    else:
        h = np.floor(turns.mean(axis=0) + 0.5)
    if h.ndim == 0:
        return int(h)
    return h.astype(np.int64)


def inverse_transform(Z_re, Z_im, Y_ref, mode=BranchMode.PER_SAMPLE, lenient=False):
    """Map a reconstructed ``z = Z_re + i Z_im`` back to the real line.

    Returns ``arg(z) + 2 pi h`` with ``h`` picked against ``Y_ref`` by
    :func:`estimate_branch`. The modulus of ``z`` is discarded. Entries with
    ``|z| < 1e-12`` raise :class:`DegenerateReconstructionError`, unless
    ``lenient`` is set, in which case their angle is taken as 0.
    """
    mode = BranchMode.parse(mode)
    Z_re = np.asarray(Z_re, dtype=float)
    Z_im = np.asarray(Z_im, dtype=float)
    Y_ref = as_data_matrix(Y_ref, "Y_ref")
    if Z_re.ndim == 1:
        Z_re = Z_re.reshape(-1, 1)
        Z_im = Z_im.reshape(-1, 1)
    if not (Z_re.shape == Z_im.shape == Y_ref.shape):
        raise DimensionError(
            f"shape mismatch: Z_re {Z_re.shape}, Z_im {Z_im.shape}, Y_ref {Y_ref.shape}"
        )
    if not (np.isfinite(Z_re).all() and np.isfinite(Z_im).all()):
        raise ValidationError("reconstructed z has non-finite entries")
    angle = _arg_array(Z_re, Z_im)
    small = np.hypot(Z_re, Z_im) < MODULUS_FLOOR
    if small.any():
        coords = [tuple(int(i) for i in rc) for rc in np.argwhere(small)]
        if not lenient:
            raise DegenerateReconstructionError(
                f"{len(coords)} reconstructed entries have modulus below {MODULUS_FLOOR:g}",
                coords,
            )
        log.warning(
            "degenerate reconstruction in samples %s; using angle 0",
            sorted({c for _, c in coords}),
        )
        angle[small] = 0.0
    h = estimate_branch(Y_ref, angle, mode)
    return angle + TWO_PI * h
