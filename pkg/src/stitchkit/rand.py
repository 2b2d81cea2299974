"""Seed derivation and Haar-random unitaries.

Every stochastic routine takes either an integer seed or a
``numpy.random.Generator``. Derived streams use ``SeedSequence`` spawn keys,
so a (master seed, key path) pair always reproduces the same stream
regardless of how work is scheduled.
"""

from __future__ import annotations

import numpy as np


def as_generator(seed) -> np.random.Generator:
    """Return a Generator for ``seed`` (int, SeedSequence, Generator or None)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(master: int, *keys: int) -> np.random.SeedSequence:
    """Child seed sequence identified by an integer key path."""
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))


def derive_rng(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))


def derive_int(master: int, *keys: int) -> int:
    """A 63-bit integer seed for a key path, convenient for serialization."""
    return int(derive_seed(master, *keys).generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> 1)


def haar_unitary(dim: int, rng, size=None) -> np.ndarray:
    """Haar-random unitaries from complex Ginibre matrices and QR.

    Parameters
    ----------
    dim : int
        Matrix dimension.
    rng : Generator or seed
    size : int or None
        Number of unitaries; ``None`` returns a single matrix.

    Returns
    -------
    ndarray
        Shape ``(dim, dim)`` or ``(size, dim, dim)``.
    """
    rng = as_generator(rng)
    shape = (dim, dim) if size is None else (int(size), dim, dim)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    # multiply column j of q by phase_j so that R has a positive diagonal
    return q * phase[..., None, :]
