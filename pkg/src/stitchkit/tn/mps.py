"""Open-boundary matrix product states.

Site tensors have shape ``(left_bond, 2, right_bond)`` and site 0 is the
leftmost qubit, matching the dense convention where qubit 0 is the most
significant bit of a basis index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dense import MAX_DENSE_QUBITS
from ..errors import PreconditionError, SizeLimitError
from ..rand import as_generator

CANONICAL_TOL = 1e-10


@dataclass(frozen=True)
class MPS:
    """An open-boundary MPS.

    Parameters
    ----------
    tensors : tuple of ndarray
        Site tensors of shape ``(Dl, 2, Dr)``.
    canonical_form : {"none", "left", "right"}
    """

    tensors: tuple
    canonical_form: str = "none"

    def __post_init__(self):
        ts = tuple(np.asarray(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        if not ts:
            raise PreconditionError("an MPS needs at least one site")
        if self.canonical_form not in ("none", "left", "right"):
            raise PreconditionError(f"unknown canonical form {self.canonical_form!r}")
        if ts[0].shape[0] != 1 or ts[-1].shape[2] != 1:
            raise PreconditionError("boundary bonds must have dimension 1")
        for j, t in enumerate(ts):
            if t.ndim != 3 or t.shape[1] != 2:
                raise PreconditionError(f"site {j}: expected shape (Dl, 2, Dr), got {t.shape}")
            if j and ts[j - 1].shape[2] != t.shape[0]:
                raise PreconditionError(f"bond mismatch between sites {j - 1} and {j}")

    @property
    def L(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list:
        """Dimensions of the ``L - 1`` internal bonds."""
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max([1] + self.bond_dims)


def product_mps(states) -> MPS:
    """MPS of a product of single-qubit state vectors."""
    ts = [np.asarray(s, dtype=complex).reshape(1, 2, 1) for s in states]
    return MPS(ts)


def random_mps(L: int, chi: int, seed) -> MPS:
    """Random MPS with complex Gaussian entries, right-canonicalized.

    Bond ``j`` has dimension ``min(chi, 2**j, 2**(L - j))`` so that no bond
    exceeds what the state can support.
    """
    if int(chi) < 1:
        raise PreconditionError(f"chi must be >= 1, got {chi}")
    if L < 1:
        raise PreconditionError(f"L must be >= 1, got {L}")
    rng = as_generator(seed)
    dims = [min(int(chi), 2**j, 2 ** (L - j)) for j in range(L + 1)]
    ts = []
    for j in range(L):
        shape = (dims[j], 2, dims[j + 1])
        ts.append((rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2))
    return right_canonicalize(MPS(ts))


def right_canonicalize(mps: MPS) -> MPS:
    """Bring every site but the first into right-isometric form and normalize."""
    ts = [t.astype(complex) for t in mps.tensors]
    for j in range(mps.L - 1, 0, -1):
        dl, d, dr = ts[j].shape
        q, r = np.linalg.qr(ts[j].reshape(dl, d * dr).conj().T)
        ts[j] = q.conj().T.reshape(-1, d, dr)
        ts[j - 1] = np.einsum("asb,bc->asc", ts[j - 1], r.conj().T)
    ts[0] = ts[0] / np.linalg.norm(ts[0])
    return MPS(ts, "right")


def left_canonicalize(mps: MPS) -> MPS:
    """Bring every site but the last into left-isometric form and normalize."""
    ts = [t.astype(complex) for t in mps.tensors]
    for j in range(mps.L - 1):
        dl, d, dr = ts[j].shape
        q, r = np.linalg.qr(ts[j].reshape(dl * d, dr))
        ts[j] = q.reshape(dl, d, -1)
        ts[j + 1] = np.einsum("ab,bsc->asc", r, ts[j + 1])
    ts[-1] = ts[-1] / np.linalg.norm(ts[-1])
    return MPS(ts, "left")


def is_canonical(mps: MPS, form: str, tol: float = CANONICAL_TOL) -> bool:
    """Check the isometry condition of every non-center site."""
    if form == "right":
        for t in mps.tensors[1:]:
            m = t.reshape(t.shape[0], -1)
            if np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))) > tol:
                return False
        return abs(np.linalg.norm(mps.tensors[0]) - 1) <= tol
    if form == "left":
        for t in mps.tensors[:-1]:
            m = t.reshape(-1, t.shape[2])
            if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))) > tol:
                return False
        return abs(np.linalg.norm(mps.tensors[-1]) - 1) <= tol
    raise PreconditionError(f"unknown canonical form {form!r}")


def mps_norm(mps: MPS) -> float:
    """Norm of the state by transfer-matrix contraction."""
    env = np.ones((1, 1), dtype=complex)
    for t in mps.tensors:
        env = np.einsum("ab,asc,bsd->cd", env, t, t.conj())
    return float(np.sqrt(abs(env[0, 0])))


def mps_to_vector(mps: MPS) -> np.ndarray:
    """Full state vector, qubit 0 most significant."""
    if mps.L > MAX_DENSE_QUBITS:
        raise SizeLimitError(f"dense conversion limited to {MAX_DENSE_QUBITS} qubits, got {mps.L}")
    v = mps.tensors[0].reshape(2, -1)
    for t in mps.tensors[1:]:
        v = np.einsum("xa,asb->xsb", v, t).reshape(-1, t.shape[2])
    return v.reshape(-1)


def mps_to_dense(mps: MPS) -> np.ndarray:
    """The projector onto the MPS state."""
    v = mps_to_vector(mps)
    return np.outer(v, v.conj())


def amplitude(mps: MPS, bits) -> complex:
    """Amplitude of one computational basis string."""
    bits = list(bits)
    if len(bits) != mps.L:
        raise PreconditionError(f"expected {mps.L} bits, got {len(bits)}")
    v = np.ones(1, dtype=complex)
    for t, s in zip(mps.tensors, bits):
        v = v @ t[:, int(s), :]
    return complex(v[0])


def sample_outcomes(mps: MPS, unitaries: np.ndarray, rng, stop: int | None = None) -> np.ndarray:
    """Perfect sampling of measurement outcomes, one shot per unitary set.

    Sites are sampled left to right. Each shot ``i`` measures site ``j`` in the
    basis rotated by ``unitaries[i, j]``, and the conditional probabilities
    use the identity right environment of a right-canonical MPS.

    Parameters
    ----------
    mps : MPS
        Must be right-canonical.
    unitaries : ndarray, shape (S, stop, 2, 2)
        Local unitary applied before measuring each site.
    rng : Generator or seed
    stop : int, optional
        Sample only sites ``0, ..., stop - 1`` (the marginal of a prefix).

    Returns
    -------
    ndarray of uint8, shape (S, stop)
    """
    if mps.canonical_form != "right":
        raise PreconditionError("perfect sampling needs a right-canonical MPS")
    stop = mps.L if stop is None else int(stop)
    unitaries = np.asarray(unitaries)
    if unitaries.ndim != 4 or unitaries.shape[1:] != (stop, 2, 2):
        raise PreconditionError(f"unitaries must have shape (S, {stop}, 2, 2), got {unitaries.shape}")
    rng = as_generator(rng)
    n_shots = unitaries.shape[0]
    out = np.empty((n_shots, stop), dtype=np.uint8)
    v = np.ones((n_shots, 1), dtype=complex)
    for j in range(stop):
        t = mps.tensors[j]
        w = np.einsum("ia,atb->itb", v, t)
        w = np.einsum("ist,itb->isb", unitaries[:, j], w)
        p = np.sum(np.abs(w) ** 2, axis=2)
        p0 = p[:, 0] / (p[:, 0] + p[:, 1])
        s = (rng.random(n_shots) >= p0).astype(np.uint8)
        out[:, j] = s
        v = w[np.arange(n_shots), s]
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return out


def perfect_sample(mps: MPS, local_unitaries, seed) -> np.ndarray:
    """One bitstring sampled from the Born distribution of ``(⊗u_j)|psi>``."""
    u = np.asarray(local_unitaries, dtype=complex)[None]
    return sample_outcomes(mps, u, seed)[0]
