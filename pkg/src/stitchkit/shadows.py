"""Randomized measurements, classical shadows and moment estimators.

A round applies an independent Haar-random 2x2 unitary ``u_j`` to every
qubit of a region and measures in the computational basis. The classical
shadow of one round is ``⊗_j [3 u_j^† |k_j><k_j| u_j - I]``, and its
average over rounds reproduces the state.

Estimators of ``Tr rho^n`` and of partially transposed moments are
U-statistics over distinct rounds. They are evaluated with power sums of the
summed shadow ``S = sum_r A_r``, which equals the naive distinct-tuple sum
exactly and costs ``O(M 4^n)`` instead of ``O(M^n 4^n)``.

Batches are stored as arrays: ``unitaries`` of shape ``(n_U, n, 2, 2)`` and
``outcomes`` of shape ``(n_U, n_M, n)``. The plain shadow scheme has
``n_M = 1``; the reuse scheme repeats each unitary ``n_M`` times.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .container import read_container, write_container
from .dense import MAX_DENSE_QUBITS, n_qubits_of, partial_trace
from .errors import InvalidRegionError, PreconditionError, SizeLimitError
from .rand import derive_rng, haar_unitary
from .regions import Interval, union

SCHEMES = ("shadow", "reuse")
# chunk sizes are fixed so that results do not depend on scheduling
_SAMPLE_CHUNK_ENTRIES = 2**22
_KRON_CHUNK_ENTRIES = 2**22
MAX_SHADOW_QUBITS = 10


@dataclass(frozen=True)
class ShadowRecord:
    """One measurement round on a region."""

    round: int
    unitaries: np.ndarray
    outcome: np.ndarray


@dataclass
class MeasurementBatch:
    """Randomized-measurement data on one region.

    Parameters
    ----------
    region : Interval
    unitaries : ndarray, shape (n_U, n, 2, 2)
    outcomes : ndarray of uint8, shape (n_U, n_M, n)
    scheme : {"shadow", "reuse"}
    seed : int or None
    """

    region: Interval
    unitaries: np.ndarray
    outcomes: np.ndarray
    scheme: str = "shadow"
    seed: int | None = None

    def __post_init__(self):
        self.unitaries = np.asarray(self.unitaries, dtype=complex)
        self.outcomes = np.asarray(self.outcomes, dtype=np.uint8)
        n = self.region.length
        if self.scheme not in SCHEMES:
            raise PreconditionError(f"unknown scheme {self.scheme!r}")
        if self.unitaries.ndim != 4 or self.unitaries.shape[1:] != (n, 2, 2):
            raise PreconditionError(f"unitaries must have shape (n_U, {n}, 2, 2), got {self.unitaries.shape}")
        if self.outcomes.ndim != 3 or self.outcomes.shape[0] != self.unitaries.shape[0] or self.outcomes.shape[2] != n:
            raise PreconditionError(f"outcomes must have shape (n_U, n_M, {n}), got {self.outcomes.shape}")
        if self.scheme == "shadow" and self.outcomes.shape[1] != 1:
            raise PreconditionError("the shadow scheme has one shot per unitary")

    @property
    def n_U(self) -> int:
        return self.unitaries.shape[0]

    @property
    def n_M(self) -> int:
        return self.outcomes.shape[1]

    @property
    def M(self) -> int:
        return self.n_U * self.n_M

    @property
    def records(self) -> list[ShadowRecord]:
        """All rounds as records, grouped by unitary."""
        out = []
        for i in range(self.n_U):
            for m in range(self.n_M):
                out.append(ShadowRecord(i * self.n_M + m, self.unitaries[i], self.outcomes[i, m]))
        return out

    def restrict(self, sub: Interval) -> "MeasurementBatch":
        """The same rounds seen only on ``sub``, which must lie inside the region."""
        off = _offset(self.region, sub)
        sl = slice(off, off + sub.length)
        return MeasurementBatch(sub, self.unitaries[:, sl], self.outcomes[:, :, sl], self.scheme, self.seed)

    def save(self, path):
        """One file per batch: JSON header, packed outcome bits, unitary entries."""
        meta = {
            "region": self.region.to_dict(),
            "M": self.M,
            "n_U": self.n_U,
            "n_M": self.n_M,
            "scheme": self.scheme,
            "seed": self.seed,
        }
        arrays = {"outcome_bits": np.packbits(self.outcomes.reshape(-1)), "unitaries": self.unitaries}
        return write_container(path, "measurement_batch", arrays, meta)

    @classmethod
    def load(cls, path) -> "MeasurementBatch":
        arrays, header = read_container(path, "measurement_batch")
        meta = header["meta"]
        region = Interval.from_dict(meta["region"])
        count = meta["n_U"] * meta["n_M"] * region.length
        bits = np.unpackbits(arrays["outcome_bits"], count=count)
        outcomes = bits.reshape(meta["n_U"], meta["n_M"], region.length)
        return cls(region, arrays["unitaries"], outcomes, meta["scheme"], meta["seed"])


def _offset(region: Interval, sub: Interval) -> int:
    if sub.start < region.start or sub.stop > region.stop:
        raise InvalidRegionError(f"{sub} is not inside the measured region {region}")
    return sub.start - region.start


def sample_haar_qubit_unitary(seed) -> np.ndarray:
    """A single Haar-random 2x2 unitary."""
    return haar_unitary(2, seed)


def _scheme_sizes(M, scheme, n_U, n_M):
    if scheme == "shadow":
        if M is None:
            raise PreconditionError("the shadow scheme needs M")
        if n_M not in (None, 1):
            raise PreconditionError("the shadow scheme has n_M = 1")
        return int(M), 1
    if scheme == "reuse":
        if n_U is None or n_M is None:
            raise PreconditionError("the reuse scheme needs n_U and n_M")
        if M is not None and M != n_U * n_M:
            raise PreconditionError(f"M = {M} differs from n_U * n_M = {n_U * n_M}")
        return int(n_U), int(n_M)
    raise PreconditionError(f"unknown scheme {scheme!r}")


def _index_to_bits(idx: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[..., None] >> shifts) & 1).astype(np.uint8)


def _rotated_probabilities(rho: np.ndarray, us: np.ndarray) -> np.ndarray:
    """Diagonals of ``U rho U^†`` for a batch of product unitaries ``U = ⊗u_j``."""
    B, n = us.shape[:2]
    d = 2**n
    # the first h qubits go in one matrix product with
    # V[b, s, (t, t')] = U_b[s, t] conj(U_b[s, t']), U_b = ⊗_{j<h} u_j
    h = max(1, n // 2)
    A, R = 2**h, d // 2**h
    V = _kron_rows(us[:, :h])
    V = (V[:, :, :, None] * V.conj()[:, :, None, :]).reshape(B * A, A * A)
    T = np.asarray(rho).reshape(A, R, A, R).transpose(0, 2, 1, 3).reshape(A * A, R * R)
    out = (V @ T).reshape(B, A, R, R)
    # remaining qubits one at a time; each step halves the array
    W = (us[..., :, :, None] * us.conj()[..., :, None, :]).reshape(B, n, 2, 4)
    for j in range(h, n):
        R //= 2
        T = out.reshape(B, A, 2, R, 2, R).transpose(0, 1, 2, 4, 3, 5).reshape(B, A, 4, R * R)
        A *= 2
        out = np.matmul(W[:, j][:, None], T).reshape(B, A, R, R)
    p = out.reshape(B, d).real
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=1, keepdims=True)


def _sample_indices(p: np.ndarray, shots: int, rng) -> np.ndarray:
    """``shots`` draws from each row of ``p`` by inverse-CDF search."""
    B, d = p.shape
    cdf = np.cumsum(p, axis=1)
    cdf[:, -1] = 1.0
    offsets = np.arange(B)[:, None]
    u = rng.random((B, shots))
    idx = np.searchsorted((cdf + offsets).ravel(), (u + offsets).ravel(), side="right")
    idx = idx.reshape(B, shots) - offsets * d
    return np.minimum(idx, d - 1)


def simulate_batch(
    state,
    region: Interval,
    M: int | None = None,
    scheme: str = "shadow",
    seed: int = 0,
    n_U: int | None = None,
    n_M: int | None = None,
    backend: str | None = None,
    unitaries: np.ndarray | None = None,
) -> MeasurementBatch:
    """Simulate randomized measurements on ``region``.

    Parameters
    ----------
    state : ndarray or MPS
        A dense density matrix, or a pure state as an MPS.
    region : Interval
    M : int, optional
        Number of rounds for the shadow scheme.
    scheme : {"shadow", "reuse"}
    seed : int
        Unitaries use the child stream ``(seed, 0)`` and outcomes
        ``(seed, 1)``.
    n_U, n_M : int, optional
        Unitary count and shots per unitary for the reuse scheme.
    backend : {"dense", "mps"}, optional
        Inferred from the state type when omitted.
    unitaries : ndarray, optional
        Fixed unitaries of shape ``(n_U, |region|, 2, 2)`` replacing the
        random draw.

    Returns
    -------
    MeasurementBatch
    """
    from .tn.mps import MPS, sample_outcomes

    n_U, n_M = _scheme_sizes(M, scheme, n_U, n_M)
    if n_U < 1 or n_M < 1:
        raise PreconditionError("need at least one unitary and one shot")
    inferred = "mps" if isinstance(state, MPS) else "dense"
    backend = backend or inferred
    if backend != inferred:
        raise PreconditionError(f"backend {backend!r} does not match a state of type {type(state).__name__}")
    n = region.length
    if unitaries is None:
        us = haar_unitary(2, derive_rng(seed, 0), size=n_U * n).reshape(n_U, n, 2, 2)
    else:
        us = np.asarray(unitaries, dtype=complex)
        if us.shape != (n_U, n, 2, 2):
            raise PreconditionError(f"unitaries must have shape {(n_U, n, 2, 2)}, got {us.shape}")
    rng = derive_rng(seed, 1)
    if backend == "dense":
        N = n_qubits_of(state)
        if N > MAX_DENSE_QUBITS:
            raise SizeLimitError(f"dense backend limited to {MAX_DENSE_QUBITS} qubits, got {N}")
        region.check_within(N)
        rho = partial_trace(state, region) if region.length < N else np.asarray(state)
        d = 2**n
        chunk = max(1, _SAMPLE_CHUNK_ENTRIES // (d * d))
        outs = []
        for lo in range(0, n_U, chunk):
            p = _rotated_probabilities(rho, us[lo : lo + chunk])
            outs.append(_sample_indices(p, n_M, rng))
        outcomes = _index_to_bits(np.concatenate(outs), n)
    else:
        region.check_within(state.L)
        full = np.broadcast_to(np.eye(2, dtype=complex), (n_U, region.stop, 2, 2)).copy()
        full[:, region.start :] = us
        per_shot = np.repeat(full, n_M, axis=0)
        bits = sample_outcomes(state, per_shot, rng, stop=region.stop)
        outcomes = bits[:, region.start :].reshape(n_U, n_M, n)
    return MeasurementBatch(region, us, outcomes, scheme, seed)


def local_shadows(unitaries: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    """Single-qubit shadows ``3 u^† |k><k| u - I``.

    ``unitaries`` has shape ``(..., 2, 2)`` and ``outcomes`` the matching
    leading shape.
    """
    rows = np.take_along_axis(unitaries, outcomes[..., None, None].astype(np.intp), axis=-2)[..., 0, :]
    return 3 * np.conj(rows)[..., :, None] * rows[..., None, :] - np.eye(2)


def shadow_matrix(record: ShadowRecord, sub: Interval, region: Interval | None = None) -> np.ndarray:
    """Dense shadow of one round restricted to ``sub``.

    ``region`` is the measured region of the record; when omitted ``sub`` is
    taken to be the whole record.
    """
    region = region or Interval(sub.start, len(record.outcome))
    off = _offset(region, sub)
    sl = slice(off, off + sub.length)
    factors = local_shadows(np.asarray(record.unitaries)[sl], np.asarray(record.outcome)[sl])
    return reduce(np.kron, factors)


def _kron_sum(factors: np.ndarray) -> np.ndarray:
    """``sum_r ⊗_j factors[r, j]`` for factors of shape ``(M, n, 2, 2)``."""
    M, n = factors.shape[:2]
    if n == 1:
        return factors[:, 0].sum(axis=0).astype(complex)
    # sum_r L_r ⊗ R_r over the two halves is one matrix product
    h = n // 2
    dL, dR = 2**h, 2 ** (n - h)
    chunk = max(1, _KRON_CHUNK_ENTRIES // (dR * dR))
    total = np.zeros((dL * dL, dR * dR), dtype=complex)
    for lo in range(0, M, chunk):
        f = factors[lo : lo + chunk]
        left = _kron_rows(f[:, :h]).reshape(len(f), -1)
        right = _kron_rows(f[:, h:]).reshape(len(f), -1)
        total += left.T @ right
    return total.reshape(dL, dL, dR, dR).transpose(0, 2, 1, 3).reshape(dL * dR, dL * dR)


def _kron_rows(f: np.ndarray) -> np.ndarray:
    """``⊗_j f[r, j]`` for every ``r``."""
    acc = f[:, 0]
    for j in range(1, f.shape[1]):
        acc = np.einsum("rab,rcd->racbd", acc, f[:, j]).reshape(len(f), acc.shape[1] * 2, -1)
    return acc


def _shadow_factors(batch: MeasurementBatch, sub: Interval, transpose: Interval | None = None) -> np.ndarray:
    """Local shadows of every round on ``sub``, transposed on ``transpose``."""
    if batch.scheme != "shadow":
        raise PreconditionError("shadow estimators need the shadow scheme (n_M = 1)")
    if sub.length > MAX_SHADOW_QUBITS:
        raise SizeLimitError(f"dense shadow estimators limited to {MAX_SHADOW_QUBITS} qubits, got {sub.length}")
    b = batch.restrict(sub)
    f = local_shadows(b.unitaries, b.outcomes[:, 0])
    if transpose is not None:
        off = _offset(sub, transpose)
        sl = slice(off, off + transpose.length)
        f[:, sl] = np.swapaxes(f[:, sl], -1, -2)
    return f


def _u_statistic(factors: np.ndarray, n: int) -> float:
    """Average of ``Tr(A_r1 ... A_rn)`` over ordered distinct tuples."""
    M, m = factors.shape[:2]
    if M < n:
        raise PreconditionError(f"need M >= {n} rounds, got {M}")
    S = _kron_sum(factors)
    if n == 2:
        # Tr(A_r^2) = 5 per qubit
        total = np.vdot(S.conj().T, S).real - M * 5.0**m
        return float(total / (M * (M - 1)))
    if n == 3:
        # A_r^2 = ⊗(3P + I) = ⊗(f + 2I) and Tr(A_r^3) = 7 per qubit
        Q = _kron_sum(factors + 2 * np.eye(2))
        S2 = S @ S
        tr_s3 = np.sum(S2 * S.T).real
        tr_qs = np.sum(Q * S.T).real
        total = tr_s3 - 3 * tr_qs + 2 * M * 7.0**m
        return float(total / (M * (M - 1) * (M - 2)))
    raise PreconditionError(f"shadow estimators support n in (2, 3), got {n}")


def estimate_observable(batch: MeasurementBatch, O: np.ndarray, sub: Interval | None = None) -> float:
    """``(1/M) sum_r Tr[O rho^(r)]`` for an operator on ``sub`` (default: the region)."""
    sub = sub or batch.region
    O = np.asarray(O)
    if O.shape != (2**sub.length,) * 2:
        raise PreconditionError(f"operator shape {O.shape} does not match {sub.length} qubits")
    b = batch.restrict(sub)
    us = np.broadcast_to(b.unitaries[:, None], b.outcomes.shape + (2, 2))
    f = local_shadows(us, b.outcomes).reshape(-1, sub.length, 2, 2)
    S = _kron_sum(f)
    return float(np.sum(O * S.T).real / len(f))


def estimate_purity(batch: MeasurementBatch, I: Interval) -> float:
    """Unbiased U-statistic estimate of ``Tr rho_I^2``."""
    return _u_statistic(_shadow_factors(batch, I), 2)


def estimate_moment(batch: MeasurementBatch, I: Interval, n: int) -> float:
    """Unbiased U-statistic estimate of ``Tr rho_I^n`` for ``n`` in (2, 3)."""
    return _u_statistic(_shadow_factors(batch, I), n)


def estimate_pt_moment(batch: MeasurementBatch, A: Interval, B: Interval, n: int) -> float:
    """Unbiased estimate of ``Tr[(rho_AB^{T_A})^n]`` for adjacent ``A``, ``B``."""
    AB = union(A, B)
    return _u_statistic(_shadow_factors(batch, AB, transpose=A), n)


def hamming_purity(batch: MeasurementBatch, I: Interval) -> float:
    """Purity from outcome pairs sharing a unitary.

    ``2^|I| / (n_U n_M (n_M - 1)) sum_u sum_{s != s'} (-2)^(-D[s, s'])`` with
    ``D`` the Hamming distance on ``I``. With bin counts ``c`` per unitary,
    the pair sum is ``c^T K c - n_M`` where ``K = ⊗[[1, -1/2], [-1/2, 1]]``.
    """
    if batch.n_M < 2:
        raise PreconditionError(f"the Hamming estimator needs n_M >= 2, got {batch.n_M}")
    b = batch.restrict(I)
    n = I.length
    idx = np.zeros(b.outcomes.shape[:2], dtype=np.int64)
    for j in range(n):
        idx = (idx << 1) | b.outcomes[:, :, j]
    flat = (np.arange(b.n_U)[:, None] * 2**n + idx).ravel()
    counts = np.bincount(flat, minlength=b.n_U * 2**n).reshape(b.n_U, 2**n).astype(float)
    kernel = np.array([[1.0, -0.5], [-0.5, 1.0]])
    kc = counts.reshape((b.n_U,) + (2,) * n)
    for j in range(n):
        kc = np.moveaxis(np.tensordot(kernel, kc, axes=([1], [1 + j])), 0, 1 + j)
    pair_sum = np.einsum("ui,ui->", counts, kc.reshape(b.n_U, -1)) - b.n_U * b.n_M
    return float(2.0**n * pair_sum / (b.n_U * b.n_M * (b.n_M - 1)))


def purity_variance_bound(region_size: int, P2: float, M: int) -> float:
    """``4 (2^|I| P2 / M) + 2 (2^(2|I|) / (M - 1))^2``."""
    if M < 2:
        raise PreconditionError(f"need M >= 2, got {M}")
    d = 2.0**region_size
    return 4 * d * P2 / M + 2 * (d * d / (M - 1)) ** 2


def p3_variance_bound(ab_size: int, tr_rho4: float, p2: float, M: int) -> float:
    """``9 2^|AB| Tr rho^4 / M + 18 2^(3|AB|) p2 / (M-1)^2 + 6 2^(6|AB|) / (M-2)^3``."""
    if M < 3:
        raise PreconditionError(f"need M >= 3, got {M}")
    d = 2.0**ab_size
    return 9 * d * tr_rho4 / M + 18 * d**3 * p2 / (M - 1) ** 2 + 6 * d**6 / (M - 2) ** 3
