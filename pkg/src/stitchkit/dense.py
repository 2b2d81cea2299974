"""Exact dense-matrix oracle for moments, PT moments and Gibbs states.

Operators are plain ``numpy`` arrays of shape ``(2**N, 2**N)``. Qubit 0 is
the leftmost site and the most significant bit of the basis index, so the
reshape ``rho.reshape((2,) * 2 * N)`` puts qubit ``j`` on axes ``j`` (ket)
and ``N + j`` (bra).

All moments are computed from Hermitian eigenvalues. Real symmetric inputs
stay real, which is roughly four times faster than the complex path for
the largest chains used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DensityMatrixError, InvalidRegionError, PreconditionError, SizeLimitError
from .regions import Interval, ordered_pair, union

DENSITY_TOL = 1e-10
MAX_DENSE_QUBITS = 14

__all__ = [
    "Interval",
    "n_qubits_of",
    "validate_density",
    "partial_trace",
    "partial_transpose",
    "renyi_moment",
    "renyi_moments",
    "renyi_entropy",
    "purity",
    "pt_spectrum",
    "pt_moment",
    "pt_moments",
    "log_negativity",
    "normalized_pt_moment",
    "trace_power",
    "s_ratio",
    "f3",
    "f5",
    "ppt_probes",
    "build_ising",
    "build_xxz",
    "build_hamiltonian",
    "GibbsFamily",
    "gibbs_state",
    "renyi2_continuity_bound",
    "maximally_mixed",
    "bell_state",
    "random_density_matrix",
    "random_pure_state",
]


def n_qubits_of(mat: np.ndarray) -> int:
    """Number of qubits of a square ``2**N x 2**N`` matrix."""
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DensityMatrixError(f"expected a square matrix, got shape {mat.shape}")
    dim = mat.shape[0]
    n = dim.bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise DensityMatrixError(f"dimension {dim} is not a power of two")
    return n


def _check_hermitian_trace(rho: np.ndarray, tol: float) -> None:
    dev = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if dev > tol:
        raise DensityMatrixError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise DensityMatrixError(f"trace {tr.real:.12g} differs from 1")


def validate_density(rho: np.ndarray, tol: float = DENSITY_TOL) -> np.ndarray:
    """Check that ``rho`` is a density matrix and return its eigenvalues.

    Parameters
    ----------
    rho : ndarray
        Candidate density matrix.
    tol : float
        Tolerance on Hermiticity (max entrywise), trace and the smallest
        eigenvalue.

    Returns
    -------
    ndarray
        Ascending eigenvalues of ``rho``.
    """
    rho = np.asarray(rho)
    n_qubits_of(rho)
    _check_hermitian_trace(rho, tol)
    eigs = np.linalg.eigvalsh(rho)
    if eigs[0] < -tol:
        raise DensityMatrixError(f"matrix has eigenvalue {eigs[0]:.3e} < 0")
    return eigs


def _blocks(n: int, region: Interval) -> tuple[int, int, int]:
    region.check_within(n)
    return 1 << region.start, 1 << region.length, 1 << (n - region.stop)


def partial_trace(rho: np.ndarray, keep: Interval) -> np.ndarray:
    """Reduced density matrix on the contiguous interval ``keep``."""
    rho = np.asarray(rho)
    n = n_qubits_of(rho)
    a, b, c = _blocks(n, keep)
    if a == 1 and c == 1:
        return rho.copy()
    r = rho.reshape(a, b, c, a, b, c)
    r = np.trace(r, axis1=0, axis2=3)  # (b, c, b, c)
    return np.trace(r, axis1=1, axis2=3)


def partial_transpose(rho: np.ndarray, A: Interval) -> np.ndarray:
    """Transpose the indices of the qubits in ``A``."""
    rho = np.asarray(rho)
    n = n_qubits_of(rho)
    a, b, c = _blocks(n, A)
    dim = rho.shape[0]
    r = rho.reshape(a, b, c, a, b, c).transpose(0, 4, 2, 3, 1, 5)
    return r.reshape(dim, dim)


def _power_sum(eigs: np.ndarray, n: int) -> float:
    return float(np.sum(eigs**n))


def renyi_moments(rho: np.ndarray, ns, check: bool = True) -> dict[int, float]:
    """``{n: Tr rho**n}`` for several orders from a single eigendecomposition."""
    rho = np.asarray(rho)
    if check:
        eigs = validate_density(rho)
    else:
        eigs = np.linalg.eigvalsh(rho)
    out = {}
    for n in ns:
        if int(n) != n or n < 1:
            raise PreconditionError(f"moment order must be an integer >= 1, got {n}")
        out[int(n)] = _power_sum(eigs, int(n))
    return out


def renyi_moment(rho: np.ndarray, n: int, check: bool = True) -> float:
    """Rényi moment ``P_n = Tr[rho**n]``.

    Parameters
    ----------
    rho : ndarray
        Density matrix.
    n : int
        Order, ``n >= 1``.
    check : bool
        Validate ``rho`` as a density matrix first.
    """
    return renyi_moments(rho, [n], check=check)[int(n)]


def purity(rho: np.ndarray) -> float:
    """``Tr rho**2`` as the squared Frobenius norm (no eigendecomposition).

    Exact for Hermitian input; used for large matrices where a full
    spectrum would dominate the runtime.
    """
    rho = np.asarray(rho)
    return float(np.vdot(rho, rho).real)


def renyi_entropy(rho: np.ndarray, n: int = 2) -> float:
    """Rényi entropy ``log(P_n) / (1 - n)`` in nats."""
    if n < 2:
        raise PreconditionError(f"Rényi entropy needs n >= 2, got {n}")
    val = -np.log(renyi_moment(rho, n)) / (n - 1)
    return max(float(val), 0.0)


def pt_spectrum(rho: np.ndarray, A: Interval) -> np.ndarray:
    """Eigenvalues of the partial transpose of ``rho`` with respect to ``A``.

    Only Hermiticity and unit trace are checked on ``rho``; a positivity
    check would cost a second eigendecomposition.
    """
    rho = np.asarray(rho)
    n = n_qubits_of(rho)
    A.check_within(n)
    if A.length == n:
        raise InvalidRegionError("A must leave a non-empty complement")
    _check_hermitian_trace(rho, DENSITY_TOL)
    return np.linalg.eigvalsh(partial_transpose(rho, A))


def pt_moments(rho: np.ndarray, A: Interval, ns) -> dict[int, float]:
    """``{n: Tr[(rho^{T_A})**n]}`` from one eigendecomposition."""
    eigs = pt_spectrum(rho, A)
    return {int(n): _power_sum(eigs, int(n)) for n in ns}


def pt_moment(rho: np.ndarray, A: Interval, n: int) -> float:
    """PT moment ``p_n = Tr[(rho^{T_A})**n]``."""
    if int(n) != n or n < 1:
        raise PreconditionError(f"moment order must be an integer >= 1, got {n}")
    return pt_moments(rho, A, [n])[int(n)]


def log_negativity(rho: np.ndarray, A: Interval) -> float:
    """Logarithmic negativity ``log sum |lambda_j|`` of ``rho^{T_A}``."""
    eigs = pt_spectrum(rho, A)
    if eigs[0] >= -1e-12:
        return 0.0
    return max(float(np.log(np.sum(np.abs(eigs)))), 0.0)


def _bipartite_blocks(rho, A, B):
    """Reduced state on ``A u B`` together with the positions of A and B in it."""
    rho = np.asarray(rho)
    n = n_qubits_of(rho)
    left, right = ordered_pair(A, B)
    ab = union(left, right)
    ab.check_within(n)
    rho_ab = partial_trace(rho, ab) if ab.length < n else rho
    A_loc = A.shift(-ab.start)
    B_loc = B.shift(-ab.start)
    return rho_ab, A_loc, B_loc


def _normalized_moments(rho, A, B, ns):
    """PT moments of ``rho_AB`` and Rényi moments of ``rho_A``, ``rho_B``."""
    rho_ab, A_loc, B_loc = _bipartite_blocks(rho, A, B)
    p = pt_moments(rho_ab, A_loc, ns)
    PA = renyi_moments(partial_trace(rho_ab, A_loc), ns)
    PB = renyi_moments(partial_trace(rho_ab, B_loc), ns)
    return p, PA, PB


def trace_power(mat: np.ndarray, n: int) -> float:
    """``Tr mat**n`` of a Hermitian matrix by matrix products, ``n <= 3``."""
    mat = np.asarray(mat)
    if n == 1:
        return float(np.trace(mat).real)
    if n == 2:
        return float(np.vdot(mat, mat).real)
    if n == 3:
        if not np.iscomplexobj(mat):
            return float(np.sum((mat @ mat) * mat))
        # mat = R + iI with R symmetric and I antisymmetric: two real products
        R, Im = np.ascontiguousarray(mat.real), np.ascontiguousarray(mat.imag)
        return float(np.sum((R @ R) * R) - 3 * np.sum((Im @ Im) * R))
    raise PreconditionError(f"trace_power supports n <= 3, got {n}")


def normalized_pt_moment(rho: np.ndarray, A: Interval, B: Interval, n: int, method: str = "spectrum") -> float:
    """Normalized PT moment ``p_n[AB] / (P_n[A] P_n[B])``.

    ``A`` and ``B`` are adjacent intervals of ``rho``; the transpose acts on
    ``A`` and everything outside ``A u B`` is traced out. ``method="product"``
    evaluates ``n <= 3`` by matrix products instead of spectra, which is much
    cheaper on large blocks and skips the density-matrix checks.
    """
    if method == "product" and n <= 3:
        rho_ab, A_loc, B_loc = _bipartite_blocks(rho, A, B)
        p = trace_power(partial_transpose(rho_ab, A_loc), n)
        PA = trace_power(partial_trace(rho_ab, A_loc), n)
        PB = trace_power(partial_trace(rho_ab, B_loc), n)
        return p / (PA * PB)
    if method not in ("spectrum", "product"):
        raise PreconditionError(f"unknown method {method!r}")
    p, PA, PB = _normalized_moments(rho, A, B, [n])
    return p[n] / (PA[n] * PB[n])


def s_ratio(rho_xy: np.ndarray, X: Interval, n: int) -> float:
    """``Tr[(rho_XY^{T_X})**n] / (Tr rho_X**n Tr rho_Y**n)``.

    ``Y`` is the complement of ``X`` in ``rho_xy``; ``X`` must therefore be
    a prefix or a suffix of the chain.
    """
    n_q = n_qubits_of(rho_xy)
    X.check_within(n_q)
    if X.start == 0 and X.length < n_q:
        Y = Interval(X.stop, n_q - X.stop)
    elif X.stop == n_q and X.start > 0:
        Y = Interval(0, X.start)
    else:
        raise InvalidRegionError("X must be a proper prefix or suffix so that Y is contiguous")
    return normalized_pt_moment(rho_xy, X, Y, n)


def _f3_from(p, PA, PB) -> float:
    pt1 = p[1] / (PA[1] * PB[1])
    pt2 = p[2] / (PA[2] * PB[2])
    pt3 = p[3] / (PA[3] * PB[3])
    return pt3 * pt1 - pt2**2 * PA[2] ** 2 * PB[2] ** 2 / (PA[1] * PB[1] * PA[3] * PB[3])


def _f5_from(p, PA, PB) -> float:
    pt3 = p[3] / (PA[3] * PB[3])
    pt4 = p[4] / (PA[4] * PB[4])
    pt5 = p[5] / (PA[5] * PB[5])
    return pt5 * pt3 - pt4**2 * PA[4] ** 2 * PB[4] ** 2 / (PA[3] * PB[3] * PA[5] * PB[5])


def f3(rho: np.ndarray, A: Interval, B: Interval) -> float:
    """PPT probe built from the normalized moments of order 1 to 3.

    Negative exactly when ``p_3 p_1 < p_2**2``, which certifies
    entanglement between ``A`` and ``B``.
    """
    return _f3_from(*_normalized_moments(rho, A, B, [1, 2, 3]))


def f5(rho: np.ndarray, A: Interval, B: Interval) -> float:
    """PPT probe built from the normalized moments of order 3 to 5.

    Negative exactly when ``p_5 p_3 < p_4**2``.
    """
    return _f5_from(*_normalized_moments(rho, A, B, [3, 4, 5]))


def ppt_probes(rho: np.ndarray, A: Interval, B: Interval) -> dict[str, float]:
    """``f3``, ``f5`` and the raw moments from a single PT spectrum."""
    p, PA, PB = _normalized_moments(rho, A, B, [1, 2, 3, 4, 5])
    return {
        "f3": _f3_from(p, PA, PB),
        "f5": _f5_from(p, PA, PB),
        "p": p,
        "P_A": PA,
        "P_B": PB,
    }


# --- Hamiltonians ---------------------------------------------------------


def _basis_bits(L: int) -> np.ndarray:
    """``bits[j, idx]`` is the value of qubit ``j`` in basis state ``idx``."""
    idx = np.arange(1 << L)
    shifts = (L - 1 - np.arange(L))[:, None]
    return (idx[None, :] >> shifts) & 1


def _check_size(L: int) -> None:
    if L < 2:
        raise PreconditionError(f"chain length must be >= 2, got {L}")
    if L > MAX_DENSE_QUBITS:
        raise SizeLimitError(f"dense backend supports at most {MAX_DENSE_QUBITS} qubits")


def build_ising(L: int, h_x: float, h_z: float, edge_field: bool = True) -> np.ndarray:
    """Ising chain with transverse and longitudinal fields, open boundaries.

    ``H = -1/4 [sum_{j=0}^{L-2} Z_j Z_{j+1} + sum_j (h_x X_j + h_z Z_j)]``.
    With ``edge_field=False`` the field sum also stops at ``L - 2``, leaving
    the last site without a field.
    """
    _check_size(L)
    dim = 1 << L
    z = 1 - 2 * _basis_bits(L)
    n_field = L if edge_field else L - 1
    diag = np.zeros(dim)
    for j in range(L - 1):
        diag += z[j] * z[j + 1]
    for j in range(n_field):
        diag += h_z * z[j]
    H = np.diag(-0.25 * diag)
    idx = np.arange(dim)
    for j in range(n_field):
        H[idx, idx ^ (1 << (L - 1 - j))] += -0.25 * h_x
    return H


def build_xxz(L: int, Delta: float) -> np.ndarray:
    """XXZ chain ``H = -1/4 sum_j [X X + Y Y + Delta Z Z]``, open boundaries."""
    _check_size(L)
    dim = 1 << L
    bits = _basis_bits(L)
    z = 1 - 2 * bits
    diag = np.zeros(dim)
    for j in range(L - 1):
        diag += Delta * z[j] * z[j + 1]
    H = np.diag(-0.25 * diag)
    idx = np.arange(dim)
    for j in range(L - 1):
        # XX + YY = 2 (|01><10| + |10><01|) on the bond
        flip = bits[j] != bits[j + 1]
        src = idx[flip]
        mask = (1 << (L - 1 - j)) | (1 << (L - 2 - j))
        H[src, src ^ mask] += -0.5
    return H


def build_hamiltonian(model: str, L: int, h_x=1.1, h_z=-0.04, delta_aniso=2.0, edge_field=True) -> np.ndarray:
    """Dispatch on ``model`` in ``{"ising", "xxz"}``."""
    if model == "ising":
        return build_ising(L, h_x, h_z, edge_field)
    if model == "xxz":
        return build_xxz(L, delta_aniso)
    raise PreconditionError(f"unknown model {model!r}")


@dataclass
class GibbsFamily:
    """Eigendecomposition of ``H`` reused for Gibbs states at many ``beta``.

    Attributes
    ----------
    energies : ndarray
        Ascending eigenvalues of ``H``.
    vectors : ndarray
        Corresponding eigenvectors as columns.
    """

    energies: np.ndarray
    vectors: np.ndarray

    @classmethod
    def from_hamiltonian(cls, H: np.ndarray) -> "GibbsFamily":
        H = np.asarray(H)
        n_qubits_of(H)
        dev = np.max(np.abs(H - H.conj().T))
        if dev > 1e-10:
            raise DensityMatrixError(f"Hamiltonian is not Hermitian (max deviation {dev:.3e})")
        energies, vectors = np.linalg.eigh(H)
        return cls(energies, vectors)

    @property
    def n_qubits(self) -> int:
        return len(self.energies).bit_length() - 1

    def weights(self, beta: float) -> np.ndarray:
        """Normalized Boltzmann weights, i.e. the spectrum of the Gibbs state."""
        if beta < 0:
            raise PreconditionError(f"beta must be >= 0, got {beta}")
        w = np.exp(-beta * (self.energies - self.energies[0]))
        return w / w.sum()

    def state(self, beta: float) -> np.ndarray:
        w = self.weights(beta)
        rho = (self.vectors * w) @ self.vectors.conj().T
        return 0.5 * (rho + rho.conj().T)

    def moment(self, beta: float, n: int) -> float:
        """Global Rényi moment straight from the Boltzmann weights."""
        return float(np.sum(self.weights(beta) ** n))


def gibbs_state(H: np.ndarray, beta: float) -> np.ndarray:
    """Thermal state ``exp(-beta H) / Z`` via eigendecomposition of ``H``."""
    return GibbsFamily.from_hamiltonian(H).state(beta)


def renyi2_continuity_bound(L: int, delta: float) -> float:
    """Upper bound on ``|S_2(rho) - S_2(sigma)|`` for ``||rho - sigma||_1 = delta``."""
    d = 2.0**L
    return d * (1.0 - (1.0 - 2.0 * delta) ** 2 - 4.0 * delta**2 / (d - 1.0))


# --- small fixtures used by tests and the CLI -----------------------------


def maximally_mixed(n: int) -> np.ndarray:
    return np.eye(1 << n) / (1 << n)


def bell_state() -> np.ndarray:
    """``|Phi+><Phi+|`` on two qubits."""
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
    return np.outer(psi, psi.conj())


def random_pure_state(n: int, rng: np.random.Generator) -> np.ndarray:
    d = 1 << n
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state ``G G^dag / Tr`` with a complex Ginibre ``G``."""
    d = 1 << n
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
