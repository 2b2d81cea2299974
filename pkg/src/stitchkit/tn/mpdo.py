"""Translation-invariant MPDOs and their transfer matrices.

A site tensor ``W[a, out, in, b]`` defines the periodic operator
``sigma_L = Tr_virtual[W W ... W]``. The one- and two-replica transfer
matrices are

``tau_1[a, b] = sum_j W[a, j, j, b]``
``tau_2[(a, a'), (b, b')] = sum_{jk} W[a, j, k, b] W[a', k, j, b']``

so that ``Tr sigma_L = Tr tau_1**L`` and ``Tr sigma_L**2 = Tr tau_2**L``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import AssumptionViolation, PreconditionError
from ..rand import as_generator
from .mpo import MPO

GAP_TOL = 1e-10
OVERLAP_TOL = 1e-10
COND_WARN = 1e8
# floating-point allowance when comparing |r2/P2 - 1| with the bound
ROUNDOFF = 1e-12


def random_mpdo_tensor(chi: int, seed, construction: str = "local_psd") -> np.ndarray:
    """Random site tensor whose MPDO is positive for every system size.

    ``local_psd`` draws complex Gaussian ``G[a, b]`` (2x2 each) and sets the
    physical block ``W[a, :, :, b] = G[a, b] G[a, b]^dagger``. Every term of
    the virtual sum is then a tensor product of positive matrices, so
    ``sigma_L >= 0``.

    ``purified`` draws a random tensor ``B[a, s, e, b]`` with an ancilla
    ``e`` of dimension 2 and traces the ancilla out of ``B B^*``. Its bond
    dimension is ``chi``, which must be a perfect square.
    """
    rng = as_generator(seed)
    chi = int(chi)
    if chi < 1:
        raise PreconditionError(f"chi must be >= 1, got {chi}")
    if construction == "local_psd":
        shape = (chi, chi, 2, 2)
        g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        blocks = g @ np.conj(np.swapaxes(g, -1, -2))
        return blocks.transpose(0, 2, 3, 1)
    if construction == "purified":
        d = math.isqrt(chi)
        if d * d != chi:
            raise PreconditionError(f"purified construction needs a square chi, got {chi}")
        shape = (d, 2, 2, d)
        b = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        w = np.einsum("asex,btey->abstxy", b, b.conj())
        return w.reshape(chi, 2, 2, chi)
    raise PreconditionError(f"unknown construction {construction!r}")


def mpdo_to_mpo(site_tensor: np.ndarray, L: int) -> MPO:
    """Periodic MPO of ``L`` copies of the site tensor."""
    return MPO([site_tensor] * L, periodic=True)


def build_transfer_matrix(site_tensor: np.ndarray, n: int) -> np.ndarray:
    """``tau_1`` (shape ``chi x chi``) or ``tau_2`` (shape ``chi**2 x chi**2``)."""
    w = np.asarray(site_tensor)
    chi = w.shape[0]
    if n == 1:
        return np.einsum("ajjb->ab", w)
    if n == 2:
        return np.einsum("ajkb,ckjd->acbd", w, w).reshape(chi * chi, chi * chi)
    raise PreconditionError(f"transfer matrices are defined for n in (1, 2), got {n}")


def _sorted_eig(mat):
    vals, vecs = np.linalg.eig(mat)
    order = np.argsort(-np.abs(vals), kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    cond = np.linalg.cond(vecs)
    if cond > COND_WARN:
        warnings.warn(f"ill-conditioned eigenvectors (condition number {cond:.3g})", RuntimeWarning)
    # rows of the inverse are the dual (left) eigenvectors, <L_j|R_k> = delta_jk
    return vals, vecs, np.linalg.inv(vecs)


def _corr_length(vals) -> float:
    if len(vals) < 2:
        return 0.0
    ratio = abs(vals[1]) / abs(vals[0])
    if ratio == 0:
        return 0.0
    return -1.0 / math.log(ratio)


@dataclass
class TransferSpectrum:
    """Spectral data of ``tau_1`` and ``tau_2`` for a rescaled tensor.

    The tensor is rescaled so that the leading eigenvalue of ``tau_1`` is 1.
    ``k_min`` is filled in when a system size was supplied.
    """

    chi: int
    lam: np.ndarray
    mu: np.ndarray
    zeta1: float
    zeta2: float
    zeta: float
    C: float
    gap_ok: bool
    overlap_ok: bool
    overlaps: tuple
    site_tensor: np.ndarray
    L: int | None = None
    k_min: int | None = None

    def k_min_real(self, L: int) -> float:
        """``max{1, zeta log(20 C chi^2 L)}`` before rounding up."""
        if self.C <= 0 or self.zeta <= 0:
            return 1.0
        return max(1.0, self.zeta * math.log(20 * self.C * self.chi**2 * L))

    def k_min_for(self, L: int) -> int:
        return math.ceil(self.k_min_real(L) - 1e-12)

    def min_L(self, k: int) -> float:
        """Smallest admissible system size for buffer size ``k``."""
        z, chi = self.zeta, self.chi
        return max(z * math.log(2**5 * chi**2), 4 * k + z * math.log(2 * chi))

    def bound(self, L: int, k: int) -> float:
        """``chi^2 (80 C + 32) (L / k) exp(-k / zeta)``."""
        decay = math.exp(-k / self.zeta) if self.zeta > 0 else 0.0
        return self.chi**2 * (80 * self.C + 32) * (L / k) * decay

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("site_tensor")
        d["lam"] = [[float(x.real), float(x.imag)] for x in self.lam]
        d["mu"] = [[float(x.real), float(x.imag)] for x in self.mu]
        d["overlaps"] = [abs(x) for x in self.overlaps]
        return d


def analyze_transfer_spectrum(site_tensor: np.ndarray, L: int | None = None) -> TransferSpectrum:
    """Eigen-decompose ``tau_1`` and ``tau_2`` and derive ``zeta``, ``C``, ``k_min``.

    Raises
    ------
    AssumptionViolation
        If either leading eigenvalue is not separated in modulus, if
        ``mu_0`` is not positive, or if a leading-eigenvector overlap
        vanishes.
    """
    w = np.asarray(site_tensor, dtype=complex)
    chi = w.shape[0]
    lam, R1, L1 = _sorted_eig(build_transfer_matrix(w, 1))
    w = w / lam[0]
    lam = lam / lam[0]
    mu, R2, L2 = _sorted_eig(build_transfer_matrix(w, 2))
    for name, vals in (("lambda", lam), ("mu", mu)):
        if len(vals) > 1 and abs(vals[1]) / abs(vals[0]) >= 1 - GAP_TOL:
            raise AssumptionViolation(
                f"no spectral gap in {name}: |{name}_1/{name}_0| = {abs(vals[1]) / abs(vals[0]):.12g}",
                quantity=f"{name}_gap",
                value=float(abs(vals[1]) / abs(vals[0])),
            )
    if abs(mu[0].imag) > 1e-10 * abs(mu[0]) or mu[0].real <= 0:
        raise AssumptionViolation(f"mu_0 = {mu[0]} is not positive", quantity="mu_0", value=complex(mu[0]))
    # X[(j,k), l] = (<L_j| <L_k|) |R^(2)_l>,  Y[l, (j,k)] = <L^(2)_l| (|R_j> |R_k>)
    X = np.kron(L1, L1) @ R2
    Y = L2 @ np.kron(R1, R1)
    ov1, ov2 = X[0, 0], Y[0, 0]
    for name, ov in (("overlap_L1L1_R2", ov1), ("overlap_L2_R1R1", ov2)):
        if abs(ov) <= OVERLAP_TOL:
            raise AssumptionViolation(f"vanishing eigenvector overlap {name} = {abs(ov):.3g}", quantity=name, value=abs(ov))
    terms = np.abs(X * Y.T)
    ref = terms[0, 0]
    terms[0, 0] = 0.0
    C = float(terms.max() / ref) if terms.size > 1 else 0.0
    z1, z2 = _corr_length(lam), _corr_length(mu)
    spec = TransferSpectrum(
        chi=chi,
        lam=lam,
        mu=mu,
        zeta1=z1,
        zeta2=z2,
        zeta=max(z1, z2),
        C=C,
        gap_ok=True,
        overlap_ok=True,
        overlaps=(complex(ov1), complex(ov2)),
        site_tensor=w,
    )
    if L is not None:
        spec.L = int(L)
        spec.k_min = spec.k_min_for(L)
    return spec


def periodic_moments(site_tensor: np.ndarray, L: int) -> tuple[float, float]:
    """``(Tr sigma_L, Tr sigma_L**2)`` from transfer-matrix powers."""
    t1 = np.linalg.matrix_power(build_transfer_matrix(site_tensor, 1), L)
    t2 = np.linalg.matrix_power(build_transfer_matrix(site_tensor, 2), L)
    return float(np.trace(t1).real), float(np.trace(t2).real)


def periodic_purity(site_tensor: np.ndarray, L: int) -> float:
    """``P_2 = Tr sigma_L**2 / (Tr sigma_L)**2``."""
    tr1, tr2 = periodic_moments(site_tensor, L)
    return tr2 / tr1**2


def _log_local_purity(tau1: np.ndarray, tau2: np.ndarray, L: int, size: int) -> float:
    """``log Tr sigma_I**2`` for ``|I| = size`` on the periodic chain."""
    pair = np.kron(tau1, tau1)
    if size == L:
        mat = np.linalg.matrix_power(tau2, L)
    else:
        mat = np.linalg.matrix_power(tau2, size) @ np.linalg.matrix_power(pair, L - size)
    return complex(np.log(complex(np.trace(mat)))).real


def periodic_r2(site_tensor: np.ndarray, L: int, k: int) -> float:
    """Periodic stitched purity from ``R = L / k`` intervals.

    The numerator is the product of ``Tr sigma^2`` on the ``R`` cyclic
    neighbor pairs, the denominator the product over single intervals.
    Normalization factors cancel, so unnormalized moments are used.
    """
    if L % k:
        raise PreconditionError(f"periodic r2 needs L divisible by k, got L={L}, k={k}")
    R = L // k
    tau1 = build_transfer_matrix(site_tensor, 1)
    tau2 = build_transfer_matrix(site_tensor, 2)
    # rescale so that powers stay finite; the ratio is invariant
    s1 = np.max(np.abs(np.linalg.eigvals(tau1)))
    tau1, tau2 = tau1 / s1, tau2 / s1**2
    num = _log_local_purity(tau1, tau2, L, min(2 * k, L))
    den = _log_local_purity(tau1, tau2, L, k)
    tr1, tr2 = periodic_moments(site_tensor / s1, L)
    # with R = 1 the single interval is the whole chain and r2 = P2
    if R == 1:
        return tr2 / tr1**2
    return float(np.exp(R * (num - den)))


@dataclass
class BoundCheck:
    bound: float
    actual: float
    passed: bool
    k_min: int
    L_min: float


def mpdo_purity_bound_check(site_tensor: np.ndarray, L: int, k: int, spectrum: TransferSpectrum | None = None) -> BoundCheck:
    """Compare ``|r_2/P_2 - 1|`` with ``chi^2 (80C+32) (L/k) exp(-k/zeta)``.

    Raises
    ------
    PreconditionError
        When ``k < k_min``, ``L`` is below the admissible size or ``k`` does
        not divide ``L``. The message names the violated inequality.
    """
    spec = spectrum if spectrum is not None else analyze_transfer_spectrum(site_tensor)
    k_min_real = spec.k_min_real(L)
    if k < k_min_real:
        raise PreconditionError(f"k >= k_min violated: k={k} < {k_min_real:.4g}")
    L_min = spec.min_L(k)
    if L < L_min:
        raise PreconditionError(f"L >= max(zeta log(32 chi^2), 4k + zeta log(2 chi)) violated: L={L} < {L_min:.4g}")
    if L % k:
        raise PreconditionError(f"L/k must be an integer, got L={L}, k={k}")
    w = spec.site_tensor
    tr1, tr2 = periodic_moments(w, L)
    p2 = tr2 / tr1**2
    actual = abs(periodic_r2(w, L, k) / p2 - 1)
    bound = spec.bound(L, k)
    return BoundCheck(bound=bound, actual=actual, passed=bool(actual <= bound + ROUNDOFF), k_min=spec.k_min_for(L), L_min=L_min)


def admissible_pairs(spectrum: TransferSpectrum, L_max: int) -> list[tuple[int, int]]:
    """All ``(L, k)`` with ``L <= L_max`` meeting the theorem's preconditions."""
    pairs = []
    for L in range(1, L_max + 1):
        for k in range(1, L + 1):
            if L % k == 0 and k >= spectrum.k_min_real(L) and L >= spectrum.min_L(k):
                pairs.append((L, k))
    return pairs
