"""Matrix product operators: thermal states and replica contractions.

Site tensors have shape ``(left_bond, out, in, right_bond)``. A global scale
``exp(log_scale)`` is kept apart from the tensors so that ``exp(-beta H)``
can be represented without overflow. Every normalized quantity below is
independent of that scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..dense import MAX_DENSE_QUBITS
from ..errors import ConvergenceError, PreconditionError, SizeLimitError
from ..regions import Interval, union
from .mps import MPS

TROTTER_STEP = 0.01
SVD_CUTOFF = 1e-12
MAX_TRUNCATION = 1e-10
MAX_REPLICA_ENTRIES = 2**26
MAX_LOCAL_QUBITS = 12

_I2 = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Y = np.array([[0.0, -1j], [1j, 0.0]])
_Z = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class MPO:
    """An operator in MPO form.

    Parameters
    ----------
    tensors : tuple of ndarray
        Site tensors ``(Dl, out, in, Dr)``.
    periodic : bool
        Close the chain with a trace over the outer bonds instead of
        dimension-1 boundary bonds.
    log_scale : float
        The operator equals ``exp(log_scale)`` times the contraction.
    truncation_error : float
        Accumulated discarded weight from construction.
    """

    tensors: tuple
    periodic: bool = False
    log_scale: float = 0.0
    truncation_error: float = 0.0

    def __post_init__(self):
        ts = tuple(np.asarray(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        if not ts:
            raise PreconditionError("an MPO needs at least one site")
        for j, t in enumerate(ts):
            if t.ndim != 4 or t.shape[1:3] != (2, 2):
                raise PreconditionError(f"site {j}: expected shape (Dl, 2, 2, Dr), got {t.shape}")
            if j and ts[j - 1].shape[3] != t.shape[0]:
                raise PreconditionError(f"bond mismatch between sites {j - 1} and {j}")
        if self.periodic:
            if ts[0].shape[0] != ts[-1].shape[3]:
                raise PreconditionError("periodic MPO needs matching outer bonds")
        elif ts[0].shape[0] != 1 or ts[-1].shape[3] != 1:
            raise PreconditionError("open MPO needs boundary bonds of dimension 1")

    @property
    def L(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list:
        return [t.shape[3] for t in self.tensors[:-1]]

    @property
    def chi_used(self) -> int:
        return max([1] + self.bond_dims)


def identity_mpo(L: int) -> MPO:
    return MPO([np.eye(2).reshape(1, 2, 2, 1) for _ in range(L)])


def mps_to_mpo(mps: MPS) -> MPO:
    """The projector ``|psi><psi|`` as an MPO of squared bond dimension."""
    ts = []
    for a in mps.tensors:
        w = np.einsum("asb,ctd->acstbd", a, a.conj())
        dl, dr = a.shape[0], a.shape[2]
        ts.append(w.reshape(dl * dl, 2, 2, dr * dr))
    return MPO(ts)


def mpo_to_dense(mpo: MPO, normalize: bool = True) -> np.ndarray:
    """Contract to a dense ``2**L x 2**L`` matrix.

    With ``normalize`` the result is divided by its trace, otherwise the
    stored scale is applied.
    """
    if mpo.L > MAX_DENSE_QUBITS:
        raise SizeLimitError(f"dense conversion limited to {MAX_DENSE_QUBITS} qubits, got {mpo.L}")
    # acc[a, O, I, b]: open left bond a, grouped physical indices, right bond b
    acc = mpo.tensors[0]
    for w in mpo.tensors[1:]:
        acc = np.einsum("aoib,bpjc->aopijc", acc, w)
        s = acc.shape
        acc = acc.reshape(s[0], s[1] * s[2], s[3] * s[4], s[5])
    if mpo.periodic:
        mat = np.einsum("aoia->oi", acc)
    else:
        mat = acc[0, :, :, 0]
    if normalize:
        return mat / np.trace(mat)
    return mat * np.exp(mpo.log_scale)


def bond_hamiltonian(model: str, h_x=1.1, h_z=-0.04, delta_aniso=2.0, last: bool = False, edge_field=True) -> np.ndarray:
    """Two-site term ``h`` with ``H = sum_j h_(j, j+1)``, matching the dense builders.

    Each Ising bond carries the field of its left site; the ``last`` bond
    also carries the field of the final site unless ``edge_field`` is off.
    """
    if model == "ising":
        h = np.kron(_Z, _Z) + h_x * np.kron(_X, _I2) + h_z * np.kron(_Z, _I2)
        if last and edge_field:
            h = h + h_x * np.kron(_I2, _X) + h_z * np.kron(_I2, _Z)
    elif model == "xxz":
        h = (np.kron(_X, _X) + np.kron(_Y, _Y)).real + delta_aniso * np.kron(_Z, _Z)
    else:
        raise PreconditionError(f"unknown model {model!r}; expected 'ising' or 'xxz'")
    return -0.25 * h


class _Chain:
    """Mutable MPO with an orthogonality center, used during evolution."""

    def __init__(self, L, max_chi, cutoff):
        w = (np.eye(2) / np.sqrt(2)).reshape(1, 2, 2, 1)
        self.ts = [w.copy() for _ in range(L)]
        self.log_scale = L * 0.5 * np.log(2.0)
        self.center = 0
        self.max_chi = max_chi
        self.cutoff = cutoff
        self.discarded = 0.0
        self.chi_limited = False

    def _move_right(self):
        j = self.center
        t = self.ts[j]
        dl, o, i, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * o * i, dr))
        self.ts[j] = q.reshape(dl, o, i, -1)
        self.ts[j + 1] = np.einsum("ab,boic->aoic", r, self.ts[j + 1])
        self.center = j + 1

    def _move_left(self):
        j = self.center
        t = self.ts[j]
        dl, o, i, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl, o * i * dr).T)
        self.ts[j] = q.T.reshape(-1, o, i, dr)
        self.ts[j - 1] = np.einsum("aoib,bc->aoic", self.ts[j - 1], r.T)
        self.center = j - 1

    def move_to(self, j):
        while self.center < j:
            self._move_right()
        while self.center > j + 1:
            self._move_left()

    def apply(self, j, g, rightward):
        """Apply ``g (.) g`` on the bond ``(j, j+1)`` for a symmetric ``g``."""
        self.move_to(j)
        a, b = self.ts[j], self.ts[j + 1]
        theta = np.einsum("aoib,bpjc->aopijc", a, b)
        g4 = g.reshape(2, 2, 2, 2)
        theta = np.einsum("xyop,aopijc->axyijc", g4, theta)
        theta = np.einsum("aopijc,ijuv->aopuvc", theta, g4)
        dl, dr = theta.shape[0], theta.shape[5]
        mat = theta.transpose(0, 1, 3, 2, 4, 5).reshape(dl * 4, 4 * dr)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        keep = int(np.sum(s > self.cutoff * s[0]))
        if keep > self.max_chi:
            keep = self.max_chi
            self.chi_limited = True
        total = np.sum(s**2)
        self.discarded += float(np.sum(s[keep:] ** 2) / total)
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        norm = np.linalg.norm(s)
        s = s / norm
        self.log_scale += np.log(norm)
        if rightward:
            left, right = u, s[:, None] * vh
            self.center = j + 1
        else:
            left, right = u * s[None, :], vh
            self.center = j
        self.ts[j] = left.reshape(dl, 2, 2, keep)
        self.ts[j + 1] = right.reshape(keep, 2, 2, dr)


def thermal_mpo(
    model: str,
    L: int,
    beta: float,
    h_x: float = 1.1,
    h_z: float = -0.04,
    delta_aniso: float = 2.0,
    edge_field: bool = True,
    max_chi: int = 32,
    trotter_step: float = TROTTER_STEP,
    cutoff: float = SVD_CUTOFF,
    max_truncation: float = MAX_TRUNCATION,
) -> MPO:
    """Unnormalized ``exp(-beta H)`` by two-sided imaginary-time TEBD.

    The operator is grown as ``S^N (S^N)^T`` with the second-order step
    ``S = exp(-dt/2 H_even) exp(-dt H_odd) exp(-dt/2 H_even)`` and
    ``N dt = beta / 2``. Consecutive even half steps are merged.

    Raises
    ------
    ConvergenceError
        If the bond cap ``max_chi`` forced a total discarded weight above
        ``max_truncation``.
    """
    if L < 2:
        raise PreconditionError(f"need L >= 2, got {L}")
    if beta < 0:
        raise PreconditionError(f"beta must be >= 0, got {beta}")
    chain = _Chain(L, int(max_chi), cutoff)
    if beta > 0:
        n_steps = max(1, int(np.ceil(beta / 2 / trotter_step - 1e-9)))
        dt = beta / 2 / n_steps
        hs = [bond_hamiltonian(model, h_x, h_z, delta_aniso, last, edge_field) for last in (False, True)]
        half = [expm(-dt / 2 * h) for h in hs]
        full = [expm(-dt * h) for h in hs]
        even = list(range(0, L - 1, 2))
        odd = list(range(1, L - 1, 2))[::-1]

        def sweep(bonds, gates, rightward):
            for j in bonds:
                chain.apply(j, gates[j == L - 2], rightward)

        sweep(even, half, True)
        for step in range(n_steps):
            sweep(odd, full, False)
            sweep(even, half if step == n_steps - 1 else full, True)
    else:
        bond_hamiltonian(model, h_x, h_z, delta_aniso)
    if chain.chi_limited and chain.discarded > max_truncation:
        raise ConvergenceError(
            f"discarded weight {chain.discarded:.3g} exceeds {max_truncation:.3g} at max_chi={max_chi}"
        )
    return MPO(chain.ts, log_scale=float(chain.log_scale), truncation_error=chain.discarded)


def _site_traces(mpo: MPO) -> list:
    return [np.einsum("assb->ab", t) for t in mpo.tensors]


def _environments(mpo: MPO, region: Interval):
    """Normalized left and right boundary vectors around ``region``."""
    if mpo.periodic:
        raise PreconditionError("local moments need an open-boundary MPO")
    region.check_within(mpo.L)
    traces = _site_traces(mpo)
    left = np.ones(1)
    for t in traces[: region.start]:
        left = left @ t
        left = left / np.linalg.norm(left)
    right = np.ones(1)
    for t in traces[region.stop :][::-1]:
        right = t @ right
        right = right / np.linalg.norm(right)
    return left, right, traces


def mpo_reduced_density(mpo: MPO, I: Interval) -> np.ndarray:
    """Normalized reduced density matrix on ``I`` by environment contraction."""
    if I.length > MAX_LOCAL_QUBITS:
        raise SizeLimitError(f"reduced density limited to {MAX_LOCAL_QUBITS} qubits, got {I.length}")
    left, right, _ = _environments(mpo, I)
    acc = np.einsum("a,aoib->oib", left, mpo.tensors[I.start])
    for j in I.sites[1:]:
        acc = np.einsum("oib,bpjc->opijc", acc, mpo.tensors[j])
        s = acc.shape
        acc = acc.reshape(s[0] * s[1], s[2] * s[3], s[4])
    mat = acc @ right
    mat = mat / np.trace(mat)
    return 0.5 * (mat + mat.conj().T)


def _absorb_site(env: np.ndarray, w: np.ndarray, n: int, flip: bool) -> np.ndarray:
    """Absorb one site into the ``n``-replica environment, one replica at a time.

    Replica ``r`` carries ``(out, in) = (s_r, s_{r+1})``, or the reverse on a
    transposed site. At most two physical indices are open at any point.
    """
    if flip:
        w = w.transpose(0, 2, 1, 3)
    if n == 1:
        return np.einsum("a,assb->b", env, w)
    # first replica opens s_0 (out) and s_1 (in); axes: (b_0, a_1..a_{n-1}, s_0, s_1)
    env = np.tensordot(env, w, axes=([0], [0]))
    env = np.moveaxis(env, -1, 0)
    for r in range(1, n):
        # env axes: (b_0..b_{r-1}, a_r..a_{n-1}, s_0, s_r)
        last = r == n - 1
        # contract a_r (axis r) and s_r (last axis) with w[a, s_r, s_{r+1}, b]
        env = np.tensordot(env, w, axes=([r, env.ndim - 1], [0, 1]))
        # new trailing axes: s_{r+1}, b_r; move b_r to position r
        env = np.moveaxis(env, -1, r)
        if last:
            # close the cycle: s_n = s_0
            env = np.trace(env, axis1=env.ndim - 2, axis2=env.ndim - 1)
    return env


def _replica_contract(mpo: MPO, region: Interval, n: int, transposed: range | None) -> float:
    if not 1 <= n <= 5:
        raise PreconditionError(f"replica contraction supports 1 <= n <= 5, got {n}")
    left, right, traces = _environments(mpo, region)
    bonds = [mpo.tensors[j].shape[0] for j in region.sites] + [mpo.tensors[region.stop - 1].shape[3]]
    if max(bonds) ** n > MAX_REPLICA_ENTRIES:
        raise SizeLimitError(f"replica environment of {max(bonds)}**{n} entries exceeds the memory limit")
    env = left
    for _ in range(n - 1):
        env = np.multiply.outer(env, left)
    env = np.asarray(env).reshape((len(left),) * n)
    norm = left
    log_env = log_norm = 0.0
    for j in region.sites:
        env = _absorb_site(env, mpo.tensors[j], n, transposed is not None and j in transposed)
        scale = np.max(np.abs(env))
        env = env / scale
        log_env += np.log(scale)
        norm = norm @ traces[j]
        scale = np.max(np.abs(norm))
        norm = norm / scale
        log_norm += np.log(scale)
    val = env
    for _ in range(n):
        val = val @ right
    z = complex(norm @ right)
    ratio = complex(val) / z**n * np.exp(log_env - n * log_norm)
    return float(ratio.real)


def mpo_trace_power(mpo: MPO, I: Interval, n: int) -> float:
    """``Tr[rho_I**n]`` for the normalized state, by replica contraction."""
    return _replica_contract(mpo, I, n, None)


def mpo_pt_moment(mpo: MPO, X: Interval, Y: Interval, n: int) -> float:
    """``Tr[(rho_XY^{T_X})**n]`` with anticyclic wiring on ``X``."""
    XY = union(X, Y)
    return _replica_contract(mpo, XY, n, X.sites)
