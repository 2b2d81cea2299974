"""Finite-depth brickwork circuits and their factorization identities.

A circuit of depth ``l`` applies ``l`` layers of two-qubit gates; layer
``i`` acts on the pairs ``(j, j + 1)`` with ``j = i % 2, i % 2 + 2, ...``.
States are produced densely, so chains are limited to
``dense.MAX_DENSE_QUBITS`` sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dense
from .errors import InvalidRegionError, PreconditionError, SizeLimitError
from .rand import as_generator, haar_unitary
from .regions import Interval, union

__all__ = [
    "BrickworkCircuit",
    "ProductInput",
    "GammaThresholdReport",
    "sample_random_circuit",
    "identity_circuit",
    "apply_circuit",
    "verify_purity_factorization",
    "verify_chain_factorization",
    "verify_pt_factorization",
    "factorization_sweep",
    "light_cone_core",
    "gamma_threshold_sweep",
    "DEFAULT_GAMMA_GRID",
]

DEFAULT_GAMMA_GRID = np.linspace(0.0, 0.25, 64)


@dataclass
class BrickworkCircuit:
    """Brickwork circuit on ``n_qubits`` sites.

    Attributes
    ----------
    n_qubits : int
    layers : list of list of (int, ndarray)
        ``layers[i]`` holds ``(j, g)`` pairs: a 4x4 unitary ``g`` acting on
        sites ``(j, j + 1)``.
    """

    n_qubits: int
    layers: list = field(default_factory=list)

    def __post_init__(self):
        for i, layer in enumerate(self.layers):
            used = set()
            for j, g in layer:
                if not 0 <= j < self.n_qubits - 1:
                    raise InvalidRegionError(f"gate on ({j}, {j + 1}) outside the chain")
                if j in used or j + 1 in used:
                    raise PreconditionError(f"overlapping gates in layer {i}")
                used.update((j, j + 1))
                if np.asarray(g).shape != (4, 4):
                    raise PreconditionError("gates must be 4x4 matrices")
                if np.max(np.abs(g @ g.conj().T - np.eye(4))) > 1e-12:
                    raise PreconditionError(f"gate on ({j}, {j + 1}) is not unitary")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def gates(self):
        """Iterate ``(layer, site, gate)`` in application order."""
        for i, layer in enumerate(self.layers):
            for j, g in layer:
                yield i, j, g

    def reflected(self) -> "BrickworkCircuit":
        """Mirror image under ``j -> L - 1 - j``."""
        L = self.n_qubits
        swap = np.eye(4)[[0, 2, 1, 3]]
        layers = [[(L - 2 - j, swap @ g @ swap) for j, g in layer] for layer in self.layers]
        return BrickworkCircuit(L, layers)


def brickwork_pairs(L: int, layer: int) -> list[int]:
    return list(range(layer % 2, L - 1, 2))


def sample_random_circuit(L: int, depth: int, seed) -> BrickworkCircuit:
    """Brickwork circuit of Haar-random two-qubit gates.

    Gates are drawn layer by layer, left to right, from a single stream so
    the circuit is a deterministic function of ``seed``.
    """
    if L < 2 or depth < 1:
        raise PreconditionError(f"need L >= 2 and depth >= 1, got L={L}, depth={depth}")
    rng = as_generator(seed)
    layers = []
    for i in range(depth):
        pairs = brickwork_pairs(L, i)
        us = haar_unitary(4, rng, size=len(pairs))
        layers.append([(j, u) for j, u in zip(pairs, us)])
    return BrickworkCircuit(L, layers)


def identity_circuit(L: int, depth: int) -> BrickworkCircuit:
    """Brickwork circuit whose gates are all the identity."""
    layers = [[(j, np.eye(4, dtype=complex)) for j in brickwork_pairs(L, i)] for i in range(depth)]
    return BrickworkCircuit(L, layers)


@dataclass
class ProductInput:
    """Product input state ``sigma_0 (x) sigma_1 (x) ...``.

    Attributes
    ----------
    sites : list of ndarray
        Single-qubit density matrices.
    gamma : float or None
        Depolarization parameter when built by :meth:`depolarized`.
    """

    sites: list
    gamma: float | None = None

    def __post_init__(self):
        for s in self.sites:
            if np.asarray(s).shape != (2, 2):
                raise PreconditionError("site states must be 2x2")
            dense.validate_density(s)

    @property
    def n_qubits(self) -> int:
        return len(self.sites)

    @classmethod
    def depolarized(cls, gamma: float, bases) -> "ProductInput":
        """``sigma_j = gamma |a_j><a_j| + (1 - gamma) |b_j><b_j|``.

        Parameters
        ----------
        gamma : float
            In ``[0, 1/2]``.
        bases : array_like, shape (L, 2, 2)
            Unitaries whose first and second columns are ``|a_j>`` and
            ``|b_j>``.
        """
        if not 0.0 <= gamma <= 0.5:
            raise PreconditionError(f"gamma must lie in [0, 1/2], got {gamma}")
        bases = np.asarray(bases)
        diag = np.array([gamma, 1.0 - gamma])
        sites = [(b * diag) @ b.conj().T for b in bases]
        return cls(sites, gamma)

    @classmethod
    def computational(cls, L: int, gamma: float) -> "ProductInput":
        return cls.depolarized(gamma, np.broadcast_to(np.eye(2), (L, 2, 2)))

    @classmethod
    def random(cls, L: int, seed, pure: bool = False) -> "ProductInput":
        rng = as_generator(seed)
        if pure:
            return cls([dense.random_pure_state(1, rng) for _ in range(L)])
        return cls([dense.random_density_matrix(1, rng) for _ in range(L)])

    def density(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for s in self.sites:
            out = np.kron(out, s)
        return out


def _apply_layers_to_rows(mat: np.ndarray, circuit: BrickworkCircuit) -> np.ndarray:
    """Left-multiply ``mat`` (shape ``(2**L, D)``) by the circuit unitary."""
    L = circuit.n_qubits
    cols = mat.shape[1]
    for _, j, g in circuit.gates():
        m = mat.reshape(1 << j, 4, (1 << (L - j - 2)) * cols)
        mat = np.matmul(g, m).reshape(1 << L, cols)
    return mat


def apply_circuit(circuit: BrickworkCircuit, inp: ProductInput) -> np.ndarray:
    """Output state ``U (x)sigma_j U^dag`` of a brickwork circuit.

    Raises
    ------
    SizeLimitError
        If the chain exceeds the dense size limit.
    """
    L = circuit.n_qubits
    if inp.n_qubits != L:
        raise PreconditionError(f"input has {inp.n_qubits} sites, circuit has {L}")
    if L > dense.MAX_DENSE_QUBITS:
        raise SizeLimitError(f"dense backend supports at most {dense.MAX_DENSE_QUBITS} qubits")
    rho = inp.density()
    if circuit.depth == 0:
        return rho
    # U rho, then (U rho)^dag = rho U^dag, then U rho U^dag
    half = _apply_layers_to_rows(rho, circuit)
    out = _apply_layers_to_rows(np.ascontiguousarray(half.conj().T), circuit)
    return 0.5 * (out + out.conj().T)


def _threshold_check(buffer: int, depth, allow_below_threshold: bool, what: str) -> None:
    if depth is None or allow_below_threshold:
        return
    if buffer < 2 * depth - 1:
        raise PreconditionError(
            f"{what} has {buffer} qubits; exact factorization needs >= 2*depth-1 = {2 * depth - 1}"
        )


def verify_purity_factorization(
    rho: np.ndarray,
    A: Interval,
    B: Interval,
    C: Interval,
    depth: int | None = None,
    allow_below_threshold: bool = False,
) -> float:
    """Deviation ``|P2[AB] P2[BC] / (P2[B] P2[ABC]) - 1|``.

    ``A``, ``B``, ``C`` must be adjacent, left to right. When ``depth`` is
    given, ``|B| >= 2 depth - 1`` is enforced unless
    ``allow_below_threshold`` is set.
    """
    abc = union(A, B, C)
    abc.check_within(dense.n_qubits_of(rho))
    _threshold_check(B.length, depth, allow_below_threshold, "B")
    p_ab = dense.purity(dense.partial_trace(rho, union(A, B)))
    p_bc = dense.purity(dense.partial_trace(rho, union(B, C)))
    p_b = dense.purity(dense.partial_trace(rho, B))
    p_abc = dense.purity(dense.partial_trace(rho, abc))
    return abs(p_ab * p_bc / (p_b * p_abc) - 1.0)


def verify_chain_factorization(
    rho: np.ndarray,
    k: int,
    depth: int | None = None,
    allow_below_threshold: bool = False,
) -> float:
    """Deviation ``|r2 / P2 - 1|`` of the stitched product over the ``k``-partition."""
    from .stitch import exact_local_purities, make_partition, stitched_purity

    L = dense.n_qubits_of(rho)
    _threshold_check(k, depth, allow_below_threshold, "each interval")
    part = make_partition(L, k)
    pairs, interiors = exact_local_purities(rho, part)
    r2 = stitched_purity(pairs, interiors)
    return abs(r2 / dense.purity(rho) - 1.0)


def verify_pt_factorization(
    rho: np.ndarray,
    A1: Interval | None,
    A2: Interval,
    B1: Interval,
    B2: Interval | None,
    n: int,
    depth: int | None = None,
    allow_below_threshold: bool = False,
) -> float:
    """Deviation ``|p~_n[AB] - s_n[A2 B1]|`` for ``A = A1 A2``, ``B = B1 B2``.

    ``A1`` and ``B2`` may be ``None`` (empty). When ``depth`` is given,
    ``|A2|, |B1| >= 2 depth - 1`` is enforced unless
    ``allow_below_threshold`` is set.
    """
    _threshold_check(min(A2.length, B1.length), depth, allow_below_threshold, "A2/B1")
    A = union(A1, A2) if A1 is not None else A2
    B = union(B1, B2) if B2 is not None else B1
    union(A, B).check_within(dense.n_qubits_of(rho))
    full = dense.normalized_pt_moment(rho, A, B, n, method="product")
    local = dense.normalized_pt_moment(rho, A2, B1, n, method="product")
    return abs(full - local)


def factorization_sweep(rho: np.ndarray, depth: int, ns=(2, 3)) -> list[dict]:
    """All exact-factorization checks a depth-``depth`` state must pass.

    Three families are run, each only where the separating region has at
    least ``2 depth - 1`` qubits:

    - ``purity``: ``A | B | C`` with ``A`` and ``C`` splitting the rest as
      evenly as possible, for every admissible ``|B|``;
    - ``chain``: the stitched purity for every ``k`` dividing ``L``, with
      ``k < L``;
    - ``pt``: the half-chain bipartition with ``|A2| = |B1| = k`` and
      non-empty ``A1``, for each ``n`` in ``ns``.

    Returns
    -------
    list of dict
        Entries ``{"check", "size", "n", "deviation"}``.
    """
    L = dense.n_qubits_of(rho)
    t = 2 * depth - 1
    out = []
    for b in range(t, L - 1):
        a = (L - b) // 2
        A, B, C = Interval(0, a), Interval(a, b), Interval(a + b, L - a - b)
        dev = verify_purity_factorization(rho, A, B, C, depth)
        out.append({"check": "purity", "size": b, "n": 2, "deviation": dev})
    for k in range(t, L):
        if L % k == 0 and L // k >= 3:
            out.append({"check": "chain", "size": k, "n": 2, "deviation": verify_chain_factorization(rho, k, depth)})
    half = L // 2
    for k in range(t, half):
        A1, A2 = Interval(0, half - k), Interval(half - k, k)
        B1 = Interval(half, k)
        B2 = Interval(half + k, L - half - k) if half + k < L else None
        for n in ns:
            dev = verify_pt_factorization(rho, A1, A2, B1, B2, n, depth)
            out.append({"check": "pt", "size": k, "n": n, "deviation": dev})
    return out


# --- depolarized-input thresholds ----------------------------------------


def light_cone_core(circuit: BrickworkCircuit, cut: int) -> tuple[BrickworkCircuit, Interval | None]:
    """Gates that can change spectra across the cut ``[0, cut) | [cut, L)``.

    A gate lying entirely on one side of the cut, with no later gate on its
    qubits, is a local unitary on the output and leaves every spectrum
    involving ``A``, ``B`` or ``A u B`` unchanged. Such gates are removed
    repeatedly; the rest are returned on the smallest interval containing
    them, re-indexed from 0.

    Returns
    -------
    core : BrickworkCircuit
        Remaining gates, shifted to the core interval.
    interval : Interval or None
        Location of the core in the chain; ``None`` when nothing remains.
    """
    gates = [(i, j, g) for i, j, g in circuit.gates()]
    alive = [True] * len(gates)
    changed = True
    while changed:
        changed = False
        for idx in range(len(gates) - 1, -1, -1):
            if not alive[idx]:
                continue
            i, j, _ = gates[idx]
            if j < cut <= j + 1:
                continue
            later = any(
                alive[o] and gates[o][0] > i and abs(gates[o][1] - j) <= 1
                for o in range(len(gates))
            )
            if not later:
                alive[idx] = False
                changed = True
    kept = [gates[idx] for idx in range(len(gates)) if alive[idx]]
    if not kept:
        return BrickworkCircuit(0 if circuit.n_qubits < 2 else 2, []), None
    lo = min(j for _, j, _ in kept)
    hi = max(j for _, j, _ in kept) + 2
    depth = circuit.depth
    layers = [[] for _ in range(depth)]
    for i, j, g in kept:
        layers[i].append((j - lo, g))
    while layers and not layers[-1]:
        layers.pop()
    return BrickworkCircuit(hi - lo, layers), Interval(lo, hi - lo)


@dataclass
class GammaThresholdReport:
    """Extrema of the core PPT combinations over a ``gamma`` grid.

    ``gamma3``/``gamma5`` and ``C3``/``C5`` are ``None`` when the matching
    ``K`` is not negative (thresholds undefined).
    """

    K3: float
    K5: float
    H3: float
    H5: float
    gamma3: float | None
    gamma5: float | None
    C3: float | None
    C5: float | None
    grid: np.ndarray
    core: Interval | None
    n_free: int
    combos: dict

    @property
    def thresholds_defined(self) -> bool:
        return self.gamma3 is not None and self.gamma5 is not None

    def to_dict(self) -> dict:
        return {
            "K3": self.K3,
            "K5": self.K5,
            "H3": self.H3,
            "H5": self.H5,
            "gamma3": self.gamma3,
            "gamma5": self.gamma5,
            "C3": self.C3,
            "C5": self.C5,
            "thresholds_defined": self.thresholds_defined,
            "grid": [float(g) for g in self.grid],
            "core": None if self.core is None else self.core.to_dict(),
            "n_free": self.n_free,
        }


def core_quantities(circuit: BrickworkCircuit, bases, gamma: float, cut: int | None = None) -> dict:
    """``s~_n``, ``t~_3``, ``t~_5`` of the light-cone core at one ``gamma``.

    With ``m`` free qubits outside the core and
    ``g_n = gamma**n + (1 - gamma)**n``, the full-state probes are
    ``f3 = s~3 - s~2**2 t~3 g2**(2m) / g3**m`` and
    ``f5 = s~5 s~3 - s~4**2 t~5 g4**(2m) / (g3**m g5**m)``.
    """
    L = circuit.n_qubits
    cut = L // 2 if cut is None else cut
    core, where = light_cone_core(circuit, cut)
    bases = np.asarray(bases)
    if where is None:
        s = {n: 1.0 for n in range(1, 6)}
        t3 = t5 = 1.0
        m = L
    else:
        inp = ProductInput.depolarized(gamma, bases[where.start : where.stop])
        rho = apply_circuit(core, inp)
        A = Interval(0, cut - where.start)
        B = Interval(A.stop, where.length - A.length)
        pr = dense.ppt_probes(rho, A, B)
        p, PA, PB = pr["p"], pr["P_A"], pr["P_B"]
        s = {n: p[n] / (PA[n] * PB[n]) for n in range(1, 6)}
        t3 = PA[2] ** 2 * PB[2] ** 2 / (PA[3] * PB[3])
        t5 = PA[4] ** 2 * PB[4] ** 2 / (PA[3] * PB[3] * PA[5] * PB[5])
        m = L - where.length
    return {"s": s, "t3": t3, "t5": t5, "n_free": m, "core": where}


def gamma_threshold_sweep(
    circuit: BrickworkCircuit,
    bases=None,
    gamma_grid=None,
    cut: int | None = None,
) -> GammaThresholdReport:
    """K, H and threshold values for depolarized inputs on a fixed circuit.

    Parameters
    ----------
    circuit : BrickworkCircuit
    bases : array_like, shape (L, 2, 2), optional
        Per-site ``(|a_j>, |b_j>)`` columns; computational basis by default.
    gamma_grid : array_like, optional
        Grid on ``[0, 1/4]``; 64 uniform points by default.
    cut : int, optional
        Size of ``A``; half chain by default.
    """
    L = circuit.n_qubits
    if bases is None:
        bases = np.broadcast_to(np.eye(2), (L, 2, 2))
    grid = DEFAULT_GAMMA_GRID if gamma_grid is None else np.asarray(gamma_grid, dtype=float)
    if grid.size == 0:
        raise PreconditionError("gamma grid is empty")
    if grid.min() < 0 or grid.max() > 0.25:
        raise PreconditionError("gamma grid must lie in [0, 1/4]")
    combo3, combo5, mag3, mag5 = [], [], [], []
    where, m = None, L
    for gamma in grid:
        q = core_quantities(circuit, bases, float(gamma), cut)
        s = q["s"]
        combo3.append(s[3] - s[2] ** 2 * q["t3"])
        combo5.append(s[5] * s[3] - s[4] ** 2 * q["t5"])
        mag3.append(abs(s[2] ** 2 * q["t3"]))
        mag5.append(abs(s[4] ** 2 * q["t5"]))
        where, m = q["core"], q["n_free"]
    K3, K5 = float(max(combo3)), float(max(combo5))
    H3, H5 = float(max(mag3)), float(max(mag5))
    gamma3 = -K3 / (4 * H3) if K3 < 0 else None
    gamma5 = (-K5 / (8 * H5)) ** (1.0 / 3.0) if K5 < 0 else None
    return GammaThresholdReport(
        K3=K3,
        K5=K5,
        H3=H3,
        H5=H5,
        gamma3=gamma3,
        gamma5=gamma5,
        C3=abs(K3) / 2 if K3 < 0 else None,
        C5=abs(K5) / 2 if K5 < 0 else None,
        grid=grid,
        core=where,
        n_free=m,
        combos={"f3": np.array(combo3), "f5": np.array(combo5)},
    )
