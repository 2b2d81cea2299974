"""Numerical studies of approximate factorization in thermal and circuit states.

The stitching relative error ``eps_r(k) = |r2(k) / P2 - 1|`` compares the
stitched purity from intervals of ``k`` sites with the global purity. The
additive error ``eps_a(k) = |p~3[AB] - s3[A2 B1]|`` compares the normalized
half-chain PT moment with its local ratio on the ``2k`` sites around the
cut. Both are computed from exact local moments, on a dense density matrix
(``L <= 12``) or on a thermal MPO.

Values below :data:`FLOOR` are flagged as limited by floating-point
precision. MPO results are only emitted once two successive bond dimensions
agree to :data:`CHI_TOL`.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import dense
from .circuits import ProductInput, apply_circuit, sample_random_circuit
from .errors import ConvergenceError, PreconditionError, UnreliableEstimateError
from .rand import derive_int
from .regions import Interval
from .shadows import MeasurementBatch, estimate_purity, hamming_purity, simulate_batch
from .stitch import afc_required_k, make_partition, stitched_purity

MODELS = ("ising", "xxz", "fdqc", "mpdo")
BACKENDS = ("dense", "mpo", "transfer")
FLOOR = 1e-12
CHI_TOL = 1e-8
DEFAULT_CHIS = (16, 32, 64)
DEFAULT_C3 = 0.01
DEFAULT_C5 = 0.001
CSV_COLUMNS = (
    "model",
    "hx",
    "hz",
    "delta_aniso",
    "beta",
    "L",
    "k",
    "chi",
    "epsilon_r",
    "epsilon_a",
    "f3",
    "f5",
    "floor_flag",
)


@dataclass(frozen=True)
class ScanRecord:
    """One point of a relative-error, additive-error or PPT scan.

    ``exact`` is set for the dense and transfer-matrix backends, whose
    values carry no truncation error.
    """

    model: str
    L: int
    k: int | None = None
    beta: float | None = None
    hx: float | None = None
    hz: float | None = None
    delta_aniso: float | None = None
    epsilon_r: float | None = None
    epsilon_a: float | None = None
    f3: float | None = None
    f5: float | None = None
    detect3: bool | None = None
    detect5: bool | None = None
    chi: int | None = None
    backend: str = "dense"
    exact: bool = True
    floor_flag: bool = False

    def __post_init__(self):
        for name in ("epsilon_r", "epsilon_a"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise PreconditionError(f"{name} must be >= 0, got {v}")
        if self.backend not in BACKENDS:
            raise PreconditionError(f"unknown backend {self.backend!r}")

    @property
    def key(self) -> tuple:
        return (self.model, self.hx, self.hz, self.delta_aniso, self.L, self.k, self.beta)

    def to_row(self) -> dict:
        d = asdict(self)
        return {c: ("" if d[c] is None else d[c]) for c in CSV_COLUMNS}


def _floor_flag(*vals) -> bool:
    return any(v is not None and v < FLOOR for v in vals)


def merge_records(*groups) -> list[ScanRecord]:
    """Concatenate record lists in a canonical order.

    The result does not depend on the order in which groups are passed.
    """
    recs = [r for g in groups for r in g]

    def order(r):
        return tuple((v is None, 0.0 if v is None else v) for v in r.key[1:]) + (r.model,)

    return sorted(recs, key=order)


def write_scan_csv(records, path, header_lines=()) -> Path:
    """Write records with the standard columns.

    ``header_lines`` are written first, each prefixed with ``# ``.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in records:
            row = r.to_row()
            w.writerow({c: (repr(v) if isinstance(v, float) else v) for c, v in row.items()})
    return path


def read_scan_csv(path) -> list[dict]:
    """Rows of a scan CSV as dicts of strings, skipping ``#`` lines."""
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# --- moment sources -------------------------------------------------------


class _DenseSource:
    """Exact moments of a dense density matrix."""

    backend = "dense"

    def __init__(self, rho: np.ndarray, global_moments: dict | None = None):
        self.rho = np.asarray(rho)
        self.L = dense.n_qubits_of(self.rho)
        self._global = dict(global_moments or {})

    def moment(self, I: Interval, n: int) -> float:
        if I.length == self.L and n in self._global:
            return self._global[n]
        r = dense.partial_trace(self.rho, I) if I.length < self.L else self.rho
        if n == 2:
            return dense.purity(r)
        return dense.renyi_moment(r, n, check=False)

    def pt_ratio(self, X: Interval, Y: Interval, n: int) -> float:
        return dense.normalized_pt_moment(self.rho, X, Y, n, method="product")

    def probes(self, A: Interval, B: Interval) -> dict:
        return dense.ppt_probes(self.rho, A, B)


class _MPOSource:
    """Moments of a normalized MPO by replica contraction."""

    backend = "mpo"

    def __init__(self, mpo):
        self.mpo = mpo
        self.L = mpo.L

    def moment(self, I: Interval, n: int) -> float:
        from .tn.mpo import mpo_trace_power

        return mpo_trace_power(self.mpo, I, n)

    def pt_ratio(self, X: Interval, Y: Interval, n: int) -> float:
        from .tn.mpo import mpo_pt_moment

        return mpo_pt_moment(self.mpo, X, Y, n) / (self.moment(X, n) * self.moment(Y, n))

    def probes(self, A: Interval, B: Interval) -> dict:
        from .tn.mpo import mpo_pt_moment

        ns = range(1, 6)
        p = {n: mpo_pt_moment(self.mpo, A, B, n) for n in ns}
        PA = {n: self.moment(A, n) for n in ns}
        PB = {n: self.moment(B, n) for n in ns}
        return {"f3": dense._f3_from(p, PA, PB), "f5": dense._f5_from(p, PA, PB), "p": p, "P_A": PA, "P_B": PB}


def _as_source(state):
    if isinstance(state, (_DenseSource, _MPOSource)):
        return state
    from .tn.mpo import MPO

    if isinstance(state, MPO):
        return _MPOSource(state)
    return _DenseSource(state)


# --- single-state errors --------------------------------------------------


def stitched_r2(state, k: int, n: int = 2) -> float:
    """Stitched ``Tr rho**n`` of the whole chain from exact local moments.

    ``state`` is a dense density matrix or an MPO. When ``k`` does not
    divide ``L`` the last interval is shorter.
    """
    src = _as_source(state)
    part = make_partition(src.L, k, ragged=True)
    nums = [src.moment(I, n) for I in part.numerator_regions]
    dens = [src.moment(I, n) for I in part.interiors]
    return stitched_purity(nums, dens)


def relative_error(state, k: int) -> float:
    """``|r2(k) / P2 - 1|`` for the whole chain."""
    src = _as_source(state)
    P2 = src.moment(Interval(0, src.L), 2)
    return abs(stitched_r2(src, k) / P2 - 1.0)


def _half_chain(L: int) -> tuple[Interval, Interval]:
    if L < 2:
        raise PreconditionError(f"need L >= 2 for a bipartition, got {L}")
    half = L // 2
    return Interval(0, half), Interval(half, L - half)


def additive_error(state, k: int, n: int = 3, reference: float | None = None) -> float:
    """``|p~n[AB] - sn[A2 B1]|`` on the half-chain bipartition.

    ``A2`` and ``B1`` are the ``k`` sites on either side of the cut.
    ``reference`` may carry a precomputed ``p~n[AB]``.

    Raises
    ------
    PreconditionError
        If ``2k > L/2``.
    """
    src = _as_source(state)
    L = src.L
    if k < 1 or 2 * k > L / 2:
        raise PreconditionError(f"partition infeasible: need 1 <= k and 2k <= L/2, got k={k}, L={L}")
    A, B = _half_chain(L)
    if reference is None:
        reference = src.pt_ratio(A, B, n)
    A2 = Interval(A.stop - k, k)
    B1 = Interval(B.start, k)
    return abs(reference - src.pt_ratio(A2, B1, n))


# --- state construction ---------------------------------------------------


def _model_fields(model: str, params: dict) -> dict:
    if model == "ising":
        return {"hx": float(params.get("h_x", 1.1)), "hz": float(params.get("h_z", -0.04))}
    if model == "xxz":
        return {"delta_aniso": float(params.get("delta_aniso", 2.0))}
    return {}


def _check_model(model: str, backend: str):
    if model not in MODELS:
        raise PreconditionError(f"unknown model {model!r}; expected one of {MODELS}")
    if backend not in ("dense", "mpo"):
        raise PreconditionError(f"backend must be 'dense' or 'mpo', got {backend!r}")
    if backend == "mpo" and model not in ("ising", "xxz"):
        raise PreconditionError(f"the mpo backend supports thermal models only, not {model!r}")


@lru_cache(maxsize=4)
def _gibbs_family(model: str, L: int, h_x: float, h_z: float, delta_aniso: float, edge_field: bool) -> dense.GibbsFamily:
    H = dense.build_hamiltonian(model, L, h_x=h_x, h_z=h_z, delta_aniso=delta_aniso, edge_field=edge_field)
    return dense.GibbsFamily.from_hamiltonian(H)


def _thermal_family(model: str, params: dict, L: int) -> dense.GibbsFamily:
    return _gibbs_family(
        model,
        int(L),
        float(params.get("h_x", 1.1)),
        float(params.get("h_z", -0.04)),
        float(params.get("delta_aniso", 2.0)),
        bool(params.get("edge_field", True)),
    )


def fdqc_state(L: int, params: dict) -> np.ndarray:
    """Dense FDQC state from ``params`` keys ``ell``, ``seed`` and ``gamma``.

    With ``gamma`` given the inputs are depolarized computational states,
    otherwise random mixed product states.
    """
    ell = int(params.get("ell", 2))
    seed = int(params.get("seed", 0))
    circuit = sample_random_circuit(L, ell, derive_int(seed, 0))
    if params.get("gamma") is not None:
        inp = ProductInput.computational(L, float(params["gamma"]))
    else:
        inp = ProductInput.random(L, derive_int(seed, 1))
    return apply_circuit(circuit, inp)


def _dense_source(model: str, params: dict, L: int, beta) -> _DenseSource:
    if L > dense.MAX_DENSE_QUBITS - 2:
        raise PreconditionError(f"dense scans are limited to L <= {dense.MAX_DENSE_QUBITS - 2}, got {L}")
    if model == "fdqc":
        return _DenseSource(fdqc_state(L, params))
    fam = _thermal_family(model, params, L)
    return _DenseSource(fam.state(float(beta)), {2: fam.moment(float(beta), 2)})


def _converged(model: str, params: dict, L: int, beta: float, chis, evaluate):
    """Evaluate on thermal MPOs of growing bond cap until two agree."""
    from .tn.mpo import TROTTER_STEP, thermal_mpo

    fields = _model_fields(model, params)
    dt = float(params.get("trotter_step", TROTTER_STEP))
    prev = None
    for chi in chis:
        try:
            mpo = thermal_mpo(
                model,
                L,
                float(beta),
                h_x=fields.get("hx", 1.1),
                h_z=fields.get("hz", -0.04),
                delta_aniso=fields.get("delta_aniso", 2.0),
                edge_field=bool(params.get("edge_field", True)),
                max_chi=int(chi),
                trotter_step=dt,
            )
        except ConvergenceError:
            prev = None
            continue
        vals = np.asarray(evaluate(_MPOSource(mpo)), dtype=float)
        if prev is not None and np.max(np.abs(vals - prev)) <= CHI_TOL:
            return vals, mpo.chi_used
        prev = vals
    raise ConvergenceError(f"no two successive bond caps in {tuple(chis)} agree to {CHI_TOL:g}")


# --- scans ----------------------------------------------------------------


def relative_error_scan(
    model: str,
    params: dict,
    L: int,
    beta: float | None,
    k_list,
    backend: str = "dense",
    chis=DEFAULT_CHIS,
) -> list[ScanRecord]:
    """``eps_r(k)`` for every ``k`` in ``k_list``.

    Parameters
    ----------
    model : {"ising", "xxz", "fdqc", "mpdo"}
    params : dict
        ``h_x``, ``h_z`` (ising); ``delta_aniso`` (xxz); ``ell``, ``seed``,
        ``gamma`` (fdqc); ``chi``, ``seed`` or ``site_tensor`` (mpdo); an
        optional ``trotter_step`` for the mpo backend. Ising accepts
        ``edge_field=False`` to drop the field on the last site.
    L : int
    beta : float or None
        Ignored for fdqc and mpdo.
    k_list : iterable of int
    backend : {"dense", "mpo"}
        The mpdo model always uses its transfer matrices on a periodic
        chain, and needs ``k`` dividing ``L``.
    chis : sequence of int
        Bond caps tried in order by the mpo backend.

    Raises
    ------
    ConvergenceError
        If no two successive bond caps agree.
    """
    _check_model(model, backend)
    ks = [int(k) for k in k_list]
    fields = _model_fields(model, params)
    beta_f = None if model in ("fdqc", "mpdo") else float(beta)
    chi = None
    if model == "mpdo":
        from .tn.mpdo import periodic_purity, periodic_r2, random_mpdo_tensor

        w = params.get("site_tensor")
        if w is None:
            w = random_mpdo_tensor(int(params.get("chi", 2)), int(params.get("seed", 0)))
        P2 = periodic_purity(w, L)
        eps = [abs(periodic_r2(w, L, k) / P2 - 1.0) for k in ks]
        backend, chi = "transfer", int(np.asarray(w).shape[0])
    elif backend == "dense":
        src = _dense_source(model, params, L, beta_f)
        eps = [relative_error(src, k) for k in ks]
    else:
        eps, chi = _converged(model, params, L, beta_f, chis, lambda s: [relative_error(s, k) for k in ks])
    return [
        ScanRecord(
            model=model,
            L=int(L),
            k=k,
            beta=beta_f,
            epsilon_r=float(e),
            chi=chi,
            backend=backend,
            exact=backend != "mpo",
            floor_flag=_floor_flag(e),
            **fields,
        )
        for k, e in zip(ks, eps)
    ]


def additive_error_scan(
    model: str,
    params: dict,
    L: int,
    beta: float | None,
    k_list,
    n: int = 3,
    backend: str = "dense",
    chis=DEFAULT_CHIS,
) -> list[ScanRecord]:
    """``eps_a(k)`` on the half-chain bipartition for every ``k``.

    Raises
    ------
    PreconditionError
        If ``2k > L/2`` for some ``k``, or for the mpdo model.
    ConvergenceError
        If no two successive bond caps agree.
    """
    _check_model(model, backend)
    if model == "mpdo":
        raise PreconditionError("additive errors are not available for the periodic mpdo model")
    ks = [int(k) for k in k_list]
    for k in ks:
        if k < 1 or 2 * k > L / 2:
            raise PreconditionError(f"partition infeasible: need 1 <= k and 2k <= L/2, got k={k}, L={L}")
    fields = _model_fields(model, params)
    beta_f = None if model == "fdqc" else float(beta)
    A, B = _half_chain(L)

    def evaluate(src):
        ref = src.pt_ratio(A, B, n)
        return [additive_error(src, k, n, reference=ref) for k in ks]

    chi = None
    if backend == "dense":
        eps = evaluate(_dense_source(model, params, L, beta_f))
    else:
        eps, chi = _converged(model, params, L, beta_f, chis, evaluate)
    return [
        ScanRecord(
            model=model,
            L=int(L),
            k=k,
            beta=beta_f,
            epsilon_a=float(e),
            chi=chi,
            backend=backend,
            exact=backend == "dense",
            floor_flag=_floor_flag(e),
            **fields,
        )
        for k, e in zip(ks, eps)
    ]


def k_star(scan, delta: float) -> int | None:
    """Smallest ``k`` with ``eps_r < delta`` among records with ``k <= L/2``."""
    ok = [r.k for r in scan if r.epsilon_r is not None and r.k <= r.L / 2 and r.epsilon_r < delta]
    return min(ok) if ok else None


def k_star_curve(model: str, params: dict, L_list, beta: float, delta: float, backend: str = "dense") -> dict:
    """``{L: k*(delta, L)}`` scanning ``k = 1 .. L/2``."""
    return {
        int(L): k_star(relative_error_scan(model, params, L, beta, range(1, L // 2 + 1), backend), delta)
        for L in L_list
    }


def decay_fit(records, field_name: str = "epsilon_r") -> tuple[float, float]:
    """Least-squares fit ``log eps = log alpha - k / xi`` over non-floor records.

    Returns
    -------
    (alpha, xi) : tuple of float
    """
    pts = [(r.k, getattr(r, field_name)) for r in records]
    pts = [(k, e) for k, e in pts if e is not None and e >= FLOOR]
    if len(pts) < 2:
        raise PreconditionError("need at least two records above the floor for a fit")
    k, e = np.array(pts, dtype=float).T
    slope, intercept = np.polyfit(k, np.log(e), 1)
    if slope >= 0:
        raise PreconditionError("errors do not decay with k")
    return float(math.exp(intercept)), float(-1.0 / slope)


def ppt_phase_scan(
    model: str,
    params: dict,
    beta_list,
    L_list,
    C3: float = DEFAULT_C3,
    C5: float = DEFAULT_C5,
    backend: str = "dense",
    chis=DEFAULT_CHIS,
) -> list[ScanRecord]:
    """``f3``, ``f5`` and their detection flags on the half-chain bipartition.

    ``detectN`` is ``fN <= -CN``. One record per ``(L, beta)``.
    """
    _check_model(model, backend)
    if model in ("fdqc", "mpdo"):
        raise PreconditionError(f"phase scans need a thermal model, got {model!r}")
    fields = _model_fields(model, params)
    out = []
    for L in L_list:
        A, B = _half_chain(int(L))
        for beta in beta_list:
            chi = None
            if backend == "dense":
                pr = _dense_source(model, params, int(L), float(beta)).probes(A, B)
                f3, f5 = pr["f3"], pr["f5"]
            else:
                (f3, f5), chi = _converged(
                    model, params, int(L), float(beta), chis, lambda s: [s.probes(A, B)[x] for x in ("f3", "f5")]
                )
            out.append(
                ScanRecord(
                    model=model,
                    L=int(L),
                    beta=float(beta),
                    f3=float(f3),
                    f5=float(f5),
                    detect3=bool(f3 <= -C3),
                    detect5=bool(f5 <= -C5),
                    chi=chi,
                    backend=backend,
                    exact=backend == "dense",
                    **fields,
                )
            )
    return out


def detection_beta(records, which: str = "detect3") -> dict:
    """``{L: smallest beta with detection}``, ``None`` when never detected.

    The detection temperature is ``1 / beta`` of this value.
    """
    out = {}
    for r in records:
        out.setdefault(r.L, None)
        if getattr(r, which) and (out[r.L] is None or r.beta < out[r.L]):
            out[r.L] = r.beta
    return dict(sorted(out.items()))


# --- consistency check ----------------------------------------------------


@dataclass
class RedFlagReport:
    """Stitched purities at the ``k`` implied by successive AFC ansatz pairs.

    ``flags[i]`` compares estimate ``i + 1`` with estimate ``i``; a flag is
    raised when their ratio differs from 1 by more than ``2 delta``.
    """

    ks: list
    estimates: list
    rel_diffs: list
    flags: list
    delta: float
    estimator: str

    @property
    def flagged(self) -> bool:
        return any(self.flags)

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "estimates": list(self.estimates),
            "rel_diffs": list(self.rel_diffs),
            "flags": list(self.flags),
            "flagged": self.flagged,
            "delta": self.delta,
            "estimator": self.estimator,
        }


def afc_red_flag_check(
    state,
    alpha2_list,
    xi2_list,
    delta: float,
    M: int | None = None,
    seed: int = 0,
) -> RedFlagReport:
    """Repeat purity estimation under increasingly pessimistic AFC ansätze.

    Parameters
    ----------
    state : ndarray
        Dense density matrix of the chain.
    alpha2_list, xi2_list : sequence of float
        Paired ansatz parameters; each pair fixes ``k`` through
        :func:`afc_required_k`, capped at ``L``.
    delta : float
        Target relative precision of each estimate.
    M : int, optional
        Shadow rounds per region. Exact local purities are used when
        omitted, which isolates the factorization error.
    seed : int
        Master seed for the shadow simulation.
    """
    if len(alpha2_list) != len(xi2_list):
        raise PreconditionError("alpha2_list and xi2_list must have equal length")
    src = _as_source(state)
    L = src.L
    ks, ests = [], []
    for i, (a, x) in enumerate(zip(alpha2_list, xi2_list)):
        k = min(afc_required_k(a, x, L, delta), L)
        part = make_partition(L, k, ragged=True)
        if M is None:
            nums = [src.moment(I, 2) for I in part.numerator_regions]
            dens = [src.moment(I, 2) for I in part.interiors]
        else:
            vals = [
                estimate_purity(simulate_batch(src.rho, I, M=M, seed=derive_int(seed, i, j)), I)
                for j, I in enumerate(part.regions)
            ]
            n_num = len(part.numerator_regions)
            nums, dens = vals[:n_num], vals[n_num:]
        try:
            est = stitched_purity(nums, dens)
        except UnreliableEstimateError:
            est = float("nan")
        ks.append(k)
        ests.append(est)
    diffs, flags = [], []
    for prev, cur in zip(ests, ests[1:]):
        d = abs(cur / prev - 1.0) if prev and np.isfinite(prev) and np.isfinite(cur) else float("inf")
        diffs.append(d)
        flags.append(bool(d > 2 * delta))
    return RedFlagReport(ks, ests, diffs, flags, float(delta), "exact" if M is None else "shadow")


def ghz_mixture(L: int, p: float) -> np.ndarray:
    """``p |GHZ><GHZ| + (1 - p) I / 2**L``, a state with long-range coherence."""
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"p must lie in [0, 1], got {p}")
    d = 2**L
    psi = np.zeros(d)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return p * np.outer(psi, psi) + (1 - p) * np.eye(d) / d


# --- random-MPS protocol simulation ---------------------------------------


@dataclass
class MPSDemoResult:
    """Half-chain purity of one random MPS estimated at several shot counts.

    ``epsilon_s[i] = |r2_est[i] / r2 - 1|`` is the statistical error and
    ``epsilon[i] = |r2_est[i] / P2 - 1|`` the full error.
    """

    L: int
    chi: int
    k: int
    n_M: int
    n_U: list
    seed: int
    P2: float
    r2: float
    r2_est: list
    epsilon_s: list = field(default_factory=list)
    epsilon: list = field(default_factory=list)
    negative_factors: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _prefix(batch: MeasurementBatch, n_U: int) -> MeasurementBatch:
    return MeasurementBatch(batch.region, batch.unitaries[:n_U], batch.outcomes[:n_U], batch.scheme, batch.seed)


def mps_demo_instance(L: int, chi: int, k: int, n_U_list, n_M: int, seed: int) -> MPSDemoResult:
    """Stitched half-chain purity of a random MPS from Hamming estimates.

    One reuse-scheme batch with ``max(n_U_list)`` unitaries and ``n_M``
    shots each is sampled on the half chain. Smaller budgets use the first
    ``n_U`` unitaries of the same batch.
    """
    from .tn.mpo import mps_to_mpo, mpo_trace_power
    from .tn.mps import random_mps

    if L % 2 or k > L // 2:
        raise PreconditionError(f"need even L and k <= L/2, got L={L}, k={k}")
    n_U_list = sorted(int(n) for n in n_U_list)
    mps = random_mps(L, chi, derive_int(seed, 0))
    half = Interval(0, L // 2)
    part = make_partition(half.length, k, ragged=True)
    mpo = mps_to_mpo(mps)
    P2 = mpo_trace_power(mpo, half, 2)
    r2 = stitched_purity(
        [mpo_trace_power(mpo, I, 2) for I in part.numerator_regions],
        [mpo_trace_power(mpo, I, 2) for I in part.interiors],
    )
    batch = simulate_batch(mps, half, scheme="reuse", n_U=n_U_list[-1], n_M=n_M, seed=derive_int(seed, 1))
    ests, negative = [], False
    for n_U in n_U_list:
        b = _prefix(batch, n_U)
        nums = [hamming_purity(b, I) for I in part.numerator_regions]
        dens = [hamming_purity(b, I) for I in part.interiors]
        negative |= any(v < 0 for v in nums + dens)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            ests.append(stitched_purity(nums, dens, use_abs=True))
    return MPSDemoResult(
        L=L,
        chi=chi,
        k=k,
        n_M=n_M,
        n_U=n_U_list,
        seed=int(seed),
        P2=float(P2),
        r2=float(r2),
        r2_est=[float(e) for e in ests],
        epsilon_s=[abs(e / r2 - 1.0) for e in ests],
        epsilon=[abs(e / P2 - 1.0) for e in ests],
        negative_factors=bool(negative),
    )


def mps_demo(L: int, chi: int, k: int, n_U_list, n_M: int, instances: int, seed: int) -> list[MPSDemoResult]:
    """:func:`mps_demo_instance` over ``instances`` independent random MPSs."""
    return [mps_demo_instance(L, chi, k, n_U_list, n_M, derive_int(seed, i)) for i in range(instances)]
