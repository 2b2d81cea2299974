"""Partitions, stitched global estimators and sample-complexity bounds.

A chain of ``L`` sites is cut into ``R = L / k`` adjacent intervals
``I_1 ... I_R``. The stitched purity is the product of purities of the
``R - 1`` overlapping pairs ``I_j u I_{j+1}`` divided by the purities of
the interior intervals ``I_2 ... I_{R-1}``. The same product applied to
``Tr rho**n`` gives the moment analog used for ``f3``/``f5``.

Bound calculators return Python integers computed in exact rational
arithmetic (``fractions.Fraction`` on the decimal repr of float inputs),
so values far above ``2**53`` are exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import dense
from .errors import InvalidRegionError, PreconditionError, UnreliableEstimateError
from .rand import derive_int
from .regions import Interval, union

__all__ = [
    "IntervalPartition",
    "StitchPlan",
    "BoundInputs",
    "PPTBundle",
    "make_partition",
    "exact_local_purities",
    "exact_local_moments",
    "stitched_purity",
    "stitched_log_purity",
    "stitched_renyi2",
    "stitched_pt",
    "stitched_f3",
    "stitched_f5",
    "required_M_purity_fdqc",
    "failure_probability_purity_fdqc",
    "confidence_M_purity_fdqc",
    "required_M_pt3_fdqc",
    "failure_probability_pt3_fdqc",
    "afc_required_k",
    "afc_min_M",
    "afc_failure_probability",
    "afc_required_M",
    "afc_global_error_bound",
]


@dataclass(frozen=True)
class IntervalPartition:
    """Adjacent intervals covering ``[offset, offset + L)``.

    All intervals have length ``k`` except, for a ragged partition, the
    last one, which holds the remaining ``L mod k`` sites.
    """

    L: int
    k: int
    intervals: tuple

    @property
    def R(self) -> int:
        return len(self.intervals)

    @property
    def pairs(self) -> list[Interval]:
        iv = self.intervals
        return [union(iv[j], iv[j + 1]) for j in range(len(iv) - 1)]

    @property
    def interiors(self) -> list[Interval]:
        return list(self.intervals[1:-1])

    @property
    def numerator_regions(self) -> list[Interval]:
        """Pairs, or the single interval itself when ``R == 1``."""
        return self.pairs if self.R > 1 else [self.intervals[0]]

    @property
    def regions(self) -> list[Interval]:
        """Every region measured by the stitched estimator, numerators first."""
        return self.numerator_regions + self.interiors

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "k": self.k,
            "intervals": [iv.to_dict() for iv in self.intervals],
        }

    @classmethod
    def from_dict(cls, d) -> "IntervalPartition":
        return cls(int(d["L"]), int(d["k"]), tuple(Interval.from_dict(x) for x in d["intervals"]))


def make_partition(L: int, k: int, offset: int = 0, ragged: bool = False) -> IntervalPartition:
    """Partition ``L`` sites (starting at ``offset``) into intervals of ``k`` sites.

    Parameters
    ----------
    L, k : int
        ``k`` must divide ``L`` unless ``ragged`` is set.
    offset : int
        Index of the first site.
    ragged : bool
        Allow a shorter final interval.
    """
    if k < 1 or L < 1:
        raise PreconditionError(f"need L >= 1 and k >= 1, got L={L}, k={k}")
    if k > L:
        raise PreconditionError(f"k={k} exceeds L={L}")
    if L % k and not ragged:
        raise PreconditionError(f"k={k} does not divide L={L}")
    starts = list(range(0, L, k))
    intervals = tuple(Interval(offset + s, min(k, L - s)) for s in starts)
    return IntervalPartition(L, k, intervals)


def exact_local_moments(rho: np.ndarray, part: IntervalPartition, n: int = 2):
    """Exact ``Tr rho_I**n`` on the numerator and interior regions."""
    if n == 2:
        fn = dense.purity
    else:
        def fn(r):
            return dense.renyi_moment(r, n, check=False)
    nums = [fn(dense.partial_trace(rho, I)) for I in part.numerator_regions]
    dens = [fn(dense.partial_trace(rho, I)) for I in part.interiors]
    return nums, dens


def exact_local_purities(rho: np.ndarray, part: IntervalPartition):
    """Exact pair and interior purities of ``rho`` for ``part``."""
    return exact_local_moments(rho, part, 2)


def stitched_log_purity(pair_estimates, interior_estimates, use_abs: bool = False) -> float:
    """Logarithm of the stitched product, accumulated term by term.

    Raises
    ------
    UnreliableEstimateError
        On a zero factor, or a negative factor unless ``use_abs`` is set
        (in which case a warning is emitted and magnitudes are used).
    """
    pairs = np.asarray(pair_estimates, dtype=float).ravel()
    inter = np.asarray(interior_estimates, dtype=float).ravel()
    if len(inter) != max(len(pairs) - 1, 0):
        raise PreconditionError(
            f"expected {max(len(pairs) - 1, 0)} interior values for {len(pairs)} pair values, got {len(inter)}"
        )
    if len(pairs) == 0:
        raise PreconditionError("at least one pair (or single-interval) value is required")
    vals = np.concatenate([pairs, inter])
    if np.any(vals == 0):
        raise UnreliableEstimateError("zero local estimate in the stitched product")
    if np.any(vals < 0):
        if not use_abs:
            raise UnreliableEstimateError(
                f"negative local estimate(s) {vals[vals < 0].tolist()} in the stitched product"
            )
        warnings.warn("negative local estimates replaced by their magnitude", RuntimeWarning, stacklevel=2)
    return float(np.sum(np.log(np.abs(pairs))) - np.sum(np.log(np.abs(inter))))


def stitched_purity(pair_estimates, interior_estimates, use_abs: bool = False) -> float:
    """``prod(pairs) / prod(interiors)`` for the intervals ``I_2 ... I_{R-1}``.

    A single pair value with no interiors stands for ``R == 1``, the
    purity of the one interval.
    """
    return math.exp(stitched_log_purity(pair_estimates, interior_estimates, use_abs))


def stitched_renyi2(pair_entropies, interior_entropies) -> float:
    """``sum S2(pairs) - sum S2(interiors)``."""
    pairs = np.asarray(pair_entropies, dtype=float).ravel()
    inter = np.asarray(interior_entropies, dtype=float).ravel()
    if len(inter) != max(len(pairs) - 1, 0):
        raise PreconditionError("interior entropies must number one less than pair entropies")
    return float(np.sum(pairs) - np.sum(inter))


def stitched_pt(p_n_estimate: float, moment_A2: float, moment_B1: float) -> float:
    """``p_n[A2 B1] / (P_n[A2] P_n[B1])``."""
    den = moment_A2 * moment_B1
    if den == 0:
        raise UnreliableEstimateError("zero local moment in the PT ratio")
    return p_n_estimate / den


@dataclass
class PPTBundle:
    """Inputs for stitched ``f3``/``f5``.

    Attributes
    ----------
    p : dict
        ``{n: p_n[A2 B1]}``.
    P_A2, P_B1 : dict
        ``{n: P_n[A2]}``, ``{n: P_n[B1]}``.
    P_A, P_B : dict
        ``{n: P_n[A]}``, ``{n: P_n[B]}`` for the full halves, typically
        stitched with :func:`stitched_purity` applied to ``n``-th moments.
    """

    p: dict
    P_A2: dict
    P_B1: dict
    P_A: dict
    P_B: dict

    def s(self, n: int) -> float:
        if n == 1 and 1 not in self.p:
            return 1.0
        return stitched_pt(self.p[n], self.P_A2[n], self.P_B1[n])

    def P(self, side: str, n: int) -> float:
        table = self.P_A if side == "A" else self.P_B
        if n == 1 and 1 not in table:
            return 1.0
        return table[n]


def stitched_f3(bundle: PPTBundle) -> float:
    """``f3`` with ``p~_n`` replaced by the local ratio ``s_n``."""
    b = bundle
    ratio = b.P("A", 2) ** 2 * b.P("B", 2) ** 2 / (b.P("A", 1) * b.P("B", 1) * b.P("A", 3) * b.P("B", 3))
    return b.s(3) * b.s(1) - b.s(2) ** 2 * ratio


def stitched_f5(bundle: PPTBundle) -> float:
    """``f5`` with ``p~_n`` replaced by the local ratio ``s_n``."""
    b = bundle
    ratio = b.P("A", 4) ** 2 * b.P("B", 4) ** 2 / (b.P("A", 3) * b.P("B", 3) * b.P("A", 5) * b.P("B", 5))
    return b.s(5) * b.s(3) - b.s(4) ** 2 * ratio


# --- plans -----------------------------------------------------------------


@dataclass
class StitchPlan:
    """Measurement budget and seeds for every region of a partition.

    Region ``i`` (in ``partition.regions`` order) gets ``M[i]`` rounds and
    the seed stream derived from ``(master_seed, i)``.
    """

    partition: IntervalPartition
    M: list
    master_seed: int
    seeds: list = field(default_factory=list)

    def __post_init__(self):
        regions = self.partition.regions
        if len(self.M) != len(regions):
            raise PreconditionError(f"need {len(regions)} budgets, got {len(self.M)}")
        if not self.seeds:
            self.seeds = [derive_int(self.master_seed, i) for i in range(len(regions))]
        if len(set(self.seeds)) != len(self.seeds):
            raise PreconditionError("region seeds must be distinct")

    @classmethod
    def uniform(cls, partition: IntervalPartition, M: int, master_seed: int) -> "StitchPlan":
        return cls(partition, [int(M)] * len(partition.regions), int(master_seed))

    @property
    def M_total(self) -> int:
        return int(sum(self.M))

    def to_dict(self) -> dict:
        return {
            "partition": self.partition.to_dict(),
            "regions": [r.to_dict() for r in self.partition.regions],
            "M": [int(m) for m in self.M],
            "M_total": self.M_total,
            "master_seed": int(self.master_seed),
            "seeds": [int(s) for s in self.seeds],
        }

    @classmethod
    def from_dict(cls, d) -> "StitchPlan":
        return cls(
            IntervalPartition.from_dict(d["partition"]),
            [int(m) for m in d["M"]],
            int(d["master_seed"]),
            [int(s) for s in d["seeds"]],
        )


@dataclass(frozen=True)
class BoundInputs:
    """Parameters shared by the bound calculators."""

    k: int
    L: int
    delta: float
    confidence: float | None = None
    alpha2: float | None = None
    xi2: float | None = None

    def __post_init__(self):
        _check_delta(self.delta)
        if self.confidence is not None:
            _check_confidence(self.confidence)

    @property
    def beta2(self) -> float | None:
        return None if self.xi2 is None else 1.0 / self.xi2


# --- bound calculators -----------------------------------------------------


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _check_delta(delta):
    if not delta > 0:
        raise PreconditionError(f"delta must be > 0, got {delta}")


def _check_confidence(gamma):
    if not 0 < gamma < 1:
        raise PreconditionError(f"confidence must lie in (0, 1), got {gamma}")


def _check_kL(k, L=None):
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if L is not None and L < 1:
        raise PreconditionError(f"L must be >= 1, got {L}")


def required_M_purity_fdqc(k: int, L: int, delta: float) -> int:
    """``ceil(max{2**(8k), L**2 2**(4k+10) / (k**2 delta**2)})``."""
    _check_kL(k, L)
    _check_delta(delta)
    d = _exact(delta)
    val = max(Fraction(2 ** (8 * k)), Fraction(L**2 * 2 ** (4 * k + 10)) / (k**2 * d**2))
    return _ceil(val)


def failure_probability_purity_fdqc(k: int, L: int, delta: float, M: int) -> float:
    """Upper bound ``2**(4k+11) L**3 / (delta**2 k**3 M)`` on the failure probability."""
    _check_kL(k, L)
    _check_delta(delta)
    d = _exact(delta)
    return float(Fraction(2 ** (4 * k + 11) * L**3) / (d**2 * k**3 * M))


def confidence_M_purity_fdqc(k: int, L: int, delta: float, confidence: float) -> int:
    """``ceil(2**(4k+11) L**3 / (delta**2 k**3 (1 - gamma)))``."""
    _check_kL(k, L)
    _check_delta(delta)
    _check_confidence(confidence)
    d, g = _exact(delta), _exact(confidence)
    return _ceil(Fraction(2 ** (4 * k + 11) * L**3) / (d**2 * k**3 * (1 - g)))


def required_M_pt3_fdqc(k: int, delta: float, confidence: float) -> int:
    """``ceil(max{27 2**(11k+9) / delta**2, 81 2**(11k+9) / ((1 - gamma) delta**2)})``."""
    _check_kL(k)
    _check_delta(delta)
    _check_confidence(confidence)
    d, g = _exact(delta), _exact(confidence)
    base = Fraction(2 ** (11 * k + 9)) / d**2
    return _ceil(max(27 * base, 81 * base / (1 - g)))


def failure_probability_pt3_fdqc(k: int, delta: float, M: int) -> float:
    """Upper bound ``81 2**(11k+9) / (M delta**2)``."""
    _check_kL(k)
    _check_delta(delta)
    return float(Fraction(81 * 2 ** (11 * k + 9)) / (M * _exact(delta) ** 2))


def _check_afc(alpha2, xi2, L, delta):
    if alpha2 <= 0 or xi2 <= 0:
        raise PreconditionError("alpha2 and xi2 must be positive")
    _check_kL(1, L)
    _check_delta(delta)


def afc_required_k(alpha2: float, xi2: float, L: int, delta: float) -> int:
    """``ceil(xi2 log(7 alpha2 L / delta))``, at least 1."""
    _check_afc(alpha2, xi2, L, delta)
    with mpmath.workdps(50):
        val = mpmath.mpf(xi2) * mpmath.log(7 * mpmath.mpf(alpha2) * L / mpmath.mpf(delta))
        return max(1, int(mpmath.ceil(val)))


def _afc_factor(alpha2, xi2, L, delta, power):
    return (7 * mpmath.mpf(alpha2) * L / mpmath.mpf(delta)) ** (power * mpmath.mpf(xi2) * mpmath.log(2))


def afc_min_M(alpha2: float, xi2: float, L: int, delta: float) -> int:
    """Validity threshold ``max{x**(8 xi2 log 2), 7**2 2**10 L**2 / delta**2 x**(4 xi2 log 2)}``
    with ``x = 7 alpha2 L / delta``."""
    _check_afc(alpha2, xi2, L, delta)
    with mpmath.workdps(50):
        a = _afc_factor(alpha2, xi2, L, delta, 8)
        b = 49 * 2**10 * mpmath.mpf(L) ** 2 / mpmath.mpf(delta) ** 2 * _afc_factor(alpha2, xi2, L, delta, 4)
        return int(mpmath.ceil(max(a, b)))


def afc_failure_probability(alpha2: float, xi2: float, L: int, delta: float, M: int) -> float:
    """``7**2 2**11 L**3 / (delta**2 M) x**(4 xi2 log 2)``."""
    _check_afc(alpha2, xi2, L, delta)
    with mpmath.workdps(50):
        val = 49 * 2**11 * mpmath.mpf(L) ** 3 / (mpmath.mpf(delta) ** 2 * M) * _afc_factor(alpha2, xi2, L, delta, 4)
        return float(val)


def afc_required_M(alpha2: float, xi2: float, L: int, delta: float, confidence: float) -> int:
    """``ceil(7**2 2**11 L**3 / (delta**2 (1 - gamma)) x**(4 xi2 log 2))``."""
    _check_afc(alpha2, xi2, L, delta)
    _check_confidence(confidence)
    with mpmath.workdps(50):
        val = (
            49
            * 2**11
            * mpmath.mpf(L) ** 3
            / (mpmath.mpf(delta) ** 2 * (1 - mpmath.mpf(confidence)))
            * _afc_factor(alpha2, xi2, L, delta, 4)
        )
        return int(mpmath.ceil(val))


def afc_global_error_bound(alpha2: float, xi2: float, L: int, k: int) -> float:
    """``4 alpha2 L / k e**(-k / xi2)``, valid for ``k >= xi2 log(2 alpha2 L)``."""
    if k < xi2 * math.log(2 * alpha2 * L):
        raise PreconditionError(f"k={k} below xi2 log(2 alpha2 L) = {xi2 * math.log(2 * alpha2 * L):.4g}")
    return 4 * alpha2 * L / k * math.exp(-k / xi2)
