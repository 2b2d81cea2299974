"""Contiguous qubit intervals."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidRegionError


@dataclass(frozen=True, order=True)
class Interval:
    """A contiguous block of qubits ``start, ..., start + length - 1``.

    Qubit 0 is the leftmost site of the chain.
    """

    start: int
    length: int

    def __post_init__(self):
        if int(self.start) != self.start or int(self.length) != self.length:
            raise InvalidRegionError(f"interval bounds must be integers: {self}")
        if self.start < 0:
            raise InvalidRegionError(f"interval start must be >= 0, got {self.start}")
        if self.length < 1:
            raise InvalidRegionError(f"interval length must be >= 1, got {self.length}")

    @property
    def stop(self) -> int:
        return self.start + self.length

    @property
    def sites(self) -> range:
        return range(self.start, self.stop)

    def check_within(self, n_qubits: int) -> None:
        if self.stop > n_qubits:
            raise InvalidRegionError(
                f"interval [{self.start}, {self.stop}) exceeds {n_qubits} qubits"
            )

    def shift(self, offset: int) -> "Interval":
        return Interval(self.start + offset, self.length)

    def to_dict(self) -> dict:
        return {"start": self.start, "length": self.length}

    @classmethod
    def from_dict(cls, d) -> "Interval":
        if isinstance(d, (list, tuple)):
            return cls(int(d[0]), int(d[1]))
        return cls(int(d["start"]), int(d["length"]))


def union(*intervals: Interval) -> Interval:
    """Union of intervals given left to right, each adjacent to the next."""
    if not intervals:
        raise InvalidRegionError("union of no intervals")
    for left, right in zip(intervals[:-1], intervals[1:]):
        if left.stop != right.start:
            raise InvalidRegionError(f"intervals {left} and {right} are not adjacent")
    return Interval(intervals[0].start, intervals[-1].stop - intervals[0].start)


def ordered_pair(a: Interval, b: Interval) -> tuple[Interval, Interval]:
    """Return ``(a, b)`` sorted left to right, checking adjacency."""
    left, right = (a, b) if a.start <= b.start else (b, a)
    if left.stop != right.start:
        raise InvalidRegionError(f"intervals {a} and {b} are not adjacent")
    return left, right
