# Copyright (C) 2024 The deltacheck contributors
#
# This file is part of deltacheck.
#
# deltacheck is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software Foundation,
# either version 3 of the License, or (at your option) any later version.
#
# deltacheck is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR A
# PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with
# deltacheck. If not, see <https://www.gnu.org/licenses/>.
"""
Time scales: finite unions of closed segments and isolated points.

A :py:class:`TimeScale` is immutable. All operators take a point of the scale and
accept values that miss a segment endpoint or isolated point by the membership tolerance
(see :py:func:`membership_tolerance`), snapping them onto that point.
"""
import bisect
import math
import operator
from enum import unique
from typing import Final, Iterable, NamedTuple, Sequence

from deltacheck.utils.conditional_imports import StrEnum
from deltacheck.utils.ContextLogger import get_logger
from deltacheck.utils.misc import DeltaCheckError

logger = get_logger(__name__)

__all__ = [
    "EmptyScale",
    "UnorderedSegment",
    "MalformedSegment",
    "NonFiniteEndpoint",
    "DegenerateWindow",
    "BadBase",
    "PointNotInScale",
    "Segment",
    "Side",
    "PointClass",
    "TimeScale",
    "membership_tolerance",
    "make_timescale",
    "integers_window",
    "q_lattice",
    "real_interval",
    "sigma",
    "rho",
    "mu",
    "nu",
    "classify",
]

MEMBERSHIP_EPS: Final = 1e-12


class EmptyScale(DeltaCheckError, ValueError):
    pass


class UnorderedSegment(DeltaCheckError, ValueError):
    pass


class MalformedSegment(DeltaCheckError, ValueError):
    """A segment is not a (lo, hi)-pair."""


class NonFiniteEndpoint(DeltaCheckError, ValueError):
    pass


class DegenerateWindow(DeltaCheckError, ValueError):
    pass


class BadBase(DeltaCheckError, ValueError):
    pass


class PointNotInScale(DeltaCheckError, LookupError):
    pass


class Segment(NamedTuple):
    """A closed segment [lo, hi]. lo == hi is an isolated point."""

    lo: float
    hi: float

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi


@unique
class Side(StrEnum):
    DENSE = "dense"
    SCATTERED = "scattered"


class PointClass(NamedTuple):
    right: Side
    left: Side
    is_min: bool
    is_max: bool

    @property
    def isolated(self) -> bool:
        return self.right is Side.SCATTERED and self.left is Side.SCATTERED

    @property
    def dense(self) -> bool:
        return self.right is Side.DENSE and self.left is Side.DENSE


def membership_tolerance(p: float) -> float:
    """Distance within which a value counts as the endpoint or isolated point p."""
    return MEMBERSHIP_EPS * max(1.0, abs(p))


def _fmt(x: float) -> str:
    return f"{x:.15g}"


class TimeScale:
    """
    An ordered finite union of disjoint closed segments.

    Instances are created by :py:func:`make_timescale` (or the canonical constructors)
    which validate and normalize the segments. They are hashable and compare equal when
    their segments are equal.
    """

    __slots__ = ("_segments", "_los")

    def __init__(self, segments: Sequence[Segment]):
        self._segments: tuple[Segment, ...] = tuple(segments)
        self._los: tuple[float, ...] = tuple(seg.lo for seg in self._segments)

    @property
    def segments(self) -> tuple[Segment, ...]:
        return self._segments

    @property
    def a(self) -> float:
        return self._segments[0].lo

    @property
    def b(self) -> float:
        return self._segments[-1].hi

    @property
    def length(self) -> float:
        return self.b - self.a

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeScale):
            return NotImplemented
        return self._segments == other._segments

    def __hash__(self) -> int:
        return hash(self._segments)

    def __repr__(self) -> str:
        return f"TimeScale({[tuple(seg) for seg in self._segments]!r})"

    def __contains__(self, t: object) -> bool:
        if not isinstance(t, (int, float)):
            return False
        try:
            self.locate(float(t))
        except PointNotInScale:
            return False
        return True

    def locate(self, t: float) -> tuple[int, float]:
        """
        Finds the segment containing t.

        Returns:
            The index of the segment and t, snapped onto an endpoint of the segment if
            it is within the membership tolerance of it

        Raises:
            PointNotInScale: If t is not a member of the scale
        """
        if not math.isfinite(t):
            raise PointNotInScale(f"{t} is not in {self.summary()}")
        i = bisect.bisect_right(self._los, t) - 1
        if i >= 0:
            lo, hi = self._segments[i]
            if abs(t - lo) <= membership_tolerance(lo):
                return i, lo
            if abs(t - hi) <= membership_tolerance(hi):
                return i, hi
            if t < hi:
                return i, t
        if i + 1 < len(self._segments):
            lo = self._segments[i + 1].lo
            if abs(t - lo) <= membership_tolerance(lo):
                return i + 1, lo
        raise PointNotInScale(f"{t} is not in {self.summary()}")

    def snap(self, t: float) -> float:
        return self.locate(t)[1]

    def dense_segments(self) -> list[Segment]:
        return [seg for seg in self._segments if not seg.is_point]

    def scattered_points(self) -> list[float]:
        """The right-scattered points: the upper end of every segment but the last."""
        return [seg.hi for seg in self._segments[:-1]]

    def points(self) -> list[float]:
        """Isolated points and the endpoints of every dense segment, ascending."""
        pts: list[float] = []
        for seg in self._segments:
            pts.append(seg.lo)
            if not seg.is_point:
                pts.append(seg.hi)
        return pts

    def in_kappa(self, t: float) -> bool:
        """T^κ: the scale without its maximum if that maximum is left-scattered."""
        _, t = self.locate(t)
        last = self._segments[-1]
        return not (t == self.b and last.is_point and len(self._segments) > 1)

    def kappa_points(self) -> list[float]:
        return [p for p in self.points() if self.in_kappa(p)]

    def is_discrete(self) -> bool:
        return all(seg.is_point for seg in self._segments)

    def summary(self) -> str:
        parts = [
            (
                f"{{{_fmt(seg.lo)}}}"
                if seg.is_point
                else f"[{_fmt(seg.lo)}, {_fmt(seg.hi)}]"
            )
            for seg in self._segments
        ]
        return " ∪ ".join(parts)


def _as_float(value: float | int) -> float:
    x = float(value)
    if not math.isfinite(x):
        raise NonFiniteEndpoint(f"Endpoint {value} is not finite")
    return x


def make_timescale(segments: Iterable[Sequence[float]]) -> TimeScale:
    """
    Validates, sorts and merges segments into a time scale.

    Overlapping or touching segments are merged into one.

    Args:
        segments: (lo, hi)-pairs, lo == hi describing an isolated point

    Raises:
        EmptyScale: If no segment is given
        MalformedSegment: If a segment does not have exactly two endpoints
        UnorderedSegment: If lo > hi for a segment
        NonFiniteEndpoint: If an endpoint is inf or nan
    """
    validated: list[Segment] = []
    for pair in segments:
        if len(pair) != 2:
            raise MalformedSegment(f"A segment needs exactly two endpoints: {pair!r}")
        lo, hi = _as_float(pair[0]), _as_float(pair[1])
        if lo > hi:
            raise UnorderedSegment(f"Segment ({lo}, {hi}) has lo > hi")
        validated.append(Segment(lo, hi))
    if not validated:
        raise EmptyScale("A time scale needs at least one segment")

    validated.sort()
    merged = [validated[0]]
    for seg in validated[1:]:
        last = merged[-1]
        if seg.lo <= last.hi:
            merged[-1] = Segment(last.lo, max(last.hi, seg.hi))
        else:
            merged.append(seg)
    if len(merged) < len(validated):
        logger.debug("Merged %s segments into %s", len(validated), len(merged))
    return TimeScale(merged)


def integers_window(a: int, b: int) -> TimeScale:
    """The isolated points a, a+1, ..., b."""
    a, b = operator.index(a), operator.index(b)
    if a >= b:
        raise DegenerateWindow(f"Integer window needs a < b (got {a}, {b})")
    return TimeScale([Segment(float(k), float(k)) for k in range(a, b + 1)])


def q_lattice(q: float, m: int, n: int) -> TimeScale:
    """The isolated points q^m, q^(m+1), ..., q^n."""
    m, n = operator.index(m), operator.index(n)
    if not (math.isfinite(q) and q > 1):
        raise BadBase(f"The base of a q-lattice has to be > 1 (got {q})")
    if m >= n:
        raise DegenerateWindow(f"q-lattice needs m < n (got {m}, {n})")
    q = float(q)
    return TimeScale([Segment(q**k, q**k) for k in range(m, n + 1)])


def real_interval(a: float, b: float) -> TimeScale:
    """The dense segment [a, b]."""
    lo, hi = _as_float(a), _as_float(b)
    if lo >= hi:
        raise DegenerateWindow(f"Interval needs a < b (got {a}, {b})")
    return TimeScale([Segment(lo, hi)])


def sigma(T: TimeScale, t: float) -> float:
    """Forward jump: the next point of T after t, with sigma(b) = b."""
    idx, t = T.locate(t)
    if t < T.segments[idx].hi or idx + 1 == len(T.segments):
        return t
    return T.segments[idx + 1].lo


def rho(T: TimeScale, t: float) -> float:
    """Backward jump: the previous point of T before t, with rho(a) = a."""
    idx, t = T.locate(t)
    if t > T.segments[idx].lo or idx == 0:
        return t
    return T.segments[idx - 1].hi


def mu(T: TimeScale, t: float) -> float:
    """Forward graininess sigma(t) - t."""
    t = T.snap(t)
    return sigma(T, t) - t


def nu(T: TimeScale, t: float) -> float:
    """Backward graininess t - rho(t)."""
    t = T.snap(t)
    return t - rho(T, t)


def classify(T: TimeScale, t: float) -> PointClass:
    t = T.snap(t)
    return PointClass(
        right=Side.SCATTERED if sigma(T, t) > t else Side.DENSE,
        left=Side.SCATTERED if rho(T, t) < t else Side.DENSE,
        is_min=t == T.a,
        is_max=t == T.b,
    )
