"""Changepoints and stuttering successor/predecessor steps.

A position of a trace is a proper changepoint for a set of PLTL formulas if it
is the origin or some member formula flips truth value there.  When only
finitely many positions are proper changepoints, every later position counts
as a changepoint by convention, so successors are always defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .pltl import pltl_eval, valuation_profile
from .traces import LassoTrace, PointedTrace

Gamma = frozenset  # of Pltl formulas


def is_proper_changepoint(trace: LassoTrace, gamma: Gamma, i: int) -> bool:
    """Origin, or some member of gamma flips truth value between i-1 and i."""
    if i == 0:
        return True
    return any(pltl_eval(trace, i, th) != pltl_eval(trace, i - 1, th) for th in gamma)


@dataclass(frozen=True)
class ChangepointProfile:
    """Finite description of the changepoints of a trace w.r.t. a gamma set.

    Below ``threshold`` flips are tabulated exactly; from there they repeat
    with ``period``.  ``tail_start`` is set when only finitely many proper
    changepoints exist: every position from there on is a changepoint by
    convention.
    """

    trace: LassoTrace
    gamma: Gamma
    threshold: int
    period: int
    flip_bits: tuple[bool, ...]
    tail_start: int | None

    def _flips(self, i: int) -> bool:
        if i < self.threshold:
            return self.flip_bits[i]
        return self.flip_bits[self.threshold + ((i - self.threshold) % self.period)]

    def is_changepoint(self, i: int) -> bool:
        if i == 0:
            return True
        if self.tail_start is not None and i >= self.tail_start:
            return True
        return self._flips(i)

    def proper_changepoints(self, horizon: int) -> list[int]:
        return [i for i in range(horizon) if i == 0 or self._flips(i)]

    def next_changepoint(self, i: int) -> int:
        """Least changepoint strictly greater than i; always exists."""
        if self.tail_start is not None:
            candidates = [j for j in range(i + 1, min(self.tail_start, self.threshold + self.period))
                          if self._flips(j)]
            if candidates:
                return candidates[0]
            return max(i + 1, self.tail_start)
        j = i + 1
        # infinitely many proper changepoints: at least one per period in the tail
        while not self.is_changepoint(j):
            j += 1
        return j

    def prev_changepoint(self, i: int) -> int | None:
        """Greatest changepoint strictly smaller than i, if any."""
        for j in range(i - 1, -1, -1):
            if self.is_changepoint(j):
                return j
        return None


_cp_memo: dict[tuple[LassoTrace, Gamma], ChangepointProfile] = {}


def changepoint_profile(trace: LassoTrace, gamma: Gamma) -> ChangepointProfile:
    key = (trace, gamma)
    hit = _cp_memo.get(key)
    if hit is not None:
        return hit
    profiles = [valuation_profile(trace, th) for th in gamma]
    threshold = max([p.threshold for p in profiles], default=0) + 1
    period = math.lcm(*[p.period for p in profiles]) if profiles else 1

    def flips(i: int) -> bool:
        return i > 0 and any(p.value(i) != p.value(i - 1) for p in profiles)

    flip_bits = tuple(flips(i) for i in range(threshold + period))
    tail_start: int | None = None
    if not any(flip_bits[threshold:]):
        last_proper = max((i for i in range(threshold) if flip_bits[i]), default=0)
        tail_start = last_proper + 1
    prof = ChangepointProfile(trace, gamma, threshold, period, flip_bits, tail_start)
    _cp_memo[key] = prof
    return prof


def gamma_succ(pt: PointedTrace, gamma: Gamma) -> PointedTrace:
    """Step to the least changepoint strictly after the current position."""
    prof = changepoint_profile(pt.trace, gamma)
    return PointedTrace(pt.trace, prof.next_changepoint(pt.pos))


def gamma_pred(pt: PointedTrace, gamma: Gamma) -> PointedTrace | None:
    """Step to the greatest changepoint strictly before the current position.

    Undefined (None) at the origin.
    """
    if pt.pos == 0:
        return None
    prof = changepoint_profile(pt.trace, gamma)
    prev = prof.prev_changepoint(pt.pos)
    if prev is None:
        return None
    return PointedTrace(pt.trace, prev)


Assignment = Mapping[str, PointedTrace]


def assign_succ(a: Assignment, gamma: Gamma, c: frozenset[str] | set[str]) -> dict[str, PointedTrace]:
    """Advance exactly the coordinates in c to their gamma-successors."""
    c = frozenset(c)
    if not c:
        raise ValueError("coordinate set must be nonempty")
    missing = c - set(a)
    if missing:
        raise KeyError(f"coordinates not in assignment domain: {sorted(missing)}")
    return {x: gamma_succ(pt, gamma) if x in c else pt for x, pt in a.items()}


def assign_pred(a: Assignment, gamma: Gamma, c: frozenset[str] | set[str]) -> dict[str, PointedTrace] | None:
    """Move exactly the coordinates in c to their gamma-predecessors.

    Defined only when every coordinate in c has one (coordinates outside c do
    not matter); returns None otherwise.
    """
    c = frozenset(c)
    if not c:
        raise ValueError("coordinate set must be nonempty")
    missing = c - set(a)
    if missing:
        raise KeyError(f"coordinates not in assignment domain: {sorted(missing)}")
    stepped: dict[str, PointedTrace] = {}
    for x, pt in a.items():
        if x in c:
            prev = gamma_pred(pt, gamma)
            if prev is None:
                return None
            stepped[x] = prev
        else:
            stepped[x] = pt
    return stepped
