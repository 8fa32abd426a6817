"""Lasso traces, pointed traces, and transition systems.

An infinite trace over a proposition set is represented finitely as a lasso:
a finite prefix followed by a nonempty loop repeated forever.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Iterable

Letter = frozenset[str]


def _letter(props: Iterable[str]) -> Letter:
    return frozenset(props)


@dataclass(frozen=True)
class LassoTrace:
    """Ultimately periodic trace ``prefix . loop^omega`` over the alphabet 2^ap."""

    ap: frozenset[str]
    prefix: tuple[Letter, ...]
    loop: tuple[Letter, ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ap", frozenset(self.ap))
        object.__setattr__(self, "prefix", tuple(_letter(p) for p in self.prefix))
        object.__setattr__(self, "loop", tuple(_letter(p) for p in self.loop))
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")
        for letter in itertools.chain(self.prefix, self.loop):
            stray = letter - self.ap
            if stray:
                raise ValueError(f"letter mentions propositions outside ap: {sorted(stray)}")

    def letter(self, i: int) -> Letter:
        """Letter at position i of the denoted infinite trace."""
        if i < len(self.prefix):
            return self.prefix[i]
        return self.loop[(i - len(self.prefix)) % len(self.loop)]

    def letters(self, n: int) -> list[Letter]:
        """The first n letters, unrolled."""
        return [self.letter(i) for i in range(n)]

    def sort_key(self) -> tuple:
        return (
            len(self.prefix),
            len(self.loop),
            tuple(tuple(sorted(l)) for l in self.prefix),
            tuple(tuple(sorted(l)) for l in self.loop),
        )

    def __repr__(self) -> str:
        def word(ls):
            return "".join("{" + ",".join(sorted(l)) + "}" for l in ls)

        return f"LassoTrace({word(self.prefix)}({word(self.loop)})^w)"


@dataclass(frozen=True)
class PointedTrace:
    trace: LassoTrace
    pos: int

    def __post_init__(self) -> None:
        if self.pos < 0:
            raise ValueError("position must be nonnegative")

    def letter(self) -> Letter:
        return self.trace.letter(self.pos)


def lasso(ap: Iterable[str], prefix: Iterable[Iterable[str]], loop: Iterable[Iterable[str]],
          name: str | None = None) -> LassoTrace:
    """Convenience constructor accepting plain lists/sets."""
    return LassoTrace(frozenset(ap), tuple(_letter(p) for p in prefix),
                      tuple(_letter(p) for p in loop), name)


def spike_trace(ap: Iterable[str], mark: str, pos: int, name: str | None = None) -> LassoTrace:
    """The trace empty^pos {mark} empty^omega (a single marked position)."""
    ap = frozenset(ap) | {mark}
    prefix = tuple(frozenset() for _ in range(pos)) + (frozenset({mark}),)
    return LassoTrace(ap, prefix, (frozenset(),), name)


def normalize(t: LassoTrace) -> LassoTrace:
    """Canonical minimal (prefix, loop) representation of the same infinite trace.

    Reduces the loop to its primitive root, then rolls trailing prefix letters
    into the loop.  Two lassos denote the same infinite word iff their
    normalizations are equal.
    """
    loop = list(t.loop)
    for d in range(1, len(loop) + 1):
        if len(loop) % d == 0 and loop == loop[:d] * (len(loop) // d):
            loop = loop[:d]
            break
    prefix = list(t.prefix)
    while prefix and prefix[-1] == loop[-1]:
        prefix.pop()
        loop = [loop[-1]] + loop[:-1]
    return LassoTrace(t.ap, tuple(prefix), tuple(loop), t.name)


def pointwise_union(t1: LassoTrace, t2: LassoTrace) -> LassoTrace:
    """Union the letters of two traces over disjoint alphabets, position by position."""
    if t1.ap & t2.ap:
        raise ValueError(f"pointwise_union requires disjoint ap sets, got overlap {sorted(t1.ap & t2.ap)}")
    plen = max(len(t1.prefix), len(t2.prefix))
    llen = math.lcm(len(t1.loop), len(t2.loop))
    prefix = tuple(t1.letter(i) | t2.letter(i) for i in range(plen))
    loop = tuple(t1.letter(plen + j) | t2.letter(plen + j) for j in range(llen))
    return LassoTrace(t1.ap | t2.ap, prefix, loop)


def enumerate_lassos(ap: Iterable[str], max_prefix: int, max_loop: int) -> list[LassoTrace]:
    """All lasso representations with |prefix| <= max_prefix, 1 <= |loop| <= max_loop.

    Returns distinct representations (no canonicalization), in a deterministic
    order: by prefix length, then loop length, then letters.
    """
    if max_loop < 1:
        raise ValueError("max_loop must be >= 1")
    ap = frozenset(ap)
    letters = [frozenset(c) for n in range(len(ap) + 1)
               for c in itertools.combinations(sorted(ap), n)]
    out = []
    for a in range(max_prefix + 1):
        for prefix in itertools.product(letters, repeat=a):
            for b in range(1, max_loop + 1):
                for loop in itertools.product(letters, repeat=b):
                    out.append(LassoTrace(ap, prefix, loop))
    out.sort(key=LassoTrace.sort_key)
    return out


@dataclass(frozen=True, eq=False)
class TransitionSystem:
    """Finite transition system; every vertex needs at least one outgoing edge."""

    ap: frozenset[str]
    vertices: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    initial: frozenset[str]
    labels: dict[str, Letter]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ap", frozenset(self.ap))
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", frozenset((s, d) for s, d in self.edges))
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "labels", {v: _letter(l) for v, l in self.labels.items()})
        if not self.vertices:
            raise ValueError("transition system needs at least one vertex")
        vs = set(self.vertices)
        for s, d in self.edges:
            if s not in vs or d not in vs:
                raise ValueError(f"edge ({s},{d}) mentions unknown vertex")
        if not self.initial <= vs:
            raise ValueError("initial vertices must be vertices")
        for v in self.vertices:
            if v not in self.labels:
                raise ValueError(f"vertex {v} has no label")
            if self.labels[v] - self.ap:
                raise ValueError(f"label of {v} outside ap")
            if not any(s == v for s, _ in self.edges):
                raise ValueError(f"vertex {v} has no outgoing edge")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransitionSystem):
            return NotImplemented
        return (self.ap == other.ap and set(self.vertices) == set(other.vertices)
                and self.edges == other.edges and self.initial == other.initial
                and self.labels == other.labels)

    def successors(self, v: str) -> list[str]:
        return sorted(d for s, d in self.edges if s == v)


def enumerate_ts_traces(ts: TransitionSystem, max_prefix: int, max_loop: int) -> list[LassoTrace]:
    """Label images of all lasso runs with stem <= max_prefix and cycle <= max_loop.

    Output is canonicalized and deduplicated; an empty initial set yields an
    empty list with a warning.
    """
    if max_loop < 1:
        raise ValueError("max_loop must be >= 1")
    if not ts.initial:
        warnings.warn("transition system has no initial vertices; trace set is empty")
        return []
    seen: set[LassoTrace] = set()
    out: list[LassoTrace] = []

    def cycles_from(v0: str, length: int) -> Iterable[tuple[str, ...]]:
        # cycles v0 ... v_{length-1} with the loop-back edge to v0
        def walk(path: tuple[str, ...]) -> Iterable[tuple[str, ...]]:
            if len(path) == length:
                if (path[-1], v0) in ts.edges:
                    yield path
                return
            for nxt in ts.successors(path[-1]):
                yield from walk(path + (nxt,))

        yield from walk((v0,))

    def stems(length: int) -> Iterable[tuple[str, ...]]:
        def walk(path: tuple[str, ...]) -> Iterable[tuple[str, ...]]:
            if len(path) == length:
                yield path
                return
            for nxt in ts.successors(path[-1]):
                yield from walk(path + (nxt,))

        for v0 in sorted(ts.initial):
            yield from walk((v0,))

    for a in range(max_prefix + 1):
        for stem in stems(a + 1):
            # stem has a+1 vertices: a prefix vertices plus the loop entry
            prefix_vs, entry = stem[:-1], stem[-1]
            for b in range(1, max_loop + 1):
                for cyc in cycles_from(entry, b):
                    trace = normalize(LassoTrace(
                        ts.ap,
                        tuple(ts.labels[v] for v in prefix_vs),
                        tuple(ts.labels[v] for v in cyc),
                    ))
                    if trace not in seen:
                        seen.add(trace)
                        out.append(trace)
    out.sort(key=LassoTrace.sort_key)
    return out


def replay_run(ts: TransitionSystem, prefix_vs: Iterable[str], cycle_vs: Iterable[str]) -> bool:
    """Check that the given lasso run respects edges and the initial set."""
    prefix_vs, cycle_vs = list(prefix_vs), list(cycle_vs)
    run = prefix_vs + cycle_vs
    if not run or run[0] not in ts.initial:
        return False
    for s, d in zip(run, run[1:]):
        if (s, d) not in ts.edges:
            return False
    return (cycle_vs[-1], cycle_vs[0]) in ts.edges


# -- JSON interchange ---------------------------------------------------------
#
# Trace sets:  {"ap": [...], "traces": [{"name":..., "prefix": [[...]], "loop": [[...]]}]}
# Systems:     {"ap": [...], "vertices": [{"id":..., "label": [...]}],
#               "edges": [[src, dst], ...], "initial": [...]}


def trace_set_to_obj(ap: Iterable[str], traces: Iterable[LassoTrace]) -> dict:
    return {
        "ap": sorted(ap),
        "traces": [
            {
                "name": t.name if t.name is not None else f"t{i}",
                "prefix": [sorted(l) for l in t.prefix],
                "loop": [sorted(l) for l in t.loop],
            }
            for i, t in enumerate(traces)
        ],
    }


def trace_set_from_obj(obj: dict) -> tuple[frozenset[str], list[LassoTrace]]:
    ap = frozenset(obj["ap"])
    traces = [
        LassoTrace(ap, tuple(frozenset(l) for l in e["prefix"]),
                   tuple(frozenset(l) for l in e["loop"]), e.get("name"))
        for e in obj["traces"]
    ]
    return ap, traces


def save_trace_set(fp: IO[str], ap: Iterable[str], traces: Iterable[LassoTrace]) -> None:
    json.dump(trace_set_to_obj(ap, traces), fp, indent=2, sort_keys=True)
    fp.write("\n")


def load_trace_set(fp: IO[str]) -> tuple[frozenset[str], list[LassoTrace]]:
    return trace_set_from_obj(json.load(fp))


def ts_to_obj(ts: TransitionSystem) -> dict:
    return {
        "ap": sorted(ts.ap),
        "vertices": [{"id": v, "label": sorted(ts.labels[v])} for v in ts.vertices],
        "edges": sorted([s, d] for s, d in ts.edges),
        "initial": sorted(ts.initial),
    }


def ts_from_obj(obj: dict) -> TransitionSystem:
    return TransitionSystem(
        ap=frozenset(obj["ap"]),
        vertices=tuple(v["id"] for v in obj["vertices"]),
        edges=frozenset((s, d) for s, d in obj["edges"]),
        initial=frozenset(obj["initial"]),
        labels={v["id"]: frozenset(v["label"]) for v in obj["vertices"]},
    )


def save_transition_system(fp: IO[str], ts: TransitionSystem) -> None:
    json.dump(ts_to_obj(ts), fp, indent=2, sort_keys=True)
    fp.write("\n")


def load_transition_system(fp: IO[str]) -> TransitionSystem:
    return ts_from_obj(json.load(fp))
