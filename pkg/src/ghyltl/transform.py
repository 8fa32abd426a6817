"""Prenexification via position traces, and the position-trace family itself.

Quantifiers under temporal operators are hoisted by trading the operator's
implicit position quantification for explicit quantification over marker
traces: the trace empty^i {hash} empty^omega encodes position i.  A fresh
variable bound to such a trace is driven to its marker inside a context that
also advances the original coordinates, which re-synchronizes the evaluation
point; past operators walk back from the marker until the position variable
sits at its origin again.  Original quantifiers are relativized so that they
ignore the added marker traces.

The hoisted sentence is prenex over ap + {hash}; evaluating it needs the
position traces in the model, which is what makes the transformation an
equivalence in the sense: L satisfies f iff L + pos_traces satisfies the
output.  A finite slice of the (infinite) position-trace family gives a
bounded approximation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

from .semantics import (
    EMPTY_GAMMA, Atom, Context, Exists, Forall, Gamma, Hyper, Next, Not, Or,
    Since, Until, Yesterday, all_props, all_vars, alw, children, ev, free_vars,
    h_all, h_and, h_implies, has_quantifier, is_prenex, once, tautology_over,
)
from .traces import LassoTrace, spike_trace

MARK = "hash"


@dataclass(frozen=True)
class PosTraceFamily:
    """The traces empty^i {hash} empty^omega for 0 <= i <= bound."""

    bound: int
    traces: tuple[LassoTrace, ...]


def pos_traces(bound: int) -> PosTraceFamily:
    if bound < 0:
        raise ValueError("bound must be nonnegative")
    traces = tuple(spike_trace((), MARK, i, name=f"pos{i}") for i in range(bound + 1))
    return PosTraceFamily(bound, traces)


def origin_marker(x: str, prop: str = MARK) -> Hyper:
    """!Y[] true_x: holds exactly when x points at position 0."""
    return Not(Yesterday(EMPTY_GAMMA, tautology_over(Atom(prop, x))))


def mark_atom(x: str) -> Hyper:
    return Atom(MARK, x)


def pos_shape(x: str, ap: Iterable[str]) -> Hyper:
    """x carries nothing but the marker, and the marker exactly once."""
    singleton = Until(
        EMPTY_GAMMA, Not(mark_atom(x)),
        h_and(mark_atom(x), Next(EMPTY_GAMMA, alw(EMPTY_GAMMA, Not(mark_atom(x))))))
    props = sorted(set(ap) - {MARK})
    if not props:
        return singleton
    purity = alw(EMPTY_GAMMA, h_all([Not(Atom(p, x)) for p in props]))
    return h_and(purity, singleton)


def _mark_at_one(x: str) -> Hyper:
    return h_and(Not(mark_atom(x)), Next(EMPTY_GAMMA, mark_atom(x)))


def _has_mark(x: str) -> Hyper:
    # guards are evaluated under arbitrary ambient contexts, so they pin their
    # own context to exactly the variables they read
    return Context(frozenset({x}), ev(EMPTY_GAMMA, mark_atom(x)))


def _mark_before(a: str, b: str) -> Hyper:
    """Marker of a sits strictly before marker of b (both initial)."""
    return Context(frozenset({a, b}), ev(
        EMPTY_GAMMA, h_and(mark_atom(a), Next(EMPTY_GAMMA, ev(EMPTY_GAMMA, mark_atom(b))))))


def _is_taut(f: Hyper) -> bool:
    return isinstance(f, Or) and isinstance(f.right, Not) and f.right.sub == f.left


def rename_vars(f: Hyper, ren: dict[str, str]) -> Hyper:
    """Uniform variable renaming over atoms, binders, and context sets."""
    if not ren:
        return f
    if isinstance(f, Atom):
        return Atom(f.prop, ren.get(f.var, f.var))
    if isinstance(f, Not):
        return Not(rename_vars(f.sub, ren))
    if isinstance(f, Or):
        return Or(rename_vars(f.left, ren), rename_vars(f.right, ren))
    if isinstance(f, Context):
        return Context(frozenset(ren.get(v, v) for v in f.vars), rename_vars(f.sub, ren))
    if isinstance(f, Next):
        return Next(f.gamma, rename_vars(f.sub, ren))
    if isinstance(f, Until):
        return Until(f.gamma, rename_vars(f.left, ren), rename_vars(f.right, ren))
    if isinstance(f, Yesterday):
        return Yesterday(f.gamma, rename_vars(f.sub, ren))
    if isinstance(f, Since):
        return Since(f.gamma, rename_vars(f.left, ren), rename_vars(f.right, ren))
    if isinstance(f, Exists):
        return Exists(ren.get(f.var, f.var), rename_vars(f.sub, ren))
    if isinstance(f, Forall):
        return Forall(ren.get(f.var, f.var), rename_vars(f.sub, ren))
    raise TypeError(f"not a hyper formula node: {f!r}")


def alpha_unique(f: Hyper) -> Hyper:
    """Rename binders so every bound variable name is used exactly once."""
    used: set[str] = set(all_vars(f))
    taken: set[str] = set()

    def variant(v: str) -> str:
        if v not in taken:
            taken.add(v)
            return v
        i = 2
        while f"{v}_{i}" in used or f"{v}_{i}" in taken:
            i += 1
        fresh = f"{v}_{i}"
        taken.add(fresh)
        used.add(fresh)
        return fresh

    def walk(n: Hyper, ren: dict[str, str]) -> Hyper:
        if isinstance(n, Atom):
            return Atom(n.prop, ren.get(n.var, n.var))
        if isinstance(n, Context):
            return Context(frozenset(ren.get(v, v) for v in n.vars), walk(n.sub, ren))
        if isinstance(n, (Exists, Forall)):
            new = variant(n.var)
            sub_ren = dict(ren)
            sub_ren[n.var] = new
            return type(n)(new, walk(n.sub, sub_ren))
        if isinstance(n, Not):
            return Not(walk(n.sub, ren))
        if isinstance(n, Or):
            return Or(walk(n.left, ren), walk(n.right, ren))
        if isinstance(n, Next):
            return Next(n.gamma, walk(n.sub, ren))
        if isinstance(n, (Until, Since)):
            # the F/G/O/H sugar guards the operand with a tautology built from
            # the operand itself; renaming the copies apart would defeat the
            # tautology detection downstream, so rebuild the shared shape
            if _is_taut(n.left) and (n.left.left is n.right or n.left.left == n.right):
                w = walk(n.right, ren)
                return type(n)(n.gamma, tautology_over(w), w)
            return type(n)(n.gamma, walk(n.left, ren), walk(n.right, ren))
        if isinstance(n, Yesterday):
            return Yesterday(n.gamma, walk(n.sub, ren))
        raise TypeError(f"not a hyper formula node: {n!r}")

    return walk(f, {})


_Prefix = list[tuple[str, str]]


def _fold_prefix(prefix: _Prefix, matrix: Hyper) -> Hyper:
    out = matrix
    for kind, var in reversed(prefix):
        out = (Exists if kind == "exists" else Forall)(var, out)
    return out


def hoist_prenex(f: Hyper) -> Hyper:
    """Hoist quantifiers across boolean connectives and context operators only.

    Sound over nonempty trace universes.  Raises when a quantifier sits under
    a temporal operator; that case needs prenexify.
    """
    f = alpha_unique(f)

    def walk(n: Hyper) -> tuple[_Prefix, Hyper]:
        if isinstance(n, Atom):
            return [], n
        if isinstance(n, Not):
            p, m = walk(n.sub)
            return [("forall" if k == "exists" else "exists", v) for k, v in p], Not(m)
        if isinstance(n, Or):
            p1, m1 = walk(n.left)
            p2, m2 = walk(n.right)
            return p1 + p2, Or(m1, m2)
        if isinstance(n, Context):
            p, m = walk(n.sub)
            return p, Context(n.vars, m)
        if isinstance(n, (Exists, Forall)):
            p, m = walk(n.sub)
            kind = "exists" if isinstance(n, Exists) else "forall"
            return [(kind, n.var)] + p, m
        if isinstance(n, (Next, Until, Yesterday, Since)):
            if any(has_quantifier(c) for c in children(n)):
                raise ValueError("quantifier under a temporal operator; use prenexify")
            return [], n
        raise TypeError(f"not a hyper formula node: {n!r}")

    prefix, matrix = walk(f)
    return _fold_prefix(prefix, matrix)


class _Prenexifier:
    def __init__(self, ap: frozenset[str], used: set[str], pool: Iterator[str]):
        self.ap = ap
        self.used = used
        self.pool = pool
        self.fresh_vars: set[str] = set()

    def fresh(self) -> str:
        for name in self.pool:
            if name not in self.used:
                self.used.add(name)
                self.fresh_vars.add(name)
                return name
        raise ValueError("fresh variable pool exhausted")

    def shape(self, x: str, at_one: bool = False) -> Hyper:
        body = pos_shape(x, self.ap)
        if at_one:
            body = h_and(body, _mark_at_one(x))
        return Context(frozenset({x}), body)

    def walk(self, n: Hyper, context: frozenset[str], scope: frozenset[str]) \
            -> tuple[_Prefix, Hyper]:
        if isinstance(n, Atom):
            return [], n
        if isinstance(n, Not):
            p, m = self.walk(n.sub, context, scope)
            return [("forall" if k == "exists" else "exists", v) for k, v in p], Not(m)
        if isinstance(n, Or):
            p1, m1 = self.walk(n.left, context, scope)
            p2, m2 = self.walk(n.right, context, scope)
            return p1 + p2, Or(m1, m2)
        if isinstance(n, Context):
            p, m = self.walk(n.sub, n.vars, scope)
            return p, Context(n.vars, m)
        if isinstance(n, (Exists, Forall)):
            inner_scope = scope | {n.var}
            p, m = self.walk(n.sub, context, inner_scope)
            # temporal operators below this binder originally stepped the
            # variables bound so far; clamp the ambient context accordingly
            # (deeper binders insert their own, tighter clamps)
            cw = context & inner_scope
            if cw:
                m = Context(cw, m)
            kind = "exists" if isinstance(n, Exists) else "forall"
            # quantification now ranges over the model plus marker traces;
            # keep the original meaning by guarding against marked traces
            if kind == "exists":
                guarded = h_and(Not(_has_mark(n.var)), m)
            else:
                guarded = h_implies(Not(_has_mark(n.var)), m)
            return [(kind, n.var)] + p, guarded
        if isinstance(n, (Next, Until, Yesterday, Since)):
            if not (context & scope):
                # no bound coordinate moves: the step operators degenerate
                if isinstance(n, (Next, Yesterday)):
                    return self.walk(n.sub, context, scope)
                return self.walk(n.right, context, scope)
            return self._temporal(n, context, scope)
        raise TypeError(f"not a hyper formula node: {n!r}")

    def _future_body(self, gamma: Gamma, x: str, inner: Hyper,
                     context: frozenset[str], scope: frozenset[str]) -> Hyper:
        walkctx = (context & scope) | {x}
        return Context(walkctx, ev(gamma, h_and(mark_atom(x), inner)))

    def _past_body(self, gamma: Gamma, x: str, inner: Hyper,
                   context: frozenset[str], scope: frozenset[str]) -> Hyper:
        walkctx = (context & scope) | {x}
        stop = Context(frozenset({x}), origin_marker(x))
        back = Context(walkctx, once(gamma, h_and(stop, inner)))
        return Context(frozenset({x}), ev(EMPTY_GAMMA, h_and(mark_atom(x), back)))

    def _wrap(self, context: frozenset[str], scope: frozenset[str],
              m: Hyper) -> Hyper:
        # the operand matrix evaluates at the walk's stop point under the
        # context its original position had; binder clamps inside m handle
        # the regions below hoisted quantifiers
        return Context(context & scope, m)

    def _temporal(self, n: Hyper, context: frozenset[str], scope: frozenset[str]) \
            -> tuple[_Prefix, Hyper]:
        if isinstance(n, Next):
            p, m = self.walk(n.sub, context, scope)
            if not p:
                return [], Next(n.gamma, m)
            xi = self.fresh()
            body = self._future_body(n.gamma, xi, self._wrap(context, scope, m),
                                     context, scope)
            return [("exists", xi)] + p, h_and(self.shape(xi, at_one=True), body)

        if isinstance(n, Yesterday):
            p, m = self.walk(n.sub, context, scope)
            if not p:
                return [], Yesterday(n.gamma, m)
            xi = self.fresh()
            body = self._past_body(n.gamma, xi, self._wrap(context, scope, m),
                                   context, scope)
            return [("exists", xi)] + p, h_and(self.shape(xi, at_one=True), body)

        # Until / Since: a tautological left operand (the F/O sugar) needs no
        # walk of its own and is rebuilt from the right matrix
        taut_left = _is_taut(n.left)
        if taut_left:
            lp: _Prefix = []
            lm: Hyper | None = None
        else:
            lp, lm = self.walk(n.left, context, scope)
        rp, rm = self.walk(n.right, context, scope)
        future = isinstance(n, Until)
        if not lp and not rp:
            left = tautology_over(rm) if taut_left else lm
            return [], (Until if future else Since)(n.gamma, left, rm)
        xi = self.fresh()
        make_body = self._future_body if future else self._past_body
        conjuncts = [self.shape(xi),
                     make_body(n.gamma, xi, self._wrap(context, scope, rm),
                               context, scope)]
        prefix: _Prefix = [("exists", xi)] + rp
        if not taut_left:
            xj = self.fresh()
            guard_j = h_and(self.shape(xj), _mark_before(xj, xi))
            body_l = make_body(n.gamma, xj, self._wrap(context, scope, lm),
                               context, scope)
            conjuncts.append(h_implies(guard_j, body_l))
            prefix = prefix + [("forall", xj)] + lp
        return prefix, h_all(conjuncts)


def default_pool(prefix: str = "pv") -> Iterator[str]:
    return (f"{prefix}{i}" for i in itertools.count())


def prenexify(f: Hyper, ap: Iterable[str] | None = None,
              fresh_pool: Iterator[str] | None = None) -> Hyper:
    """Hoist every quantifier to the front; already-prenex input is returned
    unchanged.

    Non-prenex input is rewritten over ap + {hash}; its evaluation needs the
    position traces added to the model (see pos_traces).
    """
    if free_vars(f):
        raise ValueError(f"not a sentence; free variables {sorted(free_vars(f))}")
    if is_prenex(f):
        return f
    props = frozenset(ap) if ap is not None else all_props(f)
    if MARK in props:
        raise ValueError(f"input must not use the reserved proposition {MARK!r}")
    f = alpha_unique(f)
    state = _Prenexifier(props, set(all_vars(f)) | {MARK}, fresh_pool or default_pool())
    top_context = all_vars(f)
    prefix, matrix = state.walk(f, top_context, frozenset())
    bound = {v for _, v in prefix}
    assert state.fresh_vars <= bound, "fresh position variables must be bound"
    assert not state.fresh_vars & all_vars(f), "fresh pool collided with input"
    out = _fold_prefix(prefix, matrix)
    assert is_prenex(out)
    return out
