"""Second-order arithmetic: flat ASTs, a bounded oracle, and the two
compilers into the stuttering and context fragments.

Numbers are encoded as traces carrying a single marker at the encoded
position, sets as arbitrary marker traces.  Addition and multiplication are
expressed through synchronization gadgets: the stuttering encoding steps along
marker changepoints, the context encoding freezes and releases coordinates.
Multiplication needs auxiliary periodic traces whose period carries the
multiplicand.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

from . import pltl as pl
from . import semantics as hy
from .pltl import ParseError, tokenize
from .semantics import EMPTY_GAMMA, EvalConfig, evaluate
from .traces import LassoTrace, PointedTrace, TransitionSystem, pointwise_union, spike_trace

HASH = "hash"
DLR = "dlr"
DLRP = "dlrp"


def num_prop(y: str) -> str:
    return f"hy_{y}"


def trace_var(v: str) -> str:
    return f"x_{v}"


# -- flat AST -----------------------------------------------------------------


class Arith:
    """Base class for flat arithmetic AST nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Add(Arith):
    y1: str
    y2: str
    y3: str


@dataclass(frozen=True)
class Mul(Arith):
    y1: str
    y2: str
    y3: str


@dataclass(frozen=True)
class Less(Arith):
    y1: str
    y2: str


@dataclass(frozen=True)
class Member(Arith):
    y: str
    set_var: str


@dataclass(frozen=True)
class Not(Arith):
    sub: Arith


@dataclass(frozen=True)
class Or(Arith):
    left: Arith
    right: Arith


@dataclass(frozen=True)
class ExistsFirst(Arith):
    var: str
    sub: Arith


@dataclass(frozen=True)
class ForallFirst(Arith):
    var: str
    sub: Arith


@dataclass(frozen=True)
class ExistsSecond(Arith):
    var: str
    sub: Arith


@dataclass(frozen=True)
class ForallSecond(Arith):
    var: str
    sub: Arith


def a_and(a: Arith, b: Arith) -> Arith:
    return Not(Or(Not(a), Not(b)))


def a_implies(a: Arith, b: Arith) -> Arith:
    return Or(Not(a), b)


def _children(f: Arith) -> tuple[Arith, ...]:
    if isinstance(f, (Add, Mul, Less, Member)):
        return ()
    if isinstance(f, (Not, ExistsFirst, ForallFirst, ExistsSecond, ForallSecond)):
        return (f.sub,)
    return (f.left, f.right)


def first_order_vars(f: Arith) -> frozenset[str]:
    out: set[str] = set()

    def walk(n: Arith) -> None:
        if isinstance(n, (Add, Mul)):
            out.update((n.y1, n.y2, n.y3))
        elif isinstance(n, Less):
            out.update((n.y1, n.y2))
        elif isinstance(n, Member):
            out.add(n.y)
        elif isinstance(n, (ExistsFirst, ForallFirst)):
            out.add(n.var)
        for c in _children(n):
            walk(c)

    walk(f)
    return frozenset(out)


def second_order_vars(f: Arith) -> frozenset[str]:
    out: set[str] = set()

    def walk(n: Arith) -> None:
        if isinstance(n, Member):
            out.add(n.set_var)
        elif isinstance(n, (ExistsSecond, ForallSecond)):
            out.add(n.var)
        for c in _children(n):
            walk(c)

    walk(f)
    return frozenset(out)


def free_arith_vars(f: Arith) -> frozenset[str]:
    if isinstance(f, (Add, Mul)):
        return frozenset((f.y1, f.y2, f.y3))
    if isinstance(f, Less):
        return frozenset((f.y1, f.y2))
    if isinstance(f, Member):
        return frozenset((f.y, f.set_var))
    if isinstance(f, (ExistsFirst, ForallFirst, ExistsSecond, ForallSecond)):
        return free_arith_vars(f.sub) - {f.var}
    out: frozenset[str] = frozenset()
    for c in _children(f):
        out |= free_arith_vars(c)
    return out


def arith_eval_bounded(f: Arith, n: int, bit_cap: int = 12) -> bool:
    """Evaluate with first-order quantifiers over 0..n and second-order
    quantifiers over subsets of 0..min(n, bit_cap).

    Exact for sentences whose quantifiers are semantically bounded below n.
    """
    if n < 1:
        raise ValueError("bound must be >= 1")
    cap = min(n, bit_cap)
    subsets = [frozenset(i for i in range(cap + 1) if mask >> i & 1)
               for mask in range(1 << (cap + 1))]

    def go(node: Arith, env: dict) -> bool:
        if isinstance(node, Add):
            return env[node.y1] + env[node.y2] == env[node.y3]
        if isinstance(node, Mul):
            return env[node.y1] * env[node.y2] == env[node.y3]
        if isinstance(node, Less):
            return env[node.y1] < env[node.y2]
        if isinstance(node, Member):
            return env[node.y] in env[node.set_var]
        if isinstance(node, Not):
            return not go(node.sub, env)
        if isinstance(node, Or):
            return go(node.left, env) or go(node.right, env)
        if isinstance(node, (ExistsFirst, ForallFirst)):
            vals = (go(node.sub, {**env, node.var: k}) for k in range(n + 1))
            return any(vals) if isinstance(node, ExistsFirst) else all(vals)
        if isinstance(node, (ExistsSecond, ForallSecond)):
            vals = (go(node.sub, {**env, node.var: s}) for s in subsets)
            return any(vals) if isinstance(node, ExistsSecond) else all(vals)
        raise TypeError(f"not a flat arithmetic node: {node!r}")

    return go(f, {})


# -- concrete syntax with nested terms ---------------------------------------


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class TConst:
    value: int


@dataclass(frozen=True)
class TPlus:
    left: object
    right: object


@dataclass(frozen=True)
class TTimes:
    left: object
    right: object


@dataclass(frozen=True)
class RawAtom:
    """Comparison over terms: kind is '=', '<', or 'in' (rhs then a set var)."""

    kind: str
    left: object
    right: object


@dataclass(frozen=True)
class RawNot:
    sub: object


@dataclass(frozen=True)
class RawOr:
    left: object
    right: object


@dataclass(frozen=True)
class RawQuant:
    kind: str  # exists-first, forall-first, exists-second, forall-second
    var: str
    sub: object


_ARITH_SYMBOLS = ("<->", "->", "!", "|", "&", "(", ")", ".", "<", "=", "+", "*")


def _is_set_var(name: str) -> bool:
    return name[0].isupper()


class _ArithParser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def error(self, msg: str):
        if self.pos < len(self.toks):
            _, v, line, col = self.toks[self.pos]
            raise ParseError(f"{msg}, found {v!r}", line, col)
        if self.toks:
            _, _, line, col = self.toks[-1]
            raise ParseError(f"{msg} at end of input", line, col)
        raise ParseError(msg, 1, 1)

    def peek(self):
        if self.pos < len(self.toks):
            kind, v, _, _ = self.toks[self.pos]
            return kind, v
        return None

    def take(self, value: str | None = None) -> str:
        nxt = self.peek()
        if nxt is None or (value is not None and nxt[1] != value):
            self.error(f"expected {value!r}" if value else "unexpected end of input")
        self.pos += 1
        return nxt[1]

    def parse(self):
        f = self.quantified()
        if self.peek() is not None:
            self.error("trailing input after sentence")
        return f

    def quantified(self):
        nxt = self.peek()
        if nxt is not None and nxt[0] == "id" and nxt[1] in ("forall", "exists"):
            kind = self.take()
            var_tok = self.peek()
            if var_tok is None or var_tok[0] != "id" or var_tok[1][0].isdigit():
                self.error("expected a variable name")
            var = self.take()
            self.take(".")
            body = self.quantified()
            order = "second" if _is_set_var(var) else "first"
            return RawQuant(f"{kind}-{order}", var, body)
        return self.iff()

    def iff(self):
        f = self.implies()
        while self.peek() == ("sym", "<->"):
            self.take()
            g = self.implies()
            f = RawNot(RawOr(RawNot(RawOr(RawNot(f), g)), RawNot(RawOr(RawNot(g), f))))
        return f

    def implies(self):
        f = self.disj()
        if self.peek() == ("sym", "->"):
            self.take()
            return RawOr(RawNot(f), self.implies())
        return f

    def disj(self):
        f = self.conj()
        while self.peek() == ("sym", "|"):
            self.take()
            f = RawOr(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek() == ("sym", "&"):
            self.take()
            g = self.unary()
            f = RawNot(RawOr(RawNot(f), RawNot(g)))
        return f

    def unary(self):
        if self.peek() == ("sym", "!"):
            self.take()
            return RawNot(self.unary())
        return self.primary()

    def primary(self):
        nxt = self.peek()
        if nxt == ("sym", "("):
            # either a parenthesized formula or a parenthesized term
            save = self.pos
            try:
                self.take("(")
                f = self.quantified()
                self.take(")")
                if self.peek() is not None and self.peek()[1] in ("=", "<", "+", "*", "in"):
                    raise ParseError("term context", 1, 1)
                return f
            except ParseError:
                self.pos = save
                return self.comparison()
        return self.comparison()

    def comparison(self):
        left = self.term()
        nxt = self.peek()
        if nxt == ("sym", "="):
            self.take()
            return RawAtom("=", left, self.term())
        if nxt == ("sym", "<"):
            self.take()
            return RawAtom("<", left, self.term())
        if nxt == ("id", "in"):
            self.take()
            sv = self.peek()
            if sv is None or sv[0] != "id" or not _is_set_var(sv[1]):
                self.error("expected a second-order (upper-case) variable after 'in'")
            self.take()
            return RawAtom("in", left, sv[1])
        self.error("expected '=', '<' or 'in' after a term")

    def term(self):
        f = self.factor()
        while self.peek() == ("sym", "+"):
            self.take()
            f = TPlus(f, self.factor())
        return f

    def factor(self):
        f = self.prim()
        while self.peek() == ("sym", "*"):
            self.take()
            f = TTimes(f, self.prim())
        return f

    def prim(self):
        nxt = self.peek()
        if nxt == ("sym", "("):
            self.take()
            t = self.term()
            self.take(")")
            return t
        if nxt is not None and nxt[0] == "id":
            tok = self.take()
            if tok.isdigit():
                return TConst(int(tok))
            if _is_set_var(tok):
                self.error(f"second-order variable {tok!r} cannot appear in a term")
            return TVar(tok)
        self.error("expected a term")


def parse_arith(text: str):
    """Parse the nested-term concrete syntax into a raw tree (see flatten)."""
    return _ArithParser(tokenize(text, _ARITH_SYMBOLS)).parse()


class _Flattener:
    # each fresh variable carries its defining conjuncts; the quantifier is
    # wrapped right around them so exhaustive evaluation prunes level by level
    def __init__(self, taken: set[str]):
        self.taken = taken
        self.counter = 0

    def fresh(self) -> str:
        while True:
            name = f"t{self.counter}"
            self.counter += 1
            if name not in self.taken:
                self.taken.add(name)
                return name

    def term(self, t, bindings: list[tuple[str, list[Arith]]]) -> str:
        if isinstance(t, TVar):
            return t.name
        if isinstance(t, TConst):
            return self.constant(t.value, bindings)
        left = self.term(t.left, bindings)
        right = self.term(t.right, bindings)
        v = self.fresh()
        bindings.append((v, [(Add if isinstance(t, TPlus) else Mul)(left, right, v)]))
        return v

    def constant(self, k: int, bindings: list[tuple[str, list[Arith]]]) -> str:
        # 0 is the unique additive idempotent, 1 the other multiplicative one;
        # larger constants are built by repeated addition of 1
        if k == 0:
            v = self.fresh()
            bindings.append((v, [Add(v, v, v)]))
            return v
        one = self.fresh()
        bindings.append((one, [Mul(one, one, one), Not(Add(one, one, one))]))
        prev = one
        for _ in range(k - 1):
            nxt = self.fresh()
            bindings.append((nxt, [Add(prev, one, nxt)]))
            prev = nxt
        return prev

    def atom(self, raw: RawAtom) -> Arith:
        bindings: list[tuple[str, list[Arith]]] = []
        if raw.kind == "in":
            v = self.term(raw.left, bindings)
            core: Arith = Member(v, raw.right)
        elif raw.kind == "<":
            v1 = self.term(raw.left, bindings)
            v2 = self.term(raw.right, bindings)
            core = Less(v1, v2)
        else:
            core = self.equation(raw.left, raw.right, bindings)
        for v, defs in reversed(bindings):
            for d in reversed(defs):
                core = a_and(d, core)
            core = ExistsFirst(v, core)
        return core

    def equation(self, left, right, bindings) -> Arith:
        if not isinstance(left, (TPlus, TTimes)) and isinstance(right, (TPlus, TTimes)):
            left, right = right, left
        if isinstance(left, (TPlus, TTimes)):
            a = self.term(left.left, bindings)
            b = self.term(left.right, bindings)
            c = self.term(right, bindings)
            return (Add if isinstance(left, TPlus) else Mul)(a, b, c)
        v1 = self.term(left, bindings)
        v2 = self.term(right, bindings)
        # v1 = v2 as mutual non-strictness of <
        return Not(Or(Less(v1, v2), Less(v2, v1)))


def _raw_vars(raw) -> set[str]:
    out: set[str] = set()

    def term_vars(t) -> None:
        if isinstance(t, TVar):
            out.add(t.name)
        elif isinstance(t, (TPlus, TTimes)):
            term_vars(t.left)
            term_vars(t.right)

    def walk(n) -> None:
        if isinstance(n, RawAtom):
            term_vars(n.left)
            if n.kind == "in":
                out.add(n.right)
            else:
                term_vars(n.right)
        elif isinstance(n, RawNot):
            walk(n.sub)
        elif isinstance(n, RawOr):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, RawQuant):
            out.add(n.var)
            walk(n.sub)

    walk(raw)
    return out


def flatten(raw) -> Arith:
    """Rewrite a raw nested-term tree so every atom is one of the four flat
    forms, introducing fresh existentially quantified first-order variables."""
    fl = _Flattener(_raw_vars(raw))

    def walk(n) -> Arith:
        if isinstance(n, RawAtom):
            return fl.atom(n)
        if isinstance(n, RawNot):
            return Not(walk(n.sub))
        if isinstance(n, RawOr):
            return Or(walk(n.left), walk(n.right))
        if isinstance(n, RawQuant):
            node = {"exists-first": ExistsFirst, "forall-first": ForallFirst,
                    "exists-second": ExistsSecond, "forall-second": ForallSecond}[n.kind]
            return node(n.var, walk(n.sub))
        raise TypeError(f"not a raw arithmetic node: {n!r}")

    return walk(raw)


# -- compilers ----------------------------------------------------------------


def dealias(f: Arith) -> Arith:
    """Split repeated variables out of addition/multiplication atoms.

    The trace gadgets drive the three atom coordinates through different
    context/stutter phases, which degenerates when two of them share a trace
    variable (e.g. the idempotence atoms the constant encoding produces).
    Fresh variables pinned by order-based equality restore the precondition;
    comparison and membership atoms are alias-safe.
    """
    taken = set(first_order_vars(f)) | set(second_order_vars(f))
    counter = 0

    def fresh() -> str:
        nonlocal counter
        while True:
            name = f"u{counter}"
            counter += 1
            if name not in taken:
                taken.add(name)
                return name

    def split(node: Arith) -> Arith:
        ys = [node.y1, node.y2, node.y3]
        seen: set[str] = set()
        renamed: list[str] = []
        eqs: list[tuple[str, str]] = []
        for y in ys:
            if y in seen:
                u = fresh()
                eqs.append((u, y))
                renamed.append(u)
            else:
                seen.add(y)
                renamed.append(y)
        if not eqs:
            return node
        core: Arith = type(node)(*renamed)
        for u, y in reversed(eqs):
            same = Not(Or(Less(u, y), Less(y, u)))
            core = ExistsFirst(u, a_and(same, core))
        return core

    def walk(node: Arith) -> Arith:
        if isinstance(node, (Add, Mul)):
            return split(node)
        if isinstance(node, (Less, Member)):
            return node
        if isinstance(node, Not):
            return Not(walk(node.sub))
        if isinstance(node, Or):
            return Or(walk(node.left), walk(node.right))
        if isinstance(node, (ExistsFirst, ForallFirst, ExistsSecond, ForallSecond)):
            return type(node)(node.var, walk(node.sub))
        raise TypeError(f"not a flat arithmetic node: {node!r}")

    return walk(f)


@dataclass(frozen=True)
class CompiledArtifact:
    system: TransitionSystem
    sentence: hy.Hyper
    encoding: str
    var_map: dict[str, str]


@dataclass(frozen=True)
class PeriodicWitnessSpec:
    """Blueprint of a multiplication witness trace: dollar blocks of the given
    period, optionally unioned with a single marker."""

    period: int
    marker_pos: int | None = None

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError("period must be >= 1")

    def build(self, dollar: str, marker_prop: str | None = None) -> LassoTrace:
        base = LassoTrace(frozenset({dollar}), (),
                          (frozenset({dollar}),) * self.period + (frozenset(),) * self.period)
        if self.marker_pos is None:
            return base
        if marker_prop is None:
            raise ValueError("marker_pos set but no marker_prop given")
        return pointwise_union(base, spike_trace((), marker_prop, self.marker_pos))


def _full_shift_ts(components: list[tuple[str, frozenset[str]]]) -> TransitionSystem:
    """Disjoint fully connected components, one per alphabet; realizes the
    union of the full shift spaces over the given alphabets."""
    ap: set[str] = set()
    vertices: list[str] = []
    edges: set[tuple[str, str]] = set()
    labels: dict[str, frozenset[str]] = {}
    for comp_id, alphabet in components:
        ap |= alphabet
        subsets = [frozenset(c) for n in range(len(alphabet) + 1)
                   for c in itertools.combinations(sorted(alphabet), n)]
        ids = [f"{comp_id}{k}" for k in range(len(subsets))]
        for vid, letter in zip(ids, subsets):
            vertices.append(vid)
            labels[vid] = letter
        edges.update((a, b) for a in ids for b in ids)
    return TransitionSystem(frozenset(ap), tuple(vertices), frozenset(edges),
                            frozenset(vertices), labels)


def _singleton_shape(var: str, prop: str) -> hy.Hyper:
    at = hy.Atom(prop, var)
    return hy.Until(EMPTY_GAMMA, hy.Not(at),
                    hy.h_and(at, hy.Next(EMPTY_GAMMA, hy.alw(EMPTY_GAMMA, hy.Not(at)))))


def _purity(var: str, allowed: str, ap: Iterable[str]) -> hy.Hyper:
    banned = sorted(set(ap) - {allowed})
    return hy.alw(EMPTY_GAMMA, hy.h_all([hy.Not(hy.Atom(p, var)) for p in banned]))


class _StutterCompiler:
    """hyp(.) into the stuttering fragment over {hash} + per-variable markers
    + {dlr, dlrp}."""

    def __init__(self, v1: Iterable[str]):
        self.v1 = sorted(set(v1))
        self.ap = frozenset({HASH, DLR, DLRP} | {num_prop(y) for y in self.v1})
        self._fresh = 0
        self.var_map: dict[str, str] = {}

    def fresh(self) -> str:
        name = f"w{self._fresh}"
        self._fresh += 1
        return name

    def compile(self, f: Arith) -> hy.Hyper:
        if isinstance(f, ExistsSecond):
            self.var_map[f.var] = trace_var(f.var)
            return hy.Exists(trace_var(f.var),
                             hy.h_and(_purity(trace_var(f.var), HASH, self.ap),
                                      self.compile(f.sub)))
        if isinstance(f, ForallSecond):
            self.var_map[f.var] = trace_var(f.var)
            return hy.Forall(trace_var(f.var),
                             hy.h_implies(_purity(trace_var(f.var), HASH, self.ap),
                                          self.compile(f.sub)))
        if isinstance(f, (ExistsFirst, ForallFirst)):
            self.var_map[f.var] = trace_var(f.var)
            xv = trace_var(f.var)
            guard = hy.h_and(_purity(xv, num_prop(f.var), self.ap),
                             _singleton_shape(xv, num_prop(f.var)))
            if isinstance(f, ExistsFirst):
                return hy.Exists(xv, hy.h_and(guard, self.compile(f.sub)))
            return hy.Forall(xv, hy.h_implies(guard, self.compile(f.sub)))
        if isinstance(f, Not):
            return hy.Not(self.compile(f.sub))
        if isinstance(f, Or):
            return hy.Or(self.compile(f.left), self.compile(f.right))
        if isinstance(f, Member):
            return hy.ev(EMPTY_GAMMA, hy.h_and(
                hy.Atom(num_prop(f.y), trace_var(f.y)),
                hy.Atom(HASH, trace_var(f.set_var))))
        if isinstance(f, Less):
            return hy.ev(EMPTY_GAMMA, hy.h_and(
                hy.Atom(num_prop(f.y1), trace_var(f.y1)),
                hy.Next(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA,
                                           hy.Atom(num_prop(f.y2), trace_var(f.y2))))))
        if isinstance(f, Add):
            return self.hyp_add(f.y1, f.y2, f.y3)
        if isinstance(f, Mul):
            return self.hyp_mul(f.y1, f.y2, f.y3)
        raise TypeError(f"not a flat arithmetic node: {f!r}")

    def hyp_add(self, y1: str, y2: str, y3: str) -> hy.Hyper:
        a1 = hy.Atom(num_prop(y1), trace_var(y1))
        a2 = hy.Atom(num_prop(y2), trace_var(y2))
        a3 = hy.Atom(num_prop(y3), trace_var(y3))
        w = self.fresh()
        match = hy.h_and(
            hy.alw(EMPTY_GAMMA, hy.h_iff(a2, hy.Atom(num_prop(y2), w))),
            hy.alw(EMPTY_GAMMA, hy.h_iff(a3, hy.Atom(num_prop(y3), w))))
        step2 = frozenset({pl.Atom(num_prop(y2))})
        alpha_add = hy.Exists(w, hy.h_and(match, hy.Next(step2, hy.ev(
            EMPTY_GAMMA,
            hy.h_and(a1, hy.Next(EMPTY_GAMMA, hy.Atom(num_prop(y3), w)))))))
        return hy.h_any([
            hy.h_and(a1, hy.ev(EMPTY_GAMMA, hy.h_and(a2, a3))),
            hy.h_and(a2, hy.ev(EMPTY_GAMMA, hy.h_and(a1, a3))),
            hy.h_all([hy.Not(a1), hy.Not(a2), alpha_add]),
        ])

    def alpha_periodic(self, w: str, wp: str, y3: str) -> hy.Hyper:
        """alpha1 and alpha2 and alpha3: w is a dollar-block trace (plus a
        y3-marker layer), wp its primed twin, and the blocks all have equal
        length."""
        dw = hy.Atom(DLR, w)
        dp = hy.Atom(DLRP, wp)
        alpha1 = hy.h_all([
            dw,
            hy.alw(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, dw)),
            hy.alw(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, hy.Not(dw))),
            hy.alw(EMPTY_GAMMA, hy.h_all(
                [hy.Not(hy.Atom(p, w)) for p in sorted(self.ap - {DLR, num_prop(y3)})])),
            dp,
            hy.alw(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, dp)),
            hy.alw(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, hy.Not(dp))),
            hy.alw(EMPTY_GAMMA, hy.h_all(
                [hy.Not(hy.Atom(p, wp)) for p in sorted(self.ap - {DLRP})])),
        ])
        alpha2 = hy.alw(EMPTY_GAMMA, hy.h_iff(dw, dp))
        both = frozenset({pl.Atom(DLR), pl.Atom(DLRP)})
        primed = frozenset({pl.Atom(DLRP)})
        alpha3 = hy.alw(both, hy.h_and(
            hy.h_implies(dw, hy.Next(primed, hy.Until(
                EMPTY_GAMMA, hy.h_and(dw, hy.Not(dp)),
                hy.h_all([hy.Not(dw), hy.Not(dp), hy.Next(EMPTY_GAMMA, dp)])))),
            hy.h_implies(hy.Not(dw), hy.Next(primed, hy.Until(
                EMPTY_GAMMA, hy.h_and(hy.Not(dw), dp),
                hy.h_all([dw, dp, hy.Next(EMPTY_GAMMA, hy.Not(dp))]))))))
        return hy.h_all([alpha1, alpha2, alpha3])

    def hyp_mul(self, y1: str, y2: str, y3: str) -> hy.Hyper:
        a1 = hy.Atom(num_prop(y1), trace_var(y1))
        a2 = hy.Atom(num_prop(y2), trace_var(y2))
        a3 = hy.Atom(num_prop(y3), trace_var(y3))
        w = self.fresh()
        wp = self.fresh()
        dw = hy.Atom(DLR, w)
        dollar = frozenset({pl.Atom(DLR)})
        alpha_mult = hy.Exists(w, hy.Exists(wp, hy.h_all([
            self.alpha_periodic(w, wp, y3),
            hy.Until(EMPTY_GAMMA, dw, hy.h_and(hy.Not(dw), a1)),
            hy.alw(EMPTY_GAMMA, hy.h_iff(a3, hy.Atom(num_prop(y3), w))),
            hy.ev(dollar, hy.h_and(a2, hy.Atom(num_prop(y3), w))),
        ])))
        return hy.h_any([
            hy.h_and(a1, a3),
            hy.h_and(a2, a3),
            hy.h_all([hy.Not(a1), hy.Not(a2), alpha_mult]),
        ])

    def system(self) -> TransitionSystem:
        components = [("set", frozenset({HASH}))]
        components += [(f"num_{y}_", frozenset({num_prop(y), DLR})) for y in self.v1]
        components.append(("aux", frozenset({DLRP})))
        return _full_shift_ts(components)


class _ContextCompiler:
    """hyp(.) into the context fragment over {hash, dlr}."""

    def __init__(self, strict_fidelity: bool = False):
        self.ap = frozenset({HASH, DLR})
        self.strict_fidelity = strict_fidelity
        self._fresh = 0
        self.var_map: dict[str, str] = {}

    def fresh(self) -> str:
        name = f"w{self._fresh}"
        self._fresh += 1
        return name

    def compile(self, f: Arith) -> hy.Hyper:
        if isinstance(f, (ExistsSecond, ForallSecond)):
            self.var_map[f.var] = trace_var(f.var)
            xv = trace_var(f.var)
            guard = hy.alw(EMPTY_GAMMA, hy.Not(hy.Atom(DLR, xv)))
            if isinstance(f, ExistsSecond):
                return hy.Exists(xv, hy.h_and(guard, self.compile(f.sub)))
            return hy.Forall(xv, hy.h_implies(guard, self.compile(f.sub)))
        if isinstance(f, (ExistsFirst, ForallFirst)):
            self.var_map[f.var] = trace_var(f.var)
            xv = trace_var(f.var)
            guard = hy.h_and(hy.alw(EMPTY_GAMMA, hy.Not(hy.Atom(DLR, xv))),
                             _singleton_shape(xv, HASH))
            if isinstance(f, ExistsFirst):
                return hy.Exists(xv, hy.h_and(guard, self.compile(f.sub)))
            return hy.Forall(xv, hy.h_implies(guard, self.compile(f.sub)))
        if isinstance(f, Not):
            return hy.Not(self.compile(f.sub))
        if isinstance(f, Or):
            return hy.Or(self.compile(f.left), self.compile(f.right))
        if isinstance(f, Member):
            return hy.ev(EMPTY_GAMMA, hy.h_and(hy.Atom(HASH, trace_var(f.y)),
                                               hy.Atom(HASH, trace_var(f.set_var))))
        if isinstance(f, Less):
            return hy.ev(EMPTY_GAMMA, hy.h_and(
                hy.Atom(HASH, trace_var(f.y1)),
                hy.Next(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, hy.Atom(HASH, trace_var(f.y2))))))
        if isinstance(f, Add):
            return self.hyp_add(f.y1, f.y2, f.y3)
        if isinstance(f, Mul):
            return self.hyp_mul(f.y1, f.y2, f.y3)
        raise TypeError(f"not a flat arithmetic node: {f!r}")

    def hyp_add(self, y1: str, y2: str, y3: str) -> hy.Hyper:
        x1, x2, x3 = trace_var(y1), trace_var(y2), trace_var(y3)
        inner = hy.Context(frozenset({x2, x3}), hy.ev(EMPTY_GAMMA, hy.h_and(
            hy.Atom(HASH, x2), hy.Atom(HASH, x3))))
        return hy.Context(frozenset({x1, x3}), hy.ev(EMPTY_GAMMA, hy.h_and(
            hy.Atom(HASH, x1), inner)))

    def alpha_per(self, w: str, wp: str) -> hy.Hyper:
        dw = hy.Atom(DLR, w)
        dp = hy.Atom(DLR, wp)
        alpha1 = hy.h_all([
            dw, hy.alw(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, dw)),
            hy.alw(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, hy.Not(dw))),
            hy.alw(EMPTY_GAMMA, hy.Not(hy.Atom(HASH, w))),
            dp, hy.alw(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, dp)),
            hy.alw(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, hy.Not(dp))),
            hy.alw(EMPTY_GAMMA, hy.Not(hy.Atom(HASH, wp))),
        ])
        alpha2 = hy.alw(EMPTY_GAMMA, hy.h_iff(dw, dp))
        alpha3 = hy.Context(frozenset({w}), hy.Until(
            EMPTY_GAMMA, dw,
            hy.h_and(hy.Not(dw),
                     hy.Context(frozenset({w, wp}),
                                hy.alw(EMPTY_GAMMA, hy.h_iff(dw, hy.Not(dp)))))))
        return hy.h_all([alpha1, alpha2, alpha3])

    def _psi_mult(self, ya: str, yb: str, y3: str) -> tuple[hy.Hyper, hy.Hyper]:
        """Premise and conclusion for the case 0 < n_a <= n_b with n_b >= 2."""
        xa, xb, x3 = trace_var(ya), trace_var(yb), trace_var(y3)
        ha, hb, h3 = hy.Atom(HASH, xa), hy.Atom(HASH, xb), hy.Atom(HASH, x3)
        premise = hy.h_and(
            hy.Next(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, hy.h_and(ha, hy.ev(EMPTY_GAMMA, hb)))),
            hy.Next(EMPTY_GAMMA, hy.Next(EMPTY_GAMMA, hy.ev(EMPTY_GAMMA, hb))))
        w0, w0p, w1, w1p = (self.fresh() for _ in range(4))
        d0, d1 = hy.Atom(DLR, w0), hy.Atom(DLR, w1)
        algn = hy.h_and(
            hy.h_iff(d0, hy.Not(hy.Next(EMPTY_GAMMA, d0))),
            hy.h_iff(d1, hy.Not(hy.Next(EMPTY_GAMMA, d1))))
        chase = hy.Context(frozenset({xa, x3, w0}), hy.ev(EMPTY_GAMMA, hy.h_and(
            ha,
            hy.Context(frozenset({x3, w0, w1}), hy.Until(
                EMPTY_GAMMA, hy.Not(algn),
                hy.h_and(algn, hy.Next(EMPTY_GAMMA, h3)))))))
        conclusion = hy.Exists(w0, hy.Exists(w0p, hy.Exists(w1, hy.Exists(w1p, hy.h_all([
            self.alpha_per(w0, w0p),
            self.alpha_per(w1, w1p),
            hy.Until(EMPTY_GAMMA, d0, hy.h_and(hy.Not(d0), hb)),
            hy.Until(EMPTY_GAMMA, d1, hy.h_and(hy.Not(d1), hy.Next(EMPTY_GAMMA, hb))),
            chase,
        ])))))
        return premise, conclusion

    def hyp_mul(self, y1: str, y2: str, y3: str) -> hy.Hyper:
        x1, x2, x3 = trace_var(y1), trace_var(y2), trace_var(y3)
        h1, h2, h3 = hy.Atom(HASH, x1), hy.Atom(HASH, x2), hy.Atom(HASH, x3)
        psi1 = hy.h_and(hy.Or(h1, h2), h3)
        psi2 = hy.Next(EMPTY_GAMMA, hy.h_all([h1, h2, h3]))
        prem3, concl3 = self._psi_mult(y1, y2, y3)
        prem4, concl4 = self._psi_mult(y2, y1, y3)
        join = hy.h_implies if self.strict_fidelity else hy.h_and
        return hy.h_any([psi1, psi2, join(prem3, concl3), join(prem4, concl4)])

    def system(self) -> TransitionSystem:
        return _full_shift_ts([("set", frozenset({HASH})), ("aux", frozenset({DLR}))])


def _require_closed_flat(f: Arith) -> None:
    if not isinstance(f, Arith):
        raise TypeError("expected a flat arithmetic sentence; run flatten first")
    if free_arith_vars(f):
        raise ValueError(f"sentence must be closed; free variables {sorted(free_arith_vars(f))}")


def compile_stutter(f: Arith) -> CompiledArtifact:
    """Compile a closed, flat sentence into the stuttering fragment plus its
    witness transition system."""
    _require_closed_flat(f)
    f = dealias(f)
    comp = _StutterCompiler(first_order_vars(f))
    sentence = comp.compile(f)
    return CompiledArtifact(comp.system(), sentence, "stutter", dict(comp.var_map))


def compile_context(f: Arith, strict_fidelity: bool = False) -> CompiledArtifact:
    """Compile a closed, flat sentence into the context fragment plus its
    witness transition system.

    By default the two conditional multiplication cases are emitted as
    guard-conjunctions; strict_fidelity keeps them as bare implications,
    which validates wrong products whenever a premise is vacuously false.
    """
    _require_closed_flat(f)
    f = dealias(f)
    comp = _ContextCompiler(strict_fidelity)
    sentence = comp.compile(f)
    return CompiledArtifact(comp.system(), sentence, "context", dict(comp.var_map))


# -- gadget verification ------------------------------------------------------


class GadgetBoundError(ValueError):
    pass


@dataclass(frozen=True)
class GadgetBounds:
    max_period: int
    max_marker: int


_GADGET_VARS = ("y1", "y2", "y3")


def gadget_formula(relation: str, encoding: str, strict_fidelity: bool = False) -> hy.Hyper:
    """The compiled atom formula for y1 (+|*) y2 = y3, with free trace
    variables x_y1, x_y2, x_y3."""
    if encoding == "stutter":
        comp = _StutterCompiler(_GADGET_VARS)
        return comp.hyp_add(*_GADGET_VARS) if relation == "add" else comp.hyp_mul(*_GADGET_VARS)
    if encoding == "context":
        ccomp = _ContextCompiler(strict_fidelity)
        return ccomp.hyp_add(*_GADGET_VARS) if relation == "add" else ccomp.hyp_mul(*_GADGET_VARS)
    raise ValueError(f"unknown encoding {encoding!r}")


def gadget_assignment(encoding: str, n1: int, n2: int, n3: int) -> dict[str, PointedTrace]:
    values = dict(zip(_GADGET_VARS, (n1, n2, n3)))
    out = {}
    for y, n in values.items():
        prop = num_prop(y) if encoding == "stutter" else HASH
        out[trace_var(y)] = PointedTrace(spike_trace((), prop, n), 0)
    return out


def gadget_universe(relation: str, encoding: str, n1: int, n2: int, n3: int,
                    extra_family: bool = True) -> list[LassoTrace]:
    """Constructed witness traces plus a small enumerated family of decoys."""
    traces: list[LassoTrace] = []
    if encoding == "stutter":
        if relation == "add":
            traces.append(pointwise_union(spike_trace((), num_prop("y2"), n2),
                                          spike_trace((), num_prop("y3"), n3)))
            if n1 + n2 != n3:
                traces.append(pointwise_union(spike_trace((), num_prop("y2"), n2),
                                              spike_trace((), num_prop("y3"), n1 + n2)))
        else:
            for period in {n1, n2} - {0}:
                traces.append(PeriodicWitnessSpec(period, n3).build(DLR, num_prop("y3")))
                traces.append(PeriodicWitnessSpec(period).build(DLRP))
                if n1 * n2 != n3:
                    traces.append(PeriodicWitnessSpec(period, n1 * n2).build(DLR, num_prop("y3")))
    else:
        periods = {n1, n1 - 1, n2, n2 - 1} - {0, -1}
        for period in sorted(periods):
            traces.append(PeriodicWitnessSpec(period).build(DLR))
    if extra_family:
        dollar = DLR
        traces.append(LassoTrace(frozenset({dollar}), (), (frozenset(),)))
        traces.append(LassoTrace(frozenset({dollar}), (), (frozenset({dollar}),)))
        traces.append(LassoTrace(frozenset({dollar}), (), (frozenset({dollar}), frozenset())))
        if encoding == "stutter":
            traces.append(spike_trace((), num_prop("y3"), 0))
            traces.append(PeriodicWitnessSpec(1).build(DLRP))
        else:
            traces.append(spike_trace((), HASH, 0))
    # deduplicate by value, preserving order
    seen: set[LassoTrace] = set()
    out = []
    for t in traces:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def verify_gadget(relation: str, n1: int, n2: int, n3: int, encoding: str,
                  bounds: GadgetBounds | None = None,
                  cfg: EvalConfig | None = None,
                  strict_fidelity: bool = False,
                  extra_family: bool = True) -> bool:
    """Evaluate the compiled addition/multiplication gadget on directly
    constructed witness traces; True iff the gadget accepts (n1, n2, n3)."""
    if relation not in ("add", "mul"):
        raise ValueError(f"unknown relation {relation!r}")
    if min(n1, n2, n3) < 0:
        raise ValueError("gadget arguments must be nonnegative")
    need_period = max(n1, n2, 1)
    need_marker = max(n1, n2, n3, n1 * n2 + n1)
    if bounds is None:
        bounds = GadgetBounds(need_period, need_marker)
    if bounds.max_period < need_period or bounds.max_marker < need_marker:
        raise GadgetBoundError(
            f"bounds {bounds} cannot contain the constructed witnesses "
            f"(need period {need_period}, marker {need_marker})")
    formula = gadget_formula(relation, encoding, strict_fidelity)
    assignment = gadget_assignment(encoding, n1, n2, n3)
    universe = gadget_universe(relation, encoding, n1, n2, n3, extra_family)
    context = hy.all_vars(formula) | set(assignment)
    verdict = evaluate(universe, assignment, context, formula,
                       cfg or EvalConfig())
    if verdict.is_unknown:
        raise GadgetBoundError(f"gadget evaluation hit a bound: {verdict.reason}")
    return verdict.is_holds


def witness_universe(f: Arith, encoding: str, value_bound: int,
                     set_cap: int = 8) -> list[LassoTrace]:
    """A quantifier universe rich enough for sentences whose first-order
    values stay at or below value_bound."""
    f = dealias(f)
    atoms = [n for n in _postorder_arith(f) if isinstance(n, (Add, Mul, Less, Member))]
    traces: list[LassoTrace] = []
    if encoding == "stutter":
        for y in sorted(first_order_vars(f)):
            for n in range(value_bound + 1):
                traces.append(spike_trace((), num_prop(y), n))
        for atom in atoms:
            if isinstance(atom, Add):
                if atom.y2 == atom.y3:
                    # both marker layers coincide, so plain spikes serve as x
                    for b in range(value_bound + 1):
                        traces.append(spike_trace((), num_prop(atom.y2), b))
                    continue
                for b in range(value_bound + 1):
                    for c in range(value_bound + 1):
                        traces.append(pointwise_union(
                            spike_trace((), num_prop(atom.y2), b),
                            spike_trace((), num_prop(atom.y3), c)))
            elif isinstance(atom, Mul):
                for p in range(1, value_bound + 1):
                    for c in range(value_bound + 1):
                        traces.append(PeriodicWitnessSpec(p, c).build(DLR, num_prop(atom.y3)))
                    traces.append(PeriodicWitnessSpec(p).build(DLRP))
    else:
        for n in range(value_bound + 1):
            traces.append(spike_trace((), HASH, n))
        if any(isinstance(a, Mul) for a in atoms):
            for p in range(1, value_bound + 1):
                traces.append(PeriodicWitnessSpec(p).build(DLR))
    if second_order_vars(f):
        cap = min(value_bound, set_cap)
        for mask in range(1 << (cap + 1)):
            members = [i for i in range(cap + 1) if mask >> i & 1]
            if not members:
                traces.append(LassoTrace(frozenset({HASH}), (), (frozenset(),)))
                continue
            prefix = tuple(frozenset({HASH}) if i in members else frozenset()
                           for i in range(max(members) + 1))
            traces.append(LassoTrace(frozenset({HASH}), prefix, (frozenset(),)))
    seen: set[LassoTrace] = set()
    out = []
    for t in traces:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def _postorder_arith(f: Arith) -> list[Arith]:
    out: list[Arith] = []

    def walk(n: Arith) -> None:
        for c in _children(n):
            walk(c)
        out.append(n)

    walk(f)
    return out


def alpha_per_context(x: str, xp: str) -> hy.Hyper:
    """The context-encoding periodicity conjunction for the pair (x, xp)."""
    return _ContextCompiler().alpha_per(x, xp)


def alpha_per_stutter(x: str, xp: str, y3: str = "y3") -> hy.Hyper:
    """The stuttering-encoding periodicity conjunction for the pair (x, xp)."""
    return _StutterCompiler(_GADGET_VARS).alpha_periodic(x, xp, y3)


def minimal_block_ratio(n1: int, n2: int) -> int:
    """Least z >= 1 with z*(n2-1) = zp*n2 - n1 for some zp >= 1; the crux of
    the context multiplication gadget."""
    if not (1 <= n1 <= n2 and n2 >= 2):
        raise ValueError("requires 1 <= n1 <= n2 and n2 >= 2")
    z = 1
    while True:
        if (z * (n2 - 1) + n1) % n2 == 0 and (z * (n2 - 1) + n1) // n2 >= 1:
            return z
        z += 1
