"""LTL with past (PLTL) over lasso traces.

Core connectives are atom, not, or, next, until, yesterday, since; everything
else (and, implies, iff, F, G, O, H, true, false) is expanded at construction
time.  Evaluation goes through valuation profiles: a finite threshold/period
description of the truth values of a formula along an ultimately periodic
trace, computed compositionally (future operators by fixpoint on the lasso,
past operators by a forward pass until its carried state repeats).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .traces import LassoTrace


class Pltl:
    """Base class for PLTL AST nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Pltl):
    name: str


@dataclass(frozen=True)
class Not(Pltl):
    sub: Pltl


@dataclass(frozen=True)
class Or(Pltl):
    left: Pltl
    right: Pltl


@dataclass(frozen=True)
class Next(Pltl):
    sub: Pltl


@dataclass(frozen=True)
class Until(Pltl):
    left: Pltl
    right: Pltl


@dataclass(frozen=True)
class Yesterday(Pltl):
    sub: Pltl


@dataclass(frozen=True)
class Since(Pltl):
    left: Pltl
    right: Pltl


def tautology_over(f: Pltl) -> Pltl:
    """A tautology built from f itself, so no proposition universe is needed."""
    return Or(f, Not(f))


def p_and(a: Pltl, b: Pltl) -> Pltl:
    return Not(Or(Not(a), Not(b)))


def p_implies(a: Pltl, b: Pltl) -> Pltl:
    return Or(Not(a), b)


def p_iff(a: Pltl, b: Pltl) -> Pltl:
    return p_and(p_implies(a, b), p_implies(b, a))


def eventually(f: Pltl) -> Pltl:
    return Until(tautology_over(f), f)


def always(f: Pltl) -> Pltl:
    return Not(eventually(Not(f)))


def once(f: Pltl) -> Pltl:
    return Since(tautology_over(f), f)


def historically(f: Pltl) -> Pltl:
    return Not(once(Not(f)))


def true_over(prop: str) -> Pltl:
    return tautology_over(Atom(prop))


def false_over(prop: str) -> Pltl:
    return Not(true_over(prop))


def atoms(f: Pltl) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset({f.name})
    if isinstance(f, (Not, Next, Yesterday)):
        return atoms(f.sub)
    return atoms(f.left) | atoms(f.right)


def is_past_free(f: Pltl) -> bool:
    if isinstance(f, (Yesterday, Since)):
        return False
    if isinstance(f, Atom):
        return True
    if isinstance(f, (Not, Next)):
        return is_past_free(f.sub)
    return is_past_free(f.left) and is_past_free(f.right)


def depth(f: Pltl) -> int:
    if isinstance(f, Atom):
        return 0
    if isinstance(f, (Not, Next, Yesterday)):
        return 1 + depth(f.sub)
    return 1 + max(depth(f.left), depth(f.right))


# -- valuation profiles -------------------------------------------------------


@dataclass(frozen=True)
class ValuationProfile:
    """Truth values of a formula along a trace: exact bits below ``threshold``,
    then periodic with the given period."""

    formula: Pltl
    trace: LassoTrace
    threshold: int
    period: int
    bits: tuple[bool, ...]

    def value(self, i: int) -> bool:
        if i < self.threshold:
            return self.bits[i]
        return self.bits[self.threshold + ((i - self.threshold) % self.period)]


_profile_memo: dict[tuple[LassoTrace, Pltl], ValuationProfile] = {}


def valuation_profile(trace: LassoTrace, f: Pltl) -> ValuationProfile:
    """Compute (and memoize) the ultimately periodic valuation of f on trace."""
    key = (trace, f)
    hit = _profile_memo.get(key)
    if hit is not None:
        return hit
    prof = _compute_profile(trace, f)
    _profile_memo[key] = prof
    return prof


def _make(trace: LassoTrace, f: Pltl, threshold: int, period: int, value) -> ValuationProfile:
    bits = tuple(bool(value(i)) for i in range(threshold + period))
    return ValuationProfile(f, trace, threshold, period, bits)


def _compute_profile(trace: LassoTrace, f: Pltl) -> ValuationProfile:
    if isinstance(f, Atom):
        t, l = len(trace.prefix), len(trace.loop)
        return _make(trace, f, t, l, lambda i: f.name in trace.letter(i))
    if isinstance(f, Not):
        p = valuation_profile(trace, f.sub)
        return _make(trace, f, p.threshold, p.period, lambda i: not p.value(i))
    if isinstance(f, Or):
        a = valuation_profile(trace, f.left)
        b = valuation_profile(trace, f.right)
        t = max(a.threshold, b.threshold)
        l = math.lcm(a.period, b.period)
        return _make(trace, f, t, l, lambda i: a.value(i) or b.value(i))
    if isinstance(f, Next):
        p = valuation_profile(trace, f.sub)
        return _make(trace, f, max(p.threshold - 1, 0), p.period, lambda i: p.value(i + 1))
    if isinstance(f, Yesterday):
        p = valuation_profile(trace, f.sub)
        return _make(trace, f, p.threshold + 1, p.period,
                     lambda i: i > 0 and p.value(i - 1))
    if isinstance(f, Until):
        return _until_profile(trace, f)
    if isinstance(f, Since):
        return _since_profile(trace, f)
    raise TypeError(f"not a PLTL node: {f!r}")


def _until_profile(trace: LassoTrace, f: Until) -> ValuationProfile:
    a = valuation_profile(trace, f.left)
    b = valuation_profile(trace, f.right)
    t = max(a.threshold, b.threshold)
    l = math.lcm(a.period, b.period)
    # positions 0..t+l-1 form a lasso whose cycle is t..t+l-1
    val = [False] * (t + l)
    for i in range(t, t + l):
        # scan one full cycle ahead of i; wrap positions into the cycle
        ok = False
        for j in range(l + 1):
            pos = t + ((i - t + j) % l)
            if b.value(pos):
                ok = True
                break
            if not a.value(pos):
                break
        val[i] = ok
    for i in range(t - 1, -1, -1):
        val[i] = b.value(i) or (a.value(i) and val[i + 1])
    return ValuationProfile(f, trace, t, l, tuple(val))


def _since_profile(trace: LassoTrace, f: Since) -> ValuationProfile:
    a = valuation_profile(trace, f.left)
    b = valuation_profile(trace, f.right)
    t = max(a.threshold, b.threshold)
    l = math.lcm(a.period, b.period)

    def in_off(i: int) -> int:
        return i if i < t else t + ((i - t) % l)

    bits: list[bool] = []
    seen: dict[tuple[int, bool], int] = {}
    prev = False
    i = 0
    while True:
        cur = b.value(i) or (a.value(i) and prev)
        bits.append(cur)
        state = (in_off(i + 1), cur)
        if i + 1 >= t:
            if state in seen:
                first = seen[state]
                return ValuationProfile(f, trace, first, i + 1 - first, tuple(bits))
            seen[state] = i + 1
        prev = cur
        i += 1


def pltl_eval(trace: LassoTrace, i: int, f: Pltl) -> bool:
    """Truth of f at position i of the trace (exact, via the valuation profile)."""
    if isinstance(f, Atom):
        return f.name in trace.letter(i)
    return valuation_profile(trace, f).value(i)


# -- concrete syntax ----------------------------------------------------------
#
# atoms are identifiers; operators ! | & -> <->, temporal X U Y S,
# sugar F G O H true false; parentheses.  Precedence: unary > U/S > & > | > -> > <->.


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


_SYMBOLS = ("<->", "->", "!", "|", "&", "(", ")", "[", "]", "{", "}", ",", ".")


def tokenize(text: str, symbols: tuple[str, ...] = _SYMBOLS) -> list[tuple[str, str, int, int]]:
    """Tokens as (kind, value, line, col); kind is 'id' or 'sym'."""
    toks = []
    i, line, col = 0, 1, 1
    while i < len(text):
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        for sym in symbols:
            if text.startswith(sym, i):
                toks.append(("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            if c.isalnum() or c == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                toks.append(("id", text[i:j], line, col))
                col += j - i
                i = j
            else:
                raise ParseError(f"unexpected character {c!r}", line, col)
    return toks


class _PltlParser:
    def __init__(self, toks: list[tuple[str, str, int, int]], ap: frozenset[str]):
        self.toks = toks
        self.pos = 0
        self.ap = ap

    def error(self, msg: str):
        if self.pos < len(self.toks):
            _, v, line, col = self.toks[self.pos]
            raise ParseError(f"{msg}, found {v!r}", line, col)
        if self.toks:
            _, _, line, col = self.toks[-1]
            raise ParseError(f"{msg} at end of input", line, col)
        raise ParseError(msg, 1, 1)

    def peek(self) -> tuple[str, str] | None:
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

    def parse(self) -> Pltl:
        f = self.iff()
        if self.peek() is not None:
            self.error("trailing input after formula")
        return f

    def iff(self) -> Pltl:
        f = self.implies()
        while self.peek() == ("sym", "<->"):
            self.take()
            f = p_iff(f, self.implies())
        return f

    def implies(self) -> Pltl:
        f = self.disj()
        if self.peek() == ("sym", "->"):
            self.take()
            return p_implies(f, self.implies())
        return f

    def disj(self) -> Pltl:
        f = self.conj()
        while self.peek() == ("sym", "|"):
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Pltl:
        f = self.untils()
        while self.peek() == ("sym", "&"):
            self.take()
            f = p_and(f, self.untils())
        return f

    def untils(self) -> Pltl:
        f = self.unary()
        nxt = self.peek()
        if nxt == ("id", "U"):
            self.take()
            return Until(f, self.untils())
        if nxt == ("id", "S"):
            self.take()
            return Since(f, self.untils())
        return f

    def unary(self) -> Pltl:
        nxt = self.peek()
        if nxt == ("sym", "!"):
            self.take()
            return Not(self.unary())
        if nxt is not None and nxt[0] == "id" and nxt[1] in ("X", "Y", "F", "G", "O", "H"):
            op = self.take()
            sub = self.unary()
            return {"X": Next, "Y": Yesterday, "F": eventually,
                    "G": always, "O": once, "H": historically}[op](sub)
        return self.primary()

    def primary(self) -> Pltl:
        nxt = self.peek()
        if nxt == ("sym", "("):
            self.take()
            f = self.iff()
            self.take(")")
            return f
        if nxt is not None and nxt[0] == "id":
            name = nxt[1]
            if name in ("true", "false"):
                self.take()
                if not self.ap:
                    self.error(f"{name!r} needs a nonempty proposition universe")
                p = sorted(self.ap)[0]
                return true_over(p) if name == "true" else false_over(p)
            if name in self.ap:
                self.take()
                return Atom(name)
            self.error(f"unknown proposition {name!r}")
        self.error("expected a formula")


def parse_pltl(text: str, ap: frozenset[str] | set[str]) -> Pltl:
    """Parse PLTL concrete syntax; atoms must come from the declared universe."""
    return _PltlParser(tokenize(text), frozenset(ap)).parse()


# rendering with minimal parentheses; recognizes the canonical sugar expansions
_PREC_IFF, _PREC_IMPL, _PREC_OR, _PREC_AND, _PREC_UNTIL, _PREC_UNARY = range(6)


def _match_implies(f: Pltl):
    if isinstance(f, Or) and isinstance(f.left, Not):
        return (f.left.sub, f.right)
    return None


def _resugar(f: Pltl):
    """Return (tag, payload) for recognized sugar shapes, else None."""
    if isinstance(f, Until) and f.left == tautology_over(f.right):
        return ("F", f.right)
    if isinstance(f, Since) and f.left == tautology_over(f.right):
        return ("O", f.right)
    if isinstance(f, Not):
        s = f.sub
        if isinstance(s, Until) and isinstance(s.right, Not) and s.left == tautology_over(s.right):
            return ("G", s.right.sub)
        if isinstance(s, Since) and isinstance(s.right, Not) and s.left == tautology_over(s.right):
            return ("H", s.right.sub)
        if isinstance(s, Or) and isinstance(s.left, Not) and isinstance(s.right, Not):
            a, b = s.left.sub, s.right.sub
            ia, ib = _match_implies(a), _match_implies(b)
            if ia and ib and ia[0] == ib[1] and ia[1] == ib[0]:
                return ("<->", (ia[0], ia[1]))
            return ("&", (a, b))
    imp = _match_implies(f)
    if imp is not None:
        return ("->", imp)
    return None


def render_pltl(f: Pltl, prec: int = 0) -> str:
    sug = _resugar(f)
    if sug is not None:
        tag, payload = sug
        if tag in ("&", "->", "<->"):
            a, b = payload
            lv = {"&": _PREC_AND, "->": _PREC_IMPL, "<->": _PREC_IFF}[tag]
            left = render_pltl(a, lv + 1 if tag == "->" else lv)
            right = render_pltl(b, lv if tag == "->" else lv + 1)
            s = f"{left} {tag} {right}"
            return f"({s})" if prec > lv else s
        s = f"{tag} {render_pltl(payload, _PREC_UNARY)}"
        return f"({s})" if prec > _PREC_UNARY else s
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return f"!{render_pltl(f.sub, _PREC_UNARY)}"
    if isinstance(f, Or):
        s = f"{render_pltl(f.left, _PREC_OR)} | {render_pltl(f.right, _PREC_OR + 1)}"
        return f"({s})" if prec > _PREC_OR else s
    if isinstance(f, Next):
        return f"X {render_pltl(f.sub, _PREC_UNARY)}"
    if isinstance(f, Yesterday):
        return f"Y {render_pltl(f.sub, _PREC_UNARY)}"
    if isinstance(f, Until):
        s = f"{render_pltl(f.left, _PREC_UNARY)} U {render_pltl(f.right, _PREC_UNTIL)}"
        return f"({s})" if prec > _PREC_UNTIL else s
    if isinstance(f, Since):
        s = f"{render_pltl(f.left, _PREC_UNARY)} S {render_pltl(f.right, _PREC_UNTIL)}"
        return f"({s})" if prec > _PREC_UNTIL else s
    raise TypeError(f"not a PLTL node: {f!r}")
