"""Shared test helpers: independent oracles and random generators.

The oracles here deliberately avoid the library's evaluation machinery: the
PLTL oracle works on an explicit unrolling with loop-aware wrap-around, and
the HyperLTL reference evaluator unrolls the synchronous product of the
assigned traces.
"""

from __future__ import annotations

import math
import random
from typing import Sequence

from ghyltl import pltl as pl
from ghyltl import semantics as hy
from ghyltl.traces import LassoTrace, lasso


# -- brute-force PLTL on an unrolled lasso ------------------------------------


def brute_pltl_table(trace: LassoTrace, f: pl.Pltl) -> list[bool]:
    """Truth values of f at positions 0..N-1 for N = |prefix| + (depth+2)*|loop|,
    computed by table fixpoints with the successor of the last position wrapped
    back one loop."""
    lam = len(trace.loop)
    n = len(trace.prefix) + (pl.depth(f) + 2) * lam

    def succ(i: int) -> int:
        return i + 1 if i + 1 < n else n - lam

    def table(g: pl.Pltl) -> list[bool]:
        if isinstance(g, pl.Atom):
            return [g.name in trace.letter(i) for i in range(n)]
        if isinstance(g, pl.Not):
            return [not v for v in table(g.sub)]
        if isinstance(g, pl.Or):
            a, b = table(g.left), table(g.right)
            return [x or y for x, y in zip(a, b)]
        if isinstance(g, pl.Next):
            s = table(g.sub)
            return [s[succ(i)] for i in range(n)]
        if isinstance(g, pl.Yesterday):
            s = table(g.sub)
            return [i > 0 and s[i - 1] for i in range(n)]
        if isinstance(g, pl.Until):
            a, b = table(g.left), table(g.right)
            v = [False] * n
            changed = True
            while changed:
                changed = False
                for i in range(n - 1, -1, -1):
                    new = b[i] or (a[i] and v[succ(i)])
                    if new != v[i]:
                        v[i] = new
                        changed = True
            return v
        if isinstance(g, pl.Since):
            a, b = table(g.left), table(g.right)
            v = [False] * n
            for i in range(n):
                v[i] = b[i] or (a[i] and i > 0 and v[i - 1])
            return v
        raise TypeError(g)

    return table(f)


def brute_pltl_horizon(trace: LassoTrace, f: pl.Pltl) -> int:
    """Positions with reliable table values: everything before the wrap point."""
    return len(trace.prefix) + (pl.depth(f) + 1) * len(trace.loop)


# -- reference synchronous HyperLTL evaluator ---------------------------------


def _product_tables(env: dict[str, LassoTrace], matrix: hy.Hyper) -> bool:
    """LTL over the synchronous product of the assigned traces, solved on the
    product lasso (prefix = max stem, loop = lcm of loops)."""
    traces = list(env.values())
    stem = max((len(t.prefix) for t in traces), default=0)
    lam = math.lcm(*[len(t.loop) for t in traces]) if traces else 1
    n = stem + lam

    def succ(i: int) -> int:
        return i + 1 if i + 1 < n else stem

    def table(g: hy.Hyper) -> list[bool]:
        if isinstance(g, hy.Atom):
            t = env[g.var]
            return [g.prop in t.letter(i) for i in range(n)]
        if isinstance(g, hy.Not):
            return [not v for v in table(g.sub)]
        if isinstance(g, hy.Or):
            a, b = table(g.left), table(g.right)
            return [x or y for x, y in zip(a, b)]
        if isinstance(g, hy.Next):
            assert not g.gamma
            s = table(g.sub)
            return [s[succ(i)] for i in range(n)]
        if isinstance(g, hy.Until):
            assert not g.gamma
            a, b = table(g.left), table(g.right)
            v = [False] * n
            changed = True
            while changed:
                changed = False
                for i in range(n - 1, -1, -1):
                    new = b[i] or (a[i] and v[succ(i)])
                    if new != v[i]:
                        v[i] = new
                        changed = True
            return v
        raise TypeError(f"reference evaluator does not handle {g!r}")

    return table(matrix)[0]


def ref_hyperltl(universe: Sequence[LassoTrace], sentence: hy.Hyper) -> bool:
    """Reference verdict for prenex, past-free, context-free, empty-gamma
    sentences over a finite universe."""
    prefix, matrix = hy.strip_prefix(sentence)
    assert not hy.has_quantifier(matrix)

    def bind(i: int, env: dict[str, LassoTrace]) -> bool:
        if i == len(prefix):
            return _product_tables(env, matrix)
        kind, var = prefix[i]
        results = (bind(i + 1, {**env, var: t}) for t in universe)
        return any(results) if kind == "exists" else all(results)

    return bind(0, {})


# -- random generators --------------------------------------------------------


def gen_trace(rng: random.Random, ap: Sequence[str], max_prefix: int,
              max_loop: int, density: float = 0.45) -> LassoTrace:
    def letter():
        return frozenset(a for a in ap if rng.random() < density)

    plen = rng.randint(0, max_prefix)
    llen = rng.randint(1, max_loop)
    return lasso(ap, [letter() for _ in range(plen)], [letter() for _ in range(llen)])


def gen_pltl(rng: random.Random, ap: Sequence[str], depth: int,
             past: bool = True) -> pl.Pltl:
    ops = ["atom", "not", "or", "and", "next", "until", "ev", "alw"]
    if past:
        ops += ["yesterday", "since", "once"]
    kind = rng.choice(ops) if depth > 0 else "atom"
    if kind == "atom":
        return pl.Atom(rng.choice(ap))
    if kind == "not":
        return pl.Not(gen_pltl(rng, ap, depth - 1, past))
    if kind == "or":
        return pl.Or(gen_pltl(rng, ap, depth - 1, past), gen_pltl(rng, ap, depth - 1, past))
    if kind == "and":
        return pl.p_and(gen_pltl(rng, ap, depth - 1, past), gen_pltl(rng, ap, depth - 1, past))
    if kind == "next":
        return pl.Next(gen_pltl(rng, ap, depth - 1, past))
    if kind == "until":
        return pl.Until(gen_pltl(rng, ap, depth - 1, past), gen_pltl(rng, ap, depth - 1, past))
    if kind == "ev":
        return pl.eventually(gen_pltl(rng, ap, depth - 1, past))
    if kind == "alw":
        return pl.always(gen_pltl(rng, ap, depth - 1, past))
    if kind == "yesterday":
        return pl.Yesterday(gen_pltl(rng, ap, depth - 1, past))
    if kind == "since":
        return pl.Since(gen_pltl(rng, ap, depth - 1, past), gen_pltl(rng, ap, depth - 1, past))
    return pl.once(gen_pltl(rng, ap, depth - 1, past))


def gen_gamma(rng: random.Random, ap: Sequence[str], member_depth: int = 2):
    r = rng.random()
    if r < 0.45:
        return frozenset()
    members = frozenset(gen_pltl(rng, ap, rng.randint(0, member_depth))
                        for _ in range(rng.randint(1, 2)))
    return members


def gen_matrix(rng: random.Random, ap: Sequence[str], scope: Sequence[str],
               depth: int, stutter: bool = False, contexts: bool = False,
               past: bool = False) -> hy.Hyper:
    ops = ["atom", "atom", "not", "or", "and", "next", "until", "ev", "alw"]
    if contexts:
        ops.append("ctx")
    if past:
        ops += ["yesterday", "since"]
    kind = rng.choice(ops) if depth > 0 else "atom"

    def gamma():
        return gen_gamma(rng, ap) if stutter else frozenset()

    def sub(d=1):
        return gen_matrix(rng, ap, scope, depth - d, stutter, contexts, past)

    if kind == "atom":
        return hy.Atom(rng.choice(ap), rng.choice(list(scope)))
    if kind == "not":
        return hy.Not(sub())
    if kind == "or":
        return hy.Or(sub(), sub())
    if kind == "and":
        return hy.h_and(sub(), sub())
    if kind == "next":
        return hy.Next(gamma(), sub())
    if kind == "until":
        return hy.Until(gamma(), sub(), sub())
    if kind == "ev":
        return hy.ev(gamma(), sub())
    if kind == "alw":
        return hy.alw(gamma(), sub())
    if kind == "ctx":
        vs = frozenset(rng.sample(list(scope), rng.randint(1, len(scope))))
        return hy.Context(vs, sub())
    if kind == "yesterday":
        return hy.Yesterday(gamma(), sub())
    return hy.Since(gamma(), sub(), sub())


def gen_sentence(rng: random.Random, ap: Sequence[str], n_vars: int, depth: int,
                 stutter: bool = False, contexts: bool = False,
                 past: bool = False) -> hy.Hyper:
    scope = [f"v{i}" for i in range(n_vars)]
    matrix = gen_matrix(rng, ap, scope, depth, stutter, contexts, past)
    out = matrix
    for v in reversed(scope):
        out = (hy.Exists if rng.random() < 0.5 else hy.Forall)(v, out)
    return out


# -- curated corpus for the prenexification equivalence -----------------------
#
# Each sentence has exactly one quantifier under exactly one temporal operator.

LEMMA1_AP = ("p", "q")

LEMMA1_SENTENCES = [
    "exists a. X[] (exists b. (p_a & p_b))",
    "exists a. X[] (forall b. (p_a -> p_b))",
    "forall a. X[p] (exists b. (p_a <-> p_b))",
    "forall a. X[] (forall b. (q_a <-> q_b))",
    "exists a. F[] (exists b. (p_a & q_b))",
    "forall a. F[] (exists b. (p_a <-> p_b))",
    "exists a. F[q] (exists b. (q_a & (p_b | q_b)))",
    "exists a. G[] (exists b. (p_a <-> p_b))",
    "forall a. G[] (exists b. (p_a & p_b))",
    "forall a. G[p] (forall b. (p_a -> (p_b | q_b)))",
    "exists a. G[] (forall b. (p_b -> p_a))",
    "exists a. (p_a U[] (exists b. q_b))",
    "forall a. (q_a U[] (exists b. p_b))",
    "exists a. ((exists b. p_b) U[] q_a)",
    "exists a. ((forall b. p_b) U[] q_a)",
    "forall a. (p_a U[q] (forall b. (q_b -> p_a)))",
    "exists a. Y[] (exists b. p_b)",
    "forall a. Y[] (forall b. (p_a -> p_b))",
    "exists a. (p_a S[] (exists b. (p_b | q_a)))",
    "exists a. ((exists b. p_b) S[] q_a)",
    "exists a. O[] (exists b. (p_a & p_b))",
    "forall a. H[] (exists b. (p_a <-> p_b))",
]


def lemma1_models() -> list[list[LassoTrace]]:
    ap = LEMMA1_AP
    return [
        [lasso(ap, [], [set()])],
        [lasso(ap, [], [{"p"}, set()]), lasso(ap, [], [{"p"}])],
        [lasso(ap, [{"q"}], [{"p"}]), lasso(ap, [], [set(), {"p", "q"}])],
        [lasso(ap, [], [{"p"}])],
        [lasso(ap, [], [{"q"}, {"p"}]), lasso(ap, [{"p"}], [{"q"}])],
    ]


def stable_pos_verdict(universe, transformed, max_bound: int = 8,
                       cfg: hy.EvalConfig = hy.DEFAULT_CONFIG):
    """Verdict of the transformed sentence over universe + position traces,
    taking the first slice bound that agrees with its successor."""
    from ghyltl.transform import pos_traces

    prev = None
    for bound in range(max_bound + 1):
        cur = hy.check_traceset(
            list(universe) + list(pos_traces(bound).traces), transformed, cfg)
        if prev is not None and cur.status == prev.status:
            return cur
        prev = cur
    return prev
