import random

import pytest

import ghyltl.stutter
from ghyltl import pltl as pl
from ghyltl import semantics as hy
from ghyltl.arith import alpha_per_context
from ghyltl.semantics import (EvalConfig, bounded_sat, check_traceset,
                              check_ts, evaluate, fragment_of, parse_hyper,
                              render_hyper)
from ghyltl.traces import PointedTrace, TransitionSystem, lasso, spike_trace

from helpers import gen_sentence, gen_trace, ref_hyperltl

AP = ("p", "q")

NONINTERFERENCE = ("forall x. forall y. "
                   "(G[] (li_x <-> li_y)) -> (G[] (lo_x <-> lo_y))")


def cfg(**kw):
    return EvalConfig(**kw)


def test_eval_reaches_marker():
    t = spike_trace((), "hash", 3)
    f = parse_hyper("F[] hash_x", {"hash"})
    v = evaluate([t], {"x": PointedTrace(t, 0)}, {"x"}, f)
    assert v.is_holds


def test_quantifier_duality_basic():
    L = [lasso(AP, [], [{"p"}]), lasso(AP, [], [set()])]
    f = parse_hyper("forall x. F[] p_x", AP)
    g = parse_hyper("exists x. !F[] p_x", AP)
    assert check_traceset(L, f).is_fails
    assert check_traceset(L, g).is_holds


def test_figure_alpha_per_instance():
    # equal-period dollar traces satisfy the periodicity conjunction; a
    # mismatched pair does not
    per3 = lasso({"dlr"}, [], [{"dlr"}] * 3 + [set()] * 3)
    bad = lasso({"dlr"}, [], [{"dlr"}] * 3 + [set()] * 2)
    f = alpha_per_context("x", "xp")
    ctx = {"x", "xp"}
    a = {"x": PointedTrace(per3, 0), "xp": PointedTrace(per3, 0)}
    assert evaluate([], a, ctx, f).is_holds
    a_bad = {"x": PointedTrace(per3, 0), "xp": PointedTrace(bad, 0)}
    assert evaluate([], a_bad, ctx, f).is_fails


def test_noninterference_single_trace():
    ap = {"li", "lo"}
    f = parse_hyper(NONINTERFERENCE, ap)
    assert check_traceset([lasso(ap, [], [set()])], f).is_holds


def test_exists_atom_fails_on_empty_trace():
    f = parse_hyper("exists x. p_x", AP)
    assert check_traceset([lasso(AP, [], [set()])], f).is_fails


def test_two_trace_separation():
    L = [lasso(AP, [], [set()]), lasso(AP, [], [{"p"}])]
    f = parse_hyper("exists x. exists y. G[] (p_x & !p_y)", AP)
    assert check_traceset(L, f).is_holds


def test_sentence_required():
    f = parse_hyper("p_x", AP)
    with pytest.raises(ValueError):
        check_traceset([lasso(AP, [], [set()])], f)


def test_y_at_origin_fails():
    rng = random.Random(0)
    for _ in range(20):
        t = gen_trace(rng, AP, 3, 2)
        f = parse_hyper("forall x. Y[] (p_x | !p_x)", AP)
        assert check_traceset([t], f).is_fails


def test_yesterday_undefined_is_false_not_error():
    t = lasso(AP, [], [{"p"}])
    f = hy.Yesterday(hy.EMPTY_GAMMA, hy.Atom("p", "x"))
    assert evaluate([t], {"x": PointedTrace(t, 0)}, {"x"}, f).is_fails
    assert evaluate([t], {"x": PointedTrace(t, 2)}, {"x"}, f).is_holds


def test_empty_universe_quantifiers():
    f = parse_hyper("forall x. p_x", AP)
    assert check_traceset([], f).is_holds
    f = parse_hyper("exists x. p_x | !p_x", AP)
    assert check_traceset([], f).is_fails


def test_until_no_effective_context():
    # a context disjoint from every bound variable freezes time
    t = lasso(AP, [], [set(), {"p"}])
    f = parse_hyper("forall x. C{z} F[] p_x", AP)
    assert check_traceset([t], f).is_fails
    t2 = lasso(AP, [{"p"}], [set()])
    assert check_traceset([t2], f).is_holds


def test_synchronous_conformance_random():
    rng = random.Random(4242)
    for _ in range(200):
        universe = [gen_trace(rng, AP, 3, 2) for _ in range(rng.randint(1, 3))]
        sentence = gen_sentence(rng, AP, rng.randint(1, 3), rng.randint(1, 4))
        got = check_traceset(universe, sentence)
        assert not got.is_unknown
        assert got.is_holds == ref_hyperltl(universe, sentence)


def test_until_cycle_detection_vs_unroller():
    rng = random.Random(777)
    contradictions = 0
    for _ in range(150):
        universe = [gen_trace(rng, AP, 3, 2) for _ in range(rng.randint(1, 3))]
        sentence = gen_sentence(rng, AP, rng.randint(1, 2), rng.randint(1, 4),
                                stutter=True, contexts=True, past=True)
        with_cycles = check_traceset(universe, sentence, cfg())
        unrolled = check_traceset(universe, sentence,
                                  cfg(use_cycle_detection=False))
        if not unrolled.is_unknown:
            if with_cycles.status != unrolled.status:
                contradictions += 1
    assert contradictions == 0


def test_quantifier_duality_random():
    rng = random.Random(31)
    for _ in range(80):
        universe = [gen_trace(rng, AP, 2, 2) for _ in range(rng.randint(1, 2))]
        inner = gen_sentence(rng, AP, 1, 3, stutter=True)
        # inner = Q v0. m; build forall v0. m vs !exists v0. !m
        _, matrix = hy.strip_prefix(inner)
        lhs = hy.Forall("v0", matrix)
        rhs = hy.Not(hy.Exists("v0", hy.Not(matrix)))
        a, b = check_traceset(universe, lhs), check_traceset(universe, rhs)
        if not a.is_unknown and not b.is_unknown:
            assert a.status == b.status


def test_since_termination_step_bound():
    calls = []
    real = ghyltl.stutter.assign_pred

    def counting(a, gamma, c):
        calls.append(1)
        return real(a, gamma, c)

    t = lasso(AP, [], [{"p"}, set()])
    f = hy.Since(hy.EMPTY_GAMMA, hy.Atom("p", "x"), hy.Atom("q", "x"))
    a = {"x": PointedTrace(t, 9)}
    old = ghyltl.stutter.assign_pred
    ghyltl.stutter.assign_pred = counting
    try:
        evaluate([t], a, {"x"}, f)
    finally:
        ghyltl.stutter.assign_pred = old
    assert len(calls) <= 10


def test_context_discipline():
    stepped: set[str] = set()
    real = ghyltl.stutter.assign_succ

    def recording(a, gamma, c):
        stepped.update(c)
        return real(a, gamma, c)

    t = lasso(AP, [], [set(), {"p"}])
    f = parse_hyper("forall x. forall y. C{x} F[] p_x", AP)
    old = ghyltl.stutter.assign_succ
    ghyltl.stutter.assign_succ = recording
    try:
        check_traceset([t], f)
    finally:
        ghyltl.stutter.assign_succ = old
    assert stepped == {"x"}


def test_quantifier_free_independent_of_universe():
    t = lasso(AP, [], [{"p"}, set()])
    f = parse_hyper("p_x U[] q_x", AP)
    a = {"x": PointedTrace(t, 0)}
    v1 = evaluate([], a, {"x"}, f)
    v2 = evaluate([t, lasso(AP, [], [{"q"}])], a, {"x"}, f)
    assert v1.status == v2.status


# -- transition-system checking -----------------------------------------------


def _self_loop(label=frozenset()) -> TransitionSystem:
    return TransitionSystem(frozenset(AP), ("v",), frozenset({("v", "v")}),
                            frozenset({"v"}), {"v": frozenset(label)})


def test_check_ts_exact_universe_sound_forall():
    f = parse_hyper("forall x. G[] !p_x", AP)
    v = check_ts(_self_loop(), f, 0, 1)
    assert v.is_holds and v.reason is None


def test_check_ts_existential_sound():
    ts = TransitionSystem(frozenset({"p"}), ("a", "b"),
                          frozenset({("a", "a"), ("a", "b"), ("b", "b"), ("b", "a")}),
                          frozenset({"a", "b"}),
                          {"a": frozenset(), "b": frozenset({"p"})})
    f = parse_hyper("exists x. G[] !p_x", {"p"})
    v = check_ts(ts, f, 0, 1)
    assert v.is_holds and v.reason is None


def test_check_ts_universal_counterexample_sound():
    ts = TransitionSystem(frozenset({"p"}), ("a", "b"),
                          frozenset({("a", "a"), ("a", "b"), ("b", "b"), ("b", "a")}),
                          frozenset({"a", "b"}),
                          {"a": frozenset(), "b": frozenset({"p"})})
    f = parse_hyper("forall x. G[] !p_x", {"p"})
    v = check_ts(ts, f, 0, 1)
    assert v.is_fails and v.reason is None


def test_check_ts_boolean_nested_existential_sound():
    # quantifiers under conjunctions still certify holds when every
    # occurrence is existential after polarity
    ts = TransitionSystem(frozenset({"p"}), ("a", "b"),
                          frozenset({("a", "a"), ("a", "b"), ("b", "b"), ("b", "a")}),
                          frozenset({"a", "b"}),
                          {"a": frozenset(), "b": frozenset({"p"})})
    f = parse_hyper("exists x. (F[] p_x & (exists y. G[] !p_y))", {"p"})
    v = check_ts(ts, f, 1, 1)
    assert v.is_holds and v.reason is None
    g = parse_hyper("!(forall x. !(F[] p_x))", {"p"})
    assert hy.quantifier_shape(g) == "exists"
    v = check_ts(ts, g, 1, 1)
    assert v.is_holds and v.reason is None


def test_check_ts_alternation_unknown():
    ts = TransitionSystem(frozenset({"p"}), ("a", "b"),
                          frozenset({("a", "a"), ("a", "b"), ("b", "b"), ("b", "a")}),
                          frozenset({"a", "b"}),
                          {"a": frozenset(), "b": frozenset({"p"})})
    f = parse_hyper("forall x. exists y. G[] (p_x <-> p_y)", {"p"})
    v = check_ts(ts, f, 1, 1)
    assert v.is_unknown and "bound" in v.reason


# -- fragments ----------------------------------------------------------------


def test_fragment_of():
    assert fragment_of(parse_hyper("forall x. forall y. G[] (p_x <-> p_y)", AP)) \
        == "HyperLTL"
    assert fragment_of(parse_hyper("forall x. G[p] p_x", AP)) == "HyperLTL_S"
    assert fragment_of(parse_hyper("forall x. C{x} F[] p_x", AP)) == "HyperLTL_C"
    assert fragment_of(parse_hyper("forall x. C{x} F[p] p_x", AP)) == "GHyLTL_S+C"
    assert fragment_of(parse_hyper("forall x. G[Y p] p_x", AP)) == "GHyLTL_S+C"
    assert fragment_of(parse_hyper("forall x. Y[] p_x", AP)) == "GHyLTL_S+C"
    assert fragment_of(parse_hyper("forall x. F[] (exists y. p_y)", AP)) \
        == "GHyLTL_S+C"


# -- bounded satisfiability ---------------------------------------------------


def test_bounded_sat_contradiction():
    f = parse_hyper("exists x. p_x & !p_x", {"p"})
    assert bounded_sat(f, 3, 3, 2, {"p"}) is None


def test_bounded_sat_smallest_model():
    f = parse_hyper("exists x. F[] p_x", {"p"})
    model = bounded_sat(f, 1, 0, 1, {"p"})
    assert model == [lasso({"p"}, [], [{"p"}])]


def test_bounded_sat_noninterference():
    ap = {"li", "lo"}
    f = parse_hyper(NONINTERFERENCE, ap)
    model = bounded_sat(f, 2, 1, 1, ap)
    assert model is not None and len(model) == 1


# -- concrete syntax ----------------------------------------------------------


def test_parse_atom_longest_prop():
    ap = {"hy", "hy_y3"}
    f = parse_hyper("hy_y3_x_y3", ap)
    assert f == hy.Atom("hy_y3", "x_y3")


def test_parse_gamma_brackets():
    f = parse_hyper("forall x. X[p, X q] p_x", AP)
    assert isinstance(f.sub, hy.Next)
    assert f.sub.gamma == frozenset({pl.Atom("p"), pl.Next(pl.Atom("q"))})


def test_parse_context_sets():
    f = parse_hyper("forall x. forall y. C{x,y} F[] p_x", AP)
    _, m = hy.strip_prefix(f)
    assert isinstance(m, hy.Context) and m.vars == {"x", "y"}


def test_render_parse_roundtrip_random():
    rng = random.Random(13)
    for _ in range(200):
        f = gen_sentence(rng, AP, rng.randint(1, 2), rng.randint(0, 4),
                         stutter=True, contexts=True, past=True)
        text = render_hyper(f)
        assert parse_hyper(text, AP) == f, text


def test_parse_error_position():
    with pytest.raises(hy.ParseError) as exc:
        parse_hyper("forall x.\n p_x &", AP)
    assert exc.value.line == 2
