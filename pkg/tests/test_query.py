import copy
import itertools
import random
import types

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixlog import Engine
from fixlog.query import (
    C,
    FlatQuery,
    JoinStats,
    QAtom,
    V,
    compile_query,
    delta_expand,
    generic_join,
    plan_order,
)
from fixlog.typecheck import typecheck_facts
from fixlog import syntax as S

from conftest import SMALL, iteration_budget, load_engine
from joins import random_instance, random_query, sqlite_join, table_rows
from oracles import nested_loop_join

MATH = "(datatype Math (Num i64) (Var String) (Add Math Math) (Mul Math Math))\n"


def compiled(e, text):
    facts = [S.parse_expr(f) for f in text]
    typed, var_sorts = typecheck_facts(e.env, facts)
    return compile_query(typed, var_sorts)


def test_flattens_join_body():
    e = Engine()
    e.run_program("(relation path (i64 i64))\n(relation edge (i64 i64))")
    q = compiled(e, ["(path x y)", "(edge y z)"])
    assert q.atoms == [
        QAtom("path", (V("x"), V("y"), V("$0"))),
        QAtom("edge", (V("y"), V("z"), V("$1"))),
    ]


def test_flattens_nested_pattern_children_first():
    e = Engine()
    e.run_program(MATH)
    q = compiled(e, ["(= v (Mul a (Add b c)))"])
    assert q.atoms == [
        QAtom("Add", (V("b"), V("c"), V("$0"))),
        QAtom("Mul", (V("a"), V("$0"), V("v"))),
    ]


def test_ground_fact_gives_variable_free_query():
    e = Engine()
    e.run_program("(relation edge (i64 i64))\n(edge 1 2)")
    q = compiled(e, ["(edge 1 2)"])
    assert q.atoms == [QAtom("edge", (C(1), C(2), V("$0")))]
    assert q.out_vars == []
    assert generic_join(q, e.db) == [()]


def test_join_over_chain():
    e = Engine()
    e.run_program("(relation edge (i64 i64))\n(edge 1 2)\n(edge 2 3)\n(edge 3 4)")
    q = compiled(e, ["(edge x y)", "(edge y z)"])
    assert sorted(generic_join(q, e.db)) == [(1, 2, 3), (2, 3, 4)]


def test_empty_relation_gives_nothing():
    e = Engine()
    e.run_program("(relation edge (i64 i64))\n(relation other (i64))\n(other 1)")
    assert generic_join(compiled(e, ["(other x)", "(edge x y)"]), e.db) == []


def test_guard_filters_equal_classes():
    e = Engine()
    e.run_program(MATH + "(Num 1)\n(Num 2)\n(Num 3)\n(union (Num 2) (Num 3))")
    q = compiled(e, ["(= a (Num x))", "(= b (Num y))", "(!= a b)"])
    pairs = {(s["x"], s["y"]) for s in map(dict, (zip(q.out_vars, r) for r in generic_join(q, e.db)))}
    assert pairs == {(1, 2), (1, 3), (2, 1), (3, 1)}


def test_computation_and_comparison_guard():
    e = Engine()
    e.run_program("(function f (i64) i64)\n(set (f 1) 5)\n(set (f 2) 9)\n(set (f 3) 3)")
    q = compiled(e, ["(= y (f x))", "(= z (+ y 1))", "(> z 5)"])
    rows = {tuple(sorted(zip(q.out_vars, r))) for r in generic_join(q, e.db)}
    assert rows == {(("x", 1), ("y", 5), ("z", 6)), (("x", 2), ("y", 9), ("z", 10))}


def test_equality_against_constant():
    e = Engine()
    e.run_program("(function f (i64) i64)\n(set (f 1) 5)\n(set (f 2) 9)")
    q = compiled(e, ["(= 9 (f x))"])
    assert generic_join(q, e.db) == [(2,)]


def test_unbound_variable_is_rejected():
    from fixlog.errors import EgglogTypeError

    e = Engine()
    e.run_program("(function f (i64) i64)")
    with pytest.raises(EgglogTypeError):
        compiled(e, ["(f x)", "(< y 3)"])


def test_plan_puts_shared_variable_first():
    q = FlatQuery(
        [
            QAtom("r", (V("x"), V("y"))),
            QAtom("s", (V("x"), V("z"))),
            QAtom("t", (V("x"), V("y"))),
        ],
        [], [], ["x", "y", "z"], {},
    )
    assert plan_order(q, [10, 10, 10]) == ["x", "y", "z"]


def test_plan_breaks_ties_by_size_then_position():
    q = FlatQuery([QAtom("r", (V("a"), V("b"))), QAtom("s", (V("c"),))], [], [], ["a", "b", "c"], {})
    assert plan_order(q, [100, 5]) == ["c", "a", "b"]
    single = FlatQuery([QAtom("r", (V("b"), V("a"), V("c")))], [], [], [], {})
    assert plan_order(single, [3]) == ["b", "a", "c"]


def test_delta_expand_one_variant_per_atom():
    q2 = FlatQuery([QAtom("path", (V("x"), V("y"))), QAtom("edge", (V("y"), V("z")))], [], [], [], {})
    assert [v.delta_atom for v in delta_expand(q2)] == [0, 1]
    q1 = FlatQuery([QAtom("edge", (V("x"), V("y")))], [], [], [], {})
    assert len(delta_expand(q1)) == 1
    q3 = FlatQuery([QAtom(f, (V("x"), V("y"))) for f in "abc"], [], [], [], {})
    assert len(delta_expand(q3)) == 3


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_join_matches_nested_loop_under_every_order(seed):
    rng = random.Random(seed)
    e, specs = random_instance(rng, n_tables=3, max_rows=25)
    q = random_query(rng, specs, max_atoms=3, max_vars=3)
    expected = nested_loop_join([(a.func, a.terms) for a in q.atoms], table_rows(e))
    names = q.out_vars
    for order in itertools.permutations(q.join_vars):
        got = {tuple(sorted(zip(names, r))) for r in generic_join(q, e.db, order=list(order))}
        assert got == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_join_matches_sqlite_on_larger_tables(seed):
    rng = random.Random(seed)
    e, specs = random_instance(rng, n_tables=3, max_rows=400)
    q = random_query(rng, specs)
    assert set(generic_join(q, e.db)) == sqlite_join(e, q)


def test_join_results_are_duplicate_free():
    rng = random.Random(7)
    for _ in range(20):
        e, specs = random_instance(rng, max_rows=200)
        q = random_query(rng, specs)
        rows = generic_join(q, e.db)
        assert len(rows) == len(set(rows))


def test_stats_count_candidates():
    e = Engine()
    e.run_program("(relation edge (i64 i64))\n(edge 1 2)\n(edge 2 3)")
    stats = JoinStats()
    q = compiled(e, ["(edge x y)"])
    generic_join(q, e.db, stats=stats)
    assert stats.matches == 2 and stats.considered >= 2


def _restricted(db, since):
    """A read-only view of ``db`` with only the rows older than ``since``."""
    tables = {}
    for name, t in db.tables.items():
        view = copy.copy(t)
        view.rows = {k: v for k, v in t.rows.items() if v[1] < since}
        tables[name] = view
    return types.SimpleNamespace(tables=tables)


@pytest.mark.parametrize("name", SMALL)
def test_delta_variants_find_exactly_the_new_matches(name):
    e = load_engine(name)
    for _ in range(iteration_budget(name, cap=8)):
        for rule in e.rules:
            if rule.since == 0:
                continue
            q = rule.query
            full = set(generic_join(q, e.db))
            old = set(generic_join(q, _restricted(e.db, rule.since)))
            delta = set()
            for variant in delta_expand(q):
                delta |= set(generic_join(q, e.db, delta_atom=variant.delta_atom, since=rule.since))
            assert delta == full - old, rule.name
        if not e.step():
            break


@pytest.mark.parametrize("name", SMALL)
def test_corpus_joins_match_sqlite(name):
    e = load_engine(name)
    for _ in range(iteration_budget(name, cap=6)):
        if not e.step():
            break
    for rule in e.rules:
        q = rule.query
        if q.computes or q.guards or q.aliases:
            continue
        assert set(generic_join(q, e.db)) == sqlite_join(e, q), rule.name
