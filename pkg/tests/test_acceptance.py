"""Acceptance criteria, one test each.

Every criterion records a PASS/FAIL line with its measured time; the lines
are printed in the terminal summary (see ``conftest.py``), and also when
this file is run directly with ``python tests/test_acceptance.py``.
"""
import itertools
import os
import random
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

import fixlog.engine as engine_mod  # noqa: E402
from fixlog import Engine, corpus, generic_join  # noqa: E402

from conftest import iteration_budget, load_engine  # noqa: E402
from joins import random_instance, random_query, sqlite_join, table_rows  # noqa: E402
from oracles import congruence_closure, nested_loop_join, transitive_closure  # noqa: E402
from test_corpus import _steensgaard_facts, steensgaard_by_hand  # noqa: E402
from test_engine import assert_contained  # noqa: E402
from test_rebuild import _checked_rebuild, build_terms, partition, random_dag  # noqa: E402

RESULTS: list[str] = []


def record(number, title, ok, seconds, limit, detail=""):
    within = limit is None or seconds < limit
    verdict = "PASS" if ok and within else "FAIL"
    bound = f" (< {limit:g} s)" if limit is not None else ""
    line = f"criterion {number:>2} {verdict}  {title}: {detail} [{seconds:.2f} s{bound}]"
    RESULTS.append(line)
    return verdict == "PASS"


def extracts(outs):
    return [o.text for o in outs if o.kind == "extract"]


def run_corpus(name, naive=False):
    e = Engine(naive=naive)
    return e, e.run_program(corpus.load(name))


# 1 -------------------------------------------------------------------------
def criterion_1():
    t = time.perf_counter()
    e, outs = run_corpus("transitive_closure")
    got = set(e.db.tables["path"].rows)
    want = transitive_closure({(1, 2), (2, 3), (3, 4)})
    report = outs[-2].report
    ok = report.saturated and outs[-1].ok and got == want and len(got) == 6
    return record(1, "transitive closure", ok, time.perf_counter() - t, 1,
                  f"path has {len(got)} pairs, equal to brute force: {got == want}")


# 2 -------------------------------------------------------------------------
def criterion_2():
    t = time.perf_counter()
    e, outs = run_corpus("shortest_path")
    value = e.db.tables["path"].rows[(1, 3)][0]
    return record(2, "shortest path lattice", value == 20 and outs[-1].text == "20",
                  time.perf_counter() - t, 1, f"path(1,3) = {value}")


# 3 -------------------------------------------------------------------------
def criterion_3():
    t = time.perf_counter()
    e, outs = run_corpus("node_contraction")
    checks = [o.ok for o in outs if o.kind == "check"]
    return record(3, "node contraction", checks == [True, True], time.perf_counter() - t, 1,
                  f"checks {checks}")


# 4 -------------------------------------------------------------------------
def criterion_4():
    t = time.perf_counter()
    e, outs = run_corpus("arith_eqsat")
    report = [o.report for o in outs if o.kind == "run"][0]
    ok = outs[-1].ok and report.iterations <= 10
    return record(4, "arithmetic equality saturation", ok, time.perf_counter() - t, 5,
                  f"expr1 = expr2 after {report.iterations} iterations")


# 5 -------------------------------------------------------------------------
def criterion_5():
    t = time.perf_counter()
    _, outs = run_corpus("equation_solving")
    got = extracts(outs)
    return record(5, "equation solving", got == ["(Num 5)", "(Num 4)", "(Num 2)"],
                  time.perf_counter() - t, 5, "x, y, z = " + ", ".join(got))


# 6 -------------------------------------------------------------------------
def criterion_6():
    t = time.perf_counter()
    names = corpus.names()
    bad = []
    compared = 0
    for name in names:
        semi, naive = load_engine(name), load_engine(name, naive=True)
        same = semi.dump() == naive.dump()
        for _ in range(iteration_budget(name, cap=20)):
            a, b = semi.step(), naive.step()
            compared += 1
            same = same and semi.dump() == naive.dump()
            if not (a or b):
                break
        if not same:
            bad.append(name)
    ok = not bad and len(names) >= 8
    return record(6, "naive and semi-naive dumps agree", ok, time.perf_counter() - t, 60,
                  f"{len(names)} programs, {compared} iterations compared, mismatches: {bad or 'none'}")


# 7 -------------------------------------------------------------------------
def criterion_7():
    t = time.perf_counter()
    failures = 0
    for seed in range(200):
        rng = random.Random(seed)
        nodes, unions = random_dag(rng, n_nodes=rng.randint(1, 50), n_unions=10)
        _, classes = build_terms(nodes, unions)
        want = sorted(sorted(g) for g in congruence_closure(nodes, unions))
        failures += partition(classes) != want
    return record(7, "congruence closure oracle", failures == 0, time.perf_counter() - t, 30,
                  f"200 instances, {failures} mismatches")


# 8 -------------------------------------------------------------------------
def criterion_8():
    t = time.perf_counter()
    failures = 0
    orders = 0
    biggest = 0
    for seed in range(100):
        rng = random.Random(seed)
        e, specs = random_instance(rng, n_tables=3, max_rows=2000)
        biggest = max(biggest, max(len(tb) for tb in e.db.tables.values()))
        q = random_query(rng, specs, max_atoms=4, max_vars=4)
        want = nested_loop_join([(a.func, a.terms) for a in q.atoms], table_rows(e))
        names = q.out_vars
        if len(q.join_vars) <= 3:
            plans = [list(p) for p in itertools.permutations(q.join_vars)]
        else:
            plans = [None]
        for plan in plans:
            orders += 1
            got = {tuple(sorted(zip(names, r))) for r in generic_join(q, e.db, order=plan)}
            failures += got != want
        failures += set(generic_join(q, e.db)) != sqlite_join(e, q)
    return record(8, "join oracle", failures == 0, time.perf_counter() - t, 60,
                  f"100 queries, {orders} variable orders, largest table {biggest} rows, {failures} mismatches")


# 9 -------------------------------------------------------------------------
def criterion_9():
    t = time.perf_counter()
    steps = []
    ok = True
    original = engine_mod.rebuild_fixpoint
    engine_mod.rebuild_fixpoint = _checked_rebuild(steps)
    try:
        for name in corpus.names():
            e = load_engine(name)
            for _ in range(iteration_budget(name)):
                if not e.step():
                    break
    except AssertionError:
        ok = False
    finally:
        engine_mod.rebuild_fixpoint = original
    return record(9, "rebuild idempotence and metric", ok, time.perf_counter() - t, None,
                  f"{len(steps)} rebuilds, {sum(steps)} steps checked")


# 10 ------------------------------------------------------------------------
def criterion_10():
    t = time.perf_counter()
    ok = True
    checked = 0
    for name in corpus.names():
        e = load_engine(name)
        for _ in range(iteration_budget(name)):
            snap = {n: {k: v for k, (v, _) in tb.rows.items()} for n, tb in e.db.tables.items()}
            changed = e.step()
            try:
                assert_contained(e, snap)
            except AssertionError:
                ok = False
            checked += 1
            if not changed:
                break
    return record(10, "monotonicity", ok, time.perf_counter() - t, None,
                  f"{checked} iterations checked")


# 11 ------------------------------------------------------------------------
def criterion_11():
    t = time.perf_counter()
    semi, _ = run_corpus("math")
    naive, _ = run_corpus("math", naive=True)
    s_time = sum(h.seconds for h in semi.history)
    n_time = sum(h.seconds for h in naive.history)
    s_cons, n_cons = semi.stats.considered, naive.stats.considered
    same = semi.dump() == naive.dump()
    ratio = n_time / s_time
    ok = same and s_cons < n_cons and ratio >= 1.2
    return record(11, "semi-naive performance direction", ok, time.perf_counter() - t, 120,
                  f"{len(semi.history)} iterations; considered {s_cons} vs {n_cons}; "
                  f"time {s_time:.2f} s vs {n_time:.2f} s ({ratio:.2f}x)")


# 12 ------------------------------------------------------------------------
def criterion_12():
    t = time.perf_counter()
    e, outs = run_corpus("steensgaard")
    order, cls = steensgaard_by_hand(_steensgaard_facts(corpus.load("steensgaard")))
    db = e.db
    loc = db.sorts["Loc"]
    agree = True
    pairs = 0
    named = [n for n in order if n[0] != "deref"]
    for a, b in itertools.combinations(named, 2):
        ea, eb = db.lookup(a[0], (a[1],)), db.lookup(b[0], (b[1],))
        pairs += 1
        agree = agree and (db.find(loc, ea) == db.find(loc, eb)) == (cls[a] == cls[b])
    checks = all(o.ok for o in outs if o.kind == "check")
    ie, iouts = run_corpus("intervals")
    interval_ok = all(o.ok for o in iouts if o.kind == "check")
    ok = agree and checks and interval_ok
    return record(12, "points-to and interval substitutes", ok, time.perf_counter() - t, None,
                  f"{pairs} location pairs agree with hand closure: {agree}; interval checks: {interval_ok}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 13)])
def test_acceptance(criterion):
    assert criterion(), RESULTS[-1]


if __name__ == "__main__":
    verdicts = [criterion() for criterion in CRITERIA]
    for line in RESULTS:
        print(line)
    sys.exit(0 if all(verdicts) else 1)
