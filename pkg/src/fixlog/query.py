"""Conjunctive queries over the functional database.

Rule bodies are flattened into one atom per function application (the
relational view of e-matching) plus primitive computations and guards, then
evaluated with a generic join: variables are bound one at a time, each time
intersecting the candidate values offered by every atom that mentions the
variable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .database import Database
from .errors import EgglogTypeError
from .primitives import Primitive
from .typecheck import TCall, TLit, TVar

# A term is ("v", name) for a variable or ("c", value) for a constant.


def V(name):
    return ("v", name)


def C(value):
    return ("c", value)


@dataclass(frozen=True)
class QAtom:
    func: str
    terms: tuple  # arguments then output

    def vars(self) -> list[str]:
        out = []
        for kind, x in self.terms:
            if kind == "v" and x not in out:
                out.append(x)
        return out


@dataclass(frozen=True)
class Compute:
    prim: Primitive
    args: tuple
    out: tuple


@dataclass(frozen=True)
class Guard:
    prim: Primitive
    args: tuple


@dataclass
class FlatQuery:
    atoms: list[QAtom]
    computes: list[Compute]
    guards: list[Guard]
    out_vars: list[str]
    aliases: dict[str, tuple]
    var_sorts: dict = field(default_factory=dict)
    unsat: bool = False

    @property
    def join_vars(self) -> list[str]:
        out = []
        for a in self.atoms:
            for v in a.vars():
                if v not in out:
                    out.append(v)
        return out


def is_aux(name: str) -> bool:
    return name.startswith("$")


def compile_query(facts, var_sorts: dict | None = None) -> FlatQuery:
    """Flatten typed facts into atoms, computations and guards.

    Auxiliary variables are named ``$0, $1, ...`` in the order their function
    applications are visited (children before parents).
    """
    atoms: list[QAtom] = []
    computes: list[Compute] = []
    guards: list[Guard] = []
    eqs: list[tuple] = []
    user_vars: list[str] = []
    counter = [0]

    def aux():
        name = f"${counter[0]}"
        counter[0] += 1
        return V(name)

    def flat(e):
        if isinstance(e, TVar):
            if e.name not in user_vars:
                user_vars.append(e.name)
            return V(e.name)
        if isinstance(e, TLit):
            return C(e.value)
        args = tuple(flat(a) for a in e.args)
        out = aux()
        if e.is_table:
            atoms.append(QAtom(e.func.name, args + (out,)))
        else:
            computes.append(Compute(e.func, args, out))
        return out

    for fact in facts:
        if isinstance(fact, TCall) and not fact.is_table and fact.func.name == "=":
            terms = [flat(a) for a in fact.args]
            eqs.extend((terms[0], t) for t in terms[1:])
        elif isinstance(fact, TCall) and fact.is_table:
            flat(fact)
        elif isinstance(fact, TCall) and fact.sort.name == "bool":
            guards.append(Guard(fact.func, tuple(flat(a) for a in fact.args)))
        else:
            raise EgglogTypeError("query facts must be function applications, equalities or guards")

    # Resolve equalities by merging terms; constants win, then user variables.
    parent: dict = {}

    def find(t):
        while parent.get(t, t) != t:
            t = parent[t]
        return t

    def rank(t):
        kind, x = t
        if kind == "c":
            return (0, 0)
        if not is_aux(x):
            return (1, user_vars.index(x))
        return (2, int(x[1:]))

    unsat = False
    for a, b in eqs:
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        if ra[0] == "c" and rb[0] == "c":
            unsat = True
            continue
        if rank(rb) < rank(ra):
            ra, rb = rb, ra
        parent[rb] = ra

    def sub(t):
        return find(t) if t[0] == "v" else t

    atoms = [QAtom(a.func, tuple(sub(t) for t in a.terms)) for a in atoms]
    computes = [Compute(c.prim, tuple(sub(t) for t in c.args), sub(c.out)) for c in computes]
    guards = [Guard(g.prim, tuple(sub(t) for t in g.args)) for g in guards]
    aliases = {}
    for v in user_vars:
        r = find(V(v))
        if r != V(v):
            aliases[v] = r
    q = FlatQuery(atoms, computes, guards, list(user_vars), aliases, dict(var_sorts or {}), unsat)
    _check_bound(q)
    return q


def _check_bound(q: FlatQuery):
    bound = set(q.join_vars)
    pending = list(q.computes)
    progress = True
    while progress:
        progress = False
        for c in list(pending):
            if all(t[0] == "c" or t[1] in bound for t in c.args):
                if c.out[0] == "v":
                    bound.add(c.out[1])
                pending.remove(c)
                progress = True
    needed = [t for g in q.guards for t in g.args] + [t for c in pending for t in c.args]
    needed += [q.aliases.get(v, V(v)) for v in q.out_vars]
    for kind, x in needed:
        if kind == "v" and x not in bound:
            name = x if not is_aux(x) else "an intermediate value"
            raise EgglogTypeError(f"variable {name} is not bound by any function atom in the query")


# -- planning ----------------------------------------------------------------


def plan_order(q: FlatQuery, sizes: list[int] | None = None) -> list[str]:
    """Order join variables: most atoms first, then smallest atom, then first occurrence."""
    jv = q.join_vars
    if sizes is None:
        sizes = [0] * len(q.atoms)
    count = {v: 0 for v in jv}
    smallest = {v: float("inf") for v in jv}
    for atom, size in zip(q.atoms, sizes):
        for v in atom.vars():
            count[v] += 1
            smallest[v] = min(smallest[v], size)
    first = {v: i for i, v in enumerate(jv)}
    return sorted(jv, key=lambda v: (-count[v], smallest[v], first[v]))


@dataclass(frozen=True)
class DeltaVariant:
    query: FlatQuery
    delta_atom: int | None  # None: every atom reads the full table


def delta_expand(q: FlatQuery) -> list[DeltaVariant]:
    """One variant per atom, that atom restricted to recently changed rows."""
    return [DeltaVariant(q, j) for j in range(len(q.atoms))]


# -- evaluation --------------------------------------------------------------


@dataclass
class JoinStats:
    considered: int = 0
    matches: int = 0


class TrieCache:
    """Per-iteration cache of atom tries; valid while the database is unchanged."""

    def __init__(self):
        self.tries: dict = {}

    def clear(self):
        self.tries.clear()


def _atom_layout(atom: QAtom, order_pos: dict):
    """Columns to filter and the column feeding each trie level."""
    const_filters = []
    eq_filters = []
    first_col: dict[str, int] = {}
    for col, (kind, x) in enumerate(atom.terms):
        if kind == "c":
            const_filters.append((col, x))
        elif x in first_col:
            eq_filters.append((col, first_col[x]))
        else:
            first_col[x] = col
    level_vars = sorted(first_col, key=lambda v: order_pos[v])
    level_cols = tuple(first_col[v] for v in level_vars)
    return tuple(const_filters), tuple(eq_filters), level_vars, level_cols


def _build_trie(rows, const_filters, eq_filters, level_cols):
    if not level_cols:
        for r in rows:
            if all(r[c] == v for c, v in const_filters) and all(r[a] == r[b] for a, b in eq_filters):
                return True
        return False
    root: dict = {}
    last = level_cols[-1]
    inner = level_cols[:-1]
    filtered = const_filters or eq_filters
    for r in rows:
        if filtered and not (
            all(r[c] == v for c, v in const_filters) and all(r[a] == r[b] for a, b in eq_filters)
        ):
            continue
        node = root
        for c in inner:
            nxt = node.get(r[c])
            if nxt is None:
                nxt = node[r[c]] = {}
            node = nxt
        node[r[last]] = True
    return root


def _getter(term, slots):
    kind, x = term
    if kind == "c":
        return (False, x)
    return (True, slots[x])


def generic_join(
    q: FlatQuery,
    db: Database,
    order: list[str] | None = None,
    delta_atom: int | None = None,
    since: int = 0,
    cache: TrieCache | None = None,
    stats: JoinStats | None = None,
) -> list[tuple]:
    """All substitutions satisfying ``q``, as tuples aligned with ``q.out_vars``.

    With ``delta_atom`` set, that atom only ranges over rows whose timestamp
    is at least ``since``.  Results are duplicate-free.
    """
    if q.unsat:
        return []
    tables = db.tables
    sources = []
    sizes = []
    for j, atom in enumerate(q.atoms):
        table = tables[atom.func]
        ts = since if j == delta_atom else 0
        sources.append((table, ts))
        sizes.append(table.count_since(ts) if ts else len(table))
        if sizes[-1] == 0:
            return []
    if order is None:
        order = plan_order(q, sizes)
    order_pos = {v: i for i, v in enumerate(order)}

    # Slots: join variables in order, then variables bound by computations.
    slots = dict(order_pos)
    for c in q.computes:
        if c.out[0] == "v" and c.out[1] not in slots:
            slots[c.out[1]] = len(slots)
    vals: list = [None] * len(slots)

    # Build or fetch one trie per atom.
    roots = []
    atom_levels = []
    for atom, (table, ts) in zip(q.atoms, sources):
        const_f, eq_f, level_vars, level_cols = _atom_layout(atom, order_pos)
        key = (atom.func, ts, const_f, eq_f, level_cols)
        trie = None
        if cache is not None:
            trie = cache.tries.get(key)
        if trie is None:
            trie = _build_trie(table.rows_since(ts), const_f, eq_f, level_cols)
            if cache is not None:
                cache.tries[key] = trie
        if not level_vars:
            if not trie:
                return []
            continue
        if not trie:
            return []
        roots.append(trie)
        atom_levels.append(level_vars)

    n = len(order)
    at_depth: list[list[int]] = [[] for _ in range(n)]
    for i, lv in enumerate(atom_levels):
        for v in lv:
            at_depth[order_pos[v]].append(i)

    stages = _schedule(q, order, slots)
    out_get = []
    for v in q.out_vars:
        out_get.append(_getter(q.aliases.get(v, V(v)), slots))

    results: list[tuple] = []
    considered = 0

    def run_stage(items) -> bool:
        for kind, fn, args, out in items:
            xs = [vals[i] if isv else i for isv, i in args]
            r = fn(*xs)
            if kind == "guard":
                if not r:
                    return False
            elif r is None:
                return False
            elif kind == "bind":
                vals[out] = r
            else:
                isv, o = out
                if r != (vals[o] if isv else o):
                    return False
        return True

    def emit():
        results.append(tuple(vals[i] if isv else i for isv, i in out_get))

    cur = list(roots)

    def rec(depth):
        nonlocal considered
        if depth == n:
            emit()
            return
        idx = at_depth[depth]
        stage = stages[depth + 1]
        if len(idx) == 1:
            i = idx[0]
            node = cur[i]
            considered += len(node)
            for val, child in node.items():
                vals[depth] = val
                if stage and not run_stage(stage):
                    continue
                cur[i] = child
                rec(depth + 1)
            cur[i] = node
            return
        nodes = [cur[i] for i in idx]
        small = min(range(len(nodes)), key=lambda k: len(nodes[k]))
        smallest = nodes[small]
        considered += len(smallest)
        others = [(k, nodes[k]) for k in range(len(nodes)) if k != small]
        for val in smallest:
            ok = True
            for _, m in others:
                if val not in m:
                    ok = False
                    break
            if not ok:
                continue
            vals[depth] = val
            if stage and not run_stage(stage):
                continue
            for k, i in enumerate(idx):
                cur[i] = nodes[k][val]
            rec(depth + 1)
        for k, i in enumerate(idx):
            cur[i] = nodes[k]

    if run_stage(stages[0]):
        rec(0)
    if stats is not None:
        stats.considered += considered
        stats.matches += len(results)
    return results


def _schedule(q: FlatQuery, order: list[str], slots: dict) -> list[list]:
    """Assign each computation/guard to the earliest depth where its inputs are bound."""
    join_vars = set(order)
    stages: list[list] = [[] for _ in range(len(order) + 1)]
    bound: set[str] = set()
    pending = [("c", c) for c in q.computes] + [("g", g) for g in q.guards]

    def ready(t):
        return t[0] == "c" or t[1] in bound

    for d in range(-1, len(order)):
        if d >= 0:
            bound.add(order[d])
        progress = True
        while progress:
            progress = False
            for item in list(pending):
                kind, c = item
                if not all(ready(t) for t in c.args):
                    continue
                args = tuple(_getter(t, slots) for t in c.args)
                if kind == "g":
                    stages[d + 1].append(("guard", c.prim.fn, args, None))
                else:
                    out = c.out
                    if out[0] == "v" and out[1] not in bound:
                        if out[1] in join_vars:
                            continue
                        bound.add(out[1])
                        stages[d + 1].append(("bind", c.prim.fn, args, slots[out[1]]))
                    else:
                        stages[d + 1].append(("check", c.prim.fn, args, _getter(out, slots)))
                pending.remove(item)
                progress = True
    if pending:
        raise EgglogTypeError("query computation depends on unbound variables")
    return stages


def substitutions(q: FlatQuery, db: Database, **kw) -> list[dict]:
    return [dict(zip(q.out_vars, row)) for row in generic_join(q, db, **kw)]
