"""The functional database: one map per function plus the union-find."""
from __future__ import annotations

from .errors import EngineError
from .syntax import format_value
from .typecheck import FunctionDecl, TCall, TLit, TVar
from .values import Sort, SortedUnionFinds


def eval_pure(e, env: dict):
    """Evaluate a typed expression built only from primitives, literals and ``env``."""
    if isinstance(e, TLit):
        return e.value
    if isinstance(e, TVar):
        return env[e.name]
    assert isinstance(e, TCall) and not e.is_table
    out = e.func.fn(*(eval_pure(a, env) for a in e.args))
    if out is None:
        raise EngineError(f"primitive {e.func.name} failed")
    return out


class FunctionTable:
    """Rows ``args -> (output, timestamp)`` for one function.

    Rows are kept in a dict whose iteration order is non-decreasing in
    timestamp: every write that bumps a timestamp moves the row to the end.
    """

    def __init__(self, decl: FunctionDecl):
        self.decl = decl
        self.name = decl.name
        self.rows: dict[tuple, tuple] = {}
        self.input_sorts = decl.inputs
        self.output_sort = decl.output
        self.id_arg_cols = [i for i, s in enumerate(decl.inputs) if not s.is_primitive]
        self.id_output = not decl.output.is_primitive
        # (column, union-find) for id columns; filled in by the database
        self.key_ufs: list = []
        if decl.merge is not None:
            merge = decl.merge
            self.merge = lambda old, new: eval_pure(merge, {"old": old, "new": new})
        else:
            self.merge = None

    def __len__(self):
        return len(self.rows)

    def lookup(self, key: tuple):
        entry = self.rows.get(key)
        return None if entry is None else entry[0]

    def rows_since(self, ts: int) -> list[tuple]:
        """Rows (as ``key + (output,)``) whose timestamp is at least ``ts``."""
        if ts <= 0:
            return [k + (v,) for k, (v, _) in self.rows.items()]
        out = []
        for k, (v, t) in reversed(self.rows.items()):
            if t < ts:
                break
            out.append(k + (v,))
        out.reverse()
        return out

    def count_since(self, ts: int) -> int:
        if ts <= 0:
            return len(self.rows)
        n = 0
        for _, (_, t) in reversed(self.rows.items()):
            if t < ts:
                break
            n += 1
        return n


class Database:
    """An instance: function tables, the equivalence over ids and a clock.

    Unions requested through :meth:`union` are buffered in ``pending`` and
    only reach the union-find during rebuilding, so that lookups made while
    applying rule actions all see the same equivalence relation.
    """

    def __init__(self):
        self.ufs = SortedUnionFinds()
        self.sorts: dict[str, Sort] = {}
        self.tables: dict[str, FunctionTable] = {}
        self.timestamp = 0
        self.pending: list[tuple[Sort, int, int]] = []
        self.uses: dict[str, dict[int, list]] = {}
        self.changes = 0

    # -- schema --

    def add_sort(self, sort: Sort):
        self.sorts[sort.name] = sort
        self.ufs.add_sort(sort)
        if not sort.is_primitive:
            self.uses[sort.name] = {}

    def add_function(self, decl: FunctionDecl) -> FunctionTable:
        for s in (*decl.inputs, decl.output):
            if s.name not in self.sorts:
                self.add_sort(s)
        table = FunctionTable(decl)
        table.key_ufs = [(i, self.ufs[decl.inputs[i]]) for i in table.id_arg_cols]
        self.tables[decl.name] = table
        return table

    def table(self, name) -> FunctionTable:
        return self.tables[name]

    # -- values --

    def fresh_id(self, sort: Sort) -> int:
        self.changes += 1
        return self.ufs.fresh(sort)

    def find(self, sort: Sort, value):
        return self.ufs.find(sort, value)

    def union(self, sort: Sort, a, b):
        """Request ``a ≡ b``; takes effect at the next rebuild."""
        if sort.is_primitive:
            from .errors import EgglogTypeError

            raise EgglogTypeError(f"cannot union values of primitive sort {sort}")
        if a != b:
            self.pending.append((sort, a, b))

    def canonical_key(self, table: FunctionTable, key: tuple) -> tuple:
        if not table.key_ufs:
            return key
        key = list(key)
        for i, uf in table.key_ufs:
            key[i] = uf.find(key[i])
        return tuple(key)

    # -- rows --

    def _store(self, table: FunctionTable, key: tuple, value):
        table.rows[key] = (value, self.timestamp)
        self.changes += 1
        uses = self.uses
        for i in table.id_arg_cols:
            uses[table.input_sorts[i].name].setdefault(key[i], []).append((table, key))
        if table.id_output:
            uses[table.output_sort.name].setdefault(value, []).append((table, key))

    def lookup(self, name: str, args: tuple):
        return self.tables[name].lookup(tuple(args))

    def get_or_default(self, table: FunctionTable, key: tuple):
        entry = table.rows.get(key)
        if entry is not None:
            return entry[0]
        decl = table.decl
        out = decl.output
        if not out.is_primitive:
            value = self.fresh_id(out)
        elif out.kind == "Unit":
            value = ()
        elif decl.default is not None:
            value = eval_pure(decl.default, {})
        else:
            raise EngineError(
                f"missing default: {decl.name}{self._show_key(table, key)} has no value "
                f"and {out} outputs have no default"
            )
        self._store(table, key, value)
        return value

    def set(self, table: FunctionTable, key: tuple, value):
        entry = table.rows.get(key)
        if entry is None:
            self._store(table, key, value)
            return
        old = entry[0]
        if old == value:
            return
        if table.id_output:
            self.union(table.output_sort, old, value)
            return
        if table.merge is None:
            raise EngineError(
                f"merge conflict: {table.name}{self._show_key(table, key)} is "
                f"{format_value(old)}, cannot set {format_value(value)} without :merge"
            )
        merged = table.merge(old, value)
        if merged != old:
            del table.rows[key]
            self._store(table, key, merged)

    def rows_since(self, name: str, ts: int):
        return self.tables[name].rows_since(ts)

    # -- inspection --

    @property
    def num_rows(self) -> int:
        return sum(len(t) for t in self.tables.values())

    @property
    def num_classes(self) -> int:
        return self.ufs.num_classes

    def _show_value(self, sort: Sort, v) -> str:
        return format_value(v) if sort.is_primitive else f"{sort.name}#{v}"

    def _show_key(self, table, key) -> str:
        return "(" + ", ".join(self._show_value(s, v) for s, v in zip(table.input_sorts, key)) + ")"

    def dump_table(self, table: FunctionTable) -> list[str]:
        out = []
        for key in sorted(table.rows):
            value, ts = table.rows[key]
            out.append(
                f"{table.name}{self._show_key(table, key)} -> "
                f"{self._show_value(table.output_sort, value)} @{ts}"
            )
        return out

    def dump(self) -> str:
        """One row per line, ``f(args...) -> value @ts``, tables in declaration order."""
        lines = []
        for table in self.tables.values():
            lines.extend(self.dump_table(table))
        return "\n".join(lines) + ("\n" if lines else "")

    def snapshot(self) -> dict:
        return {name: dict(t.rows) for name, t in self.tables.items()}

    def is_canonical(self) -> bool:
        for table in self.tables.values():
            for key, (value, _) in table.rows.items():
                if self.canonical_key(table, key) != key:
                    return False
                if table.id_output and self.ufs.find(table.output_sort, value) != value:
                    return False
        return True
