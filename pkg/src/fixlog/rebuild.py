"""Rebuilding: restore canonicity and functional dependencies after unions.

One step applies the buffered unions, re-canonicalizes every row that
mentions an id which just lost its canonical status, and resolves the
resulting key collisions with the function's merge.  Collisions between id
outputs request further unions, which the next step applies; iterating to a
fixpoint yields congruence closure for id-valued functions and lattice
propagation for primitive-valued ones.
"""
from __future__ import annotations

from .database import Database
from .errors import EngineError
from .syntax import format_value


def _candidates(db: Database, full_scan: bool) -> dict:
    stale_by_sort = {name: uf.take_stale() for name, uf in db.ufs.items()}
    if full_scan:
        return {t.name: list(t.rows) for t in db.tables.values()}
    cands: dict[str, set] = {}
    for sort_name, stale in stale_by_sort.items():
        uses = db.uses[sort_name]
        for x in stale:
            refs = uses.pop(x, ())
            for table, key in refs:
                cands.setdefault(table.name, set()).add(key)
    return cands


def rebuild_step(db: Database, full_scan: bool = False) -> bool:
    """Apply one round of rebuilding; return whether anything changed.

    With ``full_scan`` every row is re-examined instead of only the rows that
    reference newly non-canonical ids; both modes produce the same instance.
    """
    before = db.changes
    pending, db.pending = db.pending, []
    ufs = db.ufs
    for sort, a, b in pending:
        if ufs.find(sort, a) != ufs.find(sort, b):
            ufs.union(sort, a, b)
            db.changes += 1
    cands = _candidates(db, full_scan)
    find = ufs.find
    for table in db.tables.values():
        keys = cands.get(table.name)
        if not keys:
            continue
        rows = table.rows
        out_sort = table.output_sort
        for key in sorted(keys):
            entry = rows.get(key)
            if entry is None:
                continue
            value = entry[0]
            new_key = db.canonical_key(table, key)
            new_value = find(out_sort, value) if table.id_output else value
            if new_key == key and new_value == value:
                continue
            del rows[key]
            db.changes += 1
            existing = rows.get(new_key)
            if existing is None:
                db._store(table, new_key, new_value)
                continue
            old = existing[0]
            if table.id_output:
                old = find(out_sort, old)
                if old != new_value:
                    db.union(out_sort, old, new_value)
                merged = min(old, new_value)
            elif old == new_value:
                merged = old
            elif table.merge is None:
                raise EngineError(
                    f"merge conflict: {table.name}{db._show_key(table, new_key)} is "
                    f"{format_value(old)} and {format_value(new_value)}, and has no :merge"
                )
            else:
                merged = table.merge(old, new_value)
            if merged != existing[0]:
                del rows[new_key]
                db._store(table, new_key, merged)
    return db.changes != before


def needs_rebuild(db: Database) -> bool:
    return bool(db.pending) or db.ufs.dirty


def rebuild_fixpoint(db: Database, full_scan: bool = False, on_step=None) -> int:
    """Rebuild until the instance is canonical; return the number of steps taken."""
    steps = 0
    while needs_rebuild(db):
        rebuild_step(db, full_scan)
        steps += 1
        if on_step is not None:
            on_step(db)
    return steps
