"""Sorts and the per-sort union-find over uninterpreted ids.

Values are stored unboxed: an ``i64`` is a Python ``int``, a ``String`` is a
``str``, the unit value is ``()`` and an id of a user sort is a non-negative
``int`` whose sort is known statically from the column it lives in.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EgglogTypeError

PRIMITIVE_KINDS = ("i64", "String", "Unit")


@dataclass(frozen=True)
class Sort:
    name: str
    kind: str = "user"
    # cached because it sits on every hot path
    is_primitive: bool = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "is_primitive", self.kind != "user")

    def __str__(self) -> str:
        return self.name


I64 = Sort("i64", "i64")
STRING = Sort("String", "String")
UNIT = Sort("Unit", "Unit")
BUILTIN_SORTS = {s.name: s for s in (I64, STRING, UNIT)}


def primitive_value_ok(sort: Sort, value) -> bool:
    if sort.kind == "i64":
        return isinstance(value, int) and not isinstance(value, bool)
    if sort.kind == "String":
        return isinstance(value, str)
    if sort.kind == "Unit":
        return value == ()
    return False


class UnionFind:
    """Union-find whose representative is always the smallest member.

    Ids are handed out by :meth:`make` in increasing order, so a fresh id is
    its own representative.  Ids that lose their canonical status are queued
    in ``stale`` until the next rebuild drains them.
    """

    def __init__(self):
        self.parent: list[int] = []
        self.stale: list[int] = []
        self.unions = 0

    def __len__(self):
        return len(self.parent)

    def make(self) -> int:
        new = len(self.parent)
        self.parent.append(new)
        return new

    def find(self, x: int) -> int:
        parent = self.parent
        root = parent[x]
        if root == x:
            return x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        a = self.find(a)
        b = self.find(b)
        if a == b:
            return a
        if b < a:
            a, b = b, a
        self.parent[b] = a
        self.stale.append(b)
        self.unions += 1
        return a

    @property
    def dirty(self) -> bool:
        return bool(self.stale)

    def take_stale(self) -> list[int]:
        stale, self.stale = self.stale, []
        return stale

    @property
    def num_classes(self) -> int:
        return len(self.parent) - self.unions

    def classes(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for x in range(len(self.parent)):
            out.setdefault(self.find(x), []).append(x)
        return out


class SortedUnionFinds:
    """One union-find per user sort; primitives pass through ``find`` untouched."""

    def __init__(self):
        self._ufs: dict[str, UnionFind] = {}

    def add_sort(self, sort: Sort):
        if not sort.is_primitive:
            self._ufs.setdefault(sort.name, UnionFind())

    def __getitem__(self, sort: Sort) -> UnionFind:
        return self._ufs[sort.name]

    def items(self):
        return self._ufs.items()

    def fresh(self, sort: Sort) -> int:
        if sort.is_primitive:
            raise EgglogTypeError(f"cannot create a fresh id of primitive sort {sort}")
        return self._ufs[sort.name].make()

    def find(self, sort: Sort, value):
        if sort.is_primitive:
            return value
        return self._ufs[sort.name].find(value)

    def union(self, sort: Sort, a, b):
        if sort.is_primitive:
            raise EgglogTypeError(f"cannot union values of primitive sort {sort}")
        return self._ufs[sort.name].union(a, b)

    @property
    def num_classes(self) -> int:
        return sum(uf.num_classes for uf in self._ufs.values())

    @property
    def dirty(self) -> bool:
        return any(uf.stale for uf in self._ufs.values())
