"""A fixpoint engine unifying Datalog and equality saturation."""
from .database import Database, FunctionTable
from .engine import Engine, RunReport
from .errors import CheckFailure, EgglogError, EgglogTypeError, EngineError, Panic, ParseError
from .query import compile_query, delta_expand, generic_join, plan_order
from .rebuild import rebuild_fixpoint, rebuild_step
from .syntax import parse, show
from .values import Sort, UnionFind

__all__ = [
    "CheckFailure",
    "Database",
    "EgglogError",
    "EgglogTypeError",
    "Engine",
    "EngineError",
    "FunctionTable",
    "Panic",
    "ParseError",
    "RunReport",
    "Sort",
    "UnionFind",
    "compile_query",
    "delta_expand",
    "generic_join",
    "parse",
    "plan_order",
    "rebuild_fixpoint",
    "rebuild_step",
    "show",
]
