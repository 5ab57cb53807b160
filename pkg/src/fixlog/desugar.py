"""Lowering of surface sugar into core commands.

Core commands are ``Sort``, ``Function``, ``Rule``, the top-level actions
``Set``/``Union``/``Eval``/``Panic``, and ``Run``/``Check``/``Extract``.
Every core command is also valid surface syntax.
"""
from __future__ import annotations

from . import syntax as S
from .errors import EgglogTypeError
from .typecheck import Env, infer_sort

REWRITE_VAR = "__rw"


def desugar_relation(rel: S.Relation) -> S.Function:
    return S.Function(rel.name, rel.inputs, "Unit", line=rel.line)


def desugar_datatype(dt: S.Datatype) -> list:
    seen = set()
    out: list = [S.Sort(dt.name, line=dt.line)]
    for v in dt.variants:
        if v.name in seen:
            raise EgglogTypeError(f"datatype {dt.name}: duplicate constructor {v.name}")
        seen.add(v.name)
        out.append(S.Function(v.name, v.sorts, dt.name, line=dt.line))
    return out


def surface_vars(e, out=None) -> list[str]:
    out = [] if out is None else out
    if isinstance(e, S.Var):
        if e.name not in out:
            out.append(e.name)
    elif isinstance(e, S.Call):
        for a in e.args:
            surface_vars(a, out)
    return out


def desugar_rewrite(rw: S.Rewrite) -> list[S.Rule]:
    def one(lhs, rhs):
        if not isinstance(lhs, S.Call):
            raise EgglogTypeError(f"rewrite left-hand side must be a function application: {S.show(lhs)}")
        # guards only filter matches of the left-hand side
        bound = set(surface_vars(lhs))
        for g in rw.when:
            for v in surface_vars(g):
                if v not in bound:
                    raise EgglogTypeError(
                        f"rewrite {S.show(lhs)}: :when guard {S.show(g)} uses {v}, "
                        "which the left-hand side does not bind"
                    )
        query = (S.Call("=", (S.Var(REWRITE_VAR), lhs)), *rw.when)
        return S.Rule(query, (S.Union(S.Var(REWRITE_VAR), rhs, line=rw.line),), line=rw.line)

    rules = [one(rw.lhs, rw.rhs)]
    if rw.bidirectional:
        rules.append(one(rw.rhs, rw.lhs))
    return rules


def desugar_define(d: S.Define, env: Env) -> list:
    sort = infer_sort(env, d.expr)
    return [
        S.Function(d.name, (), sort.name, extractable=False, line=d.line),
        S.Set(S.Call(d.name, ()), d.expr, line=d.line),
    ]


def desugar(cmd, env: Env) -> list:
    """Lower one surface command.  ``define`` needs ``env`` to infer its sort."""
    if isinstance(cmd, S.Relation):
        return [desugar_relation(cmd)]
    if isinstance(cmd, S.Datatype):
        return desugar_datatype(cmd)
    if isinstance(cmd, S.Rewrite):
        return desugar_rewrite(cmd)
    if isinstance(cmd, S.Define):
        return desugar_define(cmd, env)
    return [cmd]
