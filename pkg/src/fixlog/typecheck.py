"""Static sort inference for declarations, rules, actions and facts.

Typechecking turns surface expressions into typed trees: every node carries
its sort and every call is resolved to either a declared table function or a
builtin primitive.  Bare symbols that name a nullary function (``define``d
constants) resolve to calls of that function.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import syntax as S
from .errors import EgglogTypeError
from .primitives import PRIMITIVES, Primitive
from .values import BUILTIN_SORTS, I64, STRING, UNIT, Sort

BOOL = Sort("bool", "bool")


@dataclass(eq=False)
class FunctionDecl:
    name: str
    inputs: tuple[Sort, ...]
    output: Sort
    merge: "TExpr | None" = None
    default: "TExpr | None" = None
    extractable: bool = True
    index: int = 0

    @property
    def arity(self) -> int:
        return len(self.inputs)

    def __repr__(self):
        return f"FunctionDecl({self.name})"


# -- typed expressions --------------------------------------------------------


@dataclass(frozen=True)
class TVar:
    name: str
    sort: Sort


@dataclass(frozen=True)
class TLit:
    value: object
    sort: Sort


@dataclass(frozen=True)
class TCall:
    func: FunctionDecl | Primitive
    args: tuple
    sort: Sort

    @property
    def is_table(self) -> bool:
        return isinstance(self.func, FunctionDecl)


TExpr = TVar | TLit | TCall


@dataclass(frozen=True)
class TSet:
    func: FunctionDecl
    args: tuple
    value: TExpr


@dataclass(frozen=True)
class TUnion:
    sort: Sort
    lhs: TExpr
    rhs: TExpr


@dataclass(frozen=True)
class TPanic:
    message: str


@dataclass(frozen=True)
class TLet:
    name: str
    expr: TExpr


@dataclass(frozen=True)
class TEval:
    expr: TExpr


@dataclass
class TypedRule:
    name: str
    query: tuple  # typed facts
    actions: tuple
    var_sorts: dict = field(default_factory=dict)


def texpr_vars(e, out=None) -> list[str]:
    out = [] if out is None else out
    if isinstance(e, TVar):
        if e.name not in out:
            out.append(e.name)
    elif isinstance(e, TCall):
        for a in e.args:
            texpr_vars(a, out)
    return out


def show_texpr(e) -> str:
    if isinstance(e, TVar):
        return e.name
    if isinstance(e, TLit):
        return S.format_value(e.value)
    if not e.args and isinstance(e.func, FunctionDecl) and not e.func.extractable:
        return e.func.name
    return "(" + " ".join([e.func.name, *map(show_texpr, e.args)]) + ")"


# -- inference ---------------------------------------------------------------


class _Solver:
    """Unification over sort variables (ints) and concrete sorts."""

    def __init__(self):
        self.parent: dict[int, object] = {}
        self.count = 0

    def fresh(self) -> int:
        self.count += 1
        self.parent[self.count] = self.count
        return self.count

    def resolve(self, t):
        while isinstance(t, int) and self.parent[t] != t:
            t = self.parent[t]
        return t

    def unify(self, a, b, where):
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return
        if isinstance(a, int):
            self.parent[a] = b
        elif isinstance(b, int):
            self.parent[b] = a
        else:
            raise EgglogTypeError(f"{where}: sort mismatch, {a} vs {b}")


class Env:
    """Declared sorts and functions, in declaration order."""

    def __init__(self):
        self.sorts: dict[str, Sort] = dict(BUILTIN_SORTS)
        self.functions: dict[str, FunctionDecl] = {}

    def sort(self, name: str) -> Sort:
        try:
            return self.sorts[name]
        except KeyError:
            raise EgglogTypeError(f"unknown sort {name}") from None

    def declare_sort(self, name: str) -> Sort:
        if name in self.sorts:
            raise EgglogTypeError(f"sort {name} is already declared")
        sort = Sort(name)
        self.sorts[name] = sort
        return sort

    def function(self, name: str) -> FunctionDecl:
        try:
            return self.functions[name]
        except KeyError:
            raise EgglogTypeError(f"unknown function {name}") from None

    def declare_function(self, cmd: S.Function) -> FunctionDecl:
        name = cmd.name
        if name in self.functions or name in PRIMITIVES or name in self.sorts:
            raise EgglogTypeError(f"{name} is already declared")
        inputs = tuple(self.sort(s) for s in cmd.inputs)
        output = self.sort(cmd.output)
        decl = FunctionDecl(name, inputs, output, extractable=cmd.extractable, index=len(self.functions))
        if not output.is_primitive:
            if cmd.merge is not None or cmd.default is not None:
                raise EgglogTypeError(
                    f"function {name}: outputs of sort {output} always merge by union "
                    "and default to a fresh id; :merge/:default are not allowed"
                )
        else:
            if cmd.merge is not None:
                decl.merge = typecheck_closed(
                    self, cmd.merge, {"old": output, "new": output}, output, f"merge of {name}",
                    allow_tables=False,
                )
            if cmd.default is not None:
                decl.default = typecheck_closed(
                    self, cmd.default, {}, output, f"default of {name}", allow_tables=False
                )
        self.functions[name] = decl
        return decl


class _Checker:
    def __init__(self, env: Env, where: str, allow_tables=True):
        self.env = env
        self.where = where
        self.solver = _Solver()
        self.vars: dict[str, object] = {}
        self.allow_tables = allow_tables
        self.fixed: dict[str, Sort] = {}

    def _global(self, name):
        f = self.env.functions.get(name)
        if f is not None and f.arity == 0 and name not in self.vars:
            return f
        return None

    def infer(self, e, bind_new: bool):
        if isinstance(e, S.Lit):
            v = e.value
            if isinstance(v, bool):
                raise EgglogTypeError(f"{self.where}: unsupported literal {v!r}")
            if isinstance(v, int):
                return I64
            if isinstance(v, str):
                return STRING
            return UNIT
        if isinstance(e, S.Var):
            g = self._global(e.name)
            if g is not None and self.allow_tables:
                return g.output
            if e.name not in self.vars:
                if not bind_new:
                    raise EgglogTypeError(
                        f"{self.where}: variable {e.name} is not bound by the query"
                    )
                self.vars[e.name] = self.solver.fresh()
            return self.vars[e.name]
        head = e.head
        if head in self.env.functions:
            if not self.allow_tables:
                raise EgglogTypeError(f"{self.where}: table function {head} not allowed here")
            f = self.env.functions[head]
            if len(e.args) != f.arity:
                raise EgglogTypeError(
                    f"{self.where}: {head} expects {f.arity} argument(s), got {len(e.args)}"
                )
            for a, s in zip(e.args, f.inputs):
                self.solver.unify(self.infer(a, bind_new), s, f"{self.where}: argument of {head}")
            return f.output
        if head in PRIMITIVES:
            p = PRIMITIVES[head]
            if len(e.args) not in p.arities:
                raise EgglogTypeError(f"{self.where}: wrong number of arguments to {head}")
            tys = [self.infer(a, bind_new) for a in e.args]
            if p.inputs == "i64":
                for t in tys:
                    self.solver.unify(t, I64, f"{self.where}: argument of {head}")
            else:
                for t in tys[1:]:
                    self.solver.unify(tys[0], t, f"{self.where}: arguments of {head}")
            return I64 if p.output == "i64" else BOOL
        raise EgglogTypeError(f"{self.where}: unknown function {head}")

    def sort_of(self, t) -> Sort:
        r = self.solver.resolve(t)
        if isinstance(r, int):
            raise EgglogTypeError(f"{self.where}: cannot infer a sort")
        return r

    def var_sort(self, name) -> Sort:
        if name in self.fixed:
            return self.fixed[name]
        r = self.solver.resolve(self.vars[name])
        if isinstance(r, int):
            raise EgglogTypeError(f"{self.where}: cannot infer the sort of variable {name}")
        return r

    def build(self, e) -> TExpr:
        if isinstance(e, S.Lit):
            return TLit(e.value, self.sort_of(self.infer(e, False)))
        if isinstance(e, S.Var):
            g = self._global(e.name)
            if g is not None and self.allow_tables:
                return TCall(g, (), g.output)
            return TVar(e.name, self.var_sort(e.name))
        args = tuple(self.build(a) for a in e.args)
        if e.head in self.env.functions:
            f = self.env.functions[e.head]
            return TCall(f, args, f.output)
        p = PRIMITIVES[e.head]
        if p.output == "bool":
            return TCall(p, args, BOOL)
        return TCall(p, args, I64)


def typecheck_closed(env, expr, scope: dict, expected: Sort | None, where, allow_tables=True):
    """Typecheck an expression whose free variables are exactly ``scope``."""
    c = _Checker(env, where, allow_tables)
    for name, sort in scope.items():
        c.vars[name] = sort
    t = c.infer(expr, bind_new=False)
    if expected is not None:
        c.solver.unify(t, expected, where)
    out = c.build(expr)
    if out.sort == BOOL:
        raise EgglogTypeError(f"{where}: a predicate cannot be used as a value")
    return out


def infer_sort(env: Env, expr) -> Sort:
    return typecheck_closed(env, expr, {}, None, "define").sort


def _check_fact(c: _Checker, fact):
    if isinstance(fact, S.Call) and fact.head == "=":
        if len(fact.args) < 2:
            raise EgglogTypeError(f"{c.where}: = expects at least two arguments")
        tys = [c.infer(a, True) for a in fact.args]
        for t in tys[1:]:
            c.solver.unify(tys[0], t, f"{c.where}: equality")
        return
    if isinstance(fact, S.Call):
        c.infer(fact, True)
        return
    raise EgglogTypeError(f"{c.where}: a query fact must be a function application or equality")


def _build_fact(c: _Checker, fact):
    if isinstance(fact, S.Call) and fact.head == "=":
        args = tuple(c.build(a) for a in fact.args)
        if args[0].sort == BOOL:
            raise EgglogTypeError(f"{c.where}: cannot equate predicates")
        return TCall(PRIMITIVES["="], args, BOOL)
    return c.build(fact)


def typecheck_facts(env: Env, facts, where="query") -> tuple[tuple, dict]:
    c = _Checker(env, where)
    for fact in facts:
        _check_fact(c, fact)
    typed = tuple(_build_fact(c, f) for f in facts)
    return typed, {name: c.var_sort(name) for name in c.vars}


def _typecheck_action(c: _Checker, a, scope_sorts: dict):
    def closed(e, expected=None):
        c.vars = {k: v for k, v in scope_sorts.items()}
        t = c.infer(e, bind_new=False)
        if expected is not None:
            c.solver.unify(t, expected, c.where)
        out = c.build(e)
        if out.sort == BOOL:
            raise EgglogTypeError(f"{c.where}: predicates cannot appear in actions")
        return out

    if isinstance(a, S.Set):
        if a.target.head not in env_functions(c):
            raise EgglogTypeError(f"{c.where}: set target must be a declared function")
        target = closed(a.target)
        value = closed(a.value, target.sort)
        return TSet(target.func, target.args, value)
    if isinstance(a, S.Union):
        lhs = closed(a.lhs)
        rhs = closed(a.rhs, lhs.sort)
        if lhs.sort.is_primitive:
            raise EgglogTypeError(
                f"{c.where}: cannot union values of primitive sort {lhs.sort}"
            )
        return TUnion(lhs.sort, lhs, rhs)
    if isinstance(a, S.Panic):
        return TPanic(a.message)
    if isinstance(a, S.Let):
        e = closed(a.expr)
        scope_sorts[a.name] = e.sort
        return TLet(a.name, e)
    if isinstance(a, S.Eval):
        return TEval(closed(a.expr))
    raise EgglogTypeError(f"{c.where}: not an action: {a!r}")


def env_functions(c: _Checker):
    return c.env.functions


def typecheck_rule(env: Env, rule: S.Rule, name: str) -> TypedRule:
    where = f"rule {name}"
    query, var_sorts = typecheck_facts(env, rule.query, where)
    c = _Checker(env, where)
    scope = dict(var_sorts)
    actions = tuple(_typecheck_action(c, a, scope) for a in rule.actions)
    return TypedRule(name, query, actions, var_sorts)


def typecheck_action(env: Env, action, where="top-level action"):
    c = _Checker(env, where)
    return _typecheck_action(c, action, {})
