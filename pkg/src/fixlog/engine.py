"""Program execution: actions, the iteration loop, check and extract."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import syntax as S
from .database import Database
from .desugar import desugar
from .errors import CheckFailure, EgglogTypeError, EngineError, Panic
from .query import FlatQuery, JoinStats, TrieCache, compile_query, generic_join
from .rebuild import rebuild_fixpoint
from .typecheck import (
    Env,
    FunctionDecl,
    TCall,
    TEval,
    TLet,
    TLit,
    TPanic,
    TSet,
    TUnion,
    TVar,
    TypedRule,
    show_texpr,
    typecheck_action,
    typecheck_closed,
    typecheck_facts,
    typecheck_rule,
)

DEFAULT_MAX_ITERATIONS = 1000


@dataclass
class CompiledRule:
    name: str
    typed: TypedRule
    query: FlatQuery
    # rows with a timestamp at or after this are new to the rule
    since: int = 0
    # the actions compiled to closures over a substitution dict
    program: list = field(default_factory=list)


@dataclass
class RunReport:
    iterations: int
    saturated: bool
    hit_cap: bool
    rows: dict[str, int]
    considered: int = 0
    matches: int = 0
    seconds: float = 0.0

    def __str__(self):
        if self.saturated:
            how = "saturated"
        elif self.hit_cap:
            how = "stopped at the iteration cap"
        else:
            how = "not saturated"
        counts = ", ".join(f"{k}={v}" for k, v in self.rows.items())
        plural = "" if self.iterations == 1 else "s"
        return f"ran {self.iterations} iteration{plural} ({how}); rows: {counts}"


@dataclass
class IterationStats:
    iteration: int
    rows: int
    seconds: float
    considered: int
    matches: int
    changed: bool


@dataclass
class Outcome:
    """What executing one command produced, for the CLI and REPL to print."""

    kind: str  # "none", "run", "check", "extract"
    text: str = ""
    ok: bool = True
    report: RunReport | None = None


class Engine:
    """An instance of the language: declarations, rules and the database.

    ``naive=True`` re-matches every rule against the whole database each
    iteration; the default semi-naive mode only looks at matches that touch
    a row created or changed since the rule last ran.  Both modes produce the
    same database after every iteration.
    """

    def __init__(self, naive: bool = False, max_iterations: int = DEFAULT_MAX_ITERATIONS, full_scan_rebuild: bool = False):
        self.naive = naive
        self.max_iterations = max_iterations
        self.full_scan_rebuild = full_scan_rebuild
        self.env = Env()
        self.db = Database()
        self.rules: list[CompiledRule] = []
        self.stats = JoinStats()
        self.iteration = 0
        self.history: list[IterationStats] = []
        self.on_iteration = None

    # -- commands --

    def run_program(self, text: str) -> list[Outcome]:
        """Execute program text; a failed check raises :class:`CheckFailure`."""
        outcomes = []
        for cmd in S.parse(text):
            out = self.execute(cmd)
            outcomes.append(out)
            if out.kind == "check" and not out.ok:
                raise CheckFailure(out.text)
        return outcomes

    def execute(self, cmd) -> Outcome:
        result = Outcome("none")
        for core in desugar(cmd, self.env):
            result = self._execute_core(core)
        return result

    def _execute_core(self, cmd) -> Outcome:
        if isinstance(cmd, S.Sort):
            self.db.add_sort(self.env.declare_sort(cmd.name))
        elif isinstance(cmd, S.Function):
            self.db.add_function(self.env.declare_function(cmd))
        elif isinstance(cmd, S.Rule):
            self.add_rule(cmd)
        elif isinstance(cmd, (S.Set, S.Union, S.Eval, S.Panic)):
            action = typecheck_action(self.env, cmd)
            self.perform(action, {})
            rebuild_fixpoint(self.db, self.full_scan_rebuild)
        elif isinstance(cmd, S.Let):
            raise EgglogTypeError("let outside a rule; use define")
        elif isinstance(cmd, S.Run):
            report = self.run(cmd.limit)
            return Outcome("run", str(report), report=report)
        elif isinstance(cmd, S.Check):
            ok, text = self.check(cmd.facts)
            return Outcome("check", text, ok=ok)
        elif isinstance(cmd, S.Extract):
            term, _ = self.extract(cmd.expr)
            return Outcome("extract", term)
        else:
            raise EgglogTypeError(f"unsupported command {cmd!r}")
        return Outcome("none")

    def add_rule(self, rule: S.Rule) -> CompiledRule:
        name = rule.name or S.show(rule)
        typed = typecheck_rule(self.env, rule, name)
        query = compile_query(typed.query, typed.var_sorts)
        compiled = CompiledRule(name, typed, query)
        compiled.program = [self.compile_action(a) for a in typed.actions]
        self.rules.append(compiled)
        return compiled

    # -- actions --

    def eval(self, e, env: dict):
        if isinstance(e, TVar):
            return env[e.name]
        if isinstance(e, TLit):
            return e.value
        args = tuple(self.eval(a, env) for a in e.args)
        if e.is_table:
            return self.db.get_or_default(self.db.tables[e.func.name], args)
        out = e.func.fn(*args)
        if out is None:
            raise EngineError(f"primitive {e.func.name} failed on {args}")
        return out

    def lookup_eval(self, e, env=None):
        """Evaluate without inserting anything; ``None`` when some lookup misses."""
        env = env or {}
        if isinstance(e, TVar):
            return env[e.name]
        if isinstance(e, TLit):
            return e.value
        args = []
        for a in e.args:
            v = self.lookup_eval(a, env)
            if v is None:
                return None
            args.append(v)
        if e.is_table:
            table = self.db.tables[e.func.name]
            return table.lookup(self.db.canonical_key(table, tuple(args)))
        return e.func.fn(*args)

    def compile_expr(self, e):
        """Turn a typed expression into a closure ``env -> value`` (get-or-default)."""
        if isinstance(e, TVar):
            name = e.name
            return lambda env: env[name]
        if isinstance(e, TLit):
            value = e.value
            return lambda env: value
        args = [self.compile_expr(a) for a in e.args]
        if e.is_table:
            table = self.db.tables[e.func.name]
            get = self.db.get_or_default
            return lambda env: get(table, tuple([a(env) for a in args]))
        fn, fname = e.func.fn, e.func.name

        def prim(env):
            vals = [a(env) for a in args]
            out = fn(*vals)
            if out is None:
                raise EngineError(f"primitive {fname} failed on {tuple(vals)}")
            return out

        return prim

    def compile_action(self, action):
        db = self.db
        if isinstance(action, TSet):
            table = db.tables[action.func.name]
            args = [self.compile_expr(a) for a in action.args]
            value = self.compile_expr(action.value)

            def do_set(env):
                key = tuple([a(env) for a in args])
                db.set(table, key, value(env))

            return do_set
        if isinstance(action, TUnion):
            sort = action.sort
            lhs, rhs = self.compile_expr(action.lhs), self.compile_expr(action.rhs)
            return lambda env: db.union(sort, lhs(env), rhs(env))
        if isinstance(action, TEval):
            return self.compile_expr(action.expr)
        if isinstance(action, TLet):
            name, expr = action.name, self.compile_expr(action.expr)

            def do_let(env):
                env[name] = expr(env)

            return do_let
        if isinstance(action, TPanic):
            message = action.message

            def do_panic(env):
                raise Panic(message)

            return do_panic
        raise EngineError(f"unknown action {action!r}")

    def perform(self, action, env: dict):
        db = self.db
        if isinstance(action, TSet):
            key = tuple(self.eval(a, env) for a in action.args)
            value = self.eval(action.value, env)
            db.set(db.tables[action.func.name], key, value)
        elif isinstance(action, TUnion):
            db.union(action.sort, self.eval(action.lhs, env), self.eval(action.rhs, env))
        elif isinstance(action, TEval):
            self.eval(action.expr, env)
        elif isinstance(action, TLet):
            env[action.name] = self.eval(action.expr, env)
        elif isinstance(action, TPanic):
            raise Panic(action.message)
        else:
            raise EngineError(f"unknown action {action!r}")

    # -- evaluation loop --

    def match_rule(self, rule: CompiledRule, cache: TrieCache, stats: JoinStats) -> list[tuple]:
        q = rule.query
        since = 0 if self.naive else rule.since
        if since == 0:
            return sorted(generic_join(q, self.db, cache=cache, stats=stats))
        found: set = set()
        for j, atom in enumerate(q.atoms):
            if self.db.tables[atom.func].count_since(since) == 0:
                continue
            found.update(generic_join(q, self.db, delta_atom=j, since=since, cache=cache, stats=stats))
        return sorted(found)

    def step(self) -> bool:
        """One iteration: match every rule, apply all actions, rebuild.  Returns whether anything changed."""
        db = self.db
        start = time.perf_counter()
        before = db.changes
        stats = JoinStats()
        db.timestamp += 1
        now = db.timestamp
        cache = TrieCache()
        matched = []
        for rule in self.rules:
            matched.append(self.match_rule(rule, cache, stats))
            rule.since = now
        cache.clear()
        for rule, subs in zip(self.rules, matched):
            names = rule.query.out_vars
            for sub in subs:
                env = dict(zip(names, sub))
                try:
                    for action in rule.program:
                        action(env)
                except Panic:
                    raise
                except EngineError as err:
                    raise EngineError(f"{err} (in rule {rule.name} with {env})") from None
        rebuild_fixpoint(db, self.full_scan_rebuild)
        self.iteration += 1
        self.stats.considered += stats.considered
        self.stats.matches += stats.matches
        changed = db.changes != before
        self.history.append(
            IterationStats(self.iteration, db.num_rows, time.perf_counter() - start,
                           stats.considered, stats.matches, changed)
        )
        if self.on_iteration is not None:
            self.on_iteration(self)
        return changed

    def run(self, limit: int | None = None) -> RunReport:
        """Run ``limit`` iterations, or until saturation (capped) when ``limit`` is None."""
        cap = self.max_iterations if limit is None else limit
        start = time.perf_counter()
        before = (self.stats.considered, self.stats.matches)
        n = 0
        saturated = False
        while n < cap:
            changed = self.step()
            n += 1
            if not changed:
                saturated = True
                break
        return RunReport(
            iterations=n,
            saturated=saturated,
            hit_cap=limit is None and not saturated,
            rows={name: len(t) for name, t in self.db.tables.items()},
            considered=self.stats.considered - before[0],
            matches=self.stats.matches - before[1],
            seconds=time.perf_counter() - start,
        )

    # -- queries --

    def query(self, facts) -> list[dict]:
        typed, var_sorts = typecheck_facts(self.env, facts, "check")
        q = compile_query(typed, var_sorts)
        return [dict(zip(q.out_vars, row)) for row in generic_join(q, self.db)]

    def check(self, facts) -> tuple[bool, str]:
        """Whether the facts hold; never modifies the database."""
        typed, var_sorts = typecheck_facts(self.env, facts, "check")
        q = compile_query(typed, var_sorts)
        ok = bool(generic_join(q, self.db))
        text = " ".join(S.show(f) for f in facts)
        if not ok:
            return False, text
        if len(typed) == 1:
            fact = typed[0]
            if isinstance(fact, TCall) and fact.is_table and fact.sort.is_primitive and fact.sort.kind != "Unit":
                value = self.lookup_eval(fact)
                if value is not None:
                    return True, S.format_value(value)
        return True, "ok"

    # -- extraction --

    def extraction_costs(self) -> dict:
        """Best (cost, function index, child key, table, key) for every extractable class."""
        best: dict = {}
        tables = [
            t for t in self.db.tables.values() if t.id_output and t.decl.extractable
        ]
        changed = True
        while changed:
            changed = False
            for table in tables:
                sorts = table.input_sorts
                out_name = table.output_sort.name
                index = table.decl.index
                for key, (value, _) in table.rows.items():
                    total = 1
                    children = []
                    for s, v in zip(sorts, key):
                        if s.is_primitive:
                            children.append((1, v))
                            total += 1
                        else:
                            b = best.get((s.name, v))
                            if b is None:
                                break
                            children.append((b[0], v))
                            total += b[0]
                    else:
                        cand = (total, index, tuple(children))
                        cur = best.get((out_name, value))
                        if cur is None or cand < cur[:3]:
                            best[(out_name, value)] = cand + (table, key)
                            changed = True
        return best

    def extract_value(self, sort, value, best=None):
        if sort.is_primitive:
            return TLit(value, sort), 1
        best = self.extraction_costs() if best is None else best
        value = self.db.find(sort, value)

        def build(s, v):
            if s.is_primitive:
                return TLit(v, s)
            entry = best.get((s.name, v))
            if entry is None:
                raise EngineError(f"unextractable: no finite term represents {s.name}#{v}")
            table, key = entry[3], entry[4]
            args = tuple(build(si, ki) for si, ki in zip(table.input_sorts, key))
            return TCall(table.decl, args, s)

        term = build(sort, value)
        return term, best[(sort.name, value)][0]

    def extract(self, expr) -> tuple[str, int]:
        """Smallest term equal to ``expr``, as text, and its cost."""
        typed = typecheck_closed(self.env, expr, {}, None, "extract")
        value = self.eval(typed, {})
        rebuild_fixpoint(self.db, self.full_scan_rebuild)
        term, cost = self.extract_value(typed.sort, self.db.find(typed.sort, value))
        return show_texpr(term), cost

    # -- inspection --

    def dump(self) -> str:
        return self.db.dump()

    def function(self, name) -> FunctionDecl:
        return self.env.function(name)
