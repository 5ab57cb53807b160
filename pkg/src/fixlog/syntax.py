"""S-expression reader, surface AST and printer."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError

# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lit:
    value: object  # int, str or () for unit


@dataclass(frozen=True)
class Call:
    head: str
    args: tuple = ()


Expr = Var | Lit | Call

# -- commands ----------------------------------------------------------------


def _loc():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sort:
    name: str
    line: int | None = _loc()


@dataclass(frozen=True)
class Variant:
    name: str
    sorts: tuple[str, ...] = ()


@dataclass(frozen=True)
class Datatype:
    name: str
    variants: tuple[Variant, ...]
    line: int | None = _loc()


@dataclass(frozen=True)
class Function:
    name: str
    inputs: tuple[str, ...]
    output: str
    merge: Expr | None = None
    default: Expr | None = None
    extractable: bool = True
    line: int | None = _loc()


@dataclass(frozen=True)
class Relation:
    name: str
    inputs: tuple[str, ...]
    line: int | None = _loc()


@dataclass(frozen=True)
class Rule:
    query: tuple[Expr, ...]
    actions: tuple
    name: str | None = None
    line: int | None = _loc()


@dataclass(frozen=True)
class Rewrite:
    lhs: Expr
    rhs: Expr
    when: tuple[Expr, ...] = ()
    bidirectional: bool = False
    line: int | None = _loc()


@dataclass(frozen=True)
class Define:
    name: str
    expr: Expr
    line: int | None = _loc()


@dataclass(frozen=True)
class Set:
    target: Call
    value: Expr
    line: int | None = _loc()


@dataclass(frozen=True)
class Union:
    lhs: Expr
    rhs: Expr
    line: int | None = _loc()


@dataclass(frozen=True)
class Panic:
    message: str
    line: int | None = _loc()


@dataclass(frozen=True)
class Let:
    """Action-local binding inside a rule body (``let`` or ``define``)."""

    name: str
    expr: Expr
    line: int | None = _loc()


@dataclass(frozen=True)
class Eval:
    expr: Expr
    line: int | None = _loc()


@dataclass(frozen=True)
class Run:
    limit: int | None = None
    line: int | None = _loc()


@dataclass(frozen=True)
class Check:
    facts: tuple[Expr, ...]
    line: int | None = _loc()


@dataclass(frozen=True)
class Extract:
    expr: Expr
    line: int | None = _loc()


ACTION_TYPES = (Set, Union, Panic, Let, Eval)

# -- reader ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<open>\()
  | (?P<close>\))
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<int>[-+]?\d+(?![^\s()";]))
  | (?P<symbol>[A-Za-z0-9_\-+*/<>=!?%:.^&|~$@]+)
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


@dataclass(frozen=True)
class Atom:
    kind: str  # "int", "string", "symbol"
    value: object
    line: int
    col: int


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int
    col: int


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"unknown escape \\{nxt}", line, col)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def read_sexps(text: str) -> list:
    """Read every top-level s-expression in ``text``."""
    stack: list[tuple[list, int, int]] = []
    top: list = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            if text[pos] == '"':
                raise ParseError("unterminated string", line, col)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind == "open":
            stack.append(([], line, col))
        elif kind == "close":
            if not stack:
                raise ParseError("unbalanced ')'", line, col)
            items, l0, c0 = stack.pop()
            node = SList(tuple(items), l0, c0)
            (stack[-1][0] if stack else top).append(node)
        elif kind in ("int", "string", "symbol"):
            if kind == "int":
                value = int(tok)
            elif kind == "string":
                value = _unescape(tok[1:-1], line, col)
            else:
                value = tok
            atom = Atom(kind, value, line, col)
            (stack[-1][0] if stack else top).append(atom)
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    if stack:
        _, l0, c0 = stack[-1]
        raise ParseError("unbalanced '(': missing ')'", l0, c0)
    return top


# -- s-expression to AST ------------------------------------------------------


def _err(node, message):
    return ParseError(message, node.line, node.col)


def _symbol(node, what="identifier") -> str:
    if not isinstance(node, Atom) or node.kind != "symbol":
        raise _err(node, f"expected {what}")
    return node.value


def _int(node) -> int:
    if not isinstance(node, Atom) or node.kind != "int":
        raise _err(node, "expected integer")
    return node.value


def _sort_list(node) -> tuple[str, ...]:
    if not isinstance(node, SList):
        raise _err(node, "expected a parenthesized list of sorts")
    return tuple(_symbol(x, "sort name") for x in node.items)


def _keywords(node, items, allowed) -> dict:
    out = {}
    if len(items) % 2:
        raise _err(node, "keyword argument without value")
    for key, value in zip(items[::2], items[1::2]):
        k = _symbol(key, "keyword")
        if k not in allowed:
            raise _err(key, f"unknown keyword {k}")
        out[k] = value
    return out


def to_expr(node) -> Expr:
    if isinstance(node, Atom):
        if node.kind == "symbol":
            return Var(node.value)
        return Lit(node.value)
    if not node.items:
        return Lit(())
    head = _symbol(node.items[0], "function name")
    return Call(head, tuple(to_expr(x) for x in node.items[1:]))


def _expect_len(node, n, form):
    if len(node.items) != n:
        raise _err(node, f"{form} expects {n - 1} argument(s)")


def to_action(node):
    if not isinstance(node, SList) or not node.items:
        raise _err(node, "expected an action")
    head = node.items[0]
    name = head.value if isinstance(head, Atom) and head.kind == "symbol" else None
    line = node.line
    if name == "set":
        _expect_len(node, 3, "set")
        target = to_expr(node.items[1])
        if not isinstance(target, Call):
            raise _err(node.items[1], "set target must be a function application")
        return Set(target, to_expr(node.items[2]), line=line)
    if name == "union":
        _expect_len(node, 3, "union")
        return Union(to_expr(node.items[1]), to_expr(node.items[2]), line=line)
    if name == "panic":
        _expect_len(node, 2, "panic")
        msg = node.items[1]
        if not isinstance(msg, Atom) or msg.kind != "string":
            raise _err(msg, "panic expects a string message")
        return Panic(msg.value, line=line)
    if name in ("let", "define"):
        _expect_len(node, 3, name)
        return Let(_symbol(node.items[1]), to_expr(node.items[2]), line=line)
    expr = to_expr(node)
    return Eval(expr, line=line)


def _list_of(node, what) -> tuple:
    if not isinstance(node, SList):
        raise _err(node, f"expected a list of {what}")
    return node.items


def to_command(node):
    if not isinstance(node, SList) or not node.items:
        raise _err(node, "expected a command")
    head = node.items[0]
    name = head.value if isinstance(head, Atom) and head.kind == "symbol" else None
    items = node.items
    line = node.line
    if name == "sort":
        _expect_len(node, 2, "sort")
        return Sort(_symbol(items[1]), line=line)
    if name == "datatype":
        if len(items) < 2:
            raise _err(node, "datatype expects a name")
        variants = []
        for v in items[2:]:
            if not isinstance(v, SList) or not v.items:
                raise _err(v, "expected a constructor declaration")
            variants.append(
                Variant(_symbol(v.items[0]), tuple(_symbol(s, "sort name") for s in v.items[1:]))
            )
        return Datatype(_symbol(items[1]), tuple(variants), line=line)
    if name == "function":
        if len(items) < 4:
            raise _err(node, "function expects a name, input sorts and an output sort")
        rest = [x for x in items[4:] if not (isinstance(x, Atom) and x.value == ":unextractable")]
        kw = _keywords(node, rest, (":merge", ":default"))
        return Function(
            _symbol(items[1]),
            _sort_list(items[2]),
            _symbol(items[3], "sort name"),
            merge=to_expr(kw[":merge"]) if ":merge" in kw else None,
            default=to_expr(kw[":default"]) if ":default" in kw else None,
            extractable=len(rest) == len(items) - 4,
            line=line,
        )
    if name == "relation":
        _expect_len(node, 3, "relation")
        return Relation(_symbol(items[1]), _sort_list(items[2]), line=line)
    if name == "rule":
        if len(items) < 3:
            raise _err(node, "rule expects a query and a list of actions")
        kw = _keywords(node, items[3:], (":name",))
        rule_name = None
        if ":name" in kw:
            n = kw[":name"]
            rule_name = n.value if isinstance(n, Atom) else None
        query = tuple(to_expr(x) for x in _list_of(items[1], "facts"))
        actions = tuple(to_action(x) for x in _list_of(items[2], "actions"))
        return Rule(query, actions, name=rule_name, line=line)
    if name in ("rewrite", "birewrite"):
        if len(items) < 3:
            raise _err(node, f"{name} expects two patterns")
        kw = _keywords(node, items[3:], (":when",))
        when = tuple(to_expr(x) for x in _list_of(kw[":when"], "facts")) if ":when" in kw else ()
        return Rewrite(
            to_expr(items[1]), to_expr(items[2]), when, bidirectional=name == "birewrite", line=line
        )
    if name in ("define", "let"):
        _expect_len(node, 3, name)
        return Define(_symbol(items[1]), to_expr(items[2]), line=line)
    if name == "run":
        if len(items) > 2:
            raise _err(node, "run expects at most one iteration count")
        limit = _int(items[1]) if len(items) == 2 else None
        if limit is not None and limit < 0:
            raise _err(items[1], "iteration count must be non-negative")
        return Run(limit, line=line)
    if name == "check":
        return Check(tuple(to_expr(x) for x in items[1:]), line=line)
    if name == "extract":
        _expect_len(node, 2, "extract")
        return Extract(to_expr(items[1]), line=line)
    return to_action(node)


def parse(text: str) -> list:
    """Parse program text into surface commands in source order."""
    return [to_command(node) for node in read_sexps(text)]


def parse_expr(text: str) -> Expr:
    nodes = read_sexps(text)
    if len(nodes) != 1:
        raise ParseError("expected exactly one expression")
    return to_expr(nodes[0])


# -- printer -----------------------------------------------------------------


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def format_value(value) -> str:
    if isinstance(value, str):
        return _quote(value)
    if value == ():
        return "()"
    return str(value)


def show(node) -> str:
    """Render an expression, action or command back to concrete syntax."""
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Lit):
        return format_value(node.value)
    if isinstance(node, Call):
        return "(" + " ".join([node.head, *map(show, node.args)]) + ")"
    if isinstance(node, Sort):
        return f"(sort {node.name})"
    if isinstance(node, Datatype):
        parts = ["(" + " ".join([v.name, *v.sorts]) + ")" for v in node.variants]
        return "(" + " ".join(["datatype", node.name, *parts]) + ")"
    if isinstance(node, Function):
        out = f"(function {node.name} ({' '.join(node.inputs)}) {node.output}"
        if node.merge is not None:
            out += f" :merge {show(node.merge)}"
        if node.default is not None:
            out += f" :default {show(node.default)}"
        if not node.extractable:
            out += " :unextractable"
        return out + ")"
    if isinstance(node, Relation):
        return f"(relation {node.name} ({' '.join(node.inputs)}))"
    if isinstance(node, Rule):
        q = " ".join(map(show, node.query))
        a = " ".join(map(show, node.actions))
        name = f" :name {_quote(node.name)}" if node.name is not None else ""
        return f"(rule ({q}) ({a}){name})"
    if isinstance(node, Rewrite):
        head = "birewrite" if node.bidirectional else "rewrite"
        out = f"({head} {show(node.lhs)} {show(node.rhs)}"
        if node.when:
            out += " :when (" + " ".join(map(show, node.when)) + ")"
        return out + ")"
    if isinstance(node, Define):
        return f"(define {node.name} {show(node.expr)})"
    if isinstance(node, Set):
        return f"(set {show(node.target)} {show(node.value)})"
    if isinstance(node, Union):
        return f"(union {show(node.lhs)} {show(node.rhs)})"
    if isinstance(node, Panic):
        return f"(panic {_quote(node.message)})"
    if isinstance(node, Let):
        return f"(let {node.name} {show(node.expr)})"
    if isinstance(node, Eval):
        return show(node.expr)
    if isinstance(node, Run):
        return "(run)" if node.limit is None else f"(run {node.limit})"
    if isinstance(node, Check):
        return "(" + " ".join(["check", *map(show, node.facts)]) + ")"
    if isinstance(node, Extract):
        return f"(extract {show(node.expr)})"
    raise TypeError(f"cannot print {node!r}")


def show_program(commands) -> str:
    return "\n".join(show(c) for c in commands) + "\n"
