import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixlog import corpus
from fixlog import syntax as S
from fixlog.errors import ParseError


def test_relation_declaration():
    (cmd,) = S.parse("(relation edge (i64 i64))")
    assert cmd == S.Relation("edge", ("i64", "i64"))


def test_empty_program():
    assert S.parse("") == []
    assert S.parse("  ; only a comment\n") == []


def test_check_command():
    (cmd,) = S.parse("(check (path 1 4))")
    assert cmd == S.Check((S.Call("path", (S.Lit(1), S.Lit(4))),))


def test_function_with_merge_and_default():
    (cmd,) = S.parse("(function path (i64 i64) i64 :merge (min old new) :default 0)")
    assert cmd.merge == S.Call("min", (S.Var("old"), S.Var("new")))
    assert cmd.default == S.Lit(0)


def test_literals():
    (cmd,) = S.parse('(set (f -3 "a\\"b" ()) 4)')
    assert cmd.target.args == (S.Lit(-3), S.Lit('a"b'), S.Lit(()))


def test_comments_are_skipped_and_lines_tracked():
    cmds = S.parse(";; header\n(relation r (i64))\n\n(r 1) ; trailing\n")
    assert [c.line for c in cmds] == [2, 4]


def test_rewrite_with_when():
    (cmd,) = S.parse("(rewrite (f a) (g a) :when ((!= a 0)))")
    assert isinstance(cmd, S.Rewrite)
    assert cmd.when == (S.Call("!=", (S.Var("a"), S.Lit(0))),)


def test_birewrite():
    (cmd,) = S.parse("(birewrite (f a) (g a))")
    assert cmd.bidirectional


def test_run_forms():
    assert S.parse("(run)") == [S.Run(None)]
    assert S.parse("(run 5)") == [S.Run(5)]


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("(relation edge (i64 i64)", 1, 1),
        ("(edge 1 2))", 1, 11),
        ('\n  (f "abc', 2, 6),
        ("(run x)", 1, 6),
        ("(rule)", 1, 1),
    ],
)
def test_parse_errors_carry_location(text, line, col):
    with pytest.raises(ParseError) as info:
        S.parse(text)
    assert (info.value.line, info.value.col) == (line, col)


@pytest.mark.parametrize("name", corpus.names())
def test_round_trip_on_corpus(name):
    cmds = S.parse(corpus.load(name))
    assert S.parse(S.show_program(cmds)) == cmds


_names = st.sampled_from(["f", "Add", "x", "old", "a-b", "q?"])
_exprs = st.recursive(
    st.one_of(
        st.builds(S.Var, _names),
        st.builds(S.Lit, st.integers(-(2**63), 2**63 - 1)),
        st.builds(S.Lit, st.text(alphabet="ab \"\\\n;()", max_size=5)),
    ),
    lambda inner: st.builds(S.Call, _names, st.lists(inner, max_size=3).map(tuple)),
    max_leaves=12,
)


@settings(max_examples=200, deadline=None)
@given(_exprs)
def test_expression_round_trip(expr):
    assert S.parse_expr(S.show(expr)) == expr
