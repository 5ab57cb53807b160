import os
import sys

import pytest

from fixlog import Engine, corpus, parse
from fixlog import syntax as S

sys.path.insert(0, os.path.dirname(__file__))

# programs whose run commands are cheap enough to replay iteration by iteration
SMALL = [n for n in corpus.names() if n != "math"]


def split_runs(text):
    """Commands of a program, with every run command removed, and the run limits in order."""
    setup, limits = [], []
    for cmd in parse(text):
        if isinstance(cmd, S.Run):
            limits.append(cmd.limit)
        elif not isinstance(cmd, (S.Check, S.Extract)):
            setup.append(cmd)
    return setup, limits


def iteration_budget(name, cap=20):
    """How many iterations the program itself asks for, at most ``cap``."""
    _, limits = split_runs(corpus.load(name))
    total = 0
    for lim in limits:
        if lim is None:
            return cap
        total += lim
    return min(total, cap)


def load_engine(name, naive=False, **kw):
    """Engine with a corpus program's declarations, rules and facts, before any run."""
    e = Engine(naive=naive, **kw)
    setup, _ = split_runs(corpus.load(name))
    for cmd in setup:
        e.execute(cmd)
    return e


@pytest.fixture(params=SMALL)
def small_program(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
