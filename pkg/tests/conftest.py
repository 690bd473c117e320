import numpy as np
import pytest

from ebnc.network import BayesianNetwork, Variable
from ebnc.inference import Ebnc
from ebnc import structures

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_criterion():
    def _report(number, title, passed, detail=""):
        mark = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"[{mark}] criterion {number}: {title}" + (f" ({detail})" if detail else ""))

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def Y():
    return Variable("Y", ("y1", "y2"))


@pytest.fixture
def nb1():
    """Naive Bayes, one input: p(y2)=0.6, p(x2|y2)=0.8, p(x2|y1)=0.3."""
    variables = [Variable("Y", ("y1", "y2")), Variable("X1", ("x1", "x2"))]
    cpts = [[[0.4, 0.6]], [[0.7, 0.3], [0.2, 0.8]]]
    return Ebnc(BayesianNetwork(variables, [(0, 1)], cpts), 0)


@pytest.fixture
def figure():
    return structures.figure_network(np.random.default_rng(7))


def binary_suite(rng=None):
    """Every network named in the dimension targets, with its expected d."""
    Yv = Variable.binary("Y")
    out = [("figure", structures.figure_network(rng), 15)]
    for n in range(2, 7):
        out.append((f"chain{n}", structures.markov_chain(Yv, structures.binary_inputs(n), rng), 2 * n))
    for n in range(1, 7):
        out.append((f"naive{n}", structures.naive_bayes(Yv, structures.binary_inputs(n), rng), n + 1))
    for n in range(1, 7):
        out.append((f"trivial{n}", structures.trivial(Yv, structures.binary_inputs(n), rng), 2**n))
    return out
