import math

import pytest

from thermocount.convex import PressureSurface
from thermocount.manhattan import trace_curve
from thermocount.potential import Potential, PotentialPair
from thermocount.shift_core import full_shift

# Reference values from mpmath (30 digits) on closed forms for depth-1
# potentials on the full 2-shift, where P(u) = log(exp(u0) + exp(u1)).
DELTA_F = 0.580188272669221288918369491351
DELTA_G = 0.520631398228575978004824972219
M_STAR = 1.11439355106757831977860834834
H_STAR = 0.570301502194641041435513521697801
A_STAR = 0.284554266106440700177160706970878
B_STAR = 0.256415012285791884990967416635888
T_STAR = 0.823495120393366113336967739814623
H_BS = {(1.0, 1.0): 0.269735714150464345773464805319, (2.0, 1.0): 0.18337100549846399906567304091}
SLOPE_RANGE = (1.0409301901797567665574907281, 1.19237885758612037625484658671)


def make_pair(shift, depth, f, g):
    return PotentialPair(Potential.from_values(shift, depth, f), Potential.from_values(shift, depth, g))


@pytest.fixture(scope="session")
def full2():
    return full_shift(2)


@pytest.fixture(scope="session")
def standard_pair(full2):
    return make_pair(full2, 1, [1.0, math.sqrt(2)], [math.sqrt(3), 1.0])


@pytest.fixture(scope="session")
def rigid_pair(full2):
    return make_pair(full2, 1, [1.0, math.sqrt(2)], [1.7, 1.7 * math.sqrt(2)])


@pytest.fixture(scope="session")
def depth2_pair(full2):
    f = {"00": 1.0, "01": math.sqrt(2), "10": math.sqrt(3) - 0.5, "11": (1 + math.sqrt(5)) / 2}
    g = {"00": math.sqrt(3), "01": 1.0, "10": math.pi / 2.5, "11": math.sqrt(2) - 0.2}
    return make_pair(full2, 2, f, g)


@pytest.fixture(scope="session")
def standard_surface(standard_pair):
    return PressureSurface(standard_pair)


@pytest.fixture(scope="session")
def standard_curve(standard_surface):
    return trace_curve(standard_surface, 201)


@pytest.fixture(scope="session")
def rigid_curve(rigid_pair):
    return trace_curve(PressureSurface(rigid_pair), 201)


# One line per acceptance criterion, collected by tests/test_acceptance.py.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
