import pytest

from secuee.model import ProblemInstance, UserParams
from secuee.utility import Type1, Type2, Type3


def unit_user(utility=None, **kw):
    """User with unit channel and noise, handy for hand-checked numbers."""
    fields = dict(g=1.0, sigma2=1.0, p_cir=1.0, r_min=1.0, r_e=0.0, c=1.0,
                  utility=utility or Type3(1.0, 0.5, 0.0))
    fields.update(kw)
    return UserParams(**fields)


@pytest.fixture
def type_specs():
    return {"type1": Type1(1.0, 0.5, 1.0), "type2": Type2(1.0, 1.0, 0.0),
            "type3": Type3(1.0, 0.5, 0.0)}


def instance(*users, b_total=1.0):
    return ProblemInstance(tuple(users), b_total)


# Lines printed by the acceptance suite, repeated in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
