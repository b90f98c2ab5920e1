import pytest

from qremainder.density_models import (
    BenfordSignificandDensity,
    ClippedPowerDensity,
    PiecewiseConstantDensity,
    PowerDensity,
    PuncturedUniformDensity,
    uniform,
)

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def builtin_models():
    return [
        uniform(),
        BenfordSignificandDensity(2),
        BenfordSignificandDensity(10),
        PowerDensity(0.1),
        PowerDensity(0.5),
        PowerDensity(1.0),
        PowerDensity(1.5),
        PowerDensity(2.0),
        PowerDensity(5.0),
        PiecewiseConstantDensity(2, 2, (0.4, 0.4, 1.6, 1.6)),
        PiecewiseConstantDensity(3, 1, (0.5, 1.0, 1.5)),
        PuncturedUniformDensity(0.3),
        ClippedPowerDensity(0.5, 0.01),
    ]


@pytest.fixture(params=builtin_models(), ids=lambda m: m.spec)
def model(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
