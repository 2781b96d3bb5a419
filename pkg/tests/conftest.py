import pytest

from coldcavity.model import ModelParams


@pytest.fixture
def spec_params():
    """C=400, gamma_cav=0.05, delta=44, the reference numbers of the phase examples."""
    return ModelParams(delta=44.0, phi0=-1.0, gamma_cav=0.05, kappa=1.0, cooperativity=400.0,
                       beta=0.01, gamma_p=0.01, drive=1.0)


@pytest.fixture
def lab_params():
    from coldcavity.presets import base_params

    return base_params()


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.report_lines():
        terminalreporter.write_line(line)
