import pytest

from coldcavity.dynamics import ScanKind
from coldcavity.errors import ConfigError
from coldcavity.presets import PRESET_NAMES, preset_scenario, scenario
from coldcavity.steady import bistability_threshold, input_intensity

REQUIRED = {"fig2", "fig3_p1", "fig3_p2", "fig3_p3", "fig3_p4", "fig4",
            "fig6_p1", "fig6_p2", "fig6_p3", "fig6_p4", "kerr_pure", "stepwise"}


def test_all_required_presets_exist():
    assert REQUIRED <= set(PRESET_NAMES)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_preset_integrity(name):
    sc = scenario(name)
    params, protocol = preset_scenario(name)
    assert params == sc.params and protocol == sc.protocol
    assert protocol.is_quasi_static(params.kappa)
    assert sc.provenance and sc.description
    for tag in sc.provenance.values():
        assert tag.split()[0] in {"measured", "derived", "chosen"}


def test_fig2():
    sc = scenario("fig2")
    assert sc.params.delta == pytest.approx(44.0)
    assert sc.input_power == pytest.approx(100e-6)
    assert sc.params.beta == 0.0
    assert sc.protocol.round_trip


def test_fig4():
    sc = scenario("fig4")
    assert sc.params.delta == pytest.approx(44.0)
    assert sc.input_power == pytest.approx(80e-6)
    assert sc.protocol.kind is ScanKind.DRIFT


def test_fig3_powers_increase():
    drives = [scenario(f"fig3_p{i}").params.drive for i in range(1, 5)]
    assert drives == sorted(drives)


def test_kerr_pure_at_twice_threshold():
    params = scenario("kerr_pure").params
    assert params.beta == 0.0
    assert input_intensity(params) == pytest.approx(2 * bistability_threshold(params))


def test_fig6_brackets_threshold():
    ratios = [input_intensity(scenario(f"fig6_p{i}").params)
              / bistability_threshold(scenario(f"fig6_p{i}").params) for i in range(1, 5)]
    assert ratios[0] < 1 < ratios[1] < ratios[2] < ratios[3]


def test_stepwise_has_no_relaxation():
    sc = scenario("stepwise")
    assert sc.params.gamma_p == 0.0 and sc.protocol.kind is ScanKind.RAMP


def test_lab_common_values():
    params = scenario("fig3_p2").params
    assert params.cooperativity == 400.0
    assert params.kappa == pytest.approx(0.96, abs=0.01)
    assert params.gamma_cav == pytest.approx(0.055)
    assert 0 < params.beta < 1e-4
    assert params.gamma_p == 1e-3


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown preset"):
        scenario("fig9")
