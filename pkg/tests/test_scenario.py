import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SCENARIOS
from marsupial.control import CarrierPolicy
from marsupial.scenario import ScenarioError, load_scenario, parse_scenario, render

BASE = """\
x_c = [0, 0]
x_p = [0, 0]
x_t = [20, 0]
eta = 9
dt = 0.001
t_end = 30
"""


def errors_of(text: str) -> list[str]:
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    return info.value.errors


@pytest.mark.parametrize("name", ["paper_3d.scn", "paper_3d_elevated.scn", "obstacles_2d.scn"])
def test_shipped_scenarios_parse_and_round_trip(name):
    sc = load_scenario(SCENARIOS / name)
    assert parse_scenario(render(sc)) == sc


def test_reference_values():
    sc = load_scenario(SCENARIOS / "paper_3d.scn")
    p = sc.params
    assert (p.k_c, p.k_p, p.b, p.c, p.d) == (0.5, 1.0, 8.0, 1.0, 1.0)
    assert sc.planar_carrier and sc.dimension == 3
    assert sum(v * v for v in sc.x_t) ** 0.5 == pytest.approx(26.560935381892378, rel=1e-15)


def test_defaults():
    sc = parse_scenario(BASE)
    assert sc.integrator == "rk4"
    assert sc.carrier_policy is CarrierPolicy.STOP_ON_SEPARATION
    assert sc.obstacles == () and sc.sim_config().cbf is None
    assert sc.params.b == 8.0


def test_b_equal_one():
    assert "Eq7.b_gt_1" in errors_of(BASE + "b = 1\n")


def test_passenger_off_carrier():
    assert errors_of(BASE.replace("x_p = [0, 0]", "x_p = [0.5, 0]")) == ["Assumption2.coincident_start"]


def test_bc_not_below_eta():
    assert errors_of(BASE + "c = 2\n") == ["Eq7.bc_lt_eta"]


def test_unknown_key_has_line_number():
    assert errors_of(BASE + "\n# tuning\nkp = 3\n") == ["line 9: unknown key 'kp'"]


def test_syntax_error_has_line_number():
    errs = errors_of("x_c = [0, 0]\nthis is not a pair\n")
    assert errs[0].startswith("line 2: syntax error")


def test_bad_values_have_line_numbers():
    errs = errors_of(BASE + "dt = 0.01\nk_p = fast\nintegrator = midpoint\nx_p = [1, nan]\n")
    assert "line 7: duplicate key 'dt'" in errs
    assert any(e.startswith("line 8: k_p:") for e in errs)
    assert any(e.startswith("line 9: integrator:") for e in errs)
    assert any(e.startswith("line 10:") for e in errs)


def test_missing_keys():
    assert errors_of("x_c = [0, 0]\n") == [f"missing required key {k!r}"
                                           for k in ("x_p", "x_t", "eta", "dt", "t_end")]


def test_dimension_checks():
    assert errors_of(BASE.replace("x_t = [20, 0]", "x_t = [20, 0, 0]")) == ["State.dimension_mismatch"]
    assert errors_of(BASE + "dimension = 3\n") == ["State.dimension_mismatch"]


def test_planar_height_gate():
    text = BASE.replace("[0, 0]", "[0, 0, 0]").replace("[20, 0]", "[20, 0, 9]") + "planar_carrier = true\n"
    assert errors_of(text) == ["Planar.target_height_le_bc"]


def test_obstacle_checks():
    assert errors_of(BASE + "obstacle = [0.5, 0, 1]\n") == ["CBF.start_outside_obstacles"]
    assert errors_of(BASE + "obstacle = [5, 0]\n")[0].startswith("line 7: obstacle needs 2")
    assert errors_of(BASE + "obstacle = [5, 0, -1]\n")[0].startswith("line 7: obstacle:")
    assert errors_of(BASE + "obstacle = [5, 0, 1]\ncbf_alpha = 0\n")[0].startswith("CBF.config")


def test_planner_requires_continue_policy():
    assert errors_of(BASE + "carrier_planner = approach\n") == ["Planner.requires_ContinueWithFrozenEtc"]
    text = BASE + "carrier_policy = ContinueWithFrozenEtc\ncarrier_planner = constant\n"
    assert errors_of(text) == ["Planner.velocity_dimension"]


def test_nonpositive_step():
    assert errors_of(BASE.replace("dt = 0.001", "dt = 0")) == ["SimConfig.dt_positive"]


finite = st.floats(-50, 50, allow_nan=False).map(lambda v: round(v, 6))


@st.composite
def scenario_text(draw):
    n = draw(st.integers(2, 4))
    x_c = [draw(finite) for _ in range(n)]
    direction = [draw(st.floats(0.1, 1.0)) for _ in range(n)]
    dist = draw(st.floats(30, 80))
    norm = sum(v * v for v in direction) ** 0.5
    x_t = [c + dist * v / norm for c, v in zip(x_c, direction)]
    b = draw(st.floats(1.1, 10))
    c = draw(st.floats(0.1, 2))
    lines = [
        f"x_c = {x_c}", f"x_p = {x_c}", f"x_t = {x_t}",
        f"b = {b!r}", f"c = {c!r}", f"eta = {b * c * 1.5!r}",
        f"k_c = {draw(st.floats(0.1, 2))!r}", f"dt = {draw(st.sampled_from([1e-3, 5e-3, 0.01]))}",
        f"t_end = {draw(st.floats(1, 60))!r}",
        f"integrator = {draw(st.sampled_from(['rk4', 'euler']))}",
        f"k_nav = {draw(st.floats(0.1, 5))!r}",
    ]
    if draw(st.booleans()):
        center = [x + 10 * (-1) ** i for i, x in enumerate(x_c)]
        lines.append(f"obstacle = {center + [draw(st.floats(0.5, 3))]}")
        lines.append(f"cbf_alpha = {draw(st.floats(0.1, 10))!r}")
    if draw(st.booleans()):
        lines += ["carrier_policy = ContinueWithFrozenEtc", "carrier_planner = approach",
                  f"planner_speed = {draw(st.floats(0, 3))!r}", "planner_duration = 1.5"]
    if draw(st.booleans()):
        lines.append("out_csv = out/run.csv")
    return "\n".join(lines) + "\n"


@settings(max_examples=200, deadline=None)
@given(scenario_text())
def test_round_trip_property(text):
    sc = parse_scenario(text)
    rendered = render(sc)
    assert parse_scenario(rendered) == sc
    assert render(parse_scenario(rendered)) == rendered
