import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slantlab import jets
from slantlab.ambient import ConstantFactor, LinearFactor, ProductFactor
from slantlab.errors import ScenarioConfigError
from slantlab.scenarios import (
    CircleCurve,
    SampleSpec,
    TurningAngleCurve,
    build_scenario,
    cr_product,
    example81_immersion,
    example82_immersion,
    example82_slant_cos2,
    example_81,
    example_82,
    load_scenario,
    random_scenario,
    resolve,
    sample_points,
    scenario_from_config,
)
from slantlab.slant import slant_function
from slantlab.submanifold import point_geometry

from conftest import U82


def test_example81_k1_slant_on_scenario_points():
    sc = example_81(k=1.0)
    pts, _ = sc.points()
    for u in pts[:10]:
        assert abs(slant_function(point_geometry(sc.immersion, sc.ambient, u)).theta - math.pi / 4) < 1e-12


def test_example81_excludes_degenerate_locus():
    imm = example81_immersion()
    assert not imm.admits([0.0, 0.0, 1.0, 0.0])
    assert imm.admits([0.0, 0.0, 1.0, 0.01])


class _SlowCurve:
    def __call__(self, s):
        return (2.0 * jets.cos(s), 2.0 * jets.sin(s)) if not isinstance(s, float) else (2 * math.cos(s), 2 * math.sin(s))

    def speed_sq(self, s):
        return 4.0

    def to_dict(self):
        return {"kind": "circle", "radius": 2.0}


def test_non_unit_speed_curve_rejected():
    with pytest.raises(ValueError):
        example_81(curve=_SlowCurve())


def test_circle_radius_is_unit_speed():
    c = CircleCurve(2.5)
    assert c.speed_sq(0.4) == pytest.approx(1.0, abs=1e-15)


def test_turning_angle_curve_is_unit_speed_with_consistent_jets():
    c = TurningAngleCurve((0.2, 1.0, -0.3))
    for s in (0.3, 0.9, 1.7):
        assert c.speed_sq(s) == pytest.approx(1.0, abs=1e-12)
        jet = jets.evaluate_jet(lambda cc: list(c(cc[0])), [s])
        fd = jets.central_difference(lambda cc: [float(v) for v in c(cc[0])], [s], step=1e-5, richardson=True)
        assert np.max(np.abs(jet.d1 - fd)) < 1e-9


def test_turning_curve_scenario_keeps_slant():
    sc = build_scenario("example81", {"k": 0.5, "curve": {"kind": "turning", "coeffs": [0.0, 0.7]}})
    u = [0.1, 0.0, 1.0, 1.2]
    sa = slant_function(point_geometry(sc.immersion, sc.ambient, u))
    assert abs(math.sqrt(sa.cos2) - 0.5 / math.sqrt(1.25)) < 1e-10


def test_example82_tangent_columns():
    u1, u2, u3, u4 = U82
    d1 = jets.evaluate_jet(example82_immersion().phi, U82).d1
    assert np.max(np.abs(d1[:, 2] - [0, math.cos(u4), math.sin(u4), 0, -u4 * math.sin(u3), u4 * math.cos(u3)])) < 1e-12
    assert np.max(np.abs(d1[:, 3] - [0, -u3 * math.sin(u4), u3 * math.cos(u4), 0, math.cos(u3), math.sin(u3)])) < 1e-12
    assert np.max(np.abs(d1[:, 0] - [u1, 0, 0, u1, 0, 0])) < 1e-12


def test_example82_domain():
    imm = example82_immersion()
    assert not imm.admits(U82)  # u3 < u4
    assert not imm.admits([1.0, 1.0, 0.5, 0.5])
    assert not imm.admits([0.0, 1.0, 1.0, 0.3])
    assert not imm.admits([1.0, 1.0, 2.0, 0.5])  # u3 u4 = 1
    assert imm.admits([1.0, 1.0, 1.0, 0.3])


def test_example82_equal_angle_branch(chart82):
    # at u3 = u4 = t the closed form reduces to (t^2 - 1)^2 / (1 + t^2)^2
    for t in (0.3, 0.7, 1.6):
        assert example82_slant_cos2([1, 1, t, t]) == pytest.approx((t * t - 1) ** 2 / (1 + t * t) ** 2, rel=1e-14)
        sa = slant_function(point_geometry(chart82, build_scenario("example82").ambient, [1.0, 1.0, t, t]))
        assert abs(sa.cos2 - (t * t - 1) ** 2 / (1 + t * t) ** 2) < 1e-12


def test_grid_sampling_reports_skipped_points():
    plan = SampleSpec(kind="grid", bounds=((0.3, 1.5), (0.3, 1.5), (0.0, 1.0), (0.0, 1.0)), grid_axes=(2, 3), shape=(5, 5), fixed=(1, 1, 0, 0))
    admitted, skipped = sample_points(example82_immersion(), plan)
    assert len(admitted) + len(skipped) == 25
    assert all(a[2] > a[3] for a in admitted)
    assert len(skipped) >= 15


def test_random_sampling_is_seeded():
    plan = SampleSpec(kind="random", bounds=((-1, 1), (-1, 1), (0.1, 6.2), (0.3, 2.0)), count=7, seed=11)
    a, _ = sample_points(example81_immersion(), plan)
    b, _ = sample_points(example81_immersion(), plan)
    assert len(a) == 7 and all(np.array_equal(x, y) for x, y in zip(a, b))


def test_calibration_status():
    assert example_82().calibration_status == "degenerate"
    sc = example_82(factor=LinearFactor())
    assert sc.calibration_status == "calibrated"
    assert (sc.ambient.lee_sign, sc.ambient.lee_scale) == (-1, 0.5)
    ex = example_82(factor=LinearFactor(), lee=(1, 1.0))
    assert ex.calibration_status == "explicit" and ex.ambient.lee_sign == 1


TOML = """
schema_version = 1
id = "demo"

[immersion]
family = "example81"
k = 2.0
curve = { kind = "circle", radius = 1.5 }

[conformal]
family = "product"
first = "x1"
second = "y1"

[sampling]
kind = "random"
count = 12
seed = 4

[tolerances]
chen_margin = 1e-8
"""


def test_load_scenario_from_toml():
    sc = load_scenario(TOML)
    assert sc.id == "demo" and sc.params["k"] == 2.0
    assert isinstance(sc.ambient.factor, ProductFactor)
    assert sc.sampling.kind == "random" and sc.sampling.count == 12
    assert sc.tolerances == {"chen_margin": 1e-8}
    assert len(sc.points()[0]) == 12


def test_empty_conformal_table_means_flat():
    sc = load_scenario('schema_version = 1\n[immersion]\nfamily = "example82"\n[conformal]\n')
    assert isinstance(sc.ambient.factor, ConstantFactor)


def test_config_round_trip():
    sc = load_scenario(TOML)
    again = scenario_from_config(json.loads(sc.serialize()))
    assert again.serialize() == sc.serialize()


@pytest.mark.parametrize(
    "text,path",
    [
        ('schema_version = 1\n[immersion]\nfamily = "example81"\nk = -1.0\n', "immersion.k"),
        ('schema_version = 1\n[immersion]\nfamily = "torus"\n', "immersion.family"),
        ('schema_version = 2\n[immersion]\nfamily = "example81"\n', "schema_version"),
        ('schema_version = 1\n[immersion]\nfamily = "example81"\n[sampling]\ncount = 0\n', "sampling.count"),
        ('schema_version = 1\n[immersion]\nfamily = "example81"\n[conformal]\nfamily = "linear"\ncoordinate = "z1"\n', "conformal.coordinate"),
        ('schema_version = 1\n[immersion]\nfamily = "example81"\n[tolerances]\nbogus = 1.0\n', "tolerances.bogus"),
        ('schema_version = 1\n[immersion]\nfamily = "example81"\n[sampling]\nshape = [3]\n', "sampling.shape"),
        ('schema_version = 1\n', ""),
    ],
)
def test_config_errors_name_the_field(text, path):
    with pytest.raises(ScenarioConfigError) as info:
        load_scenario(text)
    assert info.value.path == path


def test_invalid_toml():
    with pytest.raises(ScenarioConfigError):
        load_scenario("schema_version = = 1")


def test_resolve_references(tmp_path):
    assert resolve("example82").family == "example82"
    assert resolve("cr_product").family == "cr_product"
    assert resolve("random:5").serialize() == random_scenario(5).serialize()
    path = tmp_path / "s.toml"
    path.write_text(TOML)
    assert resolve(str(path)).id == "demo"
    with pytest.raises(OSError):
        resolve(str(tmp_path / "missing.toml"))


@given(seed=st.integers(0, 2**31 - 1))
def test_random_scenarios_are_deterministic(seed):
    a, b = random_scenario(seed), random_scenario(seed)
    assert a.serialize() == b.serialize()
    pa, pb = a.points()[0], b.points()[0]
    assert all(np.array_equal(x, y) for x, y in zip(pa, pb))


@given(seed=st.integers(0, 2**31 - 1))
def test_random_scenario_round_trips_through_config(seed):
    sc = random_scenario(seed)
    assert scenario_from_config(json.loads(sc.serialize())).serialize() == sc.serialize()


def test_cr_product_builtin():
    sc = cr_product(bend=0.5)
    assert sc.expected_cos2(None) == 0.0 and sc.params["bend"] == 0.5
