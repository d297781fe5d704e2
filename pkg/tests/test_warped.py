import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slantlab import warped as W
from slantlab.ambient import AmbientSpace, ConstantFactor, LinearFactor, ProductFactor
from slantlab.errors import FrameUndefinedError, ImproperPointError, ModeMismatchError, NotWarpedProductError
from slantlab.scenarios import (
    cr_product_immersion,
    example81_immersion,
    example82_immersion,
    random_scenario,
)
from slantlab.slant import P
from slantlab.submanifold import Split

GOOD = (-1, 0.5)
WRONG = (1, 1.0)
FAMILIES = {"flat": ConstantFactor(), "x1": LinearFactor(), "x1y1": ProductFactor()}
POINTS = {
    "example81": [[0.2, 0.1, 0.8, 1.1], [-0.5, 0.7, 2.9, 0.4], [0.9, -0.9, 5.0, 1.9]],
    "example82": [[1.1, 0.7, 1.0, 0.3], [0.4, 1.3, 0.7, 0.45], [1.4, 0.5, 1.15, 0.1]],
}
IMMERSIONS = {"example81": lambda: example81_immersion(k=1.3), "example82": example82_immersion}


def amb(factor, lee=GOOD):
    return AmbientSpace(3, factor).with_convention(*lee)


def cases():
    for fam in IMMERSIONS:
        for name in FAMILIES:
            yield fam, name


def suite(imm, a, u):
    ctx = W.PointContext(imm, a, u)
    out = {"wl1": W.wl1_residual(imm, a, u, ctx), "wp1": W.wp1_check(imm, a, u, ctx)}
    out.update({f"mixed.{k}": v for k, v in W.wl2_residuals(imm, a, u, ctx).items()})
    out["wt2"] = W.wt2_residual(imm, a, u, ctx)
    out["tc1"] = max(W.tc1_residual(imm, a, u, ctx).values())
    out["tc2"] = W.tc2_characterization_residual(imm, a, u, ctx)
    out.update({f"foliation.{k}": v for k, v in W.foliation_residuals(imm, a, u, ctx).items()})
    return out


# -- warping function ---------------------------------------------------------


def test_flat_product_has_constant_warp():
    ws = W.extract_warped_structure(example81_immersion(), amb(ConstantFactor()), POINTS["example81"][0])
    assert ws.warp_log == 0.0
    assert np.max(np.abs(ws.warp_log_partials)) < 1e-15


def test_linear_factor_warp_on_example81():
    # f = x1 = u, so ln(warp) = -u/2
    u = POINTS["example81"][1]
    ws = W.extract_warped_structure(example81_immersion(), amb(LinearFactor()), u)
    assert ws.warp_log == pytest.approx(-u[0] / 2, abs=1e-14)
    assert np.max(np.abs(ws.warp_log_partials - [-0.5, 0.0, 0.0, 0.0])) < 1e-14


def test_linear_factor_warp_on_example82():
    # x1 = (u1^2 + u2^2) / 2
    u = np.array(POINTS["example82"][0])
    ws = W.extract_warped_structure(example82_immersion(), amb(LinearFactor()), u)
    assert ws.warp_log == pytest.approx(-(u[0] ** 2 + u[1] ** 2) / 4, abs=1e-14)
    assert np.max(np.abs(ws.warp_log_partials - [-u[0] / 2, -u[1] / 2, 0.0, 0.0])) < 1e-13


def test_fiber_dependent_factor_is_not_warped():
    # x2 = -k s sin r moves along the fiber
    with pytest.raises(NotWarpedProductError) as info:
        W.extract_warped_structure(example81_immersion(), amb(LinearFactor("x2")), POINTS["example81"][0])
    assert info.value.measure == "fiber_gradient_defect"


# -- identity suite -----------------------------------------------------------


@pytest.mark.parametrize("fam,name", list(cases()))
def test_identity_suite_holds_under_calibrated_convention(fam, name):
    imm = IMMERSIONS[fam]()
    for u in POINTS[fam]:
        res = suite(imm, amb(FAMILIES[name]), u)
        bad = {k: v for k, v in res.items() if v >= 1e-9}
        assert not bad


@pytest.mark.parametrize("fam", list(IMMERSIONS))
def test_wrong_convention_breaks_lee_dependent_relations(fam):
    imm = IMMERSIONS[fam]()
    res = suite(imm, amb(LinearFactor(), WRONG), POINTS[fam][0])
    for key in ("mixed.mixed", "mixed.mixed_j_base", "tc1", "tc2", "foliation.fiber_leaf"):
        assert res[key] > 1e-2, key
    # these do not involve the Lee form
    assert res["mixed.mixed_antisymmetry"] < 1e-12
    assert res["mixed.base_base_normal"] < 1e-12
    assert res["foliation.base_leaf"] < 1e-12  # the Lee vector stays in the base block
    assert res["foliation.fiber_bracket_antisymmetry"] < 1e-12


def test_fiber_dependent_factor_breaks_lee_orthogonality():
    imm = example82_immersion()
    u = POINTS["example82"][0]
    a = amb(LinearFactor("x2"))
    assert W.wp1_check(imm, a, u) > 1e-2
    assert W.wl2_residuals(imm, a, u)["base_base_normal"] > 1e-2


def test_misdeclared_split_breaks_product_relations():
    # base (u, r), fiber (v, s): d_r d_s phi = phi_r / s, so the WL1 residual is 1 / (s sqrt(1 + k^2))
    k = 1.3
    imm = example81_immersion(k=k).with_split(Split((0, 2), (1, 3)))
    u = POINTS["example81"][0]
    assert W.wl1_residual(imm, amb(ConstantFactor()), u) == pytest.approx(1.0 / (u[3] * math.sqrt(1 + k * k)), rel=1e-12)
    imm82 = example82_immersion().with_split(Split((0, 2), (1, 3)))
    res = W.wl2_residuals(imm82, amb(LinearFactor()), POINTS["example82"][0])
    assert res["mixed_antisymmetry"] > 1e-2
    assert res["mixed"] > 1e-2


def test_shape_residual_matches_relation_combination():
    for fam in IMMERSIONS:
        imm = IMMERSIONS[fam]()
        for lee in (GOOD, WRONG):
            for u in POINTS[fam]:
                assert W.wt2_consistency(imm, amb(ProductFactor(), lee), u) < 1e-9


def test_improper_point_is_rejected():
    with pytest.raises(ImproperPointError):
        W.tc1_residual(cr_product_immersion(), amb(LinearFactor()), [0.1, 0.2, 0.3, 0.4])


def test_totally_real_shape_condition():
    imm = cr_product_immersion()
    u = [0.3, 0.2, 0.9, 0.4]
    for factor in FAMILIES.values():
        assert W.cr_shape_residual(imm, amb(factor), u) < 1e-9
    assert W.cr_shape_residual(imm, amb(LinearFactor(), WRONG), u) > 1e-2


def test_totally_real_condition_equals_general_condition_at_theta_right_angle():
    imm = cr_product_immersion()
    u = [0.3, 0.2, 0.9, 0.4]
    for lee in (GOOD, WRONG):
        a = amb(ProductFactor(), lee)
        assert abs(W.cr_shape_residual(imm, a, u) - W.tc2_characterization_residual(imm, a, u)) < 1e-12


def test_totally_real_condition_refuses_slant_fiber():
    with pytest.raises(ModeMismatchError):
        W.cr_shape_residual(example81_immersion(), amb(LinearFactor()), POINTS["example81"][0])


def test_holomorphic_integrability_vector_form_is_only_a_diagnostic():
    imm = example81_immersion()
    u = POINTS["example81"][0]
    assert W.holomorphic_integrability_vector(imm, amb(ConstantFactor()), u) < 1e-14
    # the unpaired vector form keeps a tangent Lee component the paired form drops
    assert W.holomorphic_integrability_vector(imm, amb(LinearFactor()), u) > 1e-2
    assert W.foliation_residuals(imm, amb(LinearFactor()), u)["holomorphic_integrability"] < 1e-12


# -- adapted frame ------------------------------------------------------------


def test_adapted_frame_quarter_turn():
    from slantlab.submanifold import point_geometry

    pg = point_geometry(example81_immersion(k=1.0), amb(LinearFactor()), POINTS["example81"][0])
    frame = W.build_adapted_frame(pg)
    assert frame.orthonormality_defect(pg) < 1e-8
    assert frame.invariant_normal.shape[0] == 0
    sec = math.sqrt(2.0)
    for e in frame.fiber[:1]:
        assert pg.norm(sec * P(pg, e)) == pytest.approx(1.0, abs=1e-12)


def test_adapted_frame_needs_proper_point():
    from slantlab.submanifold import point_geometry

    pg = point_geometry(cr_product_immersion(), amb(ConstantFactor()), [0.1, 0.2, 0.3, 0.4])
    with pytest.raises(FrameUndefinedError):
        W.build_adapted_frame(pg)


# -- inequality ----------------------------------------------------------------


def test_flat_product_has_zero_bound():
    imm = example81_immersion()
    for u in POINTS["example81"]:
        rep = W.chen_inequality(imm, amb(ConstantFactor()), u)
        assert rep.rhs == 0.0
        assert rep.margin == rep.h_norm_sq


@pytest.mark.parametrize("fam,name", list(cases()))
def test_margin_non_negative(fam, name):
    imm = IMMERSIONS[fam]()
    for u in POINTS[fam]:
        assert W.chen_inequality(imm, amb(FAMILIES[name]), u).margin >= -1e-9


def test_bound_equals_mixed_term_sum():
    # with the Lee vector tangent to the base, the bracket is the sum over the base of (alpha - dpsi)^2
    for fam in IMMERSIONS:
        imm = IMMERSIONS[fam]()
        for lee in (GOOD, WRONG):
            for u in POINTS[fam]:
                r = W.chen_inequality(imm, amb(LinearFactor(), lee), u)
                coef = 1 / math.sin(r.theta) ** 2 + 1 / math.tan(r.theta) ** 2
                assert r.rhs == pytest.approx(4 * r.q * coef * r.base_gap_sq, rel=1e-10, abs=1e-12)


def test_wrong_convention_violates_inequality():
    r = W.chen_inequality(example81_immersion(), amb(LinearFactor(), WRONG), POINTS["example81"][0])
    assert r.margin < -1.0


def test_equality_diagnostics_vanish_off_slant_normal():
    r = W.chen_inequality(example82_immersion(), amb(ProductFactor()), POINTS["example82"][1])
    d = r.equality_diagnostics
    assert d["base_block"] < 1e-12 and d["mixed_off_slant_normal"] < 1e-12 and d["invariant_normal"] < 1e-12
    assert d["fiber_block"] > 1e-3


def test_kaehler_specialization():
    r = W.chen_inequality(example82_immersion(), amb(ConstantFactor()), POINTS["example82"][0])
    out = W.special_case_report(r, "kaehler")
    assert out["defect"] < 1e-10
    with pytest.raises(ModeMismatchError):
        W.special_case_report(W.chen_inequality(example82_immersion(), amb(LinearFactor()), POINTS["example82"][0]), "kaehler")


def test_constant_slant_specialization_is_verbatim():
    r = W.chen_inequality(example81_immersion(k=0.8), amb(ProductFactor()), POINTS["example81"][2])
    out = W.special_case_report(r, "constant-slant")
    assert out["defect"] == 0.0
    with pytest.raises(ModeMismatchError):
        W.special_case_report(W.chen_inequality(example82_immersion(), amb(ConstantFactor()), POINTS["example82"][0]), "constant-slant")


def test_totally_real_coefficient_at_right_angle():
    r = W.ChenReport.synthetic(math.pi / 2, 2, grad_norm_sq=0.7, lee_tangent_norm_sq=0.2, g_star=0.1)
    out = W.special_case_report(r, "cr")
    assert out["coefficient"] == 1.0 and out["coefficient_defect"] == 0.0
    bracket = 0.7 + 0.2 - 0.2
    assert out["general_rhs"] == pytest.approx(4 * 2 * bracket, rel=1e-15)
    assert out["special_rhs_half_dimension"] == pytest.approx(2 * 2 * bracket, rel=1e-15)
    assert out["special_rhs_full_dimension"] == pytest.approx(2 * 4 * bracket, rel=1e-15)


def test_totally_real_coefficient_limit():
    defects = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5):
        r = W.ChenReport.synthetic(math.pi / 2 - eps, 1, 0.5, 0.0, 0.0)
        s2, c2 = math.sin(r.theta) ** 2, math.cos(r.theta) ** 2
        assert abs(W.chen_rhs(r.theta, 1, 0.5, 0.0, 0.0) - 4 * (1 + c2) / s2 * 0.5) < 1e-12
        if c2 <= 1e-9:
            defects.append(W.special_case_report(r, "cr")["coefficient_defect"])
    assert defects and all(d < 1e-9 for d in defects)
    with pytest.raises(ModeMismatchError):
        W.special_case_report(W.ChenReport.synthetic(math.pi / 3, 1, 0.5, 0.0, 0.0), "cr")


def test_totally_real_scenario_margin():
    imm = cr_product_immersion()
    r = W.chen_inequality(imm, amb(LinearFactor()), [0.3, 0.2, 0.9, 0.4], require_proper=False)
    assert r.margin >= -1e-9
    assert W.special_case_report(r, "cr")["coefficient_defect"] == 0.0
    with pytest.raises(ImproperPointError):
        W.chen_inequality(imm, amb(LinearFactor()), [0.3, 0.2, 0.9, 0.4])


def test_unknown_special_mode():
    with pytest.raises(ValueError):
        W.special_case_report(W.ChenReport.synthetic(1.0, 1, 0.0, 0.0, 0.0), "bogus")


# -- properties ----------------------------------------------------------------


@given(seed=st.integers(0, 10**6))
def test_random_scenarios_satisfy_inequality_and_antisymmetry(seed):
    sc = random_scenario(seed)
    pts, _ = sc.points()
    for u in pts[:3]:
        ctx = W.PointContext(sc.immersion, sc.ambient, u)
        assert W.chen_inequality(sc.immersion, sc.ambient, u, ctx).margin >= -1e-9
        res = W.wl2_residuals(sc.immersion, sc.ambient, u, ctx)
        assert res["mixed_antisymmetry"] < 1e-8
        assert W.wt2_consistency(sc.immersion, sc.ambient, u, ctx) < 1e-9


@given(u3=st.floats(0.6, 1.2), u4=st.floats(0.05, 0.5), scale=st.floats(-1.5, 1.5))
def test_base_relation_property(u3, u4, scale):
    u = [1.1, 0.7, u3, u4]
    a = amb(ProductFactor(scale=scale))
    assert W.wl2_residuals(example82_immersion(), a, u)["base_base_normal"] < 1e-9
