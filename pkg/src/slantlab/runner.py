"""Batch evaluation of every check over a scenario's sample points.

A :class:`RunReport` holds per-point residuals, aggregates and pass/fail per
named check.  It serializes to JSON with sorted keys and reparses losslessly;
nothing time- or host-dependent is recorded, so repeated runs are
byte-identical.
"""

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import slant as sl
from . import submanifold as sm
from . import warped as wp
from .ambient import random_ambient_points
from .errors import DegenerateImmersionError, ImproperPointError, ModeMismatchError
from .scenarios import CALIBRATION_POINTS, CALIBRATION_SEED
from .tolerances import tolerance_table

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Check:
    name: str
    tolerance: str
    statement: str
    kind: str = "max"  # "max": worst residual <= tol; "margin": worst margin >= -tol


CHECKS = (
    Check("structure_equation", "structure_equation", "(nabla_V J)W equals the four-term Lee expression"),
    Check("two_form", "two_form", "dOmega = alpha ^ Omega with alpha twice the structure Lee form"),
    Check("metric_compatibility", "metric_compatibility", "Christoffel symbols are compatible with the metric"),
    Check("hermitian", "hermitian", "g(JV, JW) = g(V, W)"),
    Check("tangent_normal_orthogonality", "tangent_normal_orthogonality", "tangent and normal frames are orthogonal"),
    Check("h_symmetry", "h_symmetry", "h(X, Y) = h(Y, X)"),
    Check("duality", "duality", "g(h(X, Y), xi) = g(A_xi X, Y)"),
    Check("slant_uniformity", "slant_uniformity", "|PW|^2 / |W|^2 is the same for every fiber direction"),
    Check("slant_identities", "slant_identities", "P^2 = -cos^2, F and P isometry ratios, tF = -sin^2, fF = -FP"),
    Check("expected_slant", "expected_slant", "measured cos^2 matches the closed-form slant"),
    Check("holomorphic_block", "holomorphic_block", "F vanishes on the base block"),
    Check("warped_block", "warped_block", "metric splits as base plus warped reference fiber"),
    Check("lee_orthogonal_fiber", "lee_orthogonal_fiber", "Lee vector is orthogonal to the fiber"),
    Check("warped_connection", "warped_connection", "nabla_X Z = X(ln warp) Z for base X and fiber Z"),
    Check("mixed_relations", "mixed_relations", "mixed and base second fundamental form relations"),
    Check("shape_relation", "shape_relation", "g(A_FZ JX - A_FPZ X, W) = sin^2 (X(ln warp) - alpha(X)) g(Z, W)"),
    Check("shape_consistency", "shape_consistency", "shape relation equals the matching pair of mixed relations"),
    Check("warp_slant_relation", "warp_slant_relation", "X(ln warp) = alpha(X) + tan(theta) X(theta)"),
    Check("characterization", "characterization", "A_FZ JX - A_FPZ X = sin^2 (X(ln warp) - alpha(X)) Z"),
    Check("cr_shape", "cr_shape", "A_JZ X = -(g(J lambda, X) + JX(ln warp)) Z on a totally real fiber"),
    Check("foliation", "foliation", "leaf and integrability relations of both distributions"),
    Check("adapted_frame", "adapted_frame", "adapted frame is orthonormal"),
    Check("chen_margin", "chen_margin", "|h|^2 - 4q(csc^2 + cot^2)(|grad ln warp|^2 + |lambda_T|^2 - 2G*) >= 0", "margin"),
)

CHECK_NAMES = tuple(c.name for c in CHECKS)


def _finite(v):
    v = float(v)
    return v if math.isfinite(v) else None


def ambient_residuals(amb, x):
    d = amb.dim
    E = np.eye(d)
    structure = max(amb.nabla_J_residual(x, E[i], E[j]) for i in range(d) for j in range(d))
    herm = max(amb.hermitian_defect(x, E[i], E[j]) for i in range(d) for j in range(d))
    forms = amb.two_form_conventions(x)
    return {
        "structure_equation": structure,
        "two_form": forms["doubled_lee"],
        "two_form_structure_lee": forms["structure_lee"],
        "metric_compatibility": amb.metric_compatibility_residual(x),
        "hermitian": herm,
    }


def evaluate_point(scenario, u):
    """Residual map, inequality report and skip reasons at one chart point."""
    imm, amb = scenario.immersion, scenario.ambient
    ctx = wp.PointContext(imm, amb, u)
    pg = ctx.pg
    res = ambient_residuals(amb, pg.x)
    skipped = {}
    res["tangent_normal_orthogonality"] = sm.tangent_normal_defect(pg)
    res["h_symmetry"] = sm.h_symmetry_defect(pg)
    res["duality"] = sm.gauss_weingarten_check(pg)

    s = ctx.slant
    res["cos2"] = s.cos2
    res["theta"] = s.theta
    res["slant_uniformity"] = s.uniformity_defect
    res["slant_identities"] = max(sl.slant_identity_residuals(pg, s).values())
    res["holomorphic_block"] = s.holomorphic_defect
    expected = scenario.expected_cos2(u)
    if expected is None:
        skipped["expected_slant"] = "no closed-form slant"
    else:
        res["expected_slant"] = abs(s.cos2 - expected)

    res["warped_block"] = ctx.warped.worst_defect()
    res["warp_log"] = ctx.warped.warp_log
    res["lee_orthogonal_fiber"] = wp.wp1_check(imm, amb, u, ctx)
    res["warped_connection"] = wp.wl1_residual(imm, amb, u, ctx)
    mixed = wp.wl2_residuals(imm, amb, u, ctx)
    for k, v in mixed.items():
        res[f"mixed.{k}"] = v
    res["mixed_relations"] = max(mixed.values())
    res["shape_relation"] = wp.wt2_residual(imm, amb, u, ctx)
    res["shape_consistency"] = wp.wt2_consistency(imm, amb, u, ctx)
    res["characterization"] = wp.tc2_characterization_residual(imm, amb, u, ctx)
    res["holomorphic_integrability_vector"] = wp.holomorphic_integrability_vector(imm, amb, u, ctx)

    try:
        res["warp_slant_relation"] = max(wp.tc1_residual(imm, amb, u, ctx).values(), default=0.0)
    except ImproperPointError as exc:
        skipped["warp_slant_relation"] = str(exc)
    try:
        res["cr_shape"] = wp.cr_shape_residual(imm, amb, u, ctx)
    except ModeMismatchError:
        skipped["cr_shape"] = "fiber is not totally real"
    try:
        fol = wp.foliation_residuals(imm, amb, u, ctx)
        for k, v in fol.items():
            res[f"foliation.{k}"] = v
        res["foliation"] = max(fol.values())
    except ImproperPointError as exc:
        skipped["foliation"] = str(exc)
    try:
        frame = wp.build_adapted_frame(pg, s)
        res["adapted_frame"] = frame.orthonormality_defect(pg)
    except ImproperPointError as exc:
        skipped["adapted_frame"] = str(exc)

    chen = None
    try:
        chen = wp.chen_inequality(imm, amb, u, ctx, require_proper=False)
        res["chen_margin"] = chen.margin
    except ImproperPointError as exc:
        skipped["chen_margin"] = str(exc)
    return {k: _finite(v) for k, v in res.items()}, chen, skipped


def calibration_record(scenario):
    """Convention record plus both two-form residuals over the calibration sample."""
    amb = scenario.ambient
    rec = {"status": scenario.calibration_status, "sign": amb.lee_sign, "scale": amb.lee_scale}
    if scenario.calibration is not None:
        cal = scenario.calibration.to_dict()
        rec.update(residual=cal["residual"], n_points=cal["n_points"], candidates=cal["candidates"])
    else:
        rec.update(residual=None, n_points=0, candidates={})
    pts = random_ambient_points(amb.m, CALIBRATION_POINTS, CALIBRATION_SEED)
    forms = [amb.two_form_conventions(x) for x in pts]
    rec["two_form"] = {k: max(f[k] for f in forms) for k in ("structure_lee", "doubled_lee")}
    return rec


@dataclass
class RunReport:
    scenario_id: str
    scenario: dict
    seed: int
    calibration: dict
    tolerances: dict
    points: list = field(default_factory=list)
    skipped_points: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    passed: bool = True
    tool_version: str = __version__
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _aggregate(points):
    values = {}
    for p in points:
        for k, v in p["residuals"].items():
            if v is not None:
                values.setdefault(k, []).append(v)
    return {
        k: {"min": min(v), "max": max(v), "mean": float(np.mean(v)), "count": len(v)} for k, v in sorted(values.items())
    }


def _judge(points, tolerances):
    checks, failures = {}, []
    for c in CHECKS:
        tol = tolerances[c.tolerance]
        vals = [p["residuals"].get(c.name) for p in points]
        vals = [v for v in vals if v is not None]
        if not vals:
            checks[c.name] = {"status": "skipped", "tolerance": tol, "worst": None, "evaluated": 0, "statement": c.statement}
            continue
        if c.kind == "margin":
            worst = min(vals)
            ok = worst >= -tol
        else:
            worst = max(vals)
            ok = worst <= tol
        checks[c.name] = {
            "status": "pass" if ok else "fail",
            "tolerance": tol,
            "worst": worst,
            "evaluated": len(vals),
            "statement": c.statement,
        }
        if not ok:
            failures.append({"check": c.name, "statement": c.statement, "worst": worst, "tolerance": tol})
    return checks, failures


def run_points(scenario):
    admitted, rejected = scenario.points()
    skipped = []
    for u in rejected:
        log.info("skipping %s: outside chart domain", u.tolist())
        skipped.append({"u": [float(c) for c in u], "reason": "outside chart domain"})
    rows = []
    for u in admitted:
        try:
            res, chen, why = evaluate_point(scenario, u)
        except DegenerateImmersionError as exc:
            log.info("skipping %s: %s", u.tolist(), exc)
            skipped.append({"u": [float(c) for c in u], "reason": str(exc)})
            continue
        rows.append(
            {
                "u": [float(c) for c in u],
                "residuals": res,
                "chen": None if chen is None else chen.to_dict(),
                "skipped_checks": dict(sorted(why.items())),
            }
        )
    return rows, skipped


def verify(scenario, tolerances=None, profile=None):
    """Run every check on ``scenario`` and return a :class:`RunReport`."""
    tols = tolerance_table(profile, {**scenario.tolerances, **(tolerances or {})})
    rows, skipped = run_points(scenario)
    checks, failures = _judge(rows, tols)
    return RunReport(
        scenario_id=scenario.id,
        scenario=scenario.to_config(),
        seed=scenario.sampling.seed,
        calibration=calibration_record(scenario),
        tolerances=dict(sorted(tols.items())),
        points=rows,
        skipped_points=skipped,
        aggregates=_aggregate(rows),
        checks=checks,
        failures=failures,
        passed=not failures,
    )


MARGIN_DIAGNOSTICS = ("base_block", "fiber_block", "mixed_off_slant_normal", "invariant_normal")


def margin_columns(immersion):
    return (
        ["index"]
        + list(immersion.coordinate_names)
        + ["theta", "h_norm_sq", "rhs", "margin"]
        + list(MARGIN_DIAGNOSTICS)
        + ["status"]
    )


def margin_table(scenario):
    """Rows of the inequality table; improper or rejected points carry a status."""
    imm, amb = scenario.immersion, scenario.ambient
    admitted, rejected = scenario.points()
    rows = []
    for u in admitted:
        row = {"u": [float(c) for c in u]}
        try:
            chen = wp.chen_inequality(imm, amb, u, require_proper=False)
        except (ImproperPointError, DegenerateImmersionError) as exc:
            row["status"] = f"skipped: {exc}"
        else:
            row.update(
                theta=chen.theta,
                h_norm_sq=chen.h_norm_sq,
                rhs=chen.rhs,
                margin=chen.margin,
                **{k: chen.equality_diagnostics[k] for k in MARGIN_DIAGNOSTICS},
                status="ok",
            )
        rows.append(row)
    for u in rejected:
        rows.append({"u": [float(c) for c in u], "status": "skipped: outside chart domain"})
    return rows


def margin_csv(scenario, rows=None):
    rows = margin_table(scenario) if rows is None else rows
    cols = margin_columns(scenario.immersion)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    names = scenario.immersion.coordinate_names
    for i, row in enumerate(rows):
        vals = [i] + [repr(c) for c in row["u"]]
        for c in cols[1 + len(names):-1]:
            v = row.get(c)
            vals.append("" if v is None else repr(float(v)))
        vals.append(row["status"])
        w.writerow(vals)
    return buf.getvalue()


def parse_margin_csv(text):
    """Inverse of :func:`margin_csv` (floats restored exactly)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    n_coords = header.index("theta") - 1
    rows = []
    for rec in reader:
        row = {"u": [float(v) for v in rec[1 : 1 + n_coords]], "status": rec[-1]}
        for name, v in zip(header[1 + n_coords : -1], rec[1 + n_coords : -1]):
            if v != "":
                row[name] = float(v)
        rows.append(row)
    return rows


def margin_json(scenario, rows=None):
    rows = margin_table(scenario) if rows is None else rows
    ok = [r for r in rows if r["status"] == "ok"]
    return json.dumps(
        {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool_version": __version__,
            "scenario_id": scenario.id,
            "columns": margin_columns(scenario.immersion),
            "rows": ok,
            "skipped": [r for r in rows if r["status"] != "ok"],
            "min_margin": min((r["margin"] for r in ok), default=None),
        },
        sort_keys=True,
        indent=2,
    )
