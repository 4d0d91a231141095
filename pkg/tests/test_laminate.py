import math

import numpy as np
import pytest

from dynamohull import (
    ConeKind,
    Decomposition,
    DegenerateCallError,
    HullParams,
    NotInHullError,
    SampleConfig,
    Tolerances,
    Triple,
    Vec3,
    angle_equation,
    decompose,
    decompose_exact_ohm,
    hull_excess_bound,
    in_constraint_set,
    in_hull,
    sample_hull,
    sample_lambda_pair,
    solve_laminate_conditions,
    verify_decomposition,
)
from _helpers import ALL_KINDS, vec

P11 = HullParams(1.0, 1.0)


def _interior_hull_points(kind, count, p=P11, seed=42):
    cfg = SampleConfig(seed=seed, count=count, params=p, kind=kind)
    return list(sample_hull(cfg))


# ----------------------------------------------------- exact-Ohm splits

def test_exact_ohm_at_origin():
    d = decompose_exact_ohm(Vec3(0, 0, 0), Vec3(0, 0, 0), P11)
    assert d.lam == 0.5
    assert d.z1.B.norm() == pytest.approx(1.0)
    assert d.z1.u.norm() == pytest.approx(1.0)
    # Parallel perturbations: endpoint electric fields vanish.
    assert d.z1.E.norm() == pytest.approx(0.0, abs=1e-15)
    assert d.z2.B == -d.z1.B
    assert (d.combine() - Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0))).norm() < 1e-15
    rep = verify_decomposition(d, Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0)), P11)
    assert rep.passed


def test_exact_ohm_full_amplitude_is_trivial():
    B = Vec3(0.6, 0.8, 0)
    u = Vec3(0, 0, 1)
    d = decompose_exact_ohm(B, u, P11)
    assert d.lam == 0.5
    assert d.z1 == d.z2
    assert d.z1 == Triple(B, u, B.cross(u))


def test_exact_ohm_pythagoras_case():
    # Perpendicular perturbations restore the amplitudes by Pythagoras.
    B = Vec3(0.6, 0, 0)
    u = Vec3(0, 0.8, 0)
    d = decompose_exact_ohm(B, u, P11)
    bbar = d.z1.B - B
    ubar = d.z1.u - u
    assert bbar.norm() == pytest.approx(0.8)
    assert ubar.norm() == pytest.approx(0.6)
    assert abs(bbar.dot(B)) < 1e-12
    assert abs(ubar.dot(u)) < 1e-12
    assert bbar.cross(ubar).norm() < 1e-12
    for zi in (d.z1, d.z2):
        assert zi.B.norm() == pytest.approx(1.0)
        assert zi.u.norm() == pytest.approx(1.0)


def test_exact_ohm_rejects_oversized_amplitudes():
    with pytest.raises(NotInHullError):
        decompose_exact_ohm(Vec3(1.5, 0, 0), Vec3(0, 0, 0), P11)
    with pytest.raises(NotInHullError):
        decompose_exact_ohm(Vec3(0, 0, 0), Vec3(0, 1.5, 0), P11)


def test_exact_ohm_valid_for_every_kind():
    rng = np.random.default_rng(21)
    for _ in range(100):
        B = vec(rng, 0.55)
        u = vec(rng, 0.55)
        target = Triple(B, u, B.cross(u))
        for kind in ALL_KINDS:
            d = decompose_exact_ohm(B, u, P11, kind)
            rep = verify_decomposition(d, target, P11, kind)
            assert rep.passed, (kind, rep.failures, rep.residuals)


# ----------------------------------------------- the interior conditions

def test_conditions_at_zero_fields():
    z = Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0.5))
    conds = solve_laminate_conditions(z, P11)
    assert list(conds.ebar) == pytest.approx([0, 0, 0.5])
    assert conds.bbar.norm() == pytest.approx(2.0)
    assert conds.ubar.norm() == pytest.approx(2.0)
    # sin of the angle between the perturbations equals the excess fraction.
    sin_mix = conds.bbar.cross(conds.ubar).norm() / (conds.bbar.norm() * conds.ubar.norm())
    assert sin_mix == pytest.approx(0.5, abs=1e-12)
    # Oriented so that their cross product reproduces the excess direction.
    mix = conds.bbar.cross(conds.ubar)
    assert (mix / mix.norm() - Vec3(0, 0, 1)).norm() < 1e-12


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_conditions_equations_hold(kind):
    p = HullParams(1.2, 0.8)
    checked = 0
    for z in _interior_hull_points(kind, 300, p):
        c = (z.E - z.B.cross(z.u)).norm()
        if c < 1e-9:
            continue
        conds = solve_laminate_conditions(z, p, kind)
        bbar, ubar = conds.bbar, conds.ubar
        rr = p.r * p.r - z.B.norm2()
        ss = p.s * p.s - z.u.norm2()
        d_bound = math.sqrt(rr * ss)

        # excess reproduction (vector identity)
        rebuilt = z.B.cross(z.u) + bbar.cross(ubar) * (d_bound / (bbar.norm() * ubar.norm()))
        assert (rebuilt - z.E).norm() <= 1e-8 * (1.0 + z.E.norm())

        # amplitude scalings
        assert bbar.norm2() * ss == pytest.approx(ubar.norm2() * rr, rel=1e-10, abs=1e-12)
        sin2 = 1.0 - (z.B.dot(bbar) / (z.B.norm() * bbar.norm())) ** 2 if z.B.norm() > 0 else 1.0
        expected = 4.0 * (p.r * p.r - z.B.norm2() * min(1.0, max(0.0, sin2)))
        assert bbar.norm2() == pytest.approx(expected, rel=1e-8)

        # angle balance between the two amplitude budgets
        lhs = z.B.dot(bbar) / bbar.norm() if bbar.norm() > 0 else 0.0
        rhs = math.sqrt(rr / ss) * (z.u.dot(ubar) / ubar.norm() if ubar.norm() > 0 else 0.0)
        assert lhs == pytest.approx(rhs, abs=1e-8 * (1.0 + abs(lhs)))

        # mixing direction stays orthogonal to B (and to u when restricted)
        mix = bbar.cross(ubar)
        assert abs(z.B.dot(mix)) <= 1e-9 * (1.0 + z.B.norm() * mix.norm())
        if kind.restricts_u:
            assert abs(z.u.dot(mix)) <= 1e-9 * (1.0 + z.u.norm() * mix.norm())
        checked += 1
    assert checked > 200


def test_conditions_degenerate_call():
    B = Vec3(0.5, 0, 0)
    u = Vec3(0, 0.5, 0)
    z = Triple(B, u, B.cross(u))
    with pytest.raises(DegenerateCallError):
        solve_laminate_conditions(z, P11)


def test_conditions_boundary_call_is_not_in_hull():
    # Full magnetic amplitude with leftover excess: no interior solution.
    z = Triple(Vec3(1, 0, 0), Vec3(0, 0.5, 0), Vec3(0, 0, 0.5 + 1e-3))
    with pytest.raises(NotInHullError):
        solve_laminate_conditions(z, P11)


def test_conditions_outside_hull():
    z = Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 2.0))
    with pytest.raises(NotInHullError):
        solve_laminate_conditions(z, P11)


# -------------------------------------------------- the angle equation

def test_angle_gap_is_a_sinusoid_with_antisymmetric_bracket():
    rng = np.random.default_rng(22)
    checked = 0
    for z in _interior_hull_points(ConeKind.NONSTATIONARY, 200):
        if z.B.norm() == 0.0 or (z.E - z.B.cross(z.u)).norm() < 1e-9:
            continue
        gap = angle_equation(z, P11)
        lo, hi = gap.bracket
        assert gap(lo) * gap(hi) <= 1e-20
        assert gap(lo) == pytest.approx(-gap(hi), abs=1e-12)
        # random spot-check of the sinusoidal form
        alpha = rng.uniform(lo, hi)
        expected = gap.amp_cos * math.cos(alpha) + gap.amp_sin * math.sin(alpha)
        assert gap(alpha) == expected
        checked += 1
    assert checked > 150


def test_angle_gap_continuity_scan():
    # 1e3-point scan: increments bounded by the Lipschitz constant of the
    # sinusoid, so the root bracket never hides a jump.
    for z in _interior_hull_points(ConeKind.NONSTATIONARY, 20, seed=23):
        if z.B.norm() == 0.0 or (z.E - z.B.cross(z.u)).norm() < 1e-9:
            continue
        gap = angle_equation(z, P11)
        lo, hi = gap.bracket
        lipschitz = abs(gap.amp_cos) + abs(gap.amp_sin)
        alphas = np.linspace(lo, hi, 1000)
        values = [gap(a) for a in alphas]
        step = alphas[1] - alphas[0]
        for v0, v1 in zip(values, values[1:]):
            assert abs(v1 - v0) <= lipschitz * step * 1.01 + 1e-12


def test_angle_gap_rejects_zero_B():
    z = Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0.5))
    with pytest.raises(DegenerateCallError):
        angle_equation(z, P11)


# ------------------------------------------------------------ decompose

def test_decompose_constraint_set_point_is_degenerate():
    B = Vec3(0.6, 0.8, 0)
    u = Vec3(0, 0, 1)
    z = Triple(B, u, B.cross(u))
    d = decompose(z, P11)
    assert d.z1 == d.z2 == z
    rep = verify_decomposition(d, z, P11)
    assert rep.passed


def test_decompose_zero_fields_with_excess():
    z = Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0.5))
    d = decompose(z, P11)
    assert d.lam == pytest.approx(0.5)
    rep = verify_decomposition(d, z, P11)
    assert rep.passed
    assert rep.max_residual < 1e-12
    assert in_constraint_set(d.z1, P11)
    assert in_constraint_set(d.z2, P11)


def test_decompose_outside_hull_reports_witness():
    z = Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 2.0))
    with pytest.raises(NotInHullError) as err:
        decompose(z, P11)
    w = err.value.witness
    assert w is not None
    assert w.function == "g2"
    assert w.value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_decompose_round_trip(kind):
    p = HullParams(1.4, 0.6)
    for z in _interior_hull_points(kind, 500, p, seed=24):
        d = decompose(z, p, kind)
        assert 0.0 <= d.lam <= 1.0
        rep = verify_decomposition(d, z, p, kind)
        assert rep.passed, (z, rep.failures, rep.residuals)
        assert rep.max_residual <= 1e-9


def test_decompose_near_boundary_ohm_point():
    nb = 1.0 - 1e-13
    B = Vec3(nb, 0, 0)
    u = Vec3(0, 0.3, 0)
    z = Triple(B, u, B.cross(u))
    d = decompose(z, P11)
    assert verify_decomposition(d, z, P11).passed


def test_decompose_weight_amplitude_identity():
    # lam*(1-lam)*|B1-B2|*|u1-u2| must reproduce the excess bound exactly.
    for kind in (ConeKind.NONSTATIONARY, ConeKind.STATIONARY_INCOMPRESSIBLE):
        for z in _interior_hull_points(kind, 400, seed=25):
            d = decompose(z, P11, kind)
            rep = verify_decomposition(d, z, P11, kind)
            assert rep.residuals["weight_amplitude_identity"] <= 1e-9
            dz = d.z1 - d.z2
            prod = d.lam * (1.0 - d.lam) * dz.B.norm() * dz.u.norm()
            assert prod == pytest.approx(hull_excess_bound(z.B, z.u, P11), abs=1e-9)


def test_decompose_stationary_mixing_orthogonality():
    for z in _interior_hull_points(ConeKind.STATIONARY_INCOMPRESSIBLE, 400, seed=26):
        d = decompose(z, P11, ConeKind.STATIONARY_INCOMPRESSIBLE)
        dz = d.z1 - d.z2
        mix = dz.B.cross(dz.u)
        assert abs(z.u.dot(mix)) <= 1e-9 * (1.0 + z.u.norm() * dz.B.norm() * dz.u.norm())


# ---------------------------------------------------------- verification

def test_verify_detects_tampered_weight():
    z = Triple(Vec3(0.2, 0.1, 0), Vec3(0, 0.3, 0.1), Vec3(0, 0, 0))
    z = Triple(z.B, z.u, z.B.cross(z.u))
    d = decompose(z, P11)
    bad = Decomposition(min(1.0, d.lam + 0.1), d.z1, d.z2)
    rep = verify_decomposition(bad, z, P11)
    assert not rep.passed
    assert "reconstruction" in rep.failures


def test_verify_detects_tampered_endpoint():
    z = Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0.5))
    d = decompose(z, P11)
    tampered_z1 = Triple(d.z1.B, d.z1.u, d.z1.E + Vec3(0.01, 0, 0))
    bad = Decomposition(d.lam, tampered_z1, d.z2)
    rep = verify_decomposition(bad, z, P11)
    assert not rep.passed
    assert "z1_ohm" in rep.failures


def test_verify_detects_wrong_cone():
    # Two genuine constraint-set states whose difference is NOT in the cone.
    B1, u1 = Vec3(1, 0, 0), Vec3(0, 1, 0)
    B2, u2 = Vec3(0, 1, 0), Vec3(0, 0, 1)
    z1 = Triple(B1, u1, B1.cross(u1))
    z2 = Triple(B2, u2, B2.cross(u2))
    dz = z1 - z2
    assert abs(dz.B.dot(dz.E)) > 0.1
    target = z1 * 0.5 + z2 * 0.5
    rep = verify_decomposition(Decomposition(0.5, z1, z2), target, P11)
    assert not rep.passed
    assert "cone_BE" in rep.failures


def test_verify_reports_lambda_out_of_range():
    z = Triple(Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1))
    rep = verify_decomposition(Decomposition(1.2, z, z), z, P11)
    assert "lambda_range" in rep.failures


def test_verify_json_shape():
    z = Triple(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0.5))
    d = decompose(z, P11)
    rep = verify_decomposition(d, z, P11)
    payload = d.to_json_dict(residuals=rep.residuals)
    assert set(payload) == {"lambda", "z1", "z2", "residuals"}
    round_trip = Decomposition.from_json_dict(payload)
    assert round_trip.lam == d.lam
    assert round_trip.z1 == d.z1


# ------------------------------------- mixtures of sampled pairs (inverse)

@pytest.mark.parametrize("kind", [ConeKind.NONSTATIONARY,
                                  ConeKind.STATIONARY_INCOMPRESSIBLE])
def test_pair_combinations_satisfy_interior_conditions(kind):
    # Any convex mixture of a cone-compatible constraint-set pair must hit
    # the same perturbation equations the solver enforces, with
    # Bbar = B1 - B2 and ubar = u1 - u2.
    rng = np.random.default_rng(27)
    cfg = SampleConfig(seed=28, count=400, params=P11, kind=kind)
    checked = 0
    for z1, z2 in sample_lambda_pair(cfg):
        lam = rng.uniform(0.05, 0.95)
        z = z1 * lam + z2 * (1.0 - lam)
        bbar = z1.B - z2.B
        ubar = z1.u - z2.u
        if bbar.norm() < 1e-6 or ubar.norm() < 1e-6:
            continue
        rr = 1.0 - z.B.norm2()
        ss = 1.0 - z.u.norm2()
        if rr < 1e-6 or ss < 1e-6:
            continue

        # amplitude scalings
        assert bbar.norm2() * ss == pytest.approx(ubar.norm2() * rr, rel=1e-8, abs=1e-10)
        cos_b = z.B.dot(bbar) / (z.B.norm() * bbar.norm()) if z.B.norm() > 0 else 0.0
        sin2 = 1.0 - cos_b * cos_b
        assert bbar.norm2() == pytest.approx(4.0 * (1.0 - z.B.norm2() * sin2), rel=1e-8)

        # angle balance
        lhs = z.B.dot(bbar) / bbar.norm()
        rhs = math.sqrt(rr / ss) * z.u.dot(ubar) / ubar.norm()
        assert lhs == pytest.approx(rhs, abs=1e-8 * (1.0 + abs(lhs)))

        # mixing orthogonality and excess reproduction
        mix = bbar.cross(ubar)
        assert abs(z.B.dot(mix)) <= 1e-8 * (1.0 + z.B.norm() * mix.norm())
        d_bound = hull_excess_bound(z.B, z.u, P11)
        rebuilt = z.B.cross(z.u) + mix * (d_bound / (bbar.norm() * ubar.norm()))
        assert (rebuilt - z.E).norm() <= 1e-8 * (1.0 + z.E.norm())

        # and the mixture is in the hull, never outside
        assert in_hull(z, P11, kind)
        checked += 1
    # The restricted cone's second plane always passes through u1 itself, so
    # about half of those pairs carry ubar = 0 and are filtered above.
    assert checked > (300 if not kind.restricts_u else 150)


def test_decompose_respects_tolerance_argument():
    tol = Tolerances(eps_mem=1e-6, eps_root=1e-10)
    z = Triple(Vec3(0.5, 0, 0), Vec3(0, 0.5, 0), Vec3(0, 0, 0.625))
    d = decompose(z, P11, ConeKind.NONSTATIONARY, tol)
    assert verify_decomposition(d, z, P11, ConeKind.NONSTATIONARY, tol).passed


@pytest.mark.parametrize("which", ["B", "u"])
def test_decompose_just_inside_amplitude_boundary(which):
    # Amplitude gap barely above the boundary-routing threshold: the
    # velocity-side residual is amplified by the ratio of the two gaps, so
    # this pins the solver's root accuracy in its worst regime.
    rng = np.random.default_rng(62)
    for gap in (2e-9, 1e-7, 1e-5):
        for _ in range(20):
            full = math.sqrt(1.0 - gap)
            if which == "B":
                B = Vec3(*(full * v for v in _unit(rng)))
                u = Vec3(*(0.4 * v for v in _unit(rng)))
            else:
                B = Vec3(*(0.4 * v for v in _unit(rng)))
                u = Vec3(*(full * v for v in _unit(rng)))
            d_bound = hull_excess_bound(B, u, P11)
            e = B.cross(u)
            perp = B if which == "u" else u
            ex = unit_vec_perp(B)
            z = Triple(B, u, e + ex * (0.5 * d_bound))
            d = decompose(z, P11)
            rep = verify_decomposition(d, z, P11)
            assert rep.passed, (which, gap, rep.residuals)
            assert rep.max_residual <= 1e-9


def _unit(rng):
    while True:
        v = rng.uniform(-1, 1, 3)
        n = float(np.linalg.norm(v))
        if n > 1e-3:
            return (v[0] / n, v[1] / n, v[2] / n)


def unit_vec_perp(b):
    from dynamohull import unit_perpendicular
    return unit_perpendicular(b)
