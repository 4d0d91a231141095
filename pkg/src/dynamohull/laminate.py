"""Constructive decomposition of relaxed-set points into constraint-set pairs.

Every point of the relaxed set is a convex combination of exactly two
constraint-set states whose difference is an admissible oscillation
direction.  This module produces such a witness constructively:

* ``decompose_exact_ohm`` handles E = B x u by perturbing (B, u) with a
  parallel pair of vectors perpendicular to both, restoring the amplitudes.

* ``solve_laminate_conditions`` handles the genuine interior case.  With the
  normalised excess Ebar = (E - B x u) / sqrt((r^2-|B|^2)(s^2-|u|^2)), it
  looks for perturbations Bbar, ubar in the plane perpendicular to Ebar
  whose directions differ by the rotation of angle arcsin|Ebar| about
  Ebar/|Ebar| (so that bhat x uhat = Ebar exactly), and whose angle to B
  balances the amplitude budget:

      G(alpha) = |B| cos(alpha)
                 - sqrt((r^2-|B|^2)/(s^2-|u|^2)) * (u . uhat(alpha)) = 0.

  G(pi/2) = -G(3pi/2), so a root exists in [pi/2, 3pi/2] and bisection finds
  it.  The perturbation lengths follow from
  |Bbar|^2 = 4 (r^2 - |B|^2 sin^2 alpha) and
  |Bbar|^2 (s^2-|u|^2) = |ubar|^2 (r^2-|B|^2).

* ``decompose`` dispatches between the two and assembles the endpoints with
  weight lambda = 1/2 + B . Bbar / |Bbar|^2.

* ``verify_decomposition`` is the independent residual check used by the
  test suite and the sampling oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    ConeKind,
    DEFAULT_TOLERANCES,
    HullParams,
    SeparationWitness,
    Tolerances,
    Triple,
    Vec3,
    hull_excess_bound,
    separation_witness,
    unit_perpendicular,
    unit_perpendicular_to_all,
)

HALF_PI = 0.5 * math.pi
THREE_HALF_PI = 1.5 * math.pi


class DecompositionError(ValueError):
    """Base class for decomposition failures."""


class NotInHullError(DecompositionError):
    """The target point lies outside the relaxed set (or on a bad boundary)."""

    def __init__(self, message: str, witness: SeparationWitness | None = None):
        super().__init__(message)
        self.witness = witness


class DegenerateCallError(DecompositionError):
    """The interior solver was called on an E = B x u point."""


@dataclass(frozen=True)
class Decomposition:
    """Weight and endpoints of a two-state mixture: lam*z1 + (1-lam)*z2."""

    lam: float
    z1: Triple
    z2: Triple

    def combine(self) -> Triple:
        return self.z1 * self.lam + self.z2 * (1.0 - self.lam)

    def to_json_dict(self, residuals: dict | None = None) -> dict:
        d = {
            "lambda": self.lam,
            "z1": self.z1.to_json_dict(),
            "z2": self.z2.to_json_dict(),
        }
        if residuals is not None:
            d["residuals"] = dict(residuals)
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "Decomposition":
        try:
            return cls(float(d["lambda"]),
                       Triple.from_json_dict(d["z1"]),
                       Triple.from_json_dict(d["z2"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed decomposition JSON: {exc}") from exc


@dataclass(frozen=True)
class LaminateConditions:
    """Solved perturbation data for an interior relaxed-set point.

    ebar is the normalised excess field, bbar/ubar the perturbations, and
    alpha_b / alpha_u the angles between B and bbar resp. u and ubar (zero
    by convention when the base vector vanishes).
    """

    ebar: Vec3
    bbar: Vec3
    ubar: Vec3
    alpha_b: float
    alpha_u: float


class AngleEquation:
    """The scalar gap G(alpha) whose root balances the amplitude budget.

    With the working-plane frame fixed, G reduces to a pure sinusoid
    A cos(alpha) + C sin(alpha); the endpoint values of the root bracket
    [pi/2, 3pi/2] therefore satisfy G(pi/2) = -G(3pi/2) exactly.
    """

    __slots__ = ("e1", "e2", "p_vec", "q_vec", "amp_cos", "amp_sin")

    def __init__(self, e1: Vec3, e2: Vec3, p_vec: Vec3, q_vec: Vec3,
                 amp_cos: float, amp_sin: float):
        self.e1 = e1
        self.e2 = e2
        self.p_vec = p_vec
        self.q_vec = q_vec
        self.amp_cos = amp_cos
        self.amp_sin = amp_sin

    @property
    def bracket(self) -> tuple[float, float]:
        return (HALF_PI, THREE_HALF_PI)

    def __call__(self, alpha: float) -> float:
        return self.amp_cos * math.cos(alpha) + self.amp_sin * math.sin(alpha)

    def direction_pair(self, alpha: float) -> tuple[Vec3, Vec3]:
        """Unit directions (bhat, uhat) at angle alpha from the frame axis."""
        ca = math.cos(alpha)
        sa = math.sin(alpha)
        return self.e1 * ca + self.e2 * sa, self.p_vec * ca + self.q_vec * sa


def _exact_ohm_threshold(p: HullParams, tol: Tolerances) -> float:
    return tol.eps_root * p.r * p.s


def decompose_exact_ohm(B: Vec3, u: Vec3, p: HullParams, kind: ConeKind = ConeKind.NONSTATIONARY,
                        tol: Tolerances | None = None) -> Decomposition:
    """Split (B, u, B x u) into two full-amplitude states.

    Uses a single unit direction e perpendicular to both B and u, sets
    Bbar = sqrt(r^2-|B|^2) e and ubar = sqrt(s^2-|u|^2) e, and returns the
    midpoint combination of (B +- Bbar, u +- ubar).  Because Bbar and ubar
    are parallel, their cross product vanishes and the midpoint electric
    field is exactly B x u; the difference of the endpoints is admissible
    for every cone kind.
    """
    tol = tol or DEFAULT_TOLERANCES
    scale = max(p.r, p.s, 1.0)
    eps = tol.eps_mem * scale * scale
    nb = B.norm()
    nu = u.norm()
    if nb > p.r + eps or nu > p.s + eps:
        w = separation_witness(Triple(B, u, B.cross(u)), p, kind, tol)
        raise NotInHullError(
            f"amplitudes |B|={nb}, |u|={nu} exceed the radii ({p.r}, {p.s})", w)
    db = math.sqrt(max(0.0, p.r * p.r - nb * nb))
    du = math.sqrt(max(0.0, p.s * p.s - nu * nu))
    e = unit_perpendicular_to_all((B, u))
    bbar = e * db
    ubar = e * du
    B1 = B + bbar
    u1 = u + ubar
    B2 = B - bbar
    u2 = u - ubar
    z1 = Triple(B1, u1, B1.cross(u1))
    z2 = Triple(B2, u2, B2.cross(u2))
    return Decomposition(0.5, z1, z2)


def _interior_gaps(z: Triple, p: HullParams, tol: Tolerances) -> tuple[float, float, float]:
    """(r^2-|B|^2, s^2-|u|^2, |E - B x u|), raising on boundary/degenerate input."""
    rr = p.r * p.r - z.B.norm2()
    ss = p.s * p.s - z.u.norm2()
    c = (z.E - z.B.cross(z.u)).norm()
    if c <= _exact_ohm_threshold(p, tol):
        raise DegenerateCallError(
            "E = B x u within tolerance; use decompose_exact_ohm")
    if rr <= tol.eps_mem * p.r * p.r or ss <= tol.eps_mem * p.s * p.s:
        # On the amplitude boundary the excess must vanish, so a boundary
        # point with E != B x u cannot be an interior relaxed-set point.
        raise NotInHullError(
            f"amplitude on the boundary (r^2-|B|^2={rr}, s^2-|u|^2={ss}) "
            f"with nonzero excess |E-Bxu|={c}")
    return rr, ss, c


def angle_equation(z: Triple, p: HullParams, kind: ConeKind = ConeKind.NONSTATIONARY,
                   tol: Tolerances | None = None) -> AngleEquation:
    """Build the root-finding problem for an interior point with B != 0.

    Exposed so tests can scan G for continuity and check the bracket signs.
    """
    tol = tol or DEFAULT_TOLERANCES
    w = separation_witness(z, p, kind, tol)
    if w.separates:
        raise NotInHullError(f"point outside the relaxed set (witness {w.function})", w)
    rr, ss, _ = _interior_gaps(z, p, tol)
    if z.B.norm() == 0.0:
        raise DegenerateCallError("angle equation needs B != 0; the B = 0 "
                                  "branch fixes the directions directly")
    return _build_angle_equation(z, p, rr, ss)


def _build_angle_equation(z: Triple, p: HullParams, rr: float, ss: float) -> AngleEquation:
    excess = z.E - z.B.cross(z.u)
    d_bound = math.sqrt(rr * ss)
    ebar = excess / d_bound
    e_len = min(ebar.norm(), 1.0)
    nhat = ebar.normalized()
    ct = math.sqrt(max(0.0, 1.0 - e_len * e_len))
    st = e_len

    nb = z.B.norm()
    e1 = z.B / nb
    w = e1.cross(nhat)
    wn = w.norm()
    # B . Ebar = 0 on the relaxed set, so B and Ebar nonzero force |B x Ebar|
    # = |B||Ebar|; a vanishing cross product here means corrupted input.
    if wn < 1e-6:
        raise DecompositionError(
            "working plane degenerate: B is parallel to the excess field")
    e2 = w / wn
    # uhat(alpha) is bhat(alpha) rotated by arcsin|Ebar| about +nhat, which
    # makes bhat x uhat = Ebar for every alpha.  Both are linear in
    # (cos alpha, sin alpha), so G is the sinusoid below.
    p_vec = e1 * ct + nhat.cross(e1) * st
    q_vec = e2 * ct + nhat.cross(e2) * st
    kappa = math.sqrt(rr / ss)
    amp_cos = nb - kappa * z.u.dot(p_vec)
    amp_sin = -kappa * z.u.dot(q_vec)
    return AngleEquation(e1, e2, p_vec, q_vec, amp_cos, amp_sin)


def _bisect_gap(gap: AngleEquation, eps_root: float) -> float:
    """Bisection on [pi/2, 3pi/2]; runs down to floating-point resolution.

    The extra refinement below eps_root costs ~10 iterations and keeps the
    residual of the velocity-side amplitude equations at rounding level even
    when one amplitude gap is many orders smaller than the other.
    """
    amp_cos = gap.amp_cos
    amp_sin = gap.amp_sin
    cos = math.cos
    sin = math.sin
    lo, hi = gap.bracket
    g_lo = amp_cos * cos(lo) + amp_sin * sin(lo)
    g_hi = amp_cos * cos(hi) + amp_sin * sin(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if (g_lo > 0.0) == (g_hi > 0.0):
        # Mathematically g(lo) = -g(hi); same signs only happen when both
        # values sit at rounding level.
        return lo if abs(g_lo) <= abs(g_hi) else hi
    lo_positive = g_lo > 0.0
    width_floor = min(eps_root, 1e-15)
    while hi - lo > width_floor:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        g_mid = amp_cos * cos(mid) + amp_sin * sin(mid)
        if g_mid == 0.0:
            return mid
        if (g_mid > 0.0) == lo_positive:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    return lo if abs(g_lo) <= abs(g_hi) else hi


def solve_laminate_conditions(z: Triple, p: HullParams, kind: ConeKind = ConeKind.NONSTATIONARY,
                              tol: Tolerances | None = None) -> LaminateConditions:
    """Find perturbations (Bbar, ubar) witnessing an interior relaxed point.

    The returned conditions satisfy, up to rounding,

        E = B x u + sqrt((r^2-|B|^2)(s^2-|u|^2)) (Bbar x ubar)/(|Bbar||ubar|),
        |Bbar|^2 (s^2-|u|^2) = |ubar|^2 (r^2-|B|^2),
        |Bbar|^2 = 4 (r^2 - |B|^2 sin^2 alpha_b),
        |B| cos(alpha_b) = sqrt((r^2-|B|^2)/(s^2-|u|^2)) |u| cos(alpha_u),
        B . (Bbar x ubar) = 0,

    and additionally u . (Bbar x ubar) = 0 for the stationary incompressible
    cone (where the excess is parallel to B x u, so the working plane is
    span{B, u}).
    """
    tol = tol or DEFAULT_TOLERANCES
    w = separation_witness(z, p, kind, tol)
    if w.separates:
        raise NotInHullError(f"point outside the relaxed set (witness {w.function})", w)
    return _solve_validated(z, p, kind, tol)


def _solve_validated(z: Triple, p: HullParams, kind: ConeKind,
                     tol: Tolerances) -> LaminateConditions:
    rr, ss, _ = _interior_gaps(z, p, tol)
    d_bound = math.sqrt(rr * ss)
    ebar = (z.E - z.B.cross(z.u)) / d_bound
    kappa = math.sqrt(rr / ss)
    nb = z.B.norm()
    nu = z.u.norm()

    if nb == 0.0:
        # Fix uhat perpendicular to both u and the excess, then tilt bhat
        # against it so that bhat x uhat reproduces the normalised excess.
        e_len = min(ebar.norm(), 1.0)
        nhat = ebar.normalized()
        ct = math.sqrt(max(0.0, 1.0 - e_len * e_len))
        w = z.u.cross(nhat)
        if w.norm() > 1e-12 * nu:
            uhat = w.normalized()
        else:
            uhat = unit_perpendicular(nhat)
        bhat = uhat * ct + uhat.cross(nhat) * e_len
        cos2_alpha = 0.0
        alpha_b = 0.0
    else:
        gap = _build_angle_equation(z, p, rr, ss)
        alpha = _bisect_gap(gap, tol.eps_root)
        bhat, uhat = gap.direction_pair(alpha)
        cos_alpha = math.cos(alpha)
        cos2_alpha = cos_alpha * cos_alpha
        alpha_b = alpha

    # |Bbar|^2 = 4 (r^2 - |B|^2 sin^2 alpha), computed as the amplitude gap
    # plus |B|^2 cos^2 alpha: near the boundary the direct form cancels
    # catastrophically and the endpoint amplitudes inherit the damage.
    bbar_len = 2.0 * math.sqrt(rr + nb * nb * cos2_alpha)
    ubar_len = bbar_len / kappa
    bbar = bhat * bbar_len
    ubar = uhat * ubar_len
    if nu > 0.0:
        alpha_u = math.atan2(z.u.cross(uhat).norm(), z.u.dot(uhat))
    else:
        alpha_u = 0.0
    return LaminateConditions(ebar=ebar, bbar=bbar, ubar=ubar,
                              alpha_b=alpha_b, alpha_u=alpha_u)


def decompose(z: Triple, p: HullParams, kind: ConeKind = ConeKind.NONSTATIONARY,
              tol: Tolerances | None = None) -> Decomposition:
    """Write a relaxed-set point as a two-state constraint-set mixture.

    Decompositions are not unique; the returned witness is the one reached
    by bisection from the standard bracket.  Raises NotInHullError (with the
    separating function attached) for points outside the relaxed set.
    """
    tol = tol or DEFAULT_TOLERANCES
    w = separation_witness(z, p, kind, tol)
    if w.separates:
        raise NotInHullError(f"point outside the relaxed set (witness {w.function}"
                             f" = {w.value})", w)
    c = (z.E - z.B.cross(z.u)).norm()
    if c <= _exact_ohm_threshold(p, tol):
        return decompose_exact_ohm(z.B, z.u, p, kind, tol)

    conds = _solve_validated(z, p, kind, tol)
    bb2 = conds.bbar.norm2()
    lam = 0.5 + z.B.dot(conds.bbar) / bb2
    lam = min(1.0, max(0.0, lam))
    mu = 1.0 - lam
    B1 = z.B + conds.bbar * mu
    u1 = z.u + conds.ubar * mu
    B2 = z.B - conds.bbar * lam
    u2 = z.u - conds.ubar * lam
    z1 = Triple(B1, u1, B1.cross(u1))
    z2 = Triple(B2, u2, B2.cross(u2))
    return Decomposition(lam, z1, z2)


@dataclass(frozen=True)
class VerificationReport:
    """Per-check residuals for a decomposition; failures are reported, not thrown."""

    passed: bool
    max_residual: float
    residuals: dict
    failures: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_residual": self.max_residual,
            "residuals": dict(self.residuals),
            "failures": list(self.failures),
        }


def verify_decomposition(d: Decomposition, target: Triple, p: HullParams,
                         kind: ConeKind = ConeKind.NONSTATIONARY,
                         tol: Tolerances | None = None) -> VerificationReport:
    """Check a decomposition against its target, reporting residuals.

    Checks: both endpoints on the constraint set, endpoint difference in the
    cone for `kind`, weight inside [0,1], reconstruction of the target, and
    the product identity lam * (1-lam) * |B1-B2| * |u1-u2|
    = sqrt((r^2-|B|^2)(s^2-|u|^2)) tying the weight to the amplitude gaps.
    """
    tol = tol or DEFAULT_TOLERANCES
    res: dict[str, float] = {}

    for name, zi in (("z1", d.z1), ("z2", d.z2)):
        res[f"{name}_B_amplitude"] = abs(zi.B.norm() - p.r) / p.r
        res[f"{name}_u_amplitude"] = abs(zi.u.norm() - p.s) / p.s
        res[f"{name}_ohm"] = (zi.E - zi.B.cross(zi.u)).norm() / (p.r * p.s)

    dz = d.z1 - d.z2
    res["cone_BE"] = abs(dz.B.dot(dz.E)) / (1.0 + dz.B.norm() * dz.E.norm())
    if kind.restricts_u:
        res["cone_uE"] = abs(dz.u.dot(dz.E)) / (1.0 + dz.u.norm() * dz.E.norm())

    res["lambda_range"] = max(0.0, -d.lam, d.lam - 1.0)

    mid = d.combine()
    res["reconstruction"] = (mid - target).norm() / (1.0 + target.norm())

    d_bound = hull_excess_bound(target.B, target.u, p)
    prod = d.lam * (1.0 - d.lam) * dz.B.norm() * dz.u.norm()
    res["weight_amplitude_identity"] = abs(prod - d_bound) / (1.0 + d_bound)

    failures = tuple(name for name, v in res.items() if v > tol.eps_mem)
    max_res = max(res.values())
    return VerificationReport(passed=not failures, max_residual=max_res,
                              residuals=res, failures=failures)
