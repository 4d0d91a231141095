"""Plane-wave solutions of the decoupled conservation laws, grid residuals
and staircase averaging.

A plane wave h(x . xi_x + t xi_t) (Bbar, ubar, Ebar) solves

    div B = 0,   dt B + curl E = 0

for every smooth profile h exactly when

    Bbar . xi_x = 0   and   xi_t Bbar + xi_x x Ebar = 0.

``wave_vector_for`` constructs such a frequency for every admissible cone
direction; ``grid_residual`` verifies the construction the pedestrian way,
with centred differences on a periodic grid, including the second-order
convergence of the truncation error; ``staircase_average`` realises mixed
states as averages of fast two-state oscillations and measures the
first-order decay of the averaging error in the oscillation count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConeKind,
    DEFAULT_TOLERANCES,
    Tolerances,
    Triple,
    Vec3,
    in_wave_cone,
    unit_perpendicular,
    unit_perpendicular_to_all,
)
from .laminate import Decomposition

TWO_PI = 2.0 * math.pi


class NotInConeError(ValueError):
    """The given direction admits no compatible plane wave."""


class LatticeError(ValueError):
    """No integer frequency vector approximates the wave vector closely enough."""


class WaveVector:
    """Space-time frequency (xi_x, xi_t) of a plane wave; xi_x must be nonzero."""

    __slots__ = ("xi_x", "xi_t")

    def __init__(self, xi_x: Vec3, xi_t: float):
        if not isinstance(xi_x, Vec3):
            raise TypeError("xi_x must be a Vec3")
        if xi_x.norm() == 0.0:
            raise ValueError("spatial frequency xi_x must be nonzero")
        xi_t = float(xi_t)
        if not math.isfinite(xi_t):
            raise ValueError(f"non-finite temporal frequency {xi_t}")
        object.__setattr__(self, "xi_x", xi_x)
        object.__setattr__(self, "xi_t", xi_t)

    def __setattr__(self, name, value):
        raise AttributeError("WaveVector is immutable")

    def __repr__(self):
        return f"WaveVector(xi_x={self.xi_x!r}, xi_t={self.xi_t!r})"

    def norm(self) -> float:
        return math.sqrt(self.xi_x.norm2() + self.xi_t * self.xi_t)

    def is_lattice(self, tol_abs: float = 1e-9) -> bool:
        """True when all frequencies are integers (so a 2*pi box is periodic)."""
        vals = [self.xi_x.x, self.xi_x.y, self.xi_x.z, self.xi_t]
        return all(abs(v - round(v)) <= tol_abs for v in vals)

    def to_json_dict(self) -> dict:
        return {"xi_x": self.xi_x.as_list(), "xi_t": self.xi_t}


class GridSpec:
    """Periodic evaluation grid: n points per axis, spacing h, and the
    number of base periods spanned by averaging windows."""

    __slots__ = ("n", "h", "periods")

    def __init__(self, n: int, h: float | None = None, periods: int = 1):
        n = int(n)
        if n < 4 or n % 2 != 0:
            raise ValueError(f"grid needs at least 4 points per axis and an even count, got {n}")
        h = TWO_PI / n if h is None else float(h)
        if not (math.isfinite(h) and h > 0.0):
            raise ValueError(f"grid spacing must be a positive real, got {h}")
        periods = int(periods)
        if periods < 1:
            raise ValueError(f"periods must be a positive integer, got {periods}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "periods", periods)

    def __setattr__(self, name, value):
        raise AttributeError("GridSpec is immutable")

    def __repr__(self):
        return f"GridSpec(n={self.n}, h={self.h!r}, periods={self.periods})"


def plane_wave_conditions(direction: Triple, xi: WaveVector,
                          kind: ConeKind = ConeKind.NONSTATIONARY) -> dict:
    """Absolute residuals of the algebraic plane-wave conditions.

    "gauss" is |Bbar . xi_x|, "faraday" is |xi_t Bbar + xi_x x Ebar| (with
    xi_t = 0 this is the curl-free condition of the stationary system), and
    incompressible kinds add "u_div" = |ubar . xi_x|.
    """
    res = {
        "gauss": abs(direction.B.dot(xi.xi_x)),
        "faraday": (direction.B * xi.xi_t + xi.xi_x.cross(direction.E)).norm(),
    }
    if kind.incompressible:
        res["u_div"] = abs(direction.u.dot(xi.xi_x))
    return res


def wave_vector_for(direction: Triple, kind: ConeKind = ConeKind.NONSTATIONARY,
                    tol: Tolerances | None = None,
                    a: float = 1.0, c: float = 1.0) -> WaveVector:
    """Construct a frequency whose plane wave solves the system for `kind`.

    For the shared cone the construction works in the orthogonal frame
    {Ebar, Bbar, Ebar x Bbar}: xi_x = a Ebar + c (Ebar x Bbar) and
    xi_t = -c |Ebar|^2 satisfy both conditions for any coefficients (a, c).
    The incompressible variant solves a ubar . xi_x = 0 linearly for (a, c),
    falling back to the given defaults when the functional vanishes; in the
    degenerate branch Bbar = 0, Ebar != 0 the spatial frequency is forced
    parallel to Ebar, so ubar . xi_x = 0 is additionally satisfiable only
    when ubar is orthogonal to Ebar.  Stationary kinds always return
    xi_t = 0.

    Raises NotInConeError when the direction is not in the cone for `kind`.
    """
    tol = tol or DEFAULT_TOLERANCES
    if not in_wave_cone(direction, kind, tol):
        raise NotInConeError(
            f"direction is not in the wave cone for kind {kind.label!r}")
    bb, uu, ee = direction.B, direction.u, direction.E

    if kind is ConeKind.STATIONARY_INCOMPRESSIBLE:
        mix = bb.cross(uu)
        if mix.norm() > 0.0:
            return WaveVector(mix, 0.0)
        if ee.norm() > 0.0:
            return WaveVector(ee, 0.0)
        return WaveVector(unit_perpendicular_to_all((bb, uu)), 0.0)

    ne = ee.norm()
    nb = bb.norm()
    if ne == 0.0 and nb == 0.0:
        # Free direction: any spatial frequency works, time-independent.
        return WaveVector(Vec3(1.0, 0.0, 0.0), 0.0)
    if ne == 0.0:
        if kind.incompressible:
            return WaveVector(unit_perpendicular_to_all((bb, uu)), 0.0)
        return WaveVector(unit_perpendicular(bb), 0.0)
    if nb == 0.0:
        # xi_x x Ebar = 0 with xi_t unconstrained forces xi_x parallel to Ebar.
        return WaveVector(ee * (a if a != 0.0 else 1.0), 0.0)

    exb = ee.cross(bb)
    if kind.incompressible:
        v1 = uu.dot(ee)
        v2 = uu.dot(exb)
        scale = max(abs(v1), abs(v2))
        if scale > 1e-15 * (1.0 + uu.norm() * (ne + exb.norm())):
            a, c = v2 / scale, -v1 / scale
    if kind.stationary:
        c = 0.0
        if a == 0.0:
            a = 1.0
    xi_x = ee * a + exb * c
    return WaveVector(xi_x, -c * ne * ne)


def round_to_lattice(xi: WaveVector, direction: Triple,
                     kind: ConeKind = ConeKind.NONSTATIONARY,
                     tol: Tolerances | None = None,
                     max_scale: int = 64) -> WaveVector:
    """Scale xi to the nearest nonzero integer frequency vector.

    Tries scalings that put the largest spatial component at 1..max_scale,
    accepting an integer candidate within angle 1e-2 of xi_x whose rounded
    frequencies still satisfy the plane-wave conditions; when rounding
    breaks them, the frame coefficients (a, c) are re-solved against the
    rounded spatial direction.  Raises LatticeError when the wave vector is
    not commensurable with the integer lattice at these scales.
    """
    tol = tol or DEFAULT_TOLERANCES
    if xi.is_lattice():
        reduced = _reduce_lattice(xi)
        if _conditions_ok(direction, reduced, kind, tol):
            return reduced
    top = max(abs(v) for v in xi.xi_x)
    for k in range(1, max_scale + 1):
        t = k / top
        cand_x = Vec3(round(xi.xi_x.x * t), round(xi.xi_x.y * t), round(xi.xi_x.z * t))
        if cand_x.norm() == 0.0:
            continue
        cos_angle = cand_x.dot(xi.xi_x) / (cand_x.norm() * xi.xi_x.norm())
        if cos_angle < math.cos(1e-2):
            continue
        cand = WaveVector(cand_x, round(xi.xi_t * t))
        if _conditions_ok(direction, cand, kind, tol):
            return _reduce_lattice(cand)
        resolved = _resolve_time_frequency(cand_x, direction, kind)
        if resolved is not None and _conditions_ok(direction, resolved, kind, tol):
            return _reduce_lattice(resolved)
    raise LatticeError(
        f"no integer frequency within angle 1e-2 of {xi!r} up to scale {max_scale}")


def _reduce_lattice(xi: WaveVector) -> WaveVector:
    """Divide an integer frequency vector by the gcd of its entries, keeping
    the lowest grid-resolvable mode of the same wave family."""
    vals = [round(xi.xi_x.x), round(xi.xi_x.y), round(xi.xi_x.z), round(xi.xi_t)]
    g = 0
    for v in vals:
        g = math.gcd(g, abs(v))
    if g <= 1:
        return WaveVector(Vec3(*(float(v) for v in vals[:3])), float(vals[3]))
    return WaveVector(Vec3(*(v / g for v in vals[:3])), vals[3] / g)


def _conditions_ok(direction: Triple, xi: WaveVector, kind: ConeKind,
                   tol: Tolerances) -> bool:
    res = plane_wave_conditions(direction, xi, kind)
    scale = 1.0 + xi.norm() * direction.norm()
    return max(res["gauss"], res["faraday"]) <= tol.eps_residual * scale


def _resolve_time_frequency(cand_x: Vec3, direction: Triple,
                            kind: ConeKind) -> WaveVector | None:
    """Re-solve the frame coefficients against a rounded spatial frequency."""
    if kind.stationary:
        return WaveVector(cand_x, 0.0)
    ee, bb = direction.E, direction.B
    ne2 = ee.norm2()
    if ne2 == 0.0 or bb.norm() == 0.0:
        return WaveVector(cand_x, 0.0)
    exb = ee.cross(bb)
    exb2 = exb.norm2()
    if exb2 == 0.0:
        return None
    a2 = cand_x.dot(ee) / ne2
    c2 = cand_x.dot(exb) / exb2
    in_span = (ee * a2 + exb * c2 - cand_x).norm() <= 1e-9 * cand_x.norm()
    if not in_span:
        return None
    xi_t = -c2 * ne2
    if abs(xi_t - round(xi_t)) > 1e-9:
        return None
    return WaveVector(cand_x, round(xi_t))


@dataclass(frozen=True)
class GridResidualReport:
    """Max-norm centred-difference residuals of each conserved equation."""

    n: int
    h: float
    residuals: dict
    xi: WaveVector
    kind: str

    def to_json_dict(self) -> dict:
        return {"n": self.n, "h": self.h, "residuals": dict(self.residuals),
                "xi": self.xi.to_json_dict(), "kind": self.kind}


def _spatial_phase(xi_x: Vec3, n: int, h: float) -> np.ndarray:
    ix = np.arange(n, dtype=np.float64) * h
    return (ix[:, None, None] * xi_x.x + ix[None, :, None] * xi_x.y
            + ix[None, None, :] * xi_x.z)


def _spatial_derivative_residuals(s: np.ndarray, h: float, direction: Triple,
                                  kind: ConeKind,
                                  dst: np.ndarray | None) -> dict[str, float]:
    inv2h = 1.0 / (2.0 * h)
    dsx = (np.roll(s, -1, axis=0) - np.roll(s, 1, axis=0)) * inv2h
    dsy = (np.roll(s, -1, axis=1) - np.roll(s, 1, axis=1)) * inv2h
    dsz = (np.roll(s, -1, axis=2) - np.roll(s, 1, axis=2)) * inv2h
    bb, uu, ee = direction.B, direction.u, direction.E

    out: dict[str, float] = {}
    div_b = dsx * bb.x + dsy * bb.y + dsz * bb.z
    out["div_B"] = float(np.abs(div_b).max())

    curl_x = dsy * ee.z - dsz * ee.y
    curl_y = dsz * ee.x - dsx * ee.z
    curl_z = dsx * ee.y - dsy * ee.x
    if dst is not None:
        curl_x = curl_x + dst * bb.x
        curl_y = curl_y + dst * bb.y
        curl_z = curl_z + dst * bb.z
    out["faraday"] = float(max(np.abs(curl_x).max(), np.abs(curl_y).max(),
                               np.abs(curl_z).max()))

    if kind.incompressible:
        div_u = dsx * uu.x + dsy * uu.y + dsz * uu.z
        out["div_u"] = float(np.abs(div_u).max())
    return out


def grid_residual(direction: Triple, xi: WaveVector, g: GridSpec,
                  kind: ConeKind = ConeKind.NONSTATIONARY) -> GridResidualReport:
    """Centred-difference residuals of the sin-profile plane wave.

    The field sin(x . xi_x + t xi_t) * direction is sampled on an n^3 grid
    (times n points in t for the non-stationary kinds) over a 2*pi-periodic
    box, which requires integer frequencies; the time axis is streamed so
    only three sin slices are alive at once.  The truncation error of the
    centred stencil on sin is O(h^2) per equation.
    """
    if not xi.is_lattice():
        raise ValueError("grid_residual needs integer frequencies for exact "
                         "periodicity; use round_to_lattice first")
    if abs(g.n * g.h / TWO_PI - round(g.n * g.h / TWO_PI)) > 1e-9:
        raise ValueError("grid must span a whole number of 2*pi periods "
                         f"(n*h = {g.n * g.h})")
    phase = _spatial_phase(xi.xi_x, g.n, g.h)

    if kind.stationary or xi.xi_t == 0.0:
        # Stationary system, or a time-independent wave of the time-dependent
        # system: either way the time derivative vanishes identically.
        s = np.sin(phase)
        residuals = _spatial_derivative_residuals(s, g.h, direction, kind, dst=None)
        return GridResidualReport(g.n, g.h, residuals, xi, kind.label)

    inv2h = 1.0 / (2.0 * g.h)
    worst: dict[str, float] = {}
    slices = [np.sin(phase + (t_idx * g.h) * xi.xi_t) for t_idx in (g.n - 1, 0, 1)]
    for t_idx in range(g.n):
        s_prev, s_cur, s_next = slices
        dst = (s_next - s_prev) * inv2h
        res = _spatial_derivative_residuals(s_cur, g.h, direction, kind, dst=dst)
        for key, val in res.items():
            worst[key] = max(worst.get(key, 0.0), val)
        nxt = (t_idx + 2) % g.n
        slices = [s_cur, s_next, np.sin(phase + (nxt * g.h) * xi.xi_t)]
    return GridResidualReport(g.n, g.h, worst, xi, kind.label)


# Residuals below this floor are rounding noise, not truncation error;
# convergence ratios against them are meaningless.
RESIDUAL_FLOOR = 1e-13


def refinement_study(direction: Triple, xi: WaveVector,
                     kind: ConeKind = ConeKind.NONSTATIONARY,
                     levels: tuple[int, ...] = (8, 16, 32)) -> dict:
    """Grid residuals across refinement levels plus coarse/fine ratios.

    A centred second-order stencil on a smooth profile should show ratios
    approaching 4 (>= 3 in the asymptotic regime) wherever the residual is
    above rounding level.
    """
    reports = [grid_residual(direction, xi, GridSpec(n), kind) for n in levels]
    ratios: dict[str, list] = {}
    for key in reports[0].residuals:
        row = []
        for coarse, fine in zip(reports, reports[1:]):
            c, f = coarse.residuals[key], fine.residuals[key]
            row.append(c / f if f > RESIDUAL_FLOOR else None)
        ratios[key] = row
    return {
        "levels": list(levels),
        "residuals": [rep.residuals for rep in reports],
        "ratios": ratios,
        "xi": xi.to_json_dict(),
        "kind": kind.label,
    }


@dataclass(frozen=True)
class StaircaseReport:
    """Domain average of a two-state staircase field and its mixing error."""

    average: Triple
    error: float
    fraction: float
    weight: float
    n_osc: int
    samples: int

    def to_json_dict(self) -> dict:
        return {
            "average": self.average.to_json_dict(),
            "error": self.error,
            "fraction": self.fraction,
            "weight": self.weight,
            "n_osc": self.n_osc,
            "samples": self.samples,
        }


def staircase_average(d: Decomposition, xi: WaveVector, n_osc: int, g: GridSpec,
                      tol: Tolerances | None = None) -> StaircaseReport:
    """Average the piecewise-constant oscillation between the two endpoints.

    The field takes value z1 where frac(n_osc * phi / 2pi) < lambda and z2
    otherwise, with phi the plane-wave phase; jumps across phase planes are
    admissible because z1 - z2 satisfies the plane-wave conditions for xi
    (validated here).  The phase is sampled at n^3 cell centres.

    The averaging window spans g.periods base periods plus half an
    oscillation band.  A window commensurate with the bands would average
    every band exactly and leave only grid quantisation noise; the extra
    half band makes the leading averaging error

        min(lambda, 1 - lambda) / (2 * periods * n_osc + 1),

    which cleanly halves when n_osc doubles, the signature of weak
    convergence of fast oscillations to their mean.
    """
    tol = tol or DEFAULT_TOLERANCES
    if n_osc < 1:
        raise ValueError(f"n_osc must be a positive integer, got {n_osc}")
    dz = d.z1 - d.z2
    res = plane_wave_conditions(dz, xi, ConeKind.NONSTATIONARY)
    scale = 1.0 + xi.norm() * dz.norm()
    if max(res["gauss"], res["faraday"]) > tol.eps_residual * scale:
        raise ValueError("xi does not admit plane waves along z1 - z2; "
                         f"condition residuals {res}")

    samples = g.n ** 3
    window = TWO_PI * g.periods + math.pi / n_osc
    phi = (np.arange(samples, dtype=np.float64) + 0.5) * (window / samples)
    frac = (phi * (n_osc / TWO_PI)) % 1.0
    fraction = float(np.count_nonzero(frac < d.lam)) / samples

    average = d.z1 * fraction + d.z2 * (1.0 - fraction)
    error = (average - d.combine()).norm()
    return StaircaseReport(average=average, error=error, fraction=fraction,
                           weight=d.lam, n_osc=n_osc, samples=samples)
