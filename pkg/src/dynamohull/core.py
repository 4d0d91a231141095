"""Domain types and closed-form membership predicates.

The state of interest is a triple z = (B, u, E) of real 3-vectors.  The
constraint set couples them through the ideal-Ohm relation E = B x u at
fixed amplitudes |B| = r, |u| = s.  One-dimensional oscillations between
constraint-set states are only compatible with the underlying conservation
laws along directions of the wave cone {B . E = 0} (plus {u . E = 0} in the
stationary incompressible case).  Mixing constraint-set states along cone
directions fills out a strictly larger set, described in closed form by

    |B| <= r,  |u| <= s,  B . E = 0,
    |E - B x u|^2 <= (r^2 - |B|^2) (s^2 - |u|^2),

with u . E = 0 added for the stationary incompressible cone.  This module
implements the predicates for all of these sets, together with the two
separating functions that certify non-membership:

    g1(z) = B . E                     (affine along cone directions)
    g2(z) = max over a in [0,1] of
            a (|B|^2 - r^2) + (1-a)(|u|^2 - s^2)
            + 2 sqrt(a(1-a)) |B x u - E|    (convex)

A point lies in the mixed set exactly when g1 = 0 and g2 <= 0 (and
g3(z) = u . E = 0 for the stationary incompressible variant).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass


class Vec3:
    """Immutable real 3-vector; rejects non-finite components at construction.

    Validation happens once, here; arithmetic between already-validated
    vectors goes through an unchecked internal constructor, so the hot
    predicates pay for the non-finiteness check only at the API boundary.
    """

    __slots__ = ("x", "y", "z")

    def __init__(self, x: float, y: float, z: float):
        x = float(x)
        y = float(y)
        z = float(z)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise ValueError(f"non-finite Vec3 component: ({x}, {y}, {z})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    def __setattr__(self, name, value):
        raise AttributeError("Vec3 is immutable")

    def __repr__(self):
        return f"Vec3({self.x!r}, {self.y!r}, {self.z!r})"

    def __eq__(self, other):
        if not isinstance(other, Vec3):
            return NotImplemented
        return self.x == other.x and self.y == other.y and self.z == other.z

    def __hash__(self):
        return hash((self.x, self.y, self.z))

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z

    def __add__(self, other: "Vec3") -> "Vec3":
        return _vec(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return _vec(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return _vec(-self.x, -self.y, -self.z)

    def __mul__(self, a: float) -> "Vec3":
        return _vec(self.x * a, self.y * a, self.z * a)

    __rmul__ = __mul__

    def __truediv__(self, a: float) -> "Vec3":
        return _vec(self.x / a, self.y / a, self.z / a)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return _vec(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm2(self) -> float:
        return self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        x, y, z = self.x, self.y, self.z
        return math.sqrt(x * x + y * y + z * z)

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return _vec(self.x / n, self.y / n, self.z / n)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z]


_obj_new = object.__new__
_obj_set = object.__setattr__


def _vec(x: float, y: float, z: float) -> Vec3:
    """Unchecked Vec3 for arithmetic on already-validated values."""
    v = _obj_new(Vec3)
    _obj_set(v, "x", x)
    _obj_set(v, "y", y)
    _obj_set(v, "z", z)
    return v


ZERO3 = Vec3(0.0, 0.0, 0.0)


def unit_perpendicular(v: Vec3) -> Vec3:
    """Some unit vector perpendicular to v (any unit vector if v = 0)."""
    ax, ay, az = abs(v.x), abs(v.y), abs(v.z)
    if ax <= ay and ax <= az:
        w = Vec3(1.0, 0.0, 0.0)
    elif ay <= az:
        w = Vec3(0.0, 1.0, 0.0)
    else:
        w = Vec3(0.0, 0.0, 1.0)
    p = v.cross(w)
    n = p.norm()
    if n == 0.0:
        # v itself is (numerically) zero; w is as good as any direction.
        return w
    return p / n


def orthonormal_basis(vs: tuple["Vec3", ...], drop_rel: float = 1e-10) -> list["Vec3"]:
    """Gram-Schmidt with a relative pivot; near-dependent vectors are dropped."""
    basis: list[Vec3] = []
    for v in vs:
        w = v
        for b in basis:
            w = w - b * w.dot(b)
        if w.norm() > drop_rel * v.norm():
            basis.append(w.normalized())
    return basis


def unit_perpendicular_to_all(vs: tuple["Vec3", ...]) -> Vec3:
    """A unit vector perpendicular to every vector in vs (at most two
    independent ones in three dimensions)."""
    basis = orthonormal_basis(vs)
    if len(basis) >= 2:
        return basis[0].cross(basis[1])
    if len(basis) == 1:
        return unit_perpendicular(basis[0])
    return Vec3(1.0, 0.0, 0.0)


class Triple:
    """A state z = (B, u, E): magnetic field, velocity and electric field values."""

    __slots__ = ("B", "u", "E")

    def __init__(self, B: Vec3, u: Vec3, E: Vec3):
        for name, v in (("B", B), ("u", u), ("E", E)):
            if not isinstance(v, Vec3):
                raise TypeError(f"Triple field {name} must be a Vec3, got {type(v).__name__}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "E", E)

    def __setattr__(self, name, value):
        raise AttributeError("Triple is immutable")

    def __repr__(self):
        return f"Triple(B={self.B!r}, u={self.u!r}, E={self.E!r})"

    def __eq__(self, other):
        if not isinstance(other, Triple):
            return NotImplemented
        return self.B == other.B and self.u == other.u and self.E == other.E

    def __add__(self, other: "Triple") -> "Triple":
        return _triple(self.B + other.B, self.u + other.u, self.E + other.E)

    def __sub__(self, other: "Triple") -> "Triple":
        return _triple(self.B - other.B, self.u - other.u, self.E - other.E)

    def __mul__(self, a: float) -> "Triple":
        return _triple(self.B * a, self.u * a, self.E * a)

    __rmul__ = __mul__

    def norm(self) -> float:
        """Euclidean norm of the full 9-component state."""
        return math.sqrt(self.B.norm2() + self.u.norm2() + self.E.norm2())

    def to_json_dict(self) -> dict:
        return {"B": self.B.as_list(), "u": self.u.as_list(), "E": self.E.as_list()}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "Triple":
        try:
            return cls(Vec3(*d["B"]), Vec3(*d["u"]), Vec3(*d["E"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed triple JSON: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "Triple":
        return cls.from_json_dict(json.loads(text))


def _triple(B: Vec3, u: Vec3, E: Vec3) -> Triple:
    """Unchecked Triple for arithmetic on already-validated values."""
    z = _obj_new(Triple)
    _obj_set(z, "B", B)
    _obj_set(z, "u", u)
    _obj_set(z, "E", E)
    return z


class HullParams:
    """Amplitude radii: |B| = r on the constraint set, |u| = s."""

    __slots__ = ("r", "s")

    def __init__(self, r: float, s: float):
        r = float(r)
        s = float(s)
        if not (math.isfinite(r) and r > 0.0):
            raise ValueError(f"magnetic radius r must be a positive finite real, got {r}")
        if not (math.isfinite(s) and s > 0.0):
            raise ValueError(f"velocity radius s must be a positive finite real, got {s}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)

    def __setattr__(self, name, value):
        raise AttributeError("HullParams is immutable")

    def __repr__(self):
        return f"HullParams(r={self.r!r}, s={self.s!r})"

    def __eq__(self, other):
        if not isinstance(other, HullParams):
            return NotImplemented
        return self.r == other.r and self.s == other.s

    def to_json_dict(self) -> dict:
        return {"r": self.r, "s": self.s}

    @classmethod
    def from_json_dict(cls, d: dict) -> "HullParams":
        try:
            return cls(d["r"], d["s"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed params JSON: {exc}") from exc


class Tolerances:
    """Numerical slacks used by the predicates and the decomposition solver.

    eps_mem governs membership comparisons, eps_root is the bisection bracket
    width for the decomposition angle equation, eps_residual is the slack for
    plane-wave condition and PDE residual checks.
    """

    __slots__ = ("eps_mem", "eps_root", "eps_residual")

    def __init__(self, eps_mem: float = 1e-9, eps_root: float = 1e-12,
                 eps_residual: float = 1e-10):
        eps_mem = float(eps_mem)
        eps_root = float(eps_root)
        eps_residual = float(eps_residual)
        for name, v in (("eps_mem", eps_mem), ("eps_root", eps_root),
                        ("eps_residual", eps_residual)):
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be a positive finite real, got {v}")
        if not eps_root < eps_mem:
            raise ValueError(f"eps_root ({eps_root}) must be smaller than eps_mem ({eps_mem})")
        object.__setattr__(self, "eps_mem", eps_mem)
        object.__setattr__(self, "eps_root", eps_root)
        object.__setattr__(self, "eps_residual", eps_residual)

    def __setattr__(self, name, value):
        raise AttributeError("Tolerances is immutable")

    def __repr__(self):
        return (f"Tolerances(eps_mem={self.eps_mem!r}, eps_root={self.eps_root!r}, "
                f"eps_residual={self.eps_residual!r})")


DEFAULT_TOLERANCES = Tolerances()


class ConeKind(enum.Enum):
    """Which system variant the oscillation-direction cone belongs to.

    The first three variants share the cone {B . E = 0}; the stationary
    incompressible one shrinks it to {B . E = 0, u . E = 0}.
    """

    NONSTATIONARY = "nonstationary"
    NONSTATIONARY_INCOMPRESSIBLE = "nonstationary-incompressible"
    STATIONARY = "stationary"
    STATIONARY_INCOMPRESSIBLE = "stationary-incompressible"

    @property
    def label(self) -> str:
        return self.value

    @property
    def restricts_u(self) -> bool:
        """True when the cone carries the extra u . E = 0 condition."""
        return self is ConeKind.STATIONARY_INCOMPRESSIBLE

    @property
    def incompressible(self) -> bool:
        return self in (ConeKind.NONSTATIONARY_INCOMPRESSIBLE,
                        ConeKind.STATIONARY_INCOMPRESSIBLE)

    @property
    def stationary(self) -> bool:
        return self in (ConeKind.STATIONARY, ConeKind.STATIONARY_INCOMPRESSIBLE)

    @classmethod
    def from_label(cls, label: str) -> "ConeKind":
        for kind in cls:
            if kind.value == label:
                return kind
        raise ValueError(f"unknown cone kind {label!r}; expected one of "
                         + ", ".join(k.value for k in cls))


def _membership_eps(p: HullParams, tol: Tolerances) -> float:
    # Hull inequalities are quadratic in the amplitudes, so the slack is
    # scaled by max(r, s, 1)^2.
    scale = max(p.r, p.s, 1.0)
    return tol.eps_mem * scale * scale


def eval_g1(z: Triple) -> float:
    """B . E, affine along every direction of the shared cone."""
    return z.B.dot(z.E)


def eval_g2(z: Triple, p: HullParams) -> float:
    """Convex amplitude-excess function, evaluated in closed form.

    The inner maximum of a*(|B|^2-r^2) + (1-a)*(|u|^2-s^2)
    + 2 sqrt(a(1-a)) c over a in [0,1] equals, with a = |B|^2 - r^2,
    b = |u|^2 - s^2 and c = |B x u - E|,

        (a + b) / 2 + sqrt(((a - b) / 2)^2 + c^2),

    via the substitution a = (1+t)/2 which turns the objective into
    (a+b)/2 + t (a-b)/2 + sqrt(1-t^2) c on t in [-1, 1].
    """
    a = z.B.norm2() - p.r * p.r
    b = z.u.norm2() - p.s * p.s
    c = (z.B.cross(z.u) - z.E).norm()
    half_diff = 0.5 * (a - b)
    return 0.5 * (a + b) + math.hypot(half_diff, c)


def eval_g3(z: Triple) -> float:
    """u . E, affine along stationary-incompressible cone directions."""
    return z.u.dot(z.E)


def in_constraint_set(z: Triple, p: HullParams, tol: Tolerances | None = None) -> bool:
    """True when E = B x u with |B| = r and |u| = s, up to relative slack."""
    tol = tol or DEFAULT_TOLERANCES
    eps = tol.eps_mem
    if abs(z.B.norm() - p.r) > eps * p.r:
        return False
    if abs(z.u.norm() - p.s) > eps * p.s:
        return False
    return (z.E - z.B.cross(z.u)).norm() <= eps * p.r * p.s


def in_wave_cone(z: Triple, kind: ConeKind, tol: Tolerances | None = None) -> bool:
    """True when z is an admissible one-dimensional oscillation direction."""
    tol = tol or DEFAULT_TOLERANCES
    eps = tol.eps_mem
    if abs(z.B.dot(z.E)) > eps * (1.0 + z.B.norm() * z.E.norm()):
        return False
    if kind.restricts_u:
        return abs(z.u.dot(z.E)) <= eps * (1.0 + z.u.norm() * z.E.norm())
    return True


def in_hull(z: Triple, p: HullParams, kind: ConeKind = ConeKind.NONSTATIONARY,
            tol: Tolerances | None = None) -> bool:
    """Closed-form membership in the relaxed set.

    Checks |B| <= r, |u| <= s, B . E = 0 and the excess bound
    |E - B x u|^2 <= (r^2 - |B|^2)(s^2 - |u|^2), each with slack scaled by
    max(r, s, 1)^2; the stationary incompressible kind adds u . E = 0.
    """
    tol = tol or DEFAULT_TOLERANCES
    eps = _membership_eps(p, tol)
    # Unrolled component arithmetic: this predicate sits inside the
    # million-point verification campaigns.
    B, u, E = z.B, z.u, z.E
    bx, by, bz = B.x, B.y, B.z
    ux, uy, uz = u.x, u.y, u.z
    ex, ey, ez = E.x, E.y, E.z
    nb2 = bx * bx + by * by + bz * bz
    nu2 = ux * ux + uy * uy + uz * uz
    nb = math.sqrt(nb2)
    nu = math.sqrt(nu2)
    if nb > p.r + eps or nu > p.s + eps:
        return False
    ne = math.sqrt(ex * ex + ey * ey + ez * ez)
    if abs(bx * ex + by * ey + bz * ez) > eps * (1.0 + nb * ne):
        return False
    if kind.restricts_u and abs(ux * ex + uy * ey + uz * ez) > eps * (1.0 + nu * ne):
        return False
    wx = ex - (by * uz - bz * uy)
    wy = ey - (bz * ux - bx * uz)
    wz = ez - (bx * uy - by * ux)
    excess2 = wx * wx + wy * wy + wz * wz
    cap = max(0.0, p.r * p.r - nb2) * max(0.0, p.s * p.s - nu2)
    return excess2 <= cap + eps


def hull_excess_bound(B: Vec3, u: Vec3, p: HullParams) -> float:
    """sqrt((r^2 - |B|^2)(s^2 - |u|^2)), the sharp bound on |E - B x u|."""
    return math.sqrt(max(0.0, p.r * p.r - B.norm2()) * max(0.0, p.s * p.s - u.norm2()))


@dataclass(frozen=True)
class SeparationWitness:
    """Which separating function certifies non-membership, if any.

    function is "g1", "g2" or "g3"; None means no separation (the point is
    in the relaxed set).  value is the attained function value.
    """

    function: str | None
    value: float

    @property
    def separates(self) -> bool:
        return self.function is not None

    def to_json_dict(self) -> dict:
        return {"function": self.function, "value": self.value}


def separation_witness(z: Triple, p: HullParams, kind: ConeKind = ConeKind.NONSTATIONARY,
                       tol: Tolerances | None = None) -> SeparationWitness:
    """Certify membership or return the separating function and its value.

    The relaxed set is exactly {g1 = 0} ∩ {g2 <= 0} (∩ {g3 = 0} for the
    stationary incompressible cone), so one of the three functions always
    witnesses a point outside it.
    """
    tol = tol or DEFAULT_TOLERANCES
    eps = _membership_eps(p, tol)
    g1 = eval_g1(z)
    if abs(g1) > eps * (1.0 + z.B.norm() * z.E.norm()):
        return SeparationWitness("g1", g1)
    if kind.restricts_u:
        g3 = eval_g3(z)
        if abs(g3) > eps * (1.0 + z.u.norm() * z.E.norm()):
            return SeparationWitness("g3", g3)
    g2 = eval_g2(z, p)
    if g2 > eps:
        return SeparationWitness("g2", g2)
    return SeparationWitness(None, 0.0)
