"""Points, planes, reflections and rigid vehicle poses.

Points are plain tuples of scalars.  A point whose coordinates are all
``int``/``Fraction`` is *exact* and every operation below keeps it exact;
a single float coordinate switches the computation to float64.

Walls are identified with the planes that contain them.  In two dimensions a
``Plane`` is a line (normal and anchor are 2-vectors).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .config import DEFAULT_TOLERANCES
from .exceptions import DegenerateMirror, InvalidConfiguration, InvalidPlane

Scalar = Union[int, Fraction, float]
Point = Tuple[Scalar, ...]


def is_exact_scalar(x) -> bool:
    return isinstance(x, Rational)


def is_exact(*points: Sequence[Scalar]) -> bool:
    return all(is_exact_scalar(x) for p in points for x in p)


def as_exact(p: Sequence[Scalar]) -> Point:
    """Convert to Fractions.  Floats convert by their exact binary value."""
    return tuple(Fraction(x) for x in p)


def as_float(p: Sequence[Scalar]) -> Point:
    return tuple(float(x) for x in p)


def add(p, q) -> Point:
    return tuple(a + b for a, b in zip(p, q))


def sub(p, q) -> Point:
    return tuple(a - b for a, b in zip(p, q))


def scale(k, p) -> Point:
    return tuple(k * a for a in p)


def dot(p, q):
    return sum(a * b for a, b in zip(p, q))


def norm2(p):
    return dot(p, p)


def dist2(p, q):
    return norm2(sub(p, q))


def midpoint(p, q) -> Point:
    if is_exact(p, q):
        return tuple(Fraction(a + b, 2) for a, b in zip(p, q))
    return tuple((a + b) / 2 for a, b in zip(p, q))


def cross(p, q) -> Point:
    return (p[1] * q[2] - p[2] * q[1],
            p[2] * q[0] - p[0] * q[2],
            p[0] * q[1] - p[1] * q[0])


def _div(a, b):
    if is_exact_scalar(a) and is_exact_scalar(b):
        return Fraction(a) / b
    return a / b


def _simplify(p: Sequence[Scalar]) -> Point:
    # ints stay ints, integral Fractions become ints so tuples print cleanly
    out = []
    for x in p:
        if isinstance(x, Fraction) and x.denominator == 1:
            out.append(int(x))
        else:
            out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class Plane:
    """An oriented hyperplane stored in canonical form.

    Exact planes have their normal scaled so that its first nonzero component
    equals 1.  Float planes have a unit normal whose first significant
    component is positive.  The anchor is always the foot of the perpendicular
    from the origin, so equal planes compare equal.
    """

    normal: Point
    anchor: Point

    def __post_init__(self):
        n, a = tuple(self.normal), tuple(self.anchor)
        if len(n) != len(a) or len(n) not in (2, 3):
            raise InvalidPlane(f"normal/anchor dimension mismatch: {n}, {a}")
        exact = is_exact(n, a)
        if not exact:
            n, a = as_float(n), as_float(a)
        if all(x == 0 for x in n):
            raise InvalidPlane("plane normal is zero")
        if exact:
            lead = next(x for x in n if x != 0)
            n = tuple(Fraction(x) / lead for x in n)
            foot = scale(dot(n, a) / norm2(n), n)
        else:
            length = math.sqrt(norm2(n))
            if not math.isfinite(length):
                raise InvalidPlane(f"non-finite plane normal {n}")
            n = tuple(x / length for x in n)
            lead = next(x for x in n if abs(x) > 1e-9)
            if lead < 0:
                n = tuple(-x for x in n)
            foot = scale(dot(n, a), n)
        object.__setattr__(self, "normal", _simplify(n))
        object.__setattr__(self, "anchor", _simplify(foot))

    @property
    def dimension(self) -> int:
        return len(self.normal)

    @property
    def exact(self) -> bool:
        return is_exact(self.normal, self.anchor)

    @property
    def offset(self):
        """Value of <n, x> on the plane."""
        return dot(self.normal, self.anchor)

    def side(self, p):
        """<p - anchor, n>; its sign tells the side, not a metric distance for exact planes."""
        return dot(sub(p, self.anchor), self.normal)

    def signed_distance(self, p) -> float:
        return float(self.side(p)) / math.sqrt(float(norm2(self.normal)))

    def to_float(self) -> "Plane":
        return Plane(as_float(self.normal), as_float(self.anchor))

    def isclose(self, other: "Plane", tol: float = DEFAULT_TOLERANCES.match_plane) -> bool:
        if self.exact and other.exact:
            return self == other
        a, b = self.to_float(), other.to_float()
        return (max(abs(x - y) for x, y in zip(a.normal, b.normal)) <= tol
                and max(abs(x - y) for x, y in zip(a.anchor, b.anchor)) <= tol)

    def key(self) -> tuple:
        return tuple(float(x) for x in self.normal + self.anchor)


def reflect_point(plane: Plane, p: Sequence[Scalar]) -> Point:
    """Reflect ``p`` across ``plane``; square-root free so exact inputs stay exact."""
    if len(p) != plane.dimension:
        raise ValueError(f"point {p} does not match plane dimension {plane.dimension}")
    n = plane.normal
    k = 2 * _div(dot(sub(p, plane.anchor), n), norm2(n))
    return _simplify(sub(p, scale(k, n)))


def mirror_point(wall: Plane, speaker: Sequence[Scalar]) -> Point:
    """Position from which the wall's first-order echo appears to be emitted."""
    return reflect_point(wall, speaker)


def plane_from_mirror(speaker: Sequence[Scalar], s: Sequence[Scalar]) -> Plane:
    """The wall whose mirror point of ``speaker`` is ``s`` (perpendicular bisector)."""
    normal = sub(s, speaker)
    if all(x == 0 for x in normal):
        raise DegenerateMirror("mirror point coincides with the loudspeaker")
    return Plane(normal, midpoint(speaker, s))


@dataclass(frozen=True)
class Pose:
    """A planar rigid motion acting on 3D points with z fixed (or shifted by ``tz``
    in hover mode), or on 2D points directly.

    The rotation block is ``[[cos, -sin], [sin, cos]]``.
    """

    cos: Scalar = 1
    sin: Scalar = 0
    tx: Scalar = 0
    ty: Scalar = 0
    tz: Scalar = 0

    def __post_init__(self):
        err = self.cos * self.cos + self.sin * self.sin - 1
        if self.exact:
            if err != 0:
                raise InvalidConfiguration(f"rotation ({self.cos}, {self.sin}) is not orthogonal")
        elif abs(err) > DEFAULT_TOLERANCES.rotation:
            raise InvalidConfiguration(f"rotation ({self.cos}, {self.sin}) is not orthogonal")

    @classmethod
    def from_angle(cls, theta: float, tx=0.0, ty=0.0, tz=0.0) -> "Pose":
        return cls(math.cos(theta), math.sin(theta), float(tx), float(ty), float(tz))

    @classmethod
    def from_half_tangent(cls, t, tx=0, ty=0, tz=0) -> "Pose":
        """Exact rotation from t = tan(theta/2) via the rational circle parametrization."""
        t = Fraction(t)
        d = 1 + t * t
        return cls(_frac(1 - t * t) / d, 2 * t / d, _frac(tx), _frac(ty), _frac(tz))

    @classmethod
    def exact_near(cls, theta: float, tx=0, ty=0, tz=0, max_denominator: int = 10**6) -> "Pose":
        """Exact pose whose heading is within ~1/max_denominator of ``theta``."""
        half = theta / 2
        if abs(math.cos(half)) < 1e-12:
            return cls(-1, 0, _frac(tx), _frac(ty), _frac(tz))
        t = Fraction(math.tan(half)).limit_denominator(max_denominator)
        return cls.from_half_tangent(t, tx, ty, tz)

    @property
    def exact(self) -> bool:
        return is_exact((self.cos, self.sin, self.tx, self.ty, self.tz))

    @property
    def theta(self) -> float:
        return math.atan2(float(self.sin), float(self.cos))

    @property
    def hover(self) -> bool:
        return self.tz != 0

    def apply(self, p: Sequence[Scalar]) -> Point:
        c, s = self.cos, self.sin
        x = c * p[0] - s * p[1] + self.tx
        y = s * p[0] + c * p[1] + self.ty
        if len(p) == 2:
            if self.tz != 0:
                raise InvalidConfiguration("vertical offset on a 2D pose")
            return _simplify((x, y))
        return _simplify((x, y, p[2] + self.tz))

    def compose(self, other: "Pose") -> "Pose":
        """``self ∘ other``: apply ``other`` first."""
        c = self.cos * other.cos - self.sin * other.sin
        s = self.sin * other.cos + self.cos * other.sin
        tx = self.cos * other.tx - self.sin * other.ty + self.tx
        ty = self.sin * other.tx + self.cos * other.ty + self.ty
        return Pose(c, s, tx, ty, self.tz + other.tz)

    def inverse(self) -> "Pose":
        c, s = self.cos, -self.sin
        return Pose(c, s, -(c * self.tx - s * self.ty), -(s * self.tx + c * self.ty), -self.tz)

    def to_float(self) -> "Pose":
        return Pose(*(float(v) for v in (self.cos, self.sin, self.tx, self.ty, self.tz)))

    def as_tuple(self) -> tuple:
        return (self.cos, self.sin, self.tx, self.ty, self.tz)


def _frac(x):
    return Fraction(x) if is_exact_scalar(x) else Fraction(str(x))


def apply_pose(pose: Pose, p: Sequence[Scalar]) -> Point:
    return pose.apply(p)


def compose(first: Pose, second: Pose) -> Pose:
    """Pose equal to applying ``second`` and then ``first``."""
    return first.compose(second)


def affine_rank(points: Sequence[Sequence[Scalar]], tol: float = DEFAULT_TOLERANCES.coplanar_rel) -> int:
    """Dimension of the affine hull.  Exact for rational input."""
    if not points:
        return -1
    base = points[0]
    rows = [sub(p, base) for p in points[1:]]
    if not rows:
        return 0
    if is_exact(*points):
        return _exact_rank([[Fraction(x) for x in r] for r in rows])
    sv = np.linalg.svd(np.asarray(rows, dtype=float), compute_uv=False)
    if sv[0] == 0:
        return 0
    rank = 0
    for k in range(1, len(sv) + 1):
        # relative k-volume of the spanned parallelotope
        if np.prod(sv[:k]) / sv[0] ** k > tol:
            rank = k
    return rank


def _exact_rank(rows) -> int:
    rows = [r[:] for r in rows]
    rank, ncols = 0, len(rows[0])
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(rank + 1, len(rows)):
            f = rows[i][col] / rows[rank][col]
            if f:
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def is_coplanar(points: Sequence[Sequence[Scalar]], tol: float = DEFAULT_TOLERANCES.coplanar_rel) -> bool:
    """True iff the points' affine rank is below the ambient dimension."""
    if not points:
        raise ValueError("need at least one point")
    return affine_rank(points, tol) < len(points[0])


is_collinear = is_coplanar


@dataclass(frozen=True)
class VehicleConfig:
    """Microphone offsets (and optionally a speaker mount) in the vehicle frame."""

    mic_offsets: Tuple[Point, ...]
    speaker_offset: Optional[Point] = None

    def __post_init__(self):
        mics = tuple(tuple(m) for m in self.mic_offsets)
        object.__setattr__(self, "mic_offsets", mics)
        if self.speaker_offset is not None:
            object.__setattr__(self, "speaker_offset", tuple(self.speaker_offset))
        if not mics:
            raise InvalidConfiguration("no microphones")
        dim = len(mics[0])
        if dim not in (2, 3) or any(len(m) != dim for m in mics):
            raise InvalidConfiguration("microphone offsets must all be 2D or all 3D")
        if len(mics) != dim + 1:
            raise InvalidConfiguration(f"{dim}D vehicles carry exactly {dim + 1} microphones")
        if self.speaker_offset is not None and len(self.speaker_offset) != dim:
            raise InvalidConfiguration("speaker offset dimension mismatch")
        if is_coplanar(mics):
            what = "collinear" if dim == 2 else "coplanar"
            raise InvalidConfiguration(f"microphones are {what}")

    @property
    def dimension(self) -> int:
        return len(self.mic_offsets[0])

    @property
    def exact(self) -> bool:
        pts = self.mic_offsets + ((self.speaker_offset,) if self.speaker_offset else ())
        return is_exact(*pts)

    def mics(self, pose: Pose) -> Tuple[Point, ...]:
        return tuple(pose.apply(m) for m in self.mic_offsets)

    def speaker(self, pose: Pose) -> Point:
        if self.speaker_offset is None:
            raise InvalidConfiguration("vehicle has no mounted speaker")
        return pose.apply(self.speaker_offset)

    def to_float(self) -> "VehicleConfig":
        return VehicleConfig(tuple(as_float(m) for m in self.mic_offsets),
                             None if self.speaker_offset is None else as_float(self.speaker_offset))
