"""First-order echo simulation under ray acoustics.

An echo from wall ``W`` reaches microphone ``m`` after the same delay as a
direct path from the mirror point of the loudspeaker in ``W``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, List, Optional, Sequence, Tuple

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import DegenerateMirror, InvalidConfiguration
from .geometry import (Plane, Point, Pose, Scalar, VehicleConfig, add, as_float, dist2,
                       dot, is_exact, mirror_point, scale, sub)

DEFAULT_SPEED_OF_SOUND = 343


@dataclass(frozen=True)
class Wall:
    """A wall plane, optionally bounded by the parallelogram
    ``corner + a*e1 + b*e2`` with ``a, b`` in [0, 1] (a segment ``corner + a*e1`` in 2D).
    """

    plane: Plane
    corner: Optional[Point] = None
    edges: Tuple[Point, ...] = ()

    def __post_init__(self):
        if self.corner is None:
            return
        d = self.plane.dimension
        if len(self.edges) != d - 1:
            raise InvalidConfiguration(f"a {d}D wall extent needs {d - 1} edge vector(s)")
        for p in (self.corner,) + tuple(add(self.corner, e) for e in self.edges):
            if self.plane.exact and is_exact(p):
                off = self.plane.side(p) != 0
            else:
                off = not _near_zero(self.plane.signed_distance(p))
            if off:
                raise InvalidConfiguration("wall extent does not lie in the wall plane")

    @classmethod
    def from_extent(cls, corner, normal, edges) -> "Wall":
        return cls(Plane(normal, corner), tuple(corner), tuple(tuple(e) for e in edges))

    @property
    def finite(self) -> bool:
        return self.corner is not None

    def contains(self, p: Sequence[Scalar]) -> bool:
        """Is an in-plane point inside the extent (boundary included)?"""
        if not self.finite:
            return True
        rel = sub(p, self.corner)
        coeffs = _solve_in_basis(self.edges, rel)
        if is_exact(*self.edges, rel):
            return all(0 <= c <= 1 for c in coeffs)
        eps = 1e-12
        return all(-eps <= c <= 1 + eps for c in coeffs)

    def to_float(self) -> "Wall":
        if not self.finite:
            return Wall(self.plane.to_float())
        return Wall(self.plane.to_float(), as_float(self.corner), tuple(as_float(e) for e in self.edges))


def _near_zero(x: float) -> bool:
    return abs(x) <= 1e-9


def _solve_in_basis(edges, v):
    # least-squares coordinates of v in span(edges) via the Gram system
    G = [[dot(a, b) for b in edges] for a in edges]
    r = [dot(a, v) for a in edges]
    if len(edges) == 1:
        return [r[0] / G[0][0] if not is_exact(r, G[0]) else Fraction(r[0]) / G[0][0]]
    det = G[0][0] * G[1][1] - G[0][1] * G[1][0]
    if is_exact(r, *G):
        det = Fraction(det)
    return [(r[0] * G[1][1] - r[1] * G[0][1]) / det, (G[0][0] * r[1] - G[1][0] * r[0]) / det]


@dataclass(frozen=True)
class Scene:
    """Walls plus a loudspeaker that is either fixed in the room (``speaker``)
    or mounted on the vehicle (``speaker is None``; the offset lives in the
    ``VehicleConfig``)."""

    dimension: int
    walls: Tuple[Wall, ...]
    speaker: Optional[Point] = None
    c: Scalar = DEFAULT_SPEED_OF_SOUND
    t0: Scalar = 0

    def __post_init__(self):
        walls = tuple(w if isinstance(w, Wall) else Wall(w) for w in self.walls)
        object.__setattr__(self, "walls", walls)
        if self.dimension not in (2, 3):
            raise InvalidConfiguration("scene dimension must be 2 or 3")
        if not walls:
            raise InvalidConfiguration("scene has no walls")
        if any(w.plane.dimension != self.dimension for w in walls):
            raise InvalidConfiguration("wall dimension does not match scene")
        if self.speaker is not None:
            sp = tuple(self.speaker)
            object.__setattr__(self, "speaker", sp)
            if len(sp) != self.dimension:
                raise InvalidConfiguration("speaker dimension does not match scene")
            for w in walls:
                _check_off_wall(w.plane, sp)
        if self.c <= 0:
            raise InvalidConfiguration("speed of sound must be positive")

    @property
    def mounted(self) -> bool:
        return self.speaker is None

    @property
    def planes(self) -> Tuple[Plane, ...]:
        return tuple(w.plane for w in self.walls)

    @property
    def exact(self) -> bool:
        pts = [w.plane.normal for w in self.walls] + [w.plane.anchor for w in self.walls]
        pts += [w.corner for w in self.walls if w.finite]
        pts += [e for w in self.walls for e in w.edges]
        if self.speaker is not None:
            pts.append(self.speaker)
        return is_exact(*pts, (self.c, self.t0))

    def speaker_position(self, config: VehicleConfig, pose: Pose) -> Point:
        if self.mounted:
            return config.speaker(pose)
        return self.speaker

    def mirror_points(self, speaker: Sequence[Scalar]) -> Tuple[Point, ...]:
        for w in self.walls:
            _check_off_wall(w.plane, speaker)
        return tuple(mirror_point(w.plane, speaker) for w in self.walls)

    def to_float(self) -> "Scene":
        return Scene(self.dimension, tuple(w.to_float() for w in self.walls),
                     None if self.speaker is None else as_float(self.speaker),
                     float(self.c), float(self.t0))


def _check_off_wall(plane: Plane, p) -> None:
    if plane.exact and is_exact(p):
        on_wall = plane.side(p) == 0
    else:
        on_wall = _near_zero(plane.signed_distance(p))
    if on_wall:
        raise DegenerateMirror(f"loudspeaker {p} lies on wall plane {plane}")


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class ExactTime:
    """Arrival time ``t0 + sqrt(delay_sq)`` kept exact through its squared delay.

    Path lengths are square roots of rationals, so exact records store the
    squared delay instead of the (irrational) time itself.
    """

    t0: Fraction
    delay_sq: Fraction

    def __float__(self) -> float:
        return float(self.t0) + math.sqrt(self.delay_sq)

    def _key(self):
        return (self.t0, self.delay_sq)

    def __eq__(self, other):
        if isinstance(other, ExactTime):
            return self._key() == other._key()
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, ExactTime) and other.t0 == self.t0:
            return self.delay_sq < other.delay_sq
        return float(self) < float(other)

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"ExactTime(t0={self.t0}, delay_sq={self.delay_sq}, ~{float(self):.9g})"


@dataclass(frozen=True)
class EchoRecord:
    """Per-microphone sorted, deduplicated first-order arrival times."""

    times: Tuple[Tuple, ...]
    t0: Scalar = 0
    c: Scalar = DEFAULT_SPEED_OF_SOUND

    @property
    def exact(self) -> bool:
        return all(isinstance(t, ExactTime) for ts in self.times for t in ts)


def specular_point(plane: Plane, speaker, mic):
    """Where the echo path from ``speaker`` to ``mic`` touches the plane, or
    None when the microphone is not on the speaker's side of the plane."""
    s = mirror_point(plane, speaker)
    ds, dm = plane.side(s), plane.side(mic)
    if dm == 0:
        return tuple(mic)
    if (ds > 0) == (dm > 0):
        return None
    lam = ds / (ds - dm) if not is_exact((ds, dm)) else Fraction(ds) / (ds - dm)
    return add(s, scale(lam, sub(mic, s)))


def audible(wall: Wall, speaker, mic) -> bool:
    """Does ``mic`` receive the first-order echo from ``wall``?  Always True for
    an infinite wall."""
    if not wall.finite:
        return True
    p = specular_point(wall.plane, speaker, mic)
    return p is not None and wall.contains(p)


def simulate_echoes(scene: Scene, config: VehicleConfig, pose: Pose, audibility: bool = False,
                    tolerances: Tolerances = DEFAULT_TOLERANCES) -> EchoRecord:
    if config.dimension != scene.dimension:
        raise InvalidConfiguration("vehicle and scene dimensions differ")
    speaker = scene.speaker_position(config, pose)
    mics = config.mics(pose)
    mirrors = scene.mirror_points(speaker)
    exact = scene.exact and config.exact and pose.exact
    t0, c = scene.t0, scene.c
    if exact:
        t0, c = Fraction(t0), Fraction(c)
    times = []
    for m in mics:
        ts = []
        for wall, s in zip(scene.walls, mirrors):
            if audibility and not audible(wall, speaker, m):
                continue
            d2 = dist2(s, m)
            if exact:
                ts.append(ExactTime(t0, d2 / (c * c)))
            else:
                ts.append(float(t0) + math.sqrt(float(d2)) / float(c))
        times.append(_merge(ts, exact, tolerances.merge_time))
    return EchoRecord(tuple(times), t0, c)


def _merge(ts: List, exact: bool, gap: float) -> tuple:
    ts = sorted(ts)
    out = []
    for t in ts:
        if out and (t == out[-1] if exact else t - out[-1] <= gap):
            continue
        out.append(t)
    return tuple(out)


def squared_distances(rec: EchoRecord) -> List[FrozenSet]:
    """``{c^2 (t - t0)^2 : t in T_i}`` for each microphone."""
    out = []
    for ts in rec.times:
        ds = set()
        for t in ts:
            if isinstance(t, ExactTime):
                if t.t0 != rec.t0:
                    raise ValueError("arrival time uses a different emission time")
                ds.add(rec.c * rec.c * t.delay_sq)
            else:
                ds.add(rec.c ** 2 * (t - rec.t0) ** 2)
        out.append(frozenset(ds))
    return out
