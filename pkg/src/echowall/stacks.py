"""Unlucky stacks of mirror points.

Four mirror points ``s_1..s_4`` on one vertical line with
``z(s_j) - z(s_i) == 2 * (z(m_j) - z(m_i))`` fool every echo matcher: the
reflection of each ``s_i`` in the horizontal plane through ``m_i`` is the same
point ``s_ghost``, so microphone ``i`` hears wall ``i`` exactly as if the
sound came from ``s_ghost``.  Because ground motions (and hovering) keep the
microphones' z-gaps, such a ghost survives a whole region of vehicle poses.

The vertical axis is the last coordinate, so the same tests run on 2D
cross-sections (x, z).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .detector import DetectedWall, EvaluationReport, detect, evaluate
from .exceptions import InvalidConfiguration
from .geometry import (Plane, Point, Pose, VehicleConfig, _exact_rank, add, cross, dot,
                       is_exact, norm2, plane_from_mirror, scale, sub, _simplify)
from .simulator import Scene, Wall, simulate_echoes, specular_point, squared_distances

STACK_PARAMETERS = ("axis_x", "axis_y", "z1")


@dataclass(frozen=True)
class StackCertificate:
    wall_indices: Tuple[int, ...]   # wall heard by microphone i
    axis: Point                      # horizontal coordinates of the common vertical line
    ghost: Point
    deltas: Tuple                    # z(s_i) - z(s_1)


def find_stack(mirrors: Sequence[Sequence], mics: Sequence[Sequence],
               tol: float = DEFAULT_TOLERANCES.stack) -> Optional[StackCertificate]:
    """Search every assignment of mirror points to microphones, repetitions
    allowed, for the stack conditions.  Exact for rational input."""
    exact = is_exact(*mirrors, *mics)
    mz = [m[-1] for m in mics]

    def same(a, b):
        return a == b if exact else abs(a - b) <= tol

    # group mirror points by their horizontal position
    groups: List[Tuple[tuple, List[int]]] = []
    for w, s in enumerate(mirrors):
        h = tuple(s[:-1])
        for key, members in groups:
            if all(same(a, b) for a, b in zip(key, h)):
                members.append(w)
                break
        else:
            groups.append((h, [w]))

    for axis, members in groups:
        for w1 in members:
            c = mirrors[w1][-1] - 2 * mz[0]
            chosen = [w1]
            for j in range(1, len(mics)):
                target = c + 2 * mz[j]
                w = next((w for w in members if same(mirrors[w][-1], target)), None)
                if w is None:
                    break
                chosen.append(w)
            else:
                z1 = mirrors[w1][-1]
                return StackCertificate(
                    tuple(chosen), _simplify(axis), _simplify(tuple(axis) + (2 * mz[0] - z1,)),
                    tuple(mirrors[w][-1] - z1 for w in chosen))
    return None


def check_stack(scene: Scene, config: VehicleConfig, pose: Optional[Pose] = None,
                speaker: Optional[Sequence] = None,
                tol: float = DEFAULT_TOLERANCES.stack) -> Optional[StackCertificate]:
    if speaker is None:
        if scene.mounted:
            raise InvalidConfiguration("stacks are defined for a fixed loudspeaker")
        speaker = scene.speaker
    pose = pose or Pose()
    return find_stack(scene.mirror_points(speaker), config.mics(pose), tol)


def stack_mirrors(config: VehicleConfig, pose: Pose, axis: Sequence, z1) -> Tuple[Point, ...]:
    mics = config.mics(pose)
    return tuple(_simplify(tuple(axis) + (z1 + 2 * (m[-1] - mics[0][-1]),)) for m in mics)


def make_stack(config: VehicleConfig, pose: Pose, axis: Sequence, z1, speaker: Sequence
               ) -> Tuple[Scene, StackCertificate]:
    """Build walls whose mirror points form a stack above ``axis``.

    ``(axis_x, axis_y, z1)`` are the only free parameters.  Microphones that
    share a height share a mirror point, hence a wall.
    """
    if len(axis) != config.dimension - 1:
        raise ValueError("axis must give the horizontal coordinates")
    mirrors = stack_mirrors(config, pose, axis, z1)
    walls: List[Plane] = []
    indices = []
    for s in mirrors:
        plane = plane_from_mirror(speaker, s)
        if plane not in walls:
            walls.append(plane)
        indices.append(walls.index(plane))
    scene = Scene(config.dimension, tuple(Wall(p) for p in walls), tuple(speaker))
    mics = config.mics(pose)
    ghost = _simplify(tuple(axis) + (2 * mics[0][-1] - z1,))
    cert = StackCertificate(tuple(indices), _simplify(tuple(axis)), ghost,
                            tuple(s[-1] - mirrors[0][-1] for s in mirrors))
    return scene, cert


def in_plane_basis(plane: Plane) -> Tuple[Point, ...]:
    """Rational spanning vectors of the plane direction (not normalized)."""
    n = plane.normal
    if len(n) == 2:
        return ((-n[1], n[0]),)
    k = min(range(3), key=lambda i: abs(n[i]))
    e = tuple(int(i == k) for i in range(3))
    e1 = cross(n, e)
    return _simplify(e1), _simplify(cross(n, e1))


def finite_stack_scene(scene: Scene, cert: StackCertificate, config: VehicleConfig, pose: Pose,
                       margin=Fraction(1, 2)) -> Scene:
    """Bound each stacked wall to a rectangle around the specular points of
    the microphones assigned to it (plus ``margin`` along each edge direction).
    Walls outside the certificate stay infinite."""
    mics = config.mics(pose)
    walls = list(scene.walls)
    for w in sorted(set(cert.wall_indices)):
        plane = walls[w].plane
        basis = in_plane_basis(plane)
        pts = [specular_point(plane, scene.speaker, mics[i])
               for i, wi in enumerate(cert.wall_indices) if wi == w]
        if any(p is None for p in pts):
            raise InvalidConfiguration("a microphone sits behind its stacked wall")
        origin = plane.anchor
        coords = [[Fraction(dot(sub(p, origin), e)) / norm2(e) for e in basis] for p in pts]
        lo, hi = [], []
        for k, e in enumerate(basis):
            pad = Fraction(float(margin) / math.sqrt(float(norm2(e)))).limit_denominator(10**4)
            lo.append(min(c[k] for c in coords) - pad)
            hi.append(max(c[k] for c in coords) + pad)
        corner = origin
        for k, e in enumerate(basis):
            corner = add(corner, scale(lo[k], e))
        edges = tuple(_simplify(scale(hi[k] - lo[k], e)) for k, e in enumerate(basis))
        walls[w] = Wall(plane, _simplify(corner), edges)
    return Scene(scene.dimension, tuple(walls), scene.speaker, scene.c, scene.t0)


def pose_grid(center: Pose, half_t, half_x, half_y, steps: int = 11, half_z=None) -> List[Pose]:
    """Exact grid of poses around ``center``: the half-angle tangent, tx, ty
    (and tz when ``half_z`` is given) each take ``steps`` equally spaced values."""
    if not center.exact:
        raise ValueError("pose grids are exact; pass an exact center pose")
    if center.cos == -1:
        raise ValueError("center heading must not be a half turn")
    t_c = Fraction(center.sin) / (1 + center.cos)

    def axis(c, half):
        if steps == 1:
            return [c]
        return [c + Fraction(half) * Fraction(2 * i - (steps - 1), steps - 1) for i in range(steps)]

    zs = axis(Fraction(center.tz), half_z) if half_z is not None else [Fraction(center.tz)]
    return [Pose.from_half_tangent(t, x, y, z)
            for t in axis(t_c, half_t) for x in axis(Fraction(center.tx), half_x)
            for y in axis(Fraction(center.ty), half_y) for z in zs]


def sweep(scene: Scene, config: VehicleConfig, poses: Iterable[Pose], audibility: bool = False,
          tolerances: Tolerances = DEFAULT_TOLERANCES
          ) -> Iterator[Tuple[Pose, List[DetectedWall], EvaluationReport]]:
    """Simulate, detect and evaluate at each pose."""
    for pose in poses:
        rec = simulate_echoes(scene, config, pose, audibility=audibility, tolerances=tolerances)
        mics = config.mics(pose)
        speaker = scene.speaker_position(config, pose)
        found = detect(squared_distances(rec), mics, speaker, tolerances=tolerances)
        yield pose, found, evaluate(found, scene, config, pose, audibility=audibility, tolerances=tolerances)


def persistence_region(scene: Scene, config: VehicleConfig, poses: Sequence[Pose],
                       audibility: bool = False) -> float:
    """Fraction of ``poses`` at which a ghost wall is detected."""
    poses = list(poses)
    if not poses:
        raise ValueError("empty pose grid")
    bad = sum(report.is_bad_position for _, _, report in sweep(scene, config, poses, audibility))
    return bad / len(poses)


# microphone heights giving l distinct z values, non-coplanar in every case
_CODIM_CONFIGS = {
    2: ((0, 0, 0), (1, 0, 0), (0, 1, 1), (0, 0, 1)),
    3: ((0, 0, 0), (1, 0, 0), (0, 1, 1), (1, 1, 2)),
    4: ((0, 0, 0), (1, 0, 1), (0, 1, 2), (1, 2, 3)),
}


@dataclass
class CodimSummary:
    l: int
    samples: int
    stacks_found: int
    family_parameters: int
    family_rank: int
    ambient_dimension: int          # 3 coordinates per distinct stacked mirror point
    predicted_codimension: int
    family_certified: int
    perturbations_broken: int

    @property
    def measured_codimension(self) -> int:
        return self.ambient_dimension - self.family_rank


def _rand_frac(rng, lo, hi, den=97) -> Fraction:
    return Fraction(int(rng.integers(lo * den, hi * den + 1)), den)


def random_walls(rng, n_walls: int, dim: int = 3) -> Tuple[Wall, ...]:
    walls = []
    while len(walls) < n_walls:
        normal = tuple(int(x) for x in rng.integers(-6, 7, size=dim))
        if not any(normal):
            continue
        k = _rand_frac(rng, 2, 6) / Fraction(math.sqrt(norm2(normal))).limit_denominator(50)
        walls.append(Wall(Plane(normal, scale(k, normal))))
    return tuple(walls)


def codim_experiment(l: int, samples: int, seed: int = 0, n_walls: int = 4) -> CodimSummary:
    """Sample random wall arrangements (no stacks expected) and measure the
    dimension of the constructive stack family for ``l`` distinct mic heights."""
    if l not in _CODIM_CONFIGS:
        raise ValueError("l must be 2, 3 or 4")
    config = VehicleConfig(_CODIM_CONFIGS[l])
    rng = np.random.default_rng(seed)
    speaker = (Fraction(1, 3), Fraction(-1, 7), Fraction(1, 2))
    found = 0
    for _ in range(samples):
        scene = Scene(3, random_walls(rng, n_walls), speaker)
        if check_stack(scene, config) is not None:
            found += 1

    pose = Pose()
    # the family is affine in (axis_x, axis_y, z1); its rank is the rank of the
    # coordinate differences along each parameter direction
    base = (Fraction(2), Fraction(3), Fraction(5))

    def distinct_coords(params):
        pts = []
        for s in stack_mirrors(config, pose, params[:2], params[2]):
            if s not in pts:
                pts.append(s)
        return [x for s in pts for x in s]

    v0 = distinct_coords(base)
    diffs = []
    for k in range(len(STACK_PARAMETERS)):
        p = list(base)
        p[k] += 1
        diffs.append([a - b for a, b in zip(distinct_coords(p), v0)])
    rank = _exact_rank([[Fraction(x) for x in row] for row in diffs])

    certified = broken = 0
    for _ in range(min(samples, 200)):
        axis = (_rand_frac(rng, -5, 5), _rand_frac(rng, -5, 5))
        z1 = _rand_frac(rng, 6, 12)
        scene, cert = make_stack(config, pose, axis, z1, speaker)
        mirrors = scene.mirror_points(speaker)
        if find_stack(mirrors, config.mics(pose)) is not None:
            certified += 1
        # lift one stacked mirror point (every copy of it) off its height
        stacked = list(stack_mirrors(config, pose, axis, z1))
        target = stacked[int(rng.integers(0, len(stacked)))]
        moved = target[:-1] + (target[-1] + Fraction(1, 1000),)
        bumped = [moved if s == target else s for s in stacked]
        if find_stack(bumped, config.mics(pose)) is None:
            broken += 1
    return CodimSummary(l, samples, found, len(STACK_PARAMETERS), rank, 3 * l, 3 * (l - 1),
                        certified, broken)
