"""Wall detection from first-order echoes and ghost classification.

Every tuple of the Cartesian product of per-microphone squared distances is
tested with the Cayley-Menger determinant; vanishing tuples are trilaterated
to a mirror point, which determines the wall as a perpendicular bisector.
Detection never looks at ground truth; ``evaluate`` does.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cayley_menger import CMQuadric, cm_residuals, mic_gram
from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import DegenerateMirror, IllConditioned
from .geometry import (Plane, Point, Pose, VehicleConfig, as_float, dist2, is_coplanar,
                       is_exact, norm2, plane_from_mirror, sub, _simplify)
from .simulator import Scene, audible

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectedWall:
    mirror: Point
    plane: Plane
    residual: float
    tuple: tuple
    support: int = 1


@dataclass
class DetectionResult:
    walls: List[DetectedWall]
    n_tuples: int = 0
    n_passed: int = 0
    n_discarded: int = 0


@dataclass
class EvaluationReport:
    true_walls_found: List[Plane] = field(default_factory=list)
    ghosts: List[DetectedWall] = field(default_factory=list)
    missed: List[Plane] = field(default_factory=list)

    @property
    def is_bad_position(self) -> bool:
        return bool(self.ghosts)


def trilaterate(distances2: Sequence, mics: Sequence[Sequence]) -> Tuple[Point, float]:
    """Point ``s`` with ``|s - m_j|^2 = d_j``.

    Subtracting the first equation from the others leaves the linear system
    ``<s, m_j - m_1> = (|m_j|^2 - |m_1|^2 - d_j + d_1) / 2``.  The first
    equation is then only used for the returned RMS mismatch (metres) between
    the given and the recomputed distances.
    """
    dim = len(mics[0])
    if len(mics) != dim + 1 or len(distances2) != dim + 1:
        raise ValueError(f"{dim}D trilateration needs {dim + 1} microphones and distances")
    m1, d1 = mics[0], distances2[0]
    A = [sub(m, m1) for m in mics[1:]]
    b = [(norm2(m) - norm2(m1) - d + d1) for m, d in zip(mics[1:], distances2[1:])]
    if is_exact(*mics, distances2):
        s = _solve_exact(A, [Fraction(x, 2) for x in b])
        s = _simplify(s)
        mism = [dist2(s, m) - d for m, d in zip(mics, distances2)]
        if all(x == 0 for x in mism):
            return s, 0.0
    else:
        Af = np.asarray(A, dtype=float)
        if np.linalg.cond(Af) > 1e12:
            raise IllConditioned("microphones are affinely dependent")
        s = tuple(float(x) for x in np.linalg.solve(Af, np.asarray(b, dtype=float) / 2))
    errs = [math.sqrt(max(float(dist2(s, m)), 0.0)) - math.sqrt(max(float(d), 0.0))
            for m, d in zip(mics, distances2)]
    return s, math.sqrt(sum(e * e for e in errs) / len(errs))


def _solve_exact(A, b):
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(v)] for row, v in zip(A, b)]
    for col in range(n):
        p = next((i for i in range(col, n) if M[i][col] != 0), None)
        if p is None:
            raise IllConditioned("microphones are affinely dependent")
        M[col], M[p] = M[p], M[col]
        piv = M[col][col]
        M[col] = [x / piv for x in M[col]]
        for i in range(n):
            if i != col and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * c for a, c in zip(M[i], M[col])]
    return tuple(M[i][n] for i in range(n))


def _triangle_prune(value_lists, D):
    """Partial-tuple filter: |sqrt(d_i) - sqrt(d_j)| <= |m_i - m_j| must hold for
    every chosen pair.  Never rejects a consistent tuple."""

    def pair_ok(di, dj, Dij):
        lhs = di + dj - Dij
        return lhs <= 0 or lhs * lhs <= 4 * di * dj

    def prune(k, chosen):
        dk = value_lists[k][chosen[k]]
        return all(pair_ok(value_lists[i][chosen[i]], dk, D[i][k]) for i in range(k))

    return prune


def run_detection(D_sets: Sequence, mics: Sequence[Sequence], speaker: Sequence,
                  mode: Optional[str] = None, threshold: Optional[float] = None,
                  prune: bool = False, tolerances: Tolerances = DEFAULT_TOLERANCES) -> DetectionResult:
    """Detect walls with full diagnostics.  ``mode`` is ``"exact"``, ``"float"``
    or None (exact iff every input is rational)."""
    mics = [tuple(m) for m in mics]
    dim = len(mics[0])
    if len(mics) != dim + 1:
        raise ValueError(f"{dim}D detection needs {dim + 1} microphones")
    if len(D_sets) != len(mics):
        raise ValueError("one distance set per microphone required")
    value_lists = [sorted(ds) for ds in D_sets]
    if mode is None:
        exact = is_exact(*mics, speaker, *value_lists)
    else:
        exact = mode == "exact"
        if exact and not is_exact(*mics, speaker, *value_lists):
            raise ValueError("exact mode requires rational inputs")
    if not exact:
        mics = [as_float(m) for m in mics]
        speaker = as_float(speaker)
        value_lists = [[float(v) for v in vs] for vs in value_lists]
    if is_coplanar(mics, tolerances.coplanar_rel):
        raise IllConditioned("microphones are coplanar" if dim == 3 else "microphones are collinear")
    D = mic_gram(mics)
    result = DetectionResult([], n_tuples=math.prod(len(v) for v in value_lists))
    if result.n_tuples == 0:
        return result
    pruner = _triangle_prune(value_lists, D) if prune else None

    if exact:
        quad = CMQuadric(D)
        passing = list(quad.vanishing_tuples(value_lists, prune=pruner))
    else:
        thr = tolerances.cm_residual if threshold is None else threshold
        idx = list(itertools.product(*(range(len(v)) for v in value_lists)))
        if pruner is not None:
            idx = [t for t in idx if all(pruner(k, t) for k in range(1, len(t)))]
        if idx:
            U = np.array([[value_lists[k][i] for k, i in enumerate(t)] for t in idx])
            res = cm_residuals(U, D)
            passing = [t for t, r in zip(idx, res) if r < thr]
        else:
            passing = []
    result.n_passed = len(passing)

    scene_scale = max(math.sqrt(float(max(vs))) for vs in value_lists if vs)
    candidates = []
    for t in passing:
        d = tuple(value_lists[k][i] for k, i in enumerate(t))
        s, resid = trilaterate(d, mics)
        if not exact and resid > tolerances.trilateration_rel * max(scene_scale, 1.0):
            log.debug("dropping tuple %s: trilateration residual %.3g", d, resid)
            result.n_discarded += 1
            continue
        try:
            plane = plane_from_mirror(speaker, s)
        except DegenerateMirror:
            result.n_discarded += 1
            continue
        candidates.append(DetectedWall(s, plane, resid, d))
    result.walls = _deduplicate(candidates, exact, tolerances.dedupe_mirror)
    return result


def detect(D_sets: Sequence, mics: Sequence[Sequence], speaker: Sequence, mode: Optional[str] = None,
           threshold: Optional[float] = None, prune: bool = False,
           tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[DetectedWall]:
    return run_detection(D_sets, mics, speaker, mode, threshold, prune, tolerances).walls


def _deduplicate(candidates: List[DetectedWall], exact: bool, tol: float) -> List[DetectedWall]:
    clusters: List[List[DetectedWall]] = []
    if exact:
        by_plane = {}
        for c in candidates:
            by_plane.setdefault(c.plane, []).append(c)
        clusters = list(by_plane.values())
    else:
        for c in candidates:
            for cl in clusters:
                if math.sqrt(dist2(cl[0].mirror, c.mirror)) < tol:
                    cl.append(c)
                    break
            else:
                clusters.append([c])
    out = []
    for cl in clusters:
        best = min(cl, key=lambda w: w.residual)
        out.append(DetectedWall(best.mirror, best.plane, best.residual, best.tuple, support=len(cl)))
    out.sort(key=lambda w: w.plane.key())
    return out


def evaluate(detected: Sequence[DetectedWall], scene: Scene, config: VehicleConfig, pose: Pose,
             audibility: bool = False, tolerances: Tolerances = DEFAULT_TOLERANCES) -> EvaluationReport:
    """Classify detections against the true walls.

    A detection matching no true wall is a ghost.  A true wall heard by every
    microphone but absent from ``detected`` is reported as missed.
    """
    truth = scene.planes
    report = EvaluationReport()
    matched = set()
    for w in detected:
        hit = next((i for i, p in enumerate(truth) if w.plane.isclose(p, tolerances.match_plane)), None)
        if hit is None:
            report.ghosts.append(w)
        else:
            matched.add(hit)
    speaker = scene.speaker_position(config, pose)
    mics = config.mics(pose)
    for i, wall in enumerate(scene.walls):
        heard = not audibility or all(audible(wall, speaker, m) for m in mics)
        if i in matched:
            report.true_walls_found.append(wall.plane)
        elif heard and not any(truth[j] == truth[i] for j in matched):
            report.missed.append(wall.plane)
    return report
