"""Reproducible desk-scale experiments: Monte-Carlo over vehicle poses and the
three figure scenarios."""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cayley_menger import cm_determinant, mic_gram
from .config import DEFAULT_TOLERANCES, Tolerances
from .detector import DetectedWall, EvaluationReport, detect, evaluate
from .exceptions import InvalidConfiguration, ScenarioFailure, UnsupportedConfiguration
from .geometry import Plane, Pose, VehicleConfig, dist2, is_coplanar
from .simulator import Scene, Wall, simulate_echoes, squared_distances
from .stacks import StackCertificate, check_stack, finite_stack_scene, make_stack, random_walls

CSV_COLUMNS = ("pose_index", "theta", "tx", "ty", "tz", "n_detected", "n_ghosts", "bad")


def _rand_frac(rng, lo, hi, den: int) -> Fraction:
    return Fraction(int(rng.integers(round(lo * den), round(hi * den) + 1)), den)


def random_config(rng, dim: int = 3, mounted: bool = False) -> VehicleConfig:
    """Non-degenerate microphone offsets within half a metre of the vehicle origin."""
    while True:
        mics = tuple(tuple(_rand_frac(rng, -0.5, 0.5, 64) for _ in range(dim)) for _ in range(dim + 1))
        if is_coplanar(mics):
            continue
        if dim == 3 and len({m[2] for m in mics}) < 2:
            continue
        speaker = tuple(_rand_frac(rng, -0.25, 0.25, 64) for _ in range(dim)) if mounted else None
        return VehicleConfig(mics, speaker)


def random_scene(rng, dim: int = 3, n_walls: int = 4, mounted: bool = False,
                 config: Optional[VehicleConfig] = None) -> Scene:
    """Random rational walls 2-6 m from the origin and, unless ``mounted``, a
    fixed speaker near the origin.  In 3D the result is guaranteed stack-free
    for ``config``."""
    while True:
        walls = random_walls(rng, n_walls, dim)
        if len(set(w.plane for w in walls)) < n_walls:
            continue
        speaker = None if mounted else tuple(_rand_frac(rng, -1, 1, 32) for _ in range(dim))
        try:
            scene = Scene(dim, walls, speaker)
        except InvalidConfiguration:
            continue
        if dim == 3 and not mounted and config is not None and check_stack(scene, config) is not None:
            continue
        return scene


@dataclass(frozen=True)
class PoseSampler:
    """Uniform sampler over vehicle poses.

    Exact mode draws the half-angle tangent uniformly from [-1, 1] on a grid of
    step ``1/denominator`` and applies a half turn with probability 1/2, so
    every rotation stays rational.  Float mode draws the heading uniformly.
    """

    box: Tuple = (-1, 1, -1, 1)
    hover_range: Optional[Tuple] = None
    denominator: int = 4096

    def sample(self, rng, exact: bool = True) -> Pose:
        x0, x1, y0, y1 = self.box
        if exact:
            den = self.denominator
            t = _rand_frac(rng, -1, 1, den)
            tx, ty = _rand_frac(rng, x0, x1, den), _rand_frac(rng, y0, y1, den)
            tz = _rand_frac(rng, *self.hover_range, den) if self.hover_range else 0
            pose = Pose.from_half_tangent(t, tx, ty, tz)
            if rng.integers(0, 2):
                pose = Pose(-pose.cos, -pose.sin, pose.tx, pose.ty, pose.tz)
            return pose
        theta = rng.uniform(0, 2 * math.pi)
        tz = rng.uniform(*self.hover_range) if self.hover_range else 0.0
        return Pose.from_angle(theta, rng.uniform(x0, x1), rng.uniform(y0, y1), tz)


@dataclass
class ExperimentSpec:
    scene: Scene
    config: VehicleConfig
    mode: str = "exact"
    sampler: PoseSampler = field(default_factory=PoseSampler)
    samples: int = 10_000
    seed: int = 0
    audibility: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be at least 1")
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class PoseOutcome:
    index: int
    pose: Pose
    n_detected: int
    ghosts: List[DetectedWall]


@dataclass
class MonteCarloResult:
    n_poses: int
    n_bad: int
    example_bad_poses: List[PoseOutcome]
    rows: List[PoseOutcome] = field(repr=False, default_factory=list)

    @property
    def bad_fraction(self) -> float:
        return self.n_bad / self.n_poses

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            p = r.pose
            w.writerow([r.index, f"{p.theta:.12g}", f"{float(p.tx):.12g}", f"{float(p.ty):.12g}",
                        f"{float(p.tz):.12g}", r.n_detected, len(r.ghosts), int(bool(r.ghosts))])
        return buf.getvalue()


def _check_supported(scene: Scene, config: VehicleConfig) -> None:
    if scene.dimension == 3 and scene.mounted:
        raise UnsupportedConfiguration("3D scenes with a vehicle-mounted loudspeaker are not supported")
    if config.dimension != scene.dimension:
        raise InvalidConfiguration("vehicle and scene dimensions differ")


def _run_poses(args) -> List[Tuple[int, int, List[DetectedWall]]]:
    scene, config, indexed_poses, audibility, tolerances = args
    out = []
    for i, pose in indexed_poses:
        rec = simulate_echoes(scene, config, pose, audibility=audibility, tolerances=tolerances)
        found = detect(squared_distances(rec), config.mics(pose), scene.speaker_position(config, pose),
                       tolerances=tolerances)
        report = evaluate(found, scene, config, pose, audibility=audibility, tolerances=tolerances)
        out.append((i, len(found), report.ghosts))
    return out


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("ECHOWALL_THREADS", "1")))
    except ValueError:
        return 1


def montecarlo_bad_fraction(spec: ExperimentSpec,
                            tolerances: Tolerances = DEFAULT_TOLERANCES) -> MonteCarloResult:
    """Sample poses, run simulate -> detect -> evaluate at each, count bad ones."""
    scene, config = spec.scene, spec.config
    _check_supported(scene, config)
    exact = spec.mode == "exact"
    if exact and not (scene.exact and config.exact):
        raise ValueError("exact mode needs a rational scene and vehicle")
    if not exact:
        scene, config = scene.to_float(), config.to_float()
    if config.dimension == 2 and spec.sampler.hover_range:
        raise InvalidConfiguration("hover offsets need a 3D scene")
    rng = np.random.default_rng(spec.seed)
    poses = [spec.sampler.sample(rng, exact) for _ in range(spec.samples)]
    indexed = list(enumerate(poses))

    workers = min(_workers(), len(indexed))
    if workers > 1:
        chunks = [indexed[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_run_poses, [(scene, config, c, spec.audibility, tolerances) for c in chunks]))
        results = sorted((r for part in parts for r in part), key=lambda r: r[0])
    else:
        results = _run_poses((scene, config, indexed, spec.audibility, tolerances))

    rows = [PoseOutcome(i, poses[i], n, ghosts) for i, n, ghosts in results]
    bad = [r for r in rows if r.ghosts]
    return MonteCarloResult(len(rows), len(bad), bad[:10], rows)


# -- figure scenarios --------------------------------------------------------
#
# Figures 1-3 are x-z sketches; y is perpendicular to the drawing.  A fourth
# microphone off the drawing plane completes the stack.

FIG_SPEAKER = (7, 0, 2)
FIG_SPEAKER_TILTED = (6, 0, Fraction(7, 2))
FIG_MICS = ((4, 0, 4), (8, 0, 5), (10, 0, 6), (5, 2, Fraction(9, 2)))
FIG_AXIS = (7, 0)
FIG_Z1 = 8
FIG_VEHICLE_CENTER = Pose(1, 0, 7, 0, 0)


def figure_vehicle() -> Tuple[VehicleConfig, Pose]:
    """The drawn microphones as offsets around a vehicle centred below x=7."""
    center = FIG_VEHICLE_CENTER
    offsets = tuple(center.inverse().apply(m) for m in FIG_MICS)
    return VehicleConfig(offsets), center


@dataclass
class ScenarioResult:
    name: str
    claim: str
    scene: Scene
    config: VehicleConfig
    pose: Pose
    detected: List[DetectedWall]
    report: EvaluationReport
    certificate: Optional[StackCertificate] = None
    details: Dict = field(default_factory=dict)


def _run(scene, config, pose, audibility=False):
    rec = simulate_echoes(scene, config, pose, audibility=audibility)
    found = detect(squared_distances(rec), config.mics(pose), scene.speaker_position(config, pose))
    return rec, found, evaluate(found, scene, config, pose, audibility=audibility)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ScenarioFailure(message)


def _stack_scenario(name: str, speaker, claim: str) -> ScenarioResult:
    config, pose = figure_vehicle()
    scene, cert = make_stack(config, pose, FIG_AXIS, FIG_Z1, speaker)
    _, found, report = _run(scene, config, pose)
    checked = check_stack(scene, config, pose)
    _require(checked is not None, f"{name}: constructed walls carry no stack certificate")
    ghost_mirrors = [g.mirror for g in report.ghosts]
    _require(cert.ghost in ghost_mirrors, f"{name}: no ghost at s_ghost={cert.ghost}")
    mic_z = min(m[2] for m in config.mics(pose))
    _require(cert.ghost[2] < mic_z, f"{name}: s_ghost is not below the microphones")
    _require(not report.missed, f"{name}: true walls were missed")
    details = {
        "mirror_points": list(scene.mirror_points(speaker)),
        "ghost_plane": next(g.plane for g in report.ghosts if g.mirror == cert.ghost),
        "walls_horizontal": all(p.normal[:2] == (0, 0) for p in scene.planes),
    }
    return ScenarioResult(name, claim, scene, config, pose, found, report, cert, details)


def fig_bad_stack() -> ScenarioResult:
    res = _stack_scenario(
        "fig_bad_stack", FIG_SPEAKER,
        "Horizontal walls stacked above the speaker make the microphones hear a ghost wall.")
    _require(res.details["walls_horizontal"], "fig_bad_stack: walls should be horizontal")
    return res


def fig_nonhorizontal_stack() -> ScenarioResult:
    res = _stack_scenario(
        "fig_nonhorizontal_stack", FIG_SPEAKER_TILTED,
        "Another speaker position and tilted walls give the same mirror stack and ghost.")
    reference = _stack_scenario("fig_bad_stack", FIG_SPEAKER, "")
    _require(not res.details["walls_horizontal"], "fig_nonhorizontal_stack: walls should be tilted")
    _require(res.certificate == reference.certificate,
             "fig_nonhorizontal_stack: certificate differs from the horizontal stack")
    _require(res.details["mirror_points"] == reference.details["mirror_points"],
             "fig_nonhorizontal_stack: mirror points differ from the horizontal stack")
    return res


def fig_really_good() -> ScenarioResult:
    """Two walls meeting at (4, 0), symmetric about the x-axis; m1 sits on the
    axis and hears both echoes at once.  A mixed tuple satisfies the matching
    relation yet trilaterates to a real mirror point."""
    walls = (Wall(Plane((3, -5), (4, 0))), Wall(Plane((3, 5), (4, 0))))
    speaker = (0, 0)
    scene = Scene(2, walls, speaker)
    config = VehicleConfig(((1, 0), (Fraction(-3, 2), 1), (Fraction(-3, 2), -1)))
    pose = Pose()
    rec, found, report = _run(scene, config, pose)
    mics = config.mics(pose)
    s1, s2 = scene.mirror_points(speaker)
    mixed = (dist2(s2, mics[0]), dist2(s1, mics[1]), dist2(s1, mics[2]))
    f_mixed = cm_determinant(mixed, mic_gram(mics))
    _require(len(rec.times[0]) == 1, "fig_really_good: echoes at m1 should coincide")
    _require(f_mixed == 0, "fig_really_good: mixed tuple should satisfy the matching relation")
    _require(not report.ghosts, "fig_really_good: a ghost wall was detected")
    _require(len(report.true_walls_found) == 2 and not report.missed,
             "fig_really_good: both walls should be detected")
    return ScenarioResult("fig_really_good", "Both echoes reach m1 simultaneously; no ghost wall is detected.",
                          scene, config, pose, found, report,
                          details={"mixed_tuple": mixed, "f_mixed": f_mixed,
                                   "echoes_per_mic": [len(ts) for ts in rec.times]})


SCENARIOS = {
    "fig_bad_stack": fig_bad_stack,
    "fig_nonhorizontal_stack": fig_nonhorizontal_stack,
    "fig_really_good": fig_really_good,
}


def scenario(name: str) -> ScenarioResult:
    try:
        build = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return build()


def persistence_scene(margin=Fraction(1, 2)) -> Tuple[Scene, VehicleConfig, Pose, StackCertificate]:
    """The tilted-wall stack with each stacked wall cut to a rectangle around
    its specular points, so that the ghost lives in a bounded pose region."""
    config, pose = figure_vehicle()
    scene, cert = make_stack(config, pose, FIG_AXIS, FIG_Z1, FIG_SPEAKER_TILTED)
    return finite_stack_scene(scene, cert, config, pose, margin), config, pose, cert
