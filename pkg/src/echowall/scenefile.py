"""Scene files: JSON with fields ``dimension``, ``walls``, ``speaker``,
``mics``, ``c`` and ``t0``.

Numbers may be JSON numbers or strings such as ``"7/3"``.  Loading in exact
mode parses every value as a rational via its decimal text, so ``0.1`` means
1/10 exactly.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Tuple, Union

from .exceptions import EchoWallError
from .geometry import Plane, Pose, VehicleConfig, is_exact_scalar
from .simulator import DEFAULT_SPEED_OF_SOUND, Scene, Wall


class SceneFileError(EchoWallError, ValueError):
    pass


def parse_number(v, exact: bool = True):
    if isinstance(v, bool) or not isinstance(v, (int, float, str, Fraction)):
        raise SceneFileError(f"not a number: {v!r}")
    try:
        q = Fraction(v) if isinstance(v, (int, Fraction)) else Fraction(str(v).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise SceneFileError(f"not a number: {v!r}") from e
    if exact:
        return int(q) if q.denominator == 1 else q
    return float(q)


def _vec(v, dim, exact, what):
    if not isinstance(v, (list, tuple)) or len(v) != dim:
        raise SceneFileError(f"{what} must be a list of {dim} numbers, got {v!r}")
    return tuple(parse_number(x, exact) for x in v)


def scene_from_dict(data: Dict[str, Any], exact: bool = True) -> Tuple[Scene, VehicleConfig]:
    try:
        dim = data["dimension"]
        if dim not in (2, 3):
            raise SceneFileError("dimension must be 2 or 3")
        walls = []
        for w in data["walls"]:
            anchor = _vec(w["anchor"], dim, exact, "wall anchor")
            normal = _vec(w["normal"], dim, exact, "wall normal")
            ext = w.get("extent")
            if ext is None:
                walls.append(Wall(Plane(normal, anchor)))
            else:
                keys = ["e1", "e2"][:dim - 1]
                edges = [_vec(ext[k], dim, exact, f"extent {k}") for k in keys]
                walls.append(Wall.from_extent(anchor, normal, edges))
        sp = data["speaker"]
        mode = sp.get("mode", "fixed")
        mics = tuple(_vec(m, dim, exact, "microphone") for m in data["mics"])
        if mode == "fixed":
            position = _vec(sp["position"], dim, exact, "speaker position")
            config = VehicleConfig(mics)
        elif mode == "mounted":
            position = None
            config = VehicleConfig(mics, _vec(sp["offset"], dim, exact, "speaker offset"))
        else:
            raise SceneFileError(f"unknown speaker mode {mode!r}")
        c = parse_number(data.get("c", DEFAULT_SPEED_OF_SOUND), exact)
        t0 = parse_number(data.get("t0", 0), exact)
        return Scene(dim, tuple(walls), position, c, t0), config
    except SceneFileError:
        raise
    except (KeyError, TypeError, AttributeError) as e:
        raise SceneFileError(f"malformed scene: {e}") from e
    except EchoWallError as e:
        raise SceneFileError(str(e)) from e


def load_scene(path: Union[str, Path], exact: bool = True) -> Tuple[Scene, VehicleConfig]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SceneFileError(f"cannot read scene file {path}: {e}") from e
    if not isinstance(data, dict):
        raise SceneFileError("scene file must contain a JSON object")
    return scene_from_dict(data, exact)


def number_to_json(x):
    """Integers stay JSON numbers, other rationals become "p/q" strings."""
    if is_exact_scalar(x):
        q = Fraction(x)
        return int(q) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    return float(x)


def vec_to_json(v):
    return [number_to_json(x) for x in v]


def scene_to_dict(scene: Scene, config: VehicleConfig) -> Dict[str, Any]:
    walls = []
    for w in scene.walls:
        if w.finite:
            entry = {"anchor": vec_to_json(w.corner), "normal": vec_to_json(w.plane.normal),
                     "extent": {k: vec_to_json(e) for k, e in zip(("e1", "e2"), w.edges)}}
        else:
            entry = {"anchor": vec_to_json(w.plane.anchor), "normal": vec_to_json(w.plane.normal)}
        walls.append(entry)
    if scene.mounted:
        speaker = {"mode": "mounted", "offset": vec_to_json(config.speaker_offset)}
    else:
        speaker = {"mode": "fixed", "position": vec_to_json(scene.speaker)}
    return {
        "dimension": scene.dimension,
        "walls": walls,
        "speaker": speaker,
        "mics": [vec_to_json(m) for m in config.mic_offsets],
        "c": number_to_json(scene.c),
        "t0": number_to_json(scene.t0),
    }


def dump_scene(scene: Scene, config: VehicleConfig, path=None) -> str:
    text = json.dumps(scene_to_dict(scene, config), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def pose_to_json(pose: Pose) -> Dict[str, Any]:
    return {"cos": number_to_json(pose.cos), "sin": number_to_json(pose.sin),
            "tx": number_to_json(pose.tx), "ty": number_to_json(pose.ty),
            "tz": number_to_json(pose.tz), "theta": pose.theta}
