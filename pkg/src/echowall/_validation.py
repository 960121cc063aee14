"""Input checks shared by the estimator and the CLI."""
from numbers import Real
from typing import List

from .simulator import EchoRecord, squared_distances

MODES = ("auto", "exact", "float")


def check_points(points, dim=None, name="points") -> List[tuple]:
    try:
        pts = [tuple(p) for p in points]
    except TypeError:
        raise ValueError(f"{name} must be a sequence of coordinate sequences") from None
    if not pts:
        raise ValueError(f"{name} is empty")
    d = len(pts[0]) if dim is None else dim
    for p in pts:
        if len(p) != d or not all(isinstance(x, Real) for x in p):
            raise ValueError(f"{name}: expected {d} real coordinates, got {p!r}")
    return pts


def check_point(p, dim, name="point") -> tuple:
    return check_points([p], dim, name)[0]


def check_mode(mode) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def check_echo_input(X, n_mics: int) -> List[frozenset]:
    """Per-microphone squared-distance sets from an ``EchoRecord`` or from a
    sequence of ``n_mics`` collections of squared distances."""
    if isinstance(X, EchoRecord):
        sets = squared_distances(X)
    else:
        try:
            sets = [frozenset(ds) for ds in X]
        except TypeError:
            raise ValueError("expected an EchoRecord or per-microphone distance collections") from None
    if len(sets) != n_mics:
        raise ValueError(f"expected {n_mics} distance sets, got {len(sets)}")
    for ds in sets:
        for d in ds:
            if not isinstance(d, Real) or d < 0:
                raise ValueError(f"squared distances must be nonnegative reals, got {d!r}")
    return sets
