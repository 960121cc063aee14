"""Float tolerances used across the package.

Exact (rational) computations never consult these values.
"""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    cm_residual: float = 1e-8          # scaled |f_D| below which a tuple "vanishes"
    coplanar_rel: float = 1e-10        # relative volume below which points are degenerate
    merge_time: float = 1e-12          # seconds; arrivals closer than this are one echo
    dedupe_mirror: float = 1e-9        # metres between mirror points of one cluster
    match_plane: float = 1e-9          # plane comparison against ground truth
    trilateration_rel: float = 1e-6    # RMS mismatch relative to scene scale
    stack: float = 1e-9                # doubling condition of a mirror stack
    rotation: float = 1e-12            # orthogonality of a float rotation block

    def replace(self, **changes) -> "Tolerances":
        return replace(self, **changes)


DEFAULT_TOLERANCES = Tolerances()
