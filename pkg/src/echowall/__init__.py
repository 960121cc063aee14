"""Echo-based wall detection with Cayley-Menger echo matching."""
from .cayley_menger import CMQuadric, cm_determinant, cm_matrix, cm_residual, is_realizable, mic_gram
from .config import DEFAULT_TOLERANCES, Tolerances
from .detector import DetectedWall, EvaluationReport, detect, evaluate, run_detection, trilaterate
from .exceptions import (DegenerateMirror, DegenerateScale, EchoWallError, IllConditioned,
                         InvalidConfiguration, InvalidPlane, UnsupportedConfiguration)
from .geometry import (Plane, Pose, VehicleConfig, apply_pose, compose, is_collinear, is_coplanar,
                       mirror_point, plane_from_mirror, reflect_point)
from .simulator import EchoRecord, ExactTime, Scene, Wall, audible, simulate_echoes, squared_distances
from .stacks import StackCertificate, check_stack, make_stack, persistence_region

__version__ = "0.1.0"
