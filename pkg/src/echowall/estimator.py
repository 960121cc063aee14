"""scikit-learn style front end for wall detection."""
from __future__ import annotations

from typing import List

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_echo_input, check_mode, check_point, check_points
from .cayley_menger import mic_gram
from .detector import DetectedWall, run_detection
from .exceptions import IllConditioned
from .geometry import Plane, is_coplanar, is_exact


class WallDetector(BaseEstimator):
    """Detect walls from first-order echoes heard by a known microphone array.

    ``fit`` validates and stores the array geometry; ``predict`` maps an echo
    record (or per-microphone squared distances) to detected wall planes.

    Parameters
    ----------
    mics : sequence of points
        Microphone positions, 4 non-coplanar in 3D or 3 non-collinear in 2D.
    speaker : point
        Loudspeaker position in the same frame.
    mode : {"auto", "exact", "float"}
        "auto" runs exactly whenever every input is rational.
    threshold : float, optional
        Scaled Cayley-Menger residual below which a float tuple counts as a match.
    prune : bool
        Skip tuples violating the pairwise triangle inequality before testing.
    """

    def __init__(self, mics=None, speaker=None, mode="auto", threshold=None, prune=False):
        self.mics = mics
        self.speaker = speaker
        self.mode = mode
        self.threshold = threshold
        self.prune = prune

    def fit(self, X=None, y=None):
        check_mode(self.mode)
        mics = check_points(self.mics, name="mics")
        dim = len(mics[0])
        if dim not in (2, 3) or len(mics) != dim + 1:
            raise ValueError("need 3 microphones in 2D or 4 in 3D")
        if is_coplanar(mics):
            raise IllConditioned("microphones are coplanar" if dim == 3 else "microphones are collinear")
        self.speaker_ = check_point(self.speaker, dim, "speaker")
        self.mics_ = mics
        self.dimension_ = dim
        self.gram_ = mic_gram(mics)
        self.exact_ = is_exact(*mics, self.speaker_)
        if X is not None:
            self.walls_ = self._detect(X)
        return self

    def _detect(self, X) -> List[DetectedWall]:
        sets = check_echo_input(X, len(self.mics_))
        mode = None if self.mode == "auto" else self.mode
        result = run_detection(sets, self.mics_, self.speaker_, mode=mode,
                               threshold=self.threshold, prune=self.prune)
        self.n_tuples_, self.n_passed_, self.n_discarded_ = result.n_tuples, result.n_passed, result.n_discarded
        return result.walls

    def detect(self, X) -> List[DetectedWall]:
        check_is_fitted(self, "mics_")
        return self._detect(X)

    def predict(self, X) -> List[Plane]:
        return [w.plane for w in self.detect(X)]

    def fit_predict(self, X, y=None) -> List[Plane]:
        return self.fit().predict(X)

    def score(self, X, y) -> float:
        """Fraction of detected walls that are among the true planes ``y``
        (1.0 when nothing is detected)."""
        planes = self.predict(X)
        truth = list(y)
        if not planes:
            return 1.0
        return sum(any(p.isclose(t) for t in truth) for p in planes) / len(planes)
