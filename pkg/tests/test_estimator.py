import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from echowall import IllConditioned, Plane, Pose, Scene, VehicleConfig, Wall, plane_from_mirror, simulate_echoes
from echowall.estimator import WallDetector
from echowall.experiments import FIG_AXIS, FIG_SPEAKER, FIG_Z1, figure_vehicle
from echowall.stacks import make_stack

TETRA = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def two_wall_scene():
    walls = (Wall(Plane((1, 2, 2), (3, 3, 3))), Wall(Plane((0, 0, 1), (0, 0, 7))))
    return Scene(3, walls, (0, 0, 0))


class TestWallDetector:
    def test_params_round_trip(self):
        est = WallDetector(mics=TETRA, speaker=(0, 0, 0), mode="exact", threshold=1e-9)
        params = est.get_params()
        assert params == {"mics": TETRA, "speaker": (0, 0, 0), "mode": "exact", "threshold": 1e-9,
                          "prune": False}
        twin = clone(est)
        assert twin.get_params() == params
        est.set_params(prune=True)
        assert est.prune

    def test_predict_from_record(self):
        scene = two_wall_scene()
        rec = simulate_echoes(scene, VehicleConfig(TETRA), Pose())
        est = WallDetector(mics=TETRA, speaker=(0, 0, 0)).fit()
        assert set(est.predict(rec)) == set(scene.planes)
        assert est.score(rec, scene.planes) == 1.0
        assert est.n_tuples_ == 16

    def test_fit_with_data(self):
        scene = two_wall_scene()
        rec = simulate_echoes(scene, VehicleConfig(TETRA), Pose())
        est = WallDetector(mics=TETRA, speaker=(0, 0, 0)).fit(rec)
        assert len(est.walls_) == 2 and est.exact_ and est.dimension_ == 3
        assert est.fit_predict(rec) == [w.plane for w in est.walls_]

    def test_distance_sets_input(self):
        est = WallDetector(mics=TETRA, speaker=(0, 0, 0)).fit()
        s = (2, -1, 3)
        d = [{sum((a - b) ** 2 for a, b in zip(s, m))} for m in TETRA]
        assert est.predict(d) == [plane_from_mirror((0, 0, 0), s)]

    def test_ghost_lowers_score(self):
        config, pose = figure_vehicle()
        scene, _ = make_stack(config, pose, FIG_AXIS, FIG_Z1, FIG_SPEAKER)
        rec = simulate_echoes(scene, config, pose)
        est = WallDetector(mics=config.mics(pose), speaker=FIG_SPEAKER).fit()
        assert est.score(rec, scene.planes) < 1.0

    def test_float_mode(self):
        scene = two_wall_scene()
        rec = simulate_echoes(scene.to_float(), VehicleConfig(TETRA).to_float(), Pose().to_float())
        est = WallDetector(mics=[tuple(map(float, m)) for m in TETRA], speaker=(0.0, 0.0, 0.0), mode="float")
        planes = est.fit().predict(rec)
        assert len(planes) == 2
        assert all(any(p.isclose(t.to_float()) for t in scene.planes) for p in planes)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            WallDetector(mics=TETRA, speaker=(0, 0, 0)).predict([{1}, {1}, {1}, {1}])

    @pytest.mark.parametrize("kwargs, exc", [
        ({"mics": ((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)), "speaker": (0, 0, 0)}, IllConditioned),
        ({"mics": TETRA, "speaker": (0, 0)}, ValueError),
        ({"mics": TETRA[:3], "speaker": (0, 0, 0)}, ValueError),
        ({"mics": TETRA, "speaker": (0, 0, 0), "mode": "fuzzy"}, ValueError),
        ({"mics": None, "speaker": (0, 0, 0)}, ValueError),
    ])
    def test_validation(self, kwargs, exc):
        with pytest.raises(exc):
            WallDetector(**kwargs).fit()

    def test_bad_echo_input(self):
        est = WallDetector(mics=TETRA, speaker=(0, 0, 0)).fit()
        with pytest.raises(ValueError):
            est.predict([{1}, {1}, {1}])
        with pytest.raises(ValueError):
            est.predict([{-1}, {1}, {1}, {1}])
        with pytest.raises(ValueError):
            est.predict(42)
