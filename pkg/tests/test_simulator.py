import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echowall import (DegenerateMirror, EchoRecord, ExactTime, Plane, Pose, Scene, VehicleConfig, Wall,
                      audible, simulate_echoes, squared_distances)
from echowall.exceptions import InvalidConfiguration
from echowall.scenefile import SceneFileError, dump_scene, load_scene, scene_from_dict, scene_to_dict

from oracles import rand_point, random_mics, reflect, sqdist

TETRA = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def symmetric_walls():
    walls = (Wall(Plane((3, -5), (4, 0))), Wall(Plane((3, 5), (4, 0))))
    config = VehicleConfig(((1, 0), (Fraction(-3, 2), 1), (Fraction(-3, 2), -1)))
    return Scene(2, walls, (0, 0)), config


def random_3wall_scene(rng):
    walls = []
    while len(walls) < 3:
        n = rand_point(rng, 3, -3, 3, den=4)
        if any(n):
            walls.append(Wall(Plane(n, rand_point(rng, 3, 2, 6, den=4))))
    speaker = rand_point(rng, 3, -1, 1)
    return Scene(3, tuple(walls), speaker)


class TestSimulate:
    def test_single_wall(self):
        scene = Scene(3, (Wall(Plane((0, 0, 1), (0, 0, 5))),), (0, 0, 0), c=1)
        config = VehicleConfig(((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, -1)))
        rec = simulate_echoes(scene, config, Pose())
        assert float(rec.times[0][0]) == 10
        assert squared_distances(rec)[0] == {100}

    def test_squared_distance_examples(self):
        assert squared_distances(EchoRecord(((10,),), t0=0, c=1)) == [{100}]
        assert squared_distances(EchoRecord(((3,),), t0=1, c=2)) == [{16}]

    def test_symmetric_walls_coincident_echoes(self):
        scene, config = symmetric_walls()
        rec = simulate_echoes(scene, config, Pose())
        assert [len(ts) for ts in rec.times] == [1, 2, 2]
        flt = simulate_echoes(scene.to_float(), config.to_float(), Pose().to_float())
        assert [len(ts) for ts in flt.times] == [1, 2, 2]

    def test_random_scenes_round_trip(self, rng):
        for _ in range(30):
            scene = random_3wall_scene(rng)
            mics = [tuple(m) for m in random_mics(rng)]
            rec = simulate_echoes(scene, VehicleConfig(mics), Pose())
            assert rec.exact
            mirrors = [reflect(w.plane.normal, w.plane.offset, scene.speaker) for w in scene.walls]
            expected = [{sqdist(s, m) for s in mirrors} for m in mics]
            assert squared_distances(rec) == expected
            assert all(len(ts) == len(e) for ts, e in zip(rec.times, expected))

    def test_times_use_speed_of_sound(self):
        scene = Scene(3, (Wall(Plane((0, 0, 1), (0, 0, 5))),), (0, 0, 0), c=343, t0=Fraction(1, 10))
        rec = simulate_echoes(scene, VehicleConfig(TETRA), Pose())
        assert float(rec.times[0][0]) == pytest.approx(0.1 + 10 / 343)
        assert squared_distances(rec)[0] == {100}

    def test_speaker_on_wall(self):
        with pytest.raises(DegenerateMirror):
            Scene(3, (Wall(Plane((0, 0, 1), (0, 0, 5))),), (1, 1, 5))

    def test_dimension_mismatch(self):
        scene, _ = symmetric_walls()
        with pytest.raises(InvalidConfiguration):
            simulate_echoes(scene, VehicleConfig(TETRA), Pose())

    def test_mounted_speaker_follows_pose(self):
        walls = (Wall(Plane((1, 0), (5, 0))),)
        scene = Scene(2, walls)
        config = VehicleConfig(((0, 0), (1, 0), (0, 1)), speaker_offset=(0, 0))
        near = squared_distances(simulate_echoes(scene, config, Pose()))
        moved = squared_distances(simulate_echoes(scene, config, Pose(tx=2)))
        # the vehicle moves 2 closer, so the speaker's mirror moves 2 closer too
        assert near[0] == {100} and moved[0] == {36}

    def test_translation_equivariance(self, rng):
        scene = random_3wall_scene(rng)
        config = VehicleConfig(TETRA)
        t = rand_point(rng, 3)
        shifted_walls = tuple(Wall(Plane(w.plane.normal, tuple(a + b for a, b in zip(w.plane.anchor, t))))
                              for w in scene.walls)
        shifted = Scene(3, shifted_walls, tuple(a + b for a, b in zip(scene.speaker, t)))
        a = squared_distances(simulate_echoes(scene, config, Pose()))
        b = squared_distances(simulate_echoes(shifted, config, Pose(1, 0, *t)))
        assert a == b

    @given(st.fractions(min_value=-3, max_value=3, max_denominator=16),
           st.tuples(*[st.fractions(min_value=-1, max_value=1, max_denominator=16)] * 2))
    @settings(max_examples=30, deadline=None)
    def test_at_most_one_echo_per_wall(self, t, xy):
        scene = Scene(3, (Wall(Plane((1, 0, 0), (6, 0, 0))), Wall(Plane((0, 1, 1), (0, 5, 5))),
                          Wall(Plane((0, 0, 1), (0, 0, -4)))), (0, 0, 0))
        rec = simulate_echoes(scene, VehicleConfig(TETRA), Pose.from_half_tangent(t, *xy))
        assert all(1 <= len(ts) <= 3 for ts in rec.times)

    def test_float_merge_gap(self):
        walls = (Wall(Plane((1.0, 0.0), (5.0, 0.0))), Wall(Plane((-1.0, 0.0), (-5.0, 0.0))))
        config = VehicleConfig(((0.0, 0.0), (0.0, 1.0), (1.0, 0.0)))
        rec = simulate_echoes(Scene(2, walls, (0.0, 0.0)), config, Pose(1.0, 0.0))
        assert [len(ts) for ts in rec.times] == [1, 1, 2]


class TestExactTime:
    def test_ordering(self):
        a, b = ExactTime(Fraction(0), Fraction(4)), ExactTime(Fraction(0), Fraction(9))
        assert a < b and a == ExactTime(Fraction(0), Fraction(4))
        assert float(b) == 3.0


class TestAudibility:
    def square(self):
        return Wall.from_extent((-1, -1, 5), (0, 0, 1), ((2, 0, 0), (0, 2, 0)))

    def test_centered(self):
        assert audible(self.square(), (0, 0, 0), (0, 0, 1))

    def test_far_beyond_edge(self):
        # closed form for a horizontal mirror at z=h: the specular point's x is
        # L_x + (m_x - L_x) (h - L_z) / ((h - L_z) + (h - m_z))
        L, m, h = (0, 0, 0), (10, 0, 0), 5
        x = L[0] + Fraction(m[0] - L[0]) * (h - L[2]) / ((h - L[2]) + (h - m[2]))
        assert x == 5
        assert not audible(self.square(), L, m)
        assert audible(self.square(), L, (2, 0, 0))

    def test_mic_behind_wall(self):
        assert not audible(self.square(), (0, 0, 0), (0, 0, 6))

    def test_infinite_wall(self):
        assert audible(Wall(Plane((0, 0, 1), (0, 0, 5))), (0, 0, 0), (1000, 0, 0))

    def test_extent_must_lie_in_plane(self):
        with pytest.raises(InvalidConfiguration):
            Wall(Plane((0, 0, 1), (0, 0, 5)), (0, 0, 5), ((1, 0, 1), (0, 1, 0)))

    def test_simulation_drops_inaudible_echoes(self):
        scene = Scene(3, (self.square(), Wall(Plane((1, 0, 0), (9, 0, 0)))), (0, 0, 0))
        config = VehicleConfig(((20, 0, 0), (21, 0, 0), (20, 1, 0), (20, 0, 1)))
        assert [len(ts) for ts in simulate_echoes(scene, config, Pose()).times] == [2, 2, 2, 2]
        assert [len(ts) for ts in simulate_echoes(scene, config, Pose(), audibility=True).times] == [1, 1, 1, 1]


class TestSceneFile:
    def test_round_trip(self, tmp_path, rng):
        scene = random_3wall_scene(rng)
        scene = Scene(3, scene.walls + (Wall.from_extent((0, 0, 7), (0, 0, 1), ((1, 0, 0), (0, 1, 0))),),
                      scene.speaker, c=Fraction(343), t0=Fraction(1, 3))
        config = VehicleConfig(TETRA)
        path = tmp_path / "scene.json"
        dump_scene(scene, config, path)
        loaded, cfg = load_scene(path)
        assert loaded == scene and cfg == config

    def test_decimal_text_is_exact(self):
        data = {"dimension": 2, "walls": [{"anchor": [0.1, 0], "normal": [1, 0]}],
                "speaker": {"mode": "fixed", "position": ["1/3", 0]},
                "mics": [[0, 0], [0.5, 0], [0, 0.5]]}
        scene, config = scene_from_dict(data)
        assert scene.walls[0].plane.anchor == (Fraction(1, 10), 0)
        assert scene.speaker == (Fraction(1, 3), 0)
        assert scene_to_dict(scene, config)["speaker"]["position"] == ["1/3", 0]
        flt, _ = scene_from_dict(data, exact=False)
        assert not flt.exact

    def test_mounted(self):
        data = {"dimension": 2, "walls": [{"anchor": [5, 0], "normal": [1, 0]}],
                "speaker": {"mode": "mounted", "offset": [0, 0]}, "mics": [[0, 0], [1, 0], [0, 1]]}
        scene, config = scene_from_dict(data)
        assert scene.mounted and config.speaker_offset == (0, 0)

    @pytest.mark.parametrize("data", [
        {},
        {"dimension": 4, "walls": [], "speaker": {}, "mics": []},
        {"dimension": 2, "walls": [{"anchor": [5, 0], "normal": [0, 0]}],
         "speaker": {"position": [0, 0]}, "mics": [[0, 0], [1, 0], [0, 1]]},
        {"dimension": 2, "walls": [{"anchor": [5, 0], "normal": [1, 0]}],
         "speaker": {"position": ["x", 0]}, "mics": [[0, 0], [1, 0], [0, 1]]},
        {"dimension": 2, "walls": [{"anchor": [5, 0], "normal": [1, 0]}],
         "speaker": {"mode": "orbit"}, "mics": [[0, 0], [1, 0], [0, 1]]},
    ])
    def test_malformed(self, data):
        with pytest.raises(SceneFileError):
            scene_from_dict(data)

    def test_unreadable(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(SceneFileError):
            load_scene(bad)
        bad.write_text(json.dumps([1, 2]))
        with pytest.raises(SceneFileError):
            load_scene(bad)
