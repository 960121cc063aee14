from fractions import Fraction

import numpy as np
import pytest

from echowall import (Plane, Pose, Scene, VehicleConfig, Wall, check_stack, detect, make_stack, persistence_region,
                      simulate_echoes, squared_distances)
from echowall.experiments import (FIG_AXIS, FIG_SPEAKER, FIG_SPEAKER_TILTED, FIG_Z1, figure_vehicle,
                                  persistence_scene)
from echowall.geometry import plane_from_mirror
from echowall.stacks import (STACK_PARAMETERS, codim_experiment, find_stack, in_plane_basis, pose_grid,
                             random_walls, stack_mirrors)

from oracles import rand_frac, sqdist


def figure_stack(speaker=FIG_SPEAKER):
    config, pose = figure_vehicle()
    scene, cert = make_stack(config, pose, FIG_AXIS, FIG_Z1, speaker)
    return scene, cert, config, pose


class TestMakeStack:
    def test_three_parameters(self):
        assert len(STACK_PARAMETERS) == 3

    def test_equal_heights_share_a_wall(self):
        config = VehicleConfig(((0, 0, 0), (1, 0, 0), (0, 1, 1), (0, 0, 1)))
        scene, cert = make_stack(config, Pose(), (3, 3), 9, (0, 0, 0))
        assert len(scene.walls) == 2
        assert cert.wall_indices == (0, 0, 1, 1)
        assert check_stack(scene, config) is not None

    def test_axis_through_speaker_gives_horizontal_walls(self):
        scene, cert, config, pose = figure_stack()
        assert FIG_AXIS == FIG_SPEAKER[:2]
        assert all(p.normal == (0, 0, 1) for p in scene.planes)

    def test_generic_axis_tilts_walls(self):
        scene, cert, config, pose = figure_stack(FIG_SPEAKER_TILTED)
        assert not any(p.normal == (0, 0, 1) for p in scene.planes)

    def test_certificate_invariants(self):
        scene, cert, config, pose = figure_stack()
        mirrors = scene.mirror_points(FIG_SPEAKER)
        mics = config.mics(pose)
        stacked = [mirrors[w] for w in cert.wall_indices]
        assert all(s[:2] == cert.axis for s in stacked)
        for i in range(4):
            for j in range(4):
                assert stacked[j][2] - stacked[i][2] == 2 * (mics[j][2] - mics[i][2])
            assert 2 * mics[i][2] - stacked[i][2] == cert.ghost[2]
            # the ghost is heard at exactly the distance of mic i's own wall
            assert sqdist(stacked[i], mics[i]) == sqdist(cert.ghost, mics[i])

    def test_ghost_detected_at_construction_pose(self, rng):
        config, pose = figure_vehicle()
        for _ in range(10):
            axis = (rand_frac(rng, 3, 11), rand_frac(rng, -4, 4))
            z1 = rand_frac(rng, 8, 12)
            scene, cert = make_stack(config, pose, axis, z1, FIG_SPEAKER)
            rec = simulate_echoes(scene, config, pose)
            found = detect(squared_distances(rec), config.mics(pose), FIG_SPEAKER)
            assert cert.ghost in [w.mirror for w in found]

    def test_wrong_axis_length(self):
        config, pose = figure_vehicle()
        with pytest.raises(ValueError):
            make_stack(config, pose, (1, 2, 3), 8, FIG_SPEAKER)


class TestCheckStack:
    def test_round_trip(self, rng):
        config, pose = figure_vehicle()
        for _ in range(20):
            axis = (rand_frac(rng, -5, 5), rand_frac(rng, -5, 5))
            scene, cert = make_stack(config, pose, axis, rand_frac(rng, 8, 12), FIG_SPEAKER)
            found = check_stack(scene, config, pose)
            assert found is not None and found.ghost == cert.ghost

    def test_random_walls_have_none(self, rng):
        config, pose = figure_vehicle()
        for _ in range(500):
            scene = Scene(3, random_walls(rng, 4), (Fraction(1, 3), Fraction(-1, 7), Fraction(1, 2)))
            assert check_stack(scene, config, pose) is None

    def test_stack_figure_cross_section(self):
        # mirror points at (7, z) for z = 8, 10, 12 and microphones at heights 4, 5, 6
        mirrors = [(7, 8), (7, 10), (7, 12)]
        mics = [(4, 4), (8, 5), (10, 6)]
        cert = find_stack(mirrors, mics)
        assert cert is not None
        assert cert.ghost == (7, 0)
        assert cert.deltas == (0, 2, 4)
        assert plane_from_mirror((7, 2), cert.ghost) == Plane((0, 1), (0, 1))

    def test_float_tolerance(self):
        mirrors = [(7.0, 8.0), (7.0, 10.0 + 1e-12), (7.0, 12.0)]
        mics = [(4.0, 4.0), (8.0, 5.0), (10.0, 6.0)]
        assert find_stack(mirrors, mics) is not None
        mirrors[1] = (7.0, 10.001)
        assert find_stack(mirrors, mics) is None

    def test_perturbing_one_mirror_breaks_it(self):
        config, pose = figure_vehicle()
        mirrors = list(stack_mirrors(config, pose, FIG_AXIS, FIG_Z1))
        for k in range(4):
            bumped = list(mirrors)
            bumped[k] = bumped[k][:2] + (bumped[k][2] + Fraction(1, 10 ** 6),)
            assert find_stack(bumped, config.mics(pose)) is None

    def test_invariant_under_ground_motion(self, rng):
        scene, cert, config, pose = figure_stack(FIG_SPEAKER_TILTED)
        for _ in range(20):
            moved = Pose.from_half_tangent(rand_frac(rng, -2, 2), rand_frac(rng, -9, 9), rand_frac(rng, -9, 9))
            assert check_stack(scene, config, moved).ghost == cert.ghost

    def test_mounted_scene(self):
        config = VehicleConfig(((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)), (0, 0, 0))
        with pytest.raises(ValueError):
            check_stack(Scene(3, (Wall(Plane((0, 0, 1), (0, 0, 5))),)), config)


class TestPersistence:
    def test_in_plane_basis(self):
        for n in [(1, 2, 3), (0, 0, 1), (3, -5)]:
            for e in in_plane_basis(Plane(n, tuple(0 for _ in n))):
                assert sum(a * b for a, b in zip(e, Plane(n, tuple(0 for _ in n)).normal)) == 0

    def test_neighbourhood_is_all_bad(self):
        scene, config, pose, cert = persistence_scene()
        assert all(w.finite for w in scene.walls)
        grid = pose_grid(pose, Fraction(1, 100), Fraction(1, 10), Fraction(1, 10), steps=3)
        assert persistence_region(scene, config, grid, audibility=True) == 1.0

    def test_far_away_is_good(self):
        scene, config, pose, cert = persistence_scene()
        far = [Pose(1, 0, pose.tx + 30, pose.ty)]
        assert persistence_region(scene, config, far, audibility=True) == 0.0

    def test_stack_free_control(self):
        scene, cert, config, pose = figure_stack(FIG_SPEAKER_TILTED)
        mirrors = list(scene.mirror_points(FIG_SPEAKER_TILTED))
        mirrors[0] = mirrors[0][:2] + (mirrors[0][2] + Fraction(1, 7),)
        control = Scene(3, tuple(Wall(plane_from_mirror(FIG_SPEAKER_TILTED, s)) for s in mirrors),
                        FIG_SPEAKER_TILTED)
        assert check_stack(control, config, pose) is None
        grid = pose_grid(pose, Fraction(1, 100), Fraction(1, 10), Fraction(1, 10), steps=3)
        assert persistence_region(control, config, grid) == 0.0

    def test_hover_persistence(self):
        scene, cert, config, pose = figure_stack(FIG_SPEAKER_TILTED)
        grid = pose_grid(pose, Fraction(1, 100), Fraction(1, 10), Fraction(1, 10), steps=2, half_z=Fraction(1, 4))
        assert any(p.hover for p in grid)
        assert persistence_region(scene, config, grid) == 1.0

    def test_grid_shape(self):
        grid = pose_grid(Pose(), Fraction(1, 10), 1, 1, steps=11)
        assert len(grid) == 11 ** 3 and all(p.exact for p in grid)
        assert len(set(p.as_tuple() for p in grid)) == 11 ** 3


class TestCodimension:
    @pytest.mark.parametrize("l", [2, 3, 4])
    def test_family_dimension(self, l):
        summary = codim_experiment(l, samples=200, seed=l)
        assert summary.stacks_found == 0
        assert summary.family_rank == 3
        assert summary.measured_codimension == summary.predicted_codimension == 3 * (l - 1)
        assert summary.family_certified == 200
        assert summary.perturbations_broken == 200

    def test_bad_l(self):
        with pytest.raises(ValueError):
            codim_experiment(5, samples=1)

    def test_random_walls_are_rational(self):
        walls = random_walls(np.random.default_rng(0), 4)
        assert all(w.plane.exact for w in walls)
