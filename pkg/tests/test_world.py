import math

import pytest

from namo_sim.world import (FATAL, ObjectClass, ObjectInstance, Pose2D,
                            compose, default_class, footprint_world, inverse,
                            normalize_angle, polygon_area)

from ._oracles import homogeneous_compose, rotation_apply

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


def make_box(pose=Pose2D(), footprint=UNIT_SQUARE, oid=1, mass=2.0, mu=0.4):
    return ObjectInstance(oid, default_class("box_cardboard"), footprint,
                          pose, mass, mu)


class TestNormalizeAngle:
    def test_in_range(self):
        for theta in (-10.0, -math.pi, 0.0, math.pi, 10.0, 123.456):
            r = normalize_angle(theta)
            assert -math.pi < r <= math.pi

    def test_wraps_to_equivalent_angle(self):
        assert normalize_angle(3 * math.pi) == pytest.approx(math.pi)
        assert normalize_angle(-math.pi) == pytest.approx(math.pi)
        assert normalize_angle(0.3 + 4 * math.pi) == pytest.approx(0.3)


class TestCompose:
    def test_identity(self):
        p = Pose2D(1.2, -0.7, 0.4)
        q = compose(Pose2D(), p)
        assert (q.x, q.y, q.theta) == pytest.approx((p.x, p.y, p.theta))

    def test_quarter_turn(self):
        q = compose(Pose2D(1.0, 0.0, math.pi / 2), Pose2D(1.0, 0.0, 0.0))
        assert (q.x, q.y, q.theta) == pytest.approx((1.0, 1.0, math.pi / 2))

    def test_matches_matrix_oracle(self):
        q = compose(Pose2D(0.5, 0.2, 0.3), Pose2D(0.1, 0.0, 0.1))
        ox, oy, ot = homogeneous_compose((0.5, 0.2, 0.3), (0.1, 0.0, 0.1))
        assert (q.x, q.y, q.theta) == pytest.approx((ox, oy, ot), abs=1e-12)

    def test_associative_on_deterministic_triples(self):
        triples = [
            (Pose2D(0.3, -1.0, 0.7), Pose2D(1.1, 0.2, -2.4), Pose2D(-0.5, 0.9, 3.0)),
            (Pose2D(2.0, 2.0, -3.0), Pose2D(0.0, 0.1, 0.2), Pose2D(0.4, -0.4, 2.9)),
            (Pose2D(-1.5, 0.6, 1.2), Pose2D(0.7, 0.7, -0.9), Pose2D(1.3, -2.2, 0.05)),
        ]
        for a, b, c in triples:
            left = compose(compose(a, b), c)
            right = compose(a, compose(b, c))
            assert (left.x, left.y) == pytest.approx((right.x, right.y), abs=1e-9)
            assert normalize_angle(left.theta - right.theta) == pytest.approx(0.0, abs=1e-9)

    def test_inverse_is_identity(self):
        p = Pose2D(1.7, -0.3, 2.1)
        q = compose(p, inverse(p))
        assert (q.x, q.y, q.theta) == pytest.approx((0.0, 0.0, 0.0), abs=1e-9)

    def test_theta_normalized(self):
        q = compose(Pose2D(0, 0, 3.0), Pose2D(0, 0, 3.0))
        assert -math.pi < q.theta <= math.pi


class TestObjectClass:
    def test_defaults(self):
        assert default_class("box_cardboard").move_cost == 10
        assert default_class("trash_can").move_cost == 25
        assert default_class("food_trolley").move_cost == 40
        assert not default_class("vase_glass").movable
        assert default_class("vase_glass").move_cost == FATAL
        assert not default_class("unknown").movable

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            ObjectClass("sofa", True, 10)

    def test_unmovable_must_be_fatal(self):
        with pytest.raises(ValueError):
            ObjectClass("vase_glass", False, 10)

    def test_vase_cannot_be_movable(self):
        with pytest.raises(ValueError):
            ObjectClass("vase_glass", True, 10)


class TestObjectInstance:
    def test_validates_footprint(self):
        with pytest.raises(ValueError):
            make_box(footprint=((0, 0), (1, 0)))
        with pytest.raises(ValueError):  # clockwise
            make_box(footprint=((0, 0), (0, 1), (1, 1), (1, 0)))
        with pytest.raises(ValueError):  # non-convex
            make_box(footprint=((0, 0), (2, 0), (2, 2), (1, 0.5), (0, 2)))

    def test_validates_physics(self):
        with pytest.raises(ValueError):
            make_box(mass=0.0)
        with pytest.raises(ValueError):
            make_box(mu=0.0)
        with pytest.raises(ValueError):
            make_box(mu=2.5)


class TestFootprintWorld:
    def test_identity_pose(self):
        for got, want in zip(footprint_world(make_box()), UNIT_SQUARE):
            assert got == pytest.approx(want)

    def test_translation(self):
        out = footprint_world(make_box(pose=Pose2D(1.0, 1.0, 0.0)))
        expected = [(x + 1.0, y + 1.0) for x, y in UNIT_SQUARE]
        for got, want in zip(out, expected):
            assert got == pytest.approx(want)

    def test_rotation_matches_matrix_oracle(self):
        out = footprint_world(make_box(pose=Pose2D(0.0, 0.0, math.pi / 4)))
        expected = rotation_apply(math.pi / 4, UNIT_SQUARE)
        for got, want in zip(out, expected):
            assert got == pytest.approx(want, abs=1e-12)

    def test_preserves_area(self):
        obj = make_box(pose=Pose2D(3.0, -2.0, 1.234))
        assert polygon_area(footprint_world(obj)) == pytest.approx(
            polygon_area(UNIT_SQUARE), abs=1e-9)
