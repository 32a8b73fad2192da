import math

import numpy as np
import pytest

from eikmarch.factors import (
    AT_CENTER,
    Cone,
    ConePlane,
    ConeSector,
    ConeTwoPlanes,
    MinOfCones,
    SumOfCones,
    ZeroFactor,
    build_corner_factor,
    build_permeable_corner_factor,
    corner_faces,
    fan_sector_angle,
    quadrant_arc_of,
    refract_angles,
    sector_classify,
    snell_angles,
    snell_beta,
)

S = math.sqrt(0.5)
DESK_CORNER = (0.2, 0.2)
DESK_A = (-S, -S)  # arrival direction from a source at the origin


def desk_solid_fan():
    # obstacle occupies the NW quadrant at the corner: arc (pi/2, pi)
    return build_corner_factor(DESK_CORNER, DESK_A, quadrant_arc_of(1), 1.0)


def desk_permeable_fan(upsilon=math.sqrt(5.0) / 2.0):
    return build_permeable_corner_factor(DESK_CORNER, DESK_A,
                                         corner_faces(1), upsilon, 1.0)


def fd_gradient(factor, x, y, eps=1e-6):
    tx = (factor.evaluate(x + eps, y)[0] - factor.evaluate(x - eps, y)[0])
    ty = (factor.evaluate(x, y + eps)[0] - factor.evaluate(x, y - eps)[0])
    return tx / (2.0 * eps), ty / (2.0 * eps)


class TestEvaluate:
    def test_cone(self):
        t, g = Cone((0.0, 0.0), 1.0).evaluate(0.3, 0.4)
        assert t == 0.5
        assert g == (0.6, 0.8)

    def test_cone_speed_scales_value_and_gradient(self):
        t, g = Cone((0.0, 0.0), 2.0).evaluate(0.3, 0.4)
        assert t == 0.25
        assert g == (0.3, 0.4)

    def test_zero(self):
        assert ZeroFactor().evaluate(5.0, -2.0) == (0.0, (0.0, 0.0))

    def test_cone_center_has_zero_gradient(self):
        t, g = Cone((0.3, 0.3), 1.0).evaluate(0.3, 0.3)
        assert (t, g) == (0.0, (0.0, 0.0))

    def test_min_of_cones_nearer_wins(self):
        mc = MinOfCones((Cone((0.0, 0.0), 1.0), Cone((0.8, 0.0), 1.0)))
        t, g = mc.evaluate(0.1, 0.0)
        assert t == pytest.approx(0.1)
        assert g == (1.0, 0.0)

    def test_sum_of_cones_adds(self):
        sc = SumOfCones((Cone((0.0, 0.0), 1.0), Cone((1.0, 0.0), 2.0)))
        t, _ = sc.evaluate(0.4, 0.0)
        assert t == pytest.approx(0.4 + 0.6 / 2.0)

    def test_cone_rejects_bad_speed(self):
        with pytest.raises(ValueError):
            Cone((0.0, 0.0), 0.0)

    def test_empty_cone_list_rejected(self):
        with pytest.raises(ValueError):
            MinOfCones(()).pack()

    def test_cone_list_capacity(self):
        many = tuple(Cone((0.1 * k, 0.0), 1.0) for k in range(7))
        with pytest.raises(ValueError):
            MinOfCones(many).pack()

    def test_non_unit_direction_rejected(self):
        with pytest.raises(ValueError):
            ConePlane((0.0, 0.0), (0.5, 0.5), (0.0, 1.0), 1.0, (0.0, 1.0))


class TestSectorClassify:
    DIRS = [(S, S), (-S, S)]  # boundaries at 45 and 135 degrees

    def test_between_boundaries(self):
        assert sector_classify((0.2, 0.4), DESK_CORNER, self.DIRS) == 0

    def test_outside_first_sector(self):
        assert sector_classify((0.5, 0.2), DESK_CORNER, self.DIRS) == 1

    def test_seam_point_takes_lower_sector(self):
        assert sector_classify((0.3, 0.3), DESK_CORNER, self.DIRS) == 0

    def test_center_is_special(self):
        assert sector_classify(DESK_CORNER, DESK_CORNER, self.DIRS) == AT_CENTER

    def test_single_boundary_wraps_whole_circle(self):
        for p in ((1.0, 0.0), (0.0, -1.0), (-0.3, 0.2)):
            assert sector_classify(p, (0.0, 0.0), [(1.0, 0.0)]) == 0


class TestSnell:
    def test_interior_refraction(self):
        assert snell_beta(math.pi / 4, math.sqrt(5.0) / 2.0) == pytest.approx(
            math.pi / 3, abs=1e-14)

    def test_grazing_exit_is_exact(self):
        assert snell_beta(0.3, 1.5) == 0.5 * math.pi

    def test_unit_ratio_is_complementary_exactly(self):
        assert snell_beta(0.4, 1.0) == 0.5 * math.pi - 0.4

    def test_rejects_speedup(self):
        with pytest.raises(ValueError):
            snell_beta(0.3, 0.9)

    def test_rejects_bad_angle(self):
        with pytest.raises(ValueError):
            snell_beta(-0.1, 1.5)
        with pytest.raises(ValueError):
            snell_beta(0.5 * math.pi, 1.5)

    def test_fan_angle(self):
        assert fan_sector_angle(math.pi / 4, math.pi / 3) == pytest.approx(
            math.pi / 12, abs=1e-15)
        assert fan_sector_angle(0.3, 0.5 * math.pi) == pytest.approx(
            0.3, abs=1e-15)

    def test_no_fan_at_unit_ratio_exactly(self):
        # beta = pi/2 - alpha makes the width cancel to an exact zero
        for alpha in (0.1, 0.4, 0.9, 1.3):
            assert fan_sector_angle(alpha, snell_beta(alpha, 1.0)) == 0.0

    def test_negative_width_clamps_to_zero(self):
        assert fan_sector_angle(0.1, 0.2) == 0.0

    def test_fan_fills_to_face_at_high_ratio(self):
        # ups >= sqrt(2) forces beta = pi/2, so delta collapses to alpha
        # up to one rounding of pi/2; exact in the upper Sterbenz range
        rng = np.random.default_rng(8)
        tol = math.ulp(0.5 * math.pi)
        for ups in (math.sqrt(2.0), 1.7, 3.0):
            for alpha in rng.uniform(1e-9, 0.5 * math.pi - 1e-9, 500):
                assert abs(fan_sector_angle(alpha, snell_beta(alpha, ups))
                           - alpha) <= tol
        for alpha in rng.uniform(0.25 * math.pi, 0.5 * math.pi - 1e-9, 500):
            assert fan_sector_angle(alpha, snell_beta(alpha, 2.0)) == alpha

    def test_snell_angles_bundle(self):
        sa = snell_angles(math.pi / 4, math.sqrt(5.0) / 2.0)
        assert sa.alpha == math.pi / 4
        assert sa.beta == pytest.approx(math.pi / 3, abs=1e-14)
        assert sa.delta == pytest.approx(math.pi / 12, abs=1e-14)


class TestRefraction:
    def test_slab_crossing(self):
        theta2, theta3, tir = refract_angles(math.pi / 4, math.sqrt(5.0) / 2.0)
        assert theta2 == pytest.approx(math.asin(math.sin(math.pi / 4)
                                                 / (math.sqrt(5.0) / 2.0)))
        assert theta3 == pytest.approx(math.pi / 3, abs=1e-14)
        assert not tir

    def test_normal_incidence_at_critical_ratio_grazes(self):
        assert refract_angles(0.0, math.sqrt(2.0)) == (0.0, 0.5 * math.pi, True)

    def test_unit_ratio_passes_straight_through(self):
        theta2, theta3, tir = refract_angles(0.4, 1.0)
        assert theta2 == pytest.approx(0.4, abs=1e-15)
        assert theta3 == pytest.approx(0.5 * math.pi - 0.4, abs=1e-15)
        assert not tir

    def test_rejects_speedup(self):
        with pytest.raises(ValueError):
            refract_angles(0.3, 0.5)

    def test_random_snell_chain(self):
        # sin(t1) = ups sin(t2) and sin(t3) = ups cos(t2) on every
        # non-grazing draw
        rng = np.random.default_rng(17)
        for _ in range(1000):
            t1 = rng.uniform(0.0, 0.5 * math.pi - 1e-6)
            ups = 1.0 + rng.uniform(0.0, 1.5)
            t2, t3, tir = refract_angles(t1, ups)
            assert math.sin(t1) == pytest.approx(ups * math.sin(t2), abs=1e-12)
            if not tir:
                assert math.sin(t3) == pytest.approx(ups * math.cos(t2),
                                                     abs=1e-12)
            else:
                assert t3 == 0.5 * math.pi
                assert ups * math.cos(t2) >= 1.0 - 1e-12


class TestSolidCornerFan:
    def test_plane_branch(self):
        t, g = desk_solid_fan().evaluate(0.5, 0.2)
        assert t == pytest.approx(0.3 / math.sqrt(2.0))
        assert g == pytest.approx((S, S))

    def test_cone_branch(self):
        t, g = desk_solid_fan().evaluate(0.2, 0.4)
        assert t == pytest.approx(0.2)
        assert g == pytest.approx((0.0, 1.0))

    def test_continuous_along_arrival_ray(self):
        # (0.3, 0.3) extends -a; cone and plane formulas agree there
        t, _ = desk_solid_fan().evaluate(0.3, 0.3)
        assert t == pytest.approx(0.1 * math.sqrt(2.0), abs=1e-15)

    def test_bisector_points_into_obstacle(self):
        fan = desk_solid_fan()
        assert fan.c == pytest.approx((-S, S))

    def test_regular_corner_rejected(self):
        # -a pointing into the obstacle quadrant means no rarefaction
        with pytest.raises(ValueError):
            build_corner_factor(DESK_CORNER, (S, -S), quadrant_arc_of(1), 1.0)

    def test_shadow_only_variant_vanishes_outside(self):
        fan = desk_solid_fan()
        diag = ConeSector(fan.center, fan.f, fan.arc)
        assert diag.evaluate(0.2, 0.4)[0] == pytest.approx(0.2)
        assert diag.evaluate(0.5, 0.2)[0] == 0.0


class TestPermeableCornerFan:
    def test_desk_angles(self):
        fan = desk_permeable_fan()
        assert fan.alpha == pytest.approx(math.pi / 4, abs=1e-12)
        assert fan.beta == pytest.approx(math.pi / 3, abs=1e-12)
        assert fan.delta == pytest.approx(math.pi / 12, abs=1e-12)

    def test_refracted_direction(self):
        fan = desk_permeable_fan()
        assert fan.b[0] == pytest.approx(-0.5, abs=1e-12)
        assert fan.b[1] == pytest.approx(-math.sqrt(3.0) / 2.0, abs=1e-12)

    def test_continuous_along_refracted_ray(self):
        fan = desk_permeable_fan()
        t, _ = fan.evaluate(0.2 + 0.1 * 0.5, 0.2 + 0.1 * math.sqrt(3.0) / 2.0)
        assert t == pytest.approx(0.1, abs=1e-14)

    def test_jump_hidden_on_forward_ray(self):
        # both plane branches along +a, hand-evaluated: the refracted
        # plane gives -0.1 cos(pi/12), the arrival plane -0.1
        fan = desk_permeable_fan()
        t_on, _ = fan.evaluate(0.2 + 0.1 * DESK_A[0], 0.2 + 0.1 * DESK_A[1])
        assert t_on == pytest.approx(-0.1 * math.cos(math.pi / 12), abs=1e-12)
        eps = 1e-7  # one step ccw past +a falls into the arrival plane
        ang = math.atan2(DESK_A[1], DESK_A[0]) + eps
        t_past, _ = fan.evaluate(0.2 + 0.1 * math.cos(ang),
                                 0.2 + 0.1 * math.sin(ang))
        assert t_past == pytest.approx(-0.1, abs=1e-6)

    def test_unit_ratio_rejected(self):
        with pytest.raises(ValueError):
            desk_permeable_fan(upsilon=1.0)

    def test_normal_arrival_is_degenerate(self):
        with pytest.raises(ValueError):
            build_permeable_corner_factor(DESK_CORNER, (0.0, -1.0),
                                          corner_faces(1),
                                          math.sqrt(5.0) / 2.0, 1.0)


def _seam_gap(factor, theta, r=0.1, gap=1e-9):
    cx, cy = factor.center
    lo = factor.evaluate(cx + r * math.cos(theta - gap),
                         cy + r * math.sin(theta - gap))[0]
    hi = factor.evaluate(cx + r * math.cos(theta + gap),
                         cy + r * math.sin(theta + gap))[0]
    return abs(hi - lo)


class TestSeamsAndGradients:
    def test_solid_fan_seams(self):
        fan = desk_solid_fan()
        assert _seam_gap(fan, 0.25 * math.pi) < 1e-7   # along -a
        assert _seam_gap(fan, 0.75 * math.pi) > 1e-3   # hidden, along c

    def test_permeable_fan_seams(self):
        fan = desk_permeable_fan()
        assert _seam_gap(fan, 0.25 * math.pi) < 1e-7          # along -a
        assert _seam_gap(fan, math.pi / 3.0) < 1e-7           # along -b
        assert _seam_gap(fan, 1.25 * math.pi) > 1e-3          # hidden, +a

    SEAM_ANGLES = {
        "solid": (0.25 * math.pi, 0.75 * math.pi),
        "permeable": (0.25 * math.pi, math.pi / 3.0, 1.25 * math.pi),
        "cone": (),
    }

    def _factors(self):
        return {
            "solid": desk_solid_fan(),
            "permeable": desk_permeable_fan(),
            "cone": Cone(DESK_CORNER, 1.3),
        }

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(23)
        for name, fan in self._factors().items():
            seams = self.SEAM_ANGLES[name]
            cx, cy = fan.center
            n = 0
            while n < 1000:
                r = rng.uniform(0.05, 0.4)
                th = rng.uniform(0.0, 2.0 * math.pi)
                if any(abs((th - s + math.pi) % (2.0 * math.pi) - math.pi)
                       < 0.05 for s in seams):
                    continue
                x = cx + r * math.cos(th)
                y = cy + r * math.sin(th)
                _, g = fan.evaluate(x, y)
                fx, fy = fd_gradient(fan, x, y)
                assert g[0] == pytest.approx(fx, rel=1e-5, abs=1e-8)
                assert g[1] == pytest.approx(fy, rel=1e-5, abs=1e-8)
                n += 1

    def test_gradient_norm_inverts_speed(self):
        # every branch solves the constant-speed equation |grad T| F = 1
        rng = np.random.default_rng(31)
        factors = [desk_solid_fan(), desk_permeable_fan(),
                   Cone((0.1, -0.2), 2.5)]
        for fan in factors:
            f = fan.f
            cx, cy = fan.center
            for _ in range(300):
                r = rng.uniform(1e-3, 0.5)
                th = rng.uniform(0.0, 2.0 * math.pi)
                _, g = fan.evaluate(cx + r * math.cos(th),
                                    cy + r * math.sin(th))
                assert math.hypot(*g) * f == pytest.approx(1.0, abs=1e-12)
