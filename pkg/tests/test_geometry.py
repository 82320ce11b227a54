import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transdepth.geometry import (
    BehindCameraError,
    DepthMap,
    DisparityDivergenceError,
    FoePoint,
    GeometryError,
    GeometryViolationError,
    PinholeCamera,
    Translation,
    ZeroTranslationError,
    analytic_flow,
    depth_from_disparity,
    depth_grid_from_disparity,
    disparity_from_depth,
    foe_from_translation,
    project_point,
)


CAM64 = PinholeCamera.from_fov(64, 64)


def appendix_flow(f, u0, v0, X, Y, Z, mx, my, mz):
    """Independent oracle: raw projective difference u_B - u_A for a
    point at (X, Y, Z) in the reference frame, displacement (mx,my,mz)
    from the other frame to the reference frame."""
    du = f * (X / Z - (X + mx) / (Z + mz))
    dv = f * (Y / Z - (Y + my) / (Z + mz))
    return du, dv


class TestCamera:
    def test_fov90_focal_is_half_width(self):
        assert CAM64.f == 32.0
        assert CAM64.u0 == 32.0 and CAM64.v0 == 32.0

    def test_invalid_focal(self):
        with pytest.raises(GeometryError):
            PinholeCamera(f=0, u0=16, v0=16, width=32, height=32)

    def test_principal_point_bounds(self):
        with pytest.raises(GeometryError):
            PinholeCamera(f=16, u0=40, v0=16, width=32, height=32)


class TestProjectPoint:
    def test_optical_axis_hits_principal_point(self):
        cam = PinholeCamera(f=32, u0=32, v0=32, width=64, height=64)
        assert project_point(cam, (0, 0, 5)) == (32, 32)

    def test_substitution(self):
        cam = PinholeCamera(f=32, u0=32, v0=32, width=64, height=64)
        assert project_point(cam, (5, 0, 5)) == (64, 32)

    def test_behind_camera(self):
        cam = PinholeCamera(f=1, u0=0, v0=0, width=2, height=2)
        with pytest.raises(BehindCameraError):
            project_point(cam, (0, 0, -1))


class TestFoe:
    def test_forward_motion_foe_at_principal_point(self):
        cam = PinholeCamera(f=32, u0=32, v0=32, width=64, height=64)
        foe = foe_from_translation(cam, Translation((0, 0, 1)))
        assert foe.is_finite
        assert tuple(foe.uv) == (32, 32)

    def test_oblique_motion(self):
        cam = PinholeCamera(f=32, u0=32, v0=32, width=64, height=64)
        foe = foe_from_translation(cam, Translation((1, 0, 1)))
        assert tuple(foe.uv) == (64, 32)

    def test_lateral_motion_at_infinity(self):
        foe = foe_from_translation(CAM64, Translation((1, 0, 0)))
        assert not foe.is_finite
        assert np.allclose(foe.direction, (1, 0))

    def test_zero_translation_rejected(self):
        with pytest.raises(ZeroTranslationError):
            Translation((0, 0, 0))

    def test_norm_invariant(self):
        t = Translation((3, 4, 12))
        assert t.V == pytest.approx(13.0, rel=1e-9)


class TestAnalyticFlow:
    def test_forward_oblique_pixel(self):
        # FOE at (1, 0), mz = 1, pixel (3, 0) at depth 9 -> flow (0.2, 0)
        cam = PinholeCamera(f=1, u0=0, v0=0, width=4, height=1)
        t = Translation((1, 0, 1))
        z = np.full((1, 4), 9.0)
        flow = analytic_flow(cam, z, t)
        # pixel centers are at u = 2.5 and u = 3.5; evaluate the appendix
        # system directly at both
        for col in range(4):
            u = col + 0.5
            X = (u - 0) * 9.0 / 1.0
            du, dv = appendix_flow(1, 0, 0, X, 4.5 * 9 / 1, 9.0, 1, 0, 1)
            assert flow.du[0, col] == pytest.approx(du, abs=1e-12)
        # and the exact spec point P=(3,0), via the closed form
        assert 1 / (9 + 1) * (3 - 1) == pytest.approx(0.2)

    def test_pixel_at_foe_has_zero_flow(self):
        t = Translation((0, 0, 1))
        z = np.full((64, 64), 10.0)
        flow = analytic_flow(CAM64, z, t)
        # FOE is at (32, 32), between pixel centers; the closest centers
        # have flow magnitude ~ mz/(Z+mz) * 0.7
        foe = foe_from_translation(CAM64, t)
        r = np.hypot(*(g - c for g, c in zip(CAM64.pixel_grid(), foe.uv)))
        np.testing.assert_allclose(flow.disparity(), 1 / 11 * r, rtol=1e-12)

    def test_lateral_limit_magnitude_and_direction(self):
        # m = (0.3, 0, 0), f = 32, Z = 4.8: |flow| = 2 px everywhere,
        # pointing opposite the displacement (appendix limit as mz -> 0).
        t = Translation((0.3, 0, 0))
        z = np.full((8, 8), 4.8)
        cam = PinholeCamera(f=32, u0=4, v0=4, width=8, height=8)
        flow = analytic_flow(cam, z, t)
        np.testing.assert_allclose(flow.du, -2.0, rtol=1e-12)
        np.testing.assert_allclose(flow.dv, 0.0, atol=1e-12)
        # agreement with the finite branch at tiny mz
        t_eps = Translation((0.3, 0, 1e-9))
        flow_eps = analytic_flow(cam, z, t_eps)
        np.testing.assert_allclose(flow_eps.du, flow.du, rtol=1e-6)

    def test_masks_points_passing_behind_camera(self):
        cam = PinholeCamera.from_fov(4, 4)
        t = Translation((0, 0, -2.0))
        z = np.full((4, 4), 1.5)  # Z + mz < 0
        flow = analytic_flow(cam, z, t)
        assert not flow.valid.any()

    def test_shape_mismatch_rejected(self):
        with pytest.raises(GeometryError):
            analytic_flow(CAM64, np.ones((4, 4)), Translation((0, 0, 1)))

    def test_collinearity_with_foe_rays(self):
        rng = np.random.default_rng(0)
        z = rng.uniform(2.0, 50.0, size=(64, 64))
        t = Translation((0.2, -0.1, 0.3))
        flow = analytic_flow(CAM64, z, t)
        foe = foe_from_translation(CAM64, t)
        u, v = CAM64.pixel_grid()
        ru, rv = u - foe.uv[0], v - foe.uv[1]
        cross = ru * flow.dv - rv * flow.du
        bound = 1e-9 * np.hypot(flow.du, flow.dv) * np.hypot(ru, rv)
        assert (np.abs(cross) <= bound + 1e-15).all()


class TestDisparityDepth:
    def test_disparity_example(self):
        cam = PinholeCamera(f=1, u0=0, v0=0, width=4, height=4)
        d = disparity_from_depth(cam, (3, 0), 9.0, Translation((1, 0, 1)))
        assert d == pytest.approx(0.2, rel=1e-12)

    def test_lateral_disparity(self):
        cam = PinholeCamera(f=32, u0=16, v0=16, width=32, height=32)
        d = disparity_from_depth(cam, (3, 0), 4.8, Translation((0.3, 0, 0)))
        assert d == pytest.approx(2.0, rel=1e-12)

    def test_disparity_zero_at_foe(self):
        cam = PinholeCamera(f=1, u0=0, v0=0, width=4, height=4)
        d = disparity_from_depth(cam, (1, 0), 7.0, Translation((1, 0, 1)))
        assert d == 0.0

    def test_depth_recovery_example(self):
        cam = PinholeCamera(f=1, u0=0, v0=0, width=4, height=4)
        z = depth_from_disparity(
            cam, (3, 0), 0.2, FoePoint.finite(1, 0), V=math.sqrt(2)
        )
        assert z == pytest.approx(9.0, rel=1e-12)

    def test_lateral_depth_recovery(self):
        cam = PinholeCamera(f=32, u0=16, v0=16, width=32, height=32)
        z = depth_from_disparity(
            cam, (3, 0), 2.0, FoePoint.at_infinity((1, 0)), V=0.3
        )
        assert z == pytest.approx(4.8, rel=1e-12)

    def test_zero_disparity_diverges(self):
        with pytest.raises(DisparityDivergenceError):
            depth_from_disparity(CAM64, (3, 0), 0.0, FoePoint.finite(1, 0), V=1.0)

    def test_impossible_disparity(self):
        cam = PinholeCamera(f=1, u0=0, v0=0, width=4, height=4)
        with pytest.raises(GeometryViolationError):
            depth_from_disparity(cam, (3, 0), 3.0, FoePoint.finite(1, 0), V=1.0)

    def test_behind_camera_disparity(self):
        with pytest.raises(BehindCameraError):
            disparity_from_depth(CAM64, (3, 0), 1.0, Translation((0, 0, -2)))


@st.composite
def round_trip_case(draw):
    f = draw(st.floats(8.0, 256.0))
    w = h = 64
    u0 = draw(st.floats(16.0, 48.0))
    v0 = draw(st.floats(16.0, 48.0))
    cam = PinholeCamera(f=f, u0=u0, v0=v0, width=w, height=h)
    mx = draw(st.floats(-2.0, 2.0))
    my = draw(st.floats(-2.0, 2.0))
    mz = draw(st.floats(0.01, 2.0))  # expansion case: mz > 0
    Z = draw(st.floats(0.5, 150.0))
    u = draw(st.floats(0.0, 64.0))
    v = draw(st.floats(0.0, 64.0))
    return cam, Translation((mx, my, mz)), (u, v), Z


class TestRoundTrip:
    @settings(max_examples=300, deadline=None)
    @given(round_trip_case())
    def test_depth_disparity_round_trip(self, case):
        cam, t, P, Z = case
        foe = foe_from_translation(cam, t)
        r = math.hypot(P[0] - foe.uv[0], P[1] - foe.uv[1])
        if r < 1e-6:
            return  # at the FOE the disparity vanishes
        d = disparity_from_depth(cam, P, Z, t)
        z = depth_from_disparity(cam, P, d, foe, t.V)
        assert z == pytest.approx(Z, rel=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(8.0, 256.0),
        st.floats(-2.0, 2.0),
        st.floats(-2.0, 2.0),
        st.floats(0.5, 150.0),
    )
    def test_lateral_round_trip(self, f, mx, my, Z):
        if mx == 0 and my == 0:
            return
        cam = PinholeCamera(f=f, u0=32, v0=32, width=64, height=64)
        t = Translation((mx, my, 0.0))
        d = disparity_from_depth(cam, (10.0, 20.0), Z, t)
        foe = foe_from_translation(cam, t)
        z = depth_from_disparity(cam, (10.0, 20.0), d, foe, t.V)
        assert z == pytest.approx(Z, rel=1e-9)

    def test_lateral_consistency_of_finite_branch(self):
        # finite-FOE branch at mz = 1e-6 * V agrees with f*V/disparity
        V = 0.5
        mz = 1e-6 * V
        mxy = math.sqrt(V**2 - mz**2)
        t = Translation((mxy, 0, mz))
        cam = CAM64
        Z = 12.0
        P = (40.0, 32.0)
        d = disparity_from_depth(cam, P, Z, t)
        foe = foe_from_translation(cam, t)
        z_finite = depth_from_disparity(cam, P, d, foe, V)
        z_lateral = cam.f * V / d
        assert z_finite == pytest.approx(z_lateral, rel=1e-4)


class TestDivergenceSensitivity:
    def test_noise_amplification_near_foe(self):
        # fixed disparity error eps, fixed true depth: the depth error at
        # 1 px from the FOE dwarfs the error at 32 px from it
        cam = CAM64
        t = Translation((0, 0, 1.0))
        foe = foe_from_translation(cam, t)
        Z = 5.0
        eps = 0.1

        def depth_error(r_px, noise):
            P = (foe.uv[0] + r_px, foe.uv[1])
            d = disparity_from_depth(cam, P, Z, t)
            z_noisy = depth_from_disparity(cam, P, d + noise, foe, t.V)
            return abs(z_noisy - Z)

        assert depth_error(1.0, eps) >= 10.0 * depth_error(32.0, eps)
        # underestimated disparity blows depth up without bound
        assert depth_error(1.0, -eps) > Z


class TestDepthGrid:
    def test_matches_scalar_calls(self):
        rng = np.random.default_rng(3)
        t = Translation((0.1, 0.05, 0.4))
        foe = foe_from_translation(CAM64, t)
        z_true = rng.uniform(1.0, 80.0, size=(64, 64))
        flow = analytic_flow(CAM64, z_true, t)
        depth, valid = depth_grid_from_disparity(CAM64, flow.disparity(), foe, t.V)
        u, v = CAM64.pixel_grid()
        for (i, j) in [(0, 0), (13, 50), (31, 32), (63, 63)]:
            d = flow.disparity()[i, j]
            expected = depth_from_disparity(CAM64, (u[i, j], v[i, j]), d, foe, t.V)
            assert depth[i, j] == pytest.approx(expected, rel=1e-12)
            assert valid[i, j]

    def test_min_disparity_masks(self):
        t = Translation((0, 0, 0.3))
        foe = foe_from_translation(CAM64, t)
        disparity = np.full((64, 64), 0.01)
        depth, valid = depth_grid_from_disparity(
            CAM64, disparity, foe, t.V, min_disparity=0.05
        )
        assert not valid.any()
        assert np.isnan(depth).all()

    def test_depthmap_wrapper(self):
        dm = DepthMap(np.ones((4, 4)))
        assert dm.width == 4 and dm.height == 4
        assert dm.valid.all()
