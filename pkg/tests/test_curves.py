import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import convexflow as cf
from convexflow.curves import SupportCurve, boundary_points, grid_angles
from convexflow.errors import ConvexityLost, InvalidInitialData, SpecError

# independent oracle values (adaptive quadrature of the parametrized ellipse;
# the quadrature code lives in _ellipse_perimeter_oracle below)
ELLIPSE_PERIMETER = 9.688448220547677
ELLIPSE_AREA = 2.0 * np.pi


def _ellipse_perimeter_oracle(a: float, b: float) -> float:
    from scipy.integrate import quad
    val, _ = quad(lambda t: np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2),
                  0.0, 2.0 * np.pi, limit=200)
    return val


@st.composite
def convex_perturbed_curve(draw, n=256):
    harmonics = draw(st.lists(
        st.tuples(st.integers(2, 6), st.floats(-1.0, 1.0)),
        min_size=1, max_size=3))
    budget = sum(abs(eps) * (k * k - 1) for k, eps in harmonics)
    scale = 0.85 / max(budget, 1e-9)
    spec = "perturbed:1;" + ",".join(
        f"{k}:{eps * min(scale, 0.4)}" for k, eps in harmonics)
    return cf.make_curve(spec, n)


def test_unit_circle_profile_and_measures():
    c = cf.make_curve("ball:1", 256)
    rho, H = cf.curvature_profile(c)
    assert np.all(rho == 1.0) and np.all(H == 1.0)
    length, area = cf.curve_measures(c)
    assert length == pytest.approx(2.0 * np.pi, rel=1e-14)
    assert area == pytest.approx(np.pi, rel=1e-14)


def test_ellipse_curvature_endpoints():
    c = cf.make_curve("ellipse:2,1", 256)
    rho, H = cf.curvature_profile(c)
    assert rho[0] == pytest.approx(0.5, abs=1e-6)       # b^2/a at theta = 0
    assert rho[64] == pytest.approx(4.0, abs=1e-4)      # a^2/b at theta = pi/2
    assert H[0] == pytest.approx(2.0, abs=1e-5)


def test_ellipse_measures_against_quadrature_oracle():
    assert _ellipse_perimeter_oracle(2.0, 1.0) == pytest.approx(ELLIPSE_PERIMETER, abs=1e-9)
    c = cf.make_curve("ellipse:2,1", 512)
    length, area = cf.curve_measures(c)
    assert length == pytest.approx(ELLIPSE_PERIMETER, rel=1e-6)
    assert area == pytest.approx(ELLIPSE_AREA, rel=1e-6)


def test_ball_radius_two_measures():
    length, area = cf.curve_measures(cf.make_curve("ball:2", 256))
    assert length == pytest.approx(4.0 * np.pi, rel=1e-14)
    assert area == pytest.approx(4.0 * np.pi, rel=1e-14)


def test_shifted_ball_has_unit_curvature_radius():
    theta = grid_angles(256)
    c = SupportCurve(u=1.0 + 0.3 * np.cos(theta))
    rho, _ = cf.curvature_profile(c)
    assert np.abs(rho - 1.0).max() <= 1e-8


def test_make_curve_support_values():
    c = cf.make_curve("ellipse:2,1", 256)
    assert c.u[0] == pytest.approx(2.0, abs=1e-14)
    assert c.u[64] == pytest.approx(1.0, abs=1e-14)
    assert np.all(cf.make_curve("ball:1.5", 64).u == 1.5)


def test_make_curve_perturbed_convexity_gate():
    ok = cf.make_curve("perturbed:1;2:0.3", 256)       # min rho = 1 - 0.9 > 0
    rho, _ = cf.curvature_profile(ok)
    assert rho.min() == pytest.approx(0.1, abs=1e-6)
    with pytest.raises(InvalidInitialData) as info:
        cf.make_curve("perturbed:1;2:0.4", 256)        # min rho = 1 - 1.2 < 0
    assert info.value.min_radius == pytest.approx(-0.2, abs=1e-6)


@pytest.mark.parametrize("bad", [
    "ball:-1", "ball:x", "ellipse:2", "ellipse:2,0", "perturbed:1",
    "perturbed:1;1:0.1", "perturbed:0;2:0.1", "hexagon:1",
])
def test_make_curve_rejects_bad_specs(bad):
    with pytest.raises(SpecError):
        cf.make_curve(bad, 64)


@pytest.mark.parametrize("n", [32, 100, 63])
def test_grid_size_must_be_power_of_two(n):
    with pytest.raises(ValueError):
        cf.make_curve("ball:1", n)


def test_convexity_lost_carries_location():
    theta = grid_angles(128)
    bad = SupportCurve(u=1.0 + 0.4 * np.cos(2 * theta))
    with pytest.raises(ConvexityLost) as info:
        cf.curvature_profile(bad)
    assert 0 <= info.value.index < 128
    assert info.value.value <= 0.0
    with pytest.raises(ConvexityLost):
        cf.curve_measures(bad)


@settings(max_examples=30, deadline=None)
@given(convex_perturbed_curve(), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_translation_equivariance(curve, c1, c2):
    theta = grid_angles(curve.N)
    shifted = curve.with_u(curve.u + c1 * np.cos(theta) + c2 * np.sin(theta))
    rho0, _ = cf.curvature_profile(curve)
    rho1, _ = cf.curvature_profile(shifted)
    assert np.abs(rho1 - rho0).max() <= 1e-8
    m0 = cf.curve_measures(curve)
    m1 = cf.curve_measures(shifted)
    assert m1[0] == pytest.approx(m0[0], rel=1e-8)
    assert m1[1] == pytest.approx(m0[1], rel=1e-8)


def test_scaling_exact_for_power_of_two():
    c = cf.make_curve("ellipse:2,1", 256)
    doubled = c.with_u(2.0 * c.u)
    rho0, h0 = cf.curvature_profile(c)
    rho1, h1 = cf.curvature_profile(doubled)
    assert np.array_equal(rho1, 2.0 * rho0)
    assert np.array_equal(h1, h0 / 2.0)
    m0, m1 = cf.curve_measures(c), cf.curve_measures(doubled)
    assert m1[0] == 2.0 * m0[0]
    assert m1[1] == 4.0 * m0[1]


@settings(max_examples=30, deadline=None)
@given(convex_perturbed_curve(), st.floats(0.1, 10.0))
def test_scaling_equivariance(curve, lam):
    scaled = curve.with_u(lam * curve.u)
    m0, m1 = cf.curve_measures(curve), cf.curve_measures(scaled)
    assert m1[0] == pytest.approx(lam * m0[0], rel=1e-12)
    assert m1[1] == pytest.approx(lam * lam * m0[1], rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(convex_perturbed_curve())
def test_isoperimetric_inequality(curve):
    length, area = cf.curve_measures(curve)
    iso = length * length / area
    assert iso >= 4.0 * np.pi - 1e-9 * iso


def test_isoperimetric_equality_on_balls():
    length, area = cf.curve_measures(cf.make_curve("ball:1.7", 256))
    assert length * length / area == pytest.approx(4.0 * np.pi, rel=1e-9)


def test_refinement_is_fourth_order():
    errs = {}
    for n in (64, 128, 256):
        _, area = cf.curve_measures(cf.make_curve("ellipse:2,1", n))
        errs[n] = abs(area - ELLIPSE_AREA)
    assert errs[64] / errs[128] >= 10.0
    # the length quadrature is spectrally accurate on smooth data
    length, _ = cf.curve_measures(cf.make_curve("ellipse:2,1", 128))
    assert length == pytest.approx(ELLIPSE_PERIMETER, rel=1e-10)


def test_boundary_points_circle_and_ellipse():
    pts = boundary_points(cf.make_curve("ball:1", 128))
    assert np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0).max() <= 1e-10
    pts = boundary_points(cf.make_curve("ellipse:2,1", 256))
    assert pts[0] == pytest.approx([2.0, 0.0], abs=1e-6)
    assert pts[64] == pytest.approx([0.0, 1.0], abs=1e-6)
