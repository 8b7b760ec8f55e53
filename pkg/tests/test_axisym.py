import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import convexflow as cf
from convexflow.axisym import AxisymSupport, meridian_points, polar_angles
from convexflow.errors import ConvexityLost, InvalidInitialData, SpecError

# closed forms for the prolate spheroid with equatorial semi-axis 1 and
# polar semi-axis 2: V = (4/3) pi a^2 c, S = 2 pi a^2 (1 + (c/(a e)) asin e)
SPHEROID_VOLUME = 8.0 * np.pi / 3.0
SPHEROID_AREA = 21.478435327883737


def _spheroid_area_oracle(a: float, c: float) -> float:
    e = np.sqrt(1.0 - (a / c) ** 2)
    return 2.0 * np.pi * a * a * (1.0 + (c / (a * e)) * np.arcsin(e))


@st.composite
def convex_perturbed_surface(draw, n=256):
    harmonics = draw(st.lists(
        st.tuples(st.sampled_from([2, 4, 6]), st.floats(-1.0, 1.0)),
        min_size=1, max_size=2))
    budget = sum(abs(eps) * (m * m - 1) for m, eps in harmonics)
    scale = 0.5 / max(budget, 1e-9)
    spec = "perturbed:1;" + ",".join(
        f"{m}:{eps * min(scale, 0.15)}" for m, eps in harmonics)
    return cf.make_surface(spec, n)


def test_ball_profile_and_measures():
    s = cf.make_surface("ball:1", 256)
    r1, r2, H = cf.principal_radii(s)
    assert np.all(r1 == 1.0) and np.all(r2 == 1.0) and np.all(H == 2.0)
    area, volume = cf.surface_measures(s)
    # the half-period midpoint rule carries a pi^2/(24 N^2) bias, ~6.3e-6 here
    assert area == pytest.approx(4.0 * np.pi, rel=2e-5)
    assert volume == pytest.approx(4.0 * np.pi / 3.0, rel=2e-5)


def test_ball_radius_two_scaling():
    area, volume = cf.surface_measures(cf.make_surface("ball:2", 256))
    assert area == pytest.approx(16.0 * np.pi, rel=2e-5)
    assert volume == pytest.approx(32.0 * np.pi / 3.0, rel=2e-5)


def test_spheroid_principal_radii():
    s = cf.make_surface("spheroid:1,2", 512)
    r1, r2, _ = cf.principal_radii(s)
    # pole radius a^2/c = 1/2 for both directions
    assert r1[0] == pytest.approx(0.5, abs=1e-4)
    assert r2[0] == pytest.approx(0.5, abs=1e-4)
    # equator: r1 = c^2/a = 4, r2 = a = 1 (nearest cell-centered node)
    j = 256
    assert r1[j] == pytest.approx(4.0, rel=1e-4)
    assert r2[j] == pytest.approx(1.0, rel=1e-4)


def test_spheroid_measures_against_closed_forms():
    assert _spheroid_area_oracle(1.0, 2.0) == pytest.approx(SPHEROID_AREA, abs=1e-12)
    s = cf.make_surface("spheroid:1,2", 512)
    area, volume = cf.surface_measures(s)
    assert area == pytest.approx(SPHEROID_AREA, rel=1e-4)
    assert volume == pytest.approx(SPHEROID_VOLUME, rel=1e-4)


def test_shifted_ball_keeps_unit_radii():
    theta = polar_angles(256)
    s = AxisymSupport(u=1.0 + 0.3 * np.cos(theta))
    r1, r2, _ = cf.principal_radii(s)
    assert np.abs(r1 - 1.0).max() <= 1e-8
    assert np.abs(r2 - 1.0).max() <= 1e-8


def test_make_surface_support_values():
    s = cf.make_surface("spheroid:1,2", 256)
    assert s.u[0] == pytest.approx(2.0, abs=1e-4)     # near the pole
    assert s.u[127] == pytest.approx(1.0, abs=1e-4)   # near the equator
    assert np.all(cf.make_surface("ball:1.5", 64).u == 1.5)


def test_make_surface_perturbed_convexity_gate():
    s = cf.make_surface("perturbed:1;2:0.1", 256)     # min r1 = 1 - 0.3 > 0
    r1, _, _ = cf.principal_radii(s)
    # the cell-centered grid sits dtheta/2 off the pole, so the sampled
    # minimum is 0.7 + 0.15 dtheta^2
    assert r1.min() == pytest.approx(0.7, abs=1e-4)
    with pytest.raises(InvalidInitialData):
        cf.make_surface("perturbed:1;2:0.5", 256)


@pytest.mark.parametrize("bad", [
    "ball:0", "spheroid:1", "spheroid:1,-2", "perturbed:1;3:0.1",
    "perturbed:1;1:0.1", "ellipse:2,1",
])
def test_make_surface_rejects_bad_specs(bad):
    with pytest.raises(SpecError):
        cf.make_surface(bad, 64)


def test_convexity_lost_location():
    theta = polar_angles(128)
    with pytest.raises(ConvexityLost):
        cf.principal_radii(AxisymSupport(u=1.0 + 0.5 * np.cos(2 * theta)))


def test_scaling_exact_for_power_of_two():
    s = cf.make_surface("spheroid:1,2", 256)
    doubled = s.with_u(2.0 * s.u)
    r1a, r2a, Ha = cf.principal_radii(s)
    r1b, r2b, Hb = cf.principal_radii(doubled)
    assert np.array_equal(r1b, 2.0 * r1a)
    assert np.array_equal(r2b, 2.0 * r2a)
    assert np.array_equal(Hb, Ha / 2.0)
    m0, m1 = cf.surface_measures(s), cf.surface_measures(doubled)
    assert m1[0] == 4.0 * m0[0]
    assert m1[1] == 8.0 * m0[1]


@settings(max_examples=20, deadline=None)
@given(convex_perturbed_surface(), st.floats(0.2, 5.0))
def test_scaling_equivariance(surface, lam):
    scaled = surface.with_u(lam * surface.u)
    m0, m1 = cf.surface_measures(surface), cf.surface_measures(scaled)
    assert m1[0] == pytest.approx(lam ** 2 * m0[0], rel=1e-12)
    assert m1[1] == pytest.approx(lam ** 3 * m0[1], rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(convex_perturbed_surface(), st.floats(-1.0, 1.0))
def test_axis_translation_equivariance(surface, c):
    theta = polar_angles(surface.N)
    shifted = surface.with_u(surface.u + c * np.cos(theta))
    r1a, r2a, _ = cf.principal_radii(surface)
    r1b, r2b, _ = cf.principal_radii(shifted)
    assert np.abs(r1b - r1a).max() <= 1e-8
    assert np.abs(r2b - r2a).max() <= 1e-8
    assert cf.surface_measures(shifted)[0] == pytest.approx(
        cf.surface_measures(surface)[0], rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(convex_perturbed_surface())
def test_isoperimetric_inequality(surface):
    area, volume = cf.surface_measures(surface)
    iso = area ** 3 / volume ** 2
    assert iso >= 36.0 * np.pi * (1.0 - 1e-6)


def test_refinement_order_at_least_two():
    errs = {}
    for n in (128, 256):
        area, volume = cf.surface_measures(cf.make_surface("spheroid:1,2", n))
        errs[n] = abs(volume - SPHEROID_VOLUME) / SPHEROID_VOLUME
    assert errs[128] / errs[256] >= 3.6


def test_meridian_profile_of_spheroid():
    pts = meridian_points(cf.make_surface("spheroid:1,2", 512))
    # points satisfy s^2/a^2 + z^2/c^2 = 1
    residual = pts[:, 0] ** 2 / 1.0 + pts[:, 1] ** 2 / 4.0 - 1.0
    assert np.abs(residual).max() <= 1e-6
