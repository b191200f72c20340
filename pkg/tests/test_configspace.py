import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bulkedge.configspace import (Configuration, chart_select, default_chart_candidates, equivalence_residual,
                                  gl_equivalence, mobius_apply, restrict, restrict_outside, validate)
from bulkedge.contours import Contour, Region
from bulkedge.errors import ChartError, DomainError, FormatError
from bulkedge.matpoly import MatrixLaurentPoly, MobiusTransform, companion
from helpers import complex_normal, random_poly

seeds = st.integers(0, 2 ** 32 - 1)


def random_configuration(rng, r, d):
    return Configuration(complex_normal(rng, r, r), complex_normal(rng, r, d))


def conjugated(cfg, g):
    return Configuration(g @ cfg.A @ np.linalg.inv(g), g @ cfg.iota, cfg.region)


def test_shapes_are_checked():
    with pytest.raises(FormatError):
        Configuration(np.zeros((2, 3)), np.zeros((2, 1)))
    with pytest.raises(FormatError):
        Configuration(np.zeros((2, 2)), np.zeros((3, 1)))
    empty = Configuration.empty(3)
    assert (empty.r, empty.d) == (0, 3)
    assert validate(empty).ok


def test_validate_detects_uncontrollable_pairs():
    good = Configuration(np.diag([0.1, 0.2]), np.ones((2, 1)))
    assert validate(good).ok
    bad = Configuration(np.diag([0.1, 0.1]), np.ones((2, 1)))
    assert not validate(bad).ok
    outside = Configuration(np.diag([0.1, 2.0]), np.ones((2, 1)), Region.unit_disk())
    report = validate(outside)
    assert report.controllability_margin > 1e-3 and report.spectral_margin < 0 and not report.ok


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 3))
def test_gl_equivalence_recovers_conjugation(seed, r, d):
    rng = np.random.default_rng(seed)
    c1 = random_configuration(rng, r, d)
    g = complex_normal(rng, r, r) + 2 * np.eye(r)
    c2 = conjugated(c1, g)
    found = gl_equivalence(c1, c2)
    assert found is not None
    assert np.allclose(found, g, atol=1e-6 * np.linalg.norm(g))
    assert equivalence_residual(c1, c2, found) < 1e-8


def test_gl_equivalence_rejects_different_spectra():
    c1 = Configuration(np.diag([0.1, 0.2]), np.ones((2, 1)))
    c2 = Configuration(np.diag([0.1, 0.3]), np.ones((2, 1)))
    assert gl_equivalence(c1, c2) is None
    with pytest.raises(TypeError):
        gl_equivalence(c1, Configuration.empty(1))


def test_json_roundtrip():
    rng = np.random.default_rng(2)
    cfg = random_configuration(rng, 3, 2).with_region(Region.inside(Contour.circle(1j, 2.0)))
    back = Configuration.from_json(cfg.to_json())
    assert np.array_equal(back.A, cfg.A) and np.array_equal(back.iota, cfg.iota)
    assert back.region.to_json() == cfg.region.to_json()
    assert Configuration.from_json(Configuration.empty(2).to_json()).d == 2
    with pytest.raises(FormatError):
        Configuration.from_json({"r": 2})


# -- companion naturality -----------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_companion_left_factor_naturality(seed, d, l):  # noqa: E741
    rng = np.random.default_rng(seed)
    p = random_poly(rng, d, l)
    g = complex_normal(rng, d, d) + 2 * np.eye(d)
    h = complex_normal(rng, d, d) + 2 * np.eye(d)
    a_p, iota_p = companion(p)
    a_g, iota_g = companion(p.left(g).right(h))
    target = Configuration(a_p, iota_p @ np.linalg.inv(g))
    assert gl_equivalence(Configuration(a_g, iota_g), target, tol=1e-6) is not None


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_companion_is_controllable(seed, d, l):  # noqa: E741
    rng = np.random.default_rng(seed)
    cfg = Configuration(*companion(random_poly(rng, d, l)))
    assert validate(cfg).ok


# -- Moebius action ---------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4))
def test_mobius_maps_spectrum(seed, r):
    rng = np.random.default_rng(seed)
    cfg = Configuration(np.diag(rng.uniform(-0.8, 0.8, r) + 0.1j), complex_normal(rng, r, 1), Region.unit_disk())
    cfg = conjugated(cfg, complex_normal(rng, r, r) + 3 * np.eye(r))
    m = MobiusTransform.checked(1, 0.3, 0.2, 1)
    out = mobius_apply(cfg, m)
    assert np.allclose(np.sort_complex(out.eigenvalues()), np.sort_complex(m(cfg.eigenvalues())), atol=1e-8)
    assert np.all(out.region.margin(out.eigenvalues()) > 0)
    back = mobius_apply(out, m.inverse())
    assert np.allclose(back.A, cfg.A, atol=1e-8)
    assert np.array_equal(out.iota, cfg.iota)


def test_mobius_pole_in_spectrum():
    cfg = Configuration(np.diag([0.5, 2.0]), np.ones((2, 1)))
    with pytest.raises(DomainError):
        mobius_apply(cfg, MobiusTransform.reciprocal_shift(2.0))


def test_mobius_region_flip():
    cfg = Configuration(np.diag([0.5]), np.ones((1, 1)), Region.unit_disk())
    out = mobius_apply(cfg, MobiusTransform.reciprocal_shift(0.0))
    assert out.region.kind == "exterior"
    assert np.all(out.region.margin(out.eigenvalues()) > 0)


# -- restriction ----------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(1, 2))
def test_restriction_splits_spectrum(seed, r, d):
    rng = np.random.default_rng(seed)
    radii = rng.choice([rng.uniform(0.1, 0.8), rng.uniform(1.2, 2.0)], size=r)
    eig = radii * np.exp(2j * np.pi * rng.random(r))
    s = complex_normal(rng, r, r) + 2 * np.eye(r)
    cfg = Configuration(s @ np.diag(eig) @ np.linalg.inv(s), complex_normal(rng, r, d))
    inner = restrict(cfg, Contour.unit_circle())
    outer = restrict_outside(cfg, Contour.unit_circle())
    assert inner.r == np.sum(radii < 1) and outer.r == np.sum(radii > 1)
    assert np.allclose(np.sort_complex(inner.eigenvalues()), np.sort_complex(eig[radii < 1]), atol=1e-7)
    if inner.r and np.linalg.matrix_rank(cfg.controllability_matrix()) == r:
        assert validate(inner, tol=1e-10).ok


def test_restriction_of_nonnormal_jordan_block():
    a = np.array([[0.3, 1.0, 0.0], [0.0, 0.3, 5.0], [0.0, 0.0, 1.7]])
    cfg = Configuration(a, np.array([[0.0], [0.0], [1.0]]))
    inner = restrict(cfg, Contour.unit_circle())
    assert inner.r == 2
    assert np.allclose(inner.eigenvalues(), 0.3, atol=1e-6)
    assert validate(inner).ok


def test_restriction_to_contour_around_nothing():
    cfg = Configuration(np.diag([2.0, 3.0]), np.ones((2, 1)))
    assert restrict(cfg, Contour.unit_circle()).r == 0
    assert restrict(Configuration.empty(2), Contour.unit_circle()).d == 2


# -- charts ---------------------------------------------------------------------


def test_chart_candidates_ring():
    cands = default_chart_candidates()
    assert np.allclose(np.abs(cands), 3.0)
    shifted = default_chart_candidates(Contour.circle(1 + 1j, 0.5))
    assert np.allclose(np.abs(shifted - (1 + 1j)), 1.5)


def test_chart_select_prefers_well_conditioned_point():
    p = MatrixLaurentPoly(np.stack([np.diag([-3.0, 1.0]), np.diag([1.0, 0.0])]))
    chart = chart_select(p)
    assert abs(chart.point) == pytest.approx(3.0)
    assert abs(chart.point - 3.0) > 1e-3
    assert np.linalg.svd(chart.transformed.coeffs[-1], compute_uv=False)[-1] > 0.1
    assert chart.target.contains(chart.mobius(0.0))


def test_chart_select_fails_for_singular_family():
    p = MatrixLaurentPoly(np.stack([np.diag([1.0, 0.0]), np.diag([1.0, 0.0])]))
    with pytest.raises(ChartError):
        chart_select(p)
