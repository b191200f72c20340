import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bulkedge.contours import Contour
from bulkedge.errors import FormatError, ResolutionError, SpectrumOnContourError
from bulkedge.projectors import (ProjectorField, pencil_eigvals, projector_rank, purify, range_frames,
                                 riesz_projector, riesz_projectors)
from helpers import complex_normal, random_unitary

seeds = st.integers(0, 2 ** 32 - 1)


def matrix_with_spectrum(rng, eig, nonnormal=1.0):
    n = len(eig)
    upper = np.triu(complex_normal(rng, n, n), 1) * nonnormal
    u = random_unitary(rng, n)
    return u @ (np.diag(eig) + upper) @ u.conj().T


def spectrum_off_circle(rng, n, margin=0.05):
    radii = rng.choice([rng.uniform(0.0, 1 - margin), rng.uniform(1 + margin, 2.0)], size=n)
    return radii * np.exp(2j * np.pi * rng.random(n))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6), st.sampled_from([0.0, 1.0, 3.0]))
def test_riesz_projector_is_spectral_idempotent(seed, n, nonnormal):
    rng = np.random.default_rng(seed)
    eig = spectrum_off_circle(rng, n)
    a = matrix_with_spectrum(rng, eig, nonnormal)
    p = riesz_projector(a, Contour.unit_circle())
    scale = max(1.0, np.linalg.norm(p)) ** 2
    assert np.linalg.norm(p @ p - p) / scale < 1e-8
    assert np.linalg.norm(p @ a - a @ p) / (scale * max(1, np.linalg.norm(a))) < 1e-7
    assert projector_rank(p) == np.sum(np.abs(eig) < 1)
    assert np.isclose(np.trace(p).real, np.sum(np.abs(eig) < 1), atol=1e-6)


def test_projector_of_diagonal_matrix_is_exact_indicator():
    a = np.diag([0.2, 1.5, -0.7j, 3.0])
    p = riesz_projector(a, Contour.unit_circle())
    assert np.allclose(p, np.diag([1, 0, 1, 0]), atol=1e-12)


def test_near_contour_eigenvalue_triggers_refinement():
    a = np.diag([0.999, 1.002, 0.0])
    p = riesz_projector(a, Contour.unit_circle(), nodes=16)
    assert np.allclose(p, np.diag([1, 0, 1]), atol=1e-9)


def test_spectrum_on_contour_raises():
    with pytest.raises(SpectrumOnContourError):
        riesz_projector(np.diag([1.0, 0.5]), Contour.unit_circle())


def test_resolution_cap_raises():
    a = np.diag([0.9999, 0.0])
    with pytest.raises(ResolutionError):
        riesz_projectors(a, Contour.unit_circle(), nodes=16, max_nodes=64)


def test_other_contour_shapes():
    a = np.diag([0.5 + 0.1j, 2.5, -1.8, 0.0])
    ellipse = Contour.ellipse(1.5, (1.2, 0.5))
    p = riesz_projector(a, ellipse)
    assert np.allclose(np.diag(p).real, [1, 1, 0, 0], atol=1e-9)
    square = Contour.polyline([-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j])
    q = riesz_projector(a, square)
    assert np.allclose(np.diag(q).real, [1, 0, 0, 1], atol=1e-9)


def test_batched_matches_single():
    rng = np.random.default_rng(4)
    mats = np.stack([matrix_with_spectrum(rng, spectrum_off_circle(rng, 3)) for _ in range(6)]).reshape(2, 3, 3, 3)
    batch = riesz_projectors(mats, Contour.unit_circle())
    assert batch.shape == mats.shape
    for i in range(2):
        for j in range(3):
            assert np.allclose(batch[i, j], riesz_projector(mats[i, j], Contour.unit_circle()), atol=1e-10)


def test_pencil_projector_with_singular_b():
    # z B - A with an infinite eigenvalue and finite ones at 0.5 and 3
    a = np.diag([0.5, 3.0, 1.0])
    b = np.diag([1.0, 1.0, 0.0])
    ev = pencil_eigvals(a[None], b[None])[0]
    assert np.sum(np.isinf(ev)) == 1
    assert np.allclose(np.sort(ev[np.isfinite(ev)].real), [0.5, 3.0])
    p = riesz_projector(a, Contour.unit_circle(), b=b)
    assert projector_rank(p) == 1
    assert np.allclose(p @ p, p, atol=1e-10)


def test_purify_keeps_exact_idempotent_and_cleans_noise():
    rng = np.random.default_rng(0)
    s = complex_normal(rng, 4, 4) + 3 * np.eye(4)
    p = s @ np.diag([1, 1, 0, 0]) @ np.linalg.inv(s)
    assert np.allclose(purify(p), p, atol=1e-10)
    noisy = p + 1e-5 * complex_normal(rng, 4, 4)
    cleaned = purify(noisy)
    assert np.linalg.norm(cleaned @ cleaned - cleaned) < 1e-10
    assert np.linalg.norm(cleaned - p) < 1e-3


def test_range_frames_and_rank_checks():
    p = np.diag([1.0, 0.0, 1.0])
    f, ranks = range_frames(p[None])
    assert f.shape == (1, 3, 2) and ranks[0] == 2
    with pytest.raises(ResolutionError):
        projector_rank(np.diag([1.0, 0.5]))
    with pytest.raises(FormatError):
        riesz_projector(np.zeros((2, 3)), Contour.unit_circle())


# -- ProjectorField ----------------------------------------------------------------


def random_field(rng, grid=(4, 5), ambient=3, rank=2):
    f = np.stack([[np.linalg.qr(complex_normal(rng, ambient, rank))[0] for _ in range(grid[1])]
                  for _ in range(grid[0])])
    return ProjectorField(f, {"source": "test"})


def test_field_properties_and_transforms():
    rng = np.random.default_rng(8)
    f = random_field(rng)
    assert f.grid == (4, 5) and f.ambient == 3 and f.rank == 2
    assert f.orthonormality_defect() < 1e-12
    g = random_field(rng, ambient=2, rank=1)
    s = f.direct_sum(g)
    assert (s.ambient, s.rank) == (5, 3)
    assert s.orthonormality_defect() < 1e-12
    u = np.stack([[random_unitary(rng, 2) for _ in range(5)] for _ in range(4)])
    assert f.regauged(u).orthonormality_defect() < 1e-12
    assert f.transposed().grid == (5, 4)
    assert np.array_equal(f.flipped(0).frames[0], f.frames[-1])
    with pytest.raises(FormatError):
        f.direct_sum(random_field(rng, grid=(3, 5)))


def test_field_persistence(tmp_path):
    rng = np.random.default_rng(9)
    f = random_field(rng)
    back = ProjectorField.from_json(f.to_json())
    assert np.array_equal(back.frames, f.frames) and back.meta == f.meta
    path = tmp_path / "field.npz"
    f.save_npz(path)
    assert np.array_equal(ProjectorField.load_npz(path).frames, f.frames)
