"""Random generators shared by the test modules."""

import numpy as np

from bulkedge.matpoly import MatrixLaurentPoly

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def complex_normal(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng, n):
    q, r = np.linalg.qr(complex_normal(rng, n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def det_roots(p: MatrixLaurentPoly) -> np.ndarray:
    """Roots of det p via a generalized eigenvalue problem (test-side, independent of companion())."""
    import scipy.linalg
    d, l = p.d, p.l
    n = d * l
    a = np.zeros((n, n), dtype=complex)
    b = np.eye(n, dtype=complex)
    a[:n - d, d:] = np.eye(n - d)
    for j in range(l):
        a[n - d:, j * d:(j + 1) * d] = -p.coeffs[j]
    b[n - d:, n - d:] = p.coeffs[l]
    ev = scipy.linalg.eigvals(a, b)
    return ev[np.isfinite(ev)]


def random_poly(rng, d, l, margin=1e-3, radius=1.0, center=0j, scale=1.0):  # noqa: E741
    """Random degree-l polynomial with invertible leading coefficient and no root near the circle."""
    while True:
        c = complex_normal(rng, l + 1, d, d) * scale
        c[l] += np.eye(d) * 0.5
        p = MatrixLaurentPoly(c, 0)
        if np.linalg.svd(c[l], compute_uv=False).min() < 1e-2:
            continue
        roots = det_roots(p)
        if np.all(np.abs(np.abs(roots - center) - radius) > margin):
            return p


def random_poly_from_roots(rng, d, l, margin=0.05):  # noqa: E741
    """p = U diag(prod (z - r)) V with roots drawn away from the unit circle."""
    c = np.zeros((l + 1, d, d), dtype=complex)
    for i in range(d):
        roots = []
        while len(roots) < l:
            r = complex_normal(rng)[()] * 0.8
            if abs(abs(r) - 1) > margin:
                roots.append(r)
        coef = np.array([1.0 + 0j])
        for r in roots:
            coef = np.convolve(coef, [1.0, -r])
        c[:, i, i] = coef[::-1]
    u, v = random_unitary(rng, d), random_unitary(rng, d)
    return MatrixLaurentPoly(u @ c @ v, 0), roots


def two_band_matrix(s, t, mass, rotation=None, shift=0.5, width=0.8):
    """``shift * I + width * n(s, t) . sigma`` with the QWZ direction field ``n``; eigenvalues shift +- width."""
    vec = np.stack([np.sin(s), np.sin(t), mass + np.cos(s) + np.cos(t)], axis=-1)
    vec = vec / np.linalg.norm(vec, axis=-1, keepdims=True)
    h = vec[..., 0, None, None] * SX + vec[..., 1, None, None] * SY + vec[..., 2, None, None] * SZ
    if rotation is not None:
        h = rotation @ h @ rotation.conj().T
    return shift * np.eye(2) + width * h


def random_mass(rng):
    """Mass away from the gap closings at 0 and +-2."""
    mag = rng.choice([rng.uniform(0.5, 1.5), rng.uniform(2.5, 3.5)])
    return float(mag * rng.choice([-1, 1]))


def two_band_family(rng, grid=(24, 24), quadratic=None):
    """Grid of polynomials z - A(s, t) (optionally times a fixed factor with roots outside the disk).

    Returns coefficient array (n1, n2, l + 1, 2, 2) and the mass used.
    """
    n1, n2 = grid
    s = 2 * np.pi * np.arange(n1) / n1
    t = 2 * np.pi * np.arange(n2) / n2
    ss, tt = np.meshgrid(s, t, indexing="ij")
    mass = random_mass(rng)
    a = two_band_matrix(ss, tt, mass, random_unitary(rng, 2))
    lin = np.zeros((n1, n2, 2, 2, 2), dtype=complex)
    lin[:, :, 0] = -a
    lin[:, :, 1] = np.eye(2)
    if quadratic is None:
        quadratic = rng.random() < 0.5
    if not quadratic:
        return lin, mass
    cmat = random_unitary(rng, 2) @ np.diag(rng.uniform(0.1, 0.5, 2)) @ random_unitary(rng, 2)
    # (z - A)(I - z C): the second factor has its roots outside the unit disk
    out = np.zeros((n1, n2, 3, 2, 2), dtype=complex)
    out[:, :, 0] = lin[:, :, 0]
    out[:, :, 1] = lin[:, :, 1] - lin[:, :, 0] @ cmat
    out[:, :, 2] = -cmat
    return out, mass


def qwz_lower_chern(mass):
    """chern_number of the lower band of the QWZ direction field (package orientation)."""
    if 0 < mass < 2:
        return -1
    if -2 < mass < 0:
        return 1
    return 0
