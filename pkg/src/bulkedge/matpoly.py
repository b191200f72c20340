"""Matrix Laurent polynomials: evaluation, winding numbers, Fejer means, linearization."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from .contours import Contour
from .errors import DomainError, FormatError, NotInvertibleError, ResolutionError
from .jsonio import decode_matrix, encode_matrix

TRIM_RTOL = 1e-14
INVERTIBLE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class MatrixLaurentPoly:
    """``sum(coeffs[j] * z**j for j in range(-k, l + 1))`` with d x d complex coefficients.

    ``coeffs`` is stored as an array of shape ``(k + l + 1, d, d)``; row ``i``
    holds the coefficient of ``z**(i - k)``.
    """

    coeffs: np.ndarray
    k: int = 0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[1] == 0:
            raise FormatError(f"coefficients must have shape (n, d, d), got {c.shape}")
        if self.k < 0 or self.k >= c.shape[0]:
            raise FormatError("negative degree k must satisfy 0 <= k < number of coefficients")
        if not np.all(np.isfinite(c)):
            raise FormatError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "k", int(self.k))

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_dict(cls, terms: dict[int, np.ndarray], d: int | None = None) -> "MatrixLaurentPoly":
        """Build from ``{power: matrix}``; scalars are promoted to 1 x 1 matrices."""
        mats = {int(j): np.atleast_2d(np.asarray(m, dtype=complex)) for j, m in terms.items()}
        if d is None:
            if not mats:
                raise FormatError("cannot infer the matrix size of an empty polynomial")
            d = next(iter(mats.values())).shape[0]
        lo = min(0, min(mats, default=0))
        hi = max(0, max(mats, default=0))
        c = np.zeros((hi - lo + 1, d, d), dtype=complex)
        for j, m in mats.items():
            if m.shape != (d, d):
                raise FormatError(f"coefficient of z^{j} has shape {m.shape}, expected {(d, d)}")
            c[j - lo] = m
        return cls(c, -lo)

    @classmethod
    def constant(cls, m) -> "MatrixLaurentPoly":
        return cls(np.atleast_2d(np.asarray(m, dtype=complex))[None], 0)

    @classmethod
    def identity(cls, d: int) -> "MatrixLaurentPoly":
        return cls.constant(np.eye(d))

    @classmethod
    def monomial(cls, j: int, m=None, d: int = 1) -> "MatrixLaurentPoly":
        m = np.eye(d) if m is None else m
        return cls.from_dict({j: m})

    @classmethod
    def scalar(cls, terms: dict[int, complex]) -> "MatrixLaurentPoly":
        return cls.from_dict({j: [[v]] for j, v in terms.items()}, d=1)

    @classmethod
    def from_roots(cls, roots, lead: complex = 1.0) -> "MatrixLaurentPoly":
        """Scalar polynomial ``lead * prod(z - root)``."""
        c = np.array([lead], dtype=complex)
        for r in roots:
            c = np.convolve(c, [1.0, -r])  # descending powers
        return cls(c[::-1].reshape(-1, 1, 1), 0)

    # -- shape --------------------------------------------------------------

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]

    @property
    def l(self) -> int:  # noqa: E743
        return self.coeffs.shape[0] - 1 - self.k

    @property
    def degrees(self) -> range:
        return range(-self.k, self.l + 1)

    def coeff(self, j: int) -> np.ndarray:
        if -self.k <= j <= self.l:
            return self.coeffs[j + self.k]
        return np.zeros((self.d, self.d), dtype=complex)

    def as_dict(self) -> dict[int, np.ndarray]:
        return {j: self.coeff(j) for j in self.degrees}

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    # -- evaluation ---------------------------------------------------------

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """Value at ``z`` (scalar or array); powers are summed in ascending order."""
        z = np.asarray(z, dtype=complex)
        if self.k > 0 and np.any(z == 0):
            raise DomainError("Laurent polynomial with negative powers evaluated at z = 0")
        out = np.zeros(z.shape + (self.d, self.d), dtype=complex)
        for j in self.degrees:
            out = out + self.coeffs[j + self.k] * (z ** j)[..., None, None]
        return out

    def det(self, z):
        return np.linalg.det(self.eval(z))

    # -- algebra ------------------------------------------------------------

    def trim(self) -> "MatrixLaurentPoly":
        """Drop numerically zero extreme coefficients so that (k, l) is tight."""
        scale = self.max_norm()
        if scale == 0:
            return MatrixLaurentPoly(np.zeros((1, self.d, self.d)), 0)
        thresh = TRIM_RTOL * scale
        norms = np.max(np.abs(self.coeffs), axis=(1, 2))
        lo, hi = 0, len(norms) - 1
        while lo < self.k and norms[lo] < thresh:
            lo += 1
        while hi > self.k and norms[hi] < thresh:
            hi -= 1
        return MatrixLaurentPoly(self.coeffs[lo:hi + 1], self.k - lo)

    def padded(self, k: int, l: int) -> "MatrixLaurentPoly":  # noqa: E741
        """Same polynomial with zero coefficients added so the bounds become (k, l)."""
        if k < self.k or l < self.l:
            raise DomainError("padding cannot shrink the degree range")
        c = np.zeros((k + l + 1, self.d, self.d), dtype=complex)
        c[k - self.k:k - self.k + self.coeffs.shape[0]] = self.coeffs
        return MatrixLaurentPoly(c, k)

    def shift(self, n: int) -> "MatrixLaurentPoly":
        """Multiply by ``z**n``; the degree window moves with it."""
        new_k = self.k - n
        if new_k >= 0:
            return MatrixLaurentPoly(self.coeffs, new_k)
        c = np.concatenate([np.zeros((-new_k, self.d, self.d)), self.coeffs])
        return MatrixLaurentPoly(c, 0)

    def clear_negative(self) -> "MatrixLaurentPoly":
        """``z**k * p``, an ordinary polynomial of degree ``k + l``."""
        return MatrixLaurentPoly(self.coeffs, 0)

    def __add__(self, other: "MatrixLaurentPoly") -> "MatrixLaurentPoly":
        k, l = max(self.k, other.k), max(self.l, other.l)  # noqa: E741
        return MatrixLaurentPoly(self.padded(k, l).coeffs + other.padded(k, l).coeffs, k)

    def __neg__(self) -> "MatrixLaurentPoly":
        return MatrixLaurentPoly(-self.coeffs, self.k)

    def __sub__(self, other: "MatrixLaurentPoly") -> "MatrixLaurentPoly":
        return self + (-other)

    def __matmul__(self, other: "MatrixLaurentPoly") -> "MatrixLaurentPoly":
        n = self.coeffs.shape[0] + other.coeffs.shape[0] - 1
        c = np.zeros((n, self.d, other.d), dtype=complex)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                c[i + j] += a @ b
        return MatrixLaurentPoly(c, self.k + other.k)

    def left(self, g) -> "MatrixLaurentPoly":
        return MatrixLaurentPoly(np.asarray(g, dtype=complex) @ self.coeffs, self.k)

    def right(self, h) -> "MatrixLaurentPoly":
        return MatrixLaurentPoly(self.coeffs @ np.asarray(h, dtype=complex), self.k)

    def minus_scalar(self, lam: complex) -> "MatrixLaurentPoly":
        """``p - lam * I``."""
        c = self.coeffs.copy()
        c[self.k] -= lam * np.eye(self.d)
        return MatrixLaurentPoly(c, self.k)

    def direct_sum(self, other: "MatrixLaurentPoly") -> "MatrixLaurentPoly":
        k, l = max(self.k, other.k), max(self.l, other.l)  # noqa: E741
        a, b = self.padded(k, l).coeffs, other.padded(k, l).coeffs
        c = np.zeros((k + l + 1, self.d + other.d, self.d + other.d), dtype=complex)
        c[:, :self.d, :self.d] = a
        c[:, self.d:, self.d:] = b
        return MatrixLaurentPoly(c, k)

    def kron_left(self, g) -> "MatrixLaurentPoly":
        """Coefficientwise ``kron(g, a_j)``."""
        g = np.atleast_2d(np.asarray(g, dtype=complex))
        return MatrixLaurentPoly(np.stack([np.kron(g, a) for a in self.coeffs]), self.k)

    def allclose(self, other: "MatrixLaurentPoly", atol: float = 1e-12) -> bool:
        if self.d != other.d:
            return False
        k, l = max(self.k, other.k), max(self.l, other.l)  # noqa: E741
        return bool(np.allclose(self.padded(k, l).coeffs, other.padded(k, l).coeffs, atol=atol, rtol=0))

    def __eq__(self, other):
        if not isinstance(other, MatrixLaurentPoly):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def __repr__(self):
        return f"MatrixLaurentPoly(d={self.d}, k={self.k}, l={self.l})"

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "l": self.l,
            "coeffs": [dict(j=j, **encode_matrix(self.coeff(j))) for j in self.degrees],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MatrixLaurentPoly":
        try:
            d, k, l = int(obj["d"]), int(obj["k"]), int(obj["l"])  # noqa: E741
            c = np.zeros((k + l + 1, d, d), dtype=complex)
            for term in obj["coeffs"]:
                j = int(term["j"])
                if not -k <= j <= l:
                    raise FormatError(f"coefficient degree {j} outside [-{k}, {l}]")
                c[j + k] = decode_matrix(term, (d, d))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad polynomial encoding: {exc}") from exc
        return cls(c, k)


class MobiusTransform(NamedTuple):
    """``z -> (a z + b) / (c z + d)``."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def checked(cls, a, b, c, d, tol: float = 1e-12) -> "MobiusTransform":
        m = cls(complex(a), complex(b), complex(c), complex(d))
        if abs(m.a * m.d - m.b * m.c) <= tol:
            raise DomainError("Moebius transform with ad - bc = 0")
        return m

    @classmethod
    def identity(cls) -> "MobiusTransform":
        return cls(1, 0, 0, 1)

    @classmethod
    def reciprocal_shift(cls, p: complex) -> "MobiusTransform":
        """``z -> 1 / (z - p)``, the chart map centred at ``p``."""
        return cls(0, 1, 1, -complex(p))

    @property
    def pole(self) -> complex | None:
        return None if self.c == 0 else -self.d / self.c

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def inverse(self) -> "MobiusTransform":
        return MobiusTransform(self.d, -self.b, -self.c, self.a)

    def compose(self, other: "MobiusTransform") -> "MobiusTransform":
        """``self o other``."""
        m = np.array([[self.a, self.b], [self.c, self.d]]) @ np.array([[other.a, other.b], [other.c, other.d]])
        return MobiusTransform(*m.ravel())

    def map_contour(self, contour: Contour) -> tuple[Contour, bool]:
        """Image curve of ``contour`` and whether the inside is mapped to the inside.

        Circles map to circles exactly; other curves become fine polygons.
        """
        pole = self.pole
        if pole is not None and contour.distance(pole) < 1e-12 * max(1.0, contour.diameter):
            raise DomainError("Moebius pole lies on the contour")
        keeps_inside = pole is None or not bool(contour.contains(pole))
        if contour.kind == "circle":
            pts = self(contour.sample(3))
            center, radius = _circumcircle(*pts)
            return Contour.circle(center, radius, contour.nodes), keeps_inside
        pts = self(contour.sample(512))
        return Contour.polyline(pts, contour.nodes), keeps_inside


def _circumcircle(p1: complex, p2: complex, p3: complex) -> tuple[complex, float]:
    a = np.array([[2 * (p2 - p1).real, 2 * (p2 - p1).imag],
                  [2 * (p3 - p1).real, 2 * (p3 - p1).imag]])
    rhs = np.array([abs(p2) ** 2 - abs(p1) ** 2, abs(p3) ** 2 - abs(p1) ** 2])
    cx, cy = np.linalg.solve(a, rhs)
    center = complex(cx, cy)
    return center, float(abs(p1 - center))


def winding_number(p: MatrixLaurentPoly, contour: Contour | None = None, n_samples: int = 256,
                   cap: int = 2 ** 20, tol: float = 1e-12) -> int:
    """Number of turns of ``det p`` along ``contour`` (default: the unit circle).

    By the argument principle this counts the zeros of ``det p`` inside the
    contour minus the pole order ``d * k`` at the origin when the origin is
    enclosed.  Sampling doubles until consecutive phase increments stay below
    pi/2.
    """
    contour = contour or Contour.unit_circle()
    n = int(n_samples)
    while n <= cap:
        vals = p.eval(contour.sample(n))
        sv = np.linalg.svd(vals, compute_uv=False)
        if sv[:, -1].min() <= tol * max(float(sv[:, 0].max()), np.finfo(float).tiny):
            raise NotInvertibleError("symbol not invertible on contour")
        dets = np.linalg.det(vals)
        steps = np.angle(np.roll(dets, -1) / dets)
        if np.max(np.abs(steps)) < np.pi / 2:
            total = steps.sum() / (2 * np.pi)
            return int(np.rint(total))
        n *= 2
    raise ResolutionError("insufficient resolution: phase of det p not resolved at the sample cap")


class FejerResult(NamedTuple):
    poly: MatrixLaurentPoly
    sup_error: float


def _check_uniform(zs: np.ndarray) -> None:
    if np.max(np.abs(np.abs(zs) - 1)) > 1e-9:
        raise FormatError("samples must lie on the unit circle")
    m = len(zs)
    steps = np.angle(np.roll(zs, -1) / zs)
    if np.max(np.abs(steps - 2 * np.pi / m)) > 1e-9:
        raise FormatError("samples must be uniformly spaced counterclockwise on the unit circle")


def fejer_approx(zs, values, degree: int) -> FejerResult:
    """Cesaro (Fejer) mean of degree ``degree`` of the sampled symbol.

    ``zs`` are uniformly spaced points on the unit circle and ``values`` the
    d x d symbol values there.  Coefficient ``j`` is damped by
    ``1 - |j| / (degree + 1)``.  The sup-norm (spectral) error on the sample
    set is returned alongside the polynomial.
    """
    zs = np.asarray(zs, dtype=complex).ravel()
    vals = np.asarray(values, dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None, None]
    if vals.shape[0] != zs.size:
        raise FormatError("one matrix per sample point is required")
    n = int(degree)
    if n < 0:
        raise DomainError("degree must be non-negative")
    if zs.size < max(4 * n, 1):
        raise DomainError(f"need at least {4 * n} samples for degree {n}")
    _check_uniform(zs)
    js = np.arange(-n, n + 1)
    phase = zs[None, :] ** (-js[:, None])
    chat = np.einsum("jm,mab->jab", phase, vals) / zs.size
    weights = 1 - np.abs(js) / (n + 1)
    poly = MatrixLaurentPoly(weights[:, None, None] * chat, n)
    err = np.linalg.norm(poly.eval(zs) - vals, ord=2, axis=(1, 2)).max()
    return FejerResult(poly, float(err))


def _leading_check(p: MatrixLaurentPoly, tol: float) -> np.ndarray:
    lead = p.coeffs[-1]
    smin = np.linalg.svd(lead, compute_uv=False).min()
    if smin <= tol * max(p.max_norm(), np.finfo(float).tiny):
        raise NotInvertibleError("leading coefficient is singular; use chart_select")
    return lead


def companion(p: MatrixLaurentPoly, tol: float = INVERTIBLE_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Multiplication by ``z`` on ``C[z]^d / p C[z]^d`` in the basis ``z^i e_j`` (``0 <= i < l``).

    Returns ``(A, iota)``: ``A`` is ``dl x dl`` with identity blocks below the
    diagonal and last block column ``-a_i a_l^{-1}``; ``iota`` embeds ``C^d``
    as the degree-0 block.  The eigenvalues of ``A`` are the roots of
    ``det p`` with multiplicity.
    """
    if p.k != 0:
        raise DomainError("companion needs an ordinary polynomial (k = 0)")
    d, l = p.d, p.l  # noqa: E741
    if l == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros((0, d), dtype=complex)
    lead = _leading_check(p, tol)
    n = d * l
    a = np.zeros((n, n), dtype=complex)
    for i in range(1, l):
        a[i * d:(i + 1) * d, (i - 1) * d:i * d] = np.eye(d)
    # right normalization keeps the module p C[z]^d unchanged
    normalized = np.linalg.solve(lead.T, p.coeffs[:l].transpose(0, 2, 1)).transpose(0, 2, 1)
    a[:, (l - 1) * d:] = -normalized.reshape(n, d)
    iota = np.zeros((n, d), dtype=complex)
    iota[:d] = np.eye(d)
    return a, iota


def pencil(p: MatrixLaurentPoly) -> tuple[np.ndarray, np.ndarray]:
    """Linear pencil ``z B - A`` with the same cokernel module as ``p`` (any leading coefficient).

    ``B = diag(I, ..., I, a_l)`` and ``A`` has identity blocks below the
    diagonal and last block column ``-a_0, ..., -a_{l-1}``; for invertible
    ``a_l`` it reduces to :func:`companion` after the column scaling
    ``diag(I, ..., a_l^{-1})``.
    """
    if p.k != 0:
        raise DomainError("pencil needs an ordinary polynomial (k = 0)")
    d, l = p.d, p.l  # noqa: E741
    n = d * l
    a = np.zeros((n, n), dtype=complex)
    b = np.eye(n, dtype=complex)
    if l == 0:
        return a, b
    for i in range(1, l):
        a[i * d:(i + 1) * d, (i - 1) * d:i * d] = np.eye(d)
    a[:, (l - 1) * d:] = -p.coeffs[:l].reshape(n, d)
    b[(l - 1) * d:, (l - 1) * d:] = p.coeffs[l]
    return a, b


def chart_transform(p: MatrixLaurentPoly, q: complex) -> MatrixLaurentPoly:
    """``(-w)^l p(q + 1/w)``: the polynomial seen through the chart ``w = 1/(z - q)``.

    The result has the same degree and leading coefficient ``(-1)^l p(q)``;
    its roots are the images ``1/(root - q)`` of the roots of ``det p``.
    """
    if p.k != 0:
        raise DomainError("chart transform needs an ordinary polynomial (k = 0)")
    d, l = p.d, p.l  # noqa: E741
    c = np.zeros((l + 1, d, d), dtype=complex)
    sign = (-1) ** l
    for j in range(l + 1):
        for i in range(j + 1):
            c[l - j + i] += sign * comb(j, i) * q ** i * p.coeffs[j]
    return MatrixLaurentPoly(c, 0)
