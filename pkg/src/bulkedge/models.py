"""Tight-binding families ``H_x(z) = sum_j a_j(x) z^j`` with ``a_j`` given by finite Fourier series in x."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .contours import Contour
from .errors import DomainError, FormatError
from .jsonio import decode_matrix, dumps, read_json
from .matpoly import MatrixLaurentPoly

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA = 1
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Family of symbols over the circle ``x in [0, 2 pi)``.

    ``fourier[(j, m)]`` is the matrix multiplying ``z**j * exp(i m x)``.
    """

    name: str
    d: int
    k: int
    l: int  # noqa: E741
    fourier: dict
    gap: Contour
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        terms = {}
        for (j, m), mat in self.fourier.items():
            mat = np.array(np.atleast_2d(mat), dtype=complex)
            if mat.shape != (self.d, self.d):
                raise FormatError(f"Fourier term ({j}, {m}) has shape {mat.shape}, expected {(self.d, self.d)}")
            if not -self.k <= j <= self.l:
                raise FormatError(f"Fourier term ({j}, {m}) lies outside the degree range [-{self.k}, {self.l}]")
            if not np.all(np.isfinite(mat)):
                raise FormatError("Fourier coefficients must be finite")
            mat.setflags(write=False)
            terms[(int(j), int(m))] = mat
        if self.d < 1 or self.k < 0 or self.l < 0:
            raise FormatError("need d >= 1 and k, l >= 0")
        object.__setattr__(self, "fourier", dict(sorted(terms.items())))

    @property
    def x_orders(self) -> list[int]:
        return sorted({m for _, m in self.fourier})

    def coeff_array(self, xs) -> np.ndarray:
        """Coefficients ``a_j(x)`` for every x: shape ``(len(xs), k + l + 1, d, d)``."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.zeros((xs.size, self.k + self.l + 1, self.d, self.d), dtype=complex)
        for (j, m), mat in self.fourier.items():
            out[:, j + self.k] += np.exp(1j * m * xs)[:, None, None] * mat
        return out

    def symbol_grid(self, xs, zs) -> np.ndarray:
        """``H_x(z)`` on the product grid: shape ``(len(xs), len(zs), d, d)``."""
        coeffs = self.coeff_array(xs)
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        powers = zs[:, None] ** np.arange(-self.k, self.l + 1)[None, :]
        return np.einsum("zj,xjab->xzab", powers, coeffs)

    def symbol_at(self, x: float) -> MatrixLaurentPoly:
        """``H_x`` as a Laurent polynomial; the degree window is kept at ``[-k, l]`` (no trimming)."""
        return MatrixLaurentPoly(self.coeff_array([x])[0], self.k)

    def with_gap(self, gap: Contour) -> "ModelSpec":
        return ModelSpec(self.name, self.d, self.k, self.l, self.fourier, gap, dict(self.metadata))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        terms = []
        for (j, m), mat in self.fourier.items():
            terms.append({"j": j, "m": m, "re": mat.real.tolist(), "im": mat.imag.tolist()})
        return {
            "schema": SCHEMA,
            "name": self.name,
            "d": self.d,
            "k": self.k,
            "l": self.l,
            "fourier": terms,
            "gap": self.gap.to_json(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelSpec":
        if obj.get("schema", SCHEMA) != SCHEMA:
            raise FormatError(f"unsupported model schema {obj.get('schema')!r}")
        try:
            d, k, l = int(obj["d"]), int(obj["k"]), int(obj["l"])  # noqa: E741
            terms: dict = {}
            for term in obj["fourier"]:
                key = (int(term["j"]), int(term["m"]))
                terms[key] = terms.get(key, 0) + decode_matrix(term, (d, d))
            gap = Contour.from_json(obj["gap"])
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad model description: missing or malformed {exc}") from exc
        return cls(str(obj.get("name", "model")), d, k, l, terms, gap, dict(obj.get("metadata", {})))

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return self.to_json() == other.to_json()

    __hash__ = None


def load_model(path: str | Path) -> ModelSpec:
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            obj = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise FormatError(f"{path}: invalid TOML ({exc})") from exc
    else:
        obj = read_json(path)
    return ModelSpec.from_json(obj)


def save_model(spec: ModelSpec, path: str | Path) -> None:
    Path(path).write_text(dumps(spec.to_json()), encoding="utf-8")


# -- gap diagnostics --------------------------------------------------------


class GapReport(NamedTuple):
    min_singular: float
    spectral_distance: float
    inside_counts: tuple[int, int]
    margin: float
    ok: bool

    def to_json(self) -> dict:
        return {
            "min_singular": self.min_singular,
            "spectral_distance": self.spectral_distance,
            "inside_counts": list(self.inside_counts),
            "margin": self.margin,
            "ok": self.ok,
        }


def gap_check(spec: ModelSpec, grid: tuple[int, int] = (64, 64), margin: float = 1e-2,
              gamma_nodes: int | None = None) -> GapReport:
    """Smallest singular value of ``H_x(z) - lambda`` over x, z on circles and lambda on the gap contour.

    The spectrum of the half-space-free operator is the union of symbol
    spectra over ``|z| = 1``, so this certifies that the contour stays in a gap.
    """
    n1, n2 = grid
    xs = 2 * np.pi * np.arange(n1) / n1
    zs = np.exp(2j * np.pi * np.arange(n2) / n2)
    h = spec.symbol_grid(xs, zs)
    lams = spec.gap.arclength_points(gamma_nodes or spec.gap.nodes)
    eye = np.eye(spec.d)
    worst = np.inf
    for lam in lams:
        worst = min(worst, float(np.min(np.linalg.svd(h - lam * eye, compute_uv=False)[..., -1])))
    eig = np.linalg.eigvals(h)
    dist = float(np.min(spec.gap.distance(eig)))
    inside = np.sum(spec.gap.contains(eig), axis=-1)
    counts = (int(inside.min()), int(inside.max()))
    return GapReport(worst, dist, counts, margin, bool(worst > margin))


def lowest_band_contour(spec: ModelSpec, bands: int = 1, grid: int = 96, nodes: int = 128) -> Contour:
    """Circle around the lowest ``bands`` real bands, crossing the axis halfway into the next gap."""
    xs = 2 * np.pi * np.arange(grid) / grid
    zs = np.exp(2j * np.pi * np.arange(grid) / grid)
    eig = np.sort(np.linalg.eigvals(spec.symbol_grid(xs, zs)).real, axis=-1)
    if bands >= spec.d:
        raise DomainError("need at least one band above the selected ones")
    e_min = float(eig[..., 0].min())
    e_top = float(eig[..., bands - 1].max())
    e_next = float(eig[..., bands].min())
    if e_next - e_top <= 1e-6 * max(1.0, float(np.abs(eig).max())):
        raise DomainError("no gap above the selected bands")
    delta = (e_next - e_top) / 2
    left, right = e_min - delta, (e_top + e_next) / 2
    center = round((left + right) / 2, 6)
    radius = round((right - left) / 2, 6)
    return Contour.circle(center, radius, nodes)


# -- built-in models --------------------------------------------------------


def _scalar_shift(a: float = 2.0) -> ModelSpec:
    terms = {(1, 0): [[1.0]], (0, 1): [[a]]}
    return ModelSpec("scalar_shift", 1, 0, 1, terms, Contour.circle(0, 0.5), {"a": a})


def _ssh(t: float = 0.5) -> ModelSpec:
    terms = {
        (0, 0): [[0, t], [t, 0]],
        (1, 0): [[0, 0], [1, 0]],
        (-1, 0): [[0, 1], [0, 0]],
    }
    spec = ModelSpec("ssh", 2, 1, 1, terms, Contour.circle(0, 1), {"t": t})
    return spec.with_gap(lowest_band_contour(spec))


def _qwz(m: float = 1.0) -> ModelSpec:
    # sin x sx + sin k sy + (m + cos x + cos k) sz with z = exp(ik)
    terms = {(j, n): np.zeros((2, 2), dtype=complex) for j in (-1, 0, 1) for n in (-1, 0, 1)}
    terms[(0, 0)] = m * SIGMA_Z
    terms[(1, 0)] = SIGMA_Y / 2j + SIGMA_Z / 2
    terms[(-1, 0)] = -SIGMA_Y / 2j + SIGMA_Z / 2
    terms[(0, 1)] = SIGMA_X / 2j + SIGMA_Z / 2
    terms[(0, -1)] = -SIGMA_X / 2j + SIGMA_Z / 2
    spec = ModelSpec("qwz", 2, 1, 1, terms, Contour.circle(0, 1), {"m": m})
    return spec.with_gap(lowest_band_contour(spec))


def _hofstadter(p: int = 1, q: int = 3) -> ModelSpec:
    """Harper chain in Landau gauge; the magnetic cell of ``q`` sites is the internal space."""
    if q < 2:
        raise DomainError("hofstadter needs q >= 2")
    phi = p / q
    hop = np.zeros((q, q), dtype=complex)
    for n in range(q - 1):
        hop[n, n + 1] = hop[n + 1, n] = 1.0
    up = np.zeros((q, q), dtype=complex)
    up[0, q - 1] = 1.0
    onsite = np.diag(np.exp(2j * np.pi * phi * np.arange(q)))
    terms = {
        (0, 0): hop,
        (0, 1): onsite,
        (0, -1): onsite.conj(),
        (1, 0): up,
        (-1, 0): up.T.copy(),
    }
    spec = ModelSpec("hofstadter", q, 1, 1, terms, Contour.circle(0, 1), {"p": p, "q": q})
    return spec.with_gap(lowest_band_contour(spec))


def _hatano_nelson_x(g: float = 0.25) -> ModelSpec:
    terms = {(1, 0): [[1.0]], (-1, 1): [[g]]}
    return ModelSpec("hatano_nelson_x", 1, 1, 1, terms, Contour.circle(0, 0.05), {"g": g})


def _identity(d: int = 1) -> ModelSpec:
    return ModelSpec("identity", d, 0, 0, {(0, 0): np.eye(d)}, Contour.circle(0, 0.5), {"d": d})


BUILTINS = {
    "scalar_shift": (_scalar_shift, {"a": float}),
    "ssh": (_ssh, {"t": float}),
    "qwz": (_qwz, {"m": float}),
    "hofstadter": (_hofstadter, {"p": int, "q": int}),
    "hatano_nelson_x": (_hatano_nelson_x, {"g": float}),
    "identity": (_identity, {"d": int}),
}


def builtin(name: str, **params) -> ModelSpec:
    """A model from the zoo; unknown parameters are rejected."""
    if name not in BUILTINS:
        raise DomainError(f"unknown model {name!r}; known: {', '.join(sorted(BUILTINS))}")
    factory, accepted = BUILTINS[name]
    extra = set(params) - set(accepted)
    if extra:
        raise DomainError(f"model {name!r} does not take parameter(s) {sorted(extra)}")
    return factory(**{key: accepted[key](val) for key, val in params.items()})
