"""Configurations ``(A, iota)``: validation, GL-equivalence, Moebius calculus and spectral restriction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .contours import Contour, Region
from .errors import ChartError, DomainError, FormatError
from .jsonio import decode_matrix, encode_matrix
from .matpoly import MatrixLaurentPoly, MobiusTransform, chart_transform
from .projectors import projector_rank, riesz_projector

CONTROL_TOL = 1e-9
EQUIV_TOL = 1e-8
CHART_CANDIDATES = 16
CHART_RING = 3.0


@dataclass(frozen=True, eq=False)
class Configuration:
    """An ``r x r`` matrix ``A`` and a map ``iota: C^d -> C^r`` whose A-orbit spans ``C^r``."""

    A: np.ndarray
    iota: np.ndarray
    region: Region | None = None

    def __post_init__(self):
        a = np.array(self.A, dtype=complex).reshape(np.shape(self.A) or (0, 0))
        iota = np.array(self.iota, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise FormatError(f"A must be square, got shape {a.shape}")
        if iota.ndim != 2 or iota.shape[0] != a.shape[0]:
            raise FormatError(f"iota must have shape (r, d) with r = {a.shape[0]}, got {iota.shape}")
        a.setflags(write=False)
        iota.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "iota", iota)

    @classmethod
    def empty(cls, d: int, region: Region | None = None) -> "Configuration":
        return cls(np.zeros((0, 0)), np.zeros((0, d)), region)

    @property
    def r(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.iota.shape[1]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.r else np.zeros(0, dtype=complex)

    def controllability_matrix(self) -> np.ndarray:
        """``[iota, A iota, ..., A^{r-1} iota]``."""
        blocks = []
        cur = self.iota
        for _ in range(self.r):
            blocks.append(cur)
            cur = self.A @ cur
        return np.hstack(blocks) if blocks else np.zeros((0, 0), dtype=complex)

    def with_region(self, region: Region | None) -> "Configuration":
        return Configuration(self.A, self.iota, region)

    def to_json(self) -> dict:
        out = {"r": self.r, "d": self.d, "A": encode_matrix(self.A), "iota": encode_matrix(self.iota)}
        if self.region is not None:
            out["region"] = self.region.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Configuration":
        try:
            r, d = int(obj["r"]), int(obj["d"])
            iota = decode_matrix(obj["iota"]).reshape(r, d)
            a = decode_matrix(obj["A"]).reshape(r, r)
            region = Region.from_json(obj["region"]) if obj.get("region") else None
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad configuration encoding: {exc}") from exc
        return cls(a, iota, region)


class ValidationReport(NamedTuple):
    controllability_margin: float
    spectral_margin: float
    ok: bool


def validate(cfg: Configuration, tol: float = CONTROL_TOL, region: Region | None = None) -> ValidationReport:
    """Controllability margin (smallest singular value of the Kalman matrix) and spectral margin."""
    region = region or cfg.region
    if cfg.r == 0:
        return ValidationReport(np.inf, np.inf, True)
    k = cfg.controllability_matrix()
    ctrl = float(np.linalg.svd(k, compute_uv=False)[-1])
    spec = np.inf if region is None else float(np.min(region.margin(cfg.eigenvalues())))
    return ValidationReport(ctrl, spec, bool(ctrl > tol and spec > tol))


def _relative(residual: np.ndarray, *scales: np.ndarray) -> float:
    denom = max([1.0] + [float(np.linalg.norm(s)) for s in scales])
    return float(np.linalg.norm(residual)) / denom


def equivalence_residual(c1: Configuration, c2: Configuration, g: np.ndarray) -> float:
    """Relative residual of ``g A1 g^{-1} = A2`` and ``g iota1 = iota2``."""
    r_a = _relative(g @ c1.A - c2.A @ g, g @ c1.A, c2.A @ g)
    r_i = _relative(g @ c1.iota - c2.iota, c2.iota)
    return max(r_a, r_i)


def gl_equivalence(c1: Configuration, c2: Configuration, tol: float = EQUIV_TOL) -> np.ndarray | None:
    """The unique ``g`` with ``g A1 g^{-1} = A2`` and ``g iota1 = iota2``, or ``None``.

    The candidate is ``K2 K1^+`` for the controllability matrices ``K1, K2``;
    it is accepted only if it is well conditioned and passes the residual check.
    """
    if c1.r != c2.r or c1.d != c2.d:
        raise TypeError(f"rank mismatch: ({c1.r}, {c1.d}) vs ({c2.r}, {c2.d})")
    if c1.r == 0:
        return np.zeros((0, 0), dtype=complex)
    k1, k2 = c1.controllability_matrix(), c2.controllability_matrix()
    g = k2 @ np.linalg.pinv(k1)
    if np.linalg.cond(g) > 1 / tol:
        return None
    return g if equivalence_residual(c1, c2, g) <= tol else None


def _mobius_region(region: Region | None, m: MobiusTransform) -> Region | None:
    if region is None or region.kind == "plane":
        return region
    contour = region.boundary()
    image, keeps_inside = m.map_contour(contour)
    inside = region.kind in ("open-unit-disk", "interior")
    if inside == keeps_inside:
        return Region.inside(image)
    return Region.outside(image)


def mobius_apply(cfg: Configuration, m: MobiusTransform, tol: float = 1e-10) -> Configuration:
    """``((a A + b)(c A + d)^{-1}, iota)`` with the region carried along by ``m``."""
    if cfg.r == 0:
        return Configuration(cfg.A, cfg.iota, _mobius_region(cfg.region, m))
    denom = m.c * cfg.A + m.d * np.eye(cfg.r)
    scale = max(1.0, abs(m.c) * float(np.linalg.norm(cfg.A, 2)) + abs(m.d))
    if np.linalg.svd(denom, compute_uv=False)[-1] <= tol * scale:
        raise DomainError("pole hits spectrum")
    a = np.linalg.solve(denom.T, (m.a * cfg.A + m.b * np.eye(cfg.r)).T).T
    return Configuration(a, cfg.iota, _mobius_region(cfg.region, m))


def restrict(cfg: Configuration, contour: Contour, nodes: int | None = None) -> Configuration:
    """Part of ``cfg`` whose spectrum lies inside ``contour``.

    The Riesz projector ``P`` selects the generalized eigenspaces inside; with
    an orthonormal basis ``F`` of ``range(P)`` the result is
    ``(F^dagger A F, F^dagger P iota)``, ``F^dagger P`` being the left inverse of
    ``F`` that annihilates the complementary invariant subspace.
    """
    region = Region.inside(contour)
    if cfg.r == 0:
        return Configuration.empty(cfg.d, region)
    p = riesz_projector(cfg.A, contour, nodes=nodes)
    r = projector_rank(p)
    u = np.linalg.svd(p)[0][:, :r]
    left = u.conj().T @ p
    return Configuration(left @ cfg.A @ u, left @ cfg.iota, region)


def restrict_outside(cfg: Configuration, contour: Contour, nodes: int | None = None) -> Configuration:
    """Complementary part of :func:`restrict`: spectrum outside ``contour``."""
    if cfg.r == 0:
        return Configuration.empty(cfg.d, Region.outside(contour))
    q = np.eye(cfg.r) - riesz_projector(cfg.A, contour, nodes=nodes)
    r = projector_rank(q)
    u = np.linalg.svd(q)[0][:, :r]
    left = u.conj().T @ q
    return Configuration(left @ cfg.A @ u, left @ cfg.iota, Region.outside(contour))


def default_chart_candidates(contour: Contour | None = None, count: int = CHART_CANDIDATES) -> np.ndarray:
    """Equally spaced points on a ring well outside the contour (radius 3 around the unit circle)."""
    contour = contour or Contour.unit_circle()
    radius = CHART_RING * contour.extent
    return contour.centroid + radius * np.exp(2j * np.pi * np.arange(count) / count)


class Chart(NamedTuple):
    point: complex
    transformed: MatrixLaurentPoly
    target: Contour

    @property
    def mobius(self) -> MobiusTransform:
        return MobiusTransform.reciprocal_shift(self.point)


def chart_margin(p: MatrixLaurentPoly, q: complex) -> float:
    return float(np.linalg.svd(p.eval(q), compute_uv=False)[-1])


def chart_select(p: MatrixLaurentPoly, candidates=None, tol: float = 1e-8,
                 contour: Contour | None = None) -> Chart:
    """Choose the chart point ``q`` where ``p(q)`` is best conditioned.

    Returns ``q``, the transformed polynomial ``(-w)^l p(q + 1/w)`` (leading
    coefficient ``(-1)^l p(q)``) and the image of ``contour`` under
    ``w = 1/(z - q)``.
    """
    contour = contour or Contour.unit_circle()
    if p.k != 0:
        raise DomainError("chart_select needs an ordinary polynomial (k = 0)")
    cands = default_chart_candidates(contour) if candidates is None else np.asarray(candidates, dtype=complex)
    inside = contour.contains(cands) | (contour.distance(cands) <= 1e-9)
    margins = np.array([chart_margin(p, q) if not ins else -np.inf for q, ins in zip(cands, inside)])
    best = int(np.argmax(margins))
    if margins[best] <= tol * max(p.max_norm(), np.finfo(float).tiny):
        raise ChartError("no usable chart")
    q = complex(cands[best])
    m = MobiusTransform.reciprocal_shift(q)
    image, _ = m.map_contour(contour)
    return Chart(q, chart_transform(p, q), image)
