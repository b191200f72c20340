"""Configuration maps of matrix polynomials and the Bun projector families built from them."""

from __future__ import annotations

from math import comb

import numpy as np

from .configspace import (Configuration, chart_select, default_chart_candidates, mobius_apply, restrict,
                          restrict_outside)
from .contours import Contour, Region
from .errors import ChartError, ConsistencyError, DomainError, NotInvertibleError, RankJumpError
from .matpoly import INVERTIBLE_RTOL, MatrixLaurentPoly, MobiusTransform, companion, winding_number
from .projectors import ProjectorField, range_frames, riesz_projectors

BACKENDS = ("pencil", "chart")


def leading_invertible(p: MatrixLaurentPoly, tol: float = INVERTIBLE_RTOL) -> bool:
    smin = np.linalg.svd(p.coeffs[-1], compute_uv=False).min()
    return bool(smin > tol * max(p.max_norm(), np.finfo(float).tiny))


def _finite_part(cfg: Configuration) -> Configuration:
    """Drop the generalized eigenspace at ``w = 0`` (the point at infinity of the original chart)."""
    if cfg.r == 0:
        return cfg
    eig = np.abs(cfg.eigenvalues())
    scale = max(1.0, float(np.linalg.norm(cfg.A, 2)))
    finite = eig[eig > 1e-7 * scale]
    if finite.size == 0:
        return Configuration.empty(cfg.d)
    if finite.size == cfg.r:
        return cfg
    return restrict_outside(cfg, Contour.circle(0, 0.5 * finite.min()))


def conf_plane(p: MatrixLaurentPoly, tol: float = INVERTIBLE_RTOL, allow_chart: bool = False) -> Configuration:
    """Companion configuration of ``p`` on the whole plane (rank ``d l`` for invertible ``a_l``).

    With ``allow_chart`` a singular leading coefficient is handled through a
    Moebius chart; the result then has rank ``deg det p`` because the roots at
    infinity are discarded.
    """
    if p.k != 0:
        raise DomainError("conf_plane needs an ordinary polynomial (k = 0)")
    if leading_invertible(p, tol) or p.l == 0:
        a, iota = companion(p, tol)
        return Configuration(a, iota, Region.plane())
    if not allow_chart:
        raise NotInvertibleError("leading coefficient is singular; use chart_select")
    chart = chart_select(p, tol=tol)
    a, iota = companion(chart.transformed, tol)
    finite = _finite_part(Configuration(a, iota))
    return mobius_apply(finite, chart.mobius.inverse()).with_region(Region.plane())


def conf_via_chart(p: MatrixLaurentPoly, contour: Contour | None = None, candidates=None,
                   tol: float = INVERTIBLE_RTOL, nodes: int | None = None) -> Configuration:
    """Restricted configuration computed in a Moebius chart and pulled back to the z-plane."""
    contour = contour or Contour.unit_circle()
    chart = chart_select(p, candidates, tol, contour)
    a, iota = companion(chart.transformed, tol)
    cfg_w = restrict(Configuration(a, iota), chart.target, nodes=nodes)
    return mobius_apply(cfg_w, chart.mobius.inverse()).with_region(Region.inside(contour))


def conf_region(p: MatrixLaurentPoly, contour: Contour | None = None, tol: float = INVERTIBLE_RTOL,
                allow_chart: bool = True, nodes: int | None = None) -> Configuration:
    """Configuration of the roots of ``det p`` inside ``contour`` (unit circle by default).

    The rank is cross-checked against the argument-principle winding number.
    """
    contour = contour or Contour.unit_circle()
    if p.k != 0:
        raise DomainError("conf_region needs an ordinary polynomial (k = 0)")
    expected = winding_number(p, contour)
    if leading_invertible(p, tol) or p.l == 0:
        cfg = restrict(conf_plane(p, tol), contour, nodes=nodes)
    elif allow_chart:
        cfg = conf_via_chart(p, contour, tol=tol, nodes=nodes)
    else:
        raise NotInvertibleError("leading coefficient is singular; use chart_select")
    if cfg.r != expected:
        raise ConsistencyError(f"configuration rank {cfg.r} disagrees with winding number {expected}")
    return cfg


# -- families ---------------------------------------------------------------


def stack_family(family) -> np.ndarray:
    """Coefficient array ``(n1, n2, l + 1, d, d)`` from a nested list of polynomials or an array."""
    if isinstance(family, np.ndarray):
        arr = np.asarray(family, dtype=complex)
        if arr.ndim != 5 or arr.shape[-1] != arr.shape[-2]:
            raise DomainError("family array must have shape (n1, n2, l + 1, d, d)")
        return arr
    rows = []
    shape = None
    for row in family:
        out = []
        for p in row:
            if p.k != 0:
                raise DomainError("family members must be ordinary polynomials (k = 0)")
            if shape is None:
                shape = p.coeffs.shape
            elif p.coeffs.shape != shape:
                raise DomainError("all family members must share (d, l)")
            out.append(p.coeffs)
        rows.append(out)
    return np.array(rows, dtype=complex)


def pencil_stack(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched version of :func:`bulkedge.matpoly.pencil` over leading axes."""
    *lead, lp1, d, _ = coeffs.shape
    l = lp1 - 1  # noqa: E741
    n = d * l
    a = np.zeros((*lead, n, n), dtype=complex)
    b = np.broadcast_to(np.eye(n, dtype=complex), (*lead, n, n)).copy()
    for i in range(1, l):
        a[..., i * d:(i + 1) * d, (i - 1) * d:i * d] = np.eye(d)
    a[..., :, (l - 1) * d:] = -coeffs[..., :l, :, :].reshape(*lead, n, d)
    b[..., (l - 1) * d:, (l - 1) * d:] = coeffs[..., l, :, :]
    return a, b


def chart_stack(coeffs: np.ndarray, q: complex) -> np.ndarray:
    """Batched ``(-w)^l p(q + 1/w)`` on coefficient arrays."""
    l = coeffs.shape[-3] - 1  # noqa: E741
    out = np.zeros_like(coeffs, dtype=complex)
    sign = (-1) ** l
    for j in range(l + 1):
        for i in range(j + 1):
            out[..., l - j + i, :, :] += sign * comb(j, i) * q ** i * coeffs[..., j, :, :]
    return out


def companion_stack(coeffs: np.ndarray) -> np.ndarray:
    """Batched companion matrices (identity subdiagonal, last block column ``-a_i a_l^{-1}``)."""
    *lead, lp1, d, _ = coeffs.shape
    l = lp1 - 1  # noqa: E741
    n = d * l
    a = np.zeros((*lead, n, n), dtype=complex)
    for i in range(1, l):
        a[..., i * d:(i + 1) * d, (i - 1) * d:i * d] = np.eye(d)
    lead_t = np.swapaxes(coeffs[..., l, :, :], -1, -2)[..., None, :, :]
    normalized = np.swapaxes(np.linalg.solve(lead_t, np.swapaxes(coeffs[..., :l, :, :], -1, -2)), -1, -2)
    a[..., :, (l - 1) * d:] = -normalized.reshape(*lead, n, d)
    return a


def _eval_stack(coeffs: np.ndarray, z: complex) -> np.ndarray:
    powers = z ** np.arange(coeffs.shape[-3])
    return np.einsum("j,...jab->...ab", powers, coeffs)


def select_family_chart(coeffs: np.ndarray, contour: Contour, candidates=None,
                        tol: float = INVERTIBLE_RTOL) -> complex:
    """One chart point for a whole family: maximize the worst conditioning of ``p(q)`` over the grid."""
    cands = default_chart_candidates(contour) if candidates is None else np.asarray(candidates, dtype=complex)
    best_q, best = None, -np.inf
    for q in cands:
        if contour.contains(q) or contour.distance(q) <= 1e-9:
            continue
        smin = float(np.min(np.linalg.svd(_eval_stack(coeffs, q), compute_uv=False)[..., -1]))
        if smin > best:
            best_q, best = complex(q), smin
    if best_q is None or best <= tol * max(float(np.max(np.abs(coeffs))), np.finfo(float).tiny):
        raise ChartError("no usable chart")
    return best_q


def bun_family(family, contour: Contour | None = None, backend: str = "pencil", nodes: int | None = None,
               chart_point: complex | None = None, tol: float = INVERTIBLE_RTOL) -> ProjectorField:
    """Projector field of the roots inside ``contour`` for a grid of polynomials.

    Every fiber is a subspace of the same ``C^{d l}``.  The ``pencil`` backend
    takes the right deflating subspace of ``z B - A``; the ``chart`` backend
    uses one Moebius chart for the whole grid and the invariant subspace of
    the transformed companion matrix.  A non-constant rank raises
    :class:`RankJumpError`.
    """
    if backend not in BACKENDS:
        raise DomainError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    contour = contour or Contour.unit_circle()
    coeffs = stack_family(family)
    n1, n2, lp1, d, _ = coeffs.shape
    n = d * (lp1 - 1)
    meta = {"backend": backend, "ambient": n}
    if n == 0:
        return ProjectorField(np.zeros((n1, n2, 0, 0)), meta)
    if backend == "pencil":
        a, b = pencil_stack(coeffs)
        proj = riesz_projectors(a, contour, b=b, nodes=nodes)
    else:
        q = select_family_chart(coeffs, contour, tol=tol) if chart_point is None else complex(chart_point)
        image, _ = MobiusTransform.reciprocal_shift(q).map_contour(contour)
        proj = riesz_projectors(companion_stack(chart_stack(coeffs, q)), image, nodes=nodes)
        meta["chart_point"] = [q.real, q.imag]
    ranks = np.rint(np.trace(proj, axis1=-2, axis2=-1).real).astype(int)
    if ranks.min() != ranks.max():
        bad = np.argwhere(ranks != ranks.flat[0])[0]
        raise RankJumpError(f"r not constant: refine model or contour (rank {ranks.flat[0]} vs "
                            f"{ranks[tuple(bad)]} at grid node {tuple(int(i) for i in bad)})")
    frames, _ = range_frames(proj, int(ranks.flat[0]))
    meta["rank"] = int(ranks.flat[0])
    return ProjectorField(frames, meta)
