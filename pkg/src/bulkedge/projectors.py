"""Riesz spectral projectors and fields of their range frames over 2D parameter grids."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contours import Contour
from .errors import FormatError, ResolutionError, SpectrumOnContourError
from .jsonio import decode_matrix, encode_matrix

DEFAULT_NODES = 128
MAX_NODES = 2 ** 15
BOUNDARY_RTOL = 1e-6
IDEMPOTENT_TOL = 1e-8
TRACE_TOL = 1e-6


def pencil_eigvals(a: np.ndarray, b: np.ndarray, shifts=(2.5 + 1.7j, -3.1 + 0.6j, 0.4 - 2.9j)) -> np.ndarray:
    """Eigenvalues of stacked pencils ``z b - a``; infinite ones come back as ``inf``.

    Uses the shift-invert form ``(a - s b)^{-1} b`` so that numpy can batch the
    work; ``mu = 0`` there corresponds to an infinite eigenvalue.
    """
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1.0)
    for s in shifts:
        shifted = a - s * b
        cond = np.linalg.cond(shifted)
        if np.all(cond < 1e10):
            mu = np.linalg.eigvals(np.linalg.solve(shifted, b))
            finite = np.abs(mu) > 1e-11 * max(1.0, scale)
            with np.errstate(divide="ignore", invalid="ignore"):
                lam = np.where(finite, s + 1.0 / np.where(finite, mu, 1.0), np.inf)
            return lam
    raise ResolutionError("could not find a regular shift for the pencil eigenvalue solve")


def _quadrature_sum(a: np.ndarray, b: np.ndarray | None, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    eye = np.eye(n)
    rhs = eye if b is None else b
    rhs = np.broadcast_to(rhs, a.shape)
    lhs_b = eye if b is None else b
    total = np.zeros(a.shape, dtype=complex)
    # loop over nodes, batch over matrices: bounded memory, fixed summation order
    for zm, wm in zip(z, w):
        total += wm * np.linalg.solve(zm * lhs_b - a, rhs)
    return total / (2j * np.pi)


def purify(p: np.ndarray, steps: int = 60) -> np.ndarray:
    """Push an approximate idempotent onto the nearest spectral idempotent via ``3P^2 - 2P^3``."""
    for _ in range(steps):
        p2 = p @ p
        err = np.max(np.linalg.norm(p2 - p, axis=(-2, -1)))
        scale = max(1.0, float(np.max(np.linalg.norm(p, axis=(-2, -1)))))
        if err <= 1e-14 * scale ** 2:
            break
        p = 3 * p2 - 2 * p2 @ p
    return p


def riesz_projectors(mats: np.ndarray, contour: Contour, b: np.ndarray | None = None,
                     nodes: int | None = None, boundary_rtol: float = BOUNDARY_RTOL,
                     max_nodes: int = MAX_NODES) -> np.ndarray:
    """Spectral projectors ``(1/2 pi i) oint (z b - a)^{-1} b dz`` for a stack of matrices or pencils.

    ``mats`` has shape ``(..., n, n)``; ``b`` (same shape or ``(n, n)``)
    defaults to the identity.  The quadrature starts at ``nodes`` (the
    contour's own count by default) and doubles for the entries whose raw
    quadrature eigenvalues are not yet within 0.25 of 0 or 1; the result is
    then purified and checked for idempotency and an integral trace that
    matches the eigenvalue count inside ``contour``.
    """
    a = np.asarray(mats, dtype=complex)
    single = a.ndim == 2
    a = a.reshape((-1,) + a.shape[-2:])
    n = a.shape[-1]
    if b is not None:
        b = np.asarray(b, dtype=complex)
        b = np.broadcast_to(b.reshape((-1, n, n)) if b.ndim > 2 else b, (len(a), n, n))
    if n == 0:
        out = np.zeros(a.shape, dtype=complex)
        return out[0] if single else out.reshape(np.shape(mats))

    eig = np.linalg.eigvals(a) if b is None else pencil_eigvals(a, b)
    finite = np.isfinite(eig)
    safe = np.where(finite, eig, 0)
    dist = np.where(finite, contour.distance(safe), np.inf)
    if np.min(dist) < boundary_rtol * contour.diameter:
        raise SpectrumOnContourError("spectrum touches contour")
    counts = np.sum(finite & contour.contains(safe), axis=-1)

    m = int(nodes or contour.nodes)
    out = np.empty(a.shape, dtype=complex)
    todo = np.arange(len(a))
    while todo.size:
        if m > max_nodes:
            raise ResolutionError("projector not resolved; increase M")
        z, w = contour.quadrature(m)
        sub_b = None if b is None else b[todo]
        raw = _quadrature_sum(a[todo], sub_b, z, w)
        ev = np.linalg.eigvals(raw)
        good = np.all(np.minimum(np.abs(ev), np.abs(ev - 1)) < 0.25, axis=-1)
        out[todo[good]] = raw[good]
        todo = todo[~good]
        m *= 2

    out = purify(out)
    scale = np.maximum(1.0, np.linalg.norm(out, axis=(-2, -1))) ** 2
    idem = np.linalg.norm(out @ out - out, axis=(-2, -1)) / scale
    if np.max(idem) > IDEMPOTENT_TOL:
        raise ResolutionError("projector not idempotent after refinement")
    tr = np.trace(out, axis1=-2, axis2=-1)
    ranks = np.rint(tr.real)
    if np.max(np.abs(tr - ranks)) > TRACE_TOL:
        raise ResolutionError("projector trace is not integral")
    if np.any(ranks != counts):
        raise ResolutionError("projector rank disagrees with the eigenvalue count inside the contour")
    return out[0] if single else out.reshape(np.shape(mats))


def riesz_projector(mat: np.ndarray, contour: Contour, nodes: int | None = None,
                    b: np.ndarray | None = None) -> np.ndarray:
    """Riesz projector of a single matrix (or pencil) onto its spectrum inside ``contour``."""
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise FormatError("riesz_projector needs a square matrix")
    return riesz_projectors(mat, contour, b=b, nodes=nodes)


def projector_rank(p: np.ndarray) -> int:
    """Rank of an idempotent from its singular values, insisting on a clean gap around 0.5."""
    s = np.linalg.svd(p, compute_uv=False)
    r = int(np.sum(s > 0.5))
    if np.any((s > 0.25) & (s < 0.75)):
        raise ResolutionError("projector not resolved; increase M")
    return r


def range_frames(p: np.ndarray, rank: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal frames of ``range(p)`` for a stack of idempotents, and the per-entry ranks."""
    u, s, _ = np.linalg.svd(p)
    ranks = np.sum(s > 0.5, axis=-1)
    if np.any((s > 0.25) & (s < 0.75)):
        raise ResolutionError("projector not resolved; increase M")
    r = int(ranks.flat[0]) if rank is None else rank
    return u[..., :r], ranks


@dataclass
class ProjectorField:
    """Orthonormal range frames of a projector family on a periodic ``n1 x n2`` grid.

    ``frames[i, j]`` is an ``ambient x rank`` matrix; axis 0 is the first
    torus coordinate (the parameter x) and axis 1 the second (fiber angle or
    contour parameter).
    """

    frames: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=complex)
        if f.ndim != 4:
            raise FormatError("frames must have shape (n1, n2, ambient, rank)")
        self.frames = f

    @property
    def grid(self) -> tuple[int, int]:
        return self.frames.shape[0], self.frames.shape[1]

    @property
    def ambient(self) -> int:
        return self.frames.shape[2]

    @property
    def rank(self) -> int:
        return self.frames.shape[3]

    def orthonormality_defect(self) -> float:
        f = self.frames
        gram = np.conj(np.swapaxes(f, -1, -2)) @ f
        return float(np.max(np.abs(gram - np.eye(self.rank)), initial=0.0))

    def min_neighbor_overlap(self) -> float:
        """Smallest singular value of ``F^dagger F'`` over all adjacent node pairs."""
        if self.rank == 0:
            return 1.0
        f = self.frames
        worst = np.inf
        for axis in (0, 1):
            g = np.conj(np.swapaxes(f, -1, -2)) @ np.roll(f, -1, axis=axis)
            worst = min(worst, float(np.min(np.linalg.svd(g, compute_uv=False))))
        return worst

    def direct_sum(self, other: "ProjectorField") -> "ProjectorField":
        if self.grid != other.grid:
            raise FormatError("direct sum needs fields on the same grid")
        n1, n2 = self.grid
        f = np.zeros((n1, n2, self.ambient + other.ambient, self.rank + other.rank), dtype=complex)
        f[:, :, :self.ambient, :self.rank] = self.frames
        f[:, :, self.ambient:, self.rank:] = other.frames
        return ProjectorField(f, {"direct_sum": [self.meta, other.meta]})

    def regauged(self, unitaries: np.ndarray) -> "ProjectorField":
        """Same subspaces, frames multiplied on the right by per-node unitaries."""
        return ProjectorField(self.frames @ unitaries, dict(self.meta))

    def transposed(self) -> "ProjectorField":
        """Swap the two torus axes, which reverses the orientation."""
        return ProjectorField(np.swapaxes(self.frames, 0, 1), dict(self.meta))

    def flipped(self, axis: int) -> "ProjectorField":
        return ProjectorField(np.flip(self.frames, axis=axis), dict(self.meta))

    # -- persistence --------------------------------------------------------

    def to_json(self) -> dict:
        n1, n2 = self.grid
        return {
            "grid": [n1, n2],
            "ambient": self.ambient,
            "rank": self.rank,
            "meta": self.meta,
            "frames": [[encode_matrix(self.frames[i, j]) for j in range(n2)] for i in range(n1)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ProjectorField":
        n1, n2 = obj["grid"]
        shape = (int(obj["ambient"]), int(obj["rank"]))
        f = np.array([[decode_matrix(obj["frames"][i][j], shape) for j in range(n2)] for i in range(n1)])
        return cls(f.reshape(n1, n2, *shape), obj.get("meta", {}))

    def save_npz(self, path: str | Path) -> None:
        np.savez_compressed(path, frames=self.frames)

    @classmethod
    def load_npz(cls, path: str | Path) -> "ProjectorField":
        with np.load(path) as data:
            return cls(data["frames"])
