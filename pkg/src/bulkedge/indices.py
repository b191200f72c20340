"""Lattice Chern numbers, bulk and edge indices, spectral flow and the bulk-edge verifier."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .confmap import bun_family
from .contours import Contour
from .errors import ConvergenceError, DomainError, FormatError, GapError, RankJumpError, ResolutionError
from .jsonio import decode_matrix, encode_matrix
from .models import GapReport, ModelSpec, gap_check
from .projectors import ProjectorField, range_frames, riesz_projectors

ADMISSIBLE_PHASE = np.pi / 2
MIN_OVERLAP = 0.2
ROUNDING_GAP = 0.05
ORTHONORMAL_TOL = 1e-10
# single global orientation sign, fixed so that the QWZ lower band at m = 1 has bulk index +1
ORIENTATION = -1
DEFAULT_GRID = (16, 16)
MAX_GRID = 128


def thread_count() -> int:
    """Worker cap from ``BULKEDGE_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BULKEDGE_THREADS", "1")))
    except ValueError:
        return 1


def _map_rows(fn: Callable[[np.ndarray], np.ndarray], rows: np.ndarray, workers: int | None) -> np.ndarray:
    """Apply ``fn`` to chunks of the leading axis, in parallel, reassembling in order."""
    workers = workers or thread_count()
    if workers <= 1 or len(rows) < 2:
        return fn(rows)
    chunks = np.array_split(rows, min(workers, len(rows)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts)


# -- Chern numbers ----------------------------------------------------------


class ChernDiagnostics(NamedTuple):
    value: int
    raw: float
    max_phase: float
    min_overlap: float


def _links(frames: np.ndarray, axis: int) -> np.ndarray:
    nxt = np.roll(frames, -1, axis=axis)
    return np.linalg.det(np.conj(np.swapaxes(frames, -1, -2)) @ nxt)


def plaquette_phases(f: ProjectorField) -> np.ndarray:
    """Field strength per plaquette, corners ordered (i, j), (i+1, j), (i+1, j+1), (i, j+1)."""
    if f.rank == 0:
        return np.zeros(f.grid)
    u1 = _links(f.frames, 0)
    u2 = _links(f.frames, 1)
    loop = u1 * np.roll(u2, -1, axis=0) * np.conj(np.roll(u1, -1, axis=1)) * np.conj(u2)
    return np.angle(loop)


def chern_diagnostics(f: ProjectorField) -> ChernDiagnostics:
    if f.rank == 0 or f.rank == f.ambient:
        return ChernDiagnostics(0, 0.0, 0.0, 1.0)
    if f.orthonormality_defect() > ORTHONORMAL_TOL:
        raise FormatError("projector field frames are not orthonormal")
    overlap = f.min_neighbor_overlap()
    if overlap < MIN_OVERLAP:
        raise ResolutionError(f"neighbour overlap {overlap:.3g} below {MIN_OVERLAP}: refine grid")
    phases = plaquette_phases(f)
    worst = float(np.max(np.abs(phases)))
    if worst >= ADMISSIBLE_PHASE:
        raise ResolutionError(f"plaquette phase {worst:.3g} is not admissible: refine grid")
    raw = ORIENTATION * float(np.sum(phases)) / (2 * np.pi)
    value = int(np.rint(raw))
    if abs(raw - value) >= ROUNDING_GAP:
        raise ResolutionError(f"lattice Chern sum {raw:.4f} is not close to an integer")
    return ChernDiagnostics(value, raw, worst, overlap)


def chern_number(f: ProjectorField) -> int:
    """First Chern number of the range bundle by the plaquette (link-variable) method."""
    return chern_diagnostics(f).value


# -- fields -----------------------------------------------------------------


def torus_angles(n: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


def bulk_field(model: ModelSpec, grid: tuple[int, int] = DEFAULT_GRID, nodes: int | None = None,
               workers: int | None = None) -> ProjectorField:
    """Frames of the Riesz projectors of ``H_x(exp(ik))`` over the gap contour, on an (x, k) grid."""
    n1, n2 = grid
    xs = torus_angles(n1)
    zs = np.exp(1j * torus_angles(n2))

    def rows(chunk):
        return riesz_projectors(model.symbol_grid(chunk, zs), model.gap, nodes=nodes)

    proj = _map_rows(rows, xs, workers)
    ranks = np.rint(np.trace(proj, axis1=-2, axis2=-1).real).astype(int)
    if ranks.min() != ranks.max():
        raise RankJumpError("bulk projector rank jumps: the gap contour is crossed by the spectrum")
    frames, _ = range_frames(proj, int(ranks.flat[0]))
    return ProjectorField(frames, {"kind": "bulk", "model": model.name, "rank": int(ranks.flat[0])})


def edge_family(model: ModelSpec, grid: tuple[int, int]) -> np.ndarray:
    """Coefficients of ``z^k (H_x(z) - lambda)`` over x in S^1 and lambda on the gap contour."""
    n1, n2 = grid
    coeffs = model.coeff_array(torus_angles(n1))
    lams = model.gap.arclength_points(n2)
    fam = np.repeat(coeffs[:, None], n2, axis=1)
    fam[:, :, model.k] -= lams[None, :, None, None] * np.eye(model.d)
    return fam


def edge_field(model: ModelSpec, grid: tuple[int, int] = DEFAULT_GRID, backend: str = "pencil",
               nodes: int | None = None, workers: int | None = None,
               chart_point: complex | None = None) -> ProjectorField:
    """Bun family of ``z^k (H_x - lambda)`` over (x, lambda), roots taken inside the unit circle."""
    fam = edge_family(model, grid)
    unit = Contour.unit_circle()
    if backend == "chart" and chart_point is None:
        from .confmap import select_family_chart
        chart_point = select_family_chart(fam, unit)

    def rows(chunk):
        return bun_family(chunk, unit, backend=backend, nodes=nodes, chart_point=chart_point).frames

    frames = _map_rows(rows, fam, workers)
    meta = {"kind": "edge", "model": model.name, "backend": backend, "rank": frames.shape[-1]}
    if chart_point is not None:
        meta["chart_point"] = [complex(chart_point).real, complex(chart_point).imag]
    return ProjectorField(frames, meta)


# -- indices with refinement -------------------------------------------------


@dataclass
class IndexResult:
    value: int | None
    converged: bool
    grids: list = field(default_factory=list)
    history: list = field(default_factory=list)
    rank: int | None = None
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": self.value, "converged": self.converged, "grids": self.grids,
                "history": self.history, "rank": self.rank, "notes": self.notes}


def refine_index(compute: Callable[[tuple[int, int]], tuple[int, int]], initial_grid=DEFAULT_GRID,
                 max_grid: int = MAX_GRID) -> IndexResult:
    """Double the grid until two consecutive resolved values agree."""
    grid = tuple(int(g) for g in initial_grid)
    result = IndexResult(None, False)
    last = None
    while max(grid) <= max_grid:
        try:
            value, rank = compute(grid)
        except ResolutionError as exc:
            result.grids.append(list(grid))
            result.history.append(None)
            result.notes.append(f"{grid[0]}x{grid[1]}: {exc}")
            last = None
        else:
            result.grids.append(list(grid))
            result.history.append(value)
            result.rank = rank
            if last is not None and value == last:
                result.value, result.converged = value, True
                return result
            last = value
        grid = (2 * grid[0], 2 * grid[1])
    resolved = [v for v in result.history if v is not None]
    result.value = resolved[-1] if resolved else None
    return result


def bulk_index_result(model: ModelSpec, initial_grid=DEFAULT_GRID, max_grid: int = MAX_GRID,
                      nodes: int | None = None, workers: int | None = None) -> IndexResult:
    def compute(grid):
        f = bulk_field(model, grid, nodes=nodes, workers=workers)
        return -chern_number(f), f.rank
    return refine_index(compute, initial_grid, max_grid)


def edge_index_result(model: ModelSpec, initial_grid=DEFAULT_GRID, max_grid: int = MAX_GRID,
                      backend: str = "pencil", nodes: int | None = None,
                      workers: int | None = None) -> IndexResult:
    def compute(grid):
        f = edge_field(model, grid, backend=backend, nodes=nodes, workers=workers)
        return chern_number(f), f.rank
    return refine_index(compute, initial_grid, max_grid)


def _require(result: IndexResult, what: str) -> int:
    if not result.converged:
        raise ConvergenceError(f"{what} index did not stabilise up to the grid cap: {result.history}")
    return result.value


def bulk_index(model: ModelSpec, grid=DEFAULT_GRID, max_grid: int = MAX_GRID) -> int:
    """Minus the Chern number of the occupied-band bundle over (x, k), refined until stable."""
    return _require(bulk_index_result(model, grid, max_grid), "bulk")


def edge_index(model: ModelSpec, grid=DEFAULT_GRID, max_grid: int = MAX_GRID, backend: str = "pencil") -> int:
    """Chern number of the Bun family of the half-line compressions over (x, lambda)."""
    return _require(edge_index_result(model, grid, max_grid, backend), "edge")


@dataclass
class IndexReport:
    model: str
    bulk: IndexResult
    edge: IndexResult
    gap: GapReport
    settings: dict
    timing: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.bulk.converged and self.edge.converged

    @property
    def equal(self) -> bool:
        return self.converged and self.bulk.value == self.edge.value

    def to_json(self, with_timing: bool = True) -> dict:
        out = {
            "model": self.model,
            "bulk": self.bulk.value,
            "edge": self.edge.value,
            "equal": self.equal,
            "converged": self.converged,
            "bulk_refinement": self.bulk.to_json(),
            "edge_refinement": self.edge.to_json(),
            "gap": self.gap.to_json(),
            "settings": self.settings,
        }
        if with_timing:
            out["timing"] = self.timing
        return out


def verify_correspondence(model: ModelSpec, initial_grid=DEFAULT_GRID, max_grid: int = MAX_GRID,
                          backend: str = "pencil", gap_margin: float = 1e-2, nodes: int | None = None,
                          workers: int | None = None) -> IndexReport:
    """Bulk and edge index computed independently, each refined until stable under doubling."""
    t0 = time.perf_counter()
    gap = gap_check(model, margin=gap_margin)
    if not gap.ok:
        raise GapError(f"gap contour meets the spectrum (min singular value {gap.min_singular:.3g})")
    t1 = time.perf_counter()
    bulk = bulk_index_result(model, initial_grid, max_grid, nodes, workers)
    t2 = time.perf_counter()
    edge = edge_index_result(model, initial_grid, max_grid, backend, nodes, workers)
    t3 = time.perf_counter()
    settings = {
        "initial_grid": list(initial_grid),
        "max_grid": max_grid,
        "backend": backend,
        "gap_margin": gap_margin,
        "quadrature_nodes": nodes or model.gap.nodes,
        "admissible_phase": ADMISSIBLE_PHASE,
        "min_overlap": MIN_OVERLAP,
        "rounding_gap": ROUNDING_GAP,
    }
    timing = {"gap_s": t1 - t0, "bulk_s": t2 - t1, "edge_s": t3 - t2, "total_s": t3 - t0}
    return IndexReport(model.name, bulk, edge, gap, settings, timing)


# -- spectral flow -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HermitianPath:
    """Hermitian matrices sampled at increasing times from -1 to 1."""

    ts: np.ndarray
    mats: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        mats = np.asarray(self.mats, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or len(ts) != len(mats) or len(ts) < 2:
            raise FormatError("a path needs at least two times and one square matrix per time")
        if np.any(np.diff(ts) <= 0):
            raise FormatError("path times must be strictly increasing")
        if np.max(np.abs(mats - np.conj(np.swapaxes(mats, 1, 2)))) > 1e-10:
            raise DomainError("path matrices must be Hermitian")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "mats", mats)

    @classmethod
    def from_function(cls, fn: Callable[[float], np.ndarray], samples: int = 401,
                      t0: float = -1.0, t1: float = 1.0) -> "HermitianPath":
        ts = np.linspace(t0, t1, samples)
        return cls(ts, np.array([np.atleast_2d(fn(t)) for t in ts]))

    def to_json(self) -> dict:
        return {"ts": self.ts.tolist(), "mats": [encode_matrix(m) for m in self.mats]}

    @classmethod
    def from_json(cls, obj: dict) -> "HermitianPath":
        try:
            return cls(obj["ts"], [decode_matrix(m) for m in obj["mats"]])
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad path description: {exc}") from exc


def three_level_matrix(t: float) -> np.ndarray:
    return np.diag([t / 2 + 0.25, -t / 2, t * t / 4 + t / 2 - 0.25])


def three_level_path(samples: int = 401) -> HermitianPath:
    return HermitianPath.from_function(three_level_matrix, samples)


class Crossing(NamedTuple):
    branch: int
    t: float
    direction: int


class SpectralFlow(NamedTuple):
    value: int
    crossings: list
    eigenvalues: np.ndarray

    @property
    def crossing_count(self) -> int:
        return sum(c.direction for c in self.crossings)


def _nonnegative(vals: np.ndarray) -> int:
    return int(np.sum(vals >= 0))


def spectral_flow_trace(path: HermitianPath, tol: float = 1e-10) -> SpectralFlow:
    """Endpoint spectral flow plus the signed zero crossings of the sorted eigenvalue branches."""
    eig = np.linalg.eigvalsh(path.mats)
    for end in (eig[0], eig[-1]):
        if np.min(np.abs(end)) <= tol:
            raise DomainError("not in Herm0: endpoint has an eigenvalue at zero")
    value = _nonnegative(eig[-1]) - _nonnegative(eig[0])
    crossings = []
    sign = eig >= 0
    for i in range(len(path.ts) - 1):
        for b in np.flatnonzero(sign[i] != sign[i + 1]):
            a0, a1 = eig[i, b], eig[i + 1, b]
            frac = a0 / (a0 - a1) if a0 != a1 else 0.5
            t = path.ts[i] + frac * (path.ts[i + 1] - path.ts[i])
            crossings.append(Crossing(int(b), float(t), 1 if sign[i + 1, b] else -1))
    return SpectralFlow(value, crossings, eig)


def spectral_flow(path: HermitianPath, tol: float = 1e-10) -> int:
    """Nonnegative-eigenvalue count at t = 1 minus the count at t = -1."""
    return spectral_flow_trace(path, tol).value


def square_indices(family: Callable[[float, float], np.ndarray], samples: int = 201) -> tuple[int, int]:
    """Spectral flows across a square family of Hermitian matrices, sides paired two ways.

    ``ind1 = sf(H(1, .)) - sf(H(-1, .))`` and ``ind2 = sf(H(., 1)) - sf(H(., -1))``.
    """
    def flow(fn):
        return spectral_flow(HermitianPath.from_function(fn, samples))

    ind1 = flow(lambda t: family(1.0, t)) - flow(lambda t: family(-1.0, t))
    ind2 = flow(lambda s: family(s, 1.0)) - flow(lambda s: family(s, -1.0))
    return ind1, ind2
