"""Finite sections of half-line block Toeplitz operators and their cokernel diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .contours import Contour
from .errors import ConvergenceError, DomainError
from .matpoly import MatrixLaurentPoly, winding_number

RANK_TOL = 1e-6
GAP_RATIO = 1e2
MAX_SIZE = 4096
DENSE_LIMIT = 600
STABLE_RATIO = 0.75


def block_toeplitz(p: MatrixLaurentPoly, rows: int, cols: int) -> sp.csr_matrix:
    """Sparse block Toeplitz section with block ``(i, i')`` equal to ``a_{i - i'}``, site-major layout."""
    d = p.d
    mat = sp.lil_matrix((rows * d, cols * d), dtype=complex)
    for j in p.degrees:
        a = p.coeff(j)
        if not np.any(a):
            continue
        for i in range(max(0, j), min(rows, cols + j)):
            ip = i - j
            mat[i * d:(i + 1) * d, ip * d:(ip + 1) * d] = a
    return mat.tocsr()


@dataclass(frozen=True, eq=False)
class ToeplitzTruncation:
    """``N x N`` block section of the half-line compression of ``symbol``."""

    symbol: MatrixLaurentPoly
    N: int
    matrix: sp.csr_matrix

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def truncate(p: MatrixLaurentPoly, N: int) -> ToeplitzTruncation:
    if N <= p.k + p.l:
        raise DomainError(f"truncation size must exceed k + l = {p.k + p.l}")
    return ToeplitzTruncation(p, int(N), block_toeplitz(p, N, N))


def _gram_eigs(g: sp.spmatrix, count: int) -> tuple[np.ndarray, float]:
    """Smallest ``count`` eigenvalues and the largest eigenvalue of a Hermitian banded Gram matrix."""
    n = g.shape[0]
    if n <= DENSE_LIMIT:
        ev = scipy.linalg.eigvalsh(g.toarray())
        return ev[:count], float(ev[-1])
    coo = g.tocoo()
    bw = int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0
    band = np.zeros((bw + 1, n), dtype=complex)
    for u in range(bw + 1):
        band[bw - u, u:] = g.diagonal(u)
    low = scipy.linalg.eigvals_banded(band, select="i", select_range=(0, count - 1))
    high = scipy.linalg.eigvals_banded(band, select="i", select_range=(n - 1, n - 1))
    return low, float(high[0])


@dataclass
class SmallSingularValues:
    count: int
    largest: float
    below: np.ndarray
    smallest_above: float
    conclusive: bool


def _small_singular(mat: sp.spmatrix, expected: int, rank_tol: float, left: bool) -> SmallSingularValues:
    g = (mat @ mat.conj().T) if left else (mat.conj().T @ mat)
    g = sp.csr_matrix(g)
    n = g.shape[0]
    count = min(n, expected + 8)
    low, high = _gram_eigs(g, count)
    sv = np.sqrt(np.clip(low, 0, None))
    smax = float(np.sqrt(max(high, 0.0)))
    small = sv < rank_tol * smax
    nsmall = int(np.sum(small))
    above = sv[~small]
    next_sv = float(above[0]) if above.size else smax
    largest_small = float(sv[small].max()) if nsmall else 0.0
    conclusive = nsmall < count and (nsmall == 0 or next_sv >= GAP_RATIO * max(largest_small, 1e-300))
    return SmallSingularValues(nsmall, smax, sv[small], next_sv, conclusive)


def coker_section(p: MatrixLaurentPoly, N: int) -> sp.csr_matrix:
    """Rows ``0..N-1`` with every column they touch (``N x (N + k)`` blocks)."""
    return block_toeplitz(p, N, N + p.k)


def ker_section(p: MatrixLaurentPoly, N: int) -> sp.csr_matrix:
    """Columns ``0..N-1`` with every row they touch (``(N + l) x N`` blocks)."""
    return block_toeplitz(p, N + p.l, N)


def coker_dim_estimate(t: ToeplitzTruncation, rank_tol: float = RANK_TOL) -> int:
    """Number of left singular directions of the section below ``rank_tol`` times the largest one.

    The section keeps the first ``N`` rows together with all columns they
    touch, so for polynomial symbols (k = 0) it is the square truncation.
    """
    return _coker_info(t.symbol, t.N, rank_tol).count


def _coker_info(p: MatrixLaurentPoly, N: int, rank_tol: float) -> SmallSingularValues:
    return _small_singular(coker_section(p, N), p.d * (p.k + p.l), rank_tol, left=True)


def ker_dim_estimate(p: MatrixLaurentPoly, N: int, rank_tol: float = RANK_TOL) -> int:
    return _small_singular(ker_section(p, N), p.d * (p.k + p.l), rank_tol, left=False).count


@dataclass
class CokerScan:
    N_sequence: list = field(default_factory=list)
    coker_dims: list = field(default_factory=list)
    smallest_nonzero: list = field(default_factory=list)
    stabilized: bool = False
    value: int | None = None
    index: int | None = None

    def to_json(self) -> dict:
        return {
            "N_sequence": self.N_sequence,
            "coker_dims": self.coker_dims,
            "smallest_nonzero": self.smallest_nonzero,
            "stabilized": self.stabilized,
            "coker_dim": self.value,
            "index": self.index,
        }


def stabilized_coker_dim(p: MatrixLaurentPoly, N0: int | None = None, rank_tol: float = RANK_TOL,
                         max_size: int = MAX_SIZE, strict: bool = True) -> CokerScan:
    """Double ``N`` until two consecutive conclusive estimates agree.

    Besides equal counts, the smallest singular value above the threshold
    stay within ``STABLE_RATIO`` between the two sizes; this keeps a slowly
    decaying mode (a root close to the circle, whose singular value falls
    like 1/N or faster) from producing a premature agreement.
    """
    N = int(N0 or 8 * (p.k + p.l + 2))
    scan = CokerScan()
    prev = None
    while N * p.d <= max_size:
        info = _coker_info(p, N, rank_tol)
        scan.N_sequence.append(N)
        scan.coker_dims.append(info.count if info.conclusive else None)
        scan.smallest_nonzero.append(info.smallest_above)
        if info.conclusive:
            if prev is not None and prev.count == info.count and \
                    STABLE_RATIO < info.smallest_above / prev.smallest_above < 1 / STABLE_RATIO:
                scan.stabilized, scan.value = True, info.count
                scan.index = toeplitz_index(p)
                return scan
            prev = info
        else:
            prev = None
        N *= 2
    if strict:
        raise ConvergenceError(f"cokernel estimate did not stabilise below N*d = {max_size}: {scan.coker_dims}")
    scan.index = toeplitz_index(p)
    return scan


def toeplitz_index(p: MatrixLaurentPoly) -> int:
    """Fredholm index of the half-line compression: minus the winding number of ``det p``."""
    return -winding_number(p, Contour.unit_circle())
