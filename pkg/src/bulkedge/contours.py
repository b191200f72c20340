"""Oriented simple closed curves in the complex plane and the regions they bound.

All contours are traversed counterclockwise.  A contour carries its default
number of quadrature nodes so that a serialized contour reproduces the same
numbers when it is read back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FormatError
from .jsonio import decode_complex, encode_complex

MIN_NODES = 16
_DENSE = 4096


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return np.sign(((b - a).conjugate() * (c - a)).imag)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return bool(o1 * o2 < 0 and o3 * o4 < 0)


@dataclass(frozen=True)
class Contour:
    """A circle, a rotated ellipse or a closed polygon.

    Use the :meth:`circle`, :meth:`ellipse` and :meth:`polyline` constructors
    rather than the raw initializer.
    """

    kind: str
    center: complex = 0j
    radius: float = 1.0
    semi_axes: tuple[float, float] = (1.0, 1.0)
    rotation: float = 0.0
    vertices: tuple[complex, ...] = field(default_factory=tuple)
    nodes: int = 128

    def __post_init__(self):
        if self.nodes < MIN_NODES:
            raise DomainError(f"contour needs at least {MIN_NODES} quadrature nodes")
        if self.kind == "circle":
            if not self.radius > 0:
                raise DomainError("circle radius must be positive")
        elif self.kind == "ellipse":
            if min(self.semi_axes) <= 0:
                raise DomainError("ellipse semi-axes must be positive")
        elif self.kind == "polyline":
            vs = np.asarray(self.vertices, dtype=complex)
            if vs.size >= 2 and vs[0] == vs[-1]:
                vs = vs[:-1]
                object.__setattr__(self, "vertices", tuple(complex(v) for v in vs))
            if vs.size < 3:
                raise DomainError("a polygon needs at least three vertices")
            if not self._is_simple(vs):
                raise DomainError("polyline contour is not simple")
            if self._signed_area(vs) < 0:
                # store counterclockwise
                object.__setattr__(self, "vertices", tuple(complex(v) for v in vs[::-1]))
        else:
            raise DomainError(f"unknown contour kind {self.kind!r}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def circle(cls, center: complex = 0j, radius: float = 1.0, nodes: int = 128) -> "Contour":
        return cls("circle", center=complex(center), radius=float(radius), nodes=int(nodes))

    @classmethod
    def unit_circle(cls, nodes: int = 128) -> "Contour":
        return cls.circle(0j, 1.0, nodes)

    @classmethod
    def ellipse(cls, center: complex, semi_axes: tuple[float, float], rotation: float = 0.0,
                nodes: int = 128) -> "Contour":
        a, b = semi_axes
        return cls("ellipse", center=complex(center), semi_axes=(float(a), float(b)),
                   rotation=float(rotation), nodes=int(nodes))

    @classmethod
    def polyline(cls, vertices, nodes: int = 128) -> "Contour":
        return cls("polyline", vertices=tuple(complex(v) for v in vertices), nodes=int(nodes))

    # -- geometry -----------------------------------------------------------

    @staticmethod
    def _signed_area(vs: np.ndarray) -> float:
        nxt = np.roll(vs, -1)
        return 0.5 * float(np.sum(vs.real * nxt.imag - nxt.real * vs.imag))

    @staticmethod
    def _is_simple(vs: np.ndarray) -> bool:
        n = len(vs)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(vs[i], vs[(i + 1) % n], vs[j], vs[(j + 1) % n]):
                    return False
        return True

    def _edges(self):
        vs = np.asarray(self.vertices, dtype=complex)
        return vs, np.roll(vs, -1)

    def point(self, t):
        """Point at normalized parameter ``t`` in [0, 1) (arclength for polygons)."""
        t = np.asarray(t, dtype=float) % 1.0
        if self.kind == "circle":
            return self.center + self.radius * np.exp(2j * np.pi * t)
        if self.kind == "ellipse":
            a, b = self.semi_axes
            th = 2 * np.pi * t
            return self.center + np.exp(1j * self.rotation) * (a * np.cos(th) + 1j * b * np.sin(th))
        start, end = self._edges()
        lengths = np.abs(end - start)
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        s = t * cum[-1]
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lengths) - 1)
        frac = (s - cum[idx]) / lengths[idx]
        return start[idx] + frac * (end[idx] - start[idx])

    def sample(self, n: int) -> np.ndarray:
        """``n`` ordered points, uniform in the curve parameter."""
        return self.point(np.arange(n) / n)

    def arclength_points(self, n: int) -> np.ndarray:
        """``n`` points uniformly spaced in arclength, starting at parameter 0."""
        if self.kind != "ellipse":
            return self.sample(n)
        t = np.arange(_DENSE) / _DENSE
        pts = self.point(t)
        seg = np.abs(np.diff(np.concatenate([pts, pts[:1]])))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.arange(n) / n * cum[-1]
        tt = np.interp(targets, cum, np.concatenate([t, [1.0]]))
        return self.point(tt)

    def quadrature(self, nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``z`` and weights ``w`` with ``sum(w * f(z))`` approximating the contour integral of ``f``.

        Circles and ellipses use the periodic trapezoid rule; polygons use
        Gauss-Legendre on each edge.
        """
        m = int(nodes or self.nodes)
        if self.kind in ("circle", "ellipse"):
            t = np.arange(m) / m
            z = self.point(t)
            if self.kind == "circle":
                dz = 2j * np.pi * (z - self.center)
            else:
                a, b = self.semi_axes
                th = 2 * np.pi * t
                dz = 2 * np.pi * np.exp(1j * self.rotation) * (-a * np.sin(th) + 1j * b * np.cos(th))
            return z, dz / m
        start, end = self._edges()
        per_edge = max(8, int(np.ceil(m / len(start))))
        x, wx = np.polynomial.legendre.leggauss(per_edge)
        half = (end - start)[:, None] / 2
        z = (start[:, None] + end[:, None]) / 2 + half * x[None, :]
        w = half * wx[None, :]
        return z.ravel(), w.ravel()

    def contains(self, w) -> np.ndarray:
        """True for points strictly inside the bounded component."""
        w = np.asarray(w, dtype=complex)
        if self.kind == "circle":
            return np.abs(w - self.center) < self.radius
        if self.kind == "ellipse":
            a, b = self.semi_axes
            u = (w - self.center) * np.exp(-1j * self.rotation)
            return (u.real / a) ** 2 + (u.imag / b) ** 2 < 1
        start, end = self._edges()
        ang = np.angle((end[None, :] - w.reshape(-1, 1)) / (start[None, :] - w.reshape(-1, 1)))
        wind = np.rint(ang.sum(axis=1) / (2 * np.pi))
        return (wind != 0).reshape(w.shape)

    def distance(self, w) -> np.ndarray:
        """Euclidean distance from each point to the curve."""
        w = np.asarray(w, dtype=complex)
        if self.kind == "circle":
            return np.abs(np.abs(w - self.center) - self.radius)
        if self.kind == "ellipse":
            pts = self.sample(_DENSE)
            flat = w.reshape(-1)
            out = np.empty(flat.shape)
            for s in range(0, flat.size, 1024):
                out[s:s + 1024] = np.min(np.abs(flat[s:s + 1024, None] - pts[None, :]), axis=1)
            return out.reshape(w.shape)
        start, end = self._edges()
        flat = w.reshape(-1, 1)
        seg = (end - start)[None, :]
        t = np.clip(((flat - start[None, :]) * seg.conjugate()).real / np.abs(seg) ** 2, 0, 1)
        d = np.abs(flat - (start[None, :] + t * seg))
        return d.min(axis=1).reshape(w.shape)

    @property
    def diameter(self) -> float:
        if self.kind == "circle":
            return 2 * self.radius
        if self.kind == "ellipse":
            return 2 * max(self.semi_axes)
        vs = np.asarray(self.vertices)
        return float(np.max(np.abs(vs[:, None] - vs[None, :])))

    @property
    def centroid(self) -> complex:
        if self.kind in ("circle", "ellipse"):
            return self.center
        return complex(np.mean(self.sample(_DENSE)))

    @property
    def extent(self) -> float:
        """Largest distance from the centroid to the curve."""
        return float(np.max(np.abs(self.sample(512) - self.centroid)))

    def with_nodes(self, nodes: int) -> "Contour":
        from dataclasses import replace
        return replace(self, nodes=int(nodes))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "nodes": self.nodes}
        if self.kind == "circle":
            out.update(center=encode_complex(self.center), radius=self.radius)
        elif self.kind == "ellipse":
            out.update(center=encode_complex(self.center), semi_axes=list(self.semi_axes),
                       rotation=self.rotation)
        else:
            out["vertices"] = [encode_complex(v) for v in self.vertices]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Contour":
        try:
            kind = obj["kind"]
            nodes = int(obj.get("nodes", 128))
            if kind == "circle":
                return cls.circle(decode_complex(obj.get("center", [0, 0])), float(obj["radius"]), nodes)
            if kind == "ellipse":
                a, b = obj["semi_axes"]
                return cls.ellipse(decode_complex(obj.get("center", [0, 0])), (a, b),
                                   float(obj.get("rotation", 0.0)), nodes)
            if kind == "polyline":
                return cls.polyline([decode_complex(v) for v in obj["vertices"]], nodes)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise FormatError(f"bad contour description: {exc}") from exc
        raise FormatError(f"unknown contour kind {obj.get('kind')!r}")


REGION_KINDS = ("open-unit-disk", "interior", "exterior", "plane")


@dataclass(frozen=True)
class Region:
    """Where the spectrum of a configuration is required to live."""

    kind: str
    contour: Contour | None = None

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise DomainError(f"unknown region kind {self.kind!r}")
        if self.kind in ("interior", "exterior") and self.contour is None:
            raise DomainError(f"region {self.kind!r} needs a contour")

    @classmethod
    def unit_disk(cls) -> "Region":
        return cls("open-unit-disk")

    @classmethod
    def plane(cls) -> "Region":
        return cls("plane")

    @classmethod
    def inside(cls, contour: Contour) -> "Region":
        return cls("interior", contour)

    @classmethod
    def outside(cls, contour: Contour) -> "Region":
        return cls("exterior", contour)

    def boundary(self) -> Contour | None:
        if self.kind == "open-unit-disk":
            return Contour.unit_circle()
        return self.contour

    def margin(self, w) -> np.ndarray:
        """Signed distance to the boundary: positive inside the region."""
        w = np.asarray(w, dtype=complex)
        if self.kind == "plane":
            return np.full(w.shape, np.inf)
        if self.kind == "open-unit-disk":
            return 1.0 - np.abs(w)
        d = self.contour.distance(w)
        inside = self.contour.contains(w)
        if self.kind == "exterior":
            inside = ~inside
        return np.where(inside, d, -d)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.contour is not None:
            out["contour"] = self.contour.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Region":
        contour = obj.get("contour")
        return cls(obj["kind"], Contour.from_json(contour) if contour is not None else None)
