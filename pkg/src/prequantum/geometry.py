"""Concrete model spaces and pointwise evaluation of their closed 2-forms.

Every model works in a single chart:

* ``FlatTorus`` lives in its universal cover R^2, quotiented by a lattice on demand;
* ``PuncturedPlane`` and ``TwoHolesPlane`` use Cartesian coordinates (the punctured
  plane interpolates and integrates its magnetic form in log-polar terms);
* ``TwoSphere`` uses embedded unit vectors in R^3;
* ``Product`` concatenates the coordinates of its two factors.

Evaluation kernels (``ModelSpace.omega``) are vectorised over leading axes and do
no validation; the public entry point :func:`eval_two_form` validates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    DimensionMismatch,
    NotClosed,
    RemovedPoint,
    UnsupportedModel,
)

REMOVED_POINT_RADIUS = 1e-9
SPHERE_NORM_TOL = 1e-12
SPHERE_TANGENT_TOL = 1e-9
CLOSE_TOL = 1e-9

FORM_KINDS = ("magnetic", "zero", "uniform")


class ModelSpace:
    """Interface shared by all concrete models."""

    dim: int = 0
    supports_cover = False

    def omega(self, p, u, v):
        raise NotImplementedError

    def validate_points(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"{type(self).__name__} expects {self.dim}-dimensional points, got {pts.shape[-1]}"
            )
        return pts

    def cell_center(self, c00, c01, c10, c11):
        return 0.25 * (c00 + c01 + c10 + c11)

    def cell_action(self, c00, c01, c10, c11):
        """Midpoint-rule action of one grid cell (corners indexed by (s, t))."""
        ds = 0.5 * ((c10 + c11) - (c00 + c01))
        dt = 0.5 * ((c01 + c11) - (c00 + c10))
        return self.omega(self.cell_center(c00, c01, c10, c11), ds, dt)

    def interpolate(self, a, b, w):
        """Chart-linear interpolation between point arrays ``a`` and ``b``."""
        return a + (b - a) * w

    def quotient_delta(self, p, q) -> np.ndarray:
        """Smallest representative of ``q - p`` in the quotient (chart units)."""
        return np.asarray(q, dtype=float) - np.asarray(p, dtype=float)

    def same_point(self, p, q, tol: float = CLOSE_TOL) -> bool:
        return float(np.max(np.abs(self.quotient_delta(p, q)), initial=0.0)) <= tol

    def cover_shift(self, anchor, p) -> np.ndarray:
        """Deck translation moving ``p`` onto ``anchor`` (zero for models without a cover)."""
        return np.zeros(self.dim)

    @property
    def is_flat(self) -> bool:
        return False


@dataclass(frozen=True)
class FlatTorus(ModelSpace):
    """R^2 modulo a rational lattice, with the standard form dx^dy on the cover."""

    basis: tuple = ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))
    dim: int = field(default=2, init=False)
    supports_cover = True

    def __post_init__(self):
        b = tuple(tuple(Fraction(c) for c in vec) for vec in self.basis)
        if len(b) != 2 or any(len(vec) != 2 for vec in b):
            raise DimensionMismatch("torus lattice basis must be two 2-vectors")
        if b[0][0] * b[1][1] - b[0][1] * b[1][0] == 0:
            raise ValueError("torus lattice basis is degenerate")
        object.__setattr__(self, "basis", b)

    @property
    def lattice(self) -> np.ndarray:
        # columns are the basis vectors
        return np.array([[float(self.basis[0][0]), float(self.basis[1][0])],
                         [float(self.basis[0][1]), float(self.basis[1][1])]])

    @property
    def area(self) -> Fraction:
        (a, b), (c, d) = self.basis
        return abs(a * d - b * c)

    def omega(self, p, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    def lattice_coords(self, x) -> np.ndarray:
        return np.linalg.solve(self.lattice, np.asarray(x, dtype=float).T).T

    def project(self, x) -> np.ndarray:
        c = self.lattice_coords(x)
        return (self.lattice @ (c - np.floor(c)).T).T

    def quotient_delta(self, p, q):
        d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
        c = self.lattice_coords(d)
        return (self.lattice @ (c - np.round(c)).T).T

    def cover_shift(self, anchor, p):
        d = np.asarray(anchor, dtype=float) - np.asarray(p, dtype=float)
        return self.lattice @ np.round(self.lattice_coords(d))

    def lift_displacement(self, points) -> tuple[int, ...]:
        pts = self.validate_points(points)
        c = self.lattice_coords(pts[-1] - pts[0])
        n = np.round(c)
        if np.max(np.abs(self.lattice @ (c - n))) > CLOSE_TOL:
            raise NotClosed("torus path endpoints differ by a non-lattice vector")
        return tuple(int(k) for k in n)


def _plane_form(form_kind: str, b: float, holes, p):
    p = np.asarray(p, dtype=float)
    if form_kind == "zero":
        return np.zeros(p.shape[:-1])
    if form_kind == "uniform":
        return np.full(p.shape[:-1], float(b))
    dens = np.zeros(p.shape[:-1])
    for h in holes:
        d = p - np.asarray(h, dtype=float)
        dens = dens + 1.0 / np.einsum("...i,...i", d, d)
    return dens


def winding_number(points, center=(0.0, 0.0)) -> int:
    """Winding of a closed sampled plane loop around ``center`` (total angle / 2π)."""
    pts = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    total = float(np.sum(_wrap(np.diff(ang))))
    return int(round(total / (2 * math.pi)))


def unwrapped_angle(points, center=(0.0, 0.0)) -> np.ndarray:
    pts = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    return np.unwrap(np.arctan2(pts[..., 1], pts[..., 0]), axis=-1)


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


class _PlaneWithHoles(ModelSpace):
    dim = 2
    supports_cover = True

    @property
    def holes(self) -> tuple:
        raise NotImplementedError

    @property
    def is_flat(self) -> bool:
        return self.form_kind == "zero"

    def validate_points(self, points):
        pts = super().validate_points(points)
        for h in self.holes:
            d = np.linalg.norm(pts - np.asarray(h, dtype=float), axis=-1)
            if np.any(d <= REMOVED_POINT_RADIUS):
                raise RemovedPoint(f"point within {REMOVED_POINT_RADIUS} of removed point {tuple(h)}")
        return pts

    def omega(self, p, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        dens = _plane_form(self.form_kind, self.b, self.holes, p)
        return dens * (u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])

    def project(self, x):
        return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class PuncturedPlane(_PlaneWithHoles):
    """R^2 minus the origin; ``form_kind`` is magnetic (dx^dy/r^2), zero or uniform (b dx^dy)."""

    form_kind: str = "magnetic"
    b: float = 1.0

    def __post_init__(self):
        if self.form_kind not in FORM_KINDS:
            raise ValueError(f"unknown form kind {self.form_kind!r}")

    @property
    def holes(self):
        return ((0.0, 0.0),)

    def cell_action(self, c00, c01, c10, c11):
        if self.form_kind != "magnetic":
            return super().cell_action(c00, c01, c10, c11)
        # dx^dy/r^2 = d(log r)^dθ, constant in log-polar coordinates; angles are taken
        # relative to the first corner so no global unwrapping is needed
        def polar(c):
            rel = np.arctan2(c00[..., 0] * c[..., 1] - c00[..., 1] * c[..., 0],
                             c00[..., 0] * c[..., 0] + c00[..., 1] * c[..., 1])
            return np.log(np.hypot(c[..., 0], c[..., 1])), rel

        l00, _ = polar(c00)
        l01, a01 = polar(c01)
        l10, a10 = polar(c10)
        l11, a11 = polar(c11)
        ds_l = 0.5 * ((l10 + l11) - (l00 + l01))
        dt_l = 0.5 * ((l01 + l11) - (l00 + l10))
        ds_a = 0.5 * ((a10 + a11) - a01)
        dt_a = 0.5 * ((a01 + a11) - a10)
        return ds_l * dt_a - ds_a * dt_l

    def interpolate(self, a, b, w):
        # log-polar, short way round: keeps resampled circles on their circle
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        ra, rb = np.hypot(a[..., 0], a[..., 1]), np.hypot(b[..., 0], b[..., 1])
        ta, tb = np.arctan2(a[..., 1], a[..., 0]), np.arctan2(b[..., 1], b[..., 0])
        dt = (tb - ta + np.pi) % (2 * np.pi) - np.pi
        w = np.asarray(w, dtype=float)
        if w.ndim == a.ndim:
            w = w[..., 0]
        r = np.exp(np.log(ra) + (np.log(rb) - np.log(ra)) * w)
        t = ta + dt * w
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)

    def lift_displacement(self, points) -> tuple[int, ...]:
        pts = self.validate_points(points)
        if not self.same_point(pts[0], pts[-1]):
            raise NotClosed("loop endpoints differ")
        return (winding_number(pts),)


@dataclass(frozen=True)
class TwoHolesPlane(_PlaneWithHoles):
    """R^2 minus two points.

    The fundamental group is free on ``a`` (ccw around ``p1``) and ``b`` (ccw around
    ``p2``). Class detection cuts the plane along the two rays that leave each hole
    away from the other one; the complement of the cuts is simply connected, so the
    ordered sequence of signed cut crossings is the reduced word of a loop.
    """

    p1: tuple = (-1.0, 0.0)
    p2: tuple = (1.0, 0.0)
    form_kind: str = "zero"
    b: float = 1.0

    def __post_init__(self):
        if self.form_kind not in FORM_KINDS:
            raise ValueError(f"unknown form kind {self.form_kind!r}")
        object.__setattr__(self, "p1", tuple(float(c) for c in self.p1))
        object.__setattr__(self, "p2", tuple(float(c) for c in self.p2))
        if np.allclose(self.p1, self.p2):
            raise ValueError("the two removed points coincide")

    @property
    def holes(self):
        return (self.p1, self.p2)

    @property
    def base_point(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.p1) + np.asarray(self.p2))

    def _rays(self):
        p1, p2 = np.asarray(self.p1), np.asarray(self.p2)
        d = (p1 - p2) / np.linalg.norm(p1 - p2)
        return ((p1, d), (p2, -d))

    def crossing_word(self, points) -> list[tuple[int, int]]:
        """Signed cut crossings ``(hole index, ±1)`` along a sampled path."""
        pts = self.validate_points(points)
        events = []
        for k, (origin, d) in enumerate(self._rays()):
            n = np.array([-d[1], d[0]])  # left normal of the ray
            side = (pts - origin) @ n
            along = (pts - origin) @ d
            for i in range(len(pts) - 1):
                s0, s1 = side[i], side[i + 1]
                if (s0 < 0) == (s1 < 0):
                    continue
                w = s0 / (s0 - s1)
                if along[i] + w * (along[i + 1] - along[i]) <= 0:
                    continue
                # a ccw turn around the hole crosses its outward ray from right to left
                events.append((i + w, k, 1 if s0 < 0 else -1))
        events.sort()
        word: list[tuple[int, int]] = []
        for _, k, e in events:
            if word and word[-1] == (k, -e):
                word.pop()
            else:
                word.append((k, e))
        return word

    def lift_displacement(self, points) -> tuple[int, ...]:
        pts = self.validate_points(points)
        if not self.same_point(pts[0], pts[-1]):
            raise NotClosed("loop endpoints differ")
        return tuple(winding_number(pts, h) for h in self.holes)


@dataclass(frozen=True)
class TwoSphere(ModelSpace):
    """Unit sphere in R^3 with the area form scaled so its total integral is ``s``."""

    s: float = 1.0
    dim: int = field(default=3, init=False)

    def validate_points(self, points):
        pts = super().validate_points(points)
        if np.any(np.abs(np.linalg.norm(pts, axis=-1) - 1.0) > SPHERE_NORM_TOL):
            raise ValueError("sphere points must be unit vectors")
        return pts

    def omega(self, p, u, v):
        return self.s * np.einsum("...i,...i", np.asarray(p, dtype=float), np.cross(u, v)) / (4 * math.pi)

    def cell_center(self, c00, c01, c10, c11):
        c = 0.25 * (c00 + c01 + c10 + c11)
        return c / np.linalg.norm(c, axis=-1, keepdims=True)

    def interpolate(self, a, b, w):
        c = a + (b - a) * w
        return c / np.linalg.norm(c, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Product(ModelSpace):
    """Cartesian product; the form is the sum of the two pullbacks."""

    left: ModelSpace
    right: ModelSpace

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim

    @property
    def supports_cover(self):
        return False

    def split(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., : self.left.dim], x[..., self.left.dim:]

    def validate_points(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.dim:
            raise DimensionMismatch(f"Product expects {self.dim}-dimensional points, got {pts.shape[-1]}")
        a, b = self.split(pts)
        self.left.validate_points(a)
        self.right.validate_points(b)
        return pts

    def omega(self, p, u, v):
        pa, pb = self.split(p)
        ua, ub = self.split(u)
        va, vb = self.split(v)
        return self.left.omega(pa, ua, va) + self.right.omega(pb, ub, vb)

    def cell_center(self, c00, c01, c10, c11):
        parts = [self.split(c) for c in (c00, c01, c10, c11)]
        a = self.left.cell_center(*(q[0] for q in parts))
        b = self.right.cell_center(*(q[1] for q in parts))
        return np.concatenate([a, b], axis=-1)

    def interpolate(self, a, b, w):
        a0, a1 = self.split(a)
        b0, b1 = self.split(b)
        return np.concatenate([self.left.interpolate(a0, b0, w), self.right.interpolate(a1, b1, w)], axis=-1)

    def quotient_delta(self, p, q):
        p0, p1 = self.split(p)
        q0, q1 = self.split(q)
        return np.concatenate([self.left.quotient_delta(p0, q0), self.right.quotient_delta(p1, q1)], axis=-1)

    def cover_shift(self, anchor, p):
        a0, a1 = self.split(anchor)
        p0, p1 = self.split(p)
        return np.concatenate([self.left.cover_shift(a0, p0), self.right.cover_shift(a1, p1)])

    @property
    def is_flat(self):
        return self.left.is_flat and self.right.is_flat


@dataclass(frozen=True)
class TangentPair:
    u: np.ndarray
    v: np.ndarray


def eval_two_form(space: ModelSpace, p, t: TangentPair) -> float:
    """ω(p)(u, v) with full validation of the point and the tangent pair."""
    p = space.validate_points(np.asarray(p, dtype=float))
    u = np.asarray(t.u, dtype=float)
    v = np.asarray(t.v, dtype=float)
    if p.ndim != 1 or u.shape != p.shape or v.shape != p.shape:
        raise DimensionMismatch("point and tangent vectors must share the chart dimension")
    _check_tangents(space, p, u, v)
    return float(space.omega(p, u, v))


def _check_tangents(space, p, u, v):
    if isinstance(space, TwoSphere):
        if abs(p @ u) > SPHERE_TANGENT_TOL or abs(p @ v) > SPHERE_TANGENT_TOL:
            raise ValueError("sphere tangent vectors must be orthogonal to the base point")
    elif isinstance(space, Product):
        pa, pb = space.split(p)
        ua, ub = space.split(u)
        va, vb = space.split(v)
        _check_tangents(space.left, pa, ua, va)
        _check_tangents(space.right, pb, ub, vb)


def project(space: ModelSpace, cover_point) -> np.ndarray:
    if not space.supports_cover:
        raise UnsupportedModel(f"{type(space).__name__} has no cover representation")
    return space.project(space.validate_points(cover_point))


def lift_displacement(space: ModelSpace, loop) -> tuple[int, ...]:
    """Lattice displacement (torus) or winding integers (punctured models) of a closed loop."""
    if not space.supports_cover:
        raise UnsupportedModel(f"{type(space).__name__} has no cover representation")
    pts = loop.points if hasattr(loop, "points") else loop
    return space.lift_displacement(pts)
