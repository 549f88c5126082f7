"""Sampled paths, sampled homotopies and the action integral of Kω.

The action of a homotopy Φ(s, t) is the surface integral

    ∫_0^1 ∫_0^1 ω(Φ)(∂Φ/∂s, ∂Φ/∂t) dt ds.

Quadrature is a cell midpoint rule with differences taken across each cell, which
is exact for constant forms on bilinear patches.  The reported value is the
Richardson extrapolation of the fine grid against the every-other-knot grid, and
the error estimate is the usual fourth-order one, |R(h) - R(2h)| / 15.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AntipodalDegeneracy,
    DimensionMismatch,
    EndpointMismatch,
    NotClosed,
    NotHomotopic,
    ParseError,
    QuadratureNotConverged,
)
from .geometry import (
    CLOSE_TOL,
    FlatTorus,
    ModelSpace,
    Product,
    PuncturedPlane,
    TwoHolesPlane,
    TwoSphere,
    unwrapped_angle,
)
from .lattice import lcm

DEFAULT_TOL = 1e-6
DEFAULT_GRID = 256
MAX_SAMPLES = 1 << 14


@dataclass(frozen=True, eq=False)
class PathSample:
    """A path sampled at t_k = k/N in the working chart of ``space``."""

    space: ModelSpace
    points: np.ndarray
    closed: bool = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or len(pts) < 2:
            raise DimensionMismatch("a path needs at least two samples (N >= 1)")
        pts = self.space.validate_points(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "closed", bool(self.space.same_point(pts[0], pts[-1])))

    @property
    def N(self) -> int:
        return len(self.points) - 1

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def require_closed(self) -> "PathSample":
        if not self.closed:
            raise NotClosed("loop endpoints differ in the quotient")
        return self

    def resample(self, n: int) -> "PathSample":
        return PathSample(self.space, _resample(self.space, self.points, n))

    def map(self, fn) -> "PathSample":
        return PathSample(self.space, fn(self.points))

    def __eq__(self, other):
        if not isinstance(other, PathSample):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.points, other.points)

    __hash__ = None


def _resample(space: ModelSpace, pts: np.ndarray, n: int) -> np.ndarray:
    """Linear (chart) resampling onto n+1 equispaced parameters; old knots are kept exactly."""
    m = len(pts) - 1
    if n == m:
        return pts.copy()
    u = np.arange(n + 1) * m / n
    i = np.minimum(np.floor(u).astype(int), m - 1)
    w = (u - i)[:, None]
    out = space.interpolate(pts[i], pts[i + 1], w)
    exact = w[:, 0] == 0
    out[exact] = pts[i[exact]]
    out[-1] = pts[-1]
    return out


def _common_size(*ns: int, at_least: int = 1) -> int:
    n = 1
    for k in ns:
        n = lcm(n, k)
    if n > MAX_SAMPLES:
        n = max(ns)
    while n < at_least:
        n *= 2
    return n


def constant_path(space: ModelSpace, x, N: int = 1) -> PathSample:
    x = np.asarray(x, dtype=float)
    return PathSample(space, np.repeat(x[None, :], N + 1, axis=0))


def reverse(a: PathSample) -> PathSample:
    return PathSample(a.space, a.points[::-1])


def concat(a: PathSample, b: PathSample) -> PathSample:
    """a ∨ b: ``a`` on [0, 1/2], ``b`` (shifted to continue ``a`` in the cover) on [1/2, 1]."""
    if a.space != b.space:
        raise DimensionMismatch("cannot concatenate paths of different spaces")
    space = a.space
    if not space.same_point(a.end, b.start):
        raise EndpointMismatch("end of the first path differs from the start of the second")
    shifted = b.points + space.cover_shift(a.end, b.start)
    half = _common_size(a.N, b.N)
    pa = _resample(space, a.points, half)
    pb = _resample(space, shifted, half)
    pb[0] = pa[-1]
    return PathSample(space, np.concatenate([pa, pb[1:]]))


def concat_all(*paths: PathSample) -> PathSample:
    """Left-nested concatenation ((p1 ∨ p2) ∨ p3) ∨ ..."""
    out = paths[0]
    for p in paths[1:]:
        out = concat(out, p)
    return out


def read_path_csv(path, space: ModelSpace) -> PathSample:
    """Load a path from CSV with columns ``t, x0, x1, ...`` at equispaced t."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "t":
            raise ParseError(f"{path}: first column must be 't'")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    arr = np.asarray(rows)
    if arr.ndim != 2 or arr.shape[1] != space.dim + 1:
        raise ParseError(f"{path}: expected {space.dim + 1} columns")
    n = len(arr) - 1
    if n < 1 or not np.allclose(arr[:, 0], np.arange(n + 1) / n, atol=1e-9):
        raise ParseError(f"{path}: t column must be equispaced from 0 to 1")
    return PathSample(space, arr[:, 1:])


def write_path_csv(path, a: PathSample) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i}" for i in range(a.space.dim)])
        for k, p in enumerate(a.points):
            w.writerow([repr(k / a.N)] + [repr(float(c)) for c in p])


# ---------------------------------------------------------------------------
# homotopies


@dataclass(frozen=True, eq=False)
class HomotopySample:
    """Φ(s_j, t_k) on an (S+1) x (N+1) grid, s_j = j/S, t_k = k/N."""

    space: ModelSpace
    grid: np.ndarray
    fixed_ends: bool | None = None
    loop_of_loops: bool | None = None

    def __post_init__(self):
        g = np.array(self.grid, dtype=float)
        if g.ndim != 3 or g.shape[0] < 2 or g.shape[1] < 2:
            raise DimensionMismatch("homotopy grid must have shape (S+1, N+1, dim) with S, N >= 1")
        g = self.space.validate_points(g)
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)
        fe = self._has_fixed_ends()
        ll = self._is_loop_of_loops()
        for name, declared, actual in (("fixed_ends", self.fixed_ends, fe), ("loop_of_loops", self.loop_of_loops, ll)):
            if declared is None:
                object.__setattr__(self, name, actual)
            elif declared and not actual:
                raise ValueError(f"declared flag {name} does not hold on the grid")

    def _has_fixed_ends(self) -> bool:
        g = self.grid
        return bool(np.max(np.abs(g[:, 0] - g[0, 0]), initial=0.0) <= CLOSE_TOL
                    and np.max(np.abs(g[:, -1] - g[0, -1]), initial=0.0) <= CLOSE_TOL)

    def _is_loop_of_loops(self) -> bool:
        g = self.grid
        slices_closed = all(self.space.same_point(g[j, 0], g[j, -1]) for j in range(len(g)))
        ends_equal = all(self.space.same_point(p, q) for p, q in zip(g[0], g[-1]))
        return slices_closed and ends_equal

    @property
    def S(self) -> int:
        return self.grid.shape[0] - 1

    @property
    def N(self) -> int:
        return self.grid.shape[1] - 1

    def slice(self, j: int) -> PathSample:
        return PathSample(self.space, self.grid[j])

    def transpose(self) -> "HomotopySample":
        return HomotopySample(self.space, np.swapaxes(self.grid, 0, 1))

    def restrict(self, j0: int, j1: int) -> "HomotopySample":
        return HomotopySample(self.space, self.grid[j0:j1 + 1])


def stack(h1: HomotopySample, h2: HomotopySample) -> HomotopySample:
    """Concatenate two homotopies in the s direction (last slice of h1 = first of h2)."""
    if h1.N != h2.N or not np.allclose(h1.grid[-1], h2.grid[0], atol=CLOSE_TOL):
        raise EndpointMismatch("homotopies do not meet")
    return HomotopySample(h1.space, np.concatenate([h1.grid, h2.grid[1:]]))


def treesum(values) -> float:
    """Fixed-order pairwise sum, independent of how the inputs were produced."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    while x.size > 1:
        if x.size % 2:
            x = np.append(x, 0.0)
        x = x[0::2] + x[1::2]
    return float(x[0])


def _cell_contributions(space: ModelSpace, g: np.ndarray) -> np.ndarray:
    p00, p01 = g[:-1, :-1], g[:-1, 1:]
    p10, p11 = g[1:, :-1], g[1:, 1:]
    return space.cell_action(p00, p01, p10, p11)


@dataclass(frozen=True)
class ActionResult:
    value: float
    error: float
    midpoint: float
    profile: tuple[float, ...]  # cumulative action at s_0 .. s_S

    def __float__(self):
        return self.value


def action_details(space: ModelSpace, H: HomotopySample) -> ActionResult:
    if H.space != space:
        raise DimensionMismatch("homotopy was sampled in a different space")
    g = H.grid
    f = _cell_contributions(space, g)
    fine = treesum(f)
    S, N = H.S, H.N
    if S % 2 or N % 2:
        rows = [treesum(r) for r in f]
        return ActionResult(fine, math.inf, fine, _cumulative(rows))
    c = _cell_contributions(space, g[::2, ::2])
    coarse = treesum(c)
    value = (4 * fine - coarse) / 3
    if S % 4 == 0 and N % 4 == 0:
        cc = treesum(_cell_contributions(space, g[::4, ::4]))
        error = abs(value - (4 * coarse - cc) / 3) / 15
    else:
        error = abs(fine - coarse) / 3
    crow = [treesum(r) for r in c]
    rows = [(4 * treesum(r) - 0.5 * crow[j // 2]) / 3 for j, r in enumerate(f)]
    prof = _cumulative(rows)
    return ActionResult(value, error, fine, prof[:-1] + (value,))


def _cumulative(rows) -> tuple[float, ...]:
    out = [0.0]
    for r in rows:
        out.append(out[-1] + r)
    return tuple(out)


def action_integral(space: ModelSpace, H: HomotopySample, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``(value, error_estimate)``; raises QuadratureNotConverged when the estimate exceeds ``tol``."""
    r = action_details(space, H)
    if not r.error <= tol:
        raise QuadratureNotConverged(
            f"quadrature error estimate {r.error:.3g} exceeds tolerance {tol:.3g} on a {H.S}x{H.N} grid"
        )
    return r.value, r.error


# ---------------------------------------------------------------------------
# canonical homotopies


def straight_homotopy(space: ModelSpace, a: PathSample, b: PathSample, S: int = DEFAULT_GRID,
                      N: int = DEFAULT_GRID) -> HomotopySample:
    """Model-specific straight-line homotopy from ``a`` to ``b``.

    Paths with common endpoints give a fixed-ends homotopy; two closed loops give a
    loop-of-loops homotopy.  The sample count along t is four times a common multiple
    of the input counts, so every input knot stays a knot of the 2x and 4x coarsened
    grids used by the error estimate (kinks between knots would otherwise inflate it).
    """
    if a.space != space or b.space != space:
        raise DimensionMismatch("paths were sampled in a different space")
    loops = a.closed and b.closed
    if not loops and not (space.same_point(a.start, b.start) and space.same_point(a.end, b.end)):
        raise NotHomotopic("paths neither share endpoints nor are both closed")
    n = 4 * _common_size(a.N, b.N, at_least=max(1, N // 4))
    A = _resample(space, a.points, n)
    B = _resample(space, b.points, n)
    s = (np.arange(S + 1) / S)[:, None, None]
    grid = _straight_grid(space, A, B, s, loops)
    return HomotopySample(space, grid)


def _straight_grid(space, A, B, s, loops):
    if isinstance(space, Product):
        a0, a1 = space.split(A)
        b0, b1 = space.split(B)
        return np.concatenate([_straight_grid(space.left, a0, b0, s, loops),
                               _straight_grid(space.right, a1, b1, s, loops)], axis=-1)
    if isinstance(space, FlatTorus):
        B = B + space.cover_shift(A[0], B[0])
        if np.max(np.abs((A[-1] - A[0]) - (B[-1] - B[0]))) > CLOSE_TOL:
            raise NotHomotopic("cover displacements differ")
        return (1 - s) * A[None] + s * B[None]
    if isinstance(space, PuncturedPlane):
        ta, tb = unwrapped_angle(A), unwrapped_angle(B)
        tb = tb + 2 * math.pi * round((ta[0] - tb[0]) / (2 * math.pi))
        if abs((ta[-1] - ta[0]) - (tb[-1] - tb[0])) > 1e-6:
            raise NotHomotopic("total angles (windings) differ")
        la, lb = np.log(np.linalg.norm(A, axis=-1)), np.log(np.linalg.norm(B, axis=-1))
        lr = (1 - s[..., 0]) * la[None] + s[..., 0] * lb[None]
        th = (1 - s[..., 0]) * ta[None] + s[..., 0] * tb[None]
        g = np.stack([np.exp(lr) * np.cos(th), np.exp(lr) * np.sin(th)], axis=-1)
        g[0], g[-1] = A, B
        return g
    if isinstance(space, TwoHolesPlane):
        wa = space.crossing_word(A)
        if space.crossing_word(B) != wa:
            raise NotHomotopic("paths have different classes in the free group")
        g = (1 - s) * A[None] + s * B[None]
        try:
            space.validate_points(g)
        except ValueError:
            raise NotHomotopic("straight-line homotopy meets a removed point") from None
        for j in range(1, len(g) - 1):
            if space.crossing_word(g[j]) != wa:
                raise NotHomotopic("straight-line homotopy sweeps across a removed point")
        return g
    if isinstance(space, TwoSphere):
        if np.min(np.einsum("ij,ij->i", A, B)) <= -1 + 1e-9:
            raise AntipodalDegeneracy("chordal interpolation through antipodal points")
        g = (1 - s) * A[None] + s * B[None]
        g = g / np.linalg.norm(g, axis=-1, keepdims=True)
        g[0], g[-1] = A, B
        return g
    raise NotHomotopic(f"no straight homotopy for {type(space).__name__}")


def sphere_sweep(s: float = 1.0, S: int = DEFAULT_GRID, N: int = DEFAULT_GRID) -> HomotopySample:
    """Latitude sweep covering the sphere once, pinched to the poles at s = 0 and s = 1."""
    if S < 8 or N < 8:
        raise ValueError("sphere sweep needs S, N >= 8")
    sp = np.arange(S + 1)[:, None] / S
    tp = np.arange(N + 1)[None, :] / N
    polar = np.pi * sp
    grid = np.stack(np.broadcast_arrays(np.sin(polar) * np.cos(2 * np.pi * tp),
                                        np.sin(polar) * np.sin(2 * np.pi * tp),
                                        np.cos(polar)), axis=-1).astype(float)
    grid[0] = (0.0, 0.0, 1.0)
    grid[-1] = (0.0, 0.0, -1.0)
    grid[:, -1] = grid[:, 0]
    return HomotopySample(TwoSphere(s), grid)


def torus_sweep(space: FlatTorus, direction: int, S: int = DEFAULT_GRID, N: int = DEFAULT_GRID) -> HomotopySample:
    """Translate the basis loop t ↦ t·e_other along e_direction: a torus-shaped plot."""
    L = space.lattice
    e_move, e_loop = L[:, direction], L[:, 1 - direction]
    sp = np.arange(S + 1)[:, None, None] / S
    tp = np.arange(N + 1)[None, :, None] / N
    return HomotopySample(space, sp * e_move + tp * e_loop)


def rotation_sweep(space: PuncturedPlane, radius: float = 1.0, S: int = DEFAULT_GRID,
                   N: int = DEFAULT_GRID) -> HomotopySample:
    """Rotate the winding-one circle through a full turn (the only torus plot of the loop)."""
    sp = np.arange(S + 1)[:, None] / S
    tp = np.arange(N + 1)[None, :] / N
    th = 2 * np.pi * (sp + tp)
    return HomotopySample(space, radius * np.stack([np.cos(th), np.sin(th)], axis=-1))


def embed_in_product(space: Product, H: HomotopySample, which: int, fixed) -> HomotopySample:
    """Push a factor homotopy into the product, holding the other factor at ``fixed``."""
    fixed = np.asarray(fixed, dtype=float)
    other = np.broadcast_to(fixed, H.grid.shape[:2] + fixed.shape)
    parts = [H.grid, other] if which == 0 else [other, H.grid]
    return HomotopySample(space, np.concatenate(parts, axis=-1))


def profile_rows(label: str, result: ActionResult) -> list[tuple[str, float, float]]:
    S = len(result.profile) - 1
    return [(label, j / S, v) for j, v in enumerate(result.profile)]


def write_profiles_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "s", "cumulative_action"])
        for label, s, v in rows:
            w.writerow([label, repr(float(s)), repr(float(v))])
