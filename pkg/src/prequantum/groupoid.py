"""The prequantum groupoid over a loaded scenario.

Morphisms are stored in a reference trivialization: a base point x0, a reference
path ρ_x from x0 to each marked point, and a basis loop per π1 class.  The phase
of a path γ from x to y is the Chasles value of γ against ρ̄_x ∨ ρ_y, so
composition is addition of phases in T_ω.
"""
from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .action import (
    DEFAULT_GRID,
    DEFAULT_TOL,
    PathSample,
    action_details,
    concat,
    concat_all,
    constant_path,
    reverse,
    straight_homotopy,
)
from .errors import (
    EndpointMismatch,
    IncompatibleCharacter,
    NotFlat,
    QuadratureNotConverged,
    UnmarkedEndpoint,
    UnreachablePhase,
    UnsupportedModel,
    UnsupportedSymmetry,
)
from .geometry import FlatTorus, ModelSpace, Product, PuncturedPlane, TwoSphere
from .homotopy_algebra import (
    BasisLoopFamily,
    CocycleTable,
    Free,
    FreeAbelian,
    GroupElement,
    Presentation,
    accumulated_cocycle,
    component_index,
)
from .periods import (
    BasisConstants,
    ExactReal,
    PeriodGroup,
    SnapTable,
    TorusElement,
    generate,
    reduce,
    total_periods,
)


@dataclass(frozen=True)
class PeriodRecord:
    label: str
    value: float
    error: float
    exact: ExactReal


@dataclass(frozen=True)
class FlatTwist:
    """A character π1 → T_ω given by its values on the generators."""

    presentation: Presentation
    values: tuple[ExactReal, ...]
    P: PeriodGroup

    def __post_init__(self):
        if len(self.values) != len(self.presentation.generators):
            raise ValueError("a flat twist needs one value per generator")
        for w in self.presentation.relations:
            if not self.P.contains(self.word_value(w)):
                raise ValueError(f"twist does not vanish on relation {self.presentation.format(w)}")

    def word_value(self, word) -> ExactReal:
        total = ExactReal.zero(self.P.basis)
        for k, e in word:
            total = total + self.values[k].scale(e)
        return total

    def __call__(self, g: GroupElement) -> TorusElement:
        G = self.presentation.group
        return reduce(self.P, self.word_value(G.to_word(g)))

    @property
    def is_trivial(self) -> bool:
        return all(self.P.contains(v) for v in self.values)


class Scenario:
    """Everything needed to compute phases: model, presentation, cocycle, periods, marked points."""

    def __init__(self, *, name: str, space: ModelSpace, presentation: Presentation, family: BasisLoopFamily,
                 cocycle: CocycleTable, basis: BasisConstants, snap: SnapTable, P_tor: PeriodGroup,
                 toric_periods: Sequence[PeriodRecord], marked: dict, references: dict,
                 twist_values: Sequence[ExactReal] | None = None, S: int = DEFAULT_GRID, N: int = DEFAULT_GRID,
                 tol: float = DEFAULT_TOL, description: str = "", warnings: Sequence[str] = (),
                 declared_P_omega: PeriodGroup | None = None):
        self.name = name
        self.description = description
        self.space = space
        self.presentation = presentation
        self.family = family
        self.cocycle = cocycle
        self.basis = basis
        self.snap = snap
        self.P_tor = P_tor
        self.toric_periods = tuple(toric_periods)
        self.S, self.N, self.tol = S, N, tol
        self.warnings = list(warnings)
        self.marked = {k: np.asarray(v, dtype=float) for k, v in marked.items()}
        self.references = dict(references)
        self._validate_marked()
        self.relation_values = tuple(accumulated_cocycle(presentation, cocycle, w) for w in presentation.relations)
        self.P_omega = total_periods(P_tor, self.relation_values)
        # a declared expectation is checked by the verification harness, not enforced here
        self.declared_P_omega = declared_P_omega
        self.twist = None
        if twist_values is not None:
            self.twist = FlatTwist(presentation, tuple(twist_values), self.P_omega)
        self._gauge: dict[GroupElement, ExactReal] = {}
        self._gauge_lock = threading.Lock()

    @property
    def x0(self) -> np.ndarray:
        return self.family.base_point

    @property
    def numeric(self) -> bool:
        """False for purely algebraic scenarios (no chart, declared cocycle only)."""
        return self.space is not None

    def require_numeric(self):
        if self.space is None:
            raise UnsupportedModel(f"scenario {self.name!r} has no numeric chart")

    def _validate_marked(self):
        if self.space is None:
            if self.marked:
                raise ValueError("marked points need a numeric model")
            return
        if "x0" not in self.marked:
            self.marked["x0"] = self.family.base_point
        if not self.space.same_point(self.marked["x0"], self.family.base_point):
            raise ValueError("marked point x0 must be the base point of the basis loops")
        for name, p in self.marked.items():
            ref = self.references.get(name)
            if ref is None:
                if name == "x0":
                    self.references[name] = constant_path(self.space, p)
                    continue
                self.references[name] = connector(self.space, self.x0, p)
                ref = self.references[name]
            if not (self.space.same_point(ref.start, self.x0) and self.space.same_point(ref.end, p)):
                raise EndpointMismatch(f"reference path of {name!r} must run from x0 to the marked point")

    def zero(self) -> TorusElement:
        return TorusElement(ExactReal.zero(self.basis), self.P_omega)

    def to_omega(self, x: ExactReal) -> TorusElement:
        return reduce(self.P_omega, x)

    def element(self, x) -> TorusElement:
        if isinstance(x, TorusElement):
            return TorusElement(x.rep, self.P_omega)
        if isinstance(x, ExactReal):
            return self.to_omega(x)
        if isinstance(x, str):
            return self.to_omega(ExactReal.parse(self.basis, x))
        return self.to_omega(ExactReal.from_float(self.basis, float(x)))

    def marked_name(self, p) -> str | None:
        self.require_numeric()
        for name in sorted(self.marked):
            if self.space.same_point(self.marked[name], p):
                return name
        return None

    def gauge(self, g: GroupElement) -> ExactReal:
        """c(g) with c(ij) = c(i) + c(j) - τ(i, j) mod P_ω, c(generators) = 0."""
        with self._gauge_lock:
            hit = self._gauge.get(g)
        if hit is not None:
            return hit
        val = _gauge_walk(self, g)
        with self._gauge_lock:
            return self._gauge.setdefault(g, val)


def _gauge_walk(scn: Scenario, g: GroupElement) -> ExactReal:
    G = scn.presentation.group
    tau = scn.cocycle
    zero = ExactReal.zero(scn.basis)
    if g == G.identity():
        return zero
    if isinstance(G, FreeAbelian):
        x = G.identity()
        c = zero
        for k, n in enumerate(g.data):
            e = G.generator(k)
            for _ in range(abs(n)):
                if n > 0:
                    c = c - tau(x, e).rep
                    x = G.mul(x, e)
                else:
                    y = G.mul(x, G.inv(e))
                    c = c + tau(y, e).rep
                    x = y
        return c
    if isinstance(G, Free):
        x = G.identity()
        c = zero
        for k, e in g.data:
            gen = G.generator(k)
            if e > 0:
                step, cstep = gen, zero
            else:
                step = G.inv(gen)
                cstep = tau(gen, step).rep
            c = c + cstep - tau(x, step).rep
            x = G.mul(x, step)
        return c
    raise UnsupportedModel(f"no numeric loop phases for {G.describe()}")


# ---------------------------------------------------------------------------
# paths used as connectors


def connector(space: ModelSpace, x, y, N: int = 4) -> PathSample:
    """A canonical short path from x to y in the working chart.

    The curve is the model's own interpolation between the endpoints, so a few
    samples already represent it exactly; small N keeps concatenations cheap.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return PathSample(space, _connector_points(space, x, y, N))


def _connector_points(space, x, y, N):
    w = (np.arange(N + 1) / N)[:, None]
    if isinstance(space, Product):
        x0, x1 = space.split(x)
        y0, y1 = space.split(y)
        return np.concatenate([_connector_points(space.left, x0, y0, N),
                               _connector_points(space.right, x1, y1, N)], axis=-1)
    if isinstance(space, FlatTorus):
        y = y + space.cover_shift(x, y)
        return x + w * (y - x)
    if isinstance(space, PuncturedPlane):
        rx, ry = np.linalg.norm(x), np.linalg.norm(y)
        tx, ty = math.atan2(x[1], x[0]), math.atan2(y[1], y[0])
        dt = (ty - tx + math.pi) % (2 * math.pi) - math.pi
        lr = (1 - w[:, 0]) * math.log(rx) + w[:, 0] * math.log(ry)
        th = tx + w[:, 0] * dt
        pts = np.exp(lr)[:, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)
        pts[0], pts[-1] = x, y
        return pts
    if isinstance(space, TwoSphere):
        if float(x @ y) <= -1 + 1e-9:
            raise ValueError("no canonical connector between antipodal points")
        pts = x + w * (y - x)
        pts = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
        pts[0], pts[-1] = x, y
        return pts
    pts = x + w * (y - x)
    pts[0], pts[-1] = x, y
    return pts


# ---------------------------------------------------------------------------
# loop phases


def loop_action(scn: Scenario, loop: PathSample, g: GroupElement | None = None) -> tuple[float, float]:
    """Raw action from the basis loop of the loop's class to the loop (value, error)."""
    space = scn.space
    if space.is_flat:
        return 0.0, 0.0
    if g is None:
        g = component_index(space, loop)
    ref = scn.family.loop(g)
    r = action_details(space, straight_homotopy(space, ref, loop, S=scn.S, N=scn.N))
    if not r.error <= scn.tol:
        raise QuadratureNotConverged(f"loop action error estimate {r.error:.3g} above {scn.tol:.3g}")
    return r.value, r.error


PSI_SNAP_TOL = 1e-10


def global_psi(scn: Scenario, loop: PathSample) -> TorusElement:
    """ψ(ℓ): action from the class's basis loop to ℓ, plus the additivity gauge, mod P_ω."""
    scn.require_numeric()
    loop.require_closed()
    g = component_index(scn.space, loop)
    value, _ = loop_action(scn, loop, g)
    # ψ carries information below the period-snapping scale, so only snap near-exact values
    exact = scn.snap.snap_value(value, scn.basis, PSI_SNAP_TOL)
    return scn.to_omega(exact + scn.gauge(g))


def chasles_phi(scn: Scenario, gamma: PathSample, gamma2: PathSample, delta: PathSample | None = None) -> TorusElement:
    """Φ(γ, γ') = ψ(δ ∨ (γ ∨ γ̄') ∨ δ̄) with δ from x0 to the common start."""
    space = scn.space
    if not (space.same_point(gamma.start, gamma2.start) and space.same_point(gamma.end, gamma2.end)):
        raise EndpointMismatch("Chasles function needs paths with common endpoints")
    if delta is None:
        delta = default_delta(scn, gamma.start)
    if not (space.same_point(delta.start, scn.x0) and space.same_point(delta.end, gamma.start)):
        raise EndpointMismatch("δ must run from x0 to the start of γ")
    joint = concat_all(delta, concat(gamma, reverse(gamma2)), reverse(delta))
    return global_psi(scn, joint)


def default_delta(scn: Scenario, p) -> PathSample:
    name = scn.marked_name(p)
    if name is not None:
        return scn.references[name]
    return connector(scn.space, scn.x0, p)


# ---------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True)
class Morphism:
    src: str
    tgt: str
    phase: TorusElement

    def __eq__(self, other):
        if not isinstance(other, Morphism):
            return NotImplemented
        return self.src == other.src and self.tgt == other.tgt and self.phase == other.phase

    __hash__ = None

    def to_dict(self) -> dict:
        return {"src": self.src, "tgt": self.tgt, "phase": self.phase.to_dict()}


def _require_marked(scn: Scenario, p) -> str:
    name = scn.marked_name(p)
    if name is None:
        raise UnmarkedEndpoint(f"point {tuple(np.round(p, 12))} is not a marked point")
    return name


def reference_path(scn: Scenario, src: str, tgt: str) -> PathSample:
    return concat(reverse(scn.references[src]), scn.references[tgt])


def class_of(scn: Scenario, gamma: PathSample) -> Morphism:
    src = _require_marked(scn, gamma.start)
    tgt = _require_marked(scn, gamma.end)
    ref = reference_path(scn, src, tgt)
    return Morphism(src, tgt, chasles_phi(scn, gamma, ref))


def compose(m: Morphism, m2: Morphism) -> Morphism:
    """[γ]·[γ'] = [γ ∨ γ'] (γ first)."""
    if m.tgt != m2.src:
        raise EndpointMismatch(f"cannot compose {m.src}->{m.tgt} with {m2.src}->{m2.tgt}")
    return Morphism(m.src, m2.tgt, m.phase + m2.phase)


def inverse(m: Morphism) -> Morphism:
    return Morphism(m.tgt, m.src, -m.phase)


def identity_at(scn: Scenario, x: str) -> Morphism:
    if x not in scn.marked:
        raise UnmarkedEndpoint(f"unknown marked point {x!r}")
    return Morphism(x, x, scn.zero())


# ---------------------------------------------------------------------------
# isotropy


def isotropy_probe(scn: Scenario, x: str, targets) -> list[tuple[TorusElement, PathSample, TorusElement]]:
    """For each target phase, a loop at ``x`` whose class has that phase."""
    if x not in scn.marked:
        raise UnmarkedEndpoint(f"unknown marked point {x!r}")
    p = scn.marked[x]
    out = []
    for t in targets:
        t = scn.element(t)
        if t.is_zero():
            loop = constant_path(scn.space, p)
        else:
            rep = float(t.canonical().rep)
            loop = _probe_loop(scn, p, rep)
        m = class_of(scn, loop)
        out.append((t, loop, m.phase))
    return out


def _probe_loop(scn: Scenario, p, a: float) -> PathSample:
    space = scn.space
    if space.is_flat:
        raise UnreachablePhase("ω vanishes identically, so every contractible loop has phase 0")
    if isinstance(space, FlatTorus):
        side = math.sqrt(abs(a) / float(space.area))
        flip = np.linalg.det(space.lattice) < 0
        return _rectangle(space, p, side * space.lattice[:, 0], side * space.lattice[:, 1], (a < 0) != flip)
    if isinstance(space, PuncturedPlane):
        if space.form_kind == "uniform":
            side = math.sqrt(abs(a) / abs(space.b))
            u = p / np.linalg.norm(p)
            v = np.array([-u[1], u[0]])
            return _rectangle(space, p, side * u, side * v, (a < 0) != (space.b < 0))
        return _sector(space, p, a)
    # the sphere period s lies in P_ω, so a phase may be shifted by multiples of s first
    if isinstance(space, TwoSphere):
        return _cap(space, p, a - round(a / space.s) * space.s)
    if isinstance(space, Product) and isinstance(space.left, TwoSphere) and isinstance(space.right, TwoSphere):
        pa, pb = space.split(p)
        for which, (fac, q) in enumerate(((space.left, pa), (space.right, pb))):
            red = a - round(a / fac.s) * fac.s
            if abs(red) < abs(fac.s) / 2:
                loop = _cap(fac, q, red)
                other = np.broadcast_to(pb if which == 0 else pa, (len(loop.points), 3))
                parts = [loop.points, other] if which == 0 else [other, loop.points]
                return PathSample(space, np.concatenate(parts, axis=-1))
        raise UnreachablePhase(f"phase {a} exceeds both sphere periods; reduce it first")
    raise UnsupportedModel(f"no constructive loop family for {type(space).__name__}")


def _rectangle(space, p, u, v, clockwise: bool, per_side: int = 16) -> PathSample:
    corners = [p, p + u, p + u + v, p + v, p]
    if clockwise:
        corners = corners[::-1]
    pts = [corners[0]]
    for c0, c1 in zip(corners[:-1], corners[1:]):
        w = (np.arange(1, per_side + 1) / per_side)[:, None]
        pts.extend(c0 + w * (c1 - c0))
    return PathSample(space, np.asarray(pts))


def _sector(space: PuncturedPlane, p, a: float, n: int = 64) -> PathSample:
    """Out radially to r·e^{a}, round an arc of one radian, back in, and back along the arc.

    The enclosed region has ∬ dρ dθ / ρ = a for the magnetic form.
    """
    r0 = float(np.linalg.norm(p))
    th0 = math.atan2(p[1], p[0])
    r1 = r0 * math.exp(abs(a))
    phi = 1.0 if a > 0 else -1.0
    w = np.arange(1, n + 1) / n
    out = [(r0 * math.exp(abs(a) * k), th0) for k in np.concatenate([[0.0], w])]
    out += [(r1, th0 + phi * k) for k in w]
    out += [(r1 * math.exp(-abs(a) * k), th0 + phi) for k in w]
    out += [(r0, th0 + phi * (1 - k)) for k in w]
    pts = np.array([(r * math.cos(t), r * math.sin(t)) for r, t in out])
    pts[0] = pts[-1] = p
    return PathSample(space, pts)


def _geodesic_ngon_area(theta: float, n: int) -> float:
    """Area on the unit sphere inside the regular geodesic n-gon of circumradius theta."""
    a = np.array([0.0, 0.0, 1.0])
    b = np.array([math.sin(theta), 0.0, math.cos(theta)])
    c = np.array([math.sin(theta) * math.cos(2 * math.pi / n), math.sin(theta) * math.sin(2 * math.pi / n),
                  math.cos(theta)])
    # Van Oosterom-Strackee solid angle of the triangle (a, b, c)
    num = abs(float(a @ np.cross(b, c)))
    den = 1 + float(a @ b + b @ c + c @ a)
    return n * 2 * math.atan2(num, den)


def _cap(space: TwoSphere, p, a: float, n: int = 32) -> PathSample:
    """Down a great circle from p, once around a geodesic n-gon of area |a|/s, and back up.

    Consecutive samples are joined by great-circle arcs (normalized chords), so the ring
    radius is solved for the polygon, not the smooth circle, to hit the area exactly.
    """
    frac = abs(a) / abs(space.s)
    if not frac < 0.5:
        raise UnreachablePhase(f"phase {a} is not below half the sphere period {space.s}")
    target = 4 * math.pi * frac
    lo, hi = 0.0, math.pi / 2
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if _geodesic_ngon_area(mid, n) < target else (lo, mid)
    theta = 0.5 * (lo + hi)
    p = p / np.linalg.norm(p)
    e1 = np.cross(p, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 0.5:
        e1 = np.cross(p, [0.0, 1.0, 0.0])
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(p, e1)
    sgn = 1.0 if (a > 0) == (space.s > 0) else -1.0
    down = [math.cos(theta * k) * p + math.sin(theta * k) * e1 for k in np.arange(n + 1) / n]
    ring = [math.cos(theta) * p + math.sin(theta) * (math.cos(2 * math.pi * k) * e1 + sgn * math.sin(2 * math.pi * k) * e2)
            for k in np.arange(1, n + 1) / n]
    up = down[::-1][1:]
    pts = np.asarray(down + ring + up)
    pts = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
    pts[0] = pts[-1] = p
    return PathSample(space, pts)


# ---------------------------------------------------------------------------
# flat twists and holonomy


def flat_class_of(scn: Scenario, twist: FlatTwist, gamma: PathSample) -> Morphism:
    """Aharonov-Bohm class of a loop: the character value of its π1 class."""
    if not scn.space.is_flat:
        raise NotFlat("flat twists need a scenario whose form vanishes")
    gamma.require_closed()
    g = component_index(scn.space, gamma)
    name = scn.marked_name(gamma.start) or _point_label(gamma.start)
    return Morphism(name, name, twist(g))


def _point_label(p) -> str:
    return "(" + ", ".join(f"{float(c):.12g}" for c in p) + ")"


@dataclass(frozen=True)
class HolonomyDescriptor:
    kind: str  # "subgroup" or "continuum"
    group: PeriodGroup | None = None
    witness: tuple = ()

    def describe(self) -> str:
        if self.kind == "continuum":
            return "continuum"
        return self.group.describe()

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "describe": self.describe()}
        if self.group is not None:
            d["group"] = self.group.to_dict()
        d["witness"] = [{"label": lab, "action": v} for lab, v in self.witness]
        return d


def holonomy_group(scn: Scenario, twist: FlatTwist | None = None) -> HolonomyDescriptor:
    twist = twist if twist is not None else scn.twist
    if twist is not None:
        if not scn.space.is_flat:
            raise NotFlat("flat twists need a scenario whose form vanishes")
        return HolonomyDescriptor("subgroup", generate(twist.values, scn.basis))
    space = scn.space
    if space is None:
        raise UnsupportedModel("holonomy needs a model space with a connection")
    if space.is_flat:
        return HolonomyDescriptor("subgroup", generate([], scn.basis))
    if isinstance(space, PuncturedPlane):
        base = scn.family.loop(FreeAbelian(1).element((1,)))
        wit = []
        for r in (1.0, 2.0):
            circle = PathSample(space, base.points * r)
            v, _ = loop_action(scn, circle)
            wit.append((f"circle r={r:g}", v))
        if abs(wit[0][1] - wit[1][1]) <= scn.tol:
            return HolonomyDescriptor("subgroup", scn.P_omega, tuple(wit))
        return HolonomyDescriptor("continuum", None, tuple(wit))
    raise UnsupportedModel(f"no holonomy descriptor for {type(space).__name__} without a flat twist")


# ---------------------------------------------------------------------------
# symmetries


@dataclass(frozen=True)
class Symmetry:
    """A form-preserving map: ``translation`` (torus), ``rotation`` (plane about 0, sphere about an axis)."""

    kind: str
    params: tuple = ()

    def apply(self, space: ModelSpace, pts: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return pts.copy()
        if self.kind == "translation" and isinstance(space, FlatTorus):
            return pts + np.asarray(self.params, dtype=float)
        if self.kind == "rotation" and isinstance(space, PuncturedPlane):
            (a,) = self.params
            R = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
            return pts @ R.T
        if self.kind == "rotation" and isinstance(space, TwoSphere):
            axis, a = np.asarray(self.params[0], dtype=float), float(self.params[1])
            k = axis / np.linalg.norm(axis)
            K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
            R = np.eye(3) + math.sin(a) * K + (1 - math.cos(a)) * K @ K
            out = pts @ R.T
            return out / np.linalg.norm(out, axis=-1, keepdims=True)
        raise UnsupportedSymmetry(f"{self.kind} is not a symmetry family of {type(space).__name__}")


def pushforward_symmetry(scn: Scenario, g: Symmetry, gamma: PathSample) -> PathSample:
    return PathSample(scn.space, g.apply(scn.space, gamma.points))


# ---------------------------------------------------------------------------
# multiplicative wave functions


@dataclass(frozen=True)
class Character:
    """χ on T_ω: exp(2πi·n·t/g) for P_ω = gZ, exp(i·k·t) for P_ω = {0}."""

    P: PeriodGroup
    n: Fraction | float

    def __call__(self, t: TorusElement) -> complex:
        if self.P.rank == 0:
            return cmath.exp(1j * float(self.n) * float(t.rep))
        if self.n == 0:
            return 1.0 + 0j
        g = float(self.P.canonical_generator)
        rep = float(t.canonical().rep)
        return cmath.exp(2j * math.pi * float(self.n) * rep / g)


def character(P: PeriodGroup, n) -> Character:
    if P.rank == 0:
        return Character(P, float(n))
    if P.rank >= 2:
        if n != 0:
            raise IncompatibleCharacter("a dense period group only admits the trivial continuous character")
        return Character(P, 0)
    q = Fraction(n)
    if q.denominator != 1:
        raise IncompatibleCharacter(f"n = {n} is not an integer, so exp(2πi n t/g) is not defined on R/gZ")
    return Character(P, int(q))


def multiplicative_wavefunction(scn: Scenario, chi: Character, m: Morphism) -> complex:
    if chi.P != scn.P_omega:
        raise IncompatibleCharacter("character belongs to a different torus of periods")
    return chi(m.phase)
