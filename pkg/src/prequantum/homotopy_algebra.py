"""Fundamental-group algebra: words, group normal forms, the surfacic cocycle and the fold.

Group elements are small frozen records whose ``data`` is a canonical normal form:
an integer vector for free abelian groups, a freely reduced word for free groups,
and a Dehn-reduced word for surface groups.  A word is a tuple of
``(generator index, ±1)`` letters.
"""
from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

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
    MissingDeclaredValue,
    NotARelation,
    NotHomotopic,
    QuadratureNotConverged,
    SchemaError,
    UnsupportedModel,
)
from .geometry import FlatTorus, ModelSpace, Product, PuncturedPlane, TwoHolesPlane, TwoSphere
from .periods import ExactReal, PeriodGroup, SnapTable, TorusElement, reduce, torus_distance

Letter = tuple[int, int]
Word = tuple[Letter, ...]


def free_reduce(word: Iterable[Letter]) -> Word:
    out: list[Letter] = []
    for k, e in word:
        if out and out[-1] == (k, -e):
            out.pop()
        else:
            out.append((k, e))
    return tuple(out)


def word_inverse(word: Sequence[Letter]) -> Word:
    return tuple((k, -e) for k, e in reversed(word))


_TOKEN = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?$")


def parse_word(text: str, generators: Sequence[str]) -> Word:
    """Parse ``"a b a^-1 b^-1"`` (tokens split on whitespace or ``*``; ``1`` is the empty word)."""
    tokens = [t for t in re.split(r"[\s*]+", text.strip()) if t]
    if tokens == ["1"]:
        return ()
    out: list[Letter] = []
    for tok in tokens:
        m = _TOKEN.match(tok)
        if not m:
            raise SchemaError(f"malformed word token {tok!r} in {text!r}")
        name, power = m.group(1), int(m.group(2) or 1)
        if name not in generators:
            raise SchemaError(f"unknown generator {name!r} in word {text!r}")
        if power == 0:
            raise SchemaError(f"zero exponent on {name!r} in {text!r}")
        k = generators.index(name)
        out.extend([(k, 1 if power > 0 else -1)] * abs(power))
    return tuple(out)


def format_word(word: Sequence[Letter], generators: Sequence[str]) -> str:
    if not word:
        return "1"
    return " ".join(generators[k] if e > 0 else f"{generators[k]}^-1" for k, e in word)


@dataclass(frozen=True)
class GroupElement:
    kind: str
    data: tuple

    def __repr__(self):
        return f"GroupElement({self.kind}, {self.data})"


class GroupKind:
    """Normal-form procedure for a finitely presented group."""

    name = "abstract"
    rank = 0

    def identity(self) -> GroupElement:
        raise NotImplementedError

    def normal_form(self, word: Sequence[Letter]) -> GroupElement:
        raise NotImplementedError

    def mul(self, a: GroupElement, b: GroupElement) -> GroupElement:
        return self.normal_form(self.to_word(a) + self.to_word(b))

    def inv(self, a: GroupElement) -> GroupElement:
        return self.normal_form(word_inverse(self.to_word(a)))

    def to_word(self, a: GroupElement) -> Word:
        raise NotImplementedError

    def generator(self, k: int, e: int = 1) -> GroupElement:
        return self.normal_form(((k, e),))

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True)
class FreeAbelian(GroupKind):
    rank: int = 2
    name = "free_abelian"

    def identity(self):
        return GroupElement(self.name, (0,) * self.rank)

    def normal_form(self, word):
        v = [0] * self.rank
        for k, e in word:
            v[k] += e
        return GroupElement(self.name, tuple(v))

    def element(self, vec) -> GroupElement:
        if len(vec) != self.rank:
            raise ValueError("vector length differs from the rank")
        return GroupElement(self.name, tuple(int(c) for c in vec))

    def mul(self, a, b):
        return GroupElement(self.name, tuple(x + y for x, y in zip(a.data, b.data)))

    def inv(self, a):
        return GroupElement(self.name, tuple(-x for x in a.data))

    def to_word(self, a):
        out = []
        for k, c in enumerate(a.data):
            out.extend([(k, 1 if c > 0 else -1)] * abs(c))
        return tuple(out)

    def describe(self):
        return f"Z^{self.rank}" if self.rank != 1 else "Z"


@dataclass(frozen=True)
class Free(GroupKind):
    rank: int = 2
    name = "free"

    def identity(self):
        return GroupElement(self.name, ())

    def normal_form(self, word):
        return GroupElement(self.name, free_reduce(word))

    def to_word(self, a):
        return a.data

    def describe(self):
        return f"F_{self.rank}"


@dataclass(frozen=True)
class SurfaceGroup(GroupKind):
    """π1 of the closed orientable genus-g surface, generators a1 b1 ... ag bg.

    Normal form: free reduction plus Dehn replacement of any subword longer than
    half a cyclic rotation of the relator (or its inverse) by the inverse of the
    complement; exactly-half matches are replaced only when that makes the word
    shortlex smaller, which keeps the procedure deterministic and terminating.
    """

    genus: int = 2
    name = "surface"

    def __post_init__(self):
        if self.genus < 1:
            raise ValueError("surface group genus must be positive")

    @property
    def rank(self):
        return 2 * self.genus

    @property
    def relator(self) -> Word:
        r: list[Letter] = []
        for i in range(self.genus):
            a, b = 2 * i, 2 * i + 1
            r += [(a, 1), (b, 1), (a, -1), (b, -1)]
        return tuple(r)

    def _rotations(self) -> list[Word]:
        r = self.relator
        out = []
        for base in (r, word_inverse(r)):
            out += [base[i:] + base[:i] for i in range(len(base))]
        return out

    def identity(self):
        return GroupElement(self.name, ())

    def normal_form(self, word):
        w = list(free_reduce(word))
        rots = self._rotations()
        L = len(self.relator)
        changed = True
        while changed:
            changed = False
            for start in range(len(w)):
                for rho in rots:
                    n = 0
                    while start + n < len(w) and n < L and w[start + n] == rho[n]:
                        n += 1
                    if 2 * n < L:
                        continue
                    repl = list(word_inverse(rho[n:]))
                    cand = free_reduce(w[:start] + repl + w[start + n:])
                    if 2 * n > L or (len(cand), list(cand)) < (len(w), w):
                        w = list(cand)
                        changed = True
                        break
                if changed:
                    break
        return GroupElement(self.name, tuple(w))

    def to_word(self, a):
        return a.data

    def describe(self):
        return f"π1(Σ_{self.genus})"


@dataclass(frozen=True)
class Declared(GroupKind):
    """User-supplied normal form: ``normal_form_fn(word) -> hashable`` plus a word recovery."""

    rank: int = 1
    normal_form_fn: Callable[[Word], Hashable] = field(default=free_reduce, compare=False)
    word_fn: Callable[[Hashable], Word] | None = field(default=None, compare=False)
    name = "declared"

    def identity(self):
        return GroupElement(self.name, self._wrap(self.normal_form_fn(())))

    @staticmethod
    def _wrap(x):
        return x if isinstance(x, tuple) else (x,)

    def normal_form(self, word):
        return GroupElement(self.name, self._wrap(self.normal_form_fn(tuple(word))))

    def to_word(self, a):
        if self.word_fn is None:
            return a.data
        return tuple(self.word_fn(a.data))


@dataclass(frozen=True)
class Presentation:
    generators: tuple[str, ...]
    relations: tuple[Word, ...]
    group: GroupKind

    def __post_init__(self):
        if len(set(self.generators)) != len(self.generators):
            raise SchemaError("duplicate generator names")
        if len(self.generators) != self.group.rank:
            raise SchemaError(f"{len(self.generators)} generators for a group of rank {self.group.rank}")
        for w in self.relations:
            for k, e in w:
                if not (0 <= k < len(self.generators)) or e not in (1, -1):
                    raise SchemaError(f"relation letter {(k, e)} is not over the generators")
            if self.group.normal_form(w) != self.group.identity():
                raise NotARelation(f"relation {format_word(w, self.generators)} is not trivial in the group")

    def word(self, text: str) -> Word:
        return parse_word(text, self.generators)

    def format(self, w: Sequence[Letter]) -> str:
        return format_word(w, self.generators)

    def element(self, text: str) -> GroupElement:
        return self.group.normal_form(self.word(text))

    def format_element(self, g: GroupElement) -> str:
        if isinstance(self.group, FreeAbelian):
            return "(" + ", ".join(str(c) for c in g.data) + ")"
        return self.format(self.group.to_word(g))

    def abelianization_rows(self) -> list[list[int]]:
        rows = []
        for w in self.relations:
            v = [0] * len(self.generators)
            for k, e in w:
                v[k] += e
            rows.append(v)
        return rows


def torus_presentation() -> Presentation:
    return Presentation(("A", "B"), (((0, 1), (1, 1), (0, -1), (1, -1)),), FreeAbelian(2))


def surface_presentation(genus: int) -> Presentation:
    names = []
    for i in range(1, genus + 1):
        names += [f"a{i}", f"b{i}"]
    g = SurfaceGroup(genus)
    return Presentation(tuple(names), (g.relator,), g)


# ---------------------------------------------------------------------------
# basis loops and component detection


def component_index(space: ModelSpace, loop: PathSample, group: GroupKind | None = None) -> GroupElement:
    """π1 class of a closed sampled loop."""
    loop.require_closed()
    if isinstance(space, FlatTorus):
        return FreeAbelian(2).element(space.lift_displacement(loop.points))
    if isinstance(space, PuncturedPlane):
        return FreeAbelian(1).element(space.lift_displacement(loop.points))
    if isinstance(space, TwoHolesPlane):
        return Free(2).normal_form(tuple(space.crossing_word(loop.points)))
    if _simply_connected(space):
        return FreeAbelian(0).identity()
    raise UnsupportedModel(f"no component detection for {type(space).__name__}")


def _simply_connected(space) -> bool:
    if isinstance(space, TwoSphere):
        return True
    if isinstance(space, Product):
        return _simply_connected(space.left) and _simply_connected(space.right)
    return False


class BasisLoopFamily:
    """Chooses one based loop per π1 class; the identity gets the constant loop."""

    name = "abstract"

    def __init__(self, space: ModelSpace, base_point):
        self.space = space
        self.base_point = np.asarray(base_point, dtype=float)

    def loop(self, g: GroupElement) -> PathSample:
        raise NotImplementedError

    def constant(self) -> PathSample:
        return constant_path(self.space, self.base_point)


class TorusStraight(BasisLoopFamily):
    """Class (m, n) ↦ the straight cover segment t ↦ x0 + t·(m·e1 + n·e2)."""

    name = "straight"

    def __init__(self, space: FlatTorus, base_point=(0.0, 0.0)):
        super().__init__(space, base_point)

    def displacement(self, g: GroupElement) -> np.ndarray:
        return self.space.lattice @ np.asarray(g.data, dtype=float)

    def loop(self, g):
        if not any(g.data):
            return self.constant()
        d = self.displacement(g)
        return PathSample(self.space, np.stack([self.base_point, self.base_point + d]))


class TorusWobbled(TorusStraight):
    """Straight lifts plus a perpendicular half-sine bump whose amplitude depends on the class.

    The bump encloses nonzero area, so every τ value moves off the straight-basis value.
    """

    name = "wobbled"

    def __init__(self, space: FlatTorus, base_point=(0.0, 0.0), amplitude: float = 0.07, samples: int = 64):
        super().__init__(space, base_point)
        self.amplitude = amplitude
        self.samples = samples

    def loop(self, g):
        if not any(g.data):
            return self.constant()
        d = self.displacement(g)
        perp = np.array([-d[1], d[0]]) / np.linalg.norm(d)
        m, n = g.data
        eps = self.amplitude * (1 + ((3 * m + 5 * n) % 4)) / 4 * (1 if (m + 2 * n) % 2 == 0 else -1)
        t = np.arange(self.samples + 1)[:, None] / self.samples
        return PathSample(self.space, self.base_point + t * d + eps * np.sin(np.pi * t) * perp)


class TorusStaircase(TorusStraight):
    """Axis-parallel staircase: all e1 steps, then all e2 steps."""

    name = "staircase"

    def loop(self, g):
        if not any(g.data):
            return self.constant()
        m, n = g.data
        e1, e2 = self.space.lattice[:, 0], self.space.lattice[:, 1]
        corner = self.base_point + m * e1
        pts = [self.base_point, corner, corner + n * e2]
        if m == 0 or n == 0:
            pts = [self.base_point, corner + n * e2]
        return PathSample(self.space, np.stack(pts))


class CircleWindings(BasisLoopFamily):
    """Winding n ↦ the unit circle traversed n times from (1, 0)."""

    name = "circle"

    def __init__(self, space: PuncturedPlane, base_point=(1.0, 0.0), samples_per_turn: int = DEFAULT_GRID):
        super().__init__(space, base_point)
        self.samples_per_turn = samples_per_turn

    def loop(self, g):
        (n,) = g.data
        if n == 0:
            return self.constant()
        N = self.samples_per_turn * abs(n)
        th = 2 * np.pi * n * np.arange(N + 1) / N
        r = float(np.linalg.norm(self.base_point))
        th0 = math.atan2(self.base_point[1], self.base_point[0])
        pts = r * np.stack([np.cos(th0 + th), np.sin(th0 + th)], axis=-1)
        pts[-1] = pts[0] = self.base_point
        return PathSample(self.space, pts)


class TwoHoleCircles(BasisLoopFamily):
    """Generator k ↦ ccw circle around hole k through the midpoint; words concatenate."""

    name = "circles"

    def __init__(self, space: TwoHolesPlane, samples: int = 128):
        super().__init__(space, space.base_point)
        self.samples = samples

    def generator_loop(self, k: int, e: int) -> PathSample:
        c = np.asarray(self.space.holes[k])
        v = self.base_point - c
        r = float(np.linalg.norm(v))
        th0 = math.atan2(v[1], v[0])
        th = th0 + e * 2 * np.pi * np.arange(self.samples + 1) / self.samples
        pts = c + r * np.stack([np.cos(th), np.sin(th)], axis=-1)
        pts[0] = pts[-1] = self.base_point
        return PathSample(self.space, pts)

    def loop(self, g):
        if not g.data:
            return self.constant()
        return concat_all(*(self.generator_loop(k, e) for k, e in g.data))


class TrivialFamily(BasisLoopFamily):
    name = "constant"

    def loop(self, g):
        if any(g.data):
            raise UnsupportedModel("only the identity class exists")
        return self.constant()


class ConjugatedFamily(BasisLoopFamily):
    """Loops based at the end x1 of a path c: ℓ'_i = c̄ ∨ ℓ_i ∨ c."""

    name = "conjugated"

    def __init__(self, base: BasisLoopFamily, c: PathSample):
        if not base.space.same_point(c.start, base.base_point):
            raise ValueError("the conjugating path must start at the family's base point")
        super().__init__(base.space, c.end)
        self.base = base
        self.c = c

    def loop(self, g):
        inner = self.base.loop(g)
        if inner.N == 1 and np.array_equal(inner.start, inner.end):
            return self.constant()
        return concat(concat(reverse(self.c), inner), self.c)


def default_family(space: ModelSpace, name: str = "", base_point=None) -> BasisLoopFamily:
    if isinstance(space, FlatTorus):
        cls = {"": TorusStraight, "straight": TorusStraight, "wobbled": TorusWobbled,
               "staircase": TorusStaircase}.get(name)
        if cls is None:
            raise SchemaError(f"unknown torus basis-loop family {name!r}")
        return cls(space, base_point if base_point is not None else (0.0, 0.0))
    if isinstance(space, PuncturedPlane):
        if name not in ("", "circle"):
            raise SchemaError(f"unknown punctured-plane basis-loop family {name!r}")
        return CircleWindings(space, base_point if base_point is not None else (1.0, 0.0))
    if isinstance(space, TwoHolesPlane):
        if name not in ("", "circles"):
            raise SchemaError(f"unknown two-holes basis-loop family {name!r}")
        return TwoHoleCircles(space)
    if _simply_connected(space):
        if base_point is None:
            base_point = _sphere_base(space)
        return TrivialFamily(space, base_point)
    raise UnsupportedModel(f"no basis-loop family for {type(space).__name__}")


def _sphere_base(space):
    if isinstance(space, TwoSphere):
        return np.array([0.0, 0.0, 1.0])
    return np.concatenate([_sphere_base(space.left), _sphere_base(space.right)])


# ---------------------------------------------------------------------------
# cocycle tables


@dataclass(frozen=True)
class ExtensionElement:
    g: GroupElement
    u: TorusElement

    def __eq__(self, other):
        if not isinstance(other, ExtensionElement):
            return NotImplemented
        return self.g == other.g and self.u == other.u

    __hash__ = None


class CocycleTable:
    """Lazy, thread-safe memo of τ values in T_tor."""

    def __init__(self, group: GroupKind, P_tor: PeriodGroup):
        self.group = group
        self.P_tor = P_tor
        self._cache: dict[tuple[GroupElement, GroupElement], TorusElement] = {}
        self._lock = threading.Lock()

    def zero(self) -> TorusElement:
        return TorusElement(ExactReal.zero(self.P_tor.basis), self.P_tor)

    def __call__(self, i: GroupElement, j: GroupElement) -> TorusElement:
        key = (i, j)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        ident = self.group.identity()
        val = self.zero() if (i == ident or j == ident) else self._compute(i, j)
        with self._lock:
            return self._cache.setdefault(key, val)

    def _compute(self, i, j) -> TorusElement:
        raise NotImplementedError

    @property
    def computed_pairs(self) -> list[tuple[GroupElement, GroupElement]]:
        with self._lock:
            return list(self._cache)


class DeclaredCocycle(CocycleTable):
    def __init__(self, group: GroupKind, P_tor: PeriodGroup, values: dict):
        super().__init__(group, P_tor)
        self.values = {k: TorusElement(v, P_tor) for k, v in values.items()}

    def _compute(self, i, j):
        try:
            return self.values[(i, j)]
        except KeyError:
            raise MissingDeclaredValue(f"no declared cocycle value for the pair ({i.data}, {j.data})") from None


@dataclass(frozen=True)
class TauRecord:
    value: float
    error: float
    exact: ExactReal


class GeometricCocycle(CocycleTable):
    """τ(i, j) = π_tor of the action from ℓ_{i*j} to ℓ_i ∨ ℓ_j, snapped to exact values."""

    def __init__(self, group: GroupKind, P_tor: PeriodGroup, family: BasisLoopFamily, snap: SnapTable,
                 S: int = DEFAULT_GRID, N: int = DEFAULT_GRID, tol: float = DEFAULT_TOL):
        super().__init__(group, P_tor)
        self.family = family
        self.snap = snap
        self.S, self.N, self.tol = S, N, tol
        self.records: dict[tuple[GroupElement, GroupElement], TauRecord] = {}

    def homotopy(self, i, j):
        f = self.family
        lhs = f.loop(self.group.mul(i, j))
        rhs = concat(f.loop(i), f.loop(j))
        return straight_homotopy(f.space, lhs, rhs, S=self.S, N=self.N)

    def _compute(self, i, j):
        if self.family.space.is_flat:
            # the form vanishes, so every homotopy has zero action
            exact = ExactReal.zero(self.P_tor.basis)
            with self._lock:
                self.records[(i, j)] = TauRecord(0.0, 0.0, exact)
            return reduce(self.P_tor, exact)
        r = action_details(self.family.space, self.homotopy(i, j))
        if not r.error <= self.tol:
            raise QuadratureNotConverged(f"τ({i.data}, {j.data}): error estimate {r.error:.3g} above {self.tol:.3g}")
        exact = self.snap.snap_value(r.value, self.P_tor.basis)
        with self._lock:
            self.records[(i, j)] = TauRecord(r.value, r.error, exact)
        return reduce(self.P_tor, exact)


def ext_identity(tau: CocycleTable) -> ExtensionElement:
    return ExtensionElement(tau.group.identity(), tau.zero())


def ext_mul(a: ExtensionElement, b: ExtensionElement, tau: CocycleTable) -> ExtensionElement:
    """(i, u)·(j, v) = (i*j, u + v + τ(i, j))."""
    return ExtensionElement(tau.group.mul(a.g, b.g), a.u + b.u + tau(a.g, b.g))


def ext_inv(a: ExtensionElement, tau: CocycleTable) -> ExtensionElement:
    gi = tau.group.inv(a.g)
    return ExtensionElement(gi, -a.u - tau(a.g, gi))


def section(tau: CocycleTable, k: int, e: int) -> ExtensionElement:
    """σ(g) = (g, 0) and σ(g)^-1 = (g^-1, -τ(g, g^-1))."""
    g = tau.group.generator(k, 1)
    if e > 0:
        return ExtensionElement(g, tau.zero())
    gi = tau.group.inv(g)
    return ExtensionElement(gi, -tau(g, gi))


def fold(tau: CocycleTable, word: Sequence[Letter]) -> ExtensionElement:
    acc = ext_identity(tau)
    for k, e in word:
        acc = ext_mul(acc, section(tau, k, e), tau)
    return acc


def accumulated_cocycle(pres: Presentation, tau: CocycleTable, word: Sequence[Letter]) -> TorusElement:
    """T(w) for a relation word w, via Ψ(w) = (1, T(w))."""
    res = fold(tau, word)
    if res.g != pres.group.identity():
        raise NotARelation(f"word {pres.format(word)} does not multiply to the identity")
    return res.u


def cocycle_sides(tau: CocycleTable, i, j, k) -> tuple[TorusElement, TorusElement]:
    G = tau.group
    lhs = tau(i, j) + tau(G.mul(i, j), k)
    rhs = tau(i, G.mul(j, k)) + tau(j, k)
    return lhs, rhs


def verify_cocycle_identity(tau: CocycleTable, i, j, k) -> float:
    """T_tor distance between τ(i,j) + τ(ij,k) and τ(i,jk) + τ(j,k)."""
    lhs, rhs = cocycle_sides(tau, i, j, k)
    return lhs.distance(rhs)


def raw_cocycle_residual(tau: GeometricCocycle, i, j, k) -> float:
    """Same identity on the unsnapped quadrature values (distance mod P_tor)."""
    G = tau.group
    ident = G.identity()

    def val(a, b):
        if a == ident or b == ident:
            return 0.0
        tau(a, b)
        return tau.records[(a, b)].value

    d = val(i, j) + val(G.mul(i, j), k) - val(i, G.mul(j, k)) - val(j, k)
    return torus_distance(tau.P_tor, d)


def generator_elements(pres: Presentation) -> list[GroupElement]:
    return [pres.group.generator(k) for k in range(len(pres.generators))]


def relation_pairs(pres: Presentation, word: Sequence[Letter]) -> list[tuple[GroupElement, GroupElement]]:
    """Pairs (i, j) whose τ value the fold of ``word`` consumes."""
    G = pres.group
    acc = G.identity()
    pairs = []
    for k, e in word:
        g = G.generator(k, 1)
        if e < 0:
            gi = G.inv(g)
            pairs.append((g, gi))
            step = gi
        else:
            step = g
        pairs.append((acc, step))
        acc = G.mul(acc, step)
    return pairs


def triple_pairs(G: GroupKind, i, j, k) -> list[tuple[GroupElement, GroupElement]]:
    return [(i, j), (G.mul(i, j), k), (i, G.mul(j, k)), (j, k)]


def is_identity(G: GroupKind, g: GroupElement) -> bool:
    return g == G.identity()


def check_homotopic(space, a: PathSample, b: PathSample) -> None:
    """Raise NotHomotopic when two closed loops lie in different components."""
    if component_index(space, a) != component_index(space, b):
        raise NotHomotopic("loops lie in different components")
