"""Exact subgroups of R over a declared basis of real constants.

Real numbers that matter (periods, cocycle values, phases) are stored as rational
coefficient vectors over a :class:`BasisConstants`, whose symbols are *declared*
rationally independent.  Subgroups of R generated by finitely many such numbers
are then lattices in Q^k, handled exactly through integer Hermite forms.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce as _fold
from itertools import combinations
from typing import Iterable, Sequence

from .errors import BasisMismatch
from .lattice import hermite_rows, in_row_span, lcm, smith_invariants

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BasisConstants:
    names: tuple[str, ...] = ("one",)
    values: tuple[float, ...] = (1.0,)
    independent: bool = True

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("basis names and values differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("basis symbols must be unique")
        if "one" not in self.names or self.values[self.names.index("one")] != 1.0:
            raise ValueError("basis must contain the symbol 'one' with value 1")
        for n, v in zip(self.names, self.values):
            if not math.isfinite(v) or v == 0:
                raise ValueError(f"basis constant {n!r} must be finite and nonzero")
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", n):
                raise ValueError(f"invalid basis symbol {n!r}")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise BasisMismatch(f"unknown basis symbol {name!r}") from None

    def extend(self, name: str, value: float) -> "BasisConstants":
        return BasisConstants(self.names + (name,), self.values + (float(value),), self.independent)

    def extends(self, other: "BasisConstants") -> bool:
        n = len(other.names)
        return self.names[:n] == other.names and self.values[:n] == other.values

    def near_relations(self, bound: int = 6, tol: float = 1e-9) -> list[tuple[int, ...]]:
        """Small integer relations among the float approximations (diagnostic only)."""
        found = []
        for i, j in combinations(range(len(self.values)), 2):
            for p in range(1, bound + 1):
                for q in range(-bound, bound + 1):
                    if q and math.gcd(p, q) == 1 and abs(p * self.values[i] + q * self.values[j]) < tol:
                        rel = [0] * len(self.values)
                        rel[i], rel[j] = p, q
                        found.append(tuple(rel))
        return found


_TERM = re.compile(
    r"\s*([+-])?\s*(?:(\d+(?:/\d+)?(?:\.\d+)?)\s*\*?\s*)?([A-Za-z_][A-Za-z0-9_]*)?\s*"
)


@dataclass(frozen=True)
class ExactReal:
    """Σ coeff_k · symbol_k with rational coefficients."""

    basis: BasisConstants
    coeffs: tuple[Fraction, ...]

    @classmethod
    def zero(cls, basis: BasisConstants) -> "ExactReal":
        return cls(basis, (Fraction(0),) * len(basis.names))

    @classmethod
    def symbol(cls, basis: BasisConstants, name: str, coeff=1) -> "ExactReal":
        c = [Fraction(0)] * len(basis.names)
        c[basis.index(name)] = Fraction(coeff)
        return cls(basis, tuple(c))

    @classmethod
    def rational(cls, basis: BasisConstants, q) -> "ExactReal":
        return cls.symbol(basis, "one", Fraction(q))

    @classmethod
    def from_float(cls, basis: BasisConstants, x: float) -> "ExactReal":
        # the float is itself a dyadic rational; keep it exactly
        return cls.rational(basis, Fraction(float(x)))

    @classmethod
    def parse(cls, basis: BasisConstants, text: str) -> "ExactReal":
        """Parse ``"3 - 2*alpha"``, ``"1/3 s1"``, ``"-1/2"``, ``"area"`` ..."""
        text = str(text).strip()
        if not text:
            raise ValueError("empty exact real")
        out = cls.zero(basis)
        pos = 0
        first = True
        while pos < len(text):
            m = _TERM.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse exact real {text!r} at position {pos}")
            sign, num, name = m.groups()
            if sign is None and not first:
                raise ValueError(f"missing operator in {text!r} at position {pos}")
            if num is None and name is None:
                raise ValueError(f"dangling sign in {text!r}")
            q = Fraction(num) if num is not None else Fraction(1)
            if sign == "-":
                q = -q
            out = out + cls.symbol(basis, name or "one", q)
            pos = m.end()
            first = False
        return out

    def _check(self, other: "ExactReal"):
        if self.basis != other.basis:
            raise BasisMismatch("exact reals live over different basis constants")

    def __add__(self, other: "ExactReal") -> "ExactReal":
        self._check(other)
        return ExactReal(self.basis, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "ExactReal") -> "ExactReal":
        self._check(other)
        return ExactReal(self.basis, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "ExactReal":
        return ExactReal(self.basis, tuple(-a for a in self.coeffs))

    def scale(self, q) -> "ExactReal":
        q = Fraction(q)
        return ExactReal(self.basis, tuple(q * a for a in self.coeffs))

    def __mul__(self, q):
        return self.scale(q)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __float__(self) -> float:
        return math.fsum(float(c) * v for c, v in zip(self.coeffs, self.basis.values))

    @property
    def value(self) -> float:
        return float(self)

    @property
    def denominator(self) -> int:
        return _fold(lcm, (c.denominator for c in self.coeffs), 1)

    def rebase(self, basis: BasisConstants) -> "ExactReal":
        if basis == self.basis:
            return self
        if not basis.extends(self.basis):
            raise BasisMismatch("target basis does not extend the current one")
        pad = (Fraction(0),) * (len(basis.names) - len(self.coeffs))
        return ExactReal(basis, self.coeffs + pad)

    def ratio_to(self, other: "ExactReal") -> Fraction | None:
        """``q`` with ``self == q * other`` if the two are commensurate, else None."""
        self._check(other)
        if other.is_zero():
            return None
        k = next(i for i, c in enumerate(other.coeffs) if c)
        q = self.coeffs[k] / other.coeffs[k]
        if all(a == q * b for a, b in zip(self.coeffs, other.coeffs)):
            return q
        return None

    def __str__(self) -> str:
        terms = []
        for name, c in zip(self.basis.names, self.coeffs):
            if not c:
                continue
            mag = abs(c)
            if name == "one":
                body = str(mag)
            elif mag == 1:
                body = name
            else:
                body = f"{mag}*{name}"
            terms.append(("-" if c < 0 else "+", body))
        if not terms:
            return "0"
        s = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        for sign, body in terms[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self) -> str:
        return f"ExactReal({str(self)!r})"


@dataclass(frozen=True, eq=False)
class PeriodGroup:
    """Subgroup of R generated by finitely many exact reals.

    Derived data is computed eagerly: the integer Hermite basis of the coefficient
    lattice (scaled by the common denominator), the Q-rank, discreteness and, for
    rank one, the positive canonical generator.
    """

    basis: BasisConstants
    generators: tuple[ExactReal, ...]
    denominator: int = field(init=False)
    hermite: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        for g in self.generators:
            if g.basis != self.basis:
                raise BasisMismatch("generator over a different basis")
        d = _fold(lcm, (g.denominator for g in self.generators), 1)
        rows = [[int(c * d) for c in g.coeffs] for g in self.generators]
        object.__setattr__(self, "denominator", d)
        object.__setattr__(self, "hermite", tuple(tuple(r) for r in hermite_rows(rows)))

    @property
    def rank(self) -> int:
        return len(self.hermite)

    @property
    def discrete(self) -> bool:
        return self.rank <= 1

    @property
    def lattice_basis(self) -> tuple[ExactReal, ...]:
        return tuple(ExactReal(self.basis, tuple(Fraction(c, self.denominator) for c in row))
                     for row in self.hermite)

    @property
    def canonical_generator(self) -> ExactReal | None:
        if self.rank != 1:
            return None
        g = self.lattice_basis[0]
        return -g if float(g) < 0 else g

    @property
    def is_trivial(self) -> bool:
        return self.rank == 0

    def contains(self, x: ExactReal) -> bool:
        if x.basis != self.basis:
            raise BasisMismatch("element over a different basis")
        if x.is_zero():
            return True
        if not self.hermite:
            return False
        m = lcm(self.denominator, x.denominator)
        k = m // self.denominator
        rows = [[k * c for c in row] for row in self.hermite]
        return in_row_span(rows, [int(c * m) for c in x.coeffs])

    def __eq__(self, other):
        if not isinstance(other, PeriodGroup):
            return NotImplemented
        return self.basis == other.basis and self.lattice_basis == other.lattice_basis

    def __hash__(self):
        return hash((self.basis, self.hermite, self.denominator))

    def describe(self) -> str:
        if self.rank == 0:
            return "{0}"
        gens = [self.canonical_generator] if self.rank == 1 else list(self.lattice_basis)
        return " + ".join(_z_multiple(g) for g in gens)

    def torus_label(self) -> str:
        if self.rank == 0:
            return "R"
        return f"R/{self.describe()}"

    def to_dict(self) -> dict:
        g = self.canonical_generator
        return {
            "generators": [str(x) for x in self.generators],
            "lattice_basis": [str(x) for x in self.lattice_basis],
            "lattice_basis_float": [float(x) for x in self.lattice_basis],
            "rank": self.rank,
            "discrete": self.discrete,
            "canonical_generator": None if g is None else str(g),
            "canonical_generator_float": None if g is None else float(g),
            "describe": self.describe(),
        }


def _z_multiple(g: ExactReal) -> str:
    text = str(g)
    if text == "1":
        return "Z"
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", text):
        return f"{text}·Z"
    return f"({text})·Z"


def generate(gens: Iterable[ExactReal], basis: BasisConstants | None = None) -> PeriodGroup:
    gens = tuple(gens)
    if basis is None:
        if not gens:
            raise ValueError("basis required for the trivial group")
        basis = gens[0].basis
    for g in gens:
        if g.basis != basis:
            raise BasisMismatch("generators over different basis constants")
    return PeriodGroup(basis, tuple(g for g in gens if not g.is_zero()))


def contains(P: PeriodGroup, x: ExactReal) -> bool:
    return P.contains(x)


def is_discrete(P: PeriodGroup) -> bool:
    return P.discrete


class TorusElement:
    """Element of R/P, stored as an exact representative."""

    __slots__ = ("rep", "group")

    def __init__(self, rep: ExactReal, group: PeriodGroup):
        if rep.basis != group.basis:
            raise BasisMismatch("representative and group use different basis constants")
        self.rep = rep
        self.group = group

    def _same(self, other: "TorusElement"):
        if self.group != other.group:
            raise BasisMismatch("torus elements of different period groups")

    def __add__(self, other):
        self._same(other)
        return TorusElement(self.rep + other.rep, self.group)

    def __sub__(self, other):
        self._same(other)
        return TorusElement(self.rep - other.rep, self.group)

    def __neg__(self):
        return TorusElement(-self.rep, self.group)

    def __eq__(self, other):
        if not isinstance(other, TorusElement):
            return NotImplemented
        return self.group == other.group and self.group.contains(self.rep - other.rep)

    __hash__ = None

    def is_zero(self) -> bool:
        return self.group.contains(self.rep)

    def canonical(self) -> "TorusElement":
        return reduce(self.group, self.rep)

    @property
    def value(self) -> float:
        return float(self.rep)

    def distance(self, other: "TorusElement | float") -> float:
        """Distance in R/P between two elements (or an element and a real number)."""
        if isinstance(other, TorusElement):
            self._same(other)
            if self.group.contains(self.rep - other.rep):
                return 0.0
            d = float(self.rep - other.rep)
        else:
            d = float(self.rep) - float(other)
        return torus_distance(self.group, d)

    def __repr__(self):
        return f"TorusElement({str(self.canonical().rep)!r} mod {self.group.describe()})"

    def to_dict(self) -> dict:
        c = self.canonical().rep
        return {"exact": str(c), "float": float(c)}


def torus_distance(P: PeriodGroup, d: float) -> float:
    """|d| measured in R/P; for dense groups the nearest small lattice combination is used."""
    if P.rank == 0:
        return abs(d)
    if P.rank == 1:
        g = abs(float(P.canonical_generator))
        return abs(math.remainder(d, g))
    gens = [float(x) for x in P.lattice_basis]
    best = abs(d)
    rng = range(-3, 4)
    for combo in _product(rng, len(gens)):
        best = min(best, abs(d - sum(c * g for c, g in zip(combo, gens))))
    return best


def _product(rng, n):
    if n == 0:
        yield ()
        return
    for head in rng:
        for tail in _product(rng, n - 1):
            yield (head,) + tail


def reduce(P: PeriodGroup, x: ExactReal) -> TorusElement:
    """Canonical element of R/P: representative in [0, g) when commensurate with g."""
    if x.basis != P.basis:
        raise BasisMismatch("element over a different basis")
    g = P.canonical_generator
    if g is not None:
        q = x.ratio_to(g)
        if q is not None:
            return TorusElement(g.scale(q - math.floor(q)), P)
    return TorusElement(x, P)


def total_periods(P_tor: PeriodGroup, relation_values: Sequence[TorusElement]) -> PeriodGroup:
    """Preimage in R of the subgroup of R/P_tor generated by the relation values."""
    reps = []
    for v in relation_values:
        if v.group != P_tor:
            raise BasisMismatch("relation value is not an element of R/P_tor")
        reps.append(v.rep)
    return PeriodGroup(P_tor.basis, P_tor.generators + tuple(r for r in reps if not r.is_zero()))


# ---------------------------------------------------------------------------
# snapping numeric quadrature output onto exact values


@dataclass(frozen=True)
class SnapTable:
    entries: tuple[ExactReal, ...]
    tol: float = 1e-5
    max_denominator: int = 12

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("snapping tolerance must be positive")

    def snap(self, x: float, basis: BasisConstants, tol: float | None = None) -> ExactReal | None:
        tol = self.tol if tol is None else tol
        if abs(x) <= tol:
            return ExactReal.zero(basis)
        best = None
        for e in self.entries:
            e = e.rebase(basis)
            ev = float(e)
            q = Fraction(x / ev).limit_denominator(self.max_denominator)
            if q and abs(x - float(q) * ev) <= tol:
                if best is None or q.denominator < best[0]:
                    best = (q.denominator, e.scale(q))
        return None if best is None else best[1]

    def snap_value(self, x: float, basis: BasisConstants, tol: float | None = None) -> ExactReal:
        """Snap, falling back to the exact dyadic value of the float."""
        s = self.snap(x, basis, tol)
        return ExactReal.from_float(basis, x) if s is None else s

    def snap_period(self, x: float, basis: BasisConstants, label: str = "period"):
        """Snap a period; unmatched values become fresh basis symbols.

        Returns ``(exact, basis, warning)`` where ``basis`` may be an extension.
        """
        s = self.snap(x, basis)
        if s is not None:
            return s, basis, None
        k = 1
        while f"{label}_{k}" in basis.names:
            k += 1
        name = f"{label}_{k}"
        nb = basis.extend(name, x)
        warning = f"period {x!r} matched no snapping entry; introduced fresh symbol {name}"
        log.warning(warning)
        return ExactReal.symbol(nb, name), nb, warning


# ---------------------------------------------------------------------------
# moduli descriptors


@dataclass(frozen=True)
class AbelianInvariants:
    """Z^free_rank ⊕ Z/d1 ⊕ ... with d1 | d2 | ... (all d > 1)."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    @classmethod
    def from_relation_matrix(cls, ngens: int, rows: Sequence[Sequence[int]]) -> "AbelianInvariants":
        inv = smith_invariants([list(r) for r in rows if any(r)]) if rows else []
        return cls(ngens - len(inv), tuple(d for d in inv if d > 1))

    def __str__(self):
        return GroupDescriptor(free_rank=self.free_rank, torsion=self.torsion).describe()


@dataclass(frozen=True)
class GroupDescriptor:
    """Abelian group Z^free_rank ⊕ T^torus_power ⊕ Z/d1 ⊕ ... in invariant-factor form."""

    free_rank: int = 0
    torus_power: int = 0
    torsion: tuple[int, ...] = ()
    torus_symbol: str = "T_ω"

    @property
    def trivial(self) -> bool:
        return not (self.free_rank or self.torus_power or self.torsion)

    def describe(self) -> str:
        parts = []
        if self.free_rank:
            parts.append("Z" if self.free_rank == 1 else f"Z^{self.free_rank}")
        if self.torus_power:
            parts.append(self.torus_symbol if self.torus_power == 1 else f"{self.torus_symbol}^{self.torus_power}")
        parts += [f"Z/{d}" for d in self.torsion]
        return " ⊕ ".join(parts) if parts else "0"

    def to_dict(self) -> dict:
        return {"free_rank": self.free_rank, "torus_power": self.torus_power,
                "torsion": list(self.torsion), "describe": self.describe()}


def _invariant_form(orders: Iterable[int]) -> tuple[int, ...]:
    orders = [d for d in orders if d > 1]
    if not orders:
        return ()
    diag = [[d if i == j else 0 for j in range(len(orders))] for i, d in enumerate(orders)]
    return tuple(d for d in smith_invariants(diag) if d > 1)


def moduli_ext(pi1_ab: AbelianInvariants, P: PeriodGroup) -> GroupDescriptor:
    """Ext(π1^ab, P) with P ≅ Z^k: the free part drops out, each Z/d gives (Z/d)^k."""
    k = P.rank
    return GroupDescriptor(torsion=_invariant_form([d for d in pi1_ab.torsion for _ in range(k)]))


def characters_h1(pi1_ab: AbelianInvariants, P: PeriodGroup) -> GroupDescriptor:
    """Hom(π1^ab, R/P): a copy of R/P per free generator plus the d-torsion of R/P per Z/d.

    For P ≅ Z^k the d-torsion of R/P is (1/d)P/P ≅ (Z/d)^k; R itself is torsion-free.
    """
    k = P.rank
    return GroupDescriptor(
        torus_power=pi1_ab.free_rank,
        torsion=_invariant_form([d for d in pi1_ab.torsion for _ in range(k)]),
        torus_symbol="T_ω",
    )
