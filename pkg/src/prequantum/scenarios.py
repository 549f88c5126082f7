"""Scenario files: schema validation, construction of a :class:`Scenario`, built-in corpus."""
from __future__ import annotations

import copy
import json
import math
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .action import (
    DEFAULT_GRID,
    DEFAULT_TOL,
    HomotopySample,
    action_details,
    embed_in_product,
    read_path_csv,
    rotation_sweep,
    sphere_sweep,
    torus_sweep,
)
from .errors import ParseError, QuadratureNotConverged, SchemaError
from .geometry import FlatTorus, ModelSpace, Product, PuncturedPlane, TwoHolesPlane, TwoSphere
from .groupoid import PeriodRecord, Scenario
from .homotopy_algebra import (
    DeclaredCocycle,
    Free,
    FreeAbelian,
    GeometricCocycle,
    Presentation,
    SurfaceGroup,
    default_family,
    relation_pairs,
    triple_pairs,
    _sphere_base,
)
from .periods import BasisConstants, ExactReal, SnapTable, generate


def load_schema(name: str = "scenario") -> dict:
    text = resources.files("prequantum").joinpath(f"schemas/{name}.schema.json").read_text()
    return json.loads(text)


def validate_document(doc: Any, name: str = "scenario") -> None:
    validator = jsonschema.Draft202012Validator(load_schema(name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"{name} schema violation at {where}: {err.message}")


# ---------------------------------------------------------------------------
# built-in corpus


def _genus2_declared() -> dict:
    from .homotopy_algebra import surface_presentation

    pres = surface_presentation(2)
    G = pres.group
    gens = [G.generator(k) for k in range(4)]
    pairs = []
    for w in pres.relations:
        pairs += relation_pairs(pres, w)
    for i in gens:
        for j in gens:
            for k in gens:
                pairs += triple_pairs(G, i, j, k)
    for g in gens:
        pairs.append((g, G.inv(g)))

    def image(g):
        # abelianize, then send a_k -> A = (1, 0) and b_k -> B = (0, 1)
        v = [0, 0]
        for k, e in G.to_word(g):
            v[k % 2] += e
        return v

    entries = []
    seen = set()
    for i, j in pairs:
        if i == G.identity() or j == G.identity() or (i, j) in seen:
            continue
        seen.add((i, j))
        (p, q), (m, n) = image(i), image(j)
        det = p * n - q * m
        # pullback of (1/2) det scaled by area/2, so that T([a1,b1][a2,b2]) = area
        value = Fraction(det, 4)
        entries.append({"i": pres.format_element(i), "j": pres.format_element(j),
                        "value": "0" if value == 0 else f"{value} area"})
    entries.sort(key=lambda e: (len(e["i"]), e["i"], len(e["j"]), e["j"]))
    return {
        "name": "genus-2-declared",
        "description": "Closed genus-2 surface handled algebraically; area 3 declared as a basis constant; "
                       "declared surfacic cocycle pulled back from the torus along a_k -> A, b_k -> B.",
        "space": {"kind": "surface", "genus": 2, "area": "area"},
        "presentation": {"group": "surface", "generators": ["a1", "b1", "a2", "b2"],
                         "relations": ["a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1"]},
        "constants": [{"name": "area", "value": 3.0}],
        "toric_periods": [],
        "cocycle": {"declared": entries},
        "expected_P_omega": ["area"],
    }


BUILTINS: dict[str, dict] = {
    "torus-unit": {
        "name": "torus-unit",
        "description": "Unit square flat torus with dx^dy; straight-lift basis loops.",
        "space": {"kind": "flat_torus", "basis": [["1", "0"], ["0", "1"]]},
        "presentation": {"group": "free_abelian", "generators": ["A", "B"], "relations": ["A B A^-1 B^-1"]},
        "basis_loops": {"family": "straight", "base_point": [0.0, 0.0]},
        "snapping": {"entries": ["1"], "tol": 1e-5, "max_denominator": 12},
        "marked_points": [{"name": "x1", "point": [0.5, 0.25]}, {"name": "x2", "point": [0.25, 0.75]}],
        "expected_P_omega": ["1"],
    },
    "punctured-plane-magnetic": {
        "name": "punctured-plane-magnetic",
        "description": "Punctured plane with the exact form dx^dy/(x^2+y^2); unit-circle basis loops.",
        "space": {"kind": "punctured_plane", "form": "magnetic"},
        "presentation": {"group": "free_abelian", "generators": ["g"], "relations": []},
        "basis_loops": {"family": "circle", "base_point": [1.0, 0.0]},
        "snapping": {"entries": ["1"], "tol": 1e-5, "max_denominator": 12},
        "marked_points": [{"name": "x2", "point": [2.0, 0.0]}, {"name": "x3", "point": [0.0, 1.5]}],
        "expected_P_omega": [],
    },
    "two-holes-flat": {
        "name": "two-holes-flat",
        "description": "Plane minus two points with the zero form and a flat twist a -> 1/2, b -> 1/3.",
        "space": {"kind": "two_holes_plane", "p1": [-1.0, 0.0], "p2": [1.0, 0.0], "form": "zero"},
        "presentation": {"group": "free", "generators": ["a", "b"], "relations": []},
        "basis_loops": {"family": "circles"},
        "snapping": {"entries": ["1"], "tol": 1e-5, "max_denominator": 12},
        "marked_points": [{"name": "x1", "point": [0.0, 1.5]}, {"name": "x2", "point": [0.0, -2.0]}],
        "flat_twist": {"a": "1/2", "b": "1/3"},
        "expected_P_omega": [],
    },
    "s2xs2-rational": {
        "name": "s2xs2-rational",
        "description": "S^2 x S^2 with spherical periods s1 and s2 = (2/3) s1.",
        "space": {"kind": "product", "left": {"kind": "two_sphere", "s": "s1"},
                  "right": {"kind": "two_sphere", "s": "2/3 s1"}},
        "constants": [{"name": "s1", "value": 1.0}],
        "snapping": {"entries": ["s1"], "tol": 1e-5, "max_denominator": 12},
        "marked_points": [{"name": "x1", "point": [0.0, 1.0, 0.0, 1.0, 0.0, 0.0]}],
        "expected_P_omega": ["1/3 s1"],
    },
    "s2xs2-irrational": {
        "name": "s2xs2-irrational",
        "description": "S^2 x S^2 with spherical periods 1 and alpha = sqrt(2), declared independent.",
        "space": {"kind": "product", "left": {"kind": "two_sphere", "s": "1"},
                  "right": {"kind": "two_sphere", "s": "alpha"}},
        "constants": [{"name": "alpha", "value": math.sqrt(2.0)}],
        "snapping": {"entries": ["1", "alpha"], "tol": 1e-5, "max_denominator": 12},
        "marked_points": [{"name": "x1", "point": [0.0, 1.0, 0.0, 1.0, 0.0, 0.0]}],
        "expected_P_omega": ["1", "alpha"],
    },
    "aharonov-bohm": {
        "name": "aharonov-bohm",
        "description": "Punctured plane with the zero form and flux 1/2 as a flat twist.",
        "space": {"kind": "punctured_plane", "form": "zero"},
        "presentation": {"group": "free_abelian", "generators": ["g"], "relations": []},
        "basis_loops": {"family": "circle", "base_point": [1.0, 0.0]},
        "snapping": {"entries": ["1"], "tol": 1e-5, "max_denominator": 12},
        "marked_points": [{"name": "x2", "point": [2.0, 0.0]}],
        "flat_twist": {"g": "1/2"},
        "expected_P_omega": [],
    },
}
BUILTINS["genus-2-declared"] = _genus2_declared()
BUILTIN_ORDER = ("torus-unit", "genus-2-declared", "s2xs2-rational", "s2xs2-irrational",
                 "punctured-plane-magnetic", "aharonov-bohm", "two-holes-flat")


def builtin_document(name: str) -> dict:
    try:
        return copy.deepcopy(BUILTINS[name])
    except KeyError:
        raise SchemaError(f"unknown built-in scenario {name!r}") from None


# ---------------------------------------------------------------------------
# loading


def read_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_scenario(source, grid: tuple[int, int] | None = None, tol: float | None = None) -> Scenario:
    """Load a built-in name, a JSON file path, or an already-parsed document."""
    root = None
    if isinstance(source, dict):
        doc = copy.deepcopy(source)
    elif isinstance(source, str) and source in BUILTINS:
        doc = builtin_document(source)
    else:
        if isinstance(source, str) and not Path(source).exists() and not source.endswith(".json"):
            raise ParseError(f"unknown scenario {source!r}: not a built-in name "
                             f"({', '.join(BUILTIN_ORDER)}) and not an existing file")
        doc = read_document(source)
        root = Path(source).parent
    return build_scenario(doc, grid=grid, tol=tol, root=root)


def _exact(basis: BasisConstants, text: str, where: str) -> ExactReal:
    try:
        return ExactReal.parse(basis, text)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _build_space(spec: dict, basis: BasisConstants) -> ModelSpace | None:
    kind = spec["kind"]
    if kind == "flat_torus":
        b = spec.get("basis", [["1", "0"], ["0", "1"]])
        try:
            return FlatTorus(tuple(tuple(Fraction(c) for c in v) for v in b))
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"space/basis: {exc}") from None
    if kind == "punctured_plane":
        return PuncturedPlane(spec.get("form", "magnetic"), float(spec.get("b", 1.0)))
    if kind == "two_holes_plane":
        try:
            return TwoHolesPlane(tuple(spec.get("p1", (-1.0, 0.0))), tuple(spec.get("p2", (1.0, 0.0))),
                                 spec.get("form", "zero"), float(spec.get("b", 1.0)))
        except ValueError as exc:
            raise SchemaError(f"space: {exc}") from None
    if kind == "two_sphere":
        return TwoSphere(float(_exact(basis, spec.get("s", "1"), "space/s")))
    if kind == "product":
        left, right = _build_space(spec["left"], basis), _build_space(spec["right"], basis)
        if left is None or right is None:
            raise SchemaError("space: products of algebraic surfaces are not supported")
        return Product(left, right)
    if kind == "surface":
        return None
    raise SchemaError(f"space: unknown kind {kind!r}")


def _default_presentation(spec: dict, space) -> dict:
    kind = spec["kind"]
    if kind == "flat_torus":
        return {"group": "free_abelian", "generators": ["A", "B"], "relations": ["A B A^-1 B^-1"]}
    if kind == "punctured_plane":
        return {"group": "free_abelian", "generators": ["g"], "relations": []}
    if kind == "two_holes_plane":
        return {"group": "free", "generators": ["a", "b"], "relations": []}
    if kind == "surface":
        g = spec["genus"]
        names = [f"{c}{i}" for i in range(1, g + 1) for c in "ab"]
        rel = " ".join(f"a{i} b{i} a{i}^-1 b{i}^-1" for i in range(1, g + 1))
        return {"group": "surface", "generators": names, "relations": [rel]}
    return {"group": "free_abelian", "generators": [], "relations": []}


def _expected_group(space) -> tuple[str, int] | None:
    if isinstance(space, FlatTorus):
        return ("free_abelian", 2)
    if isinstance(space, PuncturedPlane):
        return ("free_abelian", 1)
    if isinstance(space, TwoHolesPlane):
        return ("free", 2)
    if space is not None:
        return ("free_abelian", 0)
    return None


def _build_presentation(p: dict, space) -> Presentation:
    gens = tuple(p["generators"])
    kind = p["group"]
    exp = _expected_group(space)
    if exp is not None and (kind, len(gens)) != exp:
        raise SchemaError(f"presentation: the model needs group {exp[0]} of rank {exp[1]}, "
                          f"got {kind} of rank {len(gens)}")
    if kind == "free_abelian":
        group = FreeAbelian(len(gens))
    elif kind == "free":
        group = Free(len(gens))
    else:
        if len(gens) % 2 or len(gens) < 4:
            raise SchemaError("presentation: a surface group needs 2g >= 4 generators")
        group = SurfaceGroup(len(gens) // 2)
    from .homotopy_algebra import parse_word

    rels = []
    for k, text in enumerate(p.get("relations", [])):
        try:
            rels.append(parse_word(text, gens))
        except SchemaError as exc:
            raise SchemaError(f"presentation/relations/{k}: {exc}") from None
    return Presentation(gens, tuple(rels), group)


def period_sweeps(space: ModelSpace, S: int, N: int) -> list[tuple[str, HomotopySample]]:
    """Model-provided loops of loops whose actions generate the toric periods."""
    if isinstance(space, FlatTorus):
        return [("sweep B along A", torus_sweep(space, 0, S, N)), ("sweep A along B", torus_sweep(space, 1, S, N))]
    if isinstance(space, PuncturedPlane):
        return [("rotate unit circle", rotation_sweep(space, 1.0, S, N))]
    if isinstance(space, TwoHolesPlane):
        out = []
        for k, c in enumerate(space.holes):
            c = np.asarray(c)
            v = space.base_point - c
            r, th0 = float(np.linalg.norm(v)), math.atan2(v[1], v[0])
            sp = np.arange(S + 1)[:, None] / S
            tp = np.arange(N + 1)[None, :] / N
            th = th0 + 2 * np.pi * (sp + tp)
            grid = c + r * np.stack([np.cos(th), np.sin(th)], axis=-1)
            out.append((f"rotate circle around hole {k + 1}", HomotopySample(space, grid)))
        return out
    if isinstance(space, TwoSphere):
        return [("sphere sweep", sphere_sweep(space.s, S, N))]
    if isinstance(space, Product):
        out = []
        for which, fac in enumerate((space.left, space.right)):
            other = space.right if which == 0 else space.left
            for label, H in period_sweeps(fac, S, N):
                out.append((f"factor {which + 1}: {label}",
                            embed_in_product(space, H, which, _factor_base(other))))
        return out
    return []


def _factor_base(space) -> np.ndarray:
    if isinstance(space, (TwoSphere, Product)):
        return _sphere_base(space)
    if isinstance(space, FlatTorus):
        return np.zeros(2)
    if isinstance(space, PuncturedPlane):
        return np.array([1.0, 0.0])
    if isinstance(space, TwoHolesPlane):
        return space.base_point
    raise SchemaError(f"no base point for {type(space).__name__}")


def build_scenario(doc: dict, grid=None, tol=None, root: Path | None = None) -> Scenario:
    validate_document(doc)
    name = doc["name"]
    S, N = tuple(grid) if grid is not None else tuple(doc.get("grid", (DEFAULT_GRID, DEFAULT_GRID)))
    tol = float(tol) if tol is not None else float(doc.get("tol", DEFAULT_TOL))
    if S < 8 or N < 8:
        raise SchemaError("grid sizes must be at least 8")

    names, values = ["one"], [1.0]
    for c in doc.get("constants", []):
        if c["name"] in names:
            raise SchemaError(f"constants: duplicate symbol {c['name']!r}")
        names.append(c["name"])
        values.append(float(c["value"]))
    try:
        basis = BasisConstants(tuple(names), tuple(values))
    except ValueError as exc:
        raise SchemaError(f"constants: {exc}") from None
    warnings = [f"constants {a} and {b} look rationally related" for a, b in _near(basis)]

    snap_spec = doc.get("snapping", {})
    entries = tuple(_exact(basis, e, "snapping/entries") for e in snap_spec.get("entries", ["1"]))
    snap = SnapTable(entries, float(snap_spec.get("tol", 1e-5)), int(snap_spec.get("max_denominator", 12)))

    space = _build_space(doc["space"], basis)
    pres = _build_presentation(doc.get("presentation") or _default_presentation(doc["space"], space), space)

    # toric periods: declared, or integrated from the model's sweeps and snapped
    records = []
    if "toric_periods" in doc:
        for k, text in enumerate(doc["toric_periods"]):
            x = _exact(basis, text, f"toric_periods/{k}")
            records.append(PeriodRecord(f"declared {k + 1}", float(x), 0.0, x))
    elif space is not None:
        for label, H in period_sweeps(space, S, N):
            r = action_details(space, H)
            if not r.error <= tol:
                raise QuadratureNotConverged(f"{label}: error estimate {r.error:.3g} above {tol:.3g}")
            exact, basis, warn = snap.snap_period(r.value, basis)
            if warn:
                warnings.append(f"{label}: {warn}")
            records.append(PeriodRecord(label, r.value, r.error, exact))
    records = [PeriodRecord(r.label, r.value, r.error, r.exact.rebase(basis)) for r in records]
    P_tor = generate([r.exact for r in records], basis)

    if "cocycle" in doc:
        values = {}
        for k, e in enumerate(doc["cocycle"]["declared"]):
            where = f"cocycle/declared/{k}"
            try:
                i, j = pres.element(e["i"]), pres.element(e["j"])
            except SchemaError as exc:
                raise SchemaError(f"{where}: {exc}") from None
            values[(i, j)] = _exact(basis, e["value"], where)
        cocycle = DeclaredCocycle(pres.group, P_tor, values)
        family = None
        if space is not None:
            bl = doc.get("basis_loops", {})
            family = default_family(space, bl.get("family", ""), bl.get("base_point"))
    else:
        if space is None:
            raise SchemaError("cocycle: algebraic surfaces need a declared cocycle table")
        bl = doc.get("basis_loops", {})
        bp = bl.get("base_point")
        family = default_family(space, bl.get("family", ""), bp)
        cocycle = GeometricCocycle(pres.group, P_tor, family, snap, S=S, N=N, tol=tol)

    marked, references = {}, {}
    for k, m in enumerate(doc.get("marked_points", [])):
        if space is None:
            raise SchemaError("marked_points: algebraic surfaces have no points to mark")
        p = np.asarray(m["point"], dtype=float)
        if p.shape != (space.dim,):
            raise SchemaError(f"marked_points/{k}: expected {space.dim} coordinates")
        try:
            space.validate_points(p)
        except ValueError as exc:
            raise SchemaError(f"marked_points/{k}: {exc}") from None
        marked[m["name"]] = p
        if "reference_csv" in m:
            csv_path = Path(m["reference_csv"])
            if root is not None and not csv_path.is_absolute():
                csv_path = root / csv_path
            references[m["name"]] = read_path_csv(csv_path, space)

    twist_values = None
    if "flat_twist" in doc:
        tw = doc["flat_twist"]
        unknown = sorted(set(tw) - set(pres.generators))
        if unknown:
            raise SchemaError(f"flat_twist: unknown generator {unknown[0]!r}")
        twist_values = [_exact(basis, tw.get(g, "0"), f"flat_twist/{g}") for g in pres.generators]

    expected = None
    if "expected_P_omega" in doc:
        expected = generate([_exact(basis, e, "expected_P_omega") for e in doc["expected_P_omega"]], basis)

    return Scenario(name=name, space=space, presentation=pres, family=family, cocycle=cocycle, basis=basis,
                    snap=snap, P_tor=P_tor, toric_periods=records, marked=marked, references=references,
                    twist_values=twist_values, S=S, N=N, tol=tol, description=doc.get("description", ""),
                    warnings=warnings, declared_P_omega=expected)


def _near(basis: BasisConstants):
    for rel in basis.near_relations():
        idx = [k for k, c in enumerate(rel) if c]
        yield basis.names[idx[0]], basis.names[idx[1]]
