"""Analysis pipeline and verification harness over loaded scenarios."""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .action import (
    PathSample,
    action_details,
    concat,
    concat_all,
    profile_rows,
    reverse,
    straight_homotopy,
    write_profiles_csv,
)
from .errors import PrequantumError
from .geometry import FlatTorus, Product, PuncturedPlane, TwoHolesPlane, TwoSphere
from .groupoid import (
    Morphism,
    Scenario,
    Symmetry,
    chasles_phi,
    character,
    class_of,
    compose,
    connector,
    flat_class_of,
    global_psi,
    holonomy_group,
    identity_at,
    inverse,
    isotropy_probe,
    multiplicative_wavefunction,
    pushforward_symmetry,
)
from .homotopy_algebra import (
    ExtensionElement,
    FreeAbelian,
    GeometricCocycle,
    TorusStraight,
    TorusWobbled,
    ConjugatedFamily,
    accumulated_cocycle,
    ext_mul,
    generator_elements,
    relation_pairs,
    verify_cocycle_identity,
)
from .periods import (
    AbelianInvariants,
    BasisConstants,
    ExactReal,
    TorusElement,
    characters_h1,
    generate,
    moduli_ext,
)
from .scenarios import BUILTIN_ORDER, load_scenario, period_sweeps, validate_document


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": _num(self.residual), "tolerance": self.tolerance,
                "pass": self.passed, "detail": self.detail}


def check(name: str, residual: float, tolerance: float, detail: str = "") -> Check:
    residual = float(residual)
    return Check(name, residual, tolerance, bool(residual <= tolerance), detail)


def exact_check(name: str, ok: bool, detail: str = "") -> Check:
    return Check(name, 0.0 if ok else 1.0, 0.0, bool(ok), detail)


@dataclass
class AnalysisReport:
    data: dict
    profiles: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in iter_checks(self.data))

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def iter_checks(data: dict):
    yield from data.get("checks", [])
    for sub in data.get("scenarios", []):
        yield from iter_checks(sub)


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _exact_dict(x: ExactReal) -> dict:
    return {"exact": str(x), "float": float(x)}


def _torus_dict(t: TorusElement) -> dict:
    c = t.canonical().rep
    return {"exact": str(c), "float": float(c), "representative": str(t.rep)}


def pi1_abelianization(scn: Scenario) -> AbelianInvariants:
    pres = scn.presentation
    return AbelianInvariants.from_relation_matrix(len(pres.generators), pres.abelianization_rows())


# ---------------------------------------------------------------------------
# analysis


def run_analysis(scn: Scenario) -> AnalysisReport:
    pres = scn.presentation
    G = pres.group
    data: dict = {
        "scenario": scn.name,
        "description": scn.description,
        "grid": {"S": scn.S, "N": scn.N},
        "tolerance": scn.tol,
        "basis_constants": [{"name": n, "value": v} for n, v in zip(scn.basis.names, scn.basis.values)],
        "presentation": {"group": G.describe(), "generators": list(pres.generators),
                         "relations": [pres.format(w) for w in pres.relations]},
        "toric_periods": [{"label": r.label, "float": r.value, "error": _num(r.error), "exact": str(r.exact)}
                          for r in scn.toric_periods],
        "P_tor": scn.P_tor.to_dict(),
        "P_omega": scn.P_omega.to_dict(),
        "T_omega": scn.P_omega.torus_label(),
        "warnings": list(scn.warnings),
    }
    profiles: list = []
    homotopies = []
    if scn.numeric:
        for label, H in period_sweeps(scn.space, scn.S, scn.N):
            r = action_details(scn.space, H)
            homotopies.append({"label": label, "action": r.value, "error": _num(r.error), "S": H.S, "N": H.N})
            profiles += profile_rows(label, r)

    pairs = []
    gens = generator_elements(pres)
    for i in gens:
        for j in gens:
            pairs.append((i, j))
    for w in pres.relations:
        pairs += relation_pairs(pres, w)
    seen, table = set(), []
    for i, j in pairs:
        if (i, j) in seen:
            continue
        seen.add((i, j))
        val = scn.cocycle(i, j)
        row = {"i": pres.format_element(i), "j": pres.format_element(j), **_torus_dict(val)}
        if isinstance(scn.cocycle, GeometricCocycle) and (i, j) in scn.cocycle.records:
            rec = scn.cocycle.records[(i, j)]
            row["quadrature"] = {"value": rec.value, "error": _num(rec.error)}
            label = f"tau({row['i']}, {row['j']})"
            r = action_details(scn.space, scn.cocycle.homotopy(i, j))
            homotopies.append({"label": label, "action": r.value, "error": _num(r.error), "S": len(r.profile) - 1,
                               "N": scn.cocycle.homotopy(i, j).N})
            profiles += profile_rows(label, r)
        table.append(row)
    data["surfacic_cocycle"] = table
    data["accumulated_cocycle"] = [{"relation": pres.format(w), **_torus_dict(v)}
                                   for w, v in zip(pres.relations, scn.relation_values)]
    ab = pi1_abelianization(scn)
    data["moduli"] = {"pi1_ab": {"free_rank": ab.free_rank, "torsion": list(ab.torsion), "describe": str(ab)},
                      "ext": moduli_ext(ab, scn.P_omega).to_dict(),
                      "h1": characters_h1(ab, scn.P_omega).to_dict()}
    try:
        data["holonomy"] = holonomy_group(scn).to_dict()
    except PrequantumError as exc:
        data["holonomy"] = {"kind": "unavailable", "describe": str(exc), "witness": []}
    if scn.twist is not None:
        data["flat_twist"] = {g: _exact_dict(v) for g, v in zip(pres.generators, scn.twist.values)}
    data["homotopies"] = homotopies
    data["checks"] = [c.to_dict() for c in basic_checks(scn)]
    return AnalysisReport(data, profiles)


def basic_checks(scn: Scenario) -> list[Check]:
    out = []
    for r in scn.toric_periods:
        out.append(check(f"period '{r.label}' snapped", abs(r.value - float(r.exact)), scn.snap.tol))
        out.append(check(f"period '{r.label}' quadrature error", r.error, scn.tol))
    for w, v in zip(scn.presentation.relations, scn.relation_values):
        out.append(exact_check(f"relation {scn.presentation.format(w)} value lies in P_omega",
                               scn.P_omega.contains(v.rep)))
    if scn.declared_P_omega is not None:
        out.append(exact_check("P_omega matches the declared expectation", scn.declared_P_omega == scn.P_omega,
                               f"declared {scn.declared_P_omega.describe()}, computed {scn.P_omega.describe()}"))
    gens = generator_elements(scn.presentation)
    worst = max((verify_cocycle_identity(scn.cocycle, i, j, k) for i, j, k in itertools.product(gens, repeat=3)),
                default=0.0)
    out.append(check("cocycle identity on generator triples", worst, scn.tol))
    return out


# ---------------------------------------------------------------------------
# random samples for the property suites


def random_path(scn: Scenario, rng, x, y, interior: int = 2) -> PathSample:
    space = scn.space
    x, y = np.asarray(x, float), np.asarray(y, float)
    if isinstance(space, FlatTorus):
        y = y + space.cover_shift(x, y)
        pts = [x] + [x + (k / (interior + 1)) * (y - x) + rng.uniform(-0.2, 0.2, 2) for k in range(1, interior + 1)] + [y]
        return PathSample(space, np.asarray(pts))
    if isinstance(space, (PuncturedPlane, TwoHolesPlane)):
        return _planar_path(space, rng, x, y, interior)
    return _sphere_path(space, rng, x, y, interior)


def _planar_path(space, rng, x, y, interior):
    base = connector(space, x, y, N=interior + 1).points
    for _ in range(100):
        pts = base.copy()
        pts[1:-1] += rng.uniform(-0.15, 0.15, (interior, 2))
        cand = concat_all(*(connector(space, p, q, N=2) for p, q in zip(pts[:-1], pts[1:])))
        if _same_class(space, cand, connector(space, x, y, N=4)):
            return cand
    return connector(space, x, y, N=4)


def _same_class(space, a: PathSample, b: PathSample) -> bool:
    try:
        loop = concat(a, reverse(b))
        if isinstance(space, PuncturedPlane):
            return space.lift_displacement(loop.points) == (0,)
        if isinstance(space, TwoHolesPlane):
            return space.crossing_word(loop.points) == []
    except (PrequantumError, ValueError):
        return False
    return True


def _sphere_path(space, rng, x, y, interior):
    base = connector(space, x, y, N=interior + 1).points

    def jitter(pts, sp):
        if isinstance(sp, Product):
            a, b = sp.split(pts)
            return np.concatenate([jitter(a, sp.left), jitter(b, sp.right)], axis=-1)
        q = pts.copy()
        q[1:-1] += rng.uniform(-0.15, 0.15, q[1:-1].shape)
        return q / np.linalg.norm(q, axis=-1, keepdims=True)

    pts = jitter(base, space)
    return concat_all(*(connector(space, p, q, N=2) for p, q in zip(pts[:-1], pts[1:])))


def random_loop(scn: Scenario, rng) -> PathSample:
    """A based loop at x0 in a random small class."""
    space = scn.space
    x0 = scn.x0
    if isinstance(space, FlatTorus):
        d = space.lattice @ rng.integers(-1, 2, size=2)
        return random_path(scn, rng, x0, x0 + d, interior=3)
    if isinstance(space, PuncturedPlane):
        n = int(rng.integers(-1, 2))
        r0 = float(np.linalg.norm(x0))
        th0 = math.atan2(x0[1], x0[0])
        k = np.arange(1, 4)
        th = th0 + 2 * math.pi * n * k / 4 + rng.uniform(-0.3, 0.3, 3)
        r = r0 * np.exp(rng.uniform(-0.3, 0.3, 3))
        mid = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        pts = np.concatenate([[x0], mid, [x0]])
        return concat_all(*(connector(space, p, q, N=2) for p, q in zip(pts[:-1], pts[1:])))
    if isinstance(space, TwoHolesPlane):
        G = scn.presentation.group
        word = tuple((int(rng.integers(0, 2)), int(rng.choice([-1, 1]))) for _ in range(int(rng.integers(0, 3))))
        return scn.family.loop(G.normal_form(word))
    pts = _sphere_path(space, rng, x0, x0, 3).points
    return PathSample(space, pts)


# ---------------------------------------------------------------------------
# verification suites


def run_verification(scn: Scenario) -> AnalysisReport:
    report = run_analysis(scn)
    checks = []
    for suite in _suites(scn):
        try:
            checks.extend(suite(scn))
        except PrequantumError as exc:
            checks.append(Check(suite.__name__, math.inf, 0.0, False, f"{type(exc).__name__}: {exc}"))
    report.data["checks"] = report.data["checks"] + [c.to_dict() for c in checks]
    report.data["passed"] = report.passed
    return report


def _suites(scn: Scenario):
    suites = [suite_groupoid_axioms, suite_wavefunctions]
    if not scn.numeric:
        return [suite_declared] + suites
    space = scn.space
    if isinstance(space, FlatTorus):
        suites = [suite_torus, suite_basis_independence] + suites
    if isinstance(space, PuncturedPlane) and space.form_kind == "magnetic":
        suites = [suite_magnetic] + suites
    if _is_sphere_model(space):
        suites = [suite_spheres] + suites
    if scn.twist is not None:
        suites = [suite_flat] + suites
    if not space.is_flat:
        suites += [suite_psi_additivity, suite_isotropy]
    suites += [suite_chasles, suite_compose_concat]
    if isinstance(space, (FlatTorus, PuncturedPlane)):
        suites.append(suite_symmetry)
    return suites


def _is_sphere_model(space) -> bool:
    if isinstance(space, TwoSphere):
        return True
    return isinstance(space, Product) and _is_sphere_model(space.left) and _is_sphere_model(space.right)


def suite_torus(scn: Scenario) -> list[Check]:
    out = []
    for r in scn.toric_periods:
        out.append(check(f"toric period |{r.label}| = fundamental area", abs(abs(r.value) - float(scn.space.area)), 1e-6))
    out.append(exact_check("P_omega = P_tor = Z", scn.P_omega == scn.P_tor == generate([ExactReal.rational(scn.basis, 1)])))
    G = scn.presentation.group
    A, B = G.generator(0), G.generator(1)
    scn.cocycle(A, B)
    rec = scn.cocycle.records[(A, B)]
    L = scn.space.lattice
    oracle = 0.5 * float(np.linalg.det(L))  # signed triangle area of the straight lifts
    out.append(check("tau(A,B) against triangle-area oracle", abs(rec.value - oracle), 1e-5))
    diff = scn.cocycle(A, B) - scn.cocycle(B, A)
    out.append(check("tau(A,B) - tau(B,A) = area of the commutator mod Z", diff.distance(float(scn.space.area)), 1e-5))
    (T,) = scn.relation_values
    out.append(check("T(A B A^-1 B^-1) = fundamental area mod Z", T.distance(float(scn.space.area)), 1e-5))
    letters = [A, B, G.inv(A), G.inv(B)]
    worst = max(verify_cocycle_identity(scn.cocycle, i, j, k) for i, j, k in itertools.product(letters, repeat=3))
    out.append(check("cocycle identity over triples of generators and inverses", worst, 1e-6))
    return out


def suite_basis_independence(scn: Scenario) -> list[Check]:
    space = scn.space
    pres = scn.presentation
    (w,) = pres.relations
    T0 = scn.relation_values[0]
    out = []
    families = [("wobbled basis", TorusWobbled(space, scn.x0)),
                ("conjugated basis", ConjugatedFamily(TorusStraight(space, scn.x0),
                                                      PathSample(space, [scn.x0, scn.x0 + [0.3, 0.2], scn.x0 + [0.35, 0.6]])))]
    for label, fam in families:
        tau = GeometricCocycle(pres.group, scn.P_tor, fam, scn.snap, S=scn.S, N=scn.N, tol=scn.tol)
        T1 = accumulated_cocycle(pres, tau, w)
        out.append(check(f"T(w) unchanged under {label}", T1.distance(T0), 1e-5))
    return out


def suite_declared(scn: Scenario) -> list[Check]:
    out = []
    gens = generator_elements(scn.presentation)
    ok = all(verify_cocycle_identity(scn.cocycle, i, j, k) == 0.0 for i, j, k in itertools.product(gens, repeat=3))
    out.append(exact_check("declared cocycle identity holds exactly on generator triples", ok))
    if "area" in scn.basis.names:
        area = ExactReal.symbol(scn.basis, "area")
        out.append(exact_check("P_omega = area * Z exactly", scn.P_omega == generate([area])))
        out.append(exact_check("T(relation) = area exactly", all(v.rep == area for v in scn.relation_values)))
    return out


def suite_spheres(scn: Scenario) -> list[Check]:
    out = []
    sp = scn.space
    factors = [sp] if isinstance(sp, TwoSphere) else [sp.left, sp.right]
    for r, fac in zip(scn.toric_periods, factors):
        out.append(check(f"{r.label} = s", abs(abs(r.value) - abs(fac.s)), 1e-5))
    P = scn.P_omega
    detail = f"P_omega = {P.describe()}, discrete = {P.discrete}"
    if "s1" in scn.basis.names:
        target = generate([ExactReal.symbol(scn.basis, "s1", "1/3")])
        out.append(exact_check("P_omega generator is (1/3) s1 exactly", P == target, detail))
    if "alpha" in scn.basis.names:
        out.append(exact_check("irrational ratio gives a non-discrete P_omega", not P.discrete, detail))
    return out


def _circle(scn: Scenario, r: float) -> PathSample:
    base = scn.family.loop(FreeAbelian(1).element((1,)))
    return PathSample(scn.space, base.points * r)


def suite_magnetic(scn: Scenario) -> list[Check]:
    out = [exact_check("P_omega = {0}", scn.P_omega.is_trivial)]
    H = straight_homotopy(scn.space, _circle(scn, 1.0), _circle(scn, 2.0), S=scn.S, N=scn.N)
    r = action_details(scn.space, H)
    out.append(check("annulus 1 -> 2 action = 2 pi ln 2", abs(r.value - 2 * math.pi * math.log(2)), 1e-5))
    x2 = scn.marked.get("x2")
    if x2 is not None and np.allclose(x2, [2.0, 0.0]):
        ref = scn.references["x2"]
        m1 = class_of(scn, _circle(scn, 1.0))
        m2 = class_of(scn, concat_all(ref, _circle(scn, 2.0), reverse(ref)))
        out.append(exact_check("radii 1 and 2 give distinct morphisms", m1 != m2,
                               f"phases {m1.phase.value:.9g} and {m2.phase.value:.9g}"))
    hol = holonomy_group(scn)
    out.append(exact_check("holonomy is a continuum", hol.kind == "continuum"))
    return out


def suite_flat(scn: Scenario) -> list[Check]:
    out = []
    tw = scn.twist
    G = scn.presentation.group
    fam = scn.family
    ok = True
    if isinstance(G, FreeAbelian):
        flux = tw.values[0]
        for n in range(-2, 3):
            loop = fam.loop(G.element((n,)))
            m = flat_class_of(scn, tw, loop)
            ok &= m.phase == scn.to_omega(flux.scale(n)) and m.phase.rep == flux.scale(n)
        out.append(exact_check("flat class of a winding-n loop is n * flux", ok))
    words = [((0, 1),), ((1, 1),), ((0, 1), (1, -1)), ((1, -1), (0, -1), (0, -1))]
    words = [w for w in words if all(k < len(scn.presentation.generators) for k, _ in w)]
    func = True
    for w1, w2 in itertools.product(words, repeat=2):
        g1, g2 = G.normal_form(w1), G.normal_form(w2)
        l1, l2 = fam.loop(g1), fam.loop(g2)
        lhs = flat_class_of(scn, tw, concat(l1, l2)).phase
        rhs = flat_class_of(scn, tw, l1).phase + flat_class_of(scn, tw, l2).phase
        func &= lhs == rhs
    out.append(exact_check("flat classes are a homomorphism on concatenation", func))
    hol = holonomy_group(scn)
    out.append(exact_check("holonomy = subgroup generated by the twist values",
                           hol.kind == "subgroup" and hol.group == generate(tw.values, scn.basis),
                           hol.describe()))
    h1 = characters_h1(pi1_abelianization(scn), scn.P_omega)
    r = len(scn.presentation.generators)
    out.append(exact_check("H^1 = T_omega^r", h1.torus_power == r and not h1.torsion, h1.describe()))
    return out


def suite_psi_additivity(scn: Scenario, pairs: int = 50) -> list[Check]:
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(pairs):
        a, b = random_loop(scn, rng), random_loop(scn, rng)
        d = global_psi(scn, concat(a, b)) - global_psi(scn, a) - global_psi(scn, b)
        worst = max(worst, d.distance(scn.zero()))
    return [check(f"psi additive on {pairs} random based-loop pairs", worst, 1e-6)]


def _marked_pairs(scn: Scenario):
    names = sorted(scn.marked)
    return [(a, b) for a in names for b in names]


def suite_chasles(scn: Scenario) -> list[Check]:
    rng = np.random.default_rng(2)
    worst = 0.0
    self_gap = 0.0
    for a, b in _marked_pairs(scn):
        x, y = scn.marked[a], scn.marked[b]
        g1 = random_path(scn, rng, x, y)
        g2 = random_path(scn, rng, x, y)
        self_gap = max(self_gap, chasles_phi(scn, g1, g1).distance(scn.zero()))
        q = random_path(scn, rng, scn.x0, x, interior=1)
        v1 = chasles_phi(scn, g1, g2)
        v2 = chasles_phi(scn, g1, g2, delta=q)
        worst = max(worst, v1.distance(v2))
    return [check("Chasles value independent of the connector", worst, 1e-6),
            check("Chasles value of a path with itself is 0", self_gap, 1e-6)]


def suite_compose_concat(scn: Scenario) -> list[Check]:
    rng = np.random.default_rng(3)
    names = sorted(scn.marked)
    worst = 0.0
    for a, b, c in itertools.product(names, repeat=3):
        g1 = random_path(scn, rng, scn.marked[a], scn.marked[b])
        g2 = random_path(scn, rng, g1.end, scn.marked[c])
        m = compose(class_of(scn, g1), class_of(scn, g2))
        m12 = class_of(scn, concat(g1, g2))
        worst = max(worst, m.phase.distance(m12.phase) if (m.src, m.tgt) == (m12.src, m12.tgt) else math.inf)
    return [check("class(g1) . class(g2) = class(g1 v g2)", worst, 1e-6)]


def sample_morphisms(scn: Scenario, per_pair: int = 2, seed: int = 4) -> list[Morphism]:
    rng = np.random.default_rng(seed)
    if not scn.numeric:
        gen = scn.P_omega.canonical_generator
        out = []
        for _ in range(12):
            q = rng.integers(-12, 13) / 12
            out.append(Morphism("x", "x", scn.to_omega(gen.scale(str(q)) if gen is not None else
                                                      ExactReal.rational(scn.basis, str(q)))))
        return out
    out = [identity_at(scn, x) for x in sorted(scn.marked)]
    for a, b in _marked_pairs(scn):
        for _ in range(per_pair):
            out.append(class_of(scn, random_path(scn, rng, scn.marked[a], scn.marked[b])))
    if scn.twist is not None:
        G = scn.presentation.group
        for k in range(len(scn.presentation.generators)):
            out.append(flat_class_of(scn, scn.twist, scn.family.loop(G.generator(k))))
    return out


def suite_groupoid_axioms(scn: Scenario) -> list[Check]:
    ms = sample_morphisms(scn)
    assoc = ident = inv = True
    count = 0
    for m1 in ms:
        e_src = Morphism(m1.src, m1.src, scn.zero())
        e_tgt = Morphism(m1.tgt, m1.tgt, scn.zero())
        ident &= compose(e_src, m1) == m1 and compose(m1, e_tgt) == m1
        inv &= compose(m1, inverse(m1)) == e_src and compose(inverse(m1), m1) == e_tgt
        for m2 in ms:
            if m2.src != m1.tgt:
                continue
            for m3 in ms:
                if m3.src != m2.tgt:
                    continue
                count += 1
                assoc &= compose(compose(m1, m2), m3) == compose(m1, compose(m2, m3))
    out = [exact_check(f"associativity over {count} composable triples", assoc),
           exact_check("identity laws", ident), exact_check("inverse laws", inv)]
    if not scn.numeric:
        rng = np.random.default_rng(5)
        tau = scn.cocycle
        gens = generator_elements(scn.presentation)
        gen = scn.P_omega.canonical_generator
        ok = True
        for i, j, k in itertools.product(gens, repeat=3):
            u, v, w = (TorusElement(gen.scale(str(rng.integers(-6, 7) / 4)), scn.P_tor) for _ in range(3))
            a, b, c = ExtensionElement(i, u), ExtensionElement(j, v), ExtensionElement(k, w)
            ok &= ext_mul(ext_mul(a, b, tau), c, tau) == ext_mul(a, ext_mul(b, c, tau), tau)
        out.append(exact_check("extension product associative on generator triples", ok))
    return out


def suite_wavefunctions(scn: Scenario, pairs: int = 100) -> list[Check]:
    P = scn.P_omega
    chi = character(P, 1 if P.rank <= 1 else 0)
    ms = sample_morphisms(scn, seed=6)
    composable = [(a, b) for a in ms for b in ms if a.tgt == b.src]
    rng = np.random.default_rng(7)
    picks = [composable[int(k)] for k in rng.integers(0, len(composable), size=pairs)]
    worst = 0.0
    for a, b in picks:
        lhs = multiplicative_wavefunction(scn, chi, compose(a, b))
        rhs = multiplicative_wavefunction(scn, chi, a) * multiplicative_wavefunction(scn, chi, b)
        worst = max(worst, abs(lhs - rhs))
    return [check(f"wave function multiplicative on {pairs} composable pairs", worst, 1e-9)]


def suite_isotropy(scn: Scenario) -> list[Check]:
    P = scn.P_omega
    if P.rank == 1:
        g = P.canonical_generator
        targets = [scn.to_omega(g.scale(f"{k}/10")) for k in range(10)]
    else:
        targets = [scn.element(x) for x in (0.0, 0.25, -0.4, 0.7)]
    worst = 0.0
    for t, loop, phase in isotropy_probe(scn, "x0", targets):
        worst = max(worst, phase.distance(t))
    return [check(f"isotropy probe realizes {len(targets)} target phases", worst, 1e-6)]


def suite_symmetry(scn: Scenario) -> list[Check]:
    space = scn.space
    rng = np.random.default_rng(8)
    if isinstance(space, FlatTorus):
        syms = [Symmetry("translation", tuple(rng.uniform(-1, 1, 2))) for _ in range(10)]
    else:
        syms = [Symmetry("rotation", (float(rng.uniform(-math.pi, math.pi)),)) for _ in range(10)]
    names = sorted(scn.marked)
    x, y = scn.marked[names[0]], scn.marked[names[-1]]
    g1, g2 = random_path(scn, rng, x, y), random_path(scn, rng, x, y)
    base = chasles_phi(scn, g1, g2)
    worst = 0.0
    for s in syms:
        v = chasles_phi(scn, pushforward_symmetry(scn, s, g1), pushforward_symmetry(scn, s, g2))
        worst = max(worst, v.distance(base))
    return [check(f"Chasles values invariant under {len(syms)} symmetries", worst, 1e-6)]


# ---------------------------------------------------------------------------
# moduli (scenario independent)


def moduli_checks() -> list[Check]:
    basis = BasisConstants(("one", "beta"), (1.0, math.e))
    one = ExactReal.rational(basis, 1)
    Z = generate([one])
    Z2 = generate([one, ExactReal.symbol(basis, "beta")])
    out = []
    ext = moduli_ext(AbelianInvariants(2, ()), Z)
    out.append(exact_check("Ext(Z^2, Z) trivial", ext.trivial, ext.describe()))
    ext = moduli_ext(AbelianInvariants.from_relation_matrix(1, [[3]]), Z)
    out.append(exact_check("Ext(Z/3, Z) = Z/3", ext.torsion == (3,), ext.describe()))
    ext = moduli_ext(AbelianInvariants.from_relation_matrix(2, [[0, 2]]), Z2)
    out.append(exact_check("Ext(Z + Z/2, Z^2) = (Z/2)^2", ext.torsion == (2, 2), ext.describe()))
    return out


# ---------------------------------------------------------------------------
# suites over several scenarios and emission


def verify_suite(names, grid=None, tol=None, jobs: int = 1) -> AnalysisReport:
    names = tuple(names)

    def one(n):
        return run_verification(load_scenario(n, grid=grid, tol=tol))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(one, names))  # map keeps the input order
    else:
        reports = [one(n) for n in names]
    full = names == BUILTIN_ORDER
    data = {"suite": "paper" if full else ",".join(names),
            "scenarios": [r.data for r in reports],
            "checks": [c.to_dict() for c in moduli_checks()] if full else []}
    report = AnalysisReport(data, [row for r in reports for row in r.profiles])
    data["passed"] = report.passed
    return report


def emit(report: AnalysisReport, formats, out) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    stem = report.data.get("scenario") or report.data.get("suite", "report")
    if "json" in formats:
        validate_document(report.data, "report")
        p = out / f"{stem}.report.json"
        p.write_text(report.to_json())
        written.append(p)
    if "csv" in formats:
        p = out / "action_profiles.csv"
        write_profiles_csv(p, report.profiles)
        written.append(p)
    return written
