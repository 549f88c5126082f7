from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from prequantum.action import PathSample, concat, reverse
from prequantum.errors import (
    EndpointMismatch,
    IncompatibleCharacter,
    UnmarkedEndpoint,
    UnreachablePhase,
    UnsupportedSymmetry,
)
from prequantum.groupoid import (
    Morphism,
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
from prequantum.homotopy_algebra import FreeAbelian
from prequantum.periods import ExactReal, generate
from prequantum.scenarios import load_scenario


@pytest.fixture(scope="module")
def torus():
    return load_scenario("torus-unit", grid=(64, 64))


@pytest.fixture(scope="module")
def magnetic():
    return load_scenario("punctured-plane-magnetic")


def polyline(space, pts, per=16):
    pts = np.asarray(pts, float)
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        w = (np.arange(1, per + 1) / per)[:, None]
        out.extend(a + (b - a) * w)
    return PathSample(space, np.array(out))


def test_contractible_ccw_loop_has_area_phase(torus):
    sq = polyline(torus.space, [[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5], [0, 0]])
    assert global_psi(torus, sq) == torus.element(0.25)
    assert global_psi(torus, reverse(sq)) == torus.element(-0.25)


def test_band_phase_follows_sign_convention(torus):
    # the band swept from t -> (t, 0) to t -> (t, 0.25) has action -1/4
    band = polyline(torus.space, [[0, 0.25], [1, 0.25]])
    assert global_psi(torus, band).canonical().rep == ExactReal.rational(torus.basis, "3/4")


def test_chasles_smooth_bump(torus):
    sp = torus.space
    straight = polyline(sp, [[0, 0], [1.0, 0.0]], per=32)
    t = np.linspace(0, 1, 257)
    bump = PathSample(sp, np.stack([t, 0.3 * np.sin(np.pi * t)], axis=-1))
    # sampled paths are polylines, so the oracle is the trapezoid (shoelace) area
    area = float(np.sum(np.diff(t) * 0.5 * (bump.points[1:, 1] + bump.points[:-1, 1])))
    assert abs(area - 0.6 / math.pi) < 1e-5
    assert chasles_phi(torus, straight, bump).distance(area) < 1e-6
    assert chasles_phi(torus, bump, straight).distance(-area) < 1e-6


def test_chasles_bump_exact_value(torus):
    sp = torus.space
    up = polyline(sp, [[0, 0], [0.5, 0.4], [1, 0]])
    straight = polyline(sp, [[0, 0], [1, 0]], per=32)
    assert chasles_phi(torus, straight, up) == torus.to_omega(ExactReal.rational(torus.basis, "1/5"))


def test_chasles_needs_common_endpoints(torus):
    a = polyline(torus.space, [[0, 0], [0.5, 0.5]])
    b = polyline(torus.space, [[0, 0], [0.5, 0.25]])
    with pytest.raises(EndpointMismatch):
        chasles_phi(torus, a, b)


def test_class_of_needs_marked_points(torus):
    with pytest.raises(UnmarkedEndpoint):
        class_of(torus, polyline(torus.space, [[0, 0], [0.1, 0.1]]))


def test_groupoid_operations(torus):
    x1, x2 = torus.marked["x1"], torus.marked["x2"]
    g = polyline(torus.space, [torus.x0, x1])
    h = polyline(torus.space, [x1, x2])
    m, n = class_of(torus, g), class_of(torus, h)
    assert (m.src, m.tgt) == ("x0", "x1")
    assert compose(m, n).phase.distance(class_of(torus, concat(g, h)).phase) < 1e-9
    assert compose(m, inverse(m)) == identity_at(torus, "x0")
    assert compose(identity_at(torus, "x0"), m) == m
    with pytest.raises(EndpointMismatch):
        compose(n, m)


def test_isotropy_probe_hits_targets(torus):
    targets = [torus.to_omega(ExactReal.rational(torus.basis, f"{k}/10")) for k in range(10)]
    for t, loop, phase in isotropy_probe(torus, "x1", targets):
        assert phase == t
        assert loop.closed


def test_magnetic_isotropy_and_radii(magnetic):
    for t, _, phase in isotropy_probe(magnetic, "x0", [0.5, -1.2, 3.0]):
        assert phase.distance(t) < 1e-6
    base = magnetic.family.loop(FreeAbelian(1).element((1,)))
    ref = magnetic.references["x2"]
    big = concat(concat(ref, PathSample(magnetic.space, base.points * 2.0)), reverse(ref))
    p1 = class_of(magnetic, base).phase
    p2 = class_of(magnetic, big).phase
    assert abs(p2.value - p1.value - 2 * math.pi * math.log(2)) < 1e-5
    assert p1 != p2


def test_magnetic_holonomy_is_continuum(magnetic):
    hol = holonomy_group(magnetic)
    assert hol.kind == "continuum"
    assert magnetic.P_omega.is_trivial


def test_flat_twists():
    ab = load_scenario("aharonov-bohm")
    G = ab.presentation.group
    for n in range(-3, 4):
        m = flat_class_of(ab, ab.twist, ab.family.loop(G.element((n,))))
        assert m.phase.rep == ExactReal.rational(ab.basis, "1/2").scale(n)
    assert holonomy_group(ab).group == generate([ExactReal.rational(ab.basis, "1/2")])
    with pytest.raises(UnreachablePhase):
        isotropy_probe(ab, "x0", [0.3])
    two = load_scenario("two-holes-flat")
    assert holonomy_group(two).group == generate([ExactReal.rational(two.basis, "1/6")])


def test_symmetries(torus, magnetic):
    x1, x2 = torus.marked["x1"], torus.marked["x2"]
    a = polyline(torus.space, [x1, x2])
    b = polyline(torus.space, [x1, [0.6, 0.6], x2])
    base = chasles_phi(torus, a, b)
    s = Symmetry("translation", (0.37, -0.81))
    assert chasles_phi(torus, pushforward_symmetry(torus, s, a), pushforward_symmetry(torus, s, b)).distance(base) < 1e-9
    r = Symmetry("rotation", (1.1,))
    y = magnetic.marked["x2"]
    c = connector(magnetic.space, y, magnetic.marked["x3"])
    d = polyline(magnetic.space, [y, [1.5, 1.5], magnetic.marked["x3"]])
    v = chasles_phi(magnetic, c, d)
    assert chasles_phi(magnetic, pushforward_symmetry(magnetic, r, c),
                       pushforward_symmetry(magnetic, r, d)).distance(v) < 1e-6
    with pytest.raises(UnsupportedSymmetry):
        pushforward_symmetry(torus, Symmetry("rotation", (0.3,)), a)


def test_characters(torus, magnetic):
    chi = character(torus.P_omega, 1)
    m = Morphism("x0", "x0", torus.element(0.25))
    assert multiplicative_wavefunction(torus, chi, m) == pytest.approx(1j)
    with pytest.raises(IncompatibleCharacter):
        character(torus.P_omega, 0.5)
    dense = load_scenario("s2xs2-irrational", grid=(128, 128))
    with pytest.raises(IncompatibleCharacter):
        character(dense.P_omega, 1)
    chi0 = character(magnetic.P_omega, 2.0)
    mm = Morphism("x0", "x0", magnetic.element(0.5))
    assert multiplicative_wavefunction(magnetic, chi0, mm) == pytest.approx(cmath.exp(1j))
    with pytest.raises(IncompatibleCharacter):
        multiplicative_wavefunction(magnetic, chi, mm)
