import cmath
import itertools
import json
import random

import pytest

from szego_lab.errors import NotGenerated
from szego_lab.gsets import ExteriorSet, g3, g3_membership, g_full, g_layer, layer_count, minimal_generators


def S(points, rmax=100, eps=1e-9):
    return ExteriorSet.build(points, rmax, eps)


def values(T):
    return sorted(T.points, key=lambda z: (round(abs(z), 9), round(cmath.phase(z), 9)))


def brute_force(points, rmax):
    """Every ordered tuple of each odd length, no pruning."""
    out = []
    k = 1
    lo = min(abs(z) for z in points)
    while lo ** (2 * k - 1) < rmax:
        for plain in itertools.product(points, repeat=k):
            for barred in itertools.product(points, repeat=k - 1):
                z = 1
                for a in plain:
                    z *= a
                for b in barred:
                    z *= b.conjugate()
                if abs(z) < rmax:
                    out.append(z)
        k += 1
    return ExteriorSet.build(out, rmax)


# -- layers ---------------------------------------------------------------------

def test_layer_single_real():
    T = S([2])
    assert values(g_layer(T, 2)) == [8]
    assert values(g_layer(T, 3)) == [32]


def test_layer_imaginary():
    assert g_layer(S([2j]), 2).same_points(S([8j]))


def test_layer_two_points():
    assert g_layer(S([2, 3]), 2).same_points(S([8, 12, 18, 27]))


def test_layer_rejects_zero():
    with pytest.raises(ValueError):
        g_layer(S([2]), 0)


def test_layer_empty():
    assert len(g_layer(S([]), 3)) == 0


# -- full generated set ------------------------------------------------------------

def test_full_examples():
    assert g_full(S([2])).same_points(S([2, 8, 32]))
    assert g_full(S([-2])).same_points(S([-2, -8, -32]))
    assert g_full(S([2, 3], rmax=50)).same_points(S([2, 3, 8, 12, 18, 27, 32, 48], rmax=50))


def test_full_layer_count():
    assert layer_count(S([2])) == 3          # 2, 8, 32 < 100 <= 128
    assert layer_count(S([])) == 0


def test_g3_drops_first_layer():
    assert g3(S([2, 3], rmax=50)).same_points(S([8, 12, 18, 27, 32, 48], rmax=50))


def test_full_idempotent_random():
    rng = random.Random(11)
    for _ in range(30):
        pts = [rng.uniform(1.2, 4) * cmath.exp(1j * rng.uniform(-3.1, 3.1)) for _ in range(rng.randint(1, 4))]
        G = g_full(S(pts, rmax=40))
        assert g_full(G).same_points(G)


def test_full_conjugation_compatible():
    rng = random.Random(12)
    for _ in range(20):
        T = S([rng.uniform(1.2, 4) * cmath.exp(1j * rng.uniform(-3.1, 3.1)) for _ in range(3)], rmax=60)
        assert g_full(T.conj()).same_points(g_full(T).conj())


def test_full_matches_brute_force():
    rng = random.Random(13)
    for _ in range(30):
        rmax = rng.uniform(10, 100)
        pts = [rng.uniform(1.3, 5) * cmath.exp(1j * rng.uniform(-3.1, 3.1)) for _ in range(rng.randint(1, 3))]
        G = g_full(S(pts, rmax))
        assert G.same_points(brute_force(pts, rmax))
        assert all(1 < abs(z) < rmax for z in G)


# -- minimal generators --------------------------------------------------------------

def test_minimal_generators_examples():
    assert values(minimal_generators(S([2, 8, 32], rmax=40))) == [2]
    assert minimal_generators(g_full(S([2, 3], rmax=50))).same_points(S([2, 3], rmax=50))
    assert values(minimal_generators(S([-2, -8, -32], rmax=40))) == [-2]


def test_minimal_generators_conditions():
    rng = random.Random(14)
    for _ in range(20):
        T = S([rng.uniform(1.3, 4) * cmath.exp(1j * rng.uniform(-3.1, 3.1)) for _ in range(rng.randint(1, 3))], 50)
        Q = g_full(T)
        W = minimal_generators(Q)
        assert g_full(W).same_points(Q)
        assert not any(g3(W).contains(w) for w in W)


def test_minimal_generators_not_generated():
    with pytest.raises(NotGenerated):
        minimal_generators(S([2, 3], rmax=50))


# -- membership -------------------------------------------------------------------

def test_membership_examples():
    r = g3_membership(8, S([2]))
    assert r["count"] == 1 and r["factorizations"] == [(2, 2, 2)]
    assert g3_membership(12, S([2, 3]))["count"] == 2
    assert g3_membership(7, S([2, 3]))["count"] == 0


# -- set semantics ----------------------------------------------------------------------

def test_exterior_set_validation_and_merge():
    with pytest.raises(ValueError):
        ExteriorSet((0.5,), 10)
    with pytest.raises(ValueError):
        ExteriorSet((20,), 10)
    T = ExteriorSet((2, 2 + 1e-12, 3), 10)
    assert len(T) == 2 and T.merges == 1
    assert len(ExteriorSet.build([2, 50], 10)) == 1


def test_exterior_set_round_trip():
    T = g_full(S([2 + 1j, -1.5], rmax=30))
    data = json.loads(json.dumps(T.to_dict()))
    assert ExteriorSet.from_dict(data).same_points(T)
