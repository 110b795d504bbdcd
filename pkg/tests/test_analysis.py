import cmath
import math
import random

import mpmath
import pytest

from szego_lab.analysis import analyticity_radius, pade_poles, prony_fit, radius_or_cutoff, synthesize
from szego_lab.errors import AllSpurious, OrderAmbiguous, WindowBelowFloor
from szego_lab.numerics import LaurentSlice, PowerSeries
from szego_lab.opuc import ExponentialModel
from szego_lab.szego import S_series, dinv_series


def _terms_error(got, expected):
    got = sorted(got, key=lambda t: abs(t[1]))
    expected = sorted(expected, key=lambda t: abs(t[1]))
    assert len(got) == len(expected)
    return max(max(abs(a[0] - b[0]), abs(a[1] - b[1])) for a, b in zip(got, expected))


# -- Prony ----------------------------------------------------------------------------

def test_prony_single_exponential(p256):
    with p256.work():
        data = [mpmath.mpf("0.3") * mpmath.mpf(2) ** (-n - 1) for n in range(40)]
    fit = prony_fit(data, 3, prec=p256)
    assert len(fit.model) == 1
    with p256.work():
        assert _terms_error(fit.model.terms, [(mpmath.mpf("0.3"), 2)]) < 1e-60
        assert max(abs(d - fit.model.value(n)) for n, d in enumerate(data)) <= 10 * p256.floor_for(0.15)


def test_prony_rogers_szego(rs, p256):
    fit = prony_fit(rs.alphas(81, p256), 4, prec=p256)
    assert len(fit.model) == 1
    with p256.work():
        assert _terms_error(fit.model.terms, [(-1, -2)]) < 1e-60


def test_prony_single_moment(sm, p256):
    fit = prony_fit(sm.alphas(121, p256), 4, prec=p256)
    with p256.work():
        c1, mu1 = fit.model.terms[0]
        assert abs(c1 + 0.75) < 1e-8 and abs(mu1 - 2) < 1e-8
        # second term of the geometric expansion: (-(mu+ - mu-)/8, 8) with mu+ - mu- = 1.5
        c2, mu2 = fit.model.terms[1]
        assert abs(mu2 - 8) < 1e-6 and abs(c2 + mpmath.mpf("1.5") / 8) < 1e-6
    assert fit.residual_rate > float(fit.model.max_modulus)


def test_prony_synthesize_round_trip(p256):
    rng = random.Random(20240611)
    for _ in range(25):
        K = rng.randint(1, 4)
        while True:
            mods = sorted(rng.uniform(1.5, 8) for _ in range(K))
            if all(b / a > 1.05 for a, b in zip(mods, mods[1:])):
                break
        pairs = [(rng.uniform(0.1, 1) * cmath.exp(1j * rng.uniform(-3, 3)), m * cmath.exp(1j * rng.uniform(-3, 3)))
                 for m in mods]
        model = ExponentialModel.from_pairs(pairs, prec=p256)
        fit = prony_fit(synthesize(model, 80, p256), 4, start=0, prec=p256)
        with p256.work():
            assert _terms_error(fit.model.terms, model.terms) < 1e-20


def test_prony_zero_sequence(p256):
    fit = prony_fit([0] * 40, 2, prec=p256)
    assert len(fit.model) == 0 and math.isinf(fit.residual_rate)


def test_prony_order_ambiguous(p256):
    rng = random.Random(5)
    with p256.work():
        noise = [mpmath.mpf(rng.uniform(-1, 1)) for _ in range(40)]
    with pytest.raises(OrderAmbiguous):
        prony_fit(noise, 3, prec=p256)


def test_prony_short_input(p256):
    with pytest.raises(ValueError):
        prony_fit([1, 0.5, 0.25], 1, prec=p256)
    with pytest.raises(ValueError):
        prony_fit([0.5] * 40, 0, prec=p256)


# -- Padé -----------------------------------------------------------------------------

def test_pade_geometric_residue_convention(p256):
    with p256.work():
        s = PowerSeries(tuple(mpmath.mpf(2) ** -n for n in range(30)), p256)
    rep = pade_poles(s, 4)
    assert len(rep.poles) == 1
    z, res = rep.poles[0]
    with p256.work():
        assert abs(z - 2) < 1e-50 and abs(res + 2) < 1e-50


def test_pade_rogers_szego_S_series(rs, p256):
    rep = pade_poles(S_series(rs, 40, p256), 6)
    assert len(rep.poles) == 1
    with p256.work():
        assert abs(rep.poles[0][0] + 2) < 1e-40


def test_pade_single_moment_dinv(sm, p256):
    rep = pade_poles(dinv_series(sm, 60, p256), 6)
    assert len(rep.poles) == 1
    with p256.work():
        assert abs(rep.poles[0][0] - 2) < 1e-40


def test_pade_exact_rational(p256):
    # f = sum_k r_k / (1 - z/p_k) has Taylor coefficients sum_k r_k p_k^-n
    poles = [mpmath.mpc(1.5, 0.5), mpmath.mpc(-2, 1), mpmath.mpc(3), mpmath.mpc(0.2, -4)]
    weights = [1, -0.5, 0.75, 2]
    with p256.work():
        coeffs = tuple(mpmath.fsum(w * p ** -n for w, p in zip(weights, poles)) for n in range(40))
    rep = pade_poles(PowerSeries(coeffs, p256), 4)
    assert rep.spurious_rejected == 0 and rep.order == (4, 4)
    with p256.work():
        found = sorted(rep.locations, key=abs)
        for z, p in zip(found, sorted(poles, key=abs)):
            assert abs(z - p) < 1e-15
        for z, res in rep.poles:
            w = weights[min(range(4), key=lambda k: abs(poles[k] - z))]
            assert abs(res + w * z) < 1e-15


def test_pade_overfit_rejects_spurious(p256):
    with p256.work():
        s = PowerSeries(tuple(mpmath.mpf(2) ** -n + mpmath.mpf(3) ** -n for n in range(40)), p256)
    rep = pade_poles(s, 6)
    with p256.work():
        assert sorted(float(abs(z)) for z in rep.locations) == pytest.approx([2, 3], abs=1e-20)
    assert rep.order[0] >= 2


def test_pade_all_spurious(p256):
    # (1 - z/2)/(1 - b z) with 1/b = 2(1 + 1e-30): a pole sitting on a zero of the numerator
    with p256.work():
        b = 1 / (2 * (1 + mpmath.mpf(10) ** -30))
        coeffs = (mpmath.mpf(1),) + tuple(b ** n - b ** (n - 1) / 2 for n in range(1, 12))
    with pytest.raises(AllSpurious):
        pade_poles(PowerSeries(coeffs, p256), 1)


def test_pade_needs_length(p256):
    with pytest.raises(ValueError):
        pade_poles(PowerSeries((1, 0.5, 0.25), p256), 2)


def test_pade_matches_prony_on_rogers_szego(rs, p256):
    # S = 1 - sum alpha_{n} z^{n+1} with alpha_n = c mu^{-n-1}: poles at the Prony exponents
    fit = prony_fit(rs.alphas(81, p256), 4, prec=p256)
    rep = pade_poles(S_series(rs, 40, p256), 6)
    with p256.work():
        for z in rep.locations:
            assert min(abs(z - mu) for mu in fit.model.exponents) <= 1e-6 * abs(z)


def test_pade_matches_prony_on_single_moment(sm, p256):
    fit = prony_fit(sm.alphas(121, p256), 4, prec=p256)
    rep = pade_poles(S_series(sm, 120, p256), 8)
    with p256.work():
        for mu in fit.model.exponents[:2]:
            assert min(abs(z - mu) for z in rep.locations) <= 1e-6 * abs(mu)


# -- analyticity radius ----------------------------------------------------------------

def test_analyticity_radius_geometric(p256):
    with p256.work():
        sl = LaurentSlice(tuple(mpmath.mpf(8) ** -abs(n) for n in range(-20, 61)), -20, p256)
    est = analyticity_radius(sl)
    assert abs(est.radius - 8) < 1e-6


def test_analyticity_radius_tail_extension(p256):
    with p256.work():
        short = LaurentSlice(tuple(mpmath.mpf(5) ** -n * (1 + mpmath.mpf(2) ** -n) for n in range(0, 40)), 0, p256)
        longer = LaurentSlice(tuple(mpmath.mpf(5) ** -n * (1 + mpmath.mpf(2) ** -n) for n in range(0, 60)), 0, p256)
    a = analyticity_radius(short)
    b = analyticity_radius(longer)
    assert abs(a.rate - b.rate) <= 2 * max(a.stderr, b.stderr) + 1e-12


def test_analyticity_radius_below_floor(p256):
    sl = LaurentSlice((1,) + (0,) * 30, 0, p256)
    with pytest.raises(WindowBelowFloor):
        analyticity_radius(sl)
    est, note = radius_or_cutoff(sl)
    assert est is None and "cutoff" in note
