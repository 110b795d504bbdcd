import math

import mpmath
import pytest

from szego_lab.errors import (NearPole, NonSzegoWeight, OutOfRegion, OutsideValidatedAnnulus, PathsDisagree,
                              PoleOnGrid, PoleProximity, NoExponentialDecay)
from szego_lab.numerics import PowerSeries, Prec, circle_samples
from szego_lab.opuc import Explicit, ExponentialModel, ExponentialSequence, phi_values, zero_sequence
from szego_lab.szego import (SzegoData, Weight, dinv_series, eval_D_from_weight, eval_r, predictor_phi,
                             predictor_phistar, q3_poles, q3_taylor, q3_term, r_closed_form_single_moment,
                             r_minus_S_laurent, S_series)
from szego_lab.analysis import analyticity_radius, radius_or_cutoff
from szego_lab.numerics import fit_decay_rate


def model_sm(p):
    return ExponentialModel.from_pairs([(-0.75, 2)], prec=p)


# -- D from the weight -------------------------------------------------------------

def test_D_constant_weight(p256):
    with p256.work():
        assert abs(eval_D_from_weight(Weight.constant(), 0.3, prec=p256) - 1) < 1e-60


def test_D_single_moment(p256):
    w = Weight.single_moment(0.8)
    with p256.work():
        s = mpmath.sqrt(mpmath.mpf("0.8"))
        assert abs(eval_D_from_weight(w, 0, prec=p256) - s) < 1e-40
        assert abs(eval_D_from_weight(w, 0.5, prec=p256) - s * mpmath.mpf("0.75")) < 1e-40


def test_D_errors(p256):
    with pytest.raises(NonSzegoWeight):
        eval_D_from_weight(Weight(lambda t: 1 - mpmath.cos(t), name="zero at 0"), 0.1, M=64, prec=p256)
    with p256.work():
        z = 1 - mpmath.mpf(10) ** -50
    with pytest.raises(PoleOnGrid):
        eval_D_from_weight(Weight.single_moment(0.8), z, M=64, prec=p256)
    with pytest.raises(ValueError):
        eval_D_from_weight(Weight.single_moment(0.8), 1.5, prec=p256)


def test_D_radial_boundary_values(p256):
    # |D(0.999 e^{it})|^2 approaches w(t) within 1%
    for w in (Weight.single_moment(0.8), Weight.rogers_szego(0.25)):
        for t in (0.0, 1.0, 2.5):
            with p256.work():
                z = mpmath.mpf("0.999") * mpmath.expj(t)
            d = eval_D_from_weight(w, z, M=2 ** 15, prec=p256)
            with p256.work():
                assert abs(abs(d) ** 2 / w(t) - 1) < 0.01


# -- Taylor data ----------------------------------------------------------------------

def test_dinv_trivial(p256):
    s = dinv_series(zero_sequence(), 10, p256)
    assert s.coeffs[0] == 1 and all(c == 0 for c in s.coeffs[1:])


def test_dinv_single_moment_geometric(sd_sm, p256):
    with p256.work():
        assert all(abs(sd_sm.dinv[n] - mpmath.mpf(2) ** -n) <= 10 * sd_sm.dinv.floor for n in range(191))
        assert abs(sd_sm.D0 - mpmath.sqrt(mpmath.mpf("0.8"))) < 1e-60


def test_dinv_rogers_szego_product(sd_rs, p256):
    # Taylor coefficients of prod_j (1 + q^(j+1/2) z)^-1, truncated product oracle
    with p256.work():
        coeffs = [mpmath.mpf(1)] + [mpmath.mpf(0)] * 40
        for j in range(200):
            t = mpmath.mpf("0.25") ** (j + mpmath.mpf(1) / 2)
            # multiply by 1/(1 + t z) = sum (-t)^k z^k
            for n in range(1, 41):
                coeffs[n] += -t * coeffs[n - 1]
        assert max(abs(coeffs[n] - sd_rs.dinv[n]) for n in range(41)) < 1e-60


def test_dinv_no_decay_error(p256):
    slow = ExponentialSequence(ExponentialModel.from_pairs([(0.5, 1.0000001)], prec=p256))
    with pytest.raises(NoExponentialDecay):
        dinv_series(slow, 50, p256)
    flat = ExponentialSequence(ExponentialModel(), tail=lambda n: 0.5)
    with pytest.raises(NoExponentialDecay):
        dinv_series(flat, 50, p256)


def test_S_series_examples(rs, p256):
    assert S_series(zero_sequence(), 5, p256).coeffs == (1, 0, 0, 0, 0, 0)
    s = S_series(rs, 20, p256)
    with p256.work():
        assert all(abs(s[n] - (-mpmath.sqrt(mpmath.mpf("0.25"))) ** n) < 1e-60 for n in range(21))


def test_szego_data_invariants(sd_rs, sd_sm):
    for sd in (sd_rs, sd_sm):
        assert sd.dinv[0] == 1 and sd.S[0] == 1 and sd.D0 > 0


# -- r and r - S ----------------------------------------------------------------------------

def test_eval_r_examples(sd_sm, p256):
    with p256.work():
        # dinv is truncated at N = 200, so |z| = 1.2 carries an error near 0.6^200
        assert abs(eval_r(sd_sm, 1.2) - mpmath.mpf(35) / 24) < 1e-40
        z = mpmath.mpc("1.1", "0.5")
        assert abs(eval_r(sd_sm, z) - r_closed_form_single_moment(z)) < 1e-30
    sd0 = SzegoData.from_sequence(zero_sequence(), 20, p256)
    assert abs(eval_r(sd0, 3.7) - 1) < 1e-60
    with pytest.raises(OutsideValidatedAnnulus):
        eval_r(sd_sm, 0.9)
    with pytest.raises(OutsideValidatedAnnulus):
        eval_r(sd_sm, 2.5)


def test_eval_r_zero_and_near_pole(p256):
    # dinv = 1 - 0.5 z: r vanishes at 2 and has its pole at 1/2, inside the disk
    sd = SzegoData.from_sequence(Explicit.from_values([0.5], p256), 10, p256)
    assert eval_r(sd, 2) == 0
    # alpha close to 1 puts the zero of dinv just outside the circle, so the
    # denominator conj(dinv(1/conj z)) is tiny right next to |z| = 1
    with p256.work():
        a = 1 - mpmath.mpf(10) ** -40
        z = 1 + mpmath.mpf(10) ** -38
    sd = SzegoData.from_sequence(Explicit.from_values([a], p256), 10, p256)
    with pytest.raises(NearPole):
        eval_r(sd, z)


def test_r_minus_S_trivial(p256):
    sd = SzegoData.from_sequence(zero_sequence(), 30, p256)
    sl = r_minus_S_laurent(sd, 1.5)
    assert all(abs(c) <= sl.floor for c in sl.coeffs)
    assert radius_or_cutoff(sl)[0] is None


@pytest.mark.parametrize("which", ["sd_sm", "sd_rs"])
def test_r_minus_S_rate(which, request):
    sd = request.getfixturevalue(which)
    sl = r_minus_S_laurent(sd, 1.5)
    assert sl.meta["path_agreement"] <= 1
    assert abs(analyticity_radius(sl).rate - 0.125) <= 0.05 * 0.125


def test_r_minus_S_sample_path_matches_closed_form(sd_sm, p256):
    sl = r_minus_S_laurent(sd_sm, 1.5, method="samples")
    s = sd_sm.S
    f = lambda z: r_closed_form_single_moment(z) - s(z)
    from szego_lab.numerics import laurent_from_samples
    ref = laurent_from_samples(circle_samples(f, 1.5, sl.meta["M"], p256), 1.5, p256)
    for n in range(-20, 21):
        assert abs(sl[n] - ref[n]) <= 64 * sl.floor_at(n) + 1e-60


def test_r_minus_S_rejects_bad_radius(sd_sm):
    with pytest.raises(OutsideValidatedAnnulus):
        r_minus_S_laurent(sd_sm, 2.0)
    with pytest.raises(OutsideValidatedAnnulus):
        r_minus_S_laurent(sd_sm, 1.0)


def test_q3_correction_improves_radius(sd_sm, p256):
    sl = r_minus_S_laurent(sd_sm, 1.5, correction=model_sm(p256))
    est, _ = radius_or_cutoff(sl)
    assert est is None or est.rate <= 1 / 30


# -- q3 ----------------------------------------------------------------------------------

def test_q3_empty_model(p256):
    assert q3_term(ExponentialModel(), 3) == 0


def test_q3_printed_form_hand_value(p256):
    # -(c^3) z/(z - 2) (1 - 1/4)^-1 * 2 * (1 - z/8)^-1 at z = 4, c = -0.75
    with p256.work():
        hand = -(mpmath.mpf("-0.75") ** 3) * 4 / (4 - 2) / (1 - mpmath.mpf(1) / 4) * 2 / (1 - mpmath.mpf(4) / 8)
        assert abs(hand - mpmath.mpf("4.5")) < 1e-60
        assert abs(q3_term(model_sm(p256), 4, form="printed") - hand) < 1e-60


def test_q3_corrected_value(p256):
    # corrected term = -(printed)/p with p = 8
    with p256.work():
        assert abs(q3_term(model_sm(p256), 4) - mpmath.mpf("-0.5625")) < 1e-60


def test_q3_poles_and_proximity(p256):
    poles = q3_poles(model_sm(p256))
    assert poles["inner"] == [2] and poles["outer"] == [8]
    with pytest.raises(PoleProximity):
        q3_term(model_sm(p256), 8.001)
    with pytest.raises(PoleProximity):
        q3_term(model_sm(p256), 2)


def test_q3_taylor_matches_values(p256):
    m = ExponentialModel.from_pairs([(-0.75, 2), (0.2, (0, 3))], prec=p256)
    coeffs = q3_taylor(m, 120, part="full", prec=p256)
    with p256.work():
        z = mpmath.mpc("0.7", "-0.4")
        assert abs(PowerSeries(tuple(coeffs), p256)(z) - q3_term(m, z)) < 1e-40
        outer = q3_taylor(m, 200, part="outer", prec=p256)
        assert abs(PowerSeries(tuple(outer), p256)(z) - q3_term(m, z, part="outer")) < 1e-40


# -- predictors ---------------------------------------------------------------------------

def test_predictors_empty_model(p256):
    sd = SzegoData.from_sequence(zero_sequence(), 20, p256)
    empty = ExponentialModel()
    assert predictor_phi(empty, sd, 5, 0.1) == 0 and predictor_phistar(empty, sd, 5, 0.1) == 0
    phis, stars = phi_values(zero_sequence(), 0.1, 10, p256)
    assert stars[10] - sd.dinv(0.1) == 0


def test_predictor_region(sd_sm, p256):
    with pytest.raises(OutOfRegion):
        predictor_phi(model_sm(p256), sd_sm, 10, 0.3)


@pytest.mark.parametrize("which,z", [("sm", 0.05), ("rs", 0.1)])
def test_predictor_phi_rate(which, z, request, p256):
    seq = request.getfixturevalue(which)
    sd = request.getfixturevalue("sd_" + which)
    m = model_sm(p256) if which == "sm" else ExponentialModel.from_pairs([(-1, -2)], prec=p256)
    phis, _ = phi_values(seq, z, 60, p256)
    with p256.work():
        E = [phis[n] - predictor_phi(m, sd, n, z) for n in range(61)]
    assert fit_decay_rate(E, (10, 60)).rate <= max(0.125, z) + 0.02


def test_predictor_phistar_rate(sm, sd_sm, p256):
    z = 0.05
    m = model_sm(p256)
    _, stars = phi_values(sm, z, 50, p256)
    with p256.work():
        dz = sd_sm.dinv(z)
        Et = [stars[n] - dz - predictor_phistar(m, sd_sm, n, z) for n in range(51)]
        pred = [abs(predictor_phistar(m, sd_sm, n, z)) for n in range(51)]
    assert fit_decay_rate(Et, (10, 50)).rate <= 0.5 * 0.125 + 0.02
    # the prediction itself decays like (conj(mu) mu)^-n = 1/4
    assert abs(fit_decay_rate(pred, (10, 50)).rate - 0.25) < 1e-6


def _vitali_rate(sm, sd_sm, p256):
    from szego_lab.numerics import eval_on_circle
    from szego_lab.opuc import phi_upto
    pairs = phi_upto(sm, 60, p256)
    ref = eval_on_circle(sd_sm.dinv.coeffs, 1.6, 64, p256)
    errs = []
    for p in pairs:
        vals = eval_on_circle(p.phistar, 1.6, 64, p256)
        with p256.work():
            errs.append(max(abs(a - b) for a, b in zip(vals, ref)))
    return fit_decay_rate(errs, (10, 60)).rate


def test_vitali_region_converges_at_radius_ratio(sm, sd_sm, p256):
    # sup over |z| = 1.6 of |Phi_n^* - dinv| decays like (1.6/2)^n
    assert abs(_vitali_rate(sm, sd_sm, p256) - 0.8) < 0.02


@pytest.mark.xfail(strict=True, reason="stated bound (1.6/2)(1/2) + 0.02 is below the observed rate 1.6/2")
def test_vitali_region_stated_bound(sm, sd_sm, p256):
    assert _vitali_rate(sm, sd_sm, p256) <= 0.8 * 0.5 + 0.02
