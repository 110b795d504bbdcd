"""Szegő function data: D, d^-1, S, r and the correction/predictor formulas.

Notation used below:

* ``dinv`` is d(z)^-1 = D(0)/D(z), the limit of Phi_n^*.
* ``d`` is its reciprocal series D(z)/D(0).
* r(z) = conj(D(1/conj z))/D(z) = dinv(z)/conj(dinv(1/conj z)).
"""
import functools
import math
from dataclasses import dataclass, field

import mpmath

from .errors import (NearPole, NoExponentialDecay, NonSzegoWeight, OutOfRegion,
                     OutsideValidatedAnnulus, PathsDisagree, PoleOnGrid, PoleProximity,
                     WindowBelowFloor, WindowTooShort)
from .numerics import (LaurentSlice, PowerSeries, Prec, _roots_of_unity, as_prec,
                       eval_on_circle, fit_decay_rate, horner, laurent_from_samples,
                       max_abs, series_recip, to_mpc, to_mpf)
from .opuc import Explicit, ExponentialModel, final_pair

DEFAULT_DEGREE = 200
POLE_MARGIN = 1e-3


# -- weights ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Weight:
    """A weight w(theta) >= 0 on the circle.

    ``sampler(M, prec)`` may supply the M equispaced samples faster than
    pointwise calls.  ``reciprocal_poly = (scale, coeffs)`` marks a rational
    weight w = scale/|P(e^{i theta})|^2 with P zero-free on the closed disk.
    """
    func: object
    name: str = "custom"
    smoothness: str = "analytic"
    sampler: object = None
    reciprocal_poly: object = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, theta):
        return self.func(theta)

    def samples(self, M, prec=None):
        prec = as_prec(prec)
        key = (M, prec.bits)
        if key not in self._cache:
            with prec.work():
                if self.sampler is not None:
                    vals = [mpmath.mpf(v) for v in self.sampler(M, prec)]
                else:
                    step = 2 * mpmath.pi / M
                    vals = [mpmath.mpf(self.func(k * step)) for k in range(M)]
            self._cache[key] = tuple(vals)
        return self._cache[key]

    def log_samples(self, M, prec=None):
        prec = as_prec(prec)
        key = ("log", M, prec.bits)
        if key not in self._cache:
            vals = self.samples(M, prec)
            with prec.work():
                bad = [k for k, v in enumerate(vals) if not v > 0]
                if bad:
                    raise NonSzegoWeight("weight is not positive at node %d" % bad[0], k=bad[0])
                self._cache[key] = tuple(mpmath.log(v) for v in vals)
        return self._cache[key]

    def log_mean(self, M=4096, prec=None):
        """Trapezoid value of the integral of log w d theta/2pi."""
        prec = as_prec(prec)
        logs = self.log_samples(M, prec)
        with prec.work():
            return mpmath.fsum(logs) / M

    # constructors

    @classmethod
    def constant(cls, value=1):
        v = mpmath.mpf(value)
        return cls(lambda theta: +v, name="constant", sampler=lambda M, prec: [+v] * M)

    @classmethod
    def single_moment(cls, a=0.8):
        """w = 1 - a cos(theta)."""
        def w(theta):
            return 1 - to_mpf(a) * mpmath.cos(theta)

        def sampler(M, prec):
            roots = _roots_of_unity(M, prec.bits)
            av = to_mpf(a)
            return [1 - av * r.real for r in roots]
        return cls(w, name="single-moment(a=%s)" % a, sampler=sampler)

    @classmethod
    def rogers_szego(cls, q=0.25):
        """|D|^2 with D(z) = prod_j (1 - q^(j+1))^(1/2) (1 + q^(j+1/2) z)."""
        def factors():
            qv = to_mpf(q)
            out, j = [], 0
            eps = mpmath.eps
            while True:
                t = qv ** (j + mpmath.mpf(1) / 2)
                if t < eps / 4:
                    break
                out.append((1 - qv ** (j + 1), t))
                j += 1
            return out

        def w(theta):
            z = mpmath.expj(theta)
            return mpmath.fprod(s * abs(1 + t * z) ** 2 for s, t in factors())

        def sampler(M, prec):
            # |1 + t e^{i theta}|^2 = 1 + t^2 + 2t cos(theta)
            fs = factors()
            const = mpmath.fprod(s for s, _ in fs)
            pairs = [(1 + t * t, 2 * t) for _, t in fs]
            out = []
            for r in _roots_of_unity(M, prec.bits):
                c = r.real
                v = const
                for a, b in pairs:
                    v *= a + b * c
                out.append(v)
            return out
        return cls(w, name="rogers-szego(q=%s)" % q, sampler=sampler)

    @classmethod
    def from_reciprocal_poly(cls, scale, coeffs, name="rational"):
        """w = scale/|P(e^{i theta})|^2."""
        coeffs = tuple(coeffs)

        def w(theta):
            return scale / abs(horner(coeffs, mpmath.expj(theta))) ** 2

        def sampler(M, prec):
            vals = eval_on_circle(coeffs, 1, M, prec)
            return [scale / abs(v) ** 2 for v in vals]
        return cls(w, name=name, sampler=sampler, reciprocal_poly=(scale, coeffs))

    @classmethod
    def from_szego_data(cls, sd):
        """|D(e^{i theta})|^2 = D0^2/|dinv(e^{i theta})|^2, dinv from its series."""
        if sd.dinv_is_polynomial:
            return cls.from_reciprocal_poly(sd.D0 ** 2, sd.dinv.coeffs, name="bernstein-szego")
        coeffs, scale = sd.dinv.coeffs, sd.D0 ** 2

        def w(theta):
            with sd.prec.work():
                return scale / abs(horner(coeffs, mpmath.expj(theta))) ** 2

        def sampler(M, prec):
            vals = eval_on_circle(coeffs, 1, M, sd.prec)
            return [scale / abs(v) ** 2 for v in vals]
        return cls(w, name="szego-data", sampler=sampler)

    @classmethod
    def from_sequence(cls, seq, N=DEFAULT_DEGREE, prec=None):
        return cls.from_szego_data(SzegoData.from_sequence(seq, N, prec))


def eval_D_from_weight(w, z, M=None, prec=None):
    """Szegő function D(z), |z| < 1, by trapezoid quadrature of the Herglotz integral.

    With ``M=None`` the node count starts at 256 and doubles until two
    successive values agree to the floor (capped at 2^16).
    """
    prec = as_prec(prec)
    with prec.work():
        z = to_mpc(z)
        if not abs(z) < 1:
            raise ValueError("D is evaluated inside the unit disk only")
    if M is not None:
        return _herglotz(w, z, M, prec)
    M, prev = 256, None
    while True:
        val = _herglotz(w, z, M, prec)
        if prev is not None:
            with prec.work():
                if abs(val - prev) <= prec.floor_for(abs(val)) * 64:
                    return val
        if M >= 2 ** 16:
            return val
        prev, M = val, 2 * M


def _herglotz(w, z, M, prec):
    if M < 1 or M & (M - 1):
        raise ValueError("M must be a power of two")
    logs = w.log_samples(M, prec)
    roots = _roots_of_unity(M, prec.bits)
    with prec.work():
        tiny = mpmath.ldexp(1, -prec.bits // 2)
        acc = []
        for k in range(M):
            diff = roots[k] - z
            if abs(diff) < tiny:
                raise PoleOnGrid("z collides with quadrature node %d" % k, k=k)
            acc.append((roots[k] + z) / diff)
        integral = mpmath.fdot(acc, logs) / (2 * M)
        if not mpmath.isfinite(integral.real) or integral.real < -mpmath.mpf(10) ** 8:
            raise NonSzegoWeight("log w integrates to -infinity within tolerance")
        return mpmath.exp(integral)


# -- Taylor data -----------------------------------------------------------------

def _decay_rate(seq, prec, probe=96):
    """Geometric decay rate of |alpha_n|: known radius if the family has one."""
    R = seq.known_radius(prec)
    if R is not None:
        if mpmath.isinf(R):
            return 0.0
        rate = float(1 / R)
        if rate >= 0.999:
            raise NoExponentialDecay("decay rate %.6f is not below 1" % rate, rate=rate)
        return rate
    alphas = seq.alphas(probe, prec)
    mags = [abs(a) for a in alphas]
    floor = prec.floor_for(max(mags, default=0))
    try:
        est = fit_decay_rate(mags, floor=floor)
    except (WindowBelowFloor, WindowTooShort):
        if all(m <= 10 * floor for m in mags[5:]):
            return 0.0
        raise NoExponentialDecay("|alpha_n| shows no geometric decay over the probe window")
    if est.rate >= 0.999:
        raise NoExponentialDecay("fitted decay rate %.6f is not below 1" % est.rate, rate=est.rate)
    return est.rate


def recursion_depth(seq, N, prec=None, max_depth=None):
    """(J, tail_bound): recursion length so that Phi_J^* matches dinv through degree N."""
    prec = as_prec(prec)
    if isinstance(seq, Explicit):
        return max(N, seq.length), 0.0
    rate = _decay_rate(seq, prec)
    if rate == 0.0:
        return N, 0.0
    # coefficient n of Phi_J^* - dinv is O(rate^(2J - n))
    need = prec.bits * math.log(2) / -math.log(rate)
    J = max(N, int(math.ceil((N + need) / 2)) + 8)
    cap = max_depth or max(4 * N, 2000)
    J = min(J, cap)
    return J, rate ** (2 * J - N)


def dinv_series(seq, N=DEFAULT_DEGREE, prec=None):
    """Taylor coefficients e_0..e_N of d(z)^-1 from the Szegő recursion."""
    return _dinv_and_norm(seq, N, as_prec(prec))[0]


@functools.lru_cache(maxsize=32)
def _dinv_and_norm(seq, N, prec):
    J, tail = recursion_depth(seq, N, prec)
    alphas = seq.alphas(J, prec)
    pair = final_pair(alphas, prec)
    with prec.work():
        coeffs = list(pair.phistar[:N + 1])
        coeffs += [mpmath.mpc(0)] * (N + 1 - len(coeffs))
        D0 = 1 / pair.kappa
    meta = {"recursion_depth": J, "tail_bound": tail}
    return PowerSeries(tuple(coeffs), prec, None, meta), D0


def S_series(seq, N=DEFAULT_DEGREE, prec=None):
    """S(z) = -sum_{n>=0} alpha_{n-1} z^n, so coefficient 0 is +1."""
    prec = as_prec(prec)
    with prec.work():
        coeffs = [-seq.alpha(n - 1, prec) for n in range(N + 1)]
    return PowerSeries(tuple(coeffs), prec)


@dataclass(frozen=True, eq=False)
class SzegoData:
    """Taylor data of d^-1 and S with the normalization D0 = D(0)."""
    dinv: PowerSeries
    D0: object
    S: PowerSeries
    prec: Prec
    seq: object = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_sequence(cls, seq, N=DEFAULT_DEGREE, prec=None):
        return _szego_data(seq, N, as_prec(prec))

    @functools.cached_property
    def d(self):
        """Taylor coefficients of d(z) = D(z)/D(0)."""
        return series_recip(self.dinv)

    @property
    def N(self):
        return self.dinv.degree

    @property
    def dinv_is_polynomial(self):
        return isinstance(self.seq, Explicit)

    @functools.cached_property
    def dinv_radius(self):
        """Estimated radius of convergence of the dinv series (inf for polynomials)."""
        if self.dinv_is_polynomial:
            return math.inf
        mags = [abs(c) for c in self.dinv.coeffs]
        try:
            return fit_decay_rate(mags, floor=self.dinv.floor).radius
        except (WindowBelowFloor, WindowTooShort):
            return math.inf

    @functools.cached_property
    def alpha_radius(self):
        """R with |alpha_n| ~ R^-n."""
        if self.seq is None:
            return math.inf
        rate = _decay_rate(self.seq, self.prec)
        return math.inf if rate == 0 else 1 / rate

    def validated_radius(self, tol=None):
        """Largest |z| at which the truncated dinv remainder stays below tol (default sqrt(floor))."""
        R = self.dinv_radius
        if math.isinf(R):
            return math.inf
        with self.prec.work():
            tol = mpmath.sqrt(self.dinv.floor) if tol is None else mpmath.mpf(tol)
            scale = max_abs(self.dinv.coeffs[-8:]) * mpmath.mpf(R) ** self.N
            if scale <= tol:
                return R
            return float(R * (tol / scale) ** (mpmath.mpf(1) / self.N))


@functools.lru_cache(maxsize=32)
def _szego_data(seq, N, prec):
    dinv, D0 = _dinv_and_norm(seq, N, prec)
    return SzegoData(dinv, D0, S_series(seq, N, prec), prec, seq, dict(dinv.meta))


def eval_r(sd, z, tol=None):
    """r(z) = dinv(z)/conj(dinv(1/conj z)) on the validated annulus."""
    with sd.prec.work():
        z = to_mpc(z)
        rv = sd.validated_radius(tol)
        if not 1 < abs(z) < rv:
            raise OutsideValidatedAnnulus("|z| = %s is outside (1, %s)" % (mpmath.nstr(abs(z), 8), rv),
                                          modulus=float(abs(z)), outer=rv)
        num = horner(sd.dinv.coeffs, z)
        den = mpmath.conj(horner(sd.dinv.coeffs, 1 / mpmath.conj(z)))
        if abs(den) < mpmath.sqrt(sd.dinv.floor):
            raise NearPole("denominator of r vanishes near z", modulus=float(abs(den)))
        return num / den


def r_closed_form_single_moment(z, a=0.8):
    """(1 - mu_-/z)/(1 - mu_- z) for the weight 1 - a cos(theta)."""
    a = to_mpf(a)
    mm = (1 - mpmath.sqrt(1 - a * a)) / a
    z = to_mpc(z)
    return (1 - mm / z) / (1 - mm * z)


# -- Laurent data of r - S ---------------------------------------------------------

def _effective_length(series):
    """Index past which all coefficients are below the floor."""
    for k in range(len(series.coeffs) - 1, -1, -1):
        if abs(series.coeffs[k]) > series.floor:
            return k + 1
    return 1


def r_minus_S_convolution(sd, correction=None):
    """b_n = sum_k conj(d_k) e_{n+k} - S_n - q_n  (sampling-free path).

    Returns a LaurentSlice on n = -N..n_max where n_max leaves room for the
    d-series to have decayed below its floor.
    """
    N, prec = sd.N, sd.prec
    e, dd = sd.dinv.coeffs, sd.d.coeffs
    K = min(_effective_length(sd.d), N // 2)
    corr = correction_taylor(correction, N, prec) if correction is not None else None
    with prec.work():
        dconj = [mpmath.conj(x) for x in dd[:K]]
        out = []
        n_max = N - K + 1
        for n in range(-N, n_max + 1):
            k0 = max(0, -n)
            k1 = min(K, N - n + 1)
            b = mpmath.fdot(dconj[k0:k1], e[n + k0:n + k1]) if k1 > k0 else mpmath.mpc(0)
            if n >= 0:
                b -= sd.S.coeffs[n]
                if corr is not None:
                    b -= corr[n]
            out.append(b)
        scale = max(max_abs(e), max_abs(dd), mpmath.mpf(1))
        floor = prec.floor_for(scale) * 8
    meta = {"path": "convolution", "d_terms": K}
    return LaurentSlice(tuple(out), -N, prec, floor, meta)


def r_minus_S_samples(sd, rho, M, correction=None):
    """Samples of r - S (- q3 outer part) on |z| = rho, then an FFT extraction."""
    prec = sd.prec
    with prec.work():
        inv_rho = 1 / to_mpf(rho)
    A = eval_on_circle(sd.dinv.coeffs, rho, M, prec)
    B = eval_on_circle(sd.d.coeffs, inv_rho, M, prec)
    C = eval_on_circle(sd.S.coeffs, rho, M, prec)
    roots = _roots_of_unity(M, prec.bits)
    with prec.work():
        rho_v = to_mpf(rho)
        vals = [a * mpmath.conj(b) - c for a, b, c in zip(A, B, C)]
        if correction is not None:
            vals = [v - q3_term(correction, rho_v * w, part="outer", margin=0) for v, w in zip(vals, roots)]
    return laurent_from_samples(vals, rho, prec)


def r_minus_S_laurent(sd, rho, M=None, method="both", correction=None):
    """Laurent coefficients of r - S (optionally minus the outer part of q3) on |z| = rho.

    ``method`` is "convolution", "samples" or "both"; "both" cross-checks the
    two paths and returns the convolution coefficients.
    """
    prec = sd.prec
    rho = float(rho)
    if not rho > 1:
        raise OutsideValidatedAnnulus("rho must exceed 1", rho=rho)
    R = sd.dinv_radius
    if not math.isinf(R) and rho >= R * (1 - POLE_MARGIN):
        raise OutsideValidatedAnnulus("rho reaches the first singularity of dinv", rho=rho, radius=R)
    if correction is not None:
        for p in q3_poles(correction)["outer"]:
            if abs(abs(p) - rho) < POLE_MARGIN * abs(p):
                raise PoleProximity("sampling circle passes through a pole of q3", pole=str(p))
    if method == "convolution":
        return r_minus_S_convolution(sd, correction)
    if M is None:
        M = 4096
        while M // 2 - 1 < sd.N:
            M *= 2
    samp = r_minus_S_samples(sd, rho, M, correction)
    while samp.meta["alias_tail"] > samp.floor and M < 2 ** 15:
        M *= 2
        nxt = r_minus_S_samples(sd, rho, M, correction)
        agree = all(abs(nxt[n] - samp[n]) <= 64 * samp.floor_at(n) for n in range(-8, 9))
        samp = nxt
        if agree:
            break
    if method == "samples":
        return samp
    conv = r_minus_S_convolution(sd, correction)
    worst = mpmath.mpf(0)
    with prec.work():
        log2M = max(1, int(math.log2(M)))
        for n in range(max(conv.n_min, samp.n_min), min(conv.n_max, samp.n_max) + 1):
            tol = 8 * log2M * samp.floor_at(n) + conv.floor + samp.meta["alias_tail"] * to_mpf(rho) ** (-n)
            diff = abs(conv[n] - samp[n])
            worst = max(worst, diff / tol)
            if diff > tol:
                raise PathsDisagree("sampling and convolution paths differ at n=%d" % n, n=n,
                                    difference=mpmath.nstr(diff, 5), tolerance=mpmath.nstr(tol, 5))
    meta = dict(conv.meta)
    meta.update({"rho": rho, "M": M, "alias_tail": samp.meta["alias_tail"],
                 "path_agreement": float(worst), "path": "convolution"})
    return LaurentSlice(conv.coeffs, conv.n_min, prec, conv.floor, meta)


# -- the q3 correction -----------------------------------------------------------

def _q3_terms(model, form="corrected"):
    """Yield (A, a, p): the term is A z / ((z - a)(1 - z/p)).

    The corrected form is the one whose poles cancel those of r - S.
    """
    terms = model.terms
    for ck, mk in terms:
        for cl, ml in terms:
            g = 1 / (1 - 1 / (mk * mpmath.conj(ml)))
            for cr, mr in terms:
                p = mk * mpmath.conj(ml) * mr
                coef = ck * mpmath.conj(cl) * cr * mk * g
                if form == "corrected":
                    yield coef / p, mk, p
                elif form == "printed":
                    yield -coef, mk, p
                else:
                    raise ValueError("form must be 'corrected' or 'printed'")


def q3_poles(model):
    """{'inner': [mu_k], 'outer': [mu_k conj(mu_l) mu_r]} without duplicates."""
    inner, outer = [], []
    for _, a, p in _q3_terms(model):
        if not any(abs(a - x) <= 1e-30 * abs(a) for x in inner):
            inner.append(a)
        if not any(abs(p - x) <= 1e-30 * abs(p) for x in outer):
            outer.append(p)
    return {"inner": inner, "outer": outer}


def q3_term(model, z, part="full", form="corrected", margin=POLE_MARGIN):
    """q3(z); ``part`` = "full", "outer" (poles at mu_k conj(mu_l) mu_r) or "inner" (poles at mu_k)."""
    z = to_mpc(z)
    total = mpmath.mpc(0)
    for A, a, p in _q3_terms(model, form):
        poles = {"full": (a, p), "outer": (p,), "inner": (a,)}[part]
        for pole in poles:
            if abs(z - pole) <= margin * abs(z):
                raise PoleProximity("z lies within the pole margin of q3", pole=str(pole))
        if part == "full":
            total += A * z / ((z - a) * (1 - z / p))
        else:
            alpha_ = a / (1 - a / p)
            beta = p / (p - a)
            if part == "outer":
                total += A * beta / (1 - z / p)
            else:
                total += A * alpha_ / (z - a)
    return total


def q3_taylor(model, N, part="outer", form="corrected", prec=None):
    """Taylor coefficients at 0 of q3 (or one of its partial-fraction parts)."""
    with as_prec(prec).work():
        out = [mpmath.mpc(0)] * (N + 1)
        for A, a, p in _q3_terms(model, form):
            beta = A * p / (p - a)
            alpha_ = A * a / (1 - a / p)
            pinv, ainv = 1 / p, 1 / a
            pp, ap = mpmath.mpc(1), mpmath.mpc(1)
            for n in range(N + 1):
                if part in ("outer", "full"):
                    out[n] += beta * pp
                if part in ("inner", "full"):
                    out[n] -= alpha_ / a * ap
                pp *= pinv
                ap *= ainv
    return out


def correction_taylor(model, N, prec):
    return q3_taylor(model, N, "outer", "corrected", prec)


# -- predictors --------------------------------------------------------------------

def default_gap(model):
    """delta with max|mu_k| < R^3/(1+delta): the geometric midpoint of the admissible range."""
    R = float(model.min_modulus)
    top = float(model.max_modulus)
    return max(0.0, math.sqrt(R ** 3 / top) - 1)


def predictor_region(model, delta=None):
    """Radius R^-3 (1 + delta) of the disk where the predictors apply."""
    if not model.terms:
        return math.inf
    delta = default_gap(model) if delta is None else delta
    return float(model.min_modulus) ** -3 * (1 + delta)


def _check_region(model, z, delta):
    limit = predictor_region(model, delta)
    if not abs(z) < limit:
        raise OutOfRegion("|z| = %s is not below %s" % (mpmath.nstr(abs(z), 8), limit),
                          modulus=float(abs(z)), limit=limit)


def predictor_phi(model, sd, n, z, delta=None):
    """-dinv(z) sum_k conj(c_k) conj(mu_k)^-n (1 - z conj(mu_k))^-1."""
    if n < 0:
        raise ValueError("n must be >= 0")
    with sd.prec.work():
        z = to_mpc(z)
        if not model.terms:
            return mpmath.mpc(0)
        _check_region(model, z, delta)
        s = mpmath.fsum(mpmath.conj(c) * mpmath.conj(mu) ** (-n) / (1 - z * mpmath.conj(mu))
                        for c, mu in model.terms)
        return -horner(sd.dinv.coeffs, z) * s


def predictor_phistar(model, sd, n, z, delta=None, form="corrected"):
    """Predicted Phi_n^*(z) - dinv(z): a double sum decaying like (conj(mu_k) mu_l)^-n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    with sd.prec.work():
        z = to_mpc(z)
        if not model.terms:
            return mpmath.mpc(0)
        _check_region(model, z, delta)
        total = mpmath.mpc(0)
        for ck, mk in model.terms:
            bk = mpmath.conj(mk)
            for cl, ml in model.terms:
                g = 1 - 1 / (bk * ml)
                base = mpmath.conj(ck) * cl / ml / (1 - z * bk) * (bk * ml) ** (-n)
                total += base / g if form == "corrected" else base * g
        factor = z if form == "corrected" else 1
        return -horner(sd.dinv.coeffs, z) * factor * total
