"""Structure extraction: Prony fits, Padé poles and analyticity radii."""
import math
from dataclasses import dataclass, field

import mpmath

from .errors import (AllSpurious, IllConditioned, OrderAmbiguous, SingularToeplitz,
                     WindowBelowFloor, WindowTooShort)
from .numerics import RateEstimate, as_prec, cnum_pair, fit_decay_rate, horner, max_abs, to_mpc
from .opuc import ExponentialModel

ORDER_GAP = 1e6
SPURIOUS_THRESHOLD = 1e-10
MERGE_RADIUS = 1e-6


def _sort_key(z):
    return (float(abs(z)), float(mpmath.arg(z)))


@dataclass(frozen=True)
class PronyFit:
    model: ExponentialModel
    residual_rate: float  # radius R_res with residual O(R_res^-n)
    condition: float
    singular_values: tuple = ()
    window: tuple = ()

    def to_dict(self, prec=None):
        out = self.model.to_dict(prec)
        out["residual_rate"] = "inf" if math.isinf(self.residual_rate) else self.residual_rate
        out["condition"] = self.condition
        return out


def _singular_values(rows, prec):
    A = mpmath.matrix(rows)
    s = mpmath.svd_c(A, compute_uv=False)
    return sorted((s[i] for i in range(len(s))), reverse=True)


def synthesize(model, N, prec=None):
    """alpha_0..alpha_{N-1} of an exact exponential model."""
    prec = as_prec(prec)
    with prec.work():
        return [model.value(n) for n in range(N)]


def prony_fit(alphas, k_max, start=None, prec=None, gap=ORDER_GAP):
    """Fit alpha_n ~ sum_k c_k mu_k^(-n-1) with at most k_max terms.

    The fit window starts at ``start`` (default len/4) so that fast-decaying
    terms beyond the model order do not bias the leading exponents, and ends
    at the last entry above the floor.
    """
    prec = as_prec(prec)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if len(alphas) < 4 * k_max + 8:
        raise ValueError("need at least 4*k_max + 8 coefficients")
    with prec.work():
        data = [to_mpc(a) for a in alphas]
        floor = prec.floor_for(max_abs(data))
        if start is None:
            start = max(5, len(data) // 4)
        stop = len(data)
        while stop > 0 and abs(data[stop - 1]) <= 10 * floor:
            stop -= 1
        if stop == 0:
            return PronyFit(ExponentialModel(), math.inf, 1.0)
        start = min(start, max(0, stop - 2 * (k_max + 1) - 4))
        scale = max_abs(data[start:stop])
        y = [v / scale for v in data[start:stop]]
        L = len(y)
        cols = k_max + 1
        if L - cols < cols:
            raise WindowTooShort("fit window above the floor is too short", length=L)
        rows = [y[i:i + cols] for i in range(L - cols + 1)]
        sv = _singular_values(rows, prec)
        if sv[0] * scale <= 10 * floor:
            return PronyFit(ExponentialModel(), math.inf, 1.0)
        # order from the largest consecutive singular value ratio
        best_k, best_ratio = None, mpmath.mpf(0)
        tiny = sv[0] * prec.eps  # singular values below the floor count as zero
        for k in range(1, len(sv)):
            ratio = sv[k - 1] / max(sv[k], tiny)
            if ratio > best_ratio:
                best_k, best_ratio = k, ratio
        if best_ratio < gap:
            raise OrderAmbiguous("no singular value gap of at least %g" % gap,
                                 ratios=[mpmath.nstr(sv[k - 1] / sv[k], 4) for k in range(1, len(sv))])
        K = best_k
        condition = sv[0] / sv[K - 1]
        if condition * prec.eps > mpmath.mpf(10) ** -6:
            raise IllConditioned("Hankel condition %s exceeds the precision" % mpmath.nstr(condition, 4),
                                 condition=float(condition))
        # monic linear prediction y[i+K] + sum_j a_j y[i+j] = 0 in least squares
        # (Householder's singularity test is on squared norms, hence the doubled precision)
        ls_bits = 2 * prec.bits + 64
        with mpmath.workprec(ls_bits):
            A = mpmath.matrix([y[i:i + K] for i in range(L - K)])
            b = mpmath.matrix([-y[i + K] for i in range(L - K)])
            coef = mpmath.qr_solve(A, b)[0]
        poly = [mpmath.mpc(1)] + [coef[j] for j in range(K - 1, -1, -1)]
        with mpmath.workprec(ls_bits):
            lams = mpmath.polyroots(poly, maxsteps=400, extraprec=2 * prec.bits)
        lams = [+mpmath.mpc(l) for l in (lams if isinstance(lams, list) else [lams])]
        # amplitudes by least squares on columns scaled to unit size at the window start
        n0 = start
        with mpmath.workprec(ls_bits):
            V = mpmath.matrix([[lam ** (n - n0) for lam in lams] for n in range(start, stop)])
            amp = mpmath.qr_solve(V, mpmath.matrix(y))[0]
        terms = []
        for k, lam in enumerate(lams):
            mu = 1 / lam
            c = amp[k] * scale * mu ** (n0 + 1)
            terms.append((c, mu))
        terms.sort(key=lambda t: _sort_key(t[1]))
        bad = [mu for _, mu in terms if not abs(mu) > 1]
        if bad:
            raise IllConditioned("fitted exponent inside the unit disk", mu=str(bad[0]))
        resid = [abs(data[n] - mpmath.fsum(c * mu ** (-n - 1) for c, mu in terms)) for n in range(len(data))]
        # inside the fit window the residual is least-squares noise; the unmodelled
        # terms show up cleanly on the indices before it
        rr = math.inf
        for window in ((5, start - 1), None):
            try:
                rr = fit_decay_rate(resid, window, floor=floor).radius
                break
            except (WindowBelowFloor, WindowTooShort):
                continue
        top = float(max(abs(mu) for _, mu in terms))
        tail = rr if rr > top else math.inf
        model = ExponentialModel(tuple(terms), tail)
    return PronyFit(model, rr, float(condition), tuple(float(s) for s in sv), (start, stop - 1))


@dataclass(frozen=True)
class PoleReport:
    poles: tuple  # ((location, residue), ...)
    spurious_rejected: int
    order: tuple
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def locations(self):
        return [z for z, _ in self.poles]

    def to_dict(self, prec=None):
        return {"poles": [{"z": cnum_pair(z, prec), "residue": cnum_pair(r, prec)} for z, r in self.poles],
                "order": list(self.order), "spurious_rejected": self.spurious_rejected,
                "retries": self.meta.get("retries", [])}


def _denominator(c, m, prec):
    """Solve the [m/m] Toeplitz system; None if numerically singular."""
    def coef(k):
        return c[k] if 0 <= k < len(c) else mpmath.mpc(0)
    T = mpmath.matrix([[coef(m + i - j) for j in range(1, m + 1)] for i in range(1, m + 1)])
    rhs = mpmath.matrix([-coef(m + i) for i in range(1, m + 1)])
    s = mpmath.svd_c(T, compute_uv=False)
    smax = max(s[i] for i in range(m))
    smin = min(s[i] for i in range(m))
    if smax == 0 or smin / smax < prec.eps:
        return None
    q = mpmath.lu_solve(T, rhs)
    return [mpmath.mpc(1)] + [q[i] for i in range(m)]


def _roots(coeffs, prec):
    """Roots of sum coeffs[k] z^k (lowest first), trailing zeros trimmed."""
    cs = list(coeffs)
    top = max_abs(cs)
    while len(cs) > 1 and abs(cs[-1]) <= top * prec.eps:
        cs.pop()
    if len(cs) < 2:
        return []
    with mpmath.workprec(prec.bits + 64):
        r = mpmath.polyroots(cs[::-1], maxsteps=600, extraprec=2 * prec.bits)
    r = r if isinstance(r, list) else [r]
    return [+mpmath.mpc(x) for x in r]


def pade_poles(series, m, spurious_threshold=SPURIOUS_THRESHOLD, merge_radius=MERGE_RADIUS):
    """Poles outside the unit disk of the diagonal [m/m] Padé approximant.

    A numerically singular Toeplitz system lowers m by one (recorded in
    ``meta['retries']``).  Residues use the convention residue of P/Q at the
    pole, so 1/(1 - z/2) reports -2 at z = 2.
    """
    prec = series.prec
    if not 2 * m < len(series):
        raise ValueError("need more than 2m coefficients")
    retries = []
    with prec.work():
        c = list(series.coeffs)
        q = None
        mm = m
        while mm >= 1:
            q = _denominator(c, mm, prec)
            if q is not None:
                break
            retries.append(mm)
            mm -= 1
        if q is None:
            return PoleReport((), 0, (0, 0), {"retries": retries})
        p = [mpmath.fsum(q[j] * c[i - j] for j in range(0, min(i, mm) + 1)) for i in range(mm + 1)]
        dq = [k * q[k] for k in range(1, len(q))]
        zeros = _roots(p, prec)
        cands = []
        for z in _roots(q, prec):
            if not abs(z) > 1:
                continue
            res = horner(p, z) / horner(dq, z)
            cands.append((z, res))
        if not cands:
            return PoleReport((), 0, (mm, mm), {"retries": retries})
        big = max(abs(r) for _, r in cands)
        keep, rejected = [], 0
        for z, res in cands:
            near_zero = any(abs(z - w) < merge_radius * abs(z) for w in zeros)
            if abs(res) < spurious_threshold * big or near_zero:
                rejected += 1
            else:
                keep.append((z, res))
        if not keep:
            raise AllSpurious("every candidate pole was rejected", order=mm)
        keep.sort(key=lambda t: _sort_key(t[0]))
    return PoleReport(tuple(keep), rejected, (mm, mm), {"retries": retries})


def analyticity_radius(slice_, window=None):
    """Decay-rate estimate of the positive-index Laurent coefficients; ``.radius`` is 1/rate."""
    mags = slice_.positive_magnitudes()
    floors = [slice_.floor_at(n) for n in range(len(mags))]
    # compare against the per-index floor by working with ratios
    with slice_.prec.work():
        if window is None:
            from .numerics import auto_window
            ratios = [m / f for m, f in zip(mags, floors)]
            window = auto_window(ratios, 1)
            if window is None:
                raise WindowBelowFloor("no positive-index coefficients above the floor")
        return fit_decay_rate(mags, window, floor=0)


def radius_or_cutoff(slice_):
    """(estimate or None, note): None means nothing measurable above the floor."""
    try:
        return analyticity_radius(slice_), "fitted"
    except (WindowBelowFloor, WindowTooShort):
        return None, "radius >= cutoff (no coefficients above floor)"


__all__ = ["PronyFit", "PoleReport", "prony_fit", "pade_poles", "analyticity_radius",
           "radius_or_cutoff", "synthesize", "RateEstimate"]
