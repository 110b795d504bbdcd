"""Weight -> trigonometric moments -> Verblunsky coefficients, plus two integral cross-checks."""
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import NotNormalized, NotPositiveDefinite, QuadratureUnresolved
from .numerics import as_prec, eval_on_circle, fft, horner, max_abs, cnum_pair
from .opuc import final_pair

MAX_NODES = 2 ** 16


@dataclass(frozen=True)
class MomentSequence:
    """c[n] = integral of exp(-i n theta) w(theta) d theta/2pi, n = 0..N."""
    c: tuple
    prec: object
    meta: dict = None

    @property
    def N(self):
        return len(self.c) - 1

    def to_records(self):
        return [{"n": n, "re": p[0], "im": p[1]} for n, p in enumerate(cnum_pair(x, self.prec) for x in self.c)]


def _trapezoid_moments(w, N, M, prec):
    vals = w.samples(M, prec)
    raw = fft(vals, prec, sign=-1)
    with prec.work():
        return [raw[n % M] / M for n in range(N + 1)]


def _residue_moments(scale, coeffs, N, prec):
    """Exact moments of scale/|P(e^{i theta})|^2 by residues at the zeros of the reversed P.

    Returns None when the zeros are not numerically simple.
    """
    with prec.work():
        cs = list(coeffs)
        top = max_abs(cs)
        while len(cs) > 1 and abs(cs[-1]) <= top * prec.eps:
            cs.pop()
        L = len(cs) - 1
        if L == 0:
            c0 = scale / abs(cs[0]) ** 2
            return [mpmath.mpc(c0)] + [mpmath.mpc(0)] * N
        rev = [mpmath.conj(x) for x in reversed(cs)]  # conj(P(e^{it})) = e^{-iLt} rev(e^{it})
        drev = [k * rev[k] for k in range(1, L + 1)]
    with mpmath.workprec(prec.bits + 64):
        zeros = _polished_roots(rev)
        sep = min((abs(a - b) for i, a in enumerate(zeros) for b in zeros[:i]), default=mpmath.inf)
        if sep < mpmath.ldexp(1, -prec.bits // 4) or any(not abs(z) < 1 for z in zeros):
            return None
        res = [scale / (horner(cs, z) * horner(drev, z)) for z in zeros]
        out = []
        powers = [z ** (L - 1) for z in zeros]
        for n in range(N + 1):
            cm = mpmath.fsum(r * p for r, p in zip(res, powers))  # moment of index -n
            out.append(mpmath.conj(cm))
            powers = [p * z for p, z in zip(powers, zeros)]
    with prec.work():
        return [+x for x in out]


def _polished_roots(coeffs):
    """Roots of sum coeffs[k] z^k: double-precision seeds, Newton-polished at the current precision.

    Falls back to mpmath.polyroots when a seed fails to converge or two roots coincide.
    """
    L = len(coeffs) - 1
    seeds = np.roots([complex(c) for c in reversed(coeffs)])
    dc = [k * coeffs[k] for k in range(1, L + 1)]
    tol = mpmath.ldexp(1, -mpmath.mp.prec + 8)
    out = []
    for s in seeds:
        z = mpmath.mpc(complex(s))
        for _ in range(40):
            step = horner(coeffs, z) / horner(dc, z)
            z -= step
            if abs(step) <= tol * max(1, abs(z)):
                break
        else:
            out = None
            break
        out.append(z)
    if out is not None:
        sep = min((abs(a - b) for i, a in enumerate(out) for b in out[:i]), default=mpmath.inf)
        if sep > mpmath.ldexp(1, -40):
            return out
    r = mpmath.polyroots(list(reversed(coeffs)), maxsteps=800, extraprec=64)
    return r if isinstance(r, list) else [r]


def moments_from_weight(w, N, M=None, normalize=False, method="auto", prec=None, norm_tol=None):
    """Trigonometric moments c_0..c_N of a weight.

    ``method``: "trapezoid", "residues" (rational weights only) or "auto",
    which uses residues when the weight carries a reciprocal polynomial.
    With ``M=None`` the trapezoid node count doubles from max(8N, 256) until
    two successive moment vectors agree.
    """
    prec = as_prec(prec)
    c = None
    used = None
    if method in ("auto", "residues") and w.reciprocal_poly is not None:
        scale, coeffs = w.reciprocal_poly
        c = _residue_moments(scale, coeffs, N, prec)
        used = "residues"
    elif method == "residues":
        raise ValueError("residue moments need a rational weight")
    if c is None:
        used = "trapezoid"
        if M is not None:
            if M & (M - 1) or M < 8 * N:
                raise ValueError("M must be a power of two >= 8N")
            c = _trapezoid_moments(w, N, M, prec)
        else:
            M = 256
            while M < 8 * N:
                M *= 2
            c = _trapezoid_moments(w, N, M, prec)
            while True:
                if M >= MAX_NODES:
                    raise QuadratureUnresolved("moments did not settle by %d nodes" % M, nodes=M)
                nxt = _trapezoid_moments(w, N, 2 * M, prec)
                M *= 2
                with prec.work():
                    tol = 64 * prec.floor_for(max_abs(nxt))
                    done = max_abs([a - b for a, b in zip(c, nxt)]) <= tol
                c = nxt
                if done:
                    break
    with prec.work():
        tol = mpmath.ldexp(1, -prec.bits // 2) if norm_tol is None else mpmath.mpf(norm_tol)
        if abs(c[0] - 1) > tol:
            if not normalize:
                raise NotNormalized("c0 = %s differs from 1" % mpmath.nstr(c[0].real, 12),
                                    c0=mpmath.nstr(c[0].real, 20))
            c0 = c[0].real
            c = [x / c0 for x in c]
        c[0] = mpmath.mpc(c[0].real)
    return MomentSequence(tuple(c), prec, {"method": used, "nodes": M if used == "trapezoid" else None})


def alphas_from_moments(ms, N=None):
    """Szegő recursion in moment form (Levinson): alpha_0..alpha_{N-1}."""
    prec = ms.prec
    c = ms.c
    N = ms.N if N is None else N
    if N > ms.N:
        raise ValueError("need moments c_0..c_N")
    out = []
    with prec.work():
        if not c[0].real > 0:
            raise NotPositiveDefinite("c0 is not positive", n=0)
        phi = [mpmath.mpc(1)]
        norm = c[0].real  # ||Phi_n||^2
        for n in range(N):
            # <1, z Phi_n> = conj(alpha_n) ||Phi_n||^2
            s = mpmath.fdot([mpmath.conj(x) for x in phi], c[1:n + 2])
            a = s / norm
            if not abs(a) < 1:
                raise NotPositiveDefinite("Toeplitz minor %d is not positive" % (n + 1), n=n + 1)
            out.append(a)
            ca = mpmath.conj(a)
            star = [mpmath.conj(x) for x in reversed(phi)]
            nxt = [mpmath.mpc(0)] + phi
            for j in range(n + 1):
                nxt[j] -= ca * star[j]
            phi = nxt
            norm = norm * (1 - abs(a) ** 2)
            if not norm > 0:
                raise NotPositiveDefinite("Toeplitz minor %d is not positive" % (n + 2), n=n + 2)
    return out


def _adaptive(integral, prec, start=256):
    """Run integral(M) with doubling M until two successive values agree."""
    M = start
    prev = integral(M)
    while M < MAX_NODES:
        M *= 2
        val = integral(M)
        with prec.work():
            if abs(val - prev) <= 64 * prec.floor_for(abs(val)):
                return val, M
        prev = val
    raise QuadratureUnresolved("quadrature did not settle by %d nodes" % M, nodes=M)


def _circle_parts(sd, w, n_phi, M):
    prec = sd.prec
    pair = final_pair(sd.seq.alphas(n_phi, prec), prec)
    phi_vals = eval_on_circle(pair.phi, 1, M, prec)
    dinv_vals = eval_on_circle(sd.dinv.coeffs, 1, M, prec)
    return pair, phi_vals, dinv_vals, w.samples(M, prec)


def alpha_check_freud(n, sd, w, M=None):
    """-kappa_inf * integral of conj(Phi_{n+1}) D^-1 w d theta/2pi, kappa_inf = 1/D(0)."""
    prec = sd.prec

    def integral(M):
        _, phi_vals, dinv_vals, ws = _circle_parts(sd, w, n + 1, M)
        with prec.work():
            kinf = 1 / sd.D0
            terms = [mpmath.conj(p) * (d / sd.D0) * x for p, d, x in zip(phi_vals, dinv_vals, ws)]
            return -kinf * mpmath.fsum(terms) / M
    if M is not None:
        return integral(M)
    return _adaptive(integral, prec)[0]


def alpha_check_dinv(n, sd, w, M=None):
    """-kappa_inf^-1 kappa_n^2 * integral of conj(Phi_n)(D^-1 - D(0)^-1) e^{-i theta} w d theta/2pi."""
    prec = sd.prec

    def integral(M):
        pair, phi_vals, dinv_vals, ws = _circle_parts(sd, w, n, M)
        from .numerics import _roots_of_unity
        roots = _roots_of_unity(M, prec.bits)
        with prec.work():
            inv0 = 1 / sd.D0
            terms = [mpmath.conj(p) * (d / sd.D0 - inv0) * mpmath.conj(e) * x
                     for p, d, e, x in zip(phi_vals, dinv_vals, roots, ws)]
            return -sd.D0 * pair.kappa ** 2 * mpmath.fsum(terms) / M
    if M is not None:
        return integral(M)
    return _adaptive(integral, prec)[0]


alpha_check_2414 = alpha_check_dinv
