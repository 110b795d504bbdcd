"""Verblunsky coefficient models and the Szegő recursion."""
import math
from dataclasses import dataclass, field

import mpmath

from .errors import IdentityDrift, ModulusViolation
from .numerics import Prec, as_prec, cnum_pair, horner, max_abs, to_mpc, to_mpf


# -- exponential models ----------------------------------------------------------

@dataclass(frozen=True)
class ExponentialModel:
    """alpha_n ~ sum_k c_k mu_k^(-n-1), error O(tail_rate^-n)."""
    terms: tuple = ()
    tail_rate: float = math.inf

    def __post_init__(self):
        terms = tuple((mpmath.mpc(c), mpmath.mpc(mu)) for c, mu in self.terms)
        object.__setattr__(self, "terms", terms)
        for _, mu in terms:
            if not abs(mu) > 1:
                raise ModulusViolation("exponent modulus must exceed 1", mu=str(mu))
        mus = [mu for _, mu in terms]
        for i in range(len(mus)):
            for j in range(i):
                if mus[i] == mus[j]:
                    raise ValueError("exponents must be pairwise distinct")
        if terms and not float(self.tail_rate) > float(max(abs(mu) for mu in mus)):
            raise ValueError("tail_rate must exceed every exponent modulus")

    @classmethod
    def from_pairs(cls, pairs, tail_rate=math.inf, prec=None):
        prec = as_prec(prec)
        with prec.work():
            terms = tuple((to_mpc(c), to_mpc(mu)) for c, mu in pairs)
        return cls(terms, tail_rate)

    def __len__(self):
        return len(self.terms)

    @property
    def coefficients(self):
        return [c for c, _ in self.terms]

    @property
    def exponents(self):
        return [mu for _, mu in self.terms]

    @property
    def min_modulus(self):
        return min((abs(mu) for _, mu in self.terms), default=mpmath.inf)

    @property
    def max_modulus(self):
        return max((abs(mu) for _, mu in self.terms), default=mpmath.mpf(0))

    def value(self, n):
        return mpmath.fsum(c * mu ** (-n - 1) for c, mu in self.terms) if self.terms else mpmath.mpc(0)

    def restricted(self, max_modulus):
        """Keep the terms with |mu| < max_modulus."""
        keep = tuple((c, mu) for c, mu in self.terms if abs(mu) < max_modulus)
        dropped = [abs(mu) for c, mu in self.terms if abs(mu) >= max_modulus]
        tail = min([float(self.tail_rate)] + [float(m) for m in dropped])
        return ExponentialModel(keep, tail)

    def to_dict(self, prec=None):
        prec = as_prec(prec)
        return {"terms": [{"c": cnum_pair(c, prec), "mu": cnum_pair(mu, prec)} for c, mu in self.terms],
                "tail_rate": _json_float(self.tail_rate)}

    @classmethod
    def from_dict(cls, data, prec=None):
        prec = as_prec(prec)
        tail = data.get("tail_rate")
        tail = math.inf if tail in (None, "inf", "Infinity") else float(tail)
        with prec.work():
            terms = tuple((to_mpc(t["c"]), to_mpc(t["mu"])) for t in data.get("terms", []))
        return cls(terms, tail)


def _json_float(x):
    x = float(x)
    return "inf" if math.isinf(x) else x


# -- Verblunsky sequences --------------------------------------------------------

class VerblunskySequence:
    """Producer of alpha_n, with alpha_{-1} = -1."""
    kind = None

    #: known decay radius R (|alpha_n| ~ R^-n), or None if unknown
    radius = None

    def _alpha(self, n):
        raise NotImplementedError

    def alpha(self, n, prec=None):
        if n < -1:
            raise ValueError("index must be >= -1")
        prec = as_prec(prec)
        with prec.work():
            if n == -1:
                return mpmath.mpc(-1)
            a = +mpmath.mpc(self._alpha(n))
            if not abs(a) < 1:
                raise ModulusViolation("|alpha_%d| >= 1" % n, n=n, modulus=mpmath.nstr(abs(a), 8))
            return a

    def alphas(self, N, prec=None):
        """alpha_0..alpha_{N-1}."""
        return [self.alpha(n, prec) for n in range(N)]

    def known_radius(self, prec=None):
        return None

    def asymptotic_model(self, K, prec=None):
        raise NotImplementedError("no closed-form exponential model for %s" % self.kind)

    def params(self):
        return {}

    def to_dict(self, prec=None):
        return {"kind": self.kind, "params": self.params()}


@dataclass(frozen=True)
class Explicit(VerblunskySequence):
    """Finitely many coefficients; alpha_n = 0 beyond the list."""
    values: tuple = ()
    kind = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(mpmath.mpc(v) if not isinstance(v, (str, tuple, list, complex, float))
                                                 else to_mpc(v) for v in self.values))
        for n, v in enumerate(self.values):
            if not abs(v) < 1:
                raise ModulusViolation("|alpha_%d| >= 1" % n, n=n)

    @classmethod
    def from_values(cls, values, prec=None):
        with as_prec(prec).work():
            return cls(tuple(to_mpc(v) for v in values))

    @property
    def length(self):
        return len(self.values)

    def _alpha(self, n):
        return self.values[n] if n < len(self.values) else 0

    def known_radius(self, prec=None):
        return mpmath.inf

    def asymptotic_model(self, K, prec=None):
        return ExponentialModel()

    def to_dict(self, prec=None):
        return {"kind": self.kind, "params": {}, "alphas": [cnum_pair(v, as_prec(prec)) for v in self.values]}


def zero_sequence():
    return Explicit(())


@dataclass(frozen=True)
class RogersSzego(VerblunskySequence):
    """alpha_n = (-1)^n q^((n+1)/2)."""
    q: object = 0.25
    kind = "rogers-szego"

    def __post_init__(self):
        if not 0 < float(self.q) < 1:
            raise ValueError("Rogers-Szego parameter must satisfy 0 < q < 1")

    def _alpha(self, n):
        q = to_mpf(self.q)
        return (-1) ** n * q ** (mpmath.mpf(n + 1) / 2)

    def known_radius(self, prec=None):
        with as_prec(prec).work():
            return 1 / mpmath.sqrt(to_mpf(self.q))

    def asymptotic_model(self, K=1, prec=None):
        # exact single term: c = -1, mu = -q^(-1/2)
        with as_prec(prec).work():
            return ExponentialModel(((mpmath.mpc(-1), -1 / mpmath.sqrt(to_mpf(self.q))),))

    def params(self):
        return {"q": float(self.q) if not isinstance(self.q, str) else self.q}


@dataclass(frozen=True)
class SingleMoment(VerblunskySequence):
    """Weight 1 - a cos(theta): alpha_n = -(mu+ - mu-)/(mu+^(n+2) - mu-^(n+2))."""
    a: object = 0.8
    kind = "single-moment"

    def __post_init__(self):
        if not 0 < float(self.a) < 1:
            raise ValueError("single-moment parameter must satisfy 0 < a < 1")

    def roots(self):
        """(mu+, mu-), the roots of z^2 - (2/a) z + 1."""
        a = to_mpf(self.a)
        s = mpmath.sqrt(1 - a * a)
        return (1 + s) / a, (1 - s) / a

    def _alpha(self, n):
        mp_, mm = self.roots()
        return -(mp_ - mm) / (mp_ ** (n + 2) - mm ** (n + 2))

    def known_radius(self, prec=None):
        with as_prec(prec).work():
            return self.roots()[0]

    def asymptotic_model(self, K=4, prec=None):
        # geometric expansion: c_j = -(mu+ - mu-) / mu+^(2j-1), exponent mu+^(2j-1)
        with as_prec(prec).work():
            mp_, mm = self.roots()
            terms = []
            for j in range(1, K + 1):
                mu = mp_ ** (2 * j - 1)
                terms.append((mpmath.mpc(-(mp_ - mm) / mu), mpmath.mpc(mu)))
            return ExponentialModel(tuple(terms), float(mp_ ** (2 * K + 1)))

    def params(self):
        return {"a": float(self.a) if not isinstance(self.a, str) else self.a}


@dataclass(frozen=True)
class ExponentialSequence(VerblunskySequence):
    """alpha_n = model(n) + tail(n)."""
    model: ExponentialModel = field(default_factory=ExponentialModel)
    tail: object = None
    kind = "exponential"

    def _alpha(self, n):
        v = self.model.value(n)
        if self.tail is not None:
            v += to_mpc(self.tail(n))
        return v

    def known_radius(self, prec=None):
        if self.tail is not None:
            return None
        return self.model.min_modulus

    def asymptotic_model(self, K=None, prec=None):
        return self.model

    def to_dict(self, prec=None):
        return {"kind": self.kind, "params": {}, "model": self.model.to_dict(prec)}


def sequence_from_dict(data, prec=None):
    kind = data.get("kind")
    params = data.get("params", {})
    if kind == "explicit":
        return Explicit.from_values([tuple(v) for v in data.get("alphas", [])], prec)
    if kind == "rogers-szego":
        return RogersSzego(params["q"])
    if kind == "single-moment":
        return SingleMoment(params["a"])
    if kind == "exponential":
        return ExponentialSequence(ExponentialModel.from_dict(data["model"], prec))
    if kind == "zero":
        return zero_sequence()
    raise ValueError("unknown sequence kind %r" % kind)


def alpha(seq, n, prec=None):
    return seq.alpha(n, prec)


# -- orthogonal polynomials ------------------------------------------------------

@dataclass(frozen=True)
class PolynomialPair:
    """Coefficients (lowest degree first) of Phi_n and Phi_n^*, with kappa_n."""
    n: int
    phi: tuple
    phistar: tuple
    kappa: object

    @classmethod
    def initial(cls, prec=None):
        with as_prec(prec).work():
            return cls(0, (mpmath.mpc(1),), (mpmath.mpc(1),), mpmath.mpf(1))


def recursion_step(p, a, prec=None):
    """Phi_{n+1} = z Phi_n - conj(a) Phi_n^*,  Phi^*_{n+1} = Phi_n^* - a z Phi_n."""
    with as_prec(prec).work():
        a = to_mpc(a)
        m = abs(a)
        if not m < 1:
            raise ModulusViolation("|alpha| >= 1 in recursion step", n=p.n)
        ca = mpmath.conj(a)
        zero = mpmath.mpc(0)
        phi = [zero] + list(p.phi)
        star = list(p.phistar) + [zero]
        for j in range(p.n + 1):
            phi[j] -= ca * p.phistar[j]
            star[j + 1] -= a * p.phi[j]
        phi[-1] = mpmath.mpc(1)  # monic by construction; pin it exactly
        kappa = p.kappa / mpmath.sqrt(1 - m * m)
    return PolynomialPair(p.n + 1, tuple(phi), tuple(star), kappa)


def phi_upto(seq, N, prec=None):
    """Pairs for n = 0..N, with the partial-sum identity for Phi_N^* checked."""
    if N < 0:
        raise ValueError("N must be >= 0")
    prec = as_prec(prec)
    alphas = seq.alphas(N, prec)
    pairs = [PolynomialPair.initial(prec)]
    with prec.work():
        acc = [mpmath.mpc(1)] + [mpmath.mpc(0)] * N
        scale = mpmath.mpf(1)
        for n, a in enumerate(alphas):
            p = pairs[-1]
            for j, c in enumerate(p.phi):
                acc[j + 1] -= a * c
            scale = max(scale, abs(a) * max_abs(p.phi))
            pairs.append(recursion_step(p, a, prec))
        last = pairs[-1].phistar
        scale = max(scale, max_abs(last))
        resid = max_abs([x - y for x, y in zip(last, acc)])
        floor = prec.floor_for(scale)
        if resid > 100 * floor:
            raise IdentityDrift("partial-sum identity residual %s exceeds 100*floor" % mpmath.nstr(resid, 5),
                                residual=mpmath.nstr(resid, 5), floor=mpmath.nstr(floor, 5))
    return pairs


def identity_residual(seq, N, prec=None):
    """(residual, floor) of Phi_N^* = 1 - sum_j alpha_j z Phi_j."""
    prec = as_prec(prec)
    alphas = seq.alphas(N, prec)
    with prec.work():
        p = PolynomialPair.initial(prec)
        acc = [mpmath.mpc(1)] + [mpmath.mpc(0)] * N
        scale = mpmath.mpf(1)
        for a in alphas:
            for j, c in enumerate(p.phi):
                acc[j + 1] -= a * c
            scale = max(scale, abs(a) * max_abs(p.phi))
            p = recursion_step(p, a, prec)
        scale = max(scale, max_abs(p.phistar))
        resid = max_abs([x - y for x, y in zip(p.phistar, acc)])
        return resid, prec.floor_for(scale)


def final_pair(alphas, prec=None):
    """Run the recursion through a list of coefficients; returns the last pair."""
    p = PolynomialPair.initial(prec)
    for a in alphas:
        p = recursion_step(p, a, prec)
    return p


def eval_phi(p, z, prec=None):
    """(Phi_n(z), Phi_n^*(z)) by Horner."""
    with as_prec(prec).work():
        z = to_mpc(z)
        return horner(p.phi, z), horner(p.phistar, z)


def phi_values(seq, z, N, prec=None):
    """Point values Phi_n(z), Phi_n^*(z) for n = 0..N via the scalar recursion."""
    prec = as_prec(prec)
    alphas = seq.alphas(N, prec)
    with prec.work():
        z = to_mpc(z)
        phi, star = mpmath.mpc(1), mpmath.mpc(1)
        out_phi, out_star = [phi], [star]
        for a in alphas:
            phi, star = z * phi - mpmath.conj(a) * star, star - a * z * phi
            out_phi.append(phi)
            out_star.append(star)
    return out_phi, out_star


def kappa_ladder(alphas, prec=None):
    """kappa_0..kappa_N from kappa_{n+1} = kappa_n (1 - |alpha_n|^2)^(-1/2)."""
    with as_prec(prec).work():
        k = mpmath.mpf(1)
        out = [k]
        for a in alphas:
            k = k / mpmath.sqrt(1 - abs(a) ** 2)
            out.append(k)
    return out


def family(name, prec=None, **params):
    """Build a sequence from a CLI-style family name."""
    name = name.replace("_", "-").lower()
    if name in ("rogers-szego", "rs"):
        return RogersSzego(params.get("q", 0.25))
    if name in ("single-moment", "sm"):
        return SingleMoment(params.get("a", 0.8))
    if name in ("zero", "free"):
        return zero_sequence()
    if name == "explicit":
        return Explicit.from_values(params.get("alphas", ()), prec)
    if name == "exponential":
        return ExponentialSequence(params["model"])
    raise ValueError("unknown family %r" % name)
