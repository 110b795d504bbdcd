"""Precision handling and the series engine.

All arithmetic is done with mpmath at an explicit working precision.  Series
carry a ``floor``: the magnitude below which a coefficient is treated as
numerically zero.
"""
import csv
import functools
import io
import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import (SampleEvaluationError, WindowBelowFloor, WindowTooShort,
                     ZeroConstantTerm)

mp = mpmath.mp

GUARD_BITS = 32
DEFAULT_BITS = 256


@dataclass(frozen=True)
class Prec:
    """Working precision in bits."""
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 64:
            raise ValueError("precision must be an integer >= 64 bits")

    def work(self):
        """Context manager setting the mpmath working precision."""
        return mp.workprec(self.bits)

    @property
    def eps(self):
        """Relative noise level 2^-(bits - guard)."""
        return mpmath.ldexp(mpmath.mpf(1), -(self.bits - GUARD_BITS))

    def floor_for(self, magnitude=1):
        return self.eps * max(mpmath.mpf(1), mpmath.mpf(magnitude))

    @property
    def dps(self):
        """Decimal digits needed for a bit-exact decimal round trip."""
        return int(self.bits * math.log10(2)) + 3


def as_prec(prec):
    if prec is None:
        return Prec()
    if isinstance(prec, Prec):
        return prec
    return Prec(int(prec))


def to_mpf(x):
    """Real number at current precision; floats go through their decimal repr."""
    if isinstance(x, float):
        return mpmath.mpf(repr(x))
    return mpmath.mpf(x)


def to_mpc(x):
    """Complex number at current precision.

    Accepts numbers, mpmath values, ``(re, im)`` pairs and strings such as
    ``"4+0i"`` or ``"-1.5e-3-2j"``.
    """
    if isinstance(x, (tuple, list)):
        re, im = x
        return mpmath.mpc(_real_from(re), _real_from(im))
    if isinstance(x, str):
        return parse_complex(x)
    if isinstance(x, complex):
        return mpmath.mpc(to_mpf(x.real), to_mpf(x.imag))
    if isinstance(x, float):
        return mpmath.mpc(to_mpf(x))
    return mpmath.mpc(x)


def _real_from(x):
    if isinstance(x, str):
        return mpmath.mpf(x.strip())
    return to_mpf(x)


def parse_complex(text):
    s = text.strip().replace(" ", "").replace("I", "i").replace("j", "i")
    if not s:
        raise ValueError("empty complex literal")
    if not s.endswith("i"):
        return mpmath.mpc(mpmath.mpf(s))
    body = s[:-1]
    # split at the last sign that is not part of an exponent
    cut = None
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "eE":
            cut = k
            break
    if cut is None:
        im = body if body not in ("", "+", "-") else body + "1"
        return mpmath.mpc(0, mpmath.mpf(im))
    re, im = body[:cut], body[cut:]
    if im in ("+", "-"):
        im += "1"
    return mpmath.mpc(mpmath.mpf(re), mpmath.mpf(im))


def max_abs(values):
    return max((abs(v) for v in values), default=mpmath.mpf(0))


@dataclass(frozen=True)
class PowerSeries:
    """Taylor coefficients c_0..c_N with precision metadata."""
    coeffs: tuple
    prec: Prec = Prec()
    floor: object = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("a power series needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        lowest = self.prec.eps
        if self.floor is None:
            with self.prec.work():
                fl = self.prec.floor_for(max_abs(self.coeffs))
            object.__setattr__(self, "floor", fl)
        elif self.floor < lowest:
            object.__setattr__(self, "floor", lowest)

    @classmethod
    def from_values(cls, values, prec=None, floor=None, meta=None):
        prec = as_prec(prec)
        with prec.work():
            coeffs = tuple(+to_mpc(v) for v in values)
        return cls(coeffs, prec, floor, dict(meta or {}))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n):
        return self.coeffs[n]

    def truncate(self, degree):
        return PowerSeries(self.coeffs[:degree + 1], self.prec, self.floor, dict(self.meta))

    def __call__(self, z):
        with self.prec.work():
            return horner(self.coeffs, to_mpc(z))

    def on_circle(self, rho, M):
        """Values at rho*exp(2 pi i k/M), k = 0..M-1, via one FFT."""
        return eval_on_circle(self.coeffs, rho, M, self.prec)


@dataclass(frozen=True)
class LaurentSlice:
    """Laurent coefficients b_n for n = n_min..n_max."""
    coeffs: tuple
    n_min: int
    prec: Prec = Prec()
    floor: object = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if self.floor is None:
            with self.prec.work():
                fl = self.prec.floor_for(max_abs(self.coeffs))
            object.__setattr__(self, "floor", fl)

    @property
    def n_max(self):
        return self.n_min + len(self.coeffs) - 1

    def __getitem__(self, n):
        if not self.n_min <= n <= self.n_max:
            raise IndexError(n)
        return self.coeffs[n - self.n_min]

    def indices(self):
        return range(self.n_min, self.n_max + 1)

    def floor_at(self, n):
        """Noise level of b_n; sampled slices scale the sample floor by rho^-n."""
        rho = self.meta.get("rho")
        if rho is None or self.meta.get("path") == "convolution":
            return self.floor
        with self.prec.work():
            return self.floor * mpmath.mpf(rho) ** (-n)

    def positive_magnitudes(self):
        """[|b_0|, |b_1|, ..., |b_nmax|] (zero for indices below n_min)."""
        with self.prec.work():
            return [abs(self[n]) if n >= self.n_min else mpmath.mpf(0)
                    for n in range(0, self.n_max + 1)]


def horner(coeffs, z):
    acc = mpmath.mpc(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


# -- series arithmetic -------------------------------------------------------

def series_mul(a, b):
    """Cauchy product truncated to the smaller degree."""
    if a.prec != b.prec:
        raise ValueError("series precisions differ")
    N = min(a.degree, b.degree)
    with a.prec.work():
        ac, bc = a.coeffs, b.coeffs
        out = [mpmath.fdot(ac[:n + 1], bc[n::-1]) for n in range(N + 1)]
        bound_a = mpmath.fsum(abs(c) for c in ac[:N + 1])
        bound_b = mpmath.fsum(abs(c) for c in bc[:N + 1])
        floor = max(a.floor * bound_b, b.floor * bound_a, a.prec.floor_for(max_abs(out)))
    return PowerSeries(tuple(out), a.prec, floor)


def series_recip(a):
    """Reciprocal power series 1/a to the same degree."""
    with a.prec.work():
        if abs(a.coeffs[0]) <= a.floor:
            raise ZeroConstantTerm("constant term is below the series floor",
                                   constant=mpmath.nstr(abs(a.coeffs[0]), 5))
        inv0 = 1 / a.coeffs[0]
        ac = a.coeffs
        out = [inv0]
        for n in range(1, len(ac)):
            s = mpmath.fdot(ac[1:n + 1], out[n - 1::-1])
            out.append(-s * inv0)
        scale = max_abs(out) * max(mpmath.mpf(1), abs(inv0))
        floor = max(a.floor * scale, a.prec.floor_for(max_abs(out)))
    return PowerSeries(tuple(out), a.prec, floor)


# -- FFT and circle sampling ---------------------------------------------------

def _check_pow2(M):
    if M < 1 or M & (M - 1):
        raise ValueError("sample count must be a power of two, got %r" % (M,))


@functools.lru_cache(maxsize=16)
def _roots_of_unity(M, bits):
    with mp.workprec(bits + 16):
        roots = [mpmath.mpc(mpmath.cospi(mpmath.mpf(2 * k) / M),
                            mpmath.sinpi(mpmath.mpf(2 * k) / M)) for k in range(M)]
    with mp.workprec(bits):
        return tuple(+w for w in roots)


def fft(values, prec, sign=-1):
    """Unnormalized DFT: out[n] = sum_k values[k] exp(sign*2 pi i k n/M)."""
    M = len(values)
    _check_pow2(M)
    prec = as_prec(prec)
    roots = _roots_of_unity(M, prec.bits)
    with prec.work():
        bitsM = M.bit_length() - 1
        a = [None] * M
        for k in range(M):
            r = int(format(k, "0%db" % bitsM)[::-1], 2) if bitsM else 0
            a[r] = mpmath.mpc(values[k])
        size = 2
        while size <= M:
            half, step = size // 2, M // size
            tw = [roots[(j * step) % M] if sign > 0 else roots[(-j * step) % M]
                  for j in range(half)]
            for start in range(0, M, size):
                for j in range(half):
                    u = a[start + j]
                    v = a[start + j + half] * tw[j]
                    a[start + j] = u + v
                    a[start + j + half] = u - v
            size *= 2
        return a


def eval_on_circle(coeffs, rho, M, prec):
    """Polynomial values at rho*w^k (w = exp(2 pi i/M)) by folding and one FFT."""
    _check_pow2(M)
    prec = as_prec(prec)
    with prec.work():
        rho = to_mpf(rho)
        folded = [mpmath.mpc(0)] * M
        scale = mpmath.mpf(1)
        for n, c in enumerate(coeffs):
            folded[n % M] += c * scale
            scale *= rho
    return fft(folded, prec, sign=+1)


def circle_samples(f, rho, M, prec=None):
    """[f(rho*exp(2 pi i k/M)) for k = 0..M-1]."""
    _check_pow2(M)
    prec = as_prec(prec)
    with prec.work():
        rho = to_mpf(rho)
        if rho <= 0:
            raise ValueError("radius must be positive")
        roots = _roots_of_unity(M, prec.bits)
        out = []
        for k in range(M):
            try:
                out.append(mpmath.mpc(f(rho * roots[k])))
            except Exception as exc:  # report which node failed
                raise SampleEvaluationError("evaluation failed at node %d: %s" % (k, exc),
                                            k=k, cause=type(exc).__name__) from exc
    return out


def laurent_from_samples(samples, rho, prec=None):
    """Laurent coefficients b_n, |n| <= M/2 - 1, from samples on |z| = rho."""
    M = len(samples)
    _check_pow2(M)
    if M < 4:
        raise ValueError("need at least 4 samples")
    prec = as_prec(prec)
    raw = fft(samples, prec, sign=-1)
    with prec.work():
        rho = to_mpf(rho)
        h = M // 2 - 1
        coeffs = []
        for n in range(-h, h + 1):
            coeffs.append(raw[n % M] / M * rho ** (-n))
        # aliasing: energy left in the highest eighth of the frequency band
        band = max(1, M // 16)
        tail = max(abs(raw[k % M]) / M for k in list(range(h - band + 1, h + 2)) + list(range(-h, -h + band)))
        smax = max_abs(samples)
        floor = prec.floor_for(smax) if smax > 0 else prec.eps
    meta = {"M": M, "rho": rho, "alias_tail": tail, "path": "samples"}
    return LaurentSlice(tuple(coeffs), -h, prec, floor, meta)


# -- rate fitting --------------------------------------------------------------

@dataclass(frozen=True)
class RateEstimate:
    """Geometric decay rate of a sequence, fitted on log magnitudes."""
    rate: float
    stderr: float
    window: tuple

    @property
    def radius(self):
        return math.inf if self.rate == 0 else 1.0 / self.rate

    @property
    def radius_stderr(self):
        return math.inf if self.rate == 0 else self.stderr / self.rate ** 2

    def as_dict(self):
        return {"rate": self.rate, "stderr": self.stderr, "window": list(self.window),
                "radius": self.radius}


MIN_WINDOW = 8


def auto_window(c, floor=0, start=5):
    """Longest run of entries above 10*floor at or after ``start`` (inclusive bounds)."""
    best, cur = None, None
    thresh = 10 * floor
    for n in range(start, len(c)):
        if c[n] > thresh:
            cur = (cur[0], n) if cur else (n, n)
            if best is None or cur[1] - cur[0] > best[1] - best[0]:
                best = cur
        else:
            cur = None
    return best


def fit_decay_rate(c, window=None, floor=0):
    """Least-squares slope of log|c_n| against n, exponentiated.

    ``window`` is an inclusive index pair; by default the longest run above
    10*floor after index 5 is used.
    """
    mags = [abs(x) for x in c]
    if window is None:
        window = auto_window(mags, floor)
        if window is None:
            raise WindowBelowFloor("no entries above the floor after index 5")
    lo, hi = int(window[0]), int(window[1])
    if hi - lo + 1 < MIN_WINDOW:
        raise WindowTooShort("window %d..%d has fewer than %d entries" % (lo, hi, MIN_WINDOW),
                             window=[lo, hi])
    if hi >= len(mags) or lo < 0:
        raise WindowTooShort("window %d..%d exceeds the data" % (lo, hi), window=[lo, hi])
    below = [n for n in range(lo, hi + 1) if not mags[n] > floor]
    if below:
        raise WindowBelowFloor("entry %d is at or below the floor" % below[0], index=below[0])
    x = np.arange(lo, hi + 1, dtype=float)
    y = np.array([float(mpmath.log(mags[n])) for n in range(lo, hi + 1)])
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xm
    dof = len(x) - 2
    se = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else math.inf
    rate = math.exp(slope)
    return RateEstimate(rate, rate * se, (lo, hi))


# -- serialization -------------------------------------------------------------

def num_str(x, prec):
    prec = as_prec(prec)
    with prec.work():
        return mpmath.nstr(mpmath.mpf(x), prec.dps, strip_zeros=False, min_fixed=1, max_fixed=0)


def cnum_pair(z, prec):
    with as_prec(prec).work():
        z = mpmath.mpc(z)
    return [num_str(z.real, prec), num_str(z.imag, prec)]


def series_to_csv(coeffs, prec, n_min=0):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "re", "im"])
    for k, c in enumerate(coeffs):
        re, im = cnum_pair(c, prec)
        w.writerow([n_min + k, re, im])
    return buf.getvalue()


def series_to_records(coeffs, prec, n_min=0):
    return [{"n": n_min + k, "re": p[0], "im": p[1]}
            for k, p in enumerate(cnum_pair(c, prec) for c in coeffs)]


def _records_to_coeffs(records, prec):
    prec = as_prec(prec)
    rows = sorted((int(r["n"]), str(r["re"]), str(r["im"])) for r in records)
    if not rows:
        raise ValueError("no coefficients")
    n_min = rows[0][0]
    if [r[0] for r in rows] != list(range(n_min, n_min + len(rows))):
        raise ValueError("coefficient indices are not contiguous")
    with prec.work():
        coeffs = tuple(mpmath.mpc(mpmath.mpf(re), mpmath.mpf(im)) for _, re, im in rows)
    return coeffs, n_min


def series_from_csv(text, prec=None):
    """Parse an n,re,im CSV into (coeffs, n_min)."""
    reader = csv.DictReader(io.StringIO(text))
    return _records_to_coeffs(list(reader), prec)


def series_from_json(text, prec=None):
    data = json.loads(text)
    if isinstance(data, dict):
        data = data.get("coeffs", data.get("records"))
    return _records_to_coeffs(data, prec)


def dump_series(obj, fmt="csv"):
    """Serialize a PowerSeries or LaurentSlice."""
    n_min = getattr(obj, "n_min", 0)
    if fmt == "csv":
        return series_to_csv(obj.coeffs, obj.prec, n_min)
    return json.dumps(series_to_records(obj.coeffs, obj.prec, n_min), indent=1) + "\n"


def load_power_series(text, prec=None, fmt=None):
    prec = as_prec(prec)
    fmt = fmt or ("json" if text.lstrip().startswith(("[", "{")) else "csv")
    coeffs, n_min = (series_from_json if fmt == "json" else series_from_csv)(text, prec)
    if n_min != 0:
        raise ValueError("power series must start at n = 0")
    return PowerSeries(coeffs, prec)
