"""Generated sets: odd products lambda_1..lambda_k conj(lambda_{k+1})..conj(lambda_{2k-1}).

Points are held as Python complex numbers; two points are identified when
they differ by at most merge_eps * max(1, |z|).
"""
import cmath
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

from .errors import NotGenerated

DEFAULT_EPS = 1e-9


def canonical_key(z):
    return (abs(z), cmath.phase(z))


def _close(a, b, eps):
    return abs(a - b) <= eps * max(1.0, abs(a), abs(b))


def _merge(points, eps):
    """Sort canonically and collapse near-duplicates; returns (points, merges)."""
    out, merges = [], 0
    for z in sorted(points, key=canonical_key):
        # candidates can only be among the last few kept points of similar modulus
        hit = False
        for w in reversed(out):
            if abs(w) < abs(z) - eps * max(1.0, abs(z)) - 1e-300:
                break
            if _close(w, z, eps):
                hit = True
                break
        if hit:
            merges += 1
        else:
            out.append(z)
    return out, merges


@dataclass(frozen=True)
class ExteriorSet:
    """Finite set of points with 1 < |z| < radius_cut."""
    points: tuple
    radius_cut: float
    merge_eps: float = DEFAULT_EPS
    merges: int = field(default=0, compare=False)

    def __post_init__(self):
        pts = tuple(complex(z) for z in self.points)
        for z in pts:
            if not abs(z) > 1:
                raise ValueError("exterior sets need |z| > 1, got %r" % z)
            if not abs(z) < self.radius_cut:
                raise ValueError("point %r is not inside the truncation radius" % z)
        merged, n = _merge(pts, self.merge_eps)
        object.__setattr__(self, "points", tuple(merged))
        object.__setattr__(self, "merges", self.merges + n)

    @classmethod
    def build(cls, points, radius_cut, merge_eps=DEFAULT_EPS):
        """Drop points at or beyond the truncation radius, then merge."""
        pts = [complex(z) for z in points]
        return cls(tuple(z for z in pts if abs(z) < radius_cut), radius_cut, merge_eps)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def contains(self, z, eps=None):
        eps = self.merge_eps if eps is None else eps
        return any(_close(w, complex(z), eps) for w in self.points)

    def issubset(self, other, eps=None):
        return all(other.contains(z, eps) for z in self.points)

    def same_points(self, other, eps=None):
        return self.issubset(other, eps) and other.issubset(self, eps)

    def conj(self):
        return ExteriorSet(tuple(z.conjugate() for z in self.points), self.radius_cut, self.merge_eps)

    def union(self, other):
        return ExteriorSet(self.points + tuple(other.points), self.radius_cut, self.merge_eps)

    def to_dict(self):
        return {"points": [[z.real, z.imag] for z in self.points], "rmax": self.radius_cut,
                "eps": self.merge_eps, "merges": self.merges}

    @classmethod
    def from_dict(cls, data, rmax=None, eps=None):
        pts = [complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p) for p in data["points"]]
        rmax = rmax if rmax is not None else float(data.get("rmax", math.inf))
        eps = eps if eps is not None else float(data.get("eps", DEFAULT_EPS))
        return cls.build(pts, rmax, eps)


def _products(values, count, limit):
    """All products of multisets of size ``count`` from values with |product| < limit."""
    vals = sorted(values, key=abs)
    mods = [abs(v) for v in vals]
    if count == 0:
        yield 1 + 0j
        return
    if not vals:
        return

    def walk(first, left, mod, prod):
        if left == 0:
            yield prod
            return
        for i in range(first, len(vals)):
            # moduli ascend and all exceed 1, so later indices only grow the product
            if mod * mods[i] ** left >= limit:
                break
            yield from walk(i, left - 1, mod * mods[i], prod * vals[i])

    yield from walk(0, count, 1.0, 1 + 0j)


def g_layer(T, k):
    """Layer with k plain and k-1 conjugated factors, truncated at T.radius_cut."""
    if k < 1:
        raise ValueError("layer index must be >= 1")
    pts = list(T.points)
    if not pts:
        return ExteriorSet((), T.radius_cut, T.merge_eps)
    rmax = T.radius_cut
    lo = min(abs(z) for z in pts)
    if lo ** (2 * k - 1) >= rmax:
        return ExteriorSet((), rmax, T.merge_eps)
    out = []
    barred = [z.conjugate() for z in pts]
    bar_products = sorted(_products(barred, k - 1, rmax / lo ** k), key=abs)
    for p in _products(pts, k, rmax / lo ** (k - 1)):
        for b in bar_products:
            z = p * b
            if abs(z) >= rmax:
                break
            out.append(z)
    return ExteriorSet(tuple(out), rmax, T.merge_eps)


def layer_count(T):
    """Number of layers that can contribute below the truncation radius."""
    if not T.points:
        return 0
    lo = min(abs(z) for z in T.points)
    if not lo > 1:
        raise ValueError("minimum modulus must exceed 1")
    k = 1
    while lo ** (2 * k + 1) < T.radius_cut:
        k += 1
    return k


def g_full(T, first_layer=1):
    """Union of all layers from ``first_layer`` on (1: the generated set; 2: products of >= 3 factors)."""
    pts = []
    merges = 0
    for k in range(first_layer, layer_count(T) + 1):
        layer = g_layer(T, k)
        pts.extend(layer.points)
        merges += layer.merges
    out = ExteriorSet(tuple(pts), T.radius_cut, T.merge_eps)
    return ExteriorSet(out.points, T.radius_cut, T.merge_eps, merges=out.merges + merges)


def g3(T):
    """Products with at least three factors."""
    return g_full(T, first_layer=2)


def minimal_generators(Q):
    """Minimal W with g_full(W) = Q and no point of W a product of >= 3 points of W."""
    if not g_full(Q).same_points(Q):
        raise NotGenerated("the set is not closed under generation", size=len(Q))
    kept = []
    for w in Q.points:  # canonical order: ascending modulus, then argument
        if kept:
            prev = ExteriorSet(tuple(kept), Q.radius_cut, Q.merge_eps)
            if g3(prev).contains(w):
                continue
        kept.append(w)
    return ExteriorSet(tuple(kept), Q.radius_cut, Q.merge_eps)


def g3_membership(z0, T):
    """Factorizations z0 = a*b*conj(c) over T, with (a, b) unordered."""
    z0 = complex(z0)
    pts = list(T.points)
    found = []
    for i in range(len(pts)):
        for j in range(i, len(pts)):
            for c in pts:
                if _close(pts[i] * pts[j] * c.conjugate(), z0, T.merge_eps):
                    found.append((pts[i], pts[j], c))
    return {"count": len(found), "factorizations": found}
