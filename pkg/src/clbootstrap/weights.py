"""Weight sequences and the closed-form threshold quantities derived from them.

A weight sequence assigns every vertex ``0..n-1`` a weight ``>= 1``; vertices are
always indexed in ascending weight order, so vertex ``i`` has weight
``ws.weights[i]``.  Everything here is a finite-n numeric: no asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class WeightError(ValueError):
    """Base class for invalid weight-sequence input."""


class EmptySequence(WeightError):
    pass


class WeightBelowOne(WeightError):
    pass


class InvalidParam(WeightError):
    pass


class TargetTooSmall(WeightError):
    pass


class InvalidRange(WeightError):
    pass


class EmptyBand(WeightError):
    pass


class MuTooSmall(WeightError):
    pass


class ConstantGuard(WeightError):
    """A theorem constant is outside its admissible range and no override was given."""


class DivergentRecursion(ArithmeticError):
    def __init__(self, message: str, index: int, witness: Optional[float]):
        super().__init__(message)
        self.index = index
        self.witness = witness


def fsum(values) -> float:
    """Compensated sum; power sums here span many orders of magnitude."""
    return math.fsum(np.asarray(values, dtype=float).tolist())


@dataclass(frozen=True, eq=False)
class WeightSequence:
    weights: np.ndarray
    total_weight: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    @property
    def lam(self) -> float:
        return self.total_weight / self.n

    @property
    def max_weight(self) -> float:
        return float(self.weights[-1])

    def __len__(self) -> int:
        return self.n

    def distinct(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct weight values (ascending) and the first vertex index holding each."""
        if "distinct" not in self._cache:
            vals, first = np.unique(self.weights, return_index=True)
            self._cache["distinct"] = (vals, first)
        return self._cache["distinct"]

    def suffix_power_sums(self, p: float) -> np.ndarray:
        """``out[i] = sum(w[j]**p for j >= i)``; ``out[n] = 0``.  Extended precision."""
        key = ("suffix", float(p))
        if key not in self._cache:
            powers = self.weights.astype(np.longdouble) ** p
            out = np.zeros(self.n + 1, dtype=np.longdouble)
            out[:-1] = np.cumsum(powers[::-1])[::-1]
            self._cache[key] = out
        return self._cache[key]

    def count_at_least(self, x: float) -> int:
        return self.n - int(np.searchsorted(self.weights, x, side="left"))

    def index_at_least(self, x: float) -> int:
        """First vertex index whose weight is ``>= x``."""
        return int(np.searchsorted(self.weights, x, side="left"))

    def band(self, lo: float, hi: float) -> np.ndarray:
        """Vertex indices with weight in ``[lo, hi)``."""
        return np.arange(self.index_at_least(lo), self.index_at_least(hi))


def make_sequence(weights: Sequence[float]) -> WeightSequence:
    arr = np.asarray(weights, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySequence("weight sequence is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidParam("weights must be finite")
    if np.any(arr < 1.0):
        raise WeightBelowOne(f"minimal weight {arr.min()!r} is below 1")
    arr = np.sort(arr)
    arr.setflags(write=False)
    return WeightSequence(weights=arr, total_weight=fsum(arr))


def gen_uniform(n: int, w: float = 1.0) -> WeightSequence:
    if n < 1:
        raise InvalidParam("n must be >= 1")
    return make_sequence(np.full(n, float(w)))


def gen_power_law(n: int, a: float, c: float = 1.0) -> WeightSequence:
    """``w_i = max(1, c * (n/i)**a)`` for ``i = 1..n``.

    ``a = 1/2`` puts the size-biased tail right at ``Theta(1/x)``; larger ``a``
    gives a heavier tail.
    """
    if n < 1:
        raise InvalidParam("n must be >= 1")
    if not 0.0 < a < 1.0:
        raise InvalidParam("exponent parameter a must lie in (0, 1)")
    if c <= 0:
        raise InvalidParam("scale c must be positive")
    i = np.arange(1, n + 1, dtype=float)
    return make_sequence(np.maximum(1.0, c * (n / i) ** a))


def _floor(x: float) -> int:
    # W**(2/3) etc. land a few ulps below integers (10**4 -> 9999.999...)
    return math.floor(x * (1.0 + 1e-12))


def example_bands(variant: str, W_target: float) -> list[tuple[float, int]]:
    """(weight, count) bands of the two-band example sequence, heaviest first."""
    variant = variant.upper()
    if variant not in ("A", "B"):
        raise InvalidParam(f"unknown example variant {variant!r}")
    top_exp = 7.0 / 12.0 if variant == "A" else 3.0 / 4.0
    top_w = W_target**top_exp
    top_k = _floor(W_target ** (1.0 / 9.0))
    mid_w = W_target ** (1.0 / 3.0)
    mid_k = _floor(W_target ** (2.0 / 3.0) / 20.0)
    ones = W_target - top_k * top_w - mid_k * mid_w
    if top_k < 1 or mid_k < 1 or ones < 1:
        raise TargetTooSmall(f"W_target={W_target!r} leaves an empty band")
    return [(top_w, top_k), (mid_w, mid_k), (1.0, int(round(ones)))]


def gen_example_sequence(variant: str, W_target: float) -> WeightSequence:
    """Three-band example: few very heavy vertices, a middle band, and weight-1 filler.

    Variant A uses heavy weight ``W**(7/12)``, variant B ``W**(3/4)``; the
    weight-1 count absorbs the rounding so the realised total is within one
    maximal weight of ``W_target``.
    """
    bands = example_bands(variant, W_target)
    parts = [np.full(k, w) for w, k in bands]
    return make_sequence(np.concatenate(parts))


def size_biased_tail(ws: WeightSequence, x: float) -> float:
    """``P[W* >= x]``: the weight fraction carried by vertices of weight ``>= x``."""
    i = ws.index_at_least(x)
    return float(ws.suffix_power_sums(1.0)[i] / ws.total_weight)


def heavy_bound(ws: WeightSequence, r: int) -> float:
    """Smallest real x with ``|V_{>=x}| >= (W / (4x^2))**r``; ``w_n + 1`` if none.

    The vertex count is constant on each interval ``(v_{j-1}, v_j]`` between
    consecutive distinct weights, so within it the condition reduces to
    ``x >= sqrt(W)/2 * k**(-1/(2r))``.  Candidates increase with ``j``, hence the
    first feasible interval gives the minimum.
    """
    if r < 2:
        raise InvalidParam("r must be >= 2")
    key = ("psi", r)
    if key in ws._cache:
        return ws._cache[key]
    vals, first = ws.distinct()
    counts = ws.n - first
    xstar = 0.5 * math.sqrt(ws.total_weight) * counts.astype(float) ** (-1.0 / (2 * r))
    feasible = np.nonzero(xstar <= vals)[0]
    if feasible.size == 0:
        psi = ws.max_weight + 1.0
    else:
        j = int(feasible[0])
        lower = float(vals[j - 1]) if j > 0 else 0.0
        psi = max(float(xstar[j]), lower)
    ws._cache[key] = psi
    return psi


def _light_power_sum(ws: WeightSequence, r: int, p: float) -> float:
    psi = heavy_bound(ws, r)
    return fsum(ws.weights[: ws.index_at_least(psi)] ** p)


def candidate_threshold_sparse(ws: WeightSequence, r: int) -> float:
    total = _light_power_sum(ws, r, r + 1)
    if total == 0.0:
        # every vertex is heavy: the sparse process has nothing to spread on
        return math.inf
    return (ws.total_weight / total) ** (1.0 / (r - 1))


def candidate_threshold_dense(ws: WeightSequence, r: int) -> Optional[float]:
    psi = heavy_bound(ws, r)
    if psi > ws.max_weight:
        return None
    heavy = ws.weights[ws.index_at_least(psi):]
    return (1.0 / fsum(heavy**r)) ** (1.0 / r)


@dataclass(frozen=True)
class ThresholdReport:
    r: int
    psi: float
    heavy_count: int
    p_sparse: float
    p_dense: Optional[float]
    a_c_scale: float
    dense_exists: bool

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "psi": self.psi,
            "heavy_count": self.heavy_count,
            "p_sparse": self.p_sparse,
            "p_dense": self.p_dense,
            "a_c_scale": self.a_c_scale,
            "dense_exists": self.dense_exists,
        }


def threshold_report(ws: WeightSequence, r: int) -> ThresholdReport:
    psi = heavy_bound(ws, r)
    ps = candidate_threshold_sparse(ws, r)
    pd = candidate_threshold_dense(ws, r)
    scale = ps if pd is None else min(ps, pd)
    return ThresholdReport(
        r=r,
        psi=psi,
        heavy_count=ws.count_at_least(psi),
        p_sparse=ps,
        p_dense=pd,
        a_c_scale=scale,
        dense_exists=pd is not None,
    )


def restricted_moment(ws: WeightSequence, a: float, b: float, theta: int) -> float:
    """Exact ``sum(w**theta for a <= w < b)``."""
    if not 0 < a < b:
        raise InvalidRange(f"need 0 < a < b, got a={a!r}, b={b!r}")
    if theta < 2:
        raise InvalidRange("theta must be >= 2")
    return fsum(ws.weights[ws.index_at_least(a): ws.index_at_least(b)] ** theta)


@dataclass(frozen=True)
class TailCheck:
    holds: bool
    witness: Optional[float] = None

    def __bool__(self) -> bool:
        return self.holds


def check_supercritical_tail(ws: WeightSequence, C: float, C1: float) -> TailCheck:
    """Does ``P[W* >= x] >= C/x`` hold for every ``x`` in ``[C1, w_n]``?

    The tail is constant on ``(v_{j-1}, v_j]`` while ``C/x`` decreases, so each
    interval is decided at its infimum.  The witness is the first such infimum
    where the inequality fails (approached from the right when it is a weight).
    """
    if C <= 0 or C1 <= 0:
        raise InvalidParam("C and C1 must be positive")
    if C1 > ws.max_weight:
        return TailCheck(True)
    vals, first = ws.distinct()
    tails = ws.suffix_power_sums(1.0)[first] / ws.total_weight
    lowers = np.concatenate(([0.0], vals[:-1]))
    live = vals >= C1
    lo = np.maximum(lowers[live], C1)
    bad = np.nonzero(tails[live].astype(float) < C / lo)[0]
    if bad.size == 0:
        return TailCheck(True)
    return TailCheck(False, float(lo[bad[0]]))


SUBCRITICAL_C_LIMIT = 1.0 / 30.0


def check_subcritical_tail(
    ws: WeightSequence, c: float, c1: float, h: float, override: bool = False
) -> TailCheck:
    """Does ``P[W* >= f] <= c/f`` hold for every ``f`` in ``[c1, h]``?

    On each interval ``(v_{j-1}, v_j]`` the tail is a constant ``T`` and the
    inequality fails exactly for ``f > c/T``, so the right ends (each weight
    value in range, and ``h``) decide the verdict.  The witness is the
    infimum of the first failing stretch.
    """
    if not 0 < c < SUBCRITICAL_C_LIMIT and not override:
        raise ConstantGuard(f"c={c!r} outside (0, 1/30); pass override=True to explore")
    if c <= 0 or c1 <= 0 or h <= 0:
        raise InvalidParam("c, c1 and h must be positive")
    if c1 > h:
        return TailCheck(True)
    vals, first = ws.distinct()
    tails = (ws.suffix_power_sums(1.0)[first] / ws.total_weight).astype(float)
    lowers = np.concatenate(([0.0], vals[:-1]))
    lo = np.maximum(lowers, c1)
    hi = np.minimum(vals, h)
    # nonempty: [c1, hi] when c1 is inside, else (v_{j-1}, hi]
    live = np.where(c1 > lowers, lo <= hi, hi > lowers)
    bad = np.nonzero(live & (tails > c / hi))[0]
    if bad.size == 0:
        return TailCheck(True)
    j = bad[0]
    return TailCheck(False, float(max(c / tails[j], lo[j])))


@dataclass(frozen=True)
class BreedingPlan:
    f0: float
    ground: np.ndarray
    ground_prime_size: int
    phi0: float
    mu: float

    def to_dict(self) -> dict:
        return {
            "f0": self.f0,
            "ground_size": int(self.ground.size),
            "ground_prime_size": self.ground_prime_size,
            "phi0": self.phi0,
            "mu": self.mu,
        }


def auxiliary_bound(ws: WeightSequence, r: int) -> float:
    """Largest weight value ``f < psi`` whose band ``[f, psi)`` carries half the light (r+1)-moment."""
    psi = heavy_bound(ws, r)
    light_end = ws.index_at_least(psi)
    if light_end == 0:
        raise EmptyBand("no vertex lies below the heavy bound")
    vals, first = ws.distinct()
    suffix = ws.suffix_power_sums(r + 1)
    band_sums = suffix[first] - suffix[light_end]
    total = suffix[0] - suffix[light_end]
    ok = np.nonzero((vals < psi) & (band_sums >= total / 2))[0]
    return float(vals[ok[-1]])


def fourth_moment_prefix(ws: WeightSequence, vertices: np.ndarray) -> np.ndarray:
    """Longest prefix of ``vertices`` whose fourth-power weight sum stays within ``9 W^2``."""
    fourth = np.cumsum(ws.weights[vertices] ** 4)
    # prefix sums are monotone, so the maximal admissible prefix is a cut
    keep = int(np.searchsorted(fourth, 9.0 * ws.total_weight**2, side="right"))
    return vertices[:keep]


def breeding_plan(ws: WeightSequence, r: int, p0: float) -> BreedingPlan:
    if r < 2:
        raise InvalidParam("r must be >= 2")
    if not 0 < p0 <= 1:
        raise InvalidParam("p0 must lie in (0, 1]")
    psi = heavy_bound(ws, r)
    f0 = auxiliary_bound(ws, r)
    start, stop = ws.index_at_least(f0), ws.index_at_least(psi)
    if stop <= start:
        raise EmptyBand(f"no vertex has weight in [{f0}, {psi})")
    prime = np.arange(start, stop, 2)
    if prime[-1] != stop - 1:
        prime = np.append(prime, stop - 1)
    ground = fourth_moment_prefix(ws, prime) if r == 2 else prime
    mu = p0 / candidate_threshold_sparse(ws, r)
    phi0 = min(f0, ws.n * p0 * mu**-0.5)
    return BreedingPlan(f0=f0, ground=ground, ground_prime_size=int(prime.size), phi0=phi0, mu=mu)


def nucleus_bound_sparse(
    ws: WeightSequence, r: int, mu: float, eta_exponent: float = 1.0 / 8.0
) -> float:
    if ws.n < r:
        raise InvalidParam("need at least r vertices")
    logmu = math.log(mu) if mu > 0 else -math.inf
    if logmu <= 0:
        raise MuTooSmall(f"log(mu) must be positive, got mu={mu!r}")
    psi_shrunk = heavy_bound(ws, r) * logmu**-0.25
    eta = logmu**eta_exponent
    hub_bound = ws.total_weight / float(ws.weights[ws.n - r])
    return hub_bound if psi_shrunk * eta > hub_bound else psi_shrunk


def nucleus_bound_dense(ws: WeightSequence, r: int, mu_d: float) -> tuple[Optional[float], str]:
    """Dense-case nucleus bound and which case produced it.

    Labels: ``"hub"`` (the r-th largest weight exceeds ``sqrt(W) log(mu)^(1/16)``),
    ``"heavy"`` (nucleus is the heavy set), ``"neither"`` (no case applies).
    """
    if mu_d <= 1:
        raise MuTooSmall(f"mu_d must exceed 1, got {mu_d!r}")
    if ws.n < r:
        raise InvalidParam("need at least r vertices")
    logmu = math.log(mu_d)
    root_w = math.sqrt(ws.total_weight)
    hub = float(ws.weights[ws.n - r])
    if hub > root_w * logmu ** (1.0 / 16.0):
        return ws.total_weight / hub, "hub"
    psi = heavy_bound(ws, r)
    if psi <= ws.max_weight and psi <= root_w * logmu ** (-1.0 / 8.0):
        return psi, "heavy"
    return None, "neither"


@dataclass(frozen=True)
class LayerPlan:
    psi_K: float
    C: float
    C1: float
    alpha: float
    C_prime: float
    bounds: list[float]
    deltas: list[float]
    epsilons: list[float]
    i_star: int

    def to_dict(self) -> dict:
        return {
            "psi_K": self.psi_K,
            "C": self.C,
            "C1": self.C1,
            "alpha": self.alpha,
            "C_prime": self.C_prime,
            "bounds": list(self.bounds),
            "deltas": list(self.deltas),
            "epsilons": list(self.epsilons),
            "i_star": self.i_star,
        }


def layer_constant_floor(r: int, alpha: float) -> float:
    return 64.0 * r * min(alpha, 0.5) ** -3


def layer_plan(
    ws: WeightSequence,
    r: int,
    C: float,
    C1: float,
    alpha: float,
    psi_K: float,
    override: bool = False,
) -> LayerPlan:
    """Layer weight-bounds ``psi_{i+1} = C' / P[W* >= psi_i]`` below a nucleus bound.

    Iterates while ``psi_i >= 2 max(C1, lambda)``.  Decrease of the bounds is
    only guaranteed under the supercritical tail condition; if a step fails to
    decrease, :class:`DivergentRecursion` carries the tail-check witness.
    """
    if alpha <= 0 or C1 <= 0 or psi_K <= 0:
        raise InvalidParam("alpha, C1 and psi_K must be positive")
    if C < layer_constant_floor(r, alpha) and not override:
        raise ConstantGuard(
            f"C={C!r} below 64 r min(alpha,1/2)^-3 = {layer_constant_floor(r, alpha)!r}"
        )
    c_prime = C * min(alpha, 0.5) / 2.0
    stop = 2.0 * max(C1, ws.lam)
    bounds = [min(psi_K, ws.total_weight / ws.max_weight)]
    while bounds[-1] >= stop:
        tail = size_biased_tail(ws, bounds[-1])
        nxt = c_prime / tail if tail > 0 else math.inf
        if nxt >= bounds[-1]:
            check = check_supercritical_tail(ws, C, C1)
            raise DivergentRecursion(
                f"layer bound did not decrease at step {len(bounds)} "
                f"({bounds[-1]!r} -> {nxt!r}); tail condition witness {check.witness!r}",
                index=len(bounds),
                witness=check.witness,
            )
        bounds.append(nxt)
    i_star = len(bounds) - 1
    ratio = c_prime / C
    deltas = [0.25 * ratio**i for i in range(i_star + 2)]
    epsilons = np.cumsum(deltas).tolist()
    return LayerPlan(
        psi_K=psi_K,
        C=C,
        C1=C1,
        alpha=alpha,
        C_prime=c_prime,
        bounds=bounds,
        deltas=deltas,
        epsilons=epsilons,
        i_star=i_star,
    )
