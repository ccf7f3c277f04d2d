"""
Exact integer machinery behind the sunflower bounds: falling factorials,
the size function gamma of the N_beta construction and its generalized
inverse, the Erdős–Rado bound, the bound of the main construction, and the
synthesis of beta from a slowly growing alpha.
"""

import bisect
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

from algsunflower.errors import (
    CertificateFailure,
    HorizonExceeded,
    NotMonotone,
    PreconditionViolation,
)

logger = logging.getLogger(__name__)

PROBE_LIMIT = 1 << 62


def seqsize(n: int, k: int) -> int:
    """Number of non-repeating sequences of length k over n elements."""
    if n < 0 or k < 0:
        raise PreconditionViolation(f"seqsize needs nonnegative arguments, got ({n}, {k})")
    return math.perm(n, k)


@dataclass(frozen=True)
class BetaFn:
    """beta(1), ..., beta(H): cycle lengths indexed by tuple length."""

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise PreconditionViolation("beta needs at least one value")
        if values[0] < 3:
            raise PreconditionViolation(f"beta(1) must be at least 3, got {values[0]}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise PreconditionViolation(f"beta must be strictly increasing: {list(values)}")

    @classmethod
    def parse(cls, spec: str) -> "BetaFn":
        try:
            return cls(tuple(int(v) for v in spec.replace(" ", "").split(",") if v))
        except ValueError as e:
            raise PreconditionViolation(f"malformed beta {spec!r}") from e

    @property
    def horizon(self) -> int:
        return len(self.values)

    def __call__(self, m: int) -> int:
        if not 1 <= m <= self.horizon:
            raise HorizonExceeded(f"beta({m}) is outside the horizon 1..{self.horizon}")
        return self.values[m - 1]

    @cached_property
    def gammas(self) -> tuple[int, ...]:
        return tuple(
            sum(seqsize(m, j) * self(j) for j in range(1, m + 1))
            for m in range(self.horizon + 1)
        )

    def to_json(self) -> list[int]:
        return list(self.values)


def gamma(beta: BetaFn, m: int) -> int:
    """Size of the N_beta substructure whose base has m atoms."""
    if m < 0:
        raise PreconditionViolation(f"base cardinality must be nonnegative, got {m}")
    if m > beta.horizon:
        raise HorizonExceeded(f"gamma({m}) needs beta beyond horizon {beta.horizon}")
    return beta.gammas[m]


def gamma_circ(beta: BetaFn, t: int) -> int:
    """Least m with gamma(m) >= t."""
    if t <= 0:
        return 0
    if t > beta.gammas[-1]:
        raise HorizonExceeded(f"gamma never reaches {t} within horizon {beta.horizon}")
    return bisect.bisect_left(beta.gammas, t)


def gamma_floor(beta: BetaFn, t: int) -> int:
    """Greatest m with gamma(m) <= t."""
    if t < 0:
        raise PreconditionViolation(f"size bound must be nonnegative, got {t}")
    if t > beta.gammas[-1]:
        raise HorizonExceeded(f"sizes above {beta.gammas[-1]} need beta beyond horizon {beta.horizon}")
    return bisect.bisect_right(beta.gammas, t) - 1


def er_bound(n: int, k: int) -> int:
    if n < 1 or k < 0:
        raise PreconditionViolation(f"er_bound needs n >= 1 and k >= 0, got ({n}, {k})")
    return math.factorial(k) * (n - 1) ** k


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    """
    A nondecreasing, divergent map from nonnegative integers to nonnegative
    integers, evaluated lazily. `spec` is the catalog string it was built
    from and is what certificates record.
    """

    spec: str
    fn: Callable[[int], int] = field(repr=False)
    _memo: dict[int, int] = field(default_factory=dict, init=False, repr=False)

    def __call__(self, k: int) -> int:
        if k < 0:
            raise PreconditionViolation(f"{self.spec} evaluated at negative {k}")
        try:
            return self._memo[k]
        except KeyError:
            value = self._memo[k] = int(self.fn(k))
            if value < 0:
                raise NotMonotone(f"{self.spec} is negative at {k}") from None
            return value

    @classmethod
    def affine(cls, a: int, b: int) -> "MonotoneMap":
        if a < 1 or b < 0:
            raise NotMonotone(f"affine map {a}k+{b} is not divergent and nonnegative")
        return cls(f"affine:{a},{b}", lambda k: a * k + b)

    @classmethod
    def polynomial(cls, coefficients: Sequence[int]) -> "MonotoneMap":
        coefficients = tuple(coefficients)
        if any(c < 0 for c in coefficients) or not any(coefficients[1:]):
            raise NotMonotone(f"polynomial {list(coefficients)} is not divergent and nondecreasing")
        spec = "poly:" + ",".join(map(str, coefficients))
        return cls(spec, lambda k: sum(c * k**i for i, c in enumerate(coefficients)))

    @classmethod
    def table(cls, values: Sequence[int], slope: int = 1) -> "MonotoneMap":
        values = tuple(values)
        if not values:
            raise NotMonotone("empty table")
        if any(b < a for a, b in zip(values, values[1:])):
            raise NotMonotone(f"table {list(values)} decreases")
        if slope < 1:
            raise NotMonotone(f"table {list(values)} is constant beyond its last entry")
        last = len(values) - 1

        def fn(k: int) -> int:
            if k <= last:
                return values[k]
            return values[last] + slope * (k - last)

        return cls("table:" + ",".join(map(str, values)) + f";{slope}", fn)

    @classmethod
    def parse(cls, spec: str) -> "MonotoneMap":
        kind, _, args = spec.replace(" ", "").partition(":")
        try:
            if kind == "affine":
                a, b = (int(v) for v in args.split(","))
                return cls.affine(a, b)
            if kind == "poly":
                return cls.polynomial([int(v) for v in args.split(",")])
            if kind == "table":
                values, _, slope = args.partition(";")
                return cls.table([int(v) for v in values.split(",")], int(slope or 1))
        except ValueError as e:
            if isinstance(e, NotMonotone):
                raise
            raise PreconditionViolation(f"malformed map {spec!r}") from e
        raise PreconditionViolation(f"unknown map kind {kind!r} in {spec!r}")


def thm_bound(alpha: MonotoneMap, n: int, k: int) -> int:
    a = alpha(k)
    return a * (n - 1) ** a


def alpha_circ(alpha: MonotoneMap, t: int) -> int:
    """Least k with alpha(k) >= t, by galloping then bisection."""
    if alpha(0) >= t:
        return 0
    lo, hi = 0, 1
    while alpha(hi) < t:
        if alpha(hi) < alpha(lo):
            raise NotMonotone(f"{alpha.spec} decreases between {lo} and {hi}")
        lo, hi = hi, hi * 2
        if hi > PROBE_LIMIT:
            raise HorizonExceeded(f"{alpha.spec} does not reach {t} below {PROBE_LIMIT}")
    if alpha(hi) < alpha(lo):
        raise NotMonotone(f"{alpha.spec} decreases between {lo} and {hi}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if alpha(mid) >= t:
            hi = mid
        else:
            lo = mid
    return hi


def derived_sf_bound(beta: BetaFn, n: int, k: int, *, strict: bool = False) -> int:
    """
    m!(n-1)^(m!) with m = gamma_circ(beta, k). With `strict` the Erdős–Rado
    "more than" form is used, which adds one and holds for every m.
    """
    f = math.factorial(gamma_circ(beta, k))
    return f * (n - 1) ** f + (1 if strict else 0)


@dataclass(frozen=True)
class BetaCertificate:
    alpha: str
    beta: BetaFn
    checked_k: int
    ok: bool = True

    @property
    def horizon(self) -> int:
        return self.beta.horizon

    def to_json(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "beta": self.beta.to_json(),
            "horizon": self.horizon,
            "checked_k": self.checked_k,
            "ok": self.ok,
        }


def check_certificate(alpha: MonotoneMap, beta: BetaFn, checked_k: int) -> BetaCertificate:
    """
    Verify gamma_circ(beta, k)! <= alpha(k) for every k <= checked_k. Gamma is
    recomputed here by direct summation so the check does not share code
    with synthesis.
    """
    sizes = [0]
    for m in range(1, beta.horizon + 1):
        sizes.append(sum(math.perm(m, j) * beta.values[j - 1] for j in range(1, m + 1)))
        if sizes[-1] <= sizes[-2]:
            raise CertificateFailure(0, f"gamma is not increasing at {m}")
    m = 0
    for k in range(checked_k + 1):
        while sizes[m] < k:
            m += 1
            if m > beta.horizon:
                raise CertificateFailure(k, f"gamma({beta.horizon}) = {sizes[-1]} < {k}")
        if math.factorial(m) > alpha(k):
            raise CertificateFailure(k, f"{m}! > alpha({k}) = {alpha(k)}")
    logger.info("certificate ok: %s, beta=%s, k <= %d", alpha.spec, list(beta.values), checked_k)
    return BetaCertificate(alpha.spec, beta, checked_k)


def synth_beta(alpha: MonotoneMap, checked_k: int) -> BetaCertificate:
    """
    beta(m) = max(beta(m-1) + 1, alpha_circ(alpha, (m+1)!)), extended until
    gamma covers every k <= checked_k, then certified.
    """
    if alpha(0) < 3:
        raise PreconditionViolation(f"alpha(0) must be at least 3, got {alpha(0)}")
    values: list[int] = []
    while True:
        m = len(values) + 1
        floor = values[-1] + 1 if values else 3
        values.append(max(floor, alpha_circ(alpha, math.factorial(m + 1))))
        beta = BetaFn(tuple(values))
        if gamma(beta, m) >= checked_k:
            break
    logger.debug("synthesized beta %s for %s", values, alpha.spec)
    return check_certificate(alpha, beta, checked_k)


def corollary_alpha(alpha: MonotoneMap, n: int) -> MonotoneMap:
    """
    The largest x >= 3 with x(n-1)^x <= alpha(k), so that a beta synthesized
    from the result bounds the n-sunflower number by alpha itself.
    """
    if n <= 2:
        return alpha
    if alpha(0) < 3 * (n - 1) ** 3:
        raise PreconditionViolation(
            f"alpha(0) = {alpha(0)} is below 3(n-1)^3 = {3 * (n - 1) ** 3}"
        )

    def fn(k: int) -> int:
        target = alpha(k)
        x = 3
        while (x + 1) * (n - 1) ** (x + 1) <= target:
            x += 1
        return x

    return MonotoneMap(f"corollary:{n}:{alpha.spec}", fn)
