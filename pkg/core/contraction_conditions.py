"""
Contraction conditions as checkable predicates over point pairs.

Every interpolative condition compares d(Tx, Ty) (or d(Tx, Sy) for a pair of maps)
against tau times a product of fractional powers of metric values. Pairs in which an
argument is a fixed point of its map are vacuous: the conditions exclude them.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, InstanceOf, model_validator
from tqdm import tqdm

from core import settings
from core.cstar_algebra import (
    AlgebraDescriptor,
    AlgebraElement,
    OrderResult,
    OrderVerdict,
    add,
    frac_power,
    leq,
    multiply,
    norm,
    random_positive,
    scale,
    subtract,
)
from core.exceptions import DomainExit
from core.metric_spaces import EXHAUSTIVE_LIMIT, DomainDescriptor, MetricSpaceInstance, Point, verify_axioms
from models.schemas import ComparisonMode, ConditionKind, ReichVariant


@dataclass(frozen=True, eq=False)
class SelfMap:
    name: str
    apply: Callable[[Point], Point]
    domain: DomainDescriptor

    def image(self, x: Point) -> tuple[Point, bool]:
        """T(x) and whether it stays in the domain."""
        y = self.domain.coerce(self.apply(x))
        return y, self.domain.contains(y)

    def __call__(self, x: Point) -> Point:
        y, inside = self.image(x)
        if not inside:
            raise DomainExit(self.name, self.domain.to_json(x), self.domain.to_json(y))
        return y


@dataclass(frozen=True, eq=False)
class AlteringDistance:
    """A function on the positive cone: an altering distance phi or a control function psi."""

    name: str
    fn: Callable[[AlgebraElement], AlgebraElement]
    algebra: AlgebraDescriptor | None = None
    probes: tuple = ()

    def __call__(self, a: AlgebraElement) -> AlgebraElement:
        return self.fn(a)

    @classmethod
    def identity(cls) -> "AlteringDistance":
        return cls("identity", lambda a: a)

    @classmethod
    def linear(cls, k: float) -> "AlteringDistance":
        """psi(x) = (I - k) x for the scalar element k I."""
        return cls(f"corollary_linear(k={k:g})", lambda a: scale(a, 1.0 - k))


def _vanishes_only_at_zero(function: AlteringDistance) -> str | None:
    algebra = function.algebra or AlgebraDescriptor.diagonal(1)
    if norm(function(algebra.zero())) > settings.ZERO_NORM_THRESHOLD:
        return f"{function.name}(0) is not zero"
    probes = [algebra.unit(), algebra.scalar(0.5), algebra.scalar(2.0)]
    probes += [algebra.element(p) for p in function.probes]
    for probe in probes:
        if norm(function(probe)) <= settings.ZERO_NORM_THRESHOLD:
            return f"{function.name} vanishes at the nonzero element {probe!r}"
    return None


def _in_open_unit(name: str, value: float | None) -> None:
    if value is None or not 0 < value < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


class ContractionSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: ConditionKind
    tau: float | None = None
    alpha: float | None = None
    beta: float | None = None
    eta: float | None = None
    partner: InstanceOf[SelfMap] | None = None
    r_map: InstanceOf[SelfMap] | None = None
    phi: InstanceOf[AlteringDistance] | None = None
    psi: InstanceOf[AlteringDistance] | None = None
    variant: ReichVariant = ReichVariant.AS_PROOF
    comparison_mode: ComparisonMode = ComparisonMode.STRICT
    fixed_point_tolerance: float = Field(settings.FIXED_POINT_TOLERANCE, ge=0)

    @model_validator(mode="after")
    def check_parameters(self):
        kind = self.kind
        if kind == ConditionKind.CLASSICAL_KANNAN:
            if self.tau is None or not 0 <= self.tau < 0.5:
                raise ValueError(f"classical Kannan needs tau in [0, 1/2), got {self.tau}")
            return self
        if kind == ConditionKind.CLASSICAL_REICH:
            if self.tau is None or not 0 <= self.tau < 1 / 3:
                raise ValueError(f"classical Reich needs tau in [0, 1/3), got {self.tau}")
            return self

        if kind != ConditionKind.WEAK_REICH:
            _in_open_unit("tau", self.tau)
        if kind in (ConditionKind.REICH_TYPE, ConditionKind.WEAK_REICH):
            _in_open_unit("alpha", self.alpha)
        _in_open_unit("beta", self.beta)
        if kind in (ConditionKind.TAU_BETA_ETA_KANNAN, ConditionKind.KANNAN_PAIR,
                    ConditionKind.REICH_TYPE, ConditionKind.WEAK_REICH):
            _in_open_unit("eta", self.eta)

        if kind in (ConditionKind.TAU_BETA_ETA_KANNAN, ConditionKind.KANNAN_PAIR) and not self.beta + self.eta < 1:
            raise ValueError(f"{kind.value} needs beta + eta < 1, got {self.beta + self.eta}")
        if kind == ConditionKind.KANNAN_PAIR and self.partner is None:
            raise ValueError("a contraction pair needs the partner map S")
        if kind == ConditionKind.R_INTERPOLATIVE and self.r_map is None:
            raise ValueError("an R-interpolative condition needs the map R")
        if kind == ConditionKind.REICH_TYPE and not self.alpha + self.beta + self.eta > 1:
            raise ValueError("Reich-type condition needs alpha + beta + eta > 1")
        if kind == ConditionKind.WEAK_REICH:
            if abs(self.alpha + self.beta + self.eta - 1) > 1e-12:
                raise ValueError("weakly contractive Reich condition needs alpha + beta + eta = 1")
            if self.phi is None or self.psi is None:
                raise ValueError("weakly contractive Reich condition needs phi and psi")
            for function in (self.phi, self.psi):
                problem = _vanishes_only_at_zero(function)
                if problem:
                    raise ValueError(problem)
        return self

    @classmethod
    def interpolative_kannan(cls, tau: float, beta: float, **options) -> "ContractionSpec":
        return cls(kind=ConditionKind.INTERPOLATIVE_KANNAN, tau=tau, beta=beta, **options)

    @classmethod
    def tau_beta_eta(cls, tau: float, beta: float, eta: float, **options) -> "ContractionSpec":
        return cls(kind=ConditionKind.TAU_BETA_ETA_KANNAN, tau=tau, beta=beta, eta=eta, **options)

    @classmethod
    def kannan_pair(cls, tau: float, beta: float, eta: float, partner: SelfMap, **options) -> "ContractionSpec":
        return cls(kind=ConditionKind.KANNAN_PAIR, tau=tau, beta=beta, eta=eta, partner=partner, **options)

    @classmethod
    def r_interpolative(cls, tau: float, beta: float, r_map: SelfMap, **options) -> "ContractionSpec":
        return cls(kind=ConditionKind.R_INTERPOLATIVE, tau=tau, beta=beta, r_map=r_map, **options)

    @classmethod
    def reich(cls, tau: float, alpha: float, beta: float, eta: float, **options) -> "ContractionSpec":
        return cls(kind=ConditionKind.REICH_TYPE, tau=tau, alpha=alpha, beta=beta, eta=eta, **options)

    @classmethod
    def weak_reich(cls, alpha: float, beta: float, eta: float, phi: AlteringDistance,
                   psi: AlteringDistance, **options) -> "ContractionSpec":
        return cls(kind=ConditionKind.WEAK_REICH, alpha=alpha, beta=beta, eta=eta, phi=phi, psi=psi, **options)

    @classmethod
    def corollary(cls, k: float, alpha: float, beta: float, eta: float, **options) -> "ContractionSpec":
        """Weak Reich with phi = identity and psi(x) = (I - k) x, i.e. d(Tx,Ty) <= k (...)."""
        return cls.weak_reich(alpha, beta, eta, AlteringDistance.identity(), AlteringDistance.linear(k), **options)

    @classmethod
    def classical_kannan(cls, tau: float, **options) -> "ContractionSpec":
        return cls(kind=ConditionKind.CLASSICAL_KANNAN, tau=tau, **options)

    @classmethod
    def classical_reich(cls, tau: float, **options) -> "ContractionSpec":
        return cls(kind=ConditionKind.CLASSICAL_REICH, tau=tau, **options)

    @property
    def excludes_fixed_points(self) -> bool:
        return self.kind not in (ConditionKind.CLASSICAL_KANNAN, ConditionKind.CLASSICAL_REICH)

    @property
    def envelope_ratio(self) -> float | None:
        """Ratio q of the geometric envelope d(x_n, x_n+1) <= q**n d(x0, x1) along Picard orbits."""
        if self.kind == ConditionKind.CLASSICAL_KANNAN:
            return self.tau / (1 - self.tau)
        if self.kind == ConditionKind.CLASSICAL_REICH:
            return 2 * self.tau / (1 - self.tau)
        if self.kind in (ConditionKind.REICH_TYPE, ConditionKind.WEAK_REICH):
            return None
        return self.tau

    def describe(self) -> str:
        values = {k: getattr(self, k) for k in ("tau", "alpha", "beta", "eta") if getattr(self, k) is not None}
        params = ", ".join(f"{k}={v:g}" for k, v in values.items())
        return f"{self.kind.value}({params})"


@dataclass(frozen=True)
class ConditionEvaluation:
    pair: tuple
    lhs: AlgebraElement
    rhs: AlgebraElement | None
    order: OrderResult | None
    vacuous: bool
    index: int = 0
    left_domain: bool = False

    @property
    def violated(self) -> bool:
        return self.order is not None and self.order.verdict == OrderVerdict.FAILS

    @property
    def ill_posed(self) -> bool:
        return self.order is not None and self.order.verdict == OrderVerdict.ILL_POSED


@dataclass(frozen=True)
class Certificate:
    spec: ContractionSpec
    pairs_tested: int
    all_hold: bool
    violations: list[ConditionEvaluation] = field(default_factory=list)
    ill_posed: list[ConditionEvaluation] = field(default_factory=list)
    vacuous_pairs: int = 0
    domain_exits: int = 0
    exhaustive: bool = False
    space_name: str = ""
    map_name: str = ""


def _image(m: SelfMap, p: Point, formal: bool) -> tuple[Point, bool]:
    image, inside = m.image(p)
    if not inside and not formal:
        raise DomainExit(m.name, m.domain.to_json(p), m.domain.to_json(image))
    return image, inside


def interpolated_product(factors: list[tuple[AlgebraElement, float]], mode: ComparisonMode) -> AlgebraElement:
    """Product of fractional powers; Symmetrized mode nests them as p1^(1/2) (...) p1^(1/2)."""
    commutative = factors[0][0].descriptor.is_commutative
    if mode == ComparisonMode.STRICT or commutative:
        result = frac_power(*factors[0])
        for base, exponent in factors[1:]:
            result = multiply(result, frac_power(base, exponent))
        return result

    result = frac_power(*factors[-1])
    for base, exponent in reversed(factors[:-1]):
        half = frac_power(base, exponent / 2)
        result = multiply(multiply(half, result), half)
    return result


def evaluate_condition(spec: ContractionSpec, T: SelfMap, x: Point, y: Point, space: MetricSpaceInstance,
                       *, formal: bool = False, index: int = 0) -> ConditionEvaluation:
    """Evaluates both sides of the condition at (x, y) and compares them in the order.

    With ``formal`` the images may leave the domain; the metric formula is still
    evaluated there and the evaluation is flagged ``left_domain``.
    """
    d = space.d
    domain = space.domain
    x, y = domain.coerce(x), domain.coerce(y)
    second = spec.partner if spec.kind == ConditionKind.KANNAN_PAIR else T

    tx, x_inside = _image(T, x, formal)
    ty, y_inside = _image(second, y, formal)
    left_domain = not (x_inside and y_inside)
    vacuous = spec.excludes_fixed_points and (
        domain.points_equal(x, tx, spec.fixed_point_tolerance)
        or domain.points_equal(y, ty, spec.fixed_point_tolerance)
    )

    lhs = d(tx, ty)
    kind = spec.kind
    if kind == ConditionKind.CLASSICAL_KANNAN:
        rhs = scale(add(d(x, tx), d(y, ty)), spec.tau)
    elif kind == ConditionKind.CLASSICAL_REICH:
        rhs = scale(add(add(d(x, y), d(x, tx)), d(y, ty)), spec.tau)
    else:
        if kind == ConditionKind.INTERPOLATIVE_KANNAN:
            factors = [(d(x, tx), spec.beta), (d(y, ty), 1 - spec.beta)]
        elif kind in (ConditionKind.TAU_BETA_ETA_KANNAN, ConditionKind.KANNAN_PAIR):
            factors = [(d(x, tx), spec.beta), (d(y, ty), spec.eta)]
        elif kind == ConditionKind.R_INTERPOLATIVE:
            rx, rx_inside = _image(spec.r_map, x, formal)
            ry, ry_inside = _image(spec.r_map, y, formal)
            left_domain = left_domain or not (rx_inside and ry_inside)
            factors = [(d(rx, tx), spec.beta), (d(ry, ty), 1 - spec.beta)]
        else:
            middle = d(x, ty) if spec.variant == ReichVariant.AS_DISPLAYED else d(x, tx)
            factors = [(d(x, y), spec.alpha), (middle, spec.beta), (d(y, ty), spec.eta)]
        rhs = interpolated_product(factors, spec.comparison_mode)

        if kind == ConditionKind.WEAK_REICH:
            lhs = spec.phi(lhs)
            rhs = subtract(spec.phi(rhs), spec.psi(rhs))
        else:
            rhs = scale(rhs, spec.tau)

    order = None if vacuous else leq(lhs, rhs)
    return ConditionEvaluation((x, y), lhs, rhs, order, vacuous, index=index, left_domain=left_domain)


def _certification_pairs(domain: DomainDescriptor, sample_pairs: int, seed: int) -> tuple[list, bool]:
    if domain.is_finite and len(domain.labels) <= EXHAUSTIVE_LIMIT:
        return list(product(domain.labels, repeat=2)), True
    rng = np.random.default_rng(seed)
    pairs = list(product(domain.anchors, repeat=2))
    pairs += [(domain.sample(rng), domain.sample(rng)) for _ in range(sample_pairs)]
    return pairs, False


# Certifies the condition over all ordered pairs of small finite spaces, otherwise
# over anchor pairs plus sample_pairs random pairs drawn with the given seed
# Evaluations may fan out over threads; results always come back in pair order
def certify(spec: ContractionSpec, T: SelfMap, space: MetricSpaceInstance, sample_pairs: int, seed: int,
            *, formal: bool = False, workers: int | None = None) -> Certificate:
    if space.certified is None:
        logger.warning(f"No axiom report for '{space.name}', verifying axioms before certification")
        verify_axioms(space, min(sample_pairs, 1000), seed)
    if not space.certified.all_pass:
        failed = ", ".join(w.axiom for w in space.certified.violations)
        logger.warning(f"Certifying on '{space.name}' although its metric violates: {failed}")

    pairs, exhaustive = _certification_pairs(space.domain, sample_pairs, seed)

    def evaluate(item):
        index, (x, y) = item
        return evaluate_condition(spec, T, x, y, space, formal=formal, index=index)

    workers = workers or settings.WORKERS
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            evaluations = list(pool.map(evaluate, enumerate(pairs)))
    else:
        progress = tqdm(enumerate(pairs), total=len(pairs), desc=f"Certifying {spec.kind.value}",
                        disable=not settings.SHOW_PROGRESS)
        evaluations = [evaluate(item) for item in progress]

    violations = [e for e in evaluations if e.violated]
    ill_posed = [e for e in evaluations if e.ill_posed]
    certificate = Certificate(
        spec=spec,
        pairs_tested=len(evaluations),
        all_hold=not violations and not ill_posed,
        violations=violations,
        ill_posed=ill_posed,
        vacuous_pairs=sum(e.vacuous for e in evaluations),
        domain_exits=sum(e.left_domain for e in evaluations),
        exhaustive=exhaustive,
        space_name=space.name,
        map_name=T.name,
    )
    logger.info(
        f"Certified {spec.describe()} for '{T.name}' on '{space.name}': {len(evaluations)} pairs, "
        f"{len(violations)} violations, {len(ill_posed)} ill-posed, {certificate.domain_exits} domain exits"
    )
    return certificate


@dataclass(frozen=True)
class AlteringReport:
    function: str
    samples: int
    nondecreasing: bool
    zero_at_zero: bool
    nonzero_away_from_zero: bool
    continuous: bool
    failures: list[str] = field(default_factory=list)

    @property
    def passes(self) -> bool:
        return self.nondecreasing and self.zero_at_zero and self.nonzero_away_from_zero and self.continuous


CONTINUITY_HALVINGS = 10
CONTINUITY_CENTERS = 20
CONTINUITY_SHRINK = 0.1


def _ratios_shrink(function: AlteringDistance, center: AlgebraElement, direction: AlgebraElement) -> bool:
    base = function(center)
    gaps = [norm(subtract(function(add(center, scale(direction, 2.0 ** -k))), base))
            for k in range(CONTINUITY_HALVINGS + 1)]
    shrinking = all(later <= earlier * (1 + 1e-9) + 1e-14 for earlier, later in zip(gaps, gaps[1:]))
    return shrinking and gaps[-1] <= CONTINUITY_SHRINK * gaps[0] + 1e-12


def altering_distance_check(psi: AlteringDistance, samples: int, seed: int,
                            algebra: AlgebraDescriptor | None = None) -> AlteringReport:
    """Probes monotonicity, the zero-only-at-zero rule and continuity of psi on random positive elements."""
    algebra = algebra or psi.algebra or AlgebraDescriptor.diagonal(1)
    rng = np.random.default_rng(seed)
    failures = []

    zero_at_zero = norm(psi(algebra.zero())) <= settings.ZERO_NORM_THRESHOLD
    if not zero_at_zero:
        failures.append(f"||psi(0)|| = {norm(psi(algebra.zero())):.3e}")

    nondecreasing = True
    nonzero = True
    centers = [algebra.element(p) for p in psi.probes]
    for _ in range(samples):
        a = random_positive(algebra, rng, size=rng.uniform(0.1, 3.0))
        b = add(a, random_positive(algebra, rng, size=rng.uniform(0.0, 1.0)))
        if len(centers) < len(psi.probes) + CONTINUITY_CENTERS:
            centers.append(a)
        order = leq(psi(a), psi(b))
        if nondecreasing and not order.holds:
            nondecreasing = False
            failures.append(f"psi not nondecreasing at a={a!r}, b={b!r} ({order.verdict.value})")
        if nonzero and norm(a) >= 1e-6 and norm(psi(a)) <= settings.ZERO_NORM_THRESHOLD:
            nonzero = False
            failures.append(f"psi vanishes at nonzero a={a!r}")

    continuous = True
    for center in centers:
        upward = random_positive(algebra, rng, size=1.0)
        downward = scale(center, -0.5)
        if not (_ratios_shrink(psi, center, upward) and _ratios_shrink(psi, center, downward)):
            continuous = False
            failures.append(f"continuity probe did not shrink at {center!r}")
            break

    report = AlteringReport(psi.name, samples, nondecreasing, zero_at_zero, nonzero, continuous, failures)
    logger.info(f"Altering distance check on '{psi.name}': {'pass' if report.passes else 'fail'}")
    return report
