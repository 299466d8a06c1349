from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product
from typing import Any, Callable

import numpy as np
from loguru import logger
from tqdm import tqdm

from core import settings
from core.cstar_algebra import AlgebraDescriptor, AlgebraElement, is_positive, leq, norm, scale, subtract
from core.exceptions import BadParameters, DescriptorMismatch, SamplerFailure


EXHAUSTIVE_LIMIT = 64
MAX_FINITE_POINTS = 4096
SAMPLER_RETRIES = 100

Point = Any  # 1-D float array for Euclidean regions, string label for finite sets


class DomainKind(str, Enum):
    EUCLIDEAN_REGION = "euclidean_region"
    FINITE_SET = "finite_set"


@dataclass(frozen=True, eq=False)
class DomainDescriptor:
    kind: DomainKind
    description: str
    dim: int = 1
    membership: Callable[[np.ndarray], bool] | None = None
    sampler: Callable[[np.random.Generator], Any] | None = None
    labels: tuple[str, ...] = ()
    anchors: tuple = ()

    def __post_init__(self):
        if self.kind == DomainKind.FINITE_SET:
            if not 1 <= len(self.labels) <= MAX_FINITE_POINTS:
                raise BadParameters(f"finite sets hold 1..{MAX_FINITE_POINTS} points, got {len(self.labels)}")
            if len(set(self.labels)) != len(self.labels):
                raise BadParameters("finite set labels must be unique")
        elif self.dim < 1 or self.membership is None or self.sampler is None:
            raise BadParameters("Euclidean regions need dim >= 1, a membership predicate and a sampler")

    @classmethod
    def region(cls, dim: int, membership: Callable, sampler: Callable, description: str,
               anchors: tuple = ()) -> "DomainDescriptor":
        return cls(DomainKind.EUCLIDEAN_REGION, description, dim=dim, membership=membership,
                   sampler=sampler, anchors=anchors)

    @classmethod
    def interval(cls, low: float, high: float, *, open_low: bool = False, open_high: bool = False,
                 sample_range: tuple[float, float] | None = None, anchors: tuple = ()) -> "DomainDescriptor":
        """A one-dimensional interval; unbounded ends need an explicit ``sample_range``."""
        lo, hi = sample_range or (low, high)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise BadParameters(f"interval sampler needs a finite range, got ({lo}, {hi})")

        def membership(x: np.ndarray) -> bool:
            v = float(x[0])
            above = v > low if open_low else v >= low
            below = v < high if open_high else v <= high
            return bool(np.isfinite(v) and above and below)

        def sampler(rng: np.random.Generator) -> np.ndarray:
            return np.array([rng.uniform(lo, hi)])

        left = "]" if open_low else "["
        right = "[" if open_high else "]"
        return cls.region(1, membership, sampler, f"{left}{low}, {high}{right}",
                          anchors=tuple(np.array([float(a)]) for a in anchors))

    @classmethod
    def finite(cls, labels, description: str | None = None) -> "DomainDescriptor":
        labels = tuple(str(label) for label in labels)
        return cls(DomainKind.FINITE_SET, description or f"finite set of {len(labels)} points", labels=labels)

    @property
    def is_finite(self) -> bool:
        return self.kind == DomainKind.FINITE_SET

    def coerce(self, point) -> Point:
        if self.is_finite:
            return str(point)
        array = np.atleast_1d(np.asarray(point, dtype=float))
        if array.shape != (self.dim,):
            raise BadParameters(f"expected a point of dimension {self.dim}, got shape {array.shape}")
        return array

    def contains(self, point) -> bool:
        if self.is_finite:
            return point in self.labels
        array = np.asarray(point, dtype=float)
        return bool(array.shape == (self.dim,) and np.all(np.isfinite(array)) and self.membership(array))

    def sample(self, rng: np.random.Generator) -> Point:
        if self.is_finite:
            return self.labels[int(rng.integers(len(self.labels)))]
        for _ in range(SAMPLER_RETRIES):
            try:
                point = self.coerce(self.sampler(rng))
            except Exception as e:
                raise SamplerFailure(f"sampler for {self.description} raised: {e}") from e
            if self.contains(point):
                return point
        raise SamplerFailure(f"sampler for {self.description} produced no member in {SAMPLER_RETRIES} tries")

    def sample_many(self, rng: np.random.Generator, count: int) -> list:
        return [self.sample(rng) for _ in range(count)]

    def distance(self, p: Point, q: Point) -> float:
        """Euclidean distance between points, or the discrete 0/1 distance on finite sets."""
        if self.is_finite:
            return 0.0 if p == q else 1.0
        return float(np.linalg.norm(np.asarray(p) - np.asarray(q)))

    def points_equal(self, p: Point, q: Point, tol: float = settings.POINT_EQUALITY_TOLERANCE) -> bool:
        if self.is_finite:
            return p == q
        return self.distance(p, q) <= tol

    def to_json(self, point: Point):
        if self.is_finite:
            return point
        return [float(v) for v in np.asarray(point).ravel()]


@dataclass(frozen=True)
class ViolationWitness:
    axiom: str
    points: tuple
    values: dict[str, AlgebraElement]
    detail: str
    eigenvalue: float | None = None


@dataclass(frozen=True)
class AxiomReport:
    samples_tested: int
    axiom_identity: ViolationWitness | None = None
    axiom_symmetry: ViolationWitness | None = None
    axiom_triangle: ViolationWitness | None = None
    positivity: ViolationWitness | None = None

    AXIOMS = ("identity", "symmetry", "triangle", "positivity")

    def witness(self, axiom: str) -> ViolationWitness | None:
        if axiom == "positivity":
            return self.positivity
        return getattr(self, f"axiom_{axiom}")

    @property
    def violations(self) -> list[ViolationWitness]:
        return [w for w in (self.witness(a) for a in self.AXIOMS) if w is not None]

    @property
    def all_pass(self) -> bool:
        return not self.violations


@dataclass(eq=False)
class MetricSpaceInstance:
    name: str
    domain: DomainDescriptor
    algebra: AlgebraDescriptor
    metric: Callable[[Point, Point], AlgebraElement]
    certified: AxiomReport | None = None

    def d(self, x: Point, y: Point) -> AlgebraElement:
        value = self.metric(x, y)
        if value.descriptor is not self.algebra and value.descriptor != self.algebra:
            raise DescriptorMismatch(f"metric of '{self.name}' returned {value.descriptor.label}, "
                                     f"expected {self.algebra.label}")
        return value

    @classmethod
    def from_table(cls, name: str, labels, table: dict, algebra: AlgebraDescriptor) -> "MetricSpaceInstance":
        """Finite space whose metric is an explicit table over all ordered pairs."""
        domain = DomainDescriptor.finite(labels)
        values = {}
        for pair in product(domain.labels, repeat=2):
            if pair not in table:
                raise BadParameters(f"metric table of '{name}' has no entry for {pair}")
            raw = table[pair]
            values[pair] = raw if isinstance(raw, AlgebraElement) else algebra.element(raw)
        return cls(name, domain, algebra, lambda x, y: values[(x, y)])


def _first_violations(space: MetricSpaceInstance, diagonal: list, pairs: list, triples: list) -> dict:
    d = space.d
    domain = space.domain
    found: dict[str, ViolationWitness] = {}

    for x in diagonal:
        value = d(x, x)
        if "identity" not in found and norm(value) > settings.ZERO_NORM_THRESHOLD:
            found["identity"] = ViolationWitness(
                "identity", (x, x), {"d(x,x)": value}, f"||d(x,x)|| = {norm(value):.6g} is not zero")
        if "positivity" not in found and not is_positive(value):
            found["positivity"] = ViolationWitness(
                "positivity", (x, x), {"d(x,x)": value}, "d(x,x) is not a positive element")

    for x, y in pairs:
        value = d(x, y)
        if ("identity" not in found and norm(value) <= settings.ZERO_NORM_THRESHOLD
                and not domain.points_equal(x, y)):
            found["identity"] = ViolationWitness(
                "identity", (x, y), {"d(x,y)": value}, "d(x,y) vanishes at distinct points")
        if "positivity" not in found and not is_positive(value):
            found["positivity"] = ViolationWitness(
                "positivity", (x, y), {"d(x,y)": value}, "d(x,y) is not a positive element")
        if "symmetry" not in found:
            other = d(y, x)
            gap = norm(subtract(value, other))
            if gap > settings.ZERO_NORM_THRESHOLD * max(1.0, norm(value)):
                found["symmetry"] = ViolationWitness(
                    "symmetry", (x, y), {"d(x,y)": value, "d(y,x)": other}, f"||d(x,y) - d(y,x)|| = {gap:.6g}")

    for x, u, y in tqdm(triples, desc=f"Triangle checks on {space.name}", disable=not settings.SHOW_PROGRESS):
        if "triangle" in found:
            break
        direct = d(x, y)
        detour = d(x, u) + d(u, y)
        order = leq(direct, detour)
        if not order.holds:
            found["triangle"] = ViolationWitness(
                "triangle", (x, u, y), {"d(x,y)": direct, "d(x,u)+d(u,y)": detour},
                f"triangle inequality {order.verdict.value}", eigenvalue=order.witness_eigenvalue)
    return found


# Checks identity (both directions), symmetry, triangle and positivity of the metric
# Finite spaces up to EXHAUSTIVE_LIMIT points are checked over all pairs and triples,
# everything else over anchors plus sample_count random pairs and triples
def verify_axioms(space: MetricSpaceInstance, sample_count: int, seed: int) -> AxiomReport:
    if sample_count < 1:
        raise BadParameters("sample_count must be at least 1")
    domain = space.domain
    rng = np.random.default_rng(seed)

    if domain.is_finite and len(domain.labels) <= EXHAUSTIVE_LIMIT:
        diagonal = list(domain.labels)
        pairs = list(product(diagonal, repeat=2))
        triples = list(product(diagonal, repeat=3))
    else:
        anchors = list(domain.anchors)
        diagonal = anchors + domain.sample_many(rng, sample_count)
        pairs = [(x, y) for x, y in product(anchors, repeat=2)]
        pairs += [(domain.sample(rng), domain.sample(rng)) for _ in range(sample_count)]
        triples = [(domain.sample(rng), domain.sample(rng), domain.sample(rng)) for _ in range(sample_count)]

    found = _first_violations(space, diagonal, pairs, triples)
    report = AxiomReport(
        samples_tested=len(diagonal) + len(pairs) + len(triples),
        axiom_identity=found.get("identity"),
        axiom_symmetry=found.get("symmetry"),
        axiom_triangle=found.get("triangle"),
        positivity=found.get("positivity"),
    )
    space.certified = report

    if report.all_pass:
        logger.info(f"Metric axioms hold on '{space.name}' over {report.samples_tested} samples")
    else:
        failed = ", ".join(w.axiom for w in report.violations)
        logger.info(f"Metric axioms violated on '{space.name}': {failed}")
    return report


@dataclass
class SequenceRecord:
    points: list
    steps: list[AlgebraElement] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    space: MetricSpaceInstance | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.points and len(self.steps) != len(self.points) - 1:
            raise BadParameters("a sequence record needs exactly one step per consecutive pair of points")
        if len(self.step_norms) != len(self.steps):
            self.step_norms = [norm(step) for step in self.steps]

    @classmethod
    def from_points(cls, space: MetricSpaceInstance, points: list) -> "SequenceRecord":
        steps = [space.d(p, q) for p, q in zip(points, points[1:])]
        return cls(list(points), steps, space=space)

    @classmethod
    def from_steps(cls, steps: list[AlgebraElement]) -> "SequenceRecord":
        """A record known only through its steps; points are placeholder indices."""
        return cls(list(range(len(steps) + 1)), list(steps))

    def append(self, point: Point, step: AlgebraElement) -> None:
        self.points.append(point)
        self.steps.append(step)
        self.step_norms.append(norm(step))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Lemma1Result:
    consistent: bool
    first_failure: int | None
    tail_bound: float
    m: int


def geometric_tail_bound(delta: float, m: int, first_step_norm: float) -> float:
    """delta**m / (1 - delta) * ||d(x0, x1)||, the sum of the geometric tail from m on."""
    return delta ** m / (1.0 - delta) * first_step_norm


def lemma1_check(record: SequenceRecord, delta: float, m: int | None = None) -> Lemma1Result:
    """Checks d(x_n, x_n+1) <= delta d(x_n-1, x_n) at every step and reports the Cauchy tail bound."""
    if not 0 <= delta < 1:
        raise BadParameters(f"delta must lie in [0, 1), got {delta}")
    if len(record.steps) < 2:
        raise BadParameters("lemma check needs at least two steps")

    first_failure = None
    for n in range(1, len(record.steps)):
        if not leq(record.steps[n], scale(record.steps[n - 1], delta)).holds:
            first_failure = n
            break

    m = len(record.steps) // 2 if m is None else m
    tail = geometric_tail_bound(delta, m, record.step_norms[0])
    return Lemma1Result(first_failure is None, first_failure, tail, m)


def is_cauchy_empirically(record: SequenceRecord, epsilon: float) -> bool:
    """max ||d(x_i, x_j)|| over the last quartile of the record is below epsilon."""
    if record.space is None:
        raise BadParameters("empirical Cauchy test needs a record attached to its space")
    tail = record.points[(3 * len(record.points)) // 4:]
    for p, q in combinations(tail, 2):
        if not norm(record.space.d(p, q)) < epsilon:
            return False
    return True
