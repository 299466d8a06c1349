"""
Named, parameterized scenarios: a space, its maps, a contraction spec and the outcome
the pipeline verify_axioms -> certify -> solve is expected to reproduce.

Both worked examples on ]2, oo[ are shipped as stated, defects included, next to
honest counterparts on which the iterations actually run.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

import numpy as np
from pydantic import ValidationError

from core.contraction_conditions import AlteringDistance, ContractionSpec, SelfMap
from core.cstar_algebra import AlgebraDescriptor, add, is_positive, norm, scale
from core.exceptions import BadElement, BadParameters, UnknownEntry
from core.metric_spaces import DomainDescriptor, MetricSpaceInstance, Point
from models.schemas import (
    AffinePairParams,
    AffineScalarParams,
    CatalogParams,
    CorollaryLinearParams,
    FiniteRandomParams,
    MatrixScaledAffineParams,
    PlaneParams,
    SolverKind,
)


class ExpectedOutcome(str, Enum):
    CERTIFIES_AND_CONVERGES = "CertifiesAndConverges"
    CERTIFIABLE_DEFECT = "CertifiableDefect"
    VIOLATES_METRIC_AXIOM = "ViolatesMetricAxiom"


@dataclass(frozen=True)
class Expected:
    outcome: ExpectedOutcome
    description: str = ""

    def __str__(self) -> str:
        if not self.description:
            return self.outcome.value
        return f"{self.outcome.value}({self.description})"


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    space: MetricSpaceInstance
    T: SelfMap
    spec: ContractionSpec
    expected: Expected
    notes: str = ""
    S: SelfMap | None = None
    R: SelfMap | None = None
    R_solve: Callable[[Point], Point] | None = None
    solver: SolverKind = SolverKind.PICARD
    start: Any = None
    formal: bool = False

    @property
    def maps(self) -> dict[str, Any]:
        named = {"T": self.T, "S": self.S, "R": self.R, "R_solve": self.R_solve}
        return {k: v for k, v in named.items() if v is not None}


@dataclass(frozen=True, eq=False)
class AlteringEntry:
    name: str
    function: AlteringDistance
    algebra: AlgebraDescriptor
    notes: str = ""


@dataclass(frozen=True)
class _Builder:
    params: type[CatalogParams]
    build: Callable[[Any], CatalogEntry | AlteringEntry]


_REGISTRY: dict[str, _Builder] = {}

AFFINE_DEFECT = "affine maps violate every interpolative condition near their fixed point; Picard converges"


def _entry(name: str, params: type[CatalogParams] = CatalogParams):
    def register(build):
        _REGISTRY[name] = _Builder(params, build)
        return build
    return register


def catalog_list() -> list[str]:
    return sorted(_REGISTRY)


# Builds a fresh entry; parameters come as a dict and/or keyword overrides and are
# validated by the entry's parameter model
def catalog_build(name: str, parameters: dict | None = None, **overrides) -> CatalogEntry | AlteringEntry:
    if name not in _REGISTRY:
        raise UnknownEntry(f"no catalog entry named '{name}' (known: {', '.join(catalog_list())})")
    builder = _REGISTRY[name]
    try:
        params = builder.params(**{**(parameters or {}), **overrides})
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise BadParameters(f"parameters of '{name}': {problems}") from e
    return builder.build(params)


# Spaces


def _real_line(sample_range: tuple[float, float] = (-100.0, 100.0), anchors: tuple = ()) -> DomainDescriptor:
    lo, hi = sample_range
    return DomainDescriptor.region(
        1,
        lambda x: bool(np.all(np.isfinite(x))),
        lambda rng: np.array([rng.uniform(lo, hi)]),
        "R",
        anchors=tuple(np.array([float(a)]) for a in anchors),
    )


def _scalar_space(name: str, domain: DomainDescriptor) -> MetricSpaceInstance:
    algebra = AlgebraDescriptor.diagonal(1)
    return MetricSpaceInstance(name, domain, algebra, lambda x, y: algebra.element([abs(x[0] - y[0])]))


def _plane_space(name: str, domain: DomainDescriptor, c: float) -> MetricSpaceInstance:
    """d(x, y) = (|x - y|, c |x - y|) in R^2, the honest commutative two-component metric."""
    algebra = AlgebraDescriptor.diagonal(2)

    def metric(x, y):
        gap = abs(x[0] - y[0])
        return algebra.element([gap, c * gap])

    return MetricSpaceInstance(name, domain, algebra, metric)


def _beyond_two_domain() -> DomainDescriptor:
    return DomainDescriptor.interval(2.0, np.inf, open_low=True, open_high=True,
                                     sample_range=(2.0, 12.0), anchors=(3.0, 4.0))


def _squared_sum_space() -> MetricSpaceInstance:
    algebra = AlgebraDescriptor.diagonal(2)
    return MetricSpaceInstance("]2,oo[ with d=((x+y)^2, 0)", _beyond_two_domain(), algebra,
                               lambda x, y: algebra.element([(x[0] + y[0]) ** 2, 0.0]))


def _affine(name: str, domain: DomainDescriptor, a: float, b: float) -> SelfMap:
    return SelfMap(name, lambda x: a * x + b, domain)


def _affine_spec(a: float) -> ContractionSpec:
    return ContractionSpec.interpolative_kannan(tau=abs(a) if a != 0 else 0.5, beta=0.5)


def _affine_expected(a: float) -> Expected:
    if a == 0:
        return Expected(ExpectedOutcome.CERTIFIES_AND_CONVERGES)
    return Expected(ExpectedOutcome.CERTIFIABLE_DEFECT, AFFINE_DEFECT)


# Worked examples


@_entry("paper_example_kannan")
def _paper_example_kannan(params: CatalogParams) -> CatalogEntry:
    space = _squared_sum_space()
    # the example names the exponent alpha although the condition uses beta
    return CatalogEntry(
        name="paper_example_kannan",
        space=space,
        T=SelfMap("1/x", lambda x: 1.0 / x, space.domain),
        spec=ContractionSpec.interpolative_kannan(tau=0.75, beta=0.4),
        expected=Expected(ExpectedOutcome.VIOLATES_METRIC_AXIOM, "d(x,x)≠0"),
        notes="X=]2,oo[, A=R^2, d(x,y)=((x+y)^2,0), Tx=1/x, tau=3/4, exponent 2/5; "
              "d(3,3)=(36,0) and T(3)=1/3 leaves X",
        start=3.0,
        formal=True,
    )


@_entry("paper_example_r_interpolative")
def _paper_example_r_interpolative(params: CatalogParams) -> CatalogEntry:
    space = _squared_sum_space()
    R = SelfMap("x^2", lambda x: x * x, space.domain)
    return CatalogEntry(
        name="paper_example_r_interpolative",
        space=space,
        T=SelfMap("1/x", lambda x: 1.0 / x, space.domain),
        spec=ContractionSpec.r_interpolative(tau=0.75, beta=0.4, r_map=R),
        expected=Expected(ExpectedOutcome.CERTIFIABLE_DEFECT, "domain not invariant"),
        notes="same space as paper_example_kannan with Rx=x^2; T maps X into ]0,1/2[; "
              "positive_r_interpolative runs the same maps on ]0,oo[",
        R=R,
        R_solve=np.sqrt,
        solver=SolverKind.R_INTERPOLATIVE,
        start=3.0,
        formal=True,
    )


@_entry("positive_r_interpolative", PlaneParams)
def _positive_r_interpolative(params: PlaneParams) -> CatalogEntry:
    domain = DomainDescriptor.interval(0.0, np.inf, open_low=True, open_high=True,
                                       sample_range=(0.1, 10.0), anchors=(0.5, 1.0, 1.5))
    space = _plane_space(f"]0,oo[ with d=(|x-y|, {params.c:g}|x-y|)", domain, params.c)
    R = SelfMap("x^2", lambda x: x * x, domain)
    return CatalogEntry(
        name="positive_r_interpolative",
        space=space,
        T=SelfMap("1/x", lambda x: 1.0 / x, domain),
        spec=ContractionSpec.r_interpolative(tau=0.75, beta=0.4, r_map=R),
        expected=Expected(ExpectedOutcome.CERTIFIABLE_DEFECT,
                          "continuous maps violate the condition near Rv=Tv; the iteration converges to 1"),
        notes="x_n+1 = (1/x_n)^(1/2) converges to v=1 where v^2 = 1/v",
        R=R,
        R_solve=np.sqrt,
        solver=SolverKind.R_INTERPOLATIVE,
        start=3.0,
    )


# Affine families


@_entry("affine_scalar", AffineScalarParams)
def _affine_scalar(params: AffineScalarParams) -> CatalogEntry:
    a, b = params.a, params.b
    fixed = b / (1 - a)
    space = _scalar_space("R with d=|x-y|", _real_line(anchors=(fixed, fixed + 1.0, 10.0)))
    return CatalogEntry(
        name="affine_scalar",
        space=space,
        T=_affine(f"{a:g}x+{b:g}", space.domain, a, b),
        spec=_affine_spec(a),
        expected=_affine_expected(a),
        notes=f"Tx={a:g}x+{b:g}, fixed point {fixed:g}",
        start=10.0,
    )


@_entry("matrix_scaled_affine", MatrixScaledAffineParams)
def _matrix_scaled_affine(params: MatrixScaledAffineParams) -> CatalogEntry:
    a, b = params.a, params.b
    algebra = AlgebraDescriptor.matrix(len(params.A))
    try:
        weight = algebra.element(params.A)
    except (BadElement, ValueError) as e:
        raise BadParameters(f"A must be a square matrix: {e}") from e
    if not is_positive(weight) or norm(weight) == 0:
        raise BadParameters("A must be a nonzero positive matrix")

    domain = _real_line(anchors=(b / (1 - a), b / (1 - a) + 1.0, 10.0))
    space = MetricSpaceInstance("R with d=|x-y|A", domain, algebra,
                                lambda x, y: scale(weight, float(abs(x[0] - y[0]))))
    return CatalogEntry(
        name="matrix_scaled_affine",
        space=space,
        T=_affine(f"{a:g}x+{b:g}", domain, a, b),
        spec=_affine_spec(a),
        expected=_affine_expected(a),
        notes="metric values are scalar multiples of A, so every comparison is a genuine Loewner test",
        start=10.0,
    )


@_entry("affine_pair", AffinePairParams)
def _affine_pair(params: AffinePairParams) -> CatalogEntry:
    z1 = params.b1 / (1 - params.a1)
    z2 = params.b2 / (1 - params.a2)
    space = _scalar_space("R with d=|x-y|", _real_line(anchors=(z1, z2)))
    S = _affine(f"{params.a2:g}x+{params.b2:g}", space.domain, params.a2, params.b2)
    common = abs(z1 - z2) <= 1e-12 * max(1.0, abs(z1))
    notes = f"common fixed point {z1:g}" if common else f"fixed points {z1:g} and {z2:g} differ"
    return CatalogEntry(
        name="affine_pair",
        space=space,
        T=_affine(f"{params.a1:g}x+{params.b1:g}", space.domain, params.a1, params.b1),
        spec=ContractionSpec.kannan_pair(tau=0.5, beta=0.25, eta=0.25, partner=S),
        expected=Expected(ExpectedOutcome.CERTIFIABLE_DEFECT, AFFINE_DEFECT if common else "no common fixed point"),
        notes=notes,
        S=S,
        solver=SolverKind.ALTERNATING,
        start=10.0,
    )


# Genuine interpolative Kannan maps


def _cubic_domain() -> DomainDescriptor:
    def membership(x: np.ndarray) -> bool:
        v = float(x[0])
        return v == 0.0 or 1.0 <= v <= 1.1 or 10.0 <= v <= 12.0

    def sampler(rng: np.random.Generator) -> np.ndarray:
        pick = rng.uniform()
        if pick < 0.1:
            return np.array([0.0])
        if pick < 0.5:
            return np.array([rng.uniform(1.0, 1.1)])
        return np.array([rng.uniform(10.0, 12.0)])

    return DomainDescriptor.region(1, membership, sampler, "{0} u [1,1.1] u [10,12]",
                                   anchors=tuple(np.array([v]) for v in (0.0, 1.0, 10.0, 12.0)))


def _cubic_map(domain: DomainDescriptor) -> SelfMap:
    # [10,12] -> [1,1.1] -> 0; the fixed point 0 is isolated
    return SelfMap("cubic", lambda x: np.where(x >= 10.0, 1.0 + 0.1 * ((x - 10.0) / 2.0) ** 3, 0.0), domain)


@_entry("kannan_cubic")
def _kannan_cubic(params: CatalogParams) -> CatalogEntry:
    domain = _cubic_domain()
    return CatalogEntry(
        name="kannan_cubic",
        space=_scalar_space("{0} u [1,1.1] u [10,12] with d=|x-y|", domain),
        T=_cubic_map(domain),
        spec=ContractionSpec.interpolative_kannan(tau=0.5, beta=0.5),
        expected=Expected(ExpectedOutcome.CERTIFIES_AND_CONVERGES),
        notes="images of [10,12] are within 1.1 of 0 while d(x,Tx) >= 8.9 there",
        start=11.0,
    )


@_entry("plane_kannan_cubic", PlaneParams)
def _plane_kannan_cubic(params: PlaneParams) -> CatalogEntry:
    domain = _cubic_domain()
    return CatalogEntry(
        name="plane_kannan_cubic",
        space=_plane_space(f"cubic domain with d=(|x-y|, {params.c:g}|x-y|)", domain, params.c),
        T=_cubic_map(domain),
        spec=ContractionSpec.interpolative_kannan(tau=0.5, beta=0.5),
        expected=Expected(ExpectedOutcome.CERTIFIES_AND_CONVERGES),
        notes="kannan_cubic with the honest R^2-valued metric",
        start=11.0,
    )


@_entry("matrix_two_scale")
def _matrix_two_scale(params: CatalogParams) -> CatalogEntry:
    algebra = AlgebraDescriptor.matrix(2)
    first = algebra.element([[2.0, 1.0], [1.0, 2.0]])
    second = algebra.element([[1.0, 0.0], [0.0, 3.0]])
    domain = DomainDescriptor.interval(-10.0, 10.0, anchors=(2.0, 10.0))

    def metric(x, y):
        return add(scale(first, float(abs(x[0] - y[0]))), scale(second, float(abs(x[0] ** 2 - y[0] ** 2))))

    return CatalogEntry(
        name="matrix_two_scale",
        space=MetricSpaceInstance("[-10,10] with d=|x-y|A+|x^2-y^2|B", domain, algebra, metric),
        T=_affine("0.5x+1", domain, 0.5, 1.0),
        spec=ContractionSpec.interpolative_kannan(tau=0.5, beta=0.5),
        expected=Expected(ExpectedOutcome.CERTIFIABLE_DEFECT,
                          "metric values do not commute; Strict products are not self-adjoint"),
        notes="compare --mode strict (ill-posed pairs) with --mode symmetrized",
        start=10.0,
    )


# Finite spaces


def metric_closure(weights: np.ndarray) -> np.ndarray:
    """Shortest-path closure of a (n, n, k) weight array, one Floyd-Warshall pass per component."""
    closed = np.array(weights, dtype=float)
    n = closed.shape[0]
    for k in range(n):
        closed = np.minimum(closed, closed[:, k:k + 1, :] + closed[k:k + 1, :, :])
    return closed


@_entry("finite_random_12", FiniteRandomParams)
def _finite_random_12(params: FiniteRandomParams) -> CatalogEntry:
    n = 12
    rng = np.random.default_rng(params.seed)
    labels = [f"p{i}" for i in range(n)]

    weights = rng.uniform(0.5, 2.0, size=(n, n, 2))
    weights = np.minimum(weights, weights.transpose(1, 0, 2))
    weights[np.arange(n), np.arange(n), :] = 0.0
    closed = metric_closure(weights)

    algebra = AlgebraDescriptor.diagonal(2)
    table = {(labels[i], labels[j]): closed[i, j] for i in range(n) for j in range(n)}
    space = MetricSpaceInstance.from_table(f"finite_random_12(seed={params.seed})", labels, table, algebra)

    images = rng.integers(n, size=n)
    fixed, left, right = rng.choice(n, size=3, replace=False)
    images[fixed] = fixed
    images[left], images[right] = right, left
    lookup = {labels[i]: labels[int(images[i])] for i in range(n)}

    return CatalogEntry(
        name="finite_random_12",
        space=space,
        T=SelfMap("tabulated", lambda x: lookup[x], space.domain),
        spec=ContractionSpec.interpolative_kannan(tau=0.9, beta=0.5),
        expected=Expected(ExpectedOutcome.CERTIFIABLE_DEFECT, "contains a 2-cycle"),
        notes=f"random map with fixed point {labels[fixed]} and 2-cycle {labels[left]}<->{labels[right]}",
        start=labels[0],
    )


@_entry("finite_constant_3")
def _finite_constant_3(params: CatalogParams) -> CatalogEntry:
    labels = ["a", "b", "c"]
    algebra = AlgebraDescriptor.diagonal(1)
    table = {(x, y): 0.0 if x == y else 1.0 for x in labels for y in labels}
    space = MetricSpaceInstance.from_table("discrete {a,b,c}", labels, table, algebra)
    return CatalogEntry(
        name="finite_constant_3",
        space=space,
        T=SelfMap("constant a", lambda x: "a", space.domain),
        spec=ContractionSpec.interpolative_kannan(tau=0.5, beta=0.5),
        expected=Expected(ExpectedOutcome.CERTIFIES_AND_CONVERGES),
        notes="every non-vacuous pair has Tx = Ty",
        start="c",
    )


# Altering distance functions


@_entry("identity")
def _identity(params: CatalogParams) -> AlteringEntry:
    return AlteringEntry("identity", AlteringDistance.identity(), AlgebraDescriptor.diagonal(2))


def _piecewise(a):
    data = np.where(a.data > 1.0, a.data ** 2, a.data)
    return a.descriptor.element(data)


@_entry("paper_piecewise")
def _paper_piecewise(params: CatalogParams) -> AlteringEntry:
    algebra = AlgebraDescriptor.diagonal(2)
    function = AlteringDistance("paper_piecewise", _piecewise, algebra,
                                probes=((1.0, 0.5), (0.5, 1.0), (1.0, 1.0)))
    return AlteringEntry("paper_piecewise", function, algebra,
                         notes="componentwise t -> t for t <= 1, t -> t^2 for t > 1 on R^2_+")


@_entry("corollary_linear", CorollaryLinearParams)
def _corollary_linear(params: CorollaryLinearParams) -> AlteringEntry:
    return AlteringEntry("corollary_linear", AlteringDistance.linear(params.k), AlgebraDescriptor.diagonal(1),
                         notes=f"psi(x) = (I - {params.k:g}) x")
