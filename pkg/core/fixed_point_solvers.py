"""
Constructive fixed-point iterations with per-step envelope checks.

Every solver keeps the accepted points of its orbit in a ``SequenceRecord``. It stops
once the next step would be shorter than ``stop.step_norm_epsilon``, without
appending that point. A map leaving its domain ends the run with status
``DomainExit`` and the partial trace; it is never raised to the caller.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from loguru import logger

from core import settings
from core.contraction_conditions import ContractionSpec, SelfMap
from core.cstar_algebra import AlgebraElement, OrderResult, OrderVerdict, leq, norm, scale
from core.exceptions import BadInverse, BadParameters, DomainExit, PreconditionFailed
from core.metric_spaces import MetricSpaceInstance, Point, SequenceRecord
from models.schemas import ConditionKind, SolverKind, StopRule


INVERSE_CHECKS = 10
INVERSE_TOLERANCE = 1e-9
CLUSTER_RADIUS = 1e-7


class SolveStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DOMAIN_EXIT = "DomainExit"
    ILL_POSED_ORDER = "IllPosedOrder"


@dataclass
class SolveResult:
    status: SolveStatus
    fixed_point: Point | None
    trace: SequenceRecord
    residual: float
    empirical_rate: float
    bound_checks: list[OrderResult] = field(default_factory=list)
    residuals: dict[str, float] = field(default_factory=dict)
    monotonicity_failures: list[int] = field(default_factory=list)
    exit_iteration: int | None = None
    solver: SolverKind = SolverKind.PICARD
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == SolveStatus.CONVERGED


def reich_envelope(tau: float, eta: float, n: int) -> float:
    """tau**(n / (1 - eta)), the step envelope of a Reich-type orbit started inside the unit ball."""
    return tau ** (n / (1.0 - eta))


def reich_tail_bound(tau: float, eta: float, m: int) -> float:
    """Sum of the Reich step envelopes from m on: tau**(m/(1-eta)) (1 + tau) / (1 - tau**2)."""
    return tau ** (m / (1.0 - eta)) * (1.0 + tau) / (1.0 - tau * tau)


def empirical_rate(step_norms: list[float]) -> float:
    """exp of the least-squares slope of log step norms over the last half of the trace."""
    tail = step_norms[len(step_norms) // 2:]
    positive = [(i, s) for i, s in enumerate(tail) if s > 0 and np.isfinite(s)]
    if len(positive) < 2:
        return 0.0
    index, values = zip(*positive)
    slope, _ = np.polyfit(np.array(index, dtype=float), np.log(values), 1)
    return float(np.exp(slope))


def _start(space: MetricSpaceInstance, x0: Point) -> Point:
    x = space.domain.coerce(x0)
    if not space.domain.contains(x):
        raise BadParameters(f"start point {space.domain.to_json(x)} is outside {space.domain.description}")
    return x


def _residual(space: MetricSpaceInstance, m: SelfMap, z: Point) -> float:
    try:
        return norm(space.d(z, m(z)))
    except DomainExit:
        return float("inf")


def _iterate(space: MetricSpaceInstance, advance: Callable[[Point, int], Point], x0: Point, stop: StopRule,
             *, on_step: Callable[[int, AlgebraElement], None] | None = None,
             accept: Callable[[Point], bool] | None = None, solver: SolverKind) -> SolveResult:
    """Shared orbit loop: ``advance(x_n, n)`` gives x_n+1, ``on_step`` sees each accepted step."""
    x = _start(space, x0)
    record = SequenceRecord([x], space=space)

    for n in range(stop.max_iterations):
        try:
            y = advance(x, n)
        except DomainExit as e:
            logger.info(f"{solver.value} left the domain at iteration {n + 1}: {e}")
            return SolveResult(SolveStatus.DOMAIN_EXIT, None, record, float("inf"),
                               empirical_rate(record.step_norms), exit_iteration=n + 1,
                               solver=solver, message=str(e))
        step = space.d(x, y)
        if norm(step) < stop.step_norm_epsilon and (accept is None or accept(x)):
            return SolveResult(SolveStatus.CONVERGED, x, record, norm(step),
                               empirical_rate(record.step_norms), solver=solver)
        if on_step is not None:
            on_step(n, step)
        record.append(y, step)
        x = y

    return SolveResult(SolveStatus.MAX_ITERATIONS, None, record, float("nan"),
                       empirical_rate(record.step_norms), solver=solver,
                       message=f"no convergence within {stop.max_iterations} iterations")


def _geometric_checks(spec: ContractionSpec | None, checks: list[OrderResult]):
    ratio = spec.envelope_ratio if spec is not None else None
    if ratio is None:
        return None
    first: list[AlgebraElement] = []

    def on_step(n: int, step: AlgebraElement) -> None:
        if not first:
            first.append(step)
        checks.append(leq(step, scale(first[0], ratio ** n)))

    return on_step


def _finish(result: SolveResult, checks: list[OrderResult], label: str) -> SolveResult:
    result.bound_checks = checks
    failed = sum(not c.holds for c in checks)
    logger.info(f"{label}: {result.status.value} after {len(result.trace) - 1} steps, "
                f"residual {result.residual:.3e}, {failed}/{len(checks)} bound checks not holding")
    return result


# Picard iteration x_n+1 = T x_n; with a spec carrying a geometric ratio q each step
# is compared in the order against q**n d(x0, x1)
def picard_solve(space: MetricSpaceInstance, T: SelfMap, x0: Point, spec: ContractionSpec | None = None,
                 stop: StopRule = StopRule()) -> SolveResult:
    checks: list[OrderResult] = []
    result = _iterate(space, lambda x, n: T(x), x0, stop,
                      on_step=_geometric_checks(spec, checks), solver=SolverKind.PICARD)
    if result.converged:
        result.residuals = {"T": result.residual}
    return _finish(result, checks, f"Picard on '{T.name}'")


# Alternates x_2n+1 = S x_2n and x_2n+2 = T x_2n+1; a point is accepted as the common
# fixed point only once both residuals are within 10 epsilon
def alternating_solve(space: MetricSpaceInstance, T: SelfMap, S: SelfMap, x0: Point,
                      spec: ContractionSpec | None = None, stop: StopRule = StopRule()) -> SolveResult:
    limit = 10 * stop.step_norm_epsilon
    residuals: dict[str, float] = {}

    def both_small(z: Point) -> bool:
        residuals["T"] = _residual(space, T, z)
        residuals["S"] = _residual(space, S, z)
        return residuals["T"] <= limit and residuals["S"] <= limit

    checks: list[OrderResult] = []
    result = _iterate(space, lambda x, n: S(x) if n % 2 == 0 else T(x), x0, stop,
                      on_step=_geometric_checks(spec, checks), accept=both_small,
                      solver=SolverKind.ALTERNATING)
    if result.converged:
        result.residuals = dict(residuals)
        result.residual = max(residuals.values())
    return _finish(result, checks, f"Alternating on '{T.name}'/'{S.name}'")


def r_interpolative_solve(space: MetricSpaceInstance, T: SelfMap, R: SelfMap, R_solve: Callable[[Point], Point],
                          x0: Point, spec: ContractionSpec | None = None,
                          stop: StopRule = StopRule()) -> SolveResult:
    """Solves R x_n+1 = T x_n through the supplied right inverse of R.

    The inverse is validated on the first iterations: R(R_solve(y)) must reproduce y.
    A point is accepted only once ||d(Rv, Tv)|| is within 10 epsilon.
    Bound checks follow the contraction of the image orbit, d(Tx_n+1, Tx_n) <= tau d(Tx_n, Tx_n-1).
    """
    domain = space.domain
    images: list[Point] = []
    checks: list[OrderResult] = []

    def advance(x: Point, n: int) -> Point:
        y = T(x)
        images.append(y)
        nxt = domain.coerce(R_solve(y))
        if n < INVERSE_CHECKS:
            back, _ = R.image(nxt)
            gap = domain.distance(back, y)
            size = 1.0 if domain.is_finite else max(1.0, float(np.max(np.abs(y))))
            if not gap <= INVERSE_TOLERANCE * size:
                raise BadInverse(f"R(R_solve(y)) misses y = {domain.to_json(y)} by {gap}")
        if not domain.contains(nxt):
            raise DomainExit("R_solve", domain.to_json(y), domain.to_json(nxt))
        return nxt

    limit = 10 * stop.step_norm_epsilon
    residuals: dict[str, float] = {}

    def coincides(v: Point) -> bool:
        rv, _ = R.image(v)
        tv, _ = T.image(v)
        residuals["R-T"] = norm(space.d(rv, tv))
        return residuals["R-T"] <= limit

    tau = spec.tau if spec is not None else None

    def on_step(n: int, step: AlgebraElement) -> None:
        # images holds T x_0 .. T x_n
        if tau is not None and len(images) >= 3:
            current = space.d(images[-1], images[-2])
            previous = space.d(images[-2], images[-3])
            checks.append(leq(current, scale(previous, tau)))

    result = _iterate(space, advance, x0, stop, on_step=on_step, accept=coincides,
                      solver=SolverKind.R_INTERPOLATIVE)
    if result.converged:
        result.residual = residuals["R-T"]
        result.residuals = dict(residuals)
    return _finish(result, checks, f"R-interpolative on '{T.name}' through '{R.name}'")


def _check_unit_ball(space: MetricSpaceInstance, T: SelfMap, x0: Point, solver: SolverKind) -> SolveResult | None:
    x = _start(space, x0)
    try:
        first = space.d(x, T(x))
    except DomainExit as e:
        return SolveResult(SolveStatus.DOMAIN_EXIT, None, SequenceRecord([x], space=space), float("inf"),
                           0.0, exit_iteration=1, solver=solver, message=str(e))
    order = leq(first, space.algebra.unit())
    if order.verdict == OrderVerdict.ILL_POSED:
        return SolveResult(SolveStatus.ILL_POSED_ORDER, None, SequenceRecord([x], space=space), norm(first),
                           0.0, bound_checks=[order], solver=solver,
                           message="d(x0, Tx0) <= I is not a well-posed comparison")
    if not order.holds:
        raise PreconditionFailed(f"d(x0, Tx0) <= I fails at x0 = {space.domain.to_json(x)} "
                                 f"(eigenvalue {order.witness_eigenvalue:.6g})")
    return None


def _require(spec: ContractionSpec, kind: ConditionKind, solver: str) -> None:
    if spec.kind != kind:
        raise BadParameters(f"{solver} needs a {kind.value} spec, got {spec.kind.value}")


def reich_solve(space: MetricSpaceInstance, T: SelfMap, x0: Point, spec: ContractionSpec,
                stop: StopRule = StopRule()) -> SolveResult:
    _require(spec, ConditionKind.REICH_TYPE, "reich_solve")
    early = _check_unit_ball(space, T, x0, SolverKind.REICH)
    if early is not None:
        return early

    unit = space.algebra.unit()
    checks: list[OrderResult] = []

    def on_step(n: int, step: AlgebraElement) -> None:
        checks.append(leq(step, scale(unit, reich_envelope(spec.tau, spec.eta, n))))

    result = _iterate(space, lambda x, n: T(x), x0, stop, on_step=on_step, solver=SolverKind.REICH)
    if result.converged:
        result.residuals = {"T": result.residual}
    return _finish(result, checks, f"Reich on '{T.name}'")


def weak_solve(space: MetricSpaceInstance, T: SelfMap, x0: Point, spec: ContractionSpec,
               stop: StopRule = StopRule()) -> SolveResult:
    """Picard iteration under a weakly contractive Reich spec, asserting that steps never grow."""
    _require(spec, ConditionKind.WEAK_REICH, "weak_solve")
    early = _check_unit_ball(space, T, x0, SolverKind.WEAK)
    if early is not None:
        return early

    checks: list[OrderResult] = []
    failures: list[int] = []
    previous: list[AlgebraElement] = []

    def on_step(n: int, step: AlgebraElement) -> None:
        if previous:
            order = leq(step, previous[0])
            checks.append(order)
            if not order.holds:
                failures.append(n)
        previous[:] = [step]

    result = _iterate(space, lambda x, n: T(x), x0, stop, on_step=on_step, solver=SolverKind.WEAK)
    result.monotonicity_failures = failures
    if result.converged:
        result.residuals = {"T": result.residual}
    return _finish(result, checks, f"Weak Reich on '{T.name}'")


def run_solver(kind: SolverKind, space: MetricSpaceInstance, T: SelfMap, x0: Point,
               spec: ContractionSpec | None = None, stop: StopRule = StopRule(), *,
               S: SelfMap | None = None, R: SelfMap | None = None,
               R_solve: Callable[[Point], Point] | None = None) -> SolveResult:
    if kind == SolverKind.PICARD:
        return picard_solve(space, T, x0, spec, stop)
    if kind == SolverKind.ALTERNATING:
        if S is None:
            raise BadParameters("alternating solver needs a partner map S")
        return alternating_solve(space, T, S, x0, spec, stop)
    if kind == SolverKind.R_INTERPOLATIVE:
        if R is None or R_solve is None:
            raise BadParameters("R-interpolative solver needs R and R_solve")
        return r_interpolative_solve(space, T, R, R_solve, x0, spec, stop)
    if spec is None:
        raise BadParameters(f"{kind.value} solver needs a contraction spec")
    if kind == SolverKind.REICH:
        return reich_solve(space, T, x0, spec, stop)
    return weak_solve(space, T, x0, spec, stop)


@dataclass(frozen=True)
class UniquenessReport:
    unique: bool
    cluster_count: int
    max_spread: float
    converged: int
    non_converged: int
    clusters: list = field(default_factory=list)
    results: list[SolveResult] = field(default_factory=list, repr=False)


# Runs the solver from `starts` sampled points; unique means every converged limit lies
# within CLUSTER_RADIUS of every other one. Runs may go in parallel, results keep start order
def uniqueness_probe(space: MetricSpaceInstance, T: SelfMap, solver_kind: SolverKind,
                     spec: ContractionSpec | None, starts: int, seed: int, *,
                     S: SelfMap | None = None, R: SelfMap | None = None,
                     R_solve: Callable[[Point], Point] | None = None,
                     stop: StopRule = StopRule(), workers: int | None = None) -> UniquenessReport:
    if starts < 2:
        raise BadParameters(f"uniqueness probe needs at least 2 starts, got {starts}")
    domain = space.domain
    points = domain.sample_many(np.random.default_rng(seed), starts)

    def solve(x0: Point) -> SolveResult | None:
        try:
            return run_solver(solver_kind, space, T, x0, spec, stop, S=S, R=R, R_solve=R_solve)
        except (PreconditionFailed, BadInverse) as e:
            logger.info(f"Start {domain.to_json(x0)} rejected: {e}")
            return None

    workers = workers or settings.WORKERS
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, points))
    else:
        results = [solve(x0) for x0 in points]

    limits = [r.fixed_point for r in results if r is not None and r.converged]
    clusters: list[list[Point]] = []
    for z in limits:
        for cluster in clusters:
            if domain.distance(cluster[0], z) <= CLUSTER_RADIUS:
                cluster.append(z)
                break
        else:
            clusters.append([z])

    spread = max((domain.distance(p, q) for i, p in enumerate(limits) for q in limits[i + 1:]), default=0.0)
    report = UniquenessReport(
        unique=bool(limits) and spread <= CLUSTER_RADIUS,
        cluster_count=len(clusters),
        max_spread=spread,
        converged=len(limits),
        non_converged=len(results) - len(limits),
        clusters=[domain.to_json(c[0]) for c in clusters],
        results=[r for r in results if r is not None],
    )
    logger.info(f"Uniqueness probe on '{T.name}': {report.converged}/{starts} converged, "
                f"{report.cluster_count} clusters, spread {report.max_spread:.3e}")
    return report


def brute_force_fixed_points(space: MetricSpaceInstance, T: SelfMap) -> list[Point]:
    if not space.domain.is_finite:
        raise BadParameters("brute-force fixed points need a finite domain")
    return [p for p in space.domain.labels if T.image(p)[0] == p]
