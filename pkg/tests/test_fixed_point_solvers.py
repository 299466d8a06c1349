import numpy as np
import pytest

from core.contraction_conditions import ContractionSpec, SelfMap
from core.cstar_algebra import OrderVerdict
from core.exceptions import BadInverse, BadParameters, PreconditionFailed
from core.fixed_point_solvers import (
    SolveStatus,
    alternating_solve,
    empirical_rate,
    picard_solve,
    r_interpolative_solve,
    reich_envelope,
    reich_solve,
    reich_tail_bound,
    run_solver,
    uniqueness_probe,
    weak_solve,
)
from core.scenario_catalog import catalog_build
from models.schemas import SolverKind, StopRule


def test_affine_run_follows_the_geometric_envelope():
    entry = catalog_build("affine_scalar", a=0.5, b=1.0)
    result = picard_solve(entry.space, entry.T, 10.0, entry.spec)

    assert result.status == SolveStatus.CONVERGED
    assert abs(result.fixed_point[0] - 2.0) <= 1e-9
    assert result.residual <= 1e-9
    assert len(result.trace) - 1 <= 60
    assert result.bound_checks and all(c.holds and c.slack >= -1e-12 for c in result.bound_checks)
    assert result.empirical_rate == pytest.approx(0.5, abs=1e-6)
    assert result.empirical_rate <= entry.spec.tau + 0.05


def test_affine_run_respects_the_tail_bound():
    entry = catalog_build("affine_scalar", a=0.5, b=1.0)
    result = picard_solve(entry.space, entry.T, 10.0, entry.spec)
    tau = entry.spec.tau
    first = result.trace.step_norms[0]
    z = result.fixed_point
    for m, x in enumerate(result.trace.points):
        assert abs(x[0] - z[0]) <= tau ** m / (1 - tau) * first * (1 + 1e-6)


def test_matrix_run_compares_in_the_loewner_order():
    entry = catalog_build("matrix_scaled_affine", A=[[2.0, 1.0], [1.0, 2.0]], a=0.5, b=1.0)
    result = picard_solve(entry.space, entry.T, 10.0, entry.spec)

    assert result.converged
    assert len(result.bound_checks) >= 30
    assert all(c.verdict == OrderVerdict.HOLDS for c in result.bound_checks)


def test_uniqueness_on_the_real_line():
    entry = catalog_build("affine_scalar")
    report = uniqueness_probe(entry.space, entry.T, SolverKind.PICARD, entry.spec, 100, seed=0)
    assert report.unique
    assert report.converged == 100
    assert report.max_spread <= 1e-8
    assert report.cluster_count == 1
    assert report.clusters[0] == pytest.approx([2.0])


def test_uniqueness_probe_results_do_not_depend_on_workers():
    entry = catalog_build("affine_scalar")
    serial = uniqueness_probe(entry.space, entry.T, SolverKind.PICARD, entry.spec, 30, seed=5, workers=1)
    parallel = uniqueness_probe(entry.space, entry.T, SolverKind.PICARD, entry.spec, 30, seed=5, workers=4)
    assert [r.fixed_point[0] for r in serial.results] == [r.fixed_point[0] for r in parallel.results]


def test_identity_map_has_a_cluster_per_start(interval_space):
    space = interval_space(-1.0, 1.0)
    identity = SelfMap("identity", lambda x: x, space.domain)
    report = uniqueness_probe(space, identity, SolverKind.PICARD, None, 10, seed=2)
    assert not report.unique
    assert report.cluster_count == 10


def test_halving_map_is_unique(interval_space):
    space = interval_space(-1.0, 1.0)
    T = SelfMap("x/2", lambda x: x / 2, space.domain)
    report = uniqueness_probe(space, T, SolverKind.PICARD, None, 50, seed=1)
    assert report.unique
    assert abs(report.clusters[0][0]) <= 1e-9


def test_uniqueness_needs_two_starts(interval_space):
    space = interval_space(-1.0, 1.0)
    with pytest.raises(BadParameters):
        uniqueness_probe(space, SelfMap("x/2", lambda x: x / 2, space.domain), SolverKind.PICARD, None, 1, 0)


@pytest.mark.parametrize("seed", range(20))
def test_alternating_pair_reaches_the_common_fixed_point(seed):
    entry = catalog_build("affine_pair")
    x0 = entry.space.domain.sample(np.random.default_rng(seed))
    result = alternating_solve(entry.space, entry.T, entry.S, x0, entry.spec)
    assert result.converged
    assert result.fixed_point[0] == pytest.approx(3.0, abs=1e-8)
    assert result.residuals["T"] <= 1e-8 and result.residuals["S"] <= 1e-8


def test_alternating_with_equal_maps_is_picard():
    entry = catalog_build("affine_scalar")
    picard = picard_solve(entry.space, entry.T, 10.0, entry.spec)
    alternating = alternating_solve(entry.space, entry.T, entry.T, 10.0, entry.spec)
    assert [p[0] for p in picard.trace.points] == [p[0] for p in alternating.trace.points]
    assert alternating.converged


def test_alternating_without_common_fixed_point(interval_space):
    space = interval_space(-10.0, 10.0)
    T = SelfMap("x/2", lambda x: x / 2, space.domain)
    S = SelfMap("x/2+1", lambda x: x / 2 + 1, space.domain)
    result = alternating_solve(space, T, S, 5.0, stop=StopRule(max_iterations=200))
    assert result.status == SolveStatus.MAX_ITERATIONS
    assert np.isnan(result.residual)
    assert len(result.trace) == 201


def test_r_interpolative_reaches_one():
    entry = catalog_build("positive_r_interpolative")
    result = r_interpolative_solve(entry.space, entry.T, entry.R, entry.R_solve, 3.0, entry.spec)
    assert result.converged
    assert result.fixed_point[0] == pytest.approx(1.0, abs=1e-8)
    assert result.residuals["R-T"] <= 1e-8


def test_r_interpolative_beyond_two_leaves_the_domain():
    entry = catalog_build("paper_example_r_interpolative")
    result = run_solver(entry.solver, entry.space, entry.T, 3.0, entry.spec, R=entry.R, R_solve=entry.R_solve)
    assert result.status == SolveStatus.DOMAIN_EXIT
    assert result.exit_iteration == 1
    assert len(result.trace) == 1


def test_r_interpolative_rejects_a_wrong_inverse():
    entry = catalog_build("positive_r_interpolative")
    with pytest.raises(BadInverse):
        r_interpolative_solve(entry.space, entry.T, entry.R, lambda y: np.array([4.0]), 3.0, entry.spec)


def test_r_identity_reduces_to_picard():
    entry = catalog_build("affine_scalar")
    identity = SelfMap("identity", lambda x: x, entry.space.domain)
    result = r_interpolative_solve(entry.space, entry.T, identity, lambda y: y, 10.0)
    assert result.converged
    assert abs(result.fixed_point[0] - 2.0) <= 1e-9


def test_r_interpolative_waits_for_a_small_coincidence_residual(interval_space):
    space = interval_space(-10.0, 10.0)
    T = SelfMap("x/2+1", lambda x: x / 2 + 1, space.domain)
    R = SelfMap("100x", lambda x: 100 * x, space.domain)
    stop = StopRule()
    result = r_interpolative_solve(space, T, R, lambda y: y / 100, 5.0, stop=stop)
    assert result.converged
    assert result.residual <= 10 * stop.step_norm_epsilon
    assert result.residuals == {"R-T": result.residual}
    assert result.fixed_point[0] == pytest.approx(1 / 99.5, abs=1e-11)


@pytest.fixture
def reich_setup(interval_space):
    space = interval_space(-5.0, 5.0)
    T = SelfMap("x/2", lambda x: x / 2, space.domain)
    return space, T, ContractionSpec.reich(tau=0.7, alpha=0.4, beta=0.4, eta=0.4)


def test_reich_rejects_a_start_outside_the_unit_ball(reich_setup):
    space, T, spec = reich_setup
    with pytest.raises(PreconditionFailed):
        reich_solve(space, T, 4.0, spec)


def test_reich_envelope_holds_from_a_compliant_start(reich_setup):
    space, T, spec = reich_setup
    result = reich_solve(space, T, 1.0, spec)
    assert result.converged
    assert abs(result.fixed_point[0]) <= 1e-9
    assert len(result.bound_checks) >= 30
    assert all(c.holds for c in result.bound_checks)


def test_reich_envelope_is_tight_for_smaller_tau(reich_setup):
    space, T, _ = reich_setup
    spec = ContractionSpec.reich(tau=0.6, alpha=0.4, beta=0.4, eta=0.4)
    result = reich_solve(space, T, 1.0, spec)
    assert not all(c.holds for c in result.bound_checks)


def test_reich_start_at_the_fixed_point(reich_setup):
    space, T, spec = reich_setup
    result = reich_solve(space, T, 0.0, spec)
    assert result.converged
    assert len(result.trace) == 1


def test_reich_solver_needs_a_reich_spec(reich_setup):
    space, T, _ = reich_setup
    with pytest.raises(BadParameters):
        reich_solve(space, T, 1.0, ContractionSpec.interpolative_kannan(tau=0.5, beta=0.5))


def test_reich_helpers():
    assert reich_envelope(0.5, 0.5, 2) == pytest.approx(0.0625)
    assert reich_tail_bound(0.5, 0.5, 0) == pytest.approx(1.5 / 0.75)


@pytest.fixture
def weak_setup(interval_space):
    space = interval_space(-1.0, 1.0)
    T = SelfMap("x/2", lambda x: x / 2, space.domain)
    third = 1 / 3
    return space, T, ContractionSpec.corollary(0.5, third, third, third)


def test_weak_solver_steps_never_grow(weak_setup):
    space, T, spec = weak_setup
    stop = StopRule(step_norm_epsilon=1e-30, max_iterations=50)
    for x0 in space.domain.sample_many(np.random.default_rng(11), 10):
        result = weak_solve(space, T, x0, spec, stop)
        assert result.status == SolveStatus.MAX_ITERATIONS
        assert len(result.trace.steps) == 50
        assert result.monotonicity_failures == []
        assert len(result.bound_checks) == 49


def test_weak_solver_at_the_fixed_point(weak_setup):
    space, T, spec = weak_setup
    assert weak_solve(space, T, 0.0, spec).converged


def test_picard_on_the_example_kannan_leaves_the_domain():
    entry = catalog_build("paper_example_kannan")
    result = picard_solve(entry.space, entry.T, 3.0, entry.spec)
    assert result.status == SolveStatus.DOMAIN_EXIT
    assert result.exit_iteration == 1
    assert "outside its domain" in result.message


def test_start_outside_the_domain():
    entry = catalog_build("paper_example_kannan")
    with pytest.raises(BadParameters):
        picard_solve(entry.space, entry.T, 1.0)


@pytest.mark.parametrize("name", ["kannan_cubic", "plane_kannan_cubic", "finite_constant_3"])
def test_certified_scenarios_converge_with_non_increasing_steps(name):
    entry = catalog_build(name)
    for x0 in entry.space.domain.sample_many(np.random.default_rng(0), 20):
        result = picard_solve(entry.space, entry.T, x0, entry.spec)
        assert result.converged
        norms = result.trace.step_norms
        assert all(later <= earlier for earlier, later in zip(norms[1:], norms[2:]))
        assert all(c.holds for c in result.bound_checks)


def test_empirical_rate_edge_cases():
    assert empirical_rate([]) == 0.0
    assert empirical_rate([1.0, 0.0, 0.0]) == 0.0
    assert empirical_rate([0.25 ** n for n in range(12)]) == pytest.approx(0.25)


def test_run_solver_requirements():
    entry = catalog_build("affine_scalar")
    with pytest.raises(BadParameters):
        run_solver(SolverKind.ALTERNATING, entry.space, entry.T, 10.0, entry.spec)
    with pytest.raises(BadParameters):
        run_solver(SolverKind.R_INTERPOLATIVE, entry.space, entry.T, 10.0, entry.spec)
    with pytest.raises(BadParameters):
        run_solver(SolverKind.WEAK, entry.space, entry.T, 10.0, None)
