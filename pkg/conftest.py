import numpy as np
import pytest

from core.contraction_conditions import SelfMap
from core.cstar_algebra import AlgebraDescriptor
from core.metric_spaces import DomainDescriptor, MetricSpaceInstance
from core.settings import setup_logging


@pytest.fixture(autouse=True)
def quiet_logging():
    setup_logging("WARNING")
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def interval_space():
    """Factory for [low, high] with the scalar metric |x - y| in DiagonalReal(1)."""
    def build(low: float, high: float, **options) -> MetricSpaceInstance:
        algebra = AlgebraDescriptor.diagonal(1)
        domain = DomainDescriptor.interval(low, high, **options)
        return MetricSpaceInstance(f"[{low},{high}]", domain, algebra,
                                   lambda x, y: algebra.element([abs(x[0] - y[0])]))
    return build


@pytest.fixture
def self_map():
    def build(name, fn, space: MetricSpaceInstance) -> SelfMap:
        return SelfMap(name, fn, space.domain)
    return build


@pytest.fixture
def discrete_space():
    """Finite space with the discrete metric valued in DiagonalReal(1)."""
    def build(labels) -> MetricSpaceInstance:
        algebra = AlgebraDescriptor.diagonal(1)
        table = {(x, y): 0.0 if x == y else 1.0 for x in labels for y in labels}
        return MetricSpaceInstance.from_table("discrete", labels, table, algebra)
    return build
