import numpy as np
import pytest

from core.cstar_algebra import (
    AlgebraDescriptor,
    OrderVerdict,
    add,
    frac_power,
    involution,
    is_hermitian,
    is_positive,
    leq,
    multiply,
    norm,
    random_positive,
    scale,
    spectrum,
    subtract,
)
from core.exceptions import BadElement, BadParameters, DescriptorMismatch, NotHermitian, NotPositive


BETAS = (0.25, 0.5, 0.75)


def shifted_positive(algebra, rng, shift=0.01):
    return add(random_positive(algebra, rng, size=rng.uniform(0.5, 5.0)), algebra.scalar(shift))


def random_element(algebra, rng):
    if algebra.is_commutative:
        return algebra.element(rng.normal(size=algebra.shape))
    return algebra.element(rng.normal(size=algebra.shape) + 1j * rng.normal(size=algebra.shape))


def random_self_adjoint(algebra, rng):
    return subtract(random_positive(algebra, rng), random_positive(algebra, rng))


def test_frac_power_round_trip(rng):
    for i in range(500):
        algebra = AlgebraDescriptor.matrix(1 + i % 6)
        a = shifted_positive(algebra, rng)
        beta = BETAS[i % 3]
        back = frac_power(frac_power(a, beta), 1.0 / beta)
        assert norm(subtract(back, a)) <= 1e-10 * norm(a)


def test_loewner_heinz_monotonicity(rng):
    for i in range(1000):
        algebra = AlgebraDescriptor.matrix(1 + i % 4)
        a = shifted_positive(algebra, rng)
        b = add(a, random_positive(algebra, rng, size=rng.uniform(0.0, 2.0)))
        beta = BETAS[i % 3]
        assert leq(frac_power(a, beta), frac_power(b, beta)).holds


def test_partial_order_properties(rng):
    for i in range(1000):
        algebra = AlgebraDescriptor.matrix(1 + i % 4) if i % 2 else AlgebraDescriptor.diagonal(1 + i % 3)
        a = random_positive(algebra, rng, size=3.0)
        b = add(a, random_positive(algebra, rng))
        c = add(b, random_positive(algebra, rng))
        assert leq(a, a).holds
        assert leq(a, b).holds and leq(b, c).holds and leq(a, c).holds
        assert leq(scale(a, 2.5), scale(b, 2.5)).holds
        assert leq(algebra.zero(), a).holds


def test_order_verdicts():
    algebra = AlgebraDescriptor.matrix(2)
    fails = leq(algebra.unit(), algebra.zero())
    assert fails.verdict == OrderVerdict.FAILS
    assert fails.witness_eigenvalue == pytest.approx(-1.0)

    skew = algebra.element([[1.0, 1.0], [0.0, 1.0]])
    ill_posed = leq(algebra.zero(), skew)
    assert ill_posed.verdict == OrderVerdict.ILL_POSED
    assert ill_posed.hermitian_defect > algebra.hermitian_tolerance

    holds = leq(algebra.zero(), algebra.element([[2.0, 1.0], [1.0, 2.0]]))
    assert holds.holds and holds.slack == pytest.approx(1.0)


def test_diagonal_order_is_componentwise():
    algebra = AlgebraDescriptor.diagonal(2)
    assert leq(algebra.element([1.0, 2.0]), algebra.element([1.5, 2.0])).holds
    result = leq(algebra.element([1.0, 2.0]), algebra.element([3.0, 1.0]))
    assert result.verdict == OrderVerdict.FAILS
    assert result.witness_eigenvalue == pytest.approx(-1.0)


def test_positivity_tolerance_scales_with_size():
    algebra = AlgebraDescriptor.diagonal(2)
    assert is_positive(algebra.element([1e6, -1e-5]))
    assert not is_positive(algebra.element([1.0, -1e-5]))


def test_frac_power_matches_spectral_definition():
    algebra = AlgebraDescriptor.matrix(2)
    a = algebra.element([[2.0, 1.0], [1.0, 2.0]])
    root = frac_power(a, 0.5)
    assert multiply(root, root).allclose(a, atol=1e-12)
    assert np.allclose(spectrum(root), np.sqrt([1.0, 3.0]))


def test_frac_power_of_zero_is_zero():
    for algebra in (AlgebraDescriptor.diagonal(3), AlgebraDescriptor.matrix(3)):
        assert norm(frac_power(algebra.zero(), 0.4)) == 0.0


def test_frac_power_errors():
    algebra = AlgebraDescriptor.matrix(2)
    with pytest.raises(NotPositive):
        frac_power(algebra.element([[-1.0, 0.0], [0.0, 1.0]]), 0.5)
    with pytest.raises(BadParameters):
        frac_power(algebra.unit(), 0.0)


def test_element_validation():
    with pytest.raises(BadElement):
        AlgebraDescriptor.diagonal(2).element([1.0, 2.0, 3.0])
    with pytest.raises(BadElement):
        AlgebraDescriptor.diagonal(2).element([1.0, np.nan])
    with pytest.raises(BadElement):
        AlgebraDescriptor.matrix(2).element(np.eye(3))


def test_elements_are_read_only():
    a = AlgebraDescriptor.diagonal(2).element([1.0, 2.0])
    with pytest.raises(ValueError):
        a.data[0] = 5.0


def test_descriptor_mismatch():
    with pytest.raises(DescriptorMismatch):
        add(AlgebraDescriptor.diagonal(2).unit(), AlgebraDescriptor.diagonal(3).unit())
    with pytest.raises(DescriptorMismatch):
        leq(AlgebraDescriptor.diagonal(2).zero(), AlgebraDescriptor.matrix(2).zero())


def test_cstar_identity(rng):
    for n in range(1, 6):
        algebra = AlgebraDescriptor.matrix(n)
        a = algebra.element(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        product = multiply(involution(a), a)
        assert is_hermitian(product)
        assert norm(product) == pytest.approx(norm(a) ** 2, rel=1e-12)


def test_operator_shorthands():
    algebra = AlgebraDescriptor.diagonal(2)
    a, b = algebra.element([1.0, 2.0]), algebra.element([3.0, 5.0])
    assert (a + b).allclose(algebra.element([4.0, 7.0]))
    assert (b - a).allclose(algebra.element([2.0, 3.0]))
    assert (-a).allclose(algebra.element([-1.0, -2.0]))
    assert (2.0 * a).allclose(algebra.element([2.0, 4.0]))
    assert (a @ b).allclose(algebra.element([3.0, 10.0]))
    assert norm(b) == 5.0


def test_involution_of_a_nilpotent():
    algebra = AlgebraDescriptor.matrix(2)
    a = algebra.element([[0.0, 1j], [0.0, 0.0]])
    assert np.array_equal(involution(a).data, np.array([[0.0, 0.0], [-1j, 0.0]]))


def test_involution_is_an_isometric_involution(rng):
    for i in range(1000):
        algebra = AlgebraDescriptor.matrix(1 + i % 8) if i % 2 else AlgebraDescriptor.diagonal(1 + i % 4)
        a = random_element(algebra, rng)
        assert np.array_equal(involution(involution(a)).data, a.data)
        assert norm(involution(a)) == pytest.approx(norm(a), rel=1e-12)


def test_involution_reverses_products(rng):
    for n in range(1, 9):
        algebra = AlgebraDescriptor.matrix(n)
        for _ in range(25):
            a, b = random_element(algebra, rng), random_element(algebra, rng)
            assert involution(multiply(a, b)).allclose(multiply(involution(b), involution(a)), atol=1e-10)


def test_spectrum_needs_a_self_adjoint_element():
    with pytest.raises(NotHermitian):
        spectrum(AlgebraDescriptor.matrix(2).element([[1.0, 1.0], [0.0, 1.0]]))


def test_order_is_antisymmetric(rng):
    both = 0
    for i in range(1000):
        algebra = AlgebraDescriptor.matrix(1 + i % 4) if i % 2 else AlgebraDescriptor.diagonal(1 + i % 3)
        a = random_positive(algebra, rng, size=3.0)
        nearby = add(a, scale(random_self_adjoint(algebra, rng), 1e-12))
        for b in (a, nearby, random_positive(algebra, rng, size=3.0)):
            if leq(a, b).holds and leq(b, a).holds:
                both += 1
                assert norm(subtract(a, b)) <= 1e-9 * max(1.0, norm(a))
    assert both >= 2000


def test_frac_power_raises_the_spectrum(rng):
    for i in range(300):
        algebra = AlgebraDescriptor.matrix(1 + i % 6) if i % 3 else AlgebraDescriptor.diagonal(1 + i % 4)
        a = shifted_positive(algebra, rng)
        beta = (0.25, 0.5, 0.75, 1.5, 2.5)[i % 5]
        expected = spectrum(a) ** beta
        assert np.allclose(spectrum(frac_power(a, beta)), expected, rtol=1e-9, atol=1e-10 * max(1.0, expected[-1]))
