"""
The two concrete C*-algebras used throughout the package.

``DiagonalReal(m)`` holds real m-tuples with componentwise product and max-norm;
it is commutative and every element is self-adjoint. ``HermitianMatrix(n)`` holds
complex n x n matrices with the matrix product, conjugate transpose and the
operator 2-norm. Positivity, the order a <= b (b - a positive) and fractional
powers go through the spectrum, which for matrices comes from the cyclic Jacobi
solver in ``core.jacobi``.

Elements are immutable values: their arrays are read-only and every operation
returns a new element.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.exceptions import BadElement, BadParameters, DescriptorMismatch, NotHermitian, NotPositive
from core.jacobi import jacobi_eigh
from core.settings import HERMITIAN_TOLERANCE, POSITIVITY_TOLERANCE


class AlgebraKind(str, Enum):
    DIAGONAL_REAL = "diagonal_real"
    HERMITIAN_MATRIX = "hermitian_matrix"


class AlgebraDescriptor(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: AlgebraKind
    dimension: int = Field(ge=1)
    positivity_tolerance: float = Field(POSITIVITY_TOLERANCE, ge=0, le=1e-6)
    hermitian_tolerance: float = Field(HERMITIAN_TOLERANCE, ge=0, le=1e-6)

    @classmethod
    def diagonal(cls, m: int, **tolerances) -> "AlgebraDescriptor":
        return cls(kind=AlgebraKind.DIAGONAL_REAL, dimension=m, **tolerances)

    @classmethod
    def matrix(cls, n: int, **tolerances) -> "AlgebraDescriptor":
        return cls(kind=AlgebraKind.HERMITIAN_MATRIX, dimension=n, **tolerances)

    @property
    def is_commutative(self) -> bool:
        return self.kind == AlgebraKind.DIAGONAL_REAL

    @property
    def shape(self) -> tuple[int, ...]:
        if self.is_commutative:
            return (self.dimension,)
        return (self.dimension, self.dimension)

    @property
    def label(self) -> str:
        if self.is_commutative:
            return f"DiagonalReal({self.dimension})"
        return f"HermitianMatrix({self.dimension})"

    def element(self, data) -> "AlgebraElement":
        if self.is_commutative:
            array = np.array(data, dtype=float)
            if array.ndim == 0:
                array = np.full(self.shape, float(array))
        else:
            array = np.array(data, dtype=complex)
        return AlgebraElement(self, array)

    def zero(self) -> "AlgebraElement":
        return self.element(np.zeros(self.shape))

    def unit(self) -> "AlgebraElement":
        if self.is_commutative:
            return self.element(np.ones(self.shape))
        return self.element(np.eye(self.dimension))

    def scalar(self, r: float) -> "AlgebraElement":
        """The element r * I."""
        return scale(self.unit(), r)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    descriptor: AlgebraDescriptor
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != self.descriptor.shape:
            raise BadElement(
                f"{self.descriptor.label} expects shape {self.descriptor.shape}, got {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise BadElement("element entries must be finite")
        self.data.flags.writeable = False

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return add(self, other)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return subtract(self, other)

    def __neg__(self) -> "AlgebraElement":
        return scale(self, -1.0)

    def __rmul__(self, r: float) -> "AlgebraElement":
        return scale(self, r)

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return multiply(self, other)

    def __repr__(self) -> str:
        return f"AlgebraElement({self.descriptor.label}, {np.array2string(self.data, precision=6)})"

    def allclose(self, other: "AlgebraElement", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        _same_algebra(self, other)
        return bool(np.allclose(self.data, other.data, rtol=rtol, atol=atol))


class OrderVerdict(str, Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    ILL_POSED = "IllPosed"


@dataclass(frozen=True)
class OrderResult:
    verdict: OrderVerdict
    witness_eigenvalue: float | None = None
    hermitian_defect: float | None = None
    slack: float | None = None  # least eigenvalue of b - a whenever it was computed

    @property
    def holds(self) -> bool:
        return self.verdict == OrderVerdict.HOLDS


def _same_algebra(a: AlgebraElement, b: AlgebraElement) -> None:
    if a.descriptor is not b.descriptor and a.descriptor != b.descriptor:
        raise DescriptorMismatch(f"{a.descriptor.label} vs {b.descriptor.label}")


def involution(a: AlgebraElement) -> AlgebraElement:
    if a.descriptor.is_commutative:
        return a
    return AlgebraElement(a.descriptor, a.data.conj().T.copy())


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _same_algebra(a, b)
    if a.descriptor.is_commutative:
        return AlgebraElement(a.descriptor, a.data * b.data)
    return AlgebraElement(a.descriptor, a.data @ b.data)


def add(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _same_algebra(a, b)
    return AlgebraElement(a.descriptor, a.data + b.data)


def subtract(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _same_algebra(a, b)
    return AlgebraElement(a.descriptor, a.data - b.data)


def scale(a: AlgebraElement, r: float) -> AlgebraElement:
    return AlgebraElement(a.descriptor, a.data * r)


def norm(a: AlgebraElement) -> float:
    """Max modulus for tuples, largest singular value for matrices."""
    if a.descriptor.is_commutative:
        return float(np.max(np.abs(a.data)))
    return float(np.linalg.norm(a.data, 2))


def hermitian_defect(a: AlgebraElement) -> float:
    """Relative Frobenius distance between a and a*; zero for real tuples."""
    if a.descriptor.is_commutative:
        return 0.0
    skew = np.linalg.norm(a.data - a.data.conj().T)
    return float(skew / max(1.0, np.linalg.norm(a.data)))


def is_hermitian(a: AlgebraElement) -> bool:
    return hermitian_defect(a) <= a.descriptor.hermitian_tolerance


def _eigh(a: AlgebraElement) -> tuple[np.ndarray, np.ndarray | None]:
    if a.descriptor.is_commutative:
        return np.sort(a.data), None
    defect = hermitian_defect(a)
    if defect > a.descriptor.hermitian_tolerance:
        raise NotHermitian(f"hermitian defect {defect:.3e} exceeds {a.descriptor.hermitian_tolerance:.1e}")
    return jacobi_eigh(a.data)


def spectrum(a: AlgebraElement) -> np.ndarray:
    """Real spectrum in ascending order."""
    return _eigh(a)[0]


def _positivity_floor(a: AlgebraElement, eigenvalues: np.ndarray) -> float:
    # for self-adjoint elements the norm is the spectral radius
    radius = max(abs(eigenvalues[0]), abs(eigenvalues[-1]))
    return -a.descriptor.positivity_tolerance * max(1.0, radius)


def is_positive(a: AlgebraElement) -> bool:
    try:
        eigenvalues = spectrum(a)
    except NotHermitian:
        return False
    return bool(eigenvalues[0] >= _positivity_floor(a, eigenvalues))


def leq(a: AlgebraElement, b: AlgebraElement) -> OrderResult:
    """a <= b in the order induced by the positive cone."""
    _same_algebra(a, b)
    diff = subtract(b, a)
    defect = hermitian_defect(diff)
    if defect > diff.descriptor.hermitian_tolerance:
        return OrderResult(OrderVerdict.ILL_POSED, hermitian_defect=defect)

    eigenvalues = spectrum(diff)
    least = float(eigenvalues[0])
    if least >= _positivity_floor(diff, eigenvalues):
        return OrderResult(OrderVerdict.HOLDS, slack=least)
    return OrderResult(OrderVerdict.FAILS, witness_eigenvalue=least, hermitian_defect=defect, slack=least)


def frac_power(a: AlgebraElement, beta: float) -> AlgebraElement:
    """a**beta by spectral calculus; eigenvalues are clamped at 0 first and 0**beta = 0."""
    if not beta > 0:
        raise BadParameters(f"fractional power needs beta > 0, got {beta}")
    if not is_positive(a):
        raise NotPositive(f"cannot take power {beta} of a non-positive element {a!r}")
    if beta == 1:
        return a

    if a.descriptor.is_commutative:
        return AlgebraElement(a.descriptor, np.power(np.clip(a.data, 0.0, None), beta))

    values, vectors = _eigh(a)
    powered = np.power(np.clip(values, 0.0, None), beta)
    data = (vectors * powered) @ vectors.conj().T
    return AlgebraElement(a.descriptor, 0.5 * (data + data.conj().T))


def random_positive(descriptor: AlgebraDescriptor, rng: np.random.Generator, size: float = 1.0) -> AlgebraElement:
    """A random positive element with norm of order ``size``."""
    if descriptor.is_commutative:
        return descriptor.element(rng.uniform(0.0, size, descriptor.shape))
    n = descriptor.dimension
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    data = g @ g.conj().T * (size / (2 * n))
    return descriptor.element(0.5 * (data + data.conj().T))
