"""
Cyclic Jacobi eigendecomposition for Hermitian matrices.

Each (p, q) rotation first removes the phase of a[p, q] with a diagonal unitary,
then applies the real symmetric Jacobi rotation to the resulting 2x2 block.
Rotations act on two rows and two columns at a time, so a sweep costs O(n^3).
"""
import numpy as np
from loguru import logger


OFF_DIAGONAL_TOLERANCE = 1e-14
MAX_SWEEPS = 64


def off_diagonal_mass(a: np.ndarray) -> float:
    """Frobenius norm of the strictly off-diagonal part."""
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _rotation(a: np.ndarray, p: int, q: int) -> np.ndarray | None:
    apq = a[p, q]
    r = abs(apq)
    if r == 0.0:
        return None

    phase = apq / r
    theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
    if theta == 0.0:
        t = 1.0
    else:
        t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    # diag(1, conj(phase)) makes the block real, then the real rotation zeroes it
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)


def jacobi_eigh(matrix: np.ndarray, tol: float = OFF_DIAGONAL_TOLERANCE,
                max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors (columns) of a Hermitian matrix.

    The input is assumed Hermitian; only its Hermitian part is used. Convergence is
    declared when the off-diagonal Frobenius mass drops to ``tol`` times the
    Frobenius norm of the input.
    """
    a = np.array(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    vectors = np.eye(n, dtype=complex)

    scale = float(np.linalg.norm(a))
    if n > 1 and scale > 0.0:
        for _ in range(max_sweeps):
            if off_diagonal_mass(a) <= tol * scale:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    w = _rotation(a, p, q)
                    if w is None:
                        continue
                    idx = [p, q]
                    a[:, idx] = a[:, idx] @ w
                    a[idx, :] = w.conj().T @ a[idx, :]
                    a[p, q] = a[q, p] = 0.0
                    a[p, p] = a[p, p].real
                    a[q, q] = a[q, q].real
                    vectors[:, idx] = vectors[:, idx] @ w
        if off_diagonal_mass(a) > tol * scale:
            logger.warning(
                f"Jacobi reached {max_sweeps} sweeps with off-diagonal mass "
                f"{off_diagonal_mass(a):.3e} (scale {scale:.3e})"
            )

    values = np.diag(a).real.copy()
    order = np.argsort(values, kind="stable")
    return values[order], vectors[:, order]
