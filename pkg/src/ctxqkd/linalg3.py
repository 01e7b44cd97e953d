"""Dense complex linear algebra on qutrit (3x3) and qutrit-pair (9x9) operators.

Everything here is a pure function of numpy arrays. Eigendecomposition is
delegated to LAPACK through ``numpy.linalg.eigh``; this module adds the
input validation, ordering and tolerance conventions the rest of the
package relies on.
"""

from __future__ import annotations

import numpy as np

from .config import TOL


class ValidationError(ValueError):
    """An operator fails a physical validity check."""


def ket(*amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    return v


def basis(i: int, dim: int = 3) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[i] = 1.0
    return v


def projector(v: np.ndarray) -> np.ndarray:
    """Return |v><v| for a (not necessarily normalised) vector."""
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermiticity_error(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - dagger(h))))


def symmetrize(h: np.ndarray, atol: float = TOL.hermitian) -> np.ndarray:
    """Return (H + H^dagger)/2, refusing inputs that are not Hermitian within ``atol``."""
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] != h.shape[-2]:
        raise ValidationError(f"expected a square matrix, got shape {h.shape}")
    err = hermiticity_error(h)
    if err > atol:
        raise ValidationError(f"matrix is not Hermitian (max |H - H^dagger| = {err:.3e})")
    return 0.5 * (h + dagger(h))


def eig_hermitian(h: np.ndarray, atol: float = TOL.hermitian) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues in descending
    order and eigenvectors as the *columns* of the second array. Vectors
    inside a degenerate eigenspace are orthonormal but otherwise arbitrary.
    """
    h = symmetrize(h, atol)
    w, v = np.linalg.eigh(h)
    return w[..., ::-1], v[..., ::-1]


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace_second(w: np.ndarray, dims: tuple[int, int] = (3, 3)) -> np.ndarray:
    """Trace out the second tensor factor of an operator on C^d1 (x) C^d2."""
    d1, d2 = dims
    w = np.asarray(w, dtype=complex).reshape(d1, d2, d1, d2)
    return np.einsum("ijkj->ik", w)


def positive_eigenspace_projector(h: np.ndarray, cutoff: float = TOL.zero_eigenvalue) -> np.ndarray:
    """Projector onto the eigenvectors of ``h`` with eigenvalue > ``cutoff``.

    This is the maximiser of tr(H M) over effects 0 <= M <= I; near-zero
    modes are left out so the result has minimal rank. Accepts a stack of
    matrices with shape (..., d, d).
    """
    h = np.asarray(h, dtype=complex)
    h = 0.5 * (h + dagger(h))
    w, v = np.linalg.eigh(h)
    keep = (w > cutoff).astype(float)
    return np.einsum("...ik,...k,...jk->...ij", v, keep, v.conj())


def top_eigenprojector(h: np.ndarray) -> np.ndarray:
    """Rank-one projector on an eigenvector of the largest eigenvalue (stack-aware)."""
    h = np.asarray(h, dtype=complex)
    h = 0.5 * (h + dagger(h))
    _, v = np.linalg.eigh(h)
    top = v[..., :, -1]
    return np.einsum("...i,...j->...ij", top, top.conj())


def expectation(rho: np.ndarray, m: np.ndarray) -> float:
    """Born probability tr(rho M), real part."""
    return float(np.real(np.einsum("ij,ji->", rho, m)))


def check_density(rho: np.ndarray, atol: float = TOL.psd, name: str = "state") -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise ValidationError(f"{name}: expected 3x3, got {rho.shape}")
    if hermiticity_error(rho) > atol:
        raise ValidationError(f"{name}: not Hermitian")
    w = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    if w[0] < -atol:
        raise ValidationError(f"{name}: negative eigenvalue {w[0]:.3e}")
    tr = np.real(np.trace(rho))
    if abs(tr - 1.0) > max(atol, TOL.trace):
        raise ValidationError(f"{name}: trace {tr:.12f} != 1")
    return rho


def check_effect(m: np.ndarray, atol: float = TOL.psd, name: str = "effect") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (3, 3):
        raise ValidationError(f"{name}: expected 3x3, got {m.shape}")
    if hermiticity_error(m) > atol:
        raise ValidationError(f"{name}: not Hermitian")
    w = np.linalg.eigvalsh(0.5 * (m + dagger(m)))
    if w[0] < -atol or w[-1] > 1.0 + atol:
        raise ValidationError(f"{name}: eigenvalues {w} outside [0, 1]")
    return m


def is_unitary(u: np.ndarray, atol: float = TOL.hermitian) -> bool:
    u = np.asarray(u, dtype=complex)
    return bool(np.allclose(dagger(u) @ u, np.eye(u.shape[0]), atol=atol, rtol=0))
