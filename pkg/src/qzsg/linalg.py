"""
Complex Hermitian linear algebra kernel.

Matrices are plain ``numpy`` arrays.  Most functions accept stacks of matrices
with shape ``(..., n, n)`` so trajectories and ensembles can be processed in one
call.  Matrix functions go through a full eigendecomposition: every matrix that
reaches them is Hermitian and small.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatch,
    EigensolverError,
    HermiticityError,
    NotDensityMatrix,
    NotPositiveDefinite,
    ValidationError,
)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
PD_FLOOR = 1e-14

SUBSYSTEM_A = "A"
SUBSYSTEM_B = "B"


class Spectrum(NamedTuple):
    """Eigenvalues in ascending order and the unitary matrix of eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues[..., None, :]) @ dagger(u)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitize(m: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian part, (M + M^dagger)/2."""
    return 0.5 * (m + dagger(m))


def hermiticity_error(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - dagger(m))))


def is_hermitian(m, tol: float = HERMITICITY_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim >= 2 and m.shape[-1] == m.shape[-2] and hermiticity_error(m) <= tol


def check_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    return m


def check_hermitian(m, tol: float = HERMITICITY_TOL, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a complex array, raising ``HermiticityError`` if it is not Hermitian."""
    m = check_square(np.asarray(m, dtype=complex), name)
    err = hermiticity_error(m)
    if err > tol:
        raise HermiticityError(f"{name} is not Hermitian: max |M - M^dagger| = {err:.3e} > {tol:.1e}")
    return m


def check_density(
    rho,
    trace_tol: float = TRACE_TOL,
    psd_tol: float = PSD_TOL,
    hermiticity_tol: float = HERMITICITY_TOL,
    name: str = "density matrix",
) -> np.ndarray:
    """Validate a density matrix (Hermitian, unit trace, positive semidefinite)."""
    rho = check_hermitian(rho, hermiticity_tol, name)
    tr = np.trace(rho, axis1=-2, axis2=-1).real
    if np.any(np.abs(tr - 1.0) > trace_tol):
        raise NotDensityMatrix(f"{name} has trace {tr} (expected 1)")
    lmin = np.linalg.eigvalsh(rho)[..., 0]
    if np.any(lmin < -psd_tol):
        raise NotDensityMatrix(f"{name} has negative eigenvalue {np.min(lmin):.3e}")
    return rho


def is_density(rho, **tols) -> bool:
    try:
        check_density(rho, **tols)
    except (NotDensityMatrix, HermiticityError, DimensionMismatch):
        return False
    return True


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product: (a (x) b)[i*m + k, j*m + l] = a[i, j] * b[k, l] with m = b.rows."""
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(m: np.ndarray, dim_a: int, dim_b: int, over: str = SUBSYSTEM_B) -> np.ndarray:
    """Trace out one factor of an operator on A (x) B.

    ``over="B"`` returns the ``dim_a x dim_a`` reduced operator, ``over="A"`` the
    ``dim_b x dim_b`` one.  Leading batch axes are carried through.
    """
    m = np.asarray(m)
    d = dim_a * dim_b
    if m.shape[-2:] != (d, d):
        raise DimensionMismatch(f"expected a {d}x{d} operator for dims ({dim_a}, {dim_b}), got {m.shape}")
    t = m.reshape(m.shape[:-2] + (dim_a, dim_b, dim_a, dim_b))
    if over == SUBSYSTEM_B:
        return np.einsum("...ikjk->...ij", t)
    if over == SUBSYSTEM_A:
        return np.einsum("...ikil->...kl", t)
    raise ValidationError(f"over must be 'A' or 'B', not {over!r}")


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex | np.ndarray:
    """Hilbert-Schmidt inner product Tr(a^dagger b)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-2:] != b.shape[-2:]:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    out = np.einsum("...ij,...ij->...", np.conj(a), b)
    return complex(out) if np.ndim(out) == 0 else out


def herm_eig(h: np.ndarray) -> Spectrum:
    h = check_square(np.asarray(h))
    try:
        w, u = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigensolverError(f"eigensolver did not converge: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise EigensolverError("eigensolver returned non-finite eigenvalues")
    return Spectrum(w, u)


def _apply(spec: Spectrum, values: np.ndarray) -> np.ndarray:
    u = spec.eigenvectors
    return hermitize((u * values[..., None, :]) @ dagger(u))


def herm_expm(h: np.ndarray, shift: str | None = None) -> np.ndarray:
    """Matrix exponential of a Hermitian matrix.

    With ``shift="max"`` the result is exp(h - lambda_max), i.e. exp(h) scaled by
    exp(-lambda_max); normalized quantities exp(h)/Tr exp(h) are unaffected.
    """
    spec = herm_eig(h)
    w = spec.eigenvalues
    if shift in ("max", "MaxEigenvalue"):
        w = w - w[..., -1:]
    elif shift is not None:
        raise ValidationError(f"unknown shift mode {shift!r}")
    return _apply(spec, np.exp(w))


def herm_logm(p: np.ndarray, pd_floor: float = PD_FLOOR) -> np.ndarray:
    spec = herm_eig(p)
    lmin = np.min(spec.eigenvalues)
    if lmin <= pd_floor:
        raise NotPositiveDefinite(f"matrix logarithm needs a positive definite input (min eigenvalue {lmin:.3e})")
    return _apply(spec, np.log(spec.eigenvalues))


def normalized_expm(h: np.ndarray) -> tuple[np.ndarray, np.ndarray | float]:
    """Return (exp(h)/Tr exp(h), log Tr exp(h)) computed with a max-eigenvalue shift."""
    spec = herm_eig(h)
    w = spec.eigenvalues
    top = w[..., -1:]
    e = np.exp(w - top)
    z = e.sum(axis=-1, keepdims=True)
    state = _apply(spec, e / z)
    log_tr = (top + np.log(z))[..., 0]
    return state, (float(log_tr) if np.ndim(log_tr) == 0 else log_tr)


def log_trace_exp(h: np.ndarray) -> float | np.ndarray:
    w = np.linalg.eigvalsh(h)
    top = w[..., -1]
    out = top + np.log(np.exp(w - top[..., None]).sum(axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(dim: int, seed) -> np.ndarray:
    """dim x dim matrix of i.i.d. standard complex Gaussians (E|z|^2 = 1)."""
    rng = _rng(seed)
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)


def random_density(dim: int, seed) -> np.ndarray:
    """Ginibre-ensemble density matrix G G^dagger / Tr(G G^dagger).

    ``seed`` may be an int, a sequence of ints or a ``numpy.random.Generator``.
    """
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    g = ginibre(dim, seed)
    x = g @ dagger(g)
    return hermitize(x / np.trace(x).real)


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
