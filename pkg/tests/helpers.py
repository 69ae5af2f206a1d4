"""Shared builders and independent reference computations for the test suite."""

import numpy as np

from qzsg import game, linalg


def random_hermitian(dim, rng, scale=1.0):
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (x + x.conj().T) / 2


def random_observable(dim_a, dim_b, rng):
    return game.PayoffObservable(random_hermitian(dim_a * dim_b, rng), dim_a, dim_b)


def diag_density(*p):
    return np.diag(np.asarray(p, dtype=complex))


def assert_density(rho, tol=1e-10):
    assert linalg.is_density(rho, trace_tol=tol, psd_tol=tol)


def taylor_expm(h, terms=30):
    out = np.eye(h.shape[0], dtype=complex)
    term = np.eye(h.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ h / k
        out = out + term
    return out


def charpoly_roots(h):
    """Eigenvalues as roots of the characteristic polynomial (Faddeev-LeVerrier coefficients)."""
    n = h.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(h)
    for k in range(1, n + 1):
        m = h @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(h @ m) / k)
    return np.sort(np.roots(coeffs).real)


def partial_trace_loops(m, dim_a, dim_b, over):
    if over == "B":
        out = np.zeros((dim_a, dim_a), dtype=complex)
        for i in range(dim_a):
            for j in range(dim_a):
                for k in range(dim_b):
                    out[i, j] += m[i * dim_b + k, j * dim_b + k]
    else:
        out = np.zeros((dim_b, dim_b), dtype=complex)
        for k in range(dim_b):
            for l in range(dim_b):
                for i in range(dim_a):
                    out[k, l] += m[i * dim_b + k, i * dim_b + l]
    return out


def kron_loops(a, b):
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n * m, n * m), dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(m):
                for l in range(m):
                    out[i * m + k, j * m + l] = a[i, j] * b[k, l]
    return out
