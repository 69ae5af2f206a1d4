"""
Two-player zero-sum quantum games.

A game is a Hermitian payoff observable ``R`` on the joint space A (x) B.  Alice's
payoff is ``u(rho, sigma) = <rho, Phi(sigma)>`` with the superoperator

    Phi(X) = Tr_B[R (1_A (x) X^T)],

and Bob receives ``-u``.  Phi and its adjoint are stored as matrices acting on
row-major vectorized operators, which makes batched evaluation a single matmul.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from . import linalg
from .errors import DimensionMismatch, NotUnitary, ValidationError

MIXED_FLOOR = 1e-6
UNITARY_TOL = 1e-10

MATCHING_PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])


@dataclass(frozen=True, eq=False)
class PayoffObservable:
    """Hermitian payoff observable on C^dim_a (x) C^dim_b."""

    r: np.ndarray
    dim_a: int
    dim_b: int

    def __post_init__(self):
        r = linalg.check_hermitian(self.r, name="payoff observable")
        d = self.dim_a * self.dim_b
        if r.shape != (d, d):
            raise DimensionMismatch(f"R must be {d}x{d} for dims ({self.dim_a}, {self.dim_b}), got {r.shape}")
        object.__setattr__(self, "r", linalg.hermitize(r))

    @cached_property
    def phi_matrix(self) -> np.ndarray:
        """M with vec(Phi(X)) = M vec(X); M[(i,j),(k,l)] = R[(i,k),(j,l)]."""
        n, m = self.dim_a, self.dim_b
        t = self.r.reshape(n, m, n, m)
        return t.transpose(0, 2, 1, 3).reshape(n * n, m * m)

    @cached_property
    def phi_adjoint_matrix(self) -> np.ndarray:
        # adjoint w.r.t. the Hilbert-Schmidt product is the conjugate transpose on vec space
        return np.ascontiguousarray(self.phi_matrix.conj().T)

    @cached_property
    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.r)


def _batched_linear(mat: np.ndarray, x: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-2:] != (d_in, d_in):
        raise DimensionMismatch(f"expected {d_in}x{d_in} operand, got {x.shape}")
    lead = x.shape[:-2]
    out = x.reshape(lead + (d_in * d_in,)) @ mat.T
    return out.reshape(lead + (d_out, d_out))


def phi_apply(g: PayoffObservable, sigma: np.ndarray) -> np.ndarray:
    """Phi(sigma) = Tr_B[R (1 (x) sigma^T)], an operator on Alice's space."""
    return _batched_linear(g.phi_matrix, sigma, g.dim_b, g.dim_a)


def phi_adjoint_apply(g: PayoffObservable, rho: np.ndarray) -> np.ndarray:
    """Phi^dagger(rho) = (Tr_A[R^dagger (rho (x) 1)])^T, an operator on Bob's space."""
    return _batched_linear(g.phi_adjoint_matrix, rho, g.dim_a, g.dim_b)


def phi_apply_partial_trace(g: PayoffObservable, sigma: np.ndarray) -> np.ndarray:
    """Reference evaluation of Phi straight from its partial-trace definition (slow)."""
    one = np.eye(g.dim_a)
    return linalg.partial_trace(g.r @ np.kron(one, np.asarray(sigma).T), g.dim_a, g.dim_b, "B")


def payoff(g: PayoffObservable, rho: np.ndarray, sigma: np.ndarray):
    """Alice's expected payoff <rho, Phi(sigma)>; Bob's payoff is the negation."""
    val = np.real(linalg.hs_inner(rho, phi_apply(g, sigma)))
    return float(val) if np.ndim(val) == 0 else val


def payoff_via_joint(g: PayoffObservable, rho: np.ndarray, sigma: np.ndarray) -> float:
    """<R, rho (x) sigma>.

    In general ``payoff(g, rho, sigma) == payoff_via_joint(g, rho, sigma.T)``, so the
    two agree for diagonal R (and whenever sigma is real) but not for arbitrary R.
    """
    return float(np.real(linalg.hs_inner(g.r, linalg.tensor_product(rho, sigma))))


def best_response_values(g: PayoffObservable, rho, sigma) -> tuple[float, float]:
    """(max over rho' of u(rho', sigma), min over sigma' of u(rho, sigma'))."""
    top = np.linalg.eigvalsh(linalg.hermitize(phi_apply(g, sigma)))[..., -1]
    bottom = np.linalg.eigvalsh(linalg.hermitize(phi_adjoint_apply(g, rho)))[..., 0]
    return top, bottom


def exploitability(g: PayoffObservable, rho: np.ndarray, sigma: np.ndarray):
    """Nash gap lambda_max(Phi(sigma)) - lambda_min(Phi^dagger(rho)); zero exactly at equilibria."""
    top, bottom = best_response_values(g, rho, sigma)
    gap = top - bottom
    return float(gap) if np.ndim(gap) == 0 else gap


@dataclass(frozen=True, eq=False)
class NashCertificate:
    rho_star: np.ndarray
    sigma_star: np.ndarray
    value: float
    exploitability: float
    epsilon_target: float
    min_eig_rho: float
    min_eig_sigma: float
    iterations: int = 0

    @property
    def fully_mixed(self) -> bool:
        return self.is_fully_mixed()

    def is_fully_mixed(self, floor: float = MIXED_FLOOR) -> bool:
        return self.min_eig_rho > floor and self.min_eig_sigma > floor

    @classmethod
    def from_pair(cls, g: PayoffObservable, rho, sigma, epsilon_target: float = 0.0, iterations: int = 0):
        rho = linalg.check_density(rho, name="rho*")
        sigma = linalg.check_density(sigma, name="sigma*")
        return cls(
            rho_star=rho,
            sigma_star=sigma,
            value=payoff(g, rho, sigma),
            exploitability=exploitability(g, rho, sigma),
            epsilon_target=float(epsilon_target),
            min_eig_rho=float(np.linalg.eigvalsh(rho)[0]),
            min_eig_sigma=float(np.linalg.eigvalsh(sigma)[0]),
            iterations=iterations,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "exploitability": self.exploitability,
            "epsilon_target": self.epsilon_target,
            "min_eig_rho": self.min_eig_rho,
            "min_eig_sigma": self.min_eig_sigma,
            "fully_mixed": self.fully_mixed,
            "iterations": self.iterations,
            "rho_star": complex_to_json(self.rho_star),
            "sigma_star": complex_to_json(self.sigma_star),
        }


def uniform_reference(g: PayoffObservable) -> NashCertificate:
    """Certificate for the maximally mixed pair (exact Nash whenever exploitability is 0)."""
    return NashCertificate.from_pair(g, linalg.maximally_mixed(g.dim_a), linalg.maximally_mixed(g.dim_b))


# -- constructors -----------------------------------------------------------


def embed_classical_diagonal(p) -> PayoffObservable:
    """R = diag(P row-major), the classical game played on computational-basis states."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise ValidationError(f"payoff matrix must be 2-D, got shape {p.shape}")
    n, m = p.shape
    return PayoffObservable(np.diag(p.reshape(-1)).astype(complex), n, m)


def check_unitary(u, tol: float = UNITARY_TOL, name: str = "matrix") -> np.ndarray:
    u = linalg.check_square(np.asarray(u, dtype=complex), name)
    err = np.linalg.norm(linalg.dagger(u) @ u - np.eye(u.shape[-1]))
    if err > tol:
        raise NotUnitary(f"{name} is not unitary: ||U^dagger U - 1||_F = {err:.3e}")
    return u


def embed_unitary(p, v, w) -> PayoffObservable:
    """R = (V (x) W) diag(P) (V (x) W)^dagger; R's eigenvalues are the entries of P."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError(f"unitary embedding needs a square payoff matrix, got {p.shape}")
    n = p.shape[0]
    v = check_unitary(v, name="V")
    w = check_unitary(w, name="W")
    if v.shape != (n, n) or w.shape != (n, n):
        raise DimensionMismatch("V and W must match the payoff matrix size")
    u = np.kron(v, w)
    r = (u * p.reshape(-1)) @ linalg.dagger(u)
    return PayoffObservable(linalg.hermitize(r), n, n)


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar-random unitary: QR of a Ginibre matrix with the phases of R's diagonal fixed."""
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    z = linalg.ginibre(dim, seed)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def constant_game(c: float, dim_a: int, dim_b: int) -> PayoffObservable:
    return PayoffObservable(c * np.eye(dim_a * dim_b, dtype=complex), dim_a, dim_b)


def unit_interval(g: PayoffObservable) -> PayoffObservable:
    """Affinely rescale R so its spectrum spans [0, 1].

    The learning dynamics are unchanged up to a time rescaling by the spectral
    width, and the rescaled game satisfies 0 <= Phi(sigma) <= 1.
    """
    lo, hi = g.spectrum[0], g.spectrum[-1]
    d = g.dim_a * g.dim_b
    if hi - lo <= 0:
        return PayoffObservable(np.zeros((d, d), dtype=complex), g.dim_a, g.dim_b)
    return PayoffObservable((g.r - lo * np.eye(d)) / (hi - lo), g.dim_a, g.dim_b)


def interior_payoff_matrix(n: int, seed) -> np.ndarray:
    """Random n x n payoff matrix in [-1, 1] with zero row and column sums.

    Zero margins make the uniform distribution an interior Nash equilibrium of
    the classical game (every pure strategy earns 0 against uniform play).  For
    n = 2 the only such matrix with P[0,0] > 0 and max entry 1 is Matching Pennies.
    """
    rng = linalg._rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n, n))
    q = np.eye(n) - np.full((n, n), 1.0 / n)
    p = q @ x @ q
    p /= np.max(np.abs(p))
    if p[0, 0] < 0:
        p = -p
    p[np.abs(p) < 1e-15] = 0.0
    return p


# -- serializable description ------------------------------------------------


def complex_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def complex_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise ValidationError(f"complex matrix must be rows of [re, im] pairs, got array of shape {arr.shape}")


@dataclass(eq=False)
class GameSpec:
    name: str
    dim_a: int
    dim_b: int
    r: np.ndarray
    provenance: dict = field(default_factory=lambda: {"kind": "explicit"})

    def observable(self) -> PayoffObservable:
        return PayoffObservable(np.asarray(self.r, dtype=complex), self.dim_a, self.dim_b)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dim_a": int(self.dim_a),
            "dim_b": int(self.dim_b),
            "r": complex_to_json(self.r),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GameSpec":
        try:
            name = str(data["name"])
            dim_a, dim_b = int(data["dim_a"]), int(data["dim_b"])
            r = complex_from_json(data["r"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed game spec: {exc!r}") from exc
        spec = cls(name, dim_a, dim_b, r, dict(data.get("provenance") or {"kind": "explicit"}))
        spec.observable()  # enforces shape and Hermiticity
        return spec

    @classmethod
    def from_observable(cls, name: str, g: PayoffObservable, provenance: dict | None = None) -> "GameSpec":
        return cls(name, g.dim_a, g.dim_b, g.r.copy(), provenance or {"kind": "explicit"})


def matching_pennies() -> GameSpec:
    return GameSpec.from_observable(
        "matching-pennies",
        embed_classical_diagonal(MATCHING_PENNIES),
        {"kind": "classical-diagonal", "payoff": MATCHING_PENNIES.tolist()},
    )


def diagonal_game(p, name: str = "diagonal") -> GameSpec:
    p = np.asarray(p, dtype=float)
    return GameSpec.from_observable(name, embed_classical_diagonal(p), {"kind": "classical-diagonal", "payoff": p.tolist()})


def unitary_game(p, seed: int, name: str = "unitary") -> GameSpec:
    p = np.asarray(p, dtype=float)
    rng = np.random.default_rng(seed)
    v = random_unitary(p.shape[0], rng)
    w = random_unitary(p.shape[0], rng)
    return GameSpec.from_observable(
        name, embed_unitary(p, v, w), {"kind": "unitary-embedded", "payoff": p.tolist(), "seed": int(seed)}
    )


def multi_qubit_interior_game(qubits: int, seed: int) -> GameSpec:
    """Diagonally embedded 2^q x 2^q game with entries in [-1, 1] and a uniform interior Nash."""
    if qubits not in (1, 2, 3):
        raise ValidationError(f"unsupported qubit count {qubits} (expected 1, 2 or 3)")
    n = 2**qubits
    p = interior_payoff_matrix(n, seed)
    return GameSpec.from_observable(
        f"interior-{qubits}q-seed{seed}",
        embed_classical_diagonal(p),
        {"kind": "classical-diagonal", "payoff": p.tolist(), "qubits": qubits, "seed": int(seed)},
    )


def default_horizon(epsilon: float, dim_a: int, dim_b: int) -> int:
    return math.ceil(64.0 * math.log(dim_a * dim_b) / epsilon**2)
