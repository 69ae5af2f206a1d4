"""
Continuous-time quantum replicator dynamics, integrated in the dual space.

The state is the pair of cumulative payoff matrices (A, B) with

    dA/dt = Phi(sigma),   dB/dt = -Phi^dagger(rho),
    rho = exp(A)/Tr exp(A),   sigma = exp(B)/Tr exp(B).

In canonical coordinates the (1,1) entries of A and B are pinned to zero, which
leaves rho and sigma unchanged and makes the flow volume preserving.

Integration is fixed step (RK4 or forward Euler) and vectorized over an
ensemble of initial conditions: every array carries a leading ensemble axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .errors import NumericalError, ValidationError
from .game import NashCertificate, PayoffObservable, phi_adjoint_apply, phi_apply
from .trajectory import Trajectory

RAW = "raw"
CANONICAL = "canonical"
RK4 = "rk4"
EULER = "euler"


@dataclass
class DualState:
    t: float
    a: np.ndarray
    b: np.ndarray


@dataclass
class ReplicatorConfig:
    t_end: float
    step_h: float = 1e-3
    integrator: str = RK4
    record_every: int = 1
    seed_rho0: int = 0
    seed_sigma0: int = 1
    transform: str = RAW

    def __post_init__(self):
        self.integrator = self.integrator.lower()
        self.transform = self.transform.lower()
        if self.integrator not in (RK4, EULER):
            raise ValidationError(f"integrator must be 'rk4' or 'euler', not {self.integrator!r}")
        if self.transform not in (RAW, CANONICAL):
            raise ValidationError(f"transform must be 'raw' or 'canonical', not {self.transform!r}")
        if not self.step_h > 0:
            raise ValidationError("step_h must be positive")
        if self.t_end < 0 or (self.t_end > 0 and self.step_h > self.t_end):
            raise ValidationError("need 0 <= t_end and step_h <= t_end")
        if self.record_every < 1:
            raise ValidationError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.step_h))


def canonical_transform(a: np.ndarray) -> np.ndarray:
    """A' = A - A[0,0] * 1, so that A'[0,0] = 0 exactly."""
    a = np.asarray(a)
    n = a.shape[-1]
    out = a - a[..., :1, :1].real * np.eye(n)
    out[..., 0, 0] = 0.0
    return out


def _pin(da: np.ndarray) -> np.ndarray:
    return da - da[..., :1, :1].real * np.eye(da.shape[-1])


def _softmax_states(h: np.ndarray) -> np.ndarray:
    # hot path of the integrator: exp(h)/Tr exp(h) without validation or re-symmetrization
    w, u = np.linalg.eigh(h)
    e = np.exp(w - w[..., -1:])
    e /= e.sum(axis=-1, keepdims=True)
    return (u * e[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2))


def _strategies(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if a.shape == b.shape:
        both = _softmax_states(np.stack([a, b]))
        return both[0], both[1]
    return _softmax_states(a), _softmax_states(b)


def _field(g: PayoffObservable, a, b, canonical: bool):
    rho, sigma = _strategies(a, b)
    da = phi_apply(g, sigma)
    db = -phi_adjoint_apply(g, rho)
    if canonical:
        da, db = _pin(da), _pin(db)
    return da, db


def dual_vector_field(g: PayoffObservable, s: DualState) -> tuple[np.ndarray, np.ndarray]:
    """(dA/dt, dB/dt) = (Phi(sigma), -Phi^dagger(rho))."""
    return _field(g, np.asarray(s.a), np.asarray(s.b), canonical=False)


def transformed_vector_field(g: PayoffObservable, s: DualState) -> tuple[np.ndarray, np.ndarray]:
    """Canonical-coordinate field: the raw field minus its (1,1) entry times the identity."""
    da, db = _field(g, np.asarray(s.a), np.asarray(s.b), canonical=True)
    da[..., 0, 0] = 0.0
    db[..., 0, 0] = 0.0
    return da, db


def diffeo_forward(a_prime: np.ndarray) -> np.ndarray:
    return linalg.normalized_expm(a_prime)[0]


def diffeo_inverse(rho: np.ndarray) -> np.ndarray:
    """log(rho) - log(rho)[0,0] * 1; the inverse of :func:`diffeo_forward` on canonical matrices."""
    return canonical_transform(linalg.herm_logm(rho))


def euler_update(a: np.ndarray, b: np.ndarray, da: np.ndarray, db: np.ndarray, h: float):
    """One explicit step a + h*da, b + h*db with Hermiticity repair."""
    return linalg.hermitize(a + h * da), linalg.hermitize(b + h * db)


def _rk4(g, a, b, h, canonical):
    k1a, k1b = _field(g, a, b, canonical)
    k2a, k2b = _field(g, a + 0.5 * h * k1a, b + 0.5 * h * k1b, canonical)
    k3a, k3b = _field(g, a + 0.5 * h * k2a, b + 0.5 * h * k2b, canonical)
    k4a, k4b = _field(g, a + h * k3a, b + h * k3b, canonical)
    da = (k1a + 2.0 * k2a + 2.0 * k3a + k4a) / 6.0
    db = (k1b + 2.0 * k2b + 2.0 * k3b + k4b) / 6.0
    return euler_update(a, b, da, db, h)


def initial_duals(rho0: np.ndarray, sigma0: np.ndarray, transform: str = RAW):
    """Dual coordinates of an initial strategy pair; raises NotPositiveDefinite for singular states."""
    if transform == CANONICAL:
        return diffeo_inverse(rho0), diffeo_inverse(sigma0)
    return linalg.herm_logm(rho0), linalg.herm_logm(sigma0)


def integrate_ensemble(
    g: PayoffObservable,
    cfg: ReplicatorConfig,
    rho0s: Sequence[np.ndarray],
    sigma0s: Sequence[np.ndarray],
    reference: Optional[NashCertificate] = None,
) -> list[Trajectory]:
    """Integrate one trajectory per initial pair, all advanced together."""
    from .analysis import annotate

    rho0s = [linalg.check_density(r, name="rho0") for r in rho0s]
    sigma0s = [linalg.check_density(s, name="sigma0") for s in sigma0s]
    if len(rho0s) != len(sigma0s) or not rho0s:
        raise ValidationError("need equally many (and at least one) rho0 and sigma0")
    if rho0s[0].shape[-1] != g.dim_a or sigma0s[0].shape[-1] != g.dim_b:
        raise ValidationError("initial states do not match the game dimensions")

    canonical = cfg.transform == CANONICAL
    pairs = [initial_duals(r, s, cfg.transform) for r, s in zip(rho0s, sigma0s)]
    a = np.stack([p[0] for p in pairs])
    b = np.stack([p[1] for p in pairs])
    k, n, m = a.shape[0], g.dim_a, g.dim_b

    n_steps = cfg.n_steps
    rec_idx = list(range(0, n_steps + 1, cfg.record_every))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    n_rec = len(rec_idx)
    rec_a = np.empty((n_rec, k, n, n), dtype=complex)
    rec_b = np.empty((n_rec, k, m, m), dtype=complex)

    h = cfg.step_h
    slot = 0
    rec_a[0], rec_b[0] = a, b
    slot = 1
    for step in range(1, n_steps + 1):
        if cfg.integrator == RK4:
            a, b = _rk4(g, a, b, h, canonical)
        else:
            da, db = _field(g, a, b, canonical)
            a, b = euler_update(a, b, da, db, h)
        if canonical:
            a[..., 0, 0] = 0.0
            b[..., 0, 0] = 0.0
        if slot < n_rec and step == rec_idx[slot]:
            rec_a[slot], rec_b[slot] = a, b
            slot += 1

    if not (np.isfinite(rec_a).all() and np.isfinite(rec_b).all()):
        raise NumericalError("integration produced non-finite dual matrices; reduce step_h")
    t = np.asarray(rec_idx, dtype=float) * h
    rho_all, _ = linalg.normalized_expm(rec_a)
    sigma_all, _ = linalg.normalized_expm(rec_b)
    out = []
    for i in range(k):
        traj = Trajectory(
            t=t.copy(),
            a=rec_a[:, i].copy(),
            b=rec_b[:, i].copy(),
            rho=rho_all[:, i].copy(),
            sigma=sigma_all[:, i].copy(),
            step=np.asarray(rec_idx),
            record_every=cfg.record_every,
            coordinates=cfg.transform,
            meta={"integrator": cfg.integrator, "step_h": h, "t_end": cfg.t_end},
        )
        out.append(annotate(traj, reference))
    return out


def integrate(
    g: PayoffObservable,
    cfg: ReplicatorConfig,
    reference: Optional[NashCertificate] = None,
    rho0: Optional[np.ndarray] = None,
    sigma0: Optional[np.ndarray] = None,
) -> Trajectory:
    """Integrate a single trajectory.

    Initial strategies default to seeded Ginibre densities (``cfg.seed_rho0``,
    ``cfg.seed_sigma0``).  When ``reference`` is given the relative-entropy
    columns are filled; it must be fully mixed.
    """
    if rho0 is None:
        rho0 = linalg.random_density(g.dim_a, cfg.seed_rho0)
    if sigma0 is None:
        sigma0 = linalg.random_density(g.dim_b, cfg.seed_sigma0)
    return integrate_ensemble(g, cfg, [rho0], [sigma0], reference)[0]


# -- classical oracle ----------------------------------------------------------


@dataclass
class ClassicalTrajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray


def classical_replicator_oracle(p, x0, y0, cfg: ReplicatorConfig) -> ClassicalTrajectory:
    """Two-population replicator ODE on the simplex, same stepping scheme as :func:`integrate`.

    x' = x * (P y - x.P y),  y' = y * (-P^T x + y.P^T x)
    """
    p = np.asarray(p, dtype=float)
    x = np.asarray(x0, dtype=float)
    y = np.asarray(y0, dtype=float)
    for v, name in ((x, "x0"), (y, "y0")):
        if np.any(v <= 0) or abs(v.sum() - 1.0) > 1e-10:
            raise ValidationError(f"{name} must be strictly positive and sum to 1")
    if p.shape != (x.size, y.size):
        raise ValidationError("payoff matrix does not match strategy sizes")

    def field(x, y):
        px = p @ y
        qy = -p.T @ x
        return x * (px - x @ px), y * (qy - y @ qy)

    h = cfg.step_h
    xs, ys, ts = [x.copy()], [y.copy()], [0.0]
    for step in range(1, cfg.n_steps + 1):
        if cfg.integrator == RK4:
            k1 = field(x, y)
            k2 = field(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1])
            k3 = field(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1])
            k4 = field(x + h * k3[0], y + h * k3[1])
            x = x + h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
            y = y + h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
        else:
            dx, dy = field(x, y)
            x, y = x + h * dx, y + h * dy
        if step % cfg.record_every == 0 or step == cfg.n_steps:
            xs.append(x.copy())
            ys.append(y.copy())
            ts.append(step * h)
    return ClassicalTrajectory(np.asarray(ts), np.asarray(xs), np.asarray(ys))


# -- volume preservation ---------------------------------------------------------


def to_chart(a: np.ndarray) -> np.ndarray:
    """Real coordinates of a canonical Hermitian matrix: diag[1:], then Re and Im of the strict upper triangle."""
    a = np.asarray(a)
    iu = np.triu_indices(a.shape[-1], 1)
    return np.concatenate([np.diagonal(a).real[1:], a[iu].real, a[iu].imag])


def from_chart(x: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n, 1)
    k = len(iu[0])
    out = np.zeros((n, n), dtype=complex)
    out[np.arange(1, n), np.arange(1, n)] = x[: n - 1]
    upper = x[n - 1 : n - 1 + k] + 1j * x[n - 1 + k : n - 1 + 2 * k]
    out[iu] = upper
    out[(iu[1], iu[0])] = upper.conj()
    return out


def divergence_probe(g: PayoffObservable, s: DualState, fd_step: float = 1e-5) -> float:
    """Central finite-difference trace of the Jacobian of the canonical vector field.

    Coordinates follow :func:`to_chart` for A' and then B' ((n^2 - 1) + (m^2 - 1) reals).
    """
    n, m = g.dim_a, g.dim_b
    xa, xb = to_chart(s.a), to_chart(s.b)
    na = xa.size
    x = np.concatenate([xa, xb])

    def field(z):
        st = DualState(s.t, from_chart(z[:na], n), from_chart(z[na:], m))
        da, db = transformed_vector_field(g, st)
        return np.concatenate([to_chart(da), to_chart(db)])

    div = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = fd_step
        div += (field(x + e)[i] - field(x - e)[i]) / (2.0 * fd_step)
    return float(div)


def random_canonical_state(g: PayoffObservable, seed) -> DualState:
    rng = np.random.default_rng(seed)
    return DualState(
        0.0,
        diffeo_inverse(linalg.random_density(g.dim_a, rng)),
        diffeo_inverse(linalg.random_density(g.dim_b, rng)),
    )
