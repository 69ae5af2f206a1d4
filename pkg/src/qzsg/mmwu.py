"""
Matrix Multiplicative Weights Update for two-player zero-sum quantum games.

Both players update simultaneously:

    A_j = exp(mu * sum_{i<j} Phi(sigma_i)),        rho_j   = A_j / Tr A_j
    B_j = exp(-mu * sum_{i<j} Phi^dagger(rho_i)),  sigma_j = B_j / Tr B_j

Only the exponents are stored; exponentials are taken with a max-eigenvalue
shift and the log-traces are carried separately, so nothing overflows however
long the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import linalg
from .analysis import quantum_relative_entropy, require_fully_mixed
from .errors import ValidationError
from .game import NashCertificate, PayoffObservable, default_horizon, exploitability, phi_adjoint_apply, phi_apply
from .replicator import euler_update
from .trajectory import Trajectory

UNIFORM = "uniform"
RANDOM = "random"


@dataclass(frozen=True)
class Constant:
    """Fixed step size; ``mu=None`` means epsilon/8."""

    mu: Optional[float] = None

    def step_size(self, t: int, epsilon: float) -> float:
        return self.mu if self.mu is not None else epsilon / 8.0


@dataclass(frozen=True)
class Decreasing:
    """mu_t = log(1 + 1/t^a), counting steps from t = 1."""

    a: float = 0.5

    def step_size(self, t: int, epsilon: float) -> float:
        return math.log1p(1.0 / t**self.a)


Schedule = Union[Constant, Decreasing]


@dataclass
class MmwuConfig:
    epsilon: float = 0.1
    schedule: Schedule = field(default_factory=Constant)
    max_iters: Optional[int] = None
    record_every: int = 1
    seed_rho0: int = 0
    seed_sigma0: int = 1
    init: str = UNIFORM
    average_include_initial: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if self.init not in (UNIFORM, RANDOM):
            raise ValidationError(f"init must be 'uniform' or 'random', not {self.init!r}")
        if self.record_every < 1:
            raise ValidationError("record_every must be >= 1")
        if self.max_iters is not None and self.max_iters < 0:
            raise ValidationError("max_iters must be non-negative")

    def horizon(self, dim_a: int, dim_b: int) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return default_horizon(self.epsilon, dim_a, dim_b)


@dataclass
class MmwuState:
    step: int
    cum_a: np.ndarray
    cum_b: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    log_tr_a: float
    log_tr_b: float
    t: float = 0.0


def state_from_exponents(cum_a, cum_b, step: int = 0, t: float = 0.0) -> MmwuState:
    cum_a = np.asarray(cum_a, dtype=complex)
    cum_b = np.asarray(cum_b, dtype=complex)
    rho, la = linalg.normalized_expm(cum_a)
    sigma, lb = linalg.normalized_expm(cum_b)
    return MmwuState(step, cum_a, cum_b, rho, sigma, la, lb, t)


def initial_state(g: PayoffObservable, cfg: MmwuConfig) -> MmwuState:
    """A_0 = 1, B_0 = 1 (uniform) or the logarithms of seeded random densities."""
    if cfg.init == UNIFORM:
        return state_from_exponents(np.zeros((g.dim_a, g.dim_a), complex), np.zeros((g.dim_b, g.dim_b), complex))
    rho0 = linalg.random_density(g.dim_a, cfg.seed_rho0)
    sigma0 = linalg.random_density(g.dim_b, cfg.seed_sigma0)
    return state_from_exponents(linalg.herm_logm(rho0), linalg.herm_logm(sigma0))


def mmwu_step(g: PayoffObservable, s: MmwuState, mu: float) -> MmwuState:
    """Advance one simultaneous update with step size ``mu``."""
    cum_a, cum_b = euler_update(s.cum_a, s.cum_b, phi_apply(g, s.sigma), -phi_adjoint_apply(g, s.rho), mu)
    return state_from_exponents(cum_a, cum_b, s.step + 1, s.t + mu)


def _collect(states: list[MmwuState], mus: list[float], record_every: int) -> Trajectory:
    return Trajectory(
        t=np.array([s.t for s in states]),
        a=np.stack([s.cum_a for s in states]),
        b=np.stack([s.cum_b for s in states]),
        rho=np.stack([s.rho for s in states]),
        sigma=np.stack([s.sigma for s in states]),
        step=np.array([s.step for s in states]),
        log_tr_a=np.array([s.log_tr_a for s in states]),
        log_tr_b=np.array([s.log_tr_b for s in states]),
        record_every=record_every,
        meta={"mu": np.asarray(mus)},
    )


def run_mmwu(
    g: PayoffObservable,
    cfg: MmwuConfig,
    start: Optional[MmwuState] = None,
    stop_below: Optional[float] = None,
    check_every: int = 100,
) -> tuple[Trajectory, NashCertificate]:
    """Run MMWU and certify the uniform time average of the iterates.

    With ``stop_below`` the run ends early once the running average has
    exploitability at most that value (checked every ``check_every`` steps).
    ``traj.meta["mu"][j]`` is the step size used to produce iterate j
    (0 for the initial point).
    """
    s = start if start is not None else initial_state(g, cfg)
    n_iter = cfg.horizon(g.dim_a, g.dim_b)
    states, mus = [s], [0.0]
    sum_rho = s.rho.copy() if cfg.average_include_initial else np.zeros_like(s.rho)
    sum_sigma = s.sigma.copy() if cfg.average_include_initial else np.zeros_like(s.sigma)
    count = 1 if cfg.average_include_initial else 0
    done = 0
    for j in range(1, n_iter + 1):
        mu = cfg.schedule.step_size(j, cfg.epsilon)
        s = mmwu_step(g, s, mu)
        sum_rho += s.rho
        sum_sigma += s.sigma
        count += 1
        done = j
        if j % cfg.record_every == 0 or j == n_iter:
            states.append(s)
            mus.append(mu)
        if stop_below is not None and j % check_every == 0:
            if exploitability(g, sum_rho / count, sum_sigma / count) <= stop_below:
                if states[-1] is not s:
                    states.append(s)
                    mus.append(mu)
                break
    if count == 0:  # zero iterations and the initial point excluded
        sum_rho, sum_sigma, count = s.rho.copy(), s.sigma.copy(), 1
    rho_bar = linalg.hermitize(sum_rho / count)
    sigma_bar = linalg.hermitize(sum_sigma / count)
    cert = NashCertificate.from_pair(g, rho_bar, sigma_bar, epsilon_target=cfg.epsilon, iterations=done)
    traj = _collect(states, mus, cfg.record_every)
    return traj, cert


def find_nash(
    g: PayoffObservable,
    epsilon: float = 1e-3,
    max_iters: int = 200_000,
    schedule: Optional[Schedule] = None,
    check_every: int = 100,
) -> NashCertificate:
    """Approximate Nash pair from time-averaged MMWU started at the maximally mixed pair.

    Stops as soon as the average is epsilon-good; the returned certificate
    reports the exploitability actually achieved, which exceeds ``epsilon`` if
    ``max_iters`` ran out first.
    """
    cfg = MmwuConfig(
        epsilon=epsilon,
        schedule=schedule if schedule is not None else Decreasing(0.5),
        max_iters=max_iters,
        record_every=max(1, max_iters),
    )
    start = initial_state(g, cfg)
    if exploitability(g, start.rho, start.sigma) <= epsilon:
        return NashCertificate.from_pair(g, start.rho, start.sigma, epsilon_target=epsilon)
    _, cert = run_mmwu(g, cfg, start=start, stop_below=epsilon, check_every=check_every)
    return cert


# -- entropy bookkeeping -----------------------------------------------------------


@dataclass
class EntropyLedgerRow:
    step: int
    mu: float
    delta_s_rho: float
    delta_s_sigma: float
    log_ratio_a: float
    log_ratio_b: float
    lower_bound: float
    upper_bound: float
    reference_residual: float

    @property
    def delta_s_total(self) -> float:
        return self.delta_s_rho + self.delta_s_sigma

    @property
    def log_ratio_total(self) -> float:
        return self.log_ratio_a + self.log_ratio_b


def entropy_ledger(g: PayoffObservable, traj: Trajectory, reference: NashCertificate) -> list[EntropyLedgerRow]:
    """Per-step relative-entropy changes with the log-trace identity and the trace bounds.

    For each step j the row holds
      * delta_s_*: change of S(rho*||rho_j), S(sigma*||sigma_j);
      * log_ratio_*: log Tr A_j - log Tr A_{j-1} (resp. B);
      * lower/upper: mu e^{-mu} <rho_j, Phi(sigma_{j-1})> - mu e^{mu} <rho_{j-1}, Phi(sigma_j)>
        and (mu e^{mu} - mu e^{-mu}) <rho_{j-1}, Phi(sigma_{j-1})>, which bracket the
        log-ratio sum whenever 0 <= Phi(.) <= 1;
      * reference_residual: mu (<Phi(sigma*), rho_{j-1}> - <rho*, Phi(sigma_{j-1})>),
        the exact gap delta_s_total - log_ratio_total.  It vanishes at an exact
        fully mixed equilibrium and is O(mu * epsilon) at an epsilon-approximate one.
    """
    require_fully_mixed(reference)
    if traj.record_every != 1 or traj.log_tr_a is None:
        raise ValidationError("entropy ledger needs an MMWU trajectory recorded at every step")
    mus = np.asarray(traj.meta["mu"])
    s_rho = np.atleast_1d(quantum_relative_entropy(reference.rho_star, traj.rho))
    s_sigma = np.atleast_1d(quantum_relative_entropy(reference.sigma_star, traj.sigma))
    phi_sig = phi_apply(g, traj.sigma)
    phi_star = phi_apply(g, reference.sigma_star)
    rows = []
    for j in range(1, len(traj)):
        mu = float(mus[j])
        u_prev = float(np.real(linalg.hs_inner(traj.rho[j - 1], phi_sig[j - 1])))
        u_new_old = float(np.real(linalg.hs_inner(traj.rho[j], phi_sig[j - 1])))
        u_old_new = float(np.real(linalg.hs_inner(traj.rho[j - 1], phi_sig[j])))
        resid = mu * float(
            np.real(linalg.hs_inner(traj.rho[j - 1], phi_star) - linalg.hs_inner(reference.rho_star, phi_sig[j - 1]))
        )
        rows.append(
            EntropyLedgerRow(
                step=int(traj.step[j]),
                mu=mu,
                delta_s_rho=float(s_rho[j] - s_rho[j - 1]),
                delta_s_sigma=float(s_sigma[j] - s_sigma[j - 1]),
                log_ratio_a=float(traj.log_tr_a[j] - traj.log_tr_a[j - 1]),
                log_ratio_b=float(traj.log_tr_b[j] - traj.log_tr_b[j - 1]),
                lower_bound=mu * math.exp(-mu) * u_new_old - mu * math.exp(mu) * u_old_new,
                upper_bound=(mu * math.exp(mu) - mu * math.exp(-mu)) * u_prev,
                reference_residual=resid,
            )
        )
    return rows


def vanishing_limit_probe(
    g: PayoffObservable,
    mus: Sequence[float],
    steps: int,
    seed: int,
    reference: Optional[NashCertificate] = None,
    start_pair: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> list[tuple[float, float]]:
    """max_j |delta S_total| / mu for each constant step size, from one seeded start.

    ``start_pair`` overrides the seeded Ginibre initial strategies.  The reference defaults to the maximally mixed pair when that is an exact
    equilibrium, otherwise to :func:`find_nash`.
    """
    mus = [float(m) for m in mus]
    if any(m <= 0 for m in mus) or any(b >= a for a, b in zip(mus, mus[1:])):
        raise ValidationError("mus must be positive and strictly decreasing")
    if reference is None:
        from .game import uniform_reference

        reference = uniform_reference(g)
        if reference.exploitability > 1e-12:
            reference = find_nash(g)
    if start_pair is None:
        rng = np.random.default_rng(seed)
        start_pair = (linalg.random_density(g.dim_a, rng), linalg.random_density(g.dim_b, rng))
    start = state_from_exponents(linalg.herm_logm(start_pair[0]), linalg.herm_logm(start_pair[1]))
    out = []
    for mu in mus:
        cfg = MmwuConfig(epsilon=8 * mu, schedule=Constant(mu), max_iters=steps)
        traj, _ = run_mmwu(g, cfg, start=replace(start))
        rows = entropy_ledger(g, traj, reference)
        worst = max((abs(r.delta_s_total) for r in rows), default=0.0)
        out.append((mu, worst / mu))
    return out
