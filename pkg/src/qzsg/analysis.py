"""
Entropies, Bloch vectors and trajectory diagnostics.

All logarithms are natural (nats).  The matrix functions accept stacks of
density matrices so whole trajectories are evaluated in one pass.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import linalg
from .errors import ReferenceNotFullyMixed, SupportViolation, ValidationError
from .game import MIXED_FLOOR, NashCertificate
from .replicator import canonical_transform
from .trajectory import Trajectory

SUPPORT_TOL = 1e-10
KLEIN_TOL = 1e-12


def _xlogx(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, None)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.log(safe), 0.0)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def von_neumann_entropy(rho: np.ndarray):
    """S(rho) = -Tr(rho log rho), using 0 log 0 = 0."""
    w = np.linalg.eigvalsh(np.asarray(rho))
    return _scalar(-np.sum(_xlogx(w), axis=-1))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError("probability vector must be a non-empty 1-D array")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ValidationError("probability vector must be non-negative and sum to 1")
    return float(-np.sum(_xlogx(p)))


def quantum_relative_entropy(rho: np.ndarray, sigma: np.ndarray, pd_floor: float = linalg.PD_FLOOR):
    """S(rho || sigma) = Tr(rho (log rho - log sigma)).

    Raises ``SupportViolation`` when rho has weight (above ``SUPPORT_TOL``) on an
    eigendirection of sigma whose eigenvalue is below ``pd_floor``.
    """
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape[-2:] != sigma.shape[-2:]:
        raise ValidationError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    w_r = np.linalg.eigvalsh(rho)
    w_s, u_s = np.linalg.eigh(sigma)
    # weights of rho along sigma's eigenvectors: diag(U^dagger rho U)
    overlap = np.real(np.einsum("...ki,...kl,...li->...i", u_s.conj(), rho, u_s))
    null = w_s <= pd_floor
    if np.any(null & (overlap > SUPPORT_TOL)):
        raise SupportViolation("support of rho is not contained in the support of sigma")
    log_s = np.log(np.where(null, 1.0, w_s))
    cross = np.sum(np.where(null, 0.0, overlap * log_s), axis=-1)
    return _scalar(np.sum(_xlogx(w_r), axis=-1) - cross)


def bloch_vector(rho: np.ndarray):
    """(Tr rho X, Tr rho Y, Tr rho Z) for a qubit state; a stack gives shape (..., 3)."""
    rho = np.asarray(rho)
    if rho.shape[-2:] != (2, 2):
        raise ValidationError(f"Bloch vector needs a 2x2 state, got {rho.shape}")
    x = 2.0 * rho[..., 0, 1].real
    y = -2.0 * rho[..., 0, 1].imag
    z = (rho[..., 0, 0] - rho[..., 1, 1]).real
    out = np.stack([x, y, z], axis=-1)
    return tuple(float(c) for c in out) if out.ndim == 1 else out


def require_fully_mixed(reference: NashCertificate, floor: float = MIXED_FLOOR) -> None:
    if not reference.is_fully_mixed(floor):
        raise ReferenceNotFullyMixed(
            f"reference is not fully mixed (min eigenvalues {reference.min_eig_rho:.2e}, "
            f"{reference.min_eig_sigma:.2e}; floor {floor:.0e})"
        )


def annotate(traj: Trajectory, reference: Optional[NashCertificate] = None) -> Trajectory:
    """Fill the analytics columns of ``traj`` in place and return it."""
    traj.frob_return = np.linalg.norm(traj.rho - traj.rho[0], axis=(-2, -1)) + np.linalg.norm(
        traj.sigma - traj.sigma[0], axis=(-2, -1)
    )
    traj.max_abs_eig_a_prime = np.max(np.abs(np.linalg.eigvalsh(canonical_transform(traj.a))), axis=-1)
    traj.max_abs_eig_b_prime = np.max(np.abs(np.linalg.eigvalsh(canonical_transform(traj.b))), axis=-1)
    if traj.rho.shape[-1] == 2:
        traj.bloch_rho = bloch_vector(traj.rho)
    if traj.sigma.shape[-1] == 2:
        traj.bloch_sigma = bloch_vector(traj.sigma)
    if reference is not None:
        require_fully_mixed(reference)
        traj.s_rho = np.atleast_1d(quantum_relative_entropy(reference.rho_star, traj.rho))
        traj.s_sigma = np.atleast_1d(quantum_relative_entropy(reference.sigma_star, traj.sigma))
        traj.meta["reference_exploitability"] = reference.exploitability
    return traj


@dataclass
class RecurrenceReport:
    t_excursion: float
    t_return: Optional[float]
    max_excursion: float
    return_frac: float
    recurred: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ConservationReport:
    s_total_initial: float
    max_drift: float
    drift_per_unit_time: float
    reference_epsilon: float

    def to_dict(self) -> dict:
        return asdict(self)


def recurrence_from_series(t, f, return_frac: float = 0.1) -> RecurrenceReport:
    """Excursion/return detection on a distance-from-start series.

    The excursion time is the first sample reaching half the series maximum; the
    return time is the first later sample below ``return_frac`` times the maximum.
    A series that never leaves its start counts as recurred at the first sample.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(f) < 3:
        raise ValidationError("recurrence detection needs at least 3 samples")
    top = float(np.max(f))
    if top <= 0.0:
        return RecurrenceReport(float(t[0]), float(t[0]), 0.0, return_frac, True)
    i_exc = int(np.argmax(f >= 0.5 * top))
    later = np.nonzero(f[i_exc + 1 :] < return_frac * top)[0]
    if later.size == 0:
        return RecurrenceReport(float(t[i_exc]), None, top, return_frac, False)
    return RecurrenceReport(float(t[i_exc]), float(t[i_exc + 1 + later[0]]), top, return_frac, True)


def detect_recurrence(traj: Trajectory, return_frac: float = 0.1) -> RecurrenceReport:
    if traj.frob_return is None:
        annotate(traj)
    return recurrence_from_series(traj.t, traj.frob_return, return_frac)


def conservation_report(traj: Trajectory, reference: NashCertificate) -> ConservationReport:
    """Drift of S(rho*||rho) + S(sigma*||sigma) along a trajectory."""
    require_fully_mixed(reference)
    if traj.s_rho is None:
        annotate(traj, reference)
    s = traj.s_total
    drift = float(np.max(np.abs(s - s[0])))
    span = float(traj.t[-1] - traj.t[0])
    return ConservationReport(
        s_total_initial=float(s[0]),
        max_drift=drift,
        drift_per_unit_time=drift / span if span > 0 else 0.0,
        reference_epsilon=float(reference.exploitability),
    )


def bounded_orbit_ratio(traj: Trajectory) -> float:
    """max |eig| of A', B' over the second half of the run divided by that over the first half."""
    if traj.max_abs_eig_a_prime is None:
        annotate(traj)
    e = np.maximum(traj.max_abs_eig_a_prime, traj.max_abs_eig_b_prime)
    half = traj.t[0] + 0.5 * (traj.t[-1] - traj.t[0])
    first = e[traj.t <= half]
    second = e[traj.t >= half]
    base = float(np.max(first))
    if base == 0.0:
        return 1.0 if float(np.max(second)) == 0.0 else float("inf")
    return float(np.max(second)) / base

