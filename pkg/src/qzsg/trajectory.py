"""Trajectory container shared by the discrete (MMWU) and continuous (replicator) solvers."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .game import complex_to_json

CSV_COLUMNS = (
    "t",
    "s_rho",
    "s_sigma",
    "s_total",
    "frob_return",
    "max_eig_a_prime",
    "max_eig_b_prime",
    "bloch_rho_x",
    "bloch_rho_y",
    "bloch_rho_z",
    "bloch_sigma_x",
    "bloch_sigma_y",
    "bloch_sigma_z",
)


@dataclass
class TrajectorySample:
    t: float
    a: np.ndarray
    b: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    s_rho: float
    s_sigma: float
    s_total: float
    frob_return: float
    bloch_rho: Optional[tuple]
    bloch_sigma: Optional[tuple]
    max_abs_eig_a_prime: float
    max_abs_eig_b_prime: float


@dataclass(eq=False)
class Trajectory:
    """Recorded samples of a run, stored column-wise.

    ``a``/``b`` are the dual (cumulative payoff) matrices in whatever coordinates
    the solver used, ``rho``/``sigma`` the corresponding strategies.  Analytics
    columns are filled by :func:`qzsg.analysis.annotate`.
    """

    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    step: Optional[np.ndarray] = None
    log_tr_a: Optional[np.ndarray] = None
    log_tr_b: Optional[np.ndarray] = None
    record_every: int = 1
    coordinates: str = "raw"
    s_rho: Optional[np.ndarray] = None
    s_sigma: Optional[np.ndarray] = None
    frob_return: Optional[np.ndarray] = None
    max_abs_eig_a_prime: Optional[np.ndarray] = None
    max_abs_eig_b_prime: Optional[np.ndarray] = None
    bloch_rho: Optional[np.ndarray] = None
    bloch_sigma: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def s_total(self) -> Optional[np.ndarray]:
        if self.s_rho is None or self.s_sigma is None:
            return None
        return self.s_rho + self.s_sigma

    def __getitem__(self, i: int) -> TrajectorySample:
        def col(x):
            return float("nan") if x is None else float(x[i])

        s_total = self.s_total
        return TrajectorySample(
            t=float(self.t[i]),
            a=self.a[i],
            b=self.b[i],
            rho=self.rho[i],
            sigma=self.sigma[i],
            s_rho=col(self.s_rho),
            s_sigma=col(self.s_sigma),
            s_total=col(s_total),
            frob_return=col(self.frob_return),
            bloch_rho=None if self.bloch_rho is None else tuple(self.bloch_rho[i]),
            bloch_sigma=None if self.bloch_sigma is None else tuple(self.bloch_sigma[i]),
            max_abs_eig_a_prime=col(self.max_abs_eig_a_prime),
            max_abs_eig_b_prime=col(self.max_abs_eig_b_prime),
        )

    def rows(self):
        n = len(self)
        nan = np.full(n, np.nan)
        blank3 = np.full((n, 3), np.nan)
        cols = [
            self.t,
            nan if self.s_rho is None else self.s_rho,
            nan if self.s_sigma is None else self.s_sigma,
            nan if self.s_total is None else self.s_total,
            nan if self.frob_return is None else self.frob_return,
            nan if self.max_abs_eig_a_prime is None else self.max_abs_eig_a_prime,
            nan if self.max_abs_eig_b_prime is None else self.max_abs_eig_b_prime,
        ]
        br = blank3 if self.bloch_rho is None else self.bloch_rho
        bs = blank3 if self.bloch_sigma is None else self.bloch_sigma
        for i in range(n):
            yield [c[i] for c in cols] + list(br[i]) + list(bs[i])

    def to_csv(self, path=None) -> str:
        """Write the analytics columns; missing values are empty cells."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow(["" if np.isnan(x) else repr(float(x)) for x in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def dump_states(self, path) -> None:
        """JSON-lines sidecar with the full states, complex entries as [re, im]."""
        with open(path, "w") as fh:
            for i in range(len(self)):
                rec = {
                    "t": float(self.t[i]),
                    "a": complex_to_json(self.a[i]),
                    "b": complex_to_json(self.b[i]),
                    "rho": complex_to_json(self.rho[i]),
                    "sigma": complex_to_json(self.sigma[i]),
                }
                fh.write(json.dumps(rec) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        data = {k: [] for k in reader.fieldnames}
        for row in reader:
            for k, v in row.items():
                data[k].append(float(v) if v != "" else np.nan)
    return {k: np.asarray(v) for k, v in data.items()}
