"""Trajectory generation from the innovation form and the generative model.

Both generators record full diagnostics (innovations and filter states);
the persistence-of-excitation checks need them. Randomness comes from a
counter-based Philox generator keyed by a single 64-bit seed, so every
trajectory is reproducible and trials can run in parallel on independent
streams.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import driven_recursion, filter_recursion
from .linalg import cholesky_lower
from .model import SteadyKalman, StateSpace

__all__ = ["SimConfig", "Trajectory", "simulate_innovation",
           "simulate_statespace", "filter_innovations"]


@dataclass(frozen=True)
class SimConfig:
    """Length (total output samples) and seed of one simulation."""

    nbar: int
    seed: int

    def __post_init__(self):
        if self.nbar < 1:
            raise ValueError("nbar must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class Trajectory:
    """One simulated output path.

    y has shape (nbar, m). The diagnostics e (innovations, same shape) and
    xhat (filter states, shape (nbar + 1, n), starting at xhat_0 = 0) are
    present on simulator output and None for trajectories loaded from CSV.
    """

    y: np.ndarray
    e: np.ndarray | None
    xhat: np.ndarray | None
    seed: int

    @property
    def nbar(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.y.shape[1]

    def to_csv(self, path: str | Path) -> None:
        """Write columns k, y_1..y_m."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["k"] + [f"y_{i + 1}" for i in range(self.m)])
            for k in range(self.nbar):
                w.writerow([k] + [repr(float(v)) for v in self.y[k]])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Trajectory":
        """Load outputs only; diagnostics are unavailable from CSV."""
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            m = len(header) - 1
            rows = [[float(v) for v in row[1:]] for row in reader]
        y = np.asarray(rows, dtype=float).reshape(len(rows), m)
        return cls(y=y, e=None, xhat=None, seed=0)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def simulate_innovation(kf: SteadyKalman, cfg: SimConfig) -> Trajectory:
    """Simulate the innovation form directly.

    Innovations are drawn i.i.d. N(0, Rbar) through the lower Cholesky
    factor of Rbar, then the state recursion xhat_{k+1} = A xhat_k + K e_k
    runs from xhat_0 = 0 and y_k = C xhat_k + e_k.
    """
    rng = _rng(cfg.seed)
    fac = kf.innovation_factor()
    e = rng.standard_normal((cfg.nbar, kf.m)) @ fac.T
    xhat = driven_recursion(kf.A, kf.K, e)
    y = xhat[:cfg.nbar] @ kf.C.T + e
    return Trajectory(y=y, e=e, xhat=xhat, seed=cfg.seed)


def simulate_statespace(ss: StateSpace, kf: SteadyKalman,
                        cfg: SimConfig) -> Trajectory:
    """Simulate the generative model and reconstruct filter diagnostics.

    Draws x_0 ~ N(0, P) (stationary filter start), process noise N(0, Q) and
    measurement noise N(0, R), then runs the steady-state filter over the
    produced outputs to obtain e and xhat. Used to cross-validate
    :func:`simulate_innovation` distributionally.
    """
    rng = _rng(cfg.seed)
    lp = cholesky_lower(kf.P, "P")
    lq = cholesky_lower(ss.Q, "Q")
    lr = cholesky_lower(ss.R, "R")
    x0 = lp @ rng.standard_normal(ss.n)
    w = rng.standard_normal((cfg.nbar, ss.n)) @ lq.T
    v = rng.standard_normal((cfg.nbar, ss.m)) @ lr.T
    x = driven_recursion(ss.A, np.eye(ss.n), w, x0)
    y = x[:cfg.nbar] @ ss.C.T + v
    e, xhat = filter_recursion(ss.A, ss.C, kf.K, y)
    return Trajectory(y=y, e=e, xhat=xhat, seed=cfg.seed)


def filter_innovations(kf: SteadyKalman, y: np.ndarray):
    """Innovations and filter states reconstructed from outputs alone."""
    return filter_recursion(kf.A, kf.C, kf.K, np.atleast_2d(y))
