"""Discrete nonlinear Schrodinger lattice on a truncated index window.

i d/dT phi_n = alpha (phi_{n+1} + phi_{n-1}) + sigma beta |phi_n|^2 phi_n,
with Dirichlet (zero) truncation beyond +-N_lat.  Classical RK4 in the slow
time T; sample times are hit by exact step landing, never interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BlowUpError, ConfigError

BOUNDARY_TOL = 1e-8  # |phi| at the window edge above this flags truncation


@dataclass
class LatticeState:
    """Complex amplitudes on sites n in [-N_lat, N_lat] at slow time T."""

    amplitudes: np.ndarray
    time: float
    alpha: float
    beta: float
    sigma: int

    def __post_init__(self):
        if self.sigma not in (+1, -1):
            raise ConfigError(f"sigma must be +1 or -1, got {self.sigma}")
        if len(self.amplitudes) % 2 != 1:
            raise ConfigError("amplitude window must be odd-sized (centered on n = 0)")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)

    @property
    def n_lat(self) -> int:
        return (len(self.amplitudes) - 1) // 2

    def amplitude(self, n: int) -> complex:
        return self.amplitudes[n + self.n_lat]

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes)))

    def boundary_ok(self, tol: float = BOUNDARY_TOL) -> bool:
        return max(abs(self.amplitudes[0]), abs(self.amplitudes[-1])) < tol


def single_site(A: complex, N_lat: int, alpha: float, beta: float, sigma: int) -> LatticeState:
    amp = np.zeros(2 * N_lat + 1, dtype=complex)
    amp[N_lat] = A
    return LatticeState(amp, 0.0, alpha, beta, sigma)


def two_site(A: complex, N_lat: int, alpha: float, beta: float, sigma: int) -> LatticeState:
    amp = np.zeros(2 * N_lat + 1, dtype=complex)
    amp[N_lat] = A
    amp[N_lat + 1] = A
    return LatticeState(amp, 0.0, alpha, beta, sigma)


def _rhs(amp: np.ndarray, alpha: float, beta: float, sigma: int) -> np.ndarray:
    hop = np.zeros_like(amp)
    hop[:-1] += amp[1:]
    hop[1:] += amp[:-1]
    return -1j * (alpha * hop + sigma * beta * np.abs(amp) ** 2 * amp)


def dnls_rhs(state: LatticeState) -> np.ndarray:
    """Time derivative of the amplitudes (Dirichlet beyond the window)."""
    return _rhs(state.amplitudes, state.alpha, state.beta, state.sigma)


def _rk4_step(amp, dT, alpha, beta, sigma):
    k1 = _rhs(amp, alpha, beta, sigma)
    k2 = _rhs(amp + 0.5 * dT * k1, alpha, beta, sigma)
    k3 = _rhs(amp + 0.5 * dT * k2, alpha, beta, sigma)
    k4 = _rhs(amp + dT * k3, alpha, beta, sigma)
    return amp + (dT / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def dnls_evolve(
    state: LatticeState,
    T_final: float,
    dT: float = 1e-3,
    sample_times: np.ndarray | None = None,
) -> list[LatticeState]:
    """RK4 trajectory, sampled at the requested slow times.

    Steps land exactly on each sample time (the last step of a segment is
    shortened).  Aborts on l2 growth beyond 10x the initial norm.
    """
    if dT <= 0:
        raise ConfigError("dT must be positive")
    if T_final < state.time:
        raise ConfigError("T_final must be >= the current state time")
    if sample_times is None:
        sample_times = np.array([T_final])
    sample_times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(sample_times) <= 0) or sample_times[0] < state.time:
        raise ConfigError("sample times must be increasing and >= the state time")
    if sample_times[-1] > T_final + 1e-12:
        raise ConfigError("sample times beyond T_final")

    amp = state.amplitudes.copy()
    guard = 10.0 * max(np.sqrt(np.sum(np.abs(amp) ** 2)), 1e-30)
    out = []
    t = state.time
    for ts in sample_times:
        span = ts - t
        n_steps = max(int(np.ceil(span / dT - 1e-12)), 0)
        for i in range(n_steps):
            h = min(dT, ts - t)
            amp = _rk4_step(amp, h, state.alpha, state.beta, state.sigma)
            t += h
        t = ts
        nrm = np.sqrt(np.sum(np.abs(amp) ** 2))
        if not np.isfinite(nrm) or nrm > guard:
            raise BlowUpError(f"lattice l2 norm exceeded 10x initial at T = {t}")
        out.append(replace(state, amplitudes=amp.copy(), time=t))
    return out
