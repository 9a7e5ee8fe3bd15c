"""Wannier functions by k-quadrature of gauge-fixed Bloch functions.

The midpoint k-average of Bloch functions reproduces the cell-0 Wannier
function up to aliasing of order mu^N_k, so the dominant errors are the
x-quadrature and the window truncation, both controlled by defaults.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .floquet import BandTable, bloch_function, build_band_table, midpoint_k_grid
from .potential import TWO_PI, PiecewisePotential, is_wall_family, sample, small_parameter


def asymptotic_profile(l: int, a: float, x) -> np.ndarray:
    """Small-eps limit of the cell-0 Wannier function.

    Zero on the wall [0, a] and outside [0, 2*pi]; a Dirichlet sine mode of
    the well on [a, 2*pi].
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    well = (x >= a) & (x <= TWO_PI)
    out[well] = np.sqrt(2.0 / (TWO_PI - a)) * np.sin(
        np.pi * l * (TWO_PI - x[well]) / (TWO_PI - a)
    )
    return out


def band_fourier(table: BandTable, n_max: int = 4) -> np.ndarray:
    """Cosine coefficients of the band function on the midpoint k-grid.

    Returns hat(omega)_{l,n} for n = 0..n_max; the n < 0 half is equal by
    the evenness of the band function.  Also stored on the table.
    """
    k, om = table.k_grid, table.omega_values
    coeffs = np.empty(n_max + 1)
    for n in range(n_max + 1):
        c = np.mean(om * np.exp(-1j * TWO_PI * n * k))
        if abs(c.imag) > 1e-10:
            raise ConfigError(f"band Fourier coefficient n={n} not real: {c.imag:.2e}")
        coeffs[n] = c.real
    table.fourier_coeffs = coeffs
    return coeffs


@dataclass
class WannierBasis:
    """Cell-0 Wannier function of one band plus derived couplings.

    Shifted copies (cells n != 0) are realized by integer-node shifts of
    u0_values on the window grid.
    """

    band_index: int
    eps: float | None
    a: float | None
    mu: float | None
    x_grid: np.ndarray  # [-2*pi*N_w, 2*pi*N_w], inclusive ends
    u0_values: np.ndarray  # real
    omega_hat: np.ndarray  # n = 0..n_max
    alpha: float | None
    beta: float
    h1v_norm: float
    N_x: int
    N_w: int
    N_k: int
    table: BandTable
    im_residual: float  # max |Im| discarded from the k-average

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    def shifted(self, n: int) -> np.ndarray:
        """Samples of the cell-n Wannier function on x_grid (zero-filled)."""
        if abs(n) > self.N_w:
            raise ConfigError(f"shift {n} outside the stored window +-{self.N_w}")
        out = np.zeros_like(self.u0_values)
        s = n * self.N_x
        if s == 0:
            return self.u0_values.copy()
        if s > 0:
            out[s:] = self.u0_values[:-s]
        else:
            out[:s] = self.u0_values[-s:]
        return out


def wannier_function(
    V: PiecewisePotential,
    l: int,
    N_k: int = 64,
    N_x: int = 64,
    N_w: int = 8,
    n_max: int = 4,
) -> WannierBasis:
    """Build the cell-0 Wannier function of band l by midpoint k-quadrature."""
    if N_w < 1:
        raise ConfigError("N_w must be >= 1")
    table = build_band_table(V, l, N_k)
    omega_hat = band_fourier(table, n_max)

    dx = TWO_PI / N_x
    n_tot = 2 * N_w * N_x + 1
    x_grid = -TWO_PI * N_w + dx * np.arange(n_tot)
    acc = np.zeros(n_tot, dtype=complex)
    cells = np.arange(-N_w, N_w)
    for k in table.k_grid:
        u = bloch_function(V, l, k, N_x)
        phases = np.exp(1j * TWO_PI * k * cells)
        block = (u.values[None, :] * phases[:, None]).ravel()
        acc[:-1] += block
        acc[-1] += u.values[0] * np.exp(1j * TWO_PI * k * N_w)
    acc /= N_k
    im_residual = float(np.abs(acc.imag).max())
    if im_residual > 1e-8:
        raise ConfigError(
            f"Wannier k-average has imaginary residue {im_residual:.2e}; "
            "gauge or quadrature failure"
        )
    u0 = acc.real

    a = is_wall_family(V)
    eps = mu = alpha = None
    if a is not None:
        eps = V.segments[0][1] ** -0.5
        mu = small_parameter(eps, a)
        alpha = float(omega_hat[1] / mu)

    beta = float(np.trapezoid(u0 ** 4, dx=dx))
    Vx = sample(V, x_grid)
    du = np.gradient(u0, dx)
    h1v = float(np.sqrt(np.trapezoid(du ** 2 + (1.0 + Vx) * u0 ** 2, dx=dx)))

    return WannierBasis(
        band_index=l,
        eps=eps,
        a=a,
        mu=mu,
        x_grid=x_grid,
        u0_values=u0,
        omega_hat=omega_hat,
        alpha=alpha,
        beta=beta,
        h1v_norm=h1v,
        N_x=N_x,
        N_w=N_w,
        N_k=N_k,
        table=table,
        im_residual=im_residual,
    )


def coupling_constants(basis: WannierBasis) -> tuple[float | None, float]:
    """(alpha, beta) = (hopping / mu, on-site quartic integral)."""
    return basis.alpha, basis.beta


def overlap_kernel(basis: WannierBasis, n: int, n1: int, n2: int, n3: int) -> float:
    """Quartic overlap of four shifted Wannier functions."""
    prod = (
        basis.shifted(n) * basis.shifted(n1) * basis.shifted(n2) * basis.shifted(n3)
    )
    return float(np.trapezoid(prod, dx=basis.dx))


def gram_matrix(basis: WannierBasis, n_range) -> np.ndarray:
    """Matrix of pairwise overlaps of shifted Wannier functions."""
    shifts = [basis.shifted(n) for n in n_range]
    m = len(shifts)
    G = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            G[i, j] = G[j, i] = np.trapezoid(shifts[i] * shifts[j], dx=basis.dx)
    return G


@dataclass
class DecayReport:
    """Localization diagnostics: hopping decay, spatial tails, profile error."""

    hopping_decay: list[tuple[int, float]]  # (n, |omega_hat_n|)
    tail_decay: list[tuple[int, float]]  # (n, sup |u0| on the n-th period pair)
    profile_error: float  # sup over [0, 2*pi] against the asymptotic profile
    hopping_slope: float  # least-squares slope of log |omega_hat_n| vs n
    tail_slope: float  # least-squares slope of log tail sup vs n


def decay_diagnostics(basis: WannierBasis) -> DecayReport:
    """Fit the per-cell decay rates of hoppings and Wannier tails."""
    if basis.N_w < 4 or len(basis.omega_hat) < 4:
        raise ConfigError("decay diagnostics need n_max >= 3 and N_w >= 4")
    hopping = [
        (n, float(abs(basis.omega_hat[n]))) for n in range(1, len(basis.omega_hat))
    ]
    tails = []
    for n in range(1, basis.N_w):
        left = (basis.x_grid >= -TWO_PI * (n + 1)) & (basis.x_grid <= -TWO_PI * n)
        right = (basis.x_grid >= TWO_PI * n) & (basis.x_grid <= TWO_PI * (n + 1))
        tails.append((n, float(np.abs(basis.u0_values[left | right]).max())))

    if basis.a is not None:
        cell = (basis.x_grid >= 0.0) & (basis.x_grid <= TWO_PI)
        prof = asymptotic_profile(basis.band_index, basis.a, basis.x_grid[cell])
        profile_error = float(np.abs(basis.u0_values[cell] - prof).max())
    else:
        profile_error = float("nan")

    def _slope(pairs):
        n = np.array([p[0] for p in pairs], dtype=float)
        v = np.array([max(p[1], 1e-300) for p in pairs])
        return float(np.polyfit(n, np.log(v), 1)[0])

    return DecayReport(
        hopping_decay=hopping,
        tail_decay=tails,
        profile_error=profile_error,
        hopping_slope=_slope(hopping),
        tail_slope=_slope(tails),
    )
