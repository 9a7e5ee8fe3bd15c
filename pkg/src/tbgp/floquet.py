"""Spectrum of L = -d^2/dx^2 + V(x) for piecewise-constant periodic V.

Transfer matrices across constant segments are exact, so the discriminant
(trace of the monodromy matrix) is evaluated in closed form.  Inside a band
the discriminant sweeps monotonically between +2 and -2 and crosses zero
exactly once; in a gap it stays beyond +/-2 with a single extremum.  Band
location exploits this: zero crossings of the discriminant bracket band
interiors on a coarse grid regardless of how narrow the bands are, and gap
extrema separate the edge roots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import GaugeError, NumericalError, SearchError
from .potential import TWO_PI, PiecewisePotential, sample

# below this distance from the segment height the shear branch is taken,
# avoiding kappa -> 0 cancellation
_DEGENERATE_TOL = 1e-12


def transfer_segment(height: float, width: float, omega) -> np.ndarray:
    """Propagator of -u'' + height*u = omega*u across a constant segment.

    Maps (u, u') at the left end to the right end.  omega may be an array;
    the result then has shape (2, 2) + omega.shape.  det = 1 always.

    Computed in extended precision: in deep gaps the entries reach 1e4 and
    the Wronskian det = 1 comes from cancellation of their products, which
    plain double precision only resolves to ~1e-8.
    """
    omega = np.asarray(omega, dtype=np.longdouble)
    d = omega - height
    osc = d > _DEGENERATE_TOL
    hyp = d < -_DEGENERATE_TOL

    m11 = np.ones_like(d)
    m12 = np.full_like(d, width)
    m21 = np.zeros_like(d)

    kw = np.sqrt(np.abs(d, where=osc | hyp, out=np.zeros_like(d)))
    t = kw * width
    if np.any(osc):
        c, s = np.cos(t, where=osc, out=np.ones_like(t)), np.sin(t, where=osc, out=np.zeros_like(t))
        m11 = np.where(osc, c, m11)
        m12 = np.where(osc, np.divide(s, kw, where=osc, out=np.zeros_like(s)), m12)
        m21 = np.where(osc, -kw * s, m21)
    if np.any(hyp):
        ch, sh = np.cosh(t, where=hyp, out=np.ones_like(t)), np.sinh(t, where=hyp, out=np.zeros_like(t))
        m11 = np.where(hyp, ch, m11)
        m12 = np.where(hyp, np.divide(sh, kw, where=hyp, out=np.zeros_like(sh)), m12)
        m21 = np.where(hyp, kw * sh, m21)
    return np.array([[m11, m12], [m21, m11]])


def monodromy(V: PiecewisePotential, omega) -> np.ndarray:
    """Ordered product of segment propagators over one period.

    The last segment is applied leftmost.  Supports array omega with the
    same broadcasting as transfer_segment.
    """
    omega = np.asarray(omega, dtype=np.longdouble)
    M = None
    for width, height in V.segments:
        S = transfer_segment(height, width, omega)
        if M is None:
            M = S
        else:
            a = S[0, 0] * M[0, 0] + S[0, 1] * M[1, 0]
            b = S[0, 0] * M[0, 1] + S[0, 1] * M[1, 1]
            c = S[1, 0] * M[0, 0] + S[1, 1] * M[1, 0]
            d = S[1, 0] * M[0, 1] + S[1, 1] * M[1, 1]
            M = np.array([[a, b], [c, d]])
    return M


def discriminant(V: PiecewisePotential, omega):
    """Trace of the monodromy matrix; |trace| <= 2 marks the bands."""
    M = monodromy(V, omega)
    tr = M[0, 0] + M[1, 1]
    return tr if tr.ndim else float(tr)


def _scan_zeros(V: PiecewisePotential, lo: float, hi: float, count: int) -> list[float]:
    """First `count` zeros of the discriminant (one per band, simple roots)."""
    f = lambda w: discriminant(V, w)
    found = 0
    for n_scan in (4096, 16384, 65536):
        grid = np.linspace(lo, hi, n_scan)
        D = discriminant(V, grid)
        sgn = np.sign(D)
        idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
        found = len(idx)
        if found >= count:
            return [brentq(f, grid[i], grid[i + 1], xtol=1e-13) for i in idx[:count]]
    raise SearchError(
        f"found only {found} bands below the scan ceiling {hi}; raise the ceiling"
    )


@lru_cache(maxsize=128)
def locate_bands(
    V: PiecewisePotential, l_max: int, ceiling: float | None = None
) -> tuple[tuple[float, float], ...]:
    """Edges (omega_lo, omega_hi) of the first l_max spectral bands.

    Touching bands (zero-width gaps, e.g. V = 0) are resolved through the
    gap extremum: if the discriminant only reaches +/-2 tangentially there,
    both adjacent edges coincide at the tangency point.
    """
    if l_max < 1:
        raise SearchError("l_max must be >= 1")
    if ceiling is None:
        ceiling = (2 * l_max) ** 2 + V.max_height
    start = min(0.0, float(V.heights.min()))
    # one extra zero so every gap adjacent to a requested band is bracketed
    zeros = _scan_zeros(V, start, ceiling, l_max + 1)

    f = lambda w: discriminant(V, w)
    # lower edge of band 1: walk down until the discriminant exceeds +2
    left = zeros[0]
    step = max(1e-3, 0.1 * abs(zeros[0] - start))
    while f(left) < 2.0:
        left -= step
        step *= 2.0
        if left < start - 1e4:
            raise SearchError("no lower band edge found below the spectrum")
    los = [brentq(lambda w: f(w) - 2.0, left, zeros[0], xtol=1e-13)]
    his = []
    for l in range(1, l_max + 1):
        # gap between band l and l+1: h = -s*D has a single max >= 2 there
        s = (-1) ** (l + 1)
        h = lambda w: -s * f(w)
        res = minimize_scalar(
            lambda w: -h(w),
            bounds=(zeros[l - 1], zeros[l]),
            method="bounded",
            options={"xatol": 1e-13},
        )
        w_ext, h_ext = float(res.x), -float(res.fun)
        if h_ext <= 2.0 + 1e-12:
            his.append(w_ext)
            los.append(w_ext)
        else:
            his.append(brentq(lambda w: h(w) - 2.0, zeros[l - 1], w_ext, xtol=1e-13))
            los.append(brentq(lambda w: h(w) - 2.0, w_ext, zeros[l], xtol=1e-13))
    return tuple((float(a), float(b)) for a, b in zip(los[:l_max], his))


def dispersion(V: PiecewisePotential, l: int, k: float, ceiling: float | None = None) -> float:
    """Band function omega_l(k): unique omega in band l with trace = 2 cos(2 pi k)."""
    lo, hi = locate_bands(V, l, ceiling)[l - 1]
    target = 2.0 * np.cos(TWO_PI * k)
    s = (-1) ** (l + 1)  # discriminant runs from 2s at lo to -2s at hi
    if target * s >= 2.0 - 1e-9:
        return lo
    if target * s <= -2.0 + 1e-9:
        return hi
    if hi - lo < 1e-13:
        return 0.5 * (lo + hi)
    f = lambda w: discriminant(V, w) - target
    if f(lo) * f(hi) > 0:
        raise NumericalError(
            f"discriminant not bracketing inside band {l}: upstream band location bug"
        )
    return brentq(f, lo, hi, xtol=1e-13)


@dataclass
class BandTable:
    """Sampled dispersion of one band on a midpoint k-grid."""

    band_index: int
    k_grid: np.ndarray
    omega_values: np.ndarray
    band_edges: tuple[float, float]
    separation: float  # distance of the n=0 Fourier coefficient to other bands
    fourier_coeffs: np.ndarray | None = None  # filled by wannier.band_fourier


def midpoint_k_grid(N_k: int) -> np.ndarray:
    """N_k nodes -1/2 + (j+1/2)/N_k; symmetric about 0, avoids band edges."""
    return -0.5 + (np.arange(N_k) + 0.5) / N_k


def build_band_table(V: PiecewisePotential, l: int, N_k: int = 64) -> BandTable:
    """Sample omega_l(k) on the midpoint grid and measure band separation."""
    k_grid = midpoint_k_grid(N_k)
    omega = np.array([dispersion(V, l, k) for k in k_grid])
    edges = locate_bands(V, max(l + 1, 2))
    center = float(omega.mean())  # = hat(omega)_{l,0} for the midpoint rule
    sep = np.inf
    for m, (lo, hi) in enumerate(edges, start=1):
        if m == l:
            continue
        if lo <= center <= hi:
            sep = 0.0
        else:
            sep = min(sep, min(abs(center - lo), abs(center - hi)))
    return BandTable(
        band_index=l,
        k_grid=k_grid,
        omega_values=omega,
        band_edges=edges[l - 1],
        separation=float(sep),
    )


@dataclass
class BlochField:
    """Gauge-fixed Bloch function on one period [0, 2*pi)."""

    band_index: int
    k: float
    omega: float
    x_grid: np.ndarray
    values: np.ndarray  # complex, int_0^{2pi} |u|^2 dx = 1

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])


def _monodromy_eigenvector(M: np.ndarray, k: float) -> np.ndarray:
    """Eigenvector of the real 2x2 monodromy for eigenvalue exp(i 2 pi k)."""
    lam = np.exp(1j * TWO_PI * k)
    scale = np.abs(M).max()
    if abs(np.sin(TWO_PI * k)) < 1e-8:
        lam = 1.0 if np.cos(TWO_PI * k) > 0 else -1.0
    v1 = np.array([M[0, 1], lam - M[0, 0]])
    v2 = np.array([lam - M[1, 1], M[1, 0]])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    if np.linalg.norm(v) < 1e-12 * max(scale, 1.0):
        # monodromy is +/- identity; any direction works
        v = np.array([1.0, 0.0])
    if abs(M[0, 0] + M[1, 1]) > 2.0 - 1e-12 and abs(np.sin(TWO_PI * k)) < 1e-8:
        # band edge: near-defective matrix, keep the real branch
        v = np.real(v)
    return v.astype(complex)


def _gauge_reference(V: PiecewisePotential, l: int, x_grid: np.ndarray) -> np.ndarray:
    from .potential import is_wall_family

    a = is_wall_family(V)
    if a is not None:
        from .wannier import asymptotic_profile

        return asymptotic_profile(l, a, x_grid)
    return np.full_like(x_grid, 1.0 / np.sqrt(TWO_PI))


def bloch_function(V: PiecewisePotential, l: int, k: float, N_x: int = 64) -> BlochField:
    """Bloch function at omega_l(k), unit period norm, phase-fixed gauge.

    The gauge multiplies u by a unit phase making its overlap with a fixed
    real reference profile positive, which gives u(x;-k) = conj(u(x;k))
    automatically.
    """
    omega = dispersion(V, l, k)
    M = monodromy(V, omega)
    state = _monodromy_eigenvector(M, k)

    dx = TWO_PI / N_x
    x_grid = np.arange(N_x) * dx
    values = np.empty(N_x, dtype=complex)
    pos = 0.0
    for width, height in V.segments:
        mask = (x_grid >= pos - 1e-12) & (x_grid < pos + width - 1e-12)
        w = x_grid[mask] - pos
        if w.size:
            S = transfer_segment(height, w, omega * np.ones_like(w)).astype(float)
            values[mask] = S[0, 0] * state[0] + S[0, 1] * state[1]
        Send = transfer_segment(height, width, omega).astype(float)
        state = Send @ state
        pos += width

    nrm = np.sqrt(dx * np.sum(np.abs(values) ** 2))
    values /= nrm
    ref = _gauge_reference(V, l, x_grid)
    ip = dx * np.sum(ref * values)
    if abs(ip) < 1e-6:
        raise GaugeError(f"gauge reference overlap {abs(ip):.2e} at k = {k}")
    values *= np.conj(ip) / abs(ip)
    return BlochField(band_index=l, k=float(k), omega=float(omega), x_grid=x_grid, values=values)
