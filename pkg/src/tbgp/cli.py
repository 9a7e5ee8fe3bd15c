"""Batch front end: band structure, Wannier tables, simulations, validation.

Config files are line-based `key = value` under `[section]` headers; every
run writes a `manifest` file of effective parameters in the same format, so
re-running from the manifest reproduces the outputs bit-exactly.  All CSVs
carry a fixed header row and 17-significant-digit values.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from .dnls import dnls_evolve, single_site, two_site
from .errors import ConfigError, NumericalError
from .floquet import build_band_table
from .gp import FieldState, conserved_quantities, gp_evolve
from .potential import TWO_PI, make_wall_potential
from .validate import (
    ExperimentConfig,
    band_project,
    gronwall_constant,
    gronwall_diagnostic,
    run_validation,
    solve_correction,
    synthesize_field,
    _lattice_field,
)
from .wannier import asymptotic_profile, wannier_function

_SECTIONS = {
    "potential": {"eps": float, "a": float, "sigma": int},
    "grids": {"l": int, "N_k": int, "N_x": int, "N_w": int, "N_d": int, "N_lat": int},
    "steps": {"dt": float, "dT": float, "T0": float, "t_final": float, "sample_count": int},
    "sweep": {"eps_list": str, "initial_lattice": str, "initial_amplitude": float},
    "output": {"verbosity": int},
}

# key names are unique across sections, so bare keys before any header
# resolve unambiguously
_KEYMAP = {k: c for sec in _SECTIONS.values() for k, c in sec.items()}


@dataclass
class RunConfig:
    """Effective parameters for one CLI invocation."""

    eps: float = 0.5
    a: float = np.pi
    sigma: int = +1
    l: int = 1
    N_k: int = 64
    N_x: int = 256
    N_w: int = 8
    N_d: int = 24
    N_lat: int = 24
    dt: float = 1e-4
    dT: float = 1e-3
    T0: float = 1.0
    t_final: float = 1.0
    sample_count: int = 64
    eps_list: str = "0.6, 0.55, 0.5, 0.45"
    initial_lattice: str = "single_site"
    initial_amplitude: float = 1.0
    verbosity: int = 1

    def __post_init__(self):
        if not 0 < self.eps:
            raise ConfigError("eps must be positive")
        if not 0 < self.a < TWO_PI:
            raise ConfigError("a must lie in (0, 2 pi)")
        if self.sigma not in (+1, -1):
            raise ConfigError("sigma must be +1 or -1")
        if self.l < 1:
            raise ConfigError("l must be >= 1 (band index)")
        for name in ("N_k", "N_x", "N_w", "N_d", "N_lat", "sample_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        for name in ("dt", "dT", "T0", "t_final"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    def eps_values(self) -> tuple[float, ...]:
        try:
            vals = tuple(float(tok) for tok in self.eps_list.split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"bad eps_list: {exc}") from None
        if not vals:
            raise ConfigError("eps_list is empty")
        return vals

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig(
            eps_list=self.eps_values(),
            a=self.a,
            l=self.l,
            sigma=self.sigma,
            T0=self.T0,
            initial_lattice=self.initial_lattice,
            initial_amplitude=self.initial_amplitude,
            N_k=self.N_k,
            N_x=self.N_x,
            N_w=self.N_w,
            N_d=self.N_d,
            N_lat=self.N_lat,
            dt=self.dt,
            dT=self.dT,
            sample_count=self.sample_count,
        )


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines under [section] headers into a RunConfig.

    Unknown sections or keys, duplicate keys, malformed lines, and
    out-of-range values are hard errors carrying the line number.
    """
    values: dict[str, object] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if section is not None:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        elif key not in _KEYMAP:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        caster = _KEYMAP[key]
        try:
            values[key] = caster(val)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: cannot parse {key} = {val!r} as {caster.__name__}"
            ) from None
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        key = str(exc).split()[0]
        lineno = _find_line(text, key) if key in values else None
        if lineno is not None:
            raise ConfigError(f"line {lineno}: {exc}") from None
        raise


def _find_line(text: str, key: str) -> int | None:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip().startswith(key):
            return lineno
    return None


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


class _Writer:
    """CSV writer that lands atomically: `.partial` until closed cleanly."""

    def __init__(self, out_dir: str, name: str, header: list[str]):
        self.final = os.path.join(out_dir, name)
        self.path = self.final + ".partial"
        self.fh = open(self.path, "w")
        self.fh.write(",".join(header) + "\n")

    def row(self, *cells):
        self.fh.write(",".join(_fmt(c) for c in cells) + "\n")

    def close(self):
        self.fh.close()
        os.replace(self.path, self.final)

    def abandon(self):
        self.fh.close()


def _write_manifest(cfg: RunConfig, out_dir: str, subcommand: str):
    lines = [f"# effective parameters for `{subcommand}`"]
    for sec, keys in _SECTIONS.items():
        lines.append(f"[{sec}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    path = os.path.join(out_dir, "manifest")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _cmd_bands(cfg: RunConfig, out_dir: str):
    V = make_wall_potential(cfg.eps, cfg.a)
    w = _Writer(out_dir, "bands.csv", ["l", "k", "omega"])
    try:
        for l in range(1, max(cfg.l, 4) + 1):
            table = build_band_table(V, l, cfg.N_k)
            for k, om in zip(table.k_grid, table.omega_values):
                w.row(l, k, om)
    except Exception:
        w.abandon()
        raise
    w.close()


def _cmd_wannier(cfg: RunConfig, out_dir: str):
    V = make_wall_potential(cfg.eps, cfg.a)
    basis = wannier_function(V, cfg.l, cfg.N_k, cfg.N_x, cfg.N_w)
    prof = asymptotic_profile(cfg.l, cfg.a, basis.x_grid)
    w = _Writer(out_dir, "wannier.csv", ["x", "u_hat", "u_asymptotic"])
    try:
        for x, u, p in zip(basis.x_grid, basis.u0_values, prof):
            w.row(x, u, p)
    except Exception:
        w.abandon()
        raise
    w.close()


def _cmd_couplings(cfg: RunConfig, out_dir: str):
    V = make_wall_potential(cfg.eps, cfg.a)
    basis = wannier_function(V, cfg.l, cfg.N_k, cfg.N_x, cfg.N_w)
    w = _Writer(out_dir, "couplings.csv", ["n", "omega_hat_n"])
    try:
        for n, om in enumerate(basis.omega_hat):
            w.row(n, om)
    except Exception:
        w.abandon()
        raise
    w.close()
    s = _Writer(out_dir, "coupling_summary.csv", ["eps", "mu", "alpha", "beta", "h1v_norm"])
    try:
        s.row(cfg.eps, basis.mu, basis.alpha, basis.beta, basis.h1v_norm)
    except Exception:
        s.abandon()
        raise
    s.close()


def _initial_pair(cfg: RunConfig):
    V = make_wall_potential(cfg.eps, cfg.a)
    basis = wannier_function(V, cfg.l, cfg.N_k, cfg.N_x, cfg.N_w)
    factory = single_site if cfg.initial_lattice == "single_site" else two_site
    lattice = factory(cfg.initial_amplitude, cfg.N_lat, basis.alpha, basis.beta, cfg.sigma)
    return V, basis, lattice


def _cmd_simulate(cfg: RunConfig, out_dir: str, model: str):
    if model not in ("gp", "dnls"):
        raise ConfigError(f"unknown model {model!r}; expected gp or dnls")
    V, basis, lattice = _initial_pair(cfg)
    times = np.linspace(0.0, cfg.t_final, cfg.sample_count)
    if model == "dnls":
        traj = [lattice] + dnls_evolve(lattice, times[-1], cfg.dT, sample_times=times[1:])
        w = _Writer(out_dir, "dnls_snapshots.csv", ["T", "n", "re_phi", "im_phi"])
        try:
            for st in traj:
                for n in range(-st.n_lat, st.n_lat + 1):
                    amp = st.amplitude(n)
                    w.row(st.time, n, amp.real, amp.imag)
        except Exception:
            w.abandon()
            raise
        w.close()
        return
    field0 = synthesize_field(lattice, basis, basis.mu, 0.0, cfg.N_d)
    traj, cons = gp_evolve(
        field0, times[-1], cfg.dt, V, sample_times=times[1:], calibration_band=cfg.l
    )
    traj = [field0] + traj
    cons = [conserved_quantities(field0, V)] + cons
    w = _Writer(out_dir, "gp_snapshots.csv", ["t", "x", "re_phi", "im_phi"])
    c = _Writer(out_dir, "gp_conservation.csv", ["t", "Q", "E"])
    try:
        for st, pair in zip(traj, cons):
            for x, v in zip(st.x_grid, st.values):
                w.row(st.time, x, v.real, v.imag)
            c.row(st.time, pair.Q, pair.E)
    except Exception:
        w.abandon()
        c.abandon()
        raise
    w.close()
    c.close()


def _cmd_correction(cfg: RunConfig, out_dir: str):
    V, basis, lattice = _initial_pair(cfg)
    phi0 = _lattice_field(lattice, basis, cfg.N_d)
    src = FieldState(
        -cfg.sigma * np.abs(phi0) ** 2 * phi0, 0.0, cfg.sigma, cfg.N_d, cfg.N_x
    )
    phi1 = solve_correction(src, V, cfg.l, basis.omega_hat[0])
    w = _Writer(out_dir, "correction.csv", ["x", "re_phi1", "im_phi1"])
    try:
        for x, v in zip(phi1.x_grid, phi1.values):
            w.row(x, v.real, v.imag)
    except Exception:
        w.abandon()
        raise
    w.close()


def _cmd_validate(cfg: RunConfig, out_dir: str):
    report = run_validation(cfg.experiment())
    summary = _Writer(out_dir, "summary.csv", ["eps", "mu", "sup_error", "ratio"])
    try:
        for r in report.records:
            summary.row(r.eps, r.mu, r.sup_error, r.ratio)
    except Exception:
        summary.abandon()
        raise
    summary.close()
    for r in report.records:
        w = _Writer(out_dir, f"errors_eps{r.eps:g}.csv", ["t", "error", "error_over_mu15"])
        try:
            for t, e in zip(r.times, r.errors):
                w.row(t, e, e / r.mu ** 1.5)
        except Exception:
            w.abandon()
            raise
        w.close()
    fit = _Writer(out_dir, "fit.csv", ["slope", "intercept", "residual"])
    try:
        fit.row(report.slope, report.intercept, report.fit_residual)
    except Exception:
        fit.abandon()
        raise
    fit.close()

    checks = []
    if report.slope is not None:
        checks.append(("scaling_slope_in_[1.25,1.75]", 1.25 <= report.slope <= 1.75,
                       f"slope={report.slope:.6g}"))
    if report.records:
        ratios = [r.ratio for r in report.records]
        spread = max(ratios) / min(ratios)
        checks.append(("ratio_spread_le_3", spread <= 3.0, f"spread={spread:.6g}"))
        t0 = max(r.errors[0] for r in report.records)
        checks.append(("initial_error_le_1e-12", t0 <= 1e-12, f"max_t0_error={t0:.3g}"))
        half = [r for r in report.records if abs(r.eps - 0.5) < 1e-12]
        if half:
            r = half[0]
            basis = wannier_function(
                make_wall_potential(r.eps, cfg.a), cfg.l, cfg.N_k, cfg.N_x, cfg.N_w
            )
            series = gronwall_diagnostic(r, basis, cfg.experiment())
            C_fit = gronwall_constant(series, r, cfg.T0)
            bounded = bool(np.all(np.isfinite(series))) and C_fit <= 10.0
            checks.append(("gronwall_residual_bounded", bounded,
                           f"max={series.max():.6g} fitted_C={C_fit:.6g}"))
    lines = [
        f"{'PASS' if ok else 'FAIL'} {name} {info}" for name, ok, info in checks
    ]
    with open(os.path.join(out_dir, "checks.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    if report.failures:
        for eps, msg in report.failures.items():
            print(f"FAIL sweep_eps_{eps:g} {msg}", file=sys.stderr)
        raise NumericalError("one or more sweep members failed")


def run_subcommand(name: str, cfg: RunConfig, out_dir: str, model: str = "gp") -> int:
    """Dispatch one subcommand; returns the process exit code."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        _write_manifest(cfg, out_dir, name)
        if name == "bands":
            _cmd_bands(cfg, out_dir)
        elif name == "wannier":
            _cmd_wannier(cfg, out_dir)
        elif name == "couplings":
            _cmd_couplings(cfg, out_dir)
        elif name == "simulate":
            _cmd_simulate(cfg, out_dir, model)
        elif name == "correction":
            _cmd_correction(cfg, out_dir)
        elif name == "validate":
            _cmd_validate(cfg, out_dir)
        else:
            raise ConfigError(f"unknown subcommand {name!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tbgp",
        description="band structure, Wannier reduction, and validation sweeps "
        "for the periodic-potential cubic Schrodinger equation",
    )
    parser.add_argument("subcommand", choices=[
        "bands", "wannier", "couplings", "simulate", "correction", "validate",
    ])
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--model", default="gp", choices=["gp", "dnls"],
                        help="simulate: which evolution to run")
    parser.add_argument("--threads", type=int, default=1,
                        help="reserved; all pipelines run single-threaded")
    parser.add_argument("--seed", type=int, default=0,
                        help="reserved; every algorithm is deterministic")
    args = parser.parse_args(argv)
    try:
        if args.config:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = RunConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run_subcommand(args.subcommand, cfg, args.out, args.model)


if __name__ == "__main__":
    sys.exit(main())
