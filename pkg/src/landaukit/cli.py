"""Experiment driver: config parsing, dispatch, and reproducible outputs.

Config files are flat, typed, and sectioned::

    # run metadata lives before the first section
    seed = 42
    output_dir = out/run1

    [grid]
    n = 32          # even, positive
    L = 8.0

    [initial_data]
    kind = maxwellian   # maxwellian | anisotropic | two_bump | band_limited
    temperature = 1.0   # remaining keys are kind parameters

    [scheme]
    kind = explicit_rk2  # or imex_diffusion
    cfl_safety = 0.25

    [experiment]
    kind = simulate  # identities | energy_audit | stability | apriori | mollifier
    T = 0.1
    eps_list = 1e-3, 5e-4
    delta_list = 0.5, 0.25, 0.125
    k0 = 5
    sample_every = 1

    [tolerances]
    mass_drift = 1e-10   # per-case overrides, keyed as in audit.json

Blank lines and lines starting with '#' or ';' are comments.  Every key is
typed; unknown keys, type mismatches, and malformed lines report the line
number.  An empty document is valid and yields the defaults above.

Outputs per run: diagnostics.csv / ledger.csv / stability.csv /
mollifier.csv + hdefect.csv (whichever the experiment produces), audit.json,
a final LCF1 snapshot for evolving runs, and manifest.json.  All floats are
written with 17 significant digits so files round-trip float64 exactly;
every file is written to a temp name and renamed, and the only
non-deterministic fields (timestamp, wall time, library versions) live in
manifest.json, so identical config + seed reproduces the data files
byte-identically.

Exit codes: 0 success, 1 usage or config error, 2 solver divergence,
3 audit failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import struct
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .spectral import Field, GridSpec, get_plan
from .functionals import DIAGNOSTICS_COLUMNS
from .solver import (
    INITIAL_KINDS,
    SCHEME_KINDS,
    SolverAbort,
    StepScheme,
    evolve,
    initial_data,
    perturbed,
)
from . import verification as verif

__all__ = [
    "ConfigError",
    "SnapshotError",
    "SimConfig",
    "parse_config",
    "read_snapshot",
    "write_snapshot",
    "run",
    "main",
]


EXPERIMENT_KINDS = ("simulate", "identities", "energy_audit", "stability",
                    "apriori", "mollifier")


class ConfigError(ValueError):
    """Malformed or invalid configuration; message carries the line number."""


class SnapshotError(RuntimeError):
    """Unreadable or mismatched LCF1 snapshot file."""


@dataclass(frozen=True)
class SimConfig:
    """Fully validated run configuration with defaults applied."""

    n: int = 32
    L: float = 8.0
    initial_kind: str = "maxwellian"
    initial_params: dict = field(default_factory=dict)
    scheme_kind: str = "explicit_rk2"
    cfl_safety: float = 0.25
    undershoot_tol: float | None = None
    experiment: str = "simulate"
    T: float = 0.1
    eps_list: tuple = (1e-3, 5e-4)
    delta_list: tuple = (0.5, 0.25, 0.125)
    k0: float = 5.0
    sample_every: int = 1
    dt_factor: float = 1.0
    max_freq: float = 4.0
    trials: int = 10
    seed: int = 0
    output_dir: str = "out"
    tolerances: dict = field(default_factory=dict)

    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.L)

    def scheme(self) -> StepScheme:
        if self.undershoot_tol is None:
            return StepScheme(kind=self.scheme_kind,
                              cfl_safety=self.cfl_safety)
        return StepScheme(kind=self.scheme_kind, cfl_safety=self.cfl_safety,
                          undershoot_tol=self.undershoot_tol)

    def echo(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# Config grammar
# ---------------------------------------------------------------------------


def _to_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None


def _to_float_list(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_to_float(p) for p in parts)


def _to_str(text: str) -> str:
    return text


# (section, key) -> converter; None section holds the flat run keys.
_SCHEMA = {
    None: {"seed": _to_int, "output_dir": _to_str},
    "grid": {"n": _to_int, "L": _to_float},
    "initial_data": {
        "kind": _to_str,
        "temperature": _to_float,
        "temperatures": _to_float_list,
        "offset": _to_float,
        "amplitude": _to_float,
        "max_freq": _to_float,
    },
    "scheme": {"kind": _to_str, "cfl_safety": _to_float,
               "undershoot_tol": _to_float},
    "experiment": {
        "kind": _to_str,
        "T": _to_float,
        "eps_list": _to_float_list,
        "delta_list": _to_float_list,
        "k0": _to_float,
        "sample_every": _to_int,
        "dt_factor": _to_float,
        "max_freq": _to_float,
        "trials": _to_int,
    },
    # free-form float overrides, keyed by audit case id prefix
    "tolerances": None,
}


def _parse_lines(text: str) -> dict:
    """Raw (section, key) -> (value, line) map with grammar errors located."""
    entries: dict = {}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: unterminated section header")
            section = line[1:-1].strip()
            if section not in _SCHEMA or section is None:
                raise ConfigError(
                    f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].split(";", 1)[0].strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        schema = _SCHEMA.get(section)
        if schema is not None and key not in schema:
            where = f"[{section}]" if section else "the flat header"
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} in {where}")
        if (section, key) in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[(section, key)] = (value, lineno)
    return entries


def parse_config(text: str) -> SimConfig:
    """Parse and validate a config document; defaults fill missing keys."""
    entries = _parse_lines(text)

    def take(section: str | None, key: str, conv, default):
        if (section, key) not in entries:
            return default
        value, lineno = entries.pop((section, key))
        try:
            return conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None

    seed = take(None, "seed", _to_int, 0)
    output_dir = take(None, "output_dir", _to_str, "out")
    n_line = entries.get(("grid", "n"), ("", 0))[1]
    n = take("grid", "n", _to_int, 32)
    L = take("grid", "L", _to_float, 8.0)
    init_kind = take("initial_data", "kind", _to_str, "maxwellian")
    params = {}
    for key in ("temperature", "temperatures", "offset", "amplitude",
                "max_freq"):
        conv = _SCHEMA["initial_data"][key]
        if ("initial_data", key) in entries:
            params[key] = take("initial_data", key, conv, None)
    scheme_kind = take("scheme", "kind", _to_str, "explicit_rk2")
    cfl_safety = take("scheme", "cfl_safety", _to_float, 0.25)
    undershoot = take("scheme", "undershoot_tol", _to_float, None)
    exp_kind = take("experiment", "kind", _to_str, "simulate")
    T = take("experiment", "T", _to_float, 0.1)
    eps_list = take("experiment", "eps_list", _to_float_list, (1e-3, 5e-4))
    delta_list = take("experiment", "delta_list", _to_float_list,
                      (0.5, 0.25, 0.125))
    k0 = take("experiment", "k0", _to_float, 5.0)
    sample_every = take("experiment", "sample_every", _to_int, 1)
    dt_factor = take("experiment", "dt_factor", _to_float, 1.0)
    max_freq = take("experiment", "max_freq", _to_float, 4.0)
    trials = take("experiment", "trials", _to_int, 10)
    tolerances = {}
    for (section, key), (value, lineno) in list(entries.items()):
        if section == "tolerances":
            try:
                tolerances[key] = _to_float(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {key}: {exc}") from None
            entries.pop((section, key))
    # _parse_lines already rejects unknown keys; anything left is a bug.
    assert not entries, entries

    if n <= 0 or n % 2 != 0:
        at = f"line {n_line}: " if n_line else ""
        raise ConfigError(f"{at}n must be even and positive, got {n}")
    if not L > 0:
        raise ConfigError(f"L must be positive, got {L}")
    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}")
    if init_kind not in INITIAL_KINDS:
        raise ConfigError(
            f"unknown initial data kind {init_kind!r}; "
            f"expected one of {INITIAL_KINDS}")
    if scheme_kind not in SCHEME_KINDS:
        raise ConfigError(
            f"unknown scheme kind {scheme_kind!r}; "
            f"expected one of {SCHEME_KINDS}")
    if exp_kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"unknown experiment kind {exp_kind!r}; "
            f"expected one of {EXPERIMENT_KINDS}")
    if not 0.0 < cfl_safety <= 1.0:
        raise ConfigError(f"cfl_safety must lie in (0, 1], got {cfl_safety}")
    if not T > 0:
        raise ConfigError(f"T must be positive, got {T}")
    if sample_every < 1:
        raise ConfigError(f"sample_every must be >= 1, got {sample_every}")
    if not dt_factor > 0:
        raise ConfigError(f"dt_factor must be positive, got {dt_factor}")
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if k0 < 5.0:
        warnings.warn(
            f"k0 = {k0} is below 5; the weighted estimates are only "
            "audited for k0 >= 5", stacklevel=2)

    return SimConfig(
        n=n, L=L,
        initial_kind=init_kind, initial_params=params,
        scheme_kind=scheme_kind, cfl_safety=cfl_safety,
        undershoot_tol=undershoot,
        experiment=exp_kind, T=T,
        eps_list=eps_list, delta_list=delta_list,
        k0=k0, sample_every=sample_every, dt_factor=dt_factor,
        max_freq=max_freq, trials=trials,
        seed=seed, output_dir=output_dir, tolerances=tolerances,
    )


# ---------------------------------------------------------------------------
# LCF1 snapshots
# ---------------------------------------------------------------------------

_LCF1_MAGIC = b"LCF1"
# magic, u32 n, f64 L, f64 time; all little-endian, then n^3 f64 values
# in C order: values[i, j, k] sits at v = (axis[i], axis[j], axis[k]).
_LCF1_HEAD = struct.Struct("<4sIdd")


def write_snapshot(path: str | Path, f: Field, time_value: float) -> None:
    """Write one field as an LCF1 snapshot (atomic, bitwise-stable)."""
    grid = f.grid
    head = _LCF1_HEAD.pack(_LCF1_MAGIC, grid.n, grid.L, float(time_value))
    body = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    _atomic_write_bytes(Path(path), head + body)


def read_snapshot(path: str | Path) -> tuple[Field, float]:
    """Read an LCF1 snapshot back; returns the field and its time."""
    raw = Path(path).read_bytes()
    if len(raw) < _LCF1_HEAD.size:
        raise SnapshotError(f"{path}: truncated header")
    magic, n, L, t = _LCF1_HEAD.unpack_from(raw)
    if magic != _LCF1_MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    expected = _LCF1_HEAD.size + 8 * n**3
    if len(raw) != expected:
        raise SnapshotError(
            f"{path}: expected {expected} bytes for n = {n}, got {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_LCF1_HEAD.size)
    values = values.reshape(n, n, n).astype(np.float64)
    return Field(values, GridSpec(n, L)), float(t)


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode())


def _fmt(v: float) -> str:
    # 17 significant digits round-trips float64 exactly.
    return f"{float(v):.17g}"


def _write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _write_report(out: Path, report: verif.AuditReport) -> None:
    _atomic_write_text(out / "audit.json", report.to_json() + "\n")


def _case(case_id: str, anchor: str, value: float, tol: float,
          passed: bool | None = None, **metadata) -> verif.AuditCase:
    ok = bool(value <= tol) if passed is None else bool(passed)
    return verif.AuditCase(case_id=case_id, anchor=anchor, value=float(value),
                           tolerance=float(tol), passed=ok,
                           metadata=metadata)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _initial(config: SimConfig) -> Field:
    return initial_data(config.initial_kind, config.grid(), config.seed,
                        config.initial_params)


def _exp_simulate(config: SimConfig, out: Path) -> tuple[list, verif.AuditReport]:
    grid = config.grid()
    f0 = _initial(config)
    final, rows = evolve(f0, config.T, config.scheme(),
                         config.sample_every, config.k0)
    _write_csv(out / "diagnostics.csv", DIAGNOSTICS_COLUMNS,
               ((r.time, r.mass, *r.momentum, r.second_moment, r.entropy,
                 r.weighted_norm_k0_p32, r.grad34_seminorm,
                 r.boundary_mass_fraction, r.min_value) for r in rows))
    write_snapshot(out / "final.lcf1", final.f, final.time)

    tol = config.tolerances
    r0 = rows[0]
    mass_drift = max(abs(r.mass - r0.mass) for r in rows) / abs(r0.mass)
    mom_drift = max(max(abs(m - m0) for m, m0 in zip(r.momentum, r0.momentum))
                    for r in rows)
    e2_drift = (max(abs(r.second_moment - r0.second_moment) for r in rows)
                / abs(r0.second_moment))
    # entropy may only rise by the per-step slack times the sample stride
    ent_step = max((b.entropy - a.entropy
                    for a, b in zip(rows, rows[1:])), default=0.0)
    cases = [
        _case("conserve:mass", "relative mass drift over the run",
              mass_drift, tol.get("mass_drift", 1e-10)),
        _case("conserve:momentum", "absolute momentum drift over the run",
              mom_drift, tol.get("momentum_drift", 1e-8)),
        _case("conserve:e2", "relative second-moment drift over the run",
              e2_drift, tol.get("e2_drift", 1e-6)),
        _case("entropy:monotone",
              "largest entropy increase between samples",
              ent_step,
              tol.get("entropy_step", 1e-8) * config.sample_every),
    ]
    report = verif.AuditReport(suite="simulate", grid=grid, cases=cases)
    return ["diagnostics.csv", "final.lcf1"], report


def _exp_identities(config: SimConfig, out: Path) -> tuple[list, verif.AuditReport]:
    grid = config.grid()
    samples = verif.identity_samples(grid, config.seed, config.trials,
                                     config.max_freq)
    report = verif.identity_suite(samples, tolerances=config.tolerances)
    return [], report


def _exp_energy_audit(config: SimConfig, out: Path) -> tuple[list, verif.AuditReport]:
    grid = config.grid()
    f0 = _initial(config)
    eps = config.eps_list[0]
    g0 = perturbed(f0, eps, config.seed, config.max_freq)
    res = verif.energy_decomposition_audit(f0, g0, config.T,
                                           config.scheme(),
                                           config.dt_factor)
    _write_csv(out / "ledger.csv", verif.LEDGER_COLUMNS, res.ledger.rows())

    tol = config.tolerances
    ratio = res.c0_emp / res.c0_hat if res.c0_hat > 0 else float("inf")
    c0_floor = tol.get("c0_ratio", 0.9)
    cases = [
        _case("energy:closure",
              "six-term time integrals close the energy balance",
              res.closure_residual, tol.get("closure", 5e-2)),
        _case("energy:d-sign", "coercive term nonpositive at every sample",
              res.d_max, tol.get("d_max", 0.0)),
        _case("energy:c0-ratio",
              "time-integrated coercivity ratio at least the scanned floor",
              ratio, c0_floor, passed=ratio >= c0_floor,
              c0_emp=res.c0_emp, c0_hat=res.c0_hat),
        _case("energy:finite", "every ledger column finite",
              0.0 if res.ledger.finite() else 1.0, 0.5),
    ]
    report = verif.AuditReport(suite="energy-audit", grid=grid, cases=cases)
    return ["ledger.csv"], report


def _exp_stability(config: SimConfig, out: Path) -> tuple[list, verif.AuditReport]:
    grid = config.grid()
    f0 = _initial(config)
    res = verif.contraction_experiment(f0, config.eps_list, config.T,
                                       config.scheme(), config.seed,
                                       config.max_freq, config.sample_every)
    rows = []
    for eps, series in zip(res.eps_list, res.series):
        rows += [(eps, t, m, gm) for t, m, gm in series]
    _write_csv(out / "stability.csv",
               ("eps", "t", "m_diff_norm", "m_diff_grad"), rows)

    tol = config.tolerances
    lo = tol.get("slope_lo", 0.9)
    hi = tol.get("slope_hi", 1.1)
    cases = [
        _case("contraction:slope",
              f"log-log slope of sup|Mw| vs eps inside [{lo}, {hi}]",
              res.slope, hi, passed=lo <= res.slope <= hi, lo=lo),
        _case("contraction:sup-finite",
              "amplification envelope finite for every eps",
              max(res.sup_ratios), tol.get("sup_ceiling", 1e9)),
    ]
    if any(e == 0.0 for e in res.eps_list):
        i = res.eps_list.index(0.0)
        worst = max(m for _, m, _ in res.series[i])
        cases.append(_case(
            "contraction:identical-data",
            "identical initial data stays identically zero",
            worst, tol.get("eps_zero", 1e-12)))
    report = verif.AuditReport(suite="stability", grid=grid, cases=cases)
    return ["stability.csv"], report


def _exp_apriori(config: SimConfig, out: Path) -> tuple[list, verif.AuditReport]:
    grid = config.grid()
    f0 = _initial(config)
    res = verif.apriori_grad_estimate(f0, config.T, config.k0,
                                      config.scheme(), config.dt_factor)
    _write_csv(out / "ledger.csv", verif.GRAD_LEDGER_COLUMNS,
               res.ledger.rows())

    tol = config.tolerances
    cases = [
        _case("apriori:e1-sign", "dissipation term nonpositive at every sample",
              res.e1_max, tol.get("e1_max", 0.0)),
        _case("apriori:closure",
              "four-term time integrals close the weighted energy balance",
              res.closure_residual, tol.get("apriori_closure", 1.0)),
        _case("apriori:grad34-integral",
              "time integral of the weighted gradient energy finite",
              res.grad34_sq_integral, tol.get("grad34_integral", 1e9)),
        _case("apriori:finite", "every ledger column finite",
              0.0 if res.ledger.finite() else 1.0, 0.5),
    ]
    report = verif.AuditReport(suite="apriori", grid=grid, cases=cases)
    return ["ledger.csv"], report


def _exp_mollifier(config: SimConfig, out: Path) -> tuple[list, verif.AuditReport]:
    grid = config.grid()
    f0 = _initial(config)
    traj: list[tuple[float, Field]] = []
    evolve(f0, config.T, config.scheme(), config.sample_every,
           config.k0, on_sample=lambda s: traj.append((s.time, s.f)))
    small = verif.mollifier_smallness(traj, config.k0, config.delta_list)
    defect = verif.h_defect_decay(traj, config.delta_list)
    _write_csv(out / "mollifier.csv",
               ("delta", "error_sup", "bound_sup", "reference_bound"),
               ((r.delta, r.error_sup, r.bound_sup, small.reference_bound)
                for r in small.rows))
    _write_csv(out / "hdefect.csv", ("delta", "h_sq_integral"),
               ((r.delta, r.h_sq_integral) for r in defect.rows))

    tol = config.tolerances
    err_ratio = max((b.error_sup / a.error_sup
                     for a, b in zip(small.rows, small.rows[1:])),
                    default=0.0)
    # weight growth allowance <delta>^k0 per row, as in mollifier_smallness
    bound_ratio = (max(
        r.bound_sup / (1.0 + r.delta**2) ** (config.k0 / 2.0)
        for r in small.rows) / small.reference_bound
        if small.reference_bound > 0 else 0.0)
    h_ratio = max((b.h_sq_integral / a.h_sq_integral
                   for a, b in zip(defect.rows, defect.rows[1:])),
                  default=0.0)
    first = defect.rows[0].h_sq_integral
    extrap = abs(defect.extrapolated) / first if first > 0 else 0.0
    cases = [
        _case("mollify:error-decreasing",
              "worst consecutive mollification-error ratio below one",
              err_ratio, 1.0, passed=small.error_decreasing),
        _case("mollify:uniform-bound",
              "smoothed weighted norm within the width-free bound",
              bound_ratio, tol.get("mollify_bound", 1.01),
              passed=small.uniformly_bounded),
        _case("hdefect:decreasing",
              "worst consecutive gradient-defect ratio below one",
              h_ratio, 1.0, passed=defect.decreasing),
        _case("hdefect:limit",
              "extrapolated defect at most 1e-3 of the coarsest entry",
              extrap, tol.get("hdefect_limit", 1e-3),
              passed=defect.extrapolation_ok),
    ]
    report = verif.AuditReport(suite="mollifier", grid=grid, cases=cases)
    return ["mollifier.csv", "hdefect.csv"], report


_EXPERIMENTS = {
    "simulate": _exp_simulate,
    "identities": _exp_identities,
    "energy_audit": _exp_energy_audit,
    "stability": _exp_stability,
    "apriori": _exp_apriori,
    "mollifier": _exp_mollifier,
}


def run(config: SimConfig) -> int:
    """Execute one experiment; returns the process exit code."""
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        started = time.perf_counter()
        files, report = _EXPERIMENTS[config.experiment](config, out)
        wall = time.perf_counter() - started
    except SolverAbort as exc:
        print(f"solver divergence: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # invalid parameter combinations and out-of-regime data surface as
        # library ValueErrors
        print(f"invalid run: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 1

    _write_report(out, report)
    files = sorted(files + ["audit.json", "manifest.json"])
    manifest = {
        "config": config.echo(),
        "seed": config.seed,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "landaukit": __version__,
        },
        "wall_time_s": wall,
        "timestamp": time.time(),
        "files": files,
    }
    _atomic_write_text(out / "manifest.json",
                       json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(report.format_table())
    if not report.passed:
        print("audit failed", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; the contract here is 1.
    def error(self, message):  # noqa: D102
        raise _UsageError(message)


_SUBCOMMANDS = {
    "simulate": "simulate",
    "identities": "identities",
    "energy-audit": "energy_audit",
    "stability": "stability",
    "apriori": "apriori",
    "mollifier": "mollifier",
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="landau-lab",
                     description="Landau-Coulomb experiment driver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True,
                       help="path to the run configuration")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int,
                       help="RNG seed (overrides config)")
        p.add_argument("--threads", type=int,
                       help="cap for BLAS worker pools (FFTs are "
                            "single-threaded either way)")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        config = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    updates: dict = {"experiment": _SUBCOMMANDS[args.command]}
    if args.out is not None:
        updates["output_dir"] = args.out
    if args.seed is not None:
        if args.seed < 0:
            print("usage error: seed must be nonnegative", file=sys.stderr)
            return 1
        updates["seed"] = args.seed
    config = dataclasses.replace(config, **updates)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
