"""Command-line front end: experiment configs, sweeps, and CSV emission.

One binary with subcommands (kernel, clock, dos, verify, hatn,
reproduce). Settings come from an optional `key = value` config file plus
flag overrides, flags winning. Every run writes a single CSV atomically
(temp file then rename), with a `# schema=1` comment line, a fixed
header, and 17-significant-digit numeric formatting, so identical
configurations produce byte-identical files regardless of worker count.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kernel import kernel_ratio, sine_kernel
from .potential import (
    HatNSearchError,
    PearsonPotential,
    PotentialSpec,
    empirical_hat_N,
    potential_spec_from_mapping,
)
from .spectrum import clock_statistics, density_of_states
from .verify import (
    probe_kappa_schedule,
    probe_one_bump,
    probe_transfer_bound,
    probe_truncation_step,
    staircase_m,
)

__all__ = ["main", "run", "reproduce_headline", "ExperimentConfig", "ConfigError"]

SCHEMA_LINE = "# schema=1"
WORKERS_ENV = "PEARSONLAB_WORKERS"

HEADERS = {
    "kernel": ["method", "xi", "a", "b", "L", "value_re", "value_im", "target", "abs_error", "status"],
    "clock": ["L", "xi_star", "n", "spacing", "statistic", "deviation", "status"],
    "dos": ["L", "bin_lo", "bin_hi", "count", "mass", "free_mass", "rel_error", "status"],
    "verify": ["lemma_id", "parameters", "measured", "reference", "verdict", "status"],
    "hatn": ["ell", "tolerance", "window_lo", "window_hi", "ab_bound", "hat_n", "status"],
}

_POTENTIAL_KEYS = {
    "profile", "amplitude_rule", "amplitude_values", "amplitude_c", "amplitude_p",
    "center_rule", "center_values", "center_n1", "center_gamma", "count",
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    xi_grid: tuple[float, ...] = (1.0,)
    l_grid: tuple[float, ...] = (100.0,)
    a_grid: tuple[float, ...] = (0.0,)
    b_grid: tuple[float, ...] = (0.0,)
    xi_star: float = 1.0
    depth: int = 3
    interval: tuple[float, float] = (1.0, 4.0)
    bins: int = 12
    ell: int = 0
    tolerance: float = 0.05
    ab_bound: float = 2.0
    probe: str = "one_bump"
    probe_lambda: float = 1e-3
    probe_xi: float = 1.0
    probe_m: int = 2
    probe_ell: int = 0
    probe_count: int = 16
    out: str = "results.csv"
    workers: int = 1
    steps_per_bump: int | None = None

    def validate(self) -> None:
        if self.kind not in HEADERS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for name in ("xi_grid", "l_grid", "a_grid", "b_grid"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name} must not be empty")
        if any(x <= 0 for x in self.xi_grid):
            raise ConfigError("xi_grid values must be positive")
        if list(self.l_grid) != sorted(self.l_grid) or len(set(self.l_grid)) != len(self.l_grid):
            raise ConfigError("l_grid must be strictly increasing")
        if any(l <= 0 for l in self.l_grid):
            raise ConfigError("l_grid values must be positive")
        if self.kind == "clock" and self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if self.kind == "dos":
            lo, hi = self.interval
            if not (0 < lo < hi):
                raise ConfigError("interval must be inside (0, inf)")
            if self.bins < 1:
                raise ConfigError("bins must be at least 1")
        if self.kind == "verify" and self.probe not in (
            "one_bump", "transfer_bound", "truncation_step", "kappa_schedule", "suite",
        ):
            raise ConfigError(f"unknown probe {self.probe!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        try:
            self.potential.build()
        except ValueError as exc:
            raise ConfigError(f"potential spec invalid: {exc}") from exc


# -- config file parsing -------------------------------------------------------


def _parse_kv_file(path: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key in mapping:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        mapping[key] = value.strip()
    return mapping


def _floats(text: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(p.strip()) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from exc


def config_from_mapping(kind: str, mapping: dict[str, str]) -> ExperimentConfig:
    cfg = ExperimentConfig(kind=kind)
    pot_keys = {k: v for k, v in mapping.items() if k in _POTENTIAL_KEYS}
    if pot_keys:
        try:
            cfg.potential = potential_spec_from_mapping(pot_keys)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    for key, value in mapping.items():
        if key in _POTENTIAL_KEYS or key == "kind":
            continue
        try:
            if key in ("xi_grid", "l_grid", "a_grid", "b_grid"):
                setattr(cfg, key, _floats(value, key))
            elif key == "interval":
                vals = _floats(value, key)
                if len(vals) != 2:
                    raise ConfigError("interval needs exactly two endpoints")
                cfg.interval = (vals[0], vals[1])
            elif key in ("depth", "bins", "ell", "workers", "probe_m", "probe_ell", "probe_count"):
                setattr(cfg, key, int(value))
            elif key == "steps_per_bump":
                cfg.steps_per_bump = int(value)
            elif key in ("xi_star", "tolerance", "ab_bound", "probe_lambda", "probe_xi"):
                setattr(cfg, key, float(value))
            elif key in ("out", "probe"):
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: {exc}") from exc
    if "kind" in mapping and mapping["kind"] != kind:
        raise ConfigError(
            f"config kind {mapping['kind']!r} does not match subcommand {kind!r}"
        )
    return cfg


# -- tasks ---------------------------------------------------------------------


def _task_kernel(payload):
    V, L, xi, a_grid, b_grid, steps = payload
    rows = []
    for a in a_grid:
        for b in b_grid:
            try:
                value = kernel_ratio(V, xi, a, b, L, steps=steps)
                target = sine_kernel(xi, a, b)
                re = value.real if isinstance(value, complex) else value
                im = value.imag if isinstance(value, complex) else 0.0
                rows.append(
                    ["kernel_ratio", xi, a, b, L, re, im, target, abs(value - target), "ok"]
                )
            except Exception as exc:  # noqa: BLE001 - recorded per row
                rows.append(["kernel_ratio", xi, a, b, L, "", "", "", "", f"error: {exc}"])
    return rows


def _task_clock(payload):
    V, L, xi_star, depth, steps = payload
    try:
        report = clock_statistics(V, L, xi_star, depth, steps=steps)
    except Exception as exc:  # noqa: BLE001
        return [[L, xi_star, "", "", "", "", f"error: {exc}"]]
    rows = []
    window = report.window
    for i, stat in enumerate(report.statistics):
        n = window.n_min + i
        spacing = window.value(n + 1) - window.value(n)
        rows.append([L, xi_star, n, spacing, stat, abs(stat - 1.0), "ok"])
    return rows


def _task_dos(payload):
    V, L, interval, bins, steps = payload
    try:
        est = density_of_states(V, L, interval, bins, steps=steps)
    except Exception as exc:  # noqa: BLE001
        return [[L, "", "", "", "", "", "", f"error: {exc}"]]
    rows = []
    for i in range(len(est.counts)):
        free = est.free_masses[i]
        rel = abs(est.masses[i] - free) / free if free > 0 else ""
        rows.append(
            [L, est.edges[i], est.edges[i + 1], est.counts[i], est.masses[i], free, rel, "ok"]
        )
    return rows


def _probe_params_text(parameters: dict) -> str:
    parts = []
    for key in sorted(parameters):
        val = parameters[key]
        if isinstance(val, float):
            parts.append(f"{key}={val:.17g}")
        elif isinstance(val, tuple):
            parts.append(f"{key}=" + "|".join(f"{v:.17g}" for v in val))
        else:
            parts.append(f"{key}={val}")
    return ";".join(parts)


def _task_verify(payload):
    cfg_probe, params = payload
    try:
        if cfg_probe == "one_bump":
            probe = probe_one_bump(params["lam"], params["xi"], steps=params["steps"])
        elif cfg_probe == "transfer_bound":
            probe = probe_transfer_bound(
                params["m"], params["x_grid"], params["t_grid"]
            )
        elif cfg_probe == "truncation_step":
            probe = probe_truncation_step(
                params["V"], params["ell"], params["xi"], params["x_grid"],
                steps=params["steps"],
            )
        elif cfg_probe == "kappa_schedule":
            lams = [(n + 1) ** (-0.25) for n in range(params["count"])]
            ms = staircase_m(lams, m_max=params["m"])
            probe = probe_kappa_schedule(lams, ms)
        else:
            raise ValueError(f"unknown probe {cfg_probe!r}")
    except Exception as exc:  # noqa: BLE001
        return [[cfg_probe, "", "", "", "", f"error: {exc}"]]
    ref = probe.reference if probe.reference is not None else ""
    return [
        [probe.lemma_id, _probe_params_text(probe.parameters), probe.measured, ref,
         probe.verdict, "ok"]
    ]


def _task_hatn(payload):
    V, ell, tolerance, window, ab_bound, steps = payload
    try:
        value = empirical_hat_N(V, ell, tolerance, window, ab_bound, steps=steps)
        return [[ell, tolerance, window[0], window[1], ab_bound, value, "ok"]]
    except HatNSearchError as exc:
        return [[ell, tolerance, window[0], window[1], ab_bound, "", f"error: {exc}"]]
    except Exception as exc:  # noqa: BLE001
        return [[ell, tolerance, window[0], window[1], ab_bound, "", f"error: {exc}"]]


_TASK_FNS = {
    "kernel": _task_kernel,
    "clock": _task_clock,
    "dos": _task_dos,
    "verify": _task_verify,
    "hatn": _task_hatn,
}


def _run_task(item):
    kind, payload = item
    return _TASK_FNS[kind](payload)


def _execute(tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks))


# -- CSV emission --------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    text = str(v)
    if "," in text or "\n" in text:
        raise ValueError(f"CSV fields must not contain commas or newlines: {text!r}")
    return text


def write_csv(path: str, header: list[str], rows) -> None:
    """Write rows atomically: temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", newline="") as fh:
            fh.write(SCHEMA_LINE + "\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: ExperimentConfig) -> int:
    """Dispatch one experiment; returns the process exit status."""
    cfg.validate()
    V = cfg.potential.build()
    steps = cfg.steps_per_bump
    tasks = []
    if cfg.kind == "kernel":
        for L in cfg.l_grid:
            for xi in cfg.xi_grid:
                tasks.append(("kernel", (V, L, xi, cfg.a_grid, cfg.b_grid, steps)))
    elif cfg.kind == "clock":
        for L in cfg.l_grid:
            tasks.append(("clock", (V, L, cfg.xi_star, cfg.depth, steps)))
    elif cfg.kind == "dos":
        for L in cfg.l_grid:
            tasks.append(("dos", (V, L, cfg.interval, cfg.bins, steps)))
    elif cfg.kind == "verify":
        # a suite is the individual probes as independent parallel tasks
        probes = (
            ["one_bump", "transfer_bound", "kappa_schedule"]
            + (["truncation_step"] if V.bump_count >= 2 else [])
            if cfg.probe == "suite"
            else [cfg.probe]
        )
        for name in probes:
            params = {
                "lam": cfg.probe_lambda,
                "xi": cfg.probe_xi,
                "m": cfg.probe_m,
                "ell": cfg.probe_ell,
                "count": cfg.probe_count,
                "steps": steps,
                "V": V,
                "x_grid": tuple(np.geomspace(1.0, 100.0, 9))
                if name == "transfer_bound"
                else _truncation_grid(V, cfg.probe_ell),
                "t_grid": (-1.0, -0.5, 0.0, 0.5, 1.0),
            }
            tasks.append(("verify", (name, params)))
    elif cfg.kind == "hatn":
        tasks.append(
            ("hatn", (V, cfg.ell, cfg.tolerance, cfg.interval, cfg.ab_bound, steps))
        )
    results = _execute(tasks, cfg.workers)
    rows = [row for chunk in results for row in chunk]
    write_csv(cfg.out, HEADERS[cfg.kind], rows)
    failures = [row for row in rows if str(row[-1]).startswith("error")]
    for row in failures:
        print(f"row failed: {row[-1]}", file=sys.stderr)
    if failures:
        print(f"{len(failures)} of {len(rows)} rows failed", file=sys.stderr)
        return 1
    return 0


def _truncation_grid(V: PearsonPotential, ell: int) -> tuple[float, ...]:
    if ell + 1 > V.bump_count:
        return (1.0,)
    lo = V.centers[ell]
    hi = V.centers[ell + 1] if ell + 1 < V.bump_count else lo + 10.0
    return tuple(np.linspace(lo, hi, 5))


# -- headline reproduction -----------------------------------------------------


def canonical_potential(count: int = 12) -> PotentialSpec:
    """Amplitudes n^(-1/4) (square sum divergent), centers 10, 100, 1000, ..."""
    return PotentialSpec(
        amplitude_rule="power",
        amplitude_c=1.0,
        amplitude_p=0.25,
        center_rule="geometric",
        center_n1=10.0,
        center_gamma=10.0,
        count=count,
    )


def reproduce_headline(
    outdir: str,
    *,
    workers: int = 1,
    l_grid: tuple[float, ...] = (100.0, 1000.0, 10000.0),
    steps: int | None = None,
) -> int:
    """Desk-scale pipeline on the canonical sparse potential.

    Emits three CSV files into outdir: kernel_convergence.csv (sup of
    |kernel_ratio - sinc| over real |a|, |b| <= 2 per xi and L),
    clock_convergence.csv (max spacing deviation at xi_star = 1, depth 3),
    and dos_comparison.csv (eigenvalue histogram against the free density
    over [1, 4]).
    """
    os.makedirs(outdir, exist_ok=True)
    spec = canonical_potential()
    V = spec.build()
    ab = tuple(np.linspace(-2.0, 2.0, 9))
    xi_list = (0.5, 1.0, 2.0)

    tasks = [("kernel", (V, L, xi, ab, ab, steps)) for L in l_grid for xi in xi_list]
    results = _execute(tasks, workers)
    kernel_rows = []
    i = 0
    for L in l_grid:
        for xi in xi_list:
            chunk = results[i]
            i += 1
            errs = [row[8] for row in chunk if row[9] == "ok"]
            status = "ok" if len(errs) == len(chunk) else "error: some pairs failed"
            kernel_rows.append([L, xi, max(errs) if errs else "", status])
    write_csv(
        os.path.join(outdir, "kernel_convergence.csv"),
        ["L", "xi", "sup_abs_error", "status"],
        kernel_rows,
    )

    tasks = [("clock", (V, L, 1.0, 3, steps)) for L in l_grid]
    results = _execute(tasks, workers)
    clock_rows = []
    for L, chunk in zip(l_grid, results):
        devs = [row[5] for row in chunk if row[6] == "ok"]
        status = "ok" if devs and len(devs) == len(chunk) else "error: window failed"
        clock_rows.append([L, 1.0, 3, max(devs) if devs else "", status])
    write_csv(
        os.path.join(outdir, "clock_convergence.csv"),
        ["L", "xi_star", "depth", "max_deviation", "status"],
        clock_rows,
    )

    tasks = [("dos", (V, L, (1.0, 4.0), 12, steps)) for L in l_grid]
    results = _execute(tasks, workers)
    dos_rows = [row for chunk in results for row in chunk]
    write_csv(os.path.join(outdir, "dos_comparison.csv"), HEADERS["dos"], dos_rows)

    bad = [r for r in kernel_rows + clock_rows + dos_rows if str(r[-1]).startswith("error")]
    return 1 if bad else 0


# -- argument parsing ----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    p.add_argument("--steps-per-bump", type=int, dest="steps_per_bump")
    p.add_argument(
        "--seedless", action="store_true",
        help="reserved; every computation is already deterministic",
    )


def _grid(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pearsonlab",
        description="Sparse bump potentials on the half-line: kernel ratios, "
        "eigenvalue statistics, and bound probes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", help="kernel ratio sweep against the sinc target")
    _add_common(p)
    p.add_argument("--xi-grid", type=_grid, dest="xi_grid")
    p.add_argument("--l-grid", type=_grid, dest="l_grid")
    p.add_argument("--a-grid", type=_grid, dest="a_grid")
    p.add_argument("--b-grid", type=_grid, dest="b_grid")

    p = sub.add_parser("clock", help="eigenvalue spacing statistics around xi_star")
    _add_common(p)
    p.add_argument("--l-grid", type=_grid, dest="l_grid")
    p.add_argument("--xi-star", type=float, dest="xi_star")
    p.add_argument("--depth", type=int)

    p = sub.add_parser("dos", help="density of states histogram against the free law")
    _add_common(p)
    p.add_argument("--l-grid", type=_grid, dest="l_grid")
    p.add_argument("--interval", type=_grid)
    p.add_argument("--bins", type=int)

    p = sub.add_parser("verify", help="run quantitative bound probes")
    _add_common(p)
    p.add_argument("--probe", choices=(
        "one_bump", "transfer_bound", "truncation_step", "kappa_schedule", "suite",
    ))
    p.add_argument("--probe-lambda", type=float, dest="probe_lambda")
    p.add_argument("--probe-xi", type=float, dest="probe_xi")
    p.add_argument("--probe-m", type=int, dest="probe_m")
    p.add_argument("--probe-ell", type=int, dest="probe_ell")
    p.add_argument("--probe-count", type=int, dest="probe_count")

    p = sub.add_parser("hatn", help="search the sinc-closeness onset length")
    _add_common(p)
    p.add_argument("--ell", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--window", type=_grid, dest="interval")
    p.add_argument("--ab-bound", type=float, dest="ab_bound")

    p = sub.add_parser("reproduce", help="run the built-in desk-scale pipeline")
    p.add_argument("--outdir", default="reproduce_out")
    p.add_argument("--workers", type=int)
    p.add_argument("--l-grid", type=_grid, dest="l_grid")
    p.add_argument("--steps-per-bump", type=int, dest="steps_per_bump")
    p.add_argument("--seedless", action="store_true", help="reserved; runs are deterministic")
    return parser


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "reproduce":
            return reproduce_headline(
                args.outdir,
                workers=args.workers or _default_workers(),
                l_grid=args.l_grid or (100.0, 1000.0, 10000.0),
                steps=args.steps_per_bump,
            )
        mapping = _parse_kv_file(args.config) if args.config else {}
        cfg = config_from_mapping(args.command, mapping)
        overrides = {
            key: value
            for key, value in vars(args).items()
            if key not in ("command", "config", "seedless") and value is not None
        }
        for key, value in overrides.items():
            setattr(cfg, key, value)
        if args.workers is None and "workers" not in mapping:
            cfg.workers = _default_workers()
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HatNSearchError as exc:
        print(f"search failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
