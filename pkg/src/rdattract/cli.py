"""Command-line entry point: certify, verify, sweep, probe.

Exit status: 0 granted / all checks pass, 2 denied / some check failed,
1 error (bad config, solver failure, I/O).
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import itertools
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from .averages import estimate_averages
from .certificate import Certificate, assemble_certificate
from .config import ConfigError, RunConfig, canonical_hash, parse_config, set_path
from .grid import Field, write_field_csv
from .lyapunov import stability_probe, verify_differential_inequality, verify_envelope
from .solver import SimulationAborted, SolveControls, simulate, simulate_pair

log = logging.getLogger("rdattract")

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
VERSION = "0.1.0"


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage


# ---------------------------------------------------------------- serialization

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def write_json(path: Path, obj) -> None:
    # json writes floats with repr, the shortest string that round-trips exactly
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(out: Path, command: str, cfg: RunConfig, extra: dict) -> dict:
    outputs = {}
    for p in sorted(out.rglob("*")):
        rel = p.relative_to(out).as_posix()
        if p.is_file() and rel not in ("manifest.json", "timings.json") and not rel.startswith("points/"):
            outputs[rel] = _sha256(p)
    hashed = {k: v for k, v in cfg.raw.items() if k != "output"}
    hashed["seed"] = cfg.seed
    man = {
        "command": command,
        "config_sha256": canonical_hash(hashed),
        "spec_sha256": cfg.spec_sha256(),
        "grid": cfg.grid.descriptor(),
        "controls": cfg.solver.to_dict(),
        "seed": cfg.seed,
        "versions": {
            "rdattract": VERSION,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "outputs": outputs,
    }
    man.update(extra)
    write_json(out / "manifest.json", man)
    return man


# ---------------------------------------------------------------- pipeline stages

def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - relabelled and re-raised
        raise StageError(name, exc) from exc


def build_certificate(cfg: RunConfig) -> Certificate:
    a = cfg.averages
    avg = _stage("averages", estimate_averages, cfg.spec, cfg.grid, a.horizon, a.min_window, a.dt,
                 method=a.method)
    c = cfg.certificate
    return _stage(
        "certificate", assemble_certificate, cfg.spec, cfg.grid, avg, c.epsilon,
        sampling=c.sampling, delta_override=c.delta_override,
        epsilon_start=c.epsilon_start, epsilon_min=c.epsilon_min,
    )


def initial_pair(cfg: RunConfig, delta_lower: float, delta_upper: float):
    """Initial fields (u0, v0) from the verify.init policy."""
    v = cfg.verify
    shape = (cfg.spec.n_species, cfg.grid.n_nodes)
    if v.init_kind == "constant":
        lev = np.asarray(v.levels, dtype=float)
        if lev.shape != (cfg.spec.n_species,) or np.any(lev <= 0):
            raise ConfigError("verify.init.levels", f"need {cfg.spec.n_species} positive levels")
        u0 = np.broadcast_to(lev[:, None], shape).copy()
    else:
        rng = np.random.default_rng(cfg.seed)
        u0 = rng.uniform(delta_lower, delta_upper, size=shape)
    if v.init_kind == "equal":
        v0 = u0.copy()
    else:
        v0 = v.v_scale * u0
        if v.clip:
            v0 = np.clip(v0, delta_lower, delta_upper)
    return Field(cfg.grid, u0), Field(cfg.grid, v0)


def _species(n):
    return [f"u{i + 1}" for i in range(n)]


def run_certify(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    t0 = time.perf_counter()
    cert = build_certificate(cfg)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "certificate.json", cert.to_dict())
    _manifest(out, "certify", cfg, {})
    write_json(out / "timings.json", {"total_s": time.perf_counter() - t0})
    return (EXIT_OK if cert.granted else EXIT_FAIL), cert.to_dict()


def run_verify(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    timings = {}
    t0 = time.perf_counter()
    cert = build_certificate(cfg)
    timings["certificate_s"] = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "certificate.json", cert.to_dict())
    v = cfg.verify

    if not cert.granted:
        verdict = {
            "passed": False,
            "stage": "certificate",
            "reason": f"certificate denied at {cert.first_failure}; envelope constants undefined",
        }
        write_json(out / "verdict.json", verdict)
        _manifest(out, "verify", cfg, {"entry_time": None, "entry_index": None})
        write_json(out / "timings.json", timings)
        return EXIT_FAIL, verdict

    u0, v0 = _stage("initial_data", initial_pair, cfg, cert.delta_lower, cert.delta_upper)
    t1 = time.perf_counter()
    try:
        pair = simulate_pair(cfg.spec, cfg.grid, u0, v0, cfg.solver)
    except SimulationAborted as exc:
        raise StageError("simulate", exc) from exc
    except Exception as exc:  # noqa: BLE001
        raise StageError("simulate", exc) from exc
    timings["simulate_s"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    env = _stage("envelope", verify_envelope, pair, cert, v.tol_rel, t_window=v.window,
                 tol_entry=v.tol_entry)
    ineq = _stage("inequality", verify_differential_inequality, pair, cert, v.tol_model,
                  t_window=v.window, tol_entry=v.tol_entry)
    timings["verify_s"] = time.perf_counter() - t2

    rate_ok = env.degenerate or (env.measured_rate is not None and env.measured_rate >= cert.gamma)
    results = {
        "envelope": env.theta_pass,
        "supnorm": env.supnorm_pass,
        "inequality": ineq.checked > 0 and ineq.fraction_ok >= v.min_fraction,
        "chain": ineq.chain_ok,
        "sandwich": env.sandwich_ok,
        "measured_rate": bool(rate_ok),
    }
    checks = {name: bool(results[name]) for name in v.checks}
    passed = all(checks.values())
    verdict = {
        "passed": passed,
        "checks": checks,
        "degenerate": env.degenerate,
        "failure_kind": env.failure_kind,
        "gamma": cert.gamma,
        "Z": cert.Z,
        "measured_rate": env.measured_rate,
        "tolerances": {
            "tol_rel": v.tol_rel,
            "tol_entry": v.tol_entry,
            "tol_model": "default: 10*dt_snap*max|rhs| + 1e-6" if v.tol_model is None else v.tol_model,
            "min_fraction": v.min_fraction,
        },
        "envelope": env.to_dict(),
        "inequality": ineq.to_dict(),
    }
    write_json(out / "verdict.json", verdict)

    n = cfg.spec.n_species
    s = env.series
    if s:
        rows = zip(s["t"], s["theta"], *s["theta_i"].T, s["envelope"], s["supnorm"], s["supnorm_envelope"])
        write_csv(out / "series" / "envelope.csv",
                  ["t", "theta"] + [f"theta_{i + 1}" for i in range(n)]
                  + ["envelope", "supnorm_diff", "supnorm_envelope"], rows)
    if ineq.times is not None and len(ineq.times):
        rows = zip(ineq.times, *ineq.residuals.T, ineq.tolerances)
        write_csv(out / "series" / "inequality.csv",
                  ["t"] + [f"residual_{i + 1}" for i in range(n)] + ["tol"], rows)
    diffs = pair.abs_diff_sup()
    logr = pair.log_ratio_sup()
    write_csv(out / "series" / "pair.csv",
              ["t"] + [f"theta_{i + 1}" for i in range(n)] + [f"supdiff_{i + 1}" for i in range(n)],
              zip(pair.times, *logr.T, *diffs.T))
    names = _species(n)
    for k in range(0, len(pair), v.fields_every):
        write_field_csv(out / "fields" / f"u_{k:06d}.csv", cfg.grid, pair.u[k], names)
        write_field_csv(out / "fields" / f"v_{k:06d}.csv", cfg.grid, pair.v[k], names)

    extra = {
        "entry_index": env.entry_index,
        "entry_time": env.entry_time,
        "tol_entry": v.tol_entry,
        "snapshots": len(pair),
    }
    _manifest(out, "verify", cfg, extra)
    timings["total_s"] = time.perf_counter() - t0
    write_json(out / "timings.json", timings)
    return (EXIT_OK if passed else EXIT_FAIL), verdict


def run_probe(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    t0 = time.perf_counter()
    cert = build_certificate(cfg)
    p = cfg.probe
    if cert.granted:
        dl, du = cert.delta_lower, cert.delta_upper
    else:
        dl, du = cert.permanence.delta_lower, cert.permanence.delta_upper
        if dl is None:
            dl = 0.5 * du
    u0, _ = _stage("initial_data", initial_pair, cfg, dl, du)
    t_base = max(max(p.t2), cfg.solver.dt)
    controls = SolveControls(dt=cfg.solver.dt, t_end=t_base, record_every=1,
                             positivity_floor=cfg.solver.positivity_floor,
                             diffusion=cfg.solver.diffusion)
    base = _stage("simulate", simulate, cfg.spec, cfg.grid, u0, controls)
    rng = np.random.default_rng(cfg.seed)
    reports = []
    out.mkdir(parents=True, exist_ok=True)
    for j, t2 in enumerate(p.t2):
        rep = _stage("probe", stability_probe, cfg.spec, cfg.grid, base, t2, p.r, p.eps_target,
                     p.horizon, rng=rng, record_every=p.record_every,
                     diffusion=cfg.solver.diffusion)
        d = rep.to_dict()
        if cert.granted and rep.max_amplification is not None:
            d["within_Z_bound"] = rep.max_amplification <= cert.Z * (1 + cfg.verify.tol_rel)
        reports.append(d)
        write_csv(out / "series" / f"probe_{j:02d}.csv", ["t", "supnorm_diff"], zip(rep.times, rep.diffs))
    ok = all(r["stays_below"] for r in reports)
    result = {
        "passed": ok,
        "certificate": {"granted": cert.granted, "gamma": cert.gamma, "Z": cert.Z},
        "reports": reports,
    }
    write_json(out / "probe.json", result)
    _manifest(out, "probe", cfg, {})
    write_json(out / "timings.json", {"total_s": time.perf_counter() - t0})
    return (EXIT_OK if ok else EXIT_FAIL), result


# ---------------------------------------------------------------- sweep

def _min(values):
    return None if values is None else float(np.min(values))


def _sweep_point(job):
    index, raw, out, verify = job
    row = {"point": index, "status": "error", "first_failure": None, "ac_margin": None,
           "ac_prime_margin": None, "cond21_margin": None, "slack": None, "gamma": None,
           "Z": None, "envelope": None, "error": None}
    try:
        cfg = parse_config(raw)
        code, rep = run_certify(cfg, out)
        row.update(
            status="granted" if rep["granted"] else "denied",
            first_failure=rep["first_failure"],
            ac_margin=_min(rep["ac"]["margins"]),
            ac_prime_margin=_min(rep["ac_prime"]["margins"]),
            cond21_margin=_min(rep["cond21"]["margins"]) if rep["cond21"] else None,
            slack=rep["slack"], gamma=rep["gamma"], Z=rep["Z"],
        )
        if verify and rep["granted"]:
            vcode, verdict = run_verify(cfg, out)
            row["envelope"] = "pass" if verdict["passed"] else "fail"
    except (ConfigError, StageError, OSError, ValueError) as exc:
        row["error"] = str(exc)
    return row


def sweep_points(cfg: RunConfig):
    """Cartesian product of the sweep axes, as (labels, raw config) pairs."""
    axes = cfg.sweep_axes
    base = {k: v for k, v in cfg.raw.items() if k != "sweep"}
    if not axes:
        return [((), base)]
    pts = []
    for combo in itertools.product(*(ax.values for ax in axes)):
        raw = copy.deepcopy(base)
        for ax, val in zip(axes, combo):
            for path in ax.paths:
                set_path(raw, path, copy.deepcopy(val))
        pts.append((combo, raw))
    return pts


def run_sweep(cfg: RunConfig, out: Path, workers: int = 1) -> tuple[int, list]:
    pts = sweep_points(cfg)
    jobs = []
    for i, (_, raw) in enumerate(pts):
        jobs.append((i, raw, out / "points" / f"p{i:04d}", cfg.sweep_verify))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    labels = [ax.paths[0] for ax in cfg.sweep_axes]
    keys = ["status", "first_failure", "ac_margin", "ac_prime_margin", "cond21_margin",
            "slack", "gamma", "Z", "envelope", "error"]
    table = []
    for (combo, _), row in zip(pts, rows):
        table.append([row["point"]] + [json.dumps(v) for v in combo] + [row[k] for k in keys])
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "summary.csv", ["point"] + labels + keys, table)
    _manifest(out, "sweep", cfg, {"points": len(rows)})
    code = EXIT_OK if all(r["status"] == "granted" for r in rows) else EXIT_FAIL
    if any(r["status"] == "error" for r in rows):
        code = EXIT_FAIL
    return code, rows


# ---------------------------------------------------------------- argparse

COMMANDS = ("certify", "verify", "sweep", "probe")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rdattract", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides config 'output')")
    ap.add_argument("--seed", type=int, metavar="N", help="seed for random initial data (overrides config)")
    ap.add_argument("--workers", type=int, default=1, metavar="K", help="worker processes for sweep")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_run_config(path, seed=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if seed is not None and isinstance(raw, dict):
        raw["seed"] = seed
    return parse_config(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        cfg = load_run_config(args.config, args.seed)
        out = Path(args.out or cfg.output)
        if args.command == "certify":
            code, rep = run_certify(cfg, out)
            msg = "granted" if rep["granted"] else f"denied ({rep['first_failure']})"
            print(f"certificate {msg}; gamma={rep['gamma']} Z={rep['Z']}")
        elif args.command == "verify":
            code, rep = run_verify(cfg, out)
            print("verify " + ("PASS" if rep["passed"] else "FAIL") + f" ({out / 'verdict.json'})")
        elif args.command == "sweep":
            code, rows = run_sweep(cfg, out, args.workers)
            print(f"sweep: {len(rows)} points -> {out / 'summary.csv'}")
        else:
            code, rep = run_probe(cfg, out)
            print("probe " + ("PASS" if rep["passed"] else "FAIL") + f" ({out / 'probe.json'})")
        return code
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
