"""Acceptance suite: one check per criterion, each printed as a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import functools
import json
import time

import numpy as np
from scipy.integrate import solve_ivp

from rdattract.averages import estimate_averages
from rdattract.certificate import assemble_certificate, dominance_matrix, find_weights
from rdattract.cli import main
from rdattract.grid import Field, build_grid
from rdattract.lyapunov import theta, verify_differential_inequality, verify_envelope
from rdattract.model import SpatialProfile, SystemSpec
from rdattract.solver import SolveControls, simulate, simulate_pair

RESULTS = []

A = (3.0, 2.0)
B = ((2.0, 0.1), (0.1, 2.0))


def report(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {name} -- {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def canonical_certificate(grid):
    spec = SystemSpec.lotka_volterra(A, B)
    return spec, assemble_certificate(spec, grid, estimate_averages(spec, grid, 200.0, 50.0))


def test_criterion_1_certificate_arithmetic():
    g = build_grid(1, [1.0], [101])
    t0 = time.perf_counter()
    _, cert = canonical_certificate(g)
    elapsed = time.perf_counter() - t0
    # oracle: scalar formulas evaluated by hand
    du = max(A[0] / B[0][0], A[1] / B[1][1])
    dl = min((A[0] - B[0][1] * A[1] / B[1][1]) / B[0][0], (A[1] - B[1][0] * A[0] / B[0][0]) / B[1][1])
    alpha = (0.5, 0.5)
    eps = min(alpha[0] * dl * B[0][0] - alpha[1] * du * B[1][0], alpha[1] * dl * B[1][1] - alpha[0] * du * B[0][1])
    gamma = eps / max(alpha)
    Z = du * max(alpha) / (dl * min(alpha))
    expect = {"delta_upper": 1.5, "delta_lower": 0.925, "alpha_1": 0.5, "alpha_2": 0.5,
              "eps": 0.85, "gamma": 1.7, "Z": 1.6216216216216215}
    oracle = {"delta_upper": du, "delta_lower": dl, "alpha_1": alpha[0], "alpha_2": alpha[1],
              "eps": eps, "gamma": gamma, "Z": Z}
    got = {"delta_upper": cert.delta_upper, "delta_lower": cert.delta_lower, "alpha_1": cert.alpha[0],
           "alpha_2": cert.alpha[1], "eps": cert.slack, "gamma": cert.gamma, "Z": cert.Z}
    err = max(max(abs(got[k] - oracle[k]), abs(got[k] - expect[k])) for k in got)
    ok = cert.granted and err <= 1e-9 and elapsed < 1.0
    report(1, "certificate arithmetic", ok, f"max abs error {err:.2e}, runtime {elapsed:.3f}s")


@functools.lru_cache(maxsize=None)
def envelope_run():
    g = build_grid(1, [1.0], [101])
    spec, cert = canonical_certificate(g)
    rng = np.random.default_rng(2024)
    u0 = np.clip(rng.uniform(0.5, 2.0, size=(2, 101)), cert.delta_lower, cert.delta_upper)
    v0 = 1.2 * u0
    t0 = time.perf_counter()
    pair = simulate_pair(spec, g, Field(g, u0), Field(g, v0), SolveControls(1e-3, 8.5, 10))
    env = verify_envelope(pair, cert, 1e-2, t_window=8.0)
    ineq = verify_differential_inequality(pair, cert, t_window=8.0)
    return cert, env, ineq, time.perf_counter() - t0


def test_criterion_2_envelope_reproduction():
    cert, env, _, elapsed = envelope_run()
    ok = (env.theta_pass and env.supnorm_pass and env.sandwich_ok and not env.degenerate
          and env.measured_rate >= cert.gamma and elapsed < 60.0)
    report(2, "envelope reproduction", ok,
           f"T~={env.entry_time}, max violation {env.max_violation:.3g}, measured rate "
           f"{env.measured_rate:.4f} >= gamma {cert.gamma:.4f}, runtime {elapsed:.1f}s")


def test_criterion_3_differential_inequality():
    _, _, ineq, _ = envelope_run()
    ok = ineq.fraction_ok >= 0.99 and ineq.chain_max <= 1e-12
    report(3, "differential inequality", ok,
           f"{ineq.fraction_ok:.4f} of {ineq.checked} snapshots within tolerance, chain max {ineq.chain_max:.2e}")


def test_criterion_4_negative_control():
    g = build_grid(1, [1.0], [101])
    spec = SystemSpec.lotka_volterra(A, ((2.0, 1.0), (1.0, 2.0)))
    cert = assemble_certificate(spec, g, estimate_averages(spec, g))
    margin_err = np.abs(cert.cond21.margins - (-1.0)).max()
    ok = (cert.ac.holds and not cert.granted and cert.first_failure == "cond21"
          and not cert.weights.feasible and margin_err <= 1e-9)
    report(4, "negative control", ok,
           f"AC margins {cert.ac.margins.tolist()}, cond21 margins {cert.cond21.margins.tolist()}, "
           f"weights feasible={cert.weights.feasible}")


def test_criterion_5_solver_fidelity():
    details = []
    # ODE reduction
    spec = SystemSpec.lotka_volterra(A, B, at=[0.5, -0.3], omega=[2.0, 2.0], phi=[0.0, 1.0],
                                     bt=[[0.3, 0.05], [0.0, 0.2]], omega_b=[[2.0, 2.0], [2.0, 2.0]])
    g = build_grid(1, [1.0], [5])
    u0 = np.array([0.3, 1.7])
    tr = simulate(spec, g, Field.constant(g, u0), SolveControls(1e-3, 20.0, 100))
    ref = solve_ivp(lambda t, u: spec.rates(t, np.zeros((1, 1)), u[:, None])[:, 0] * u,
                    (0, 20), u0, method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    ode_err = float((np.abs(tr.values[:, :, 0] - ref.sol(tr.times).T) / ref.sol(tr.times).T).max())
    details.append(f"ODE rel err {ode_err:.1e}")
    # logistic
    logi = SystemSpec.lotka_volterra([1.0], [[1.0]])
    tr = simulate(logi, g, Field.constant(g, [0.1]), SolveControls(1e-2, 10.0, 10))
    exact = 1 / (1 + 9 * np.exp(-tr.times))
    log_err = float(np.abs(tr.values[:, 0, :] - exact[:, None]).max())
    details.append(f"logistic err {log_err:.1e}")
    # Laplacian order on cos(pi x)
    errs, hs = [], []
    for n in (11, 21, 41, 81, 161):
        gg = build_grid(1, [1.0], [n])
        x = gg.points[0]
        errs.append(np.abs(gg.laplacian @ np.cos(np.pi * x) + np.pi**2 * np.cos(np.pi * x)).max())
        hs.append(gg.spacing[0])
    order = float(np.min(np.diff(np.log(errs)) / np.diff(np.log(hs))))
    details.append(f"Laplacian order {order:.3f}")
    # discrete divergence theorem
    worst = 0.0
    rng = np.random.default_rng(0)
    for dim, nodes in ((1, [37]), (2, [13, 17])):
        gg = build_grid(dim, [1.0, 2.0][:dim], nodes)
        for _ in range(20):
            f = rng.normal(size=gg.n_nodes)
            worst = max(worst, abs(gg.weights @ (gg.laplacian @ f)) / np.abs(f).max())
    details.append(f"divergence sum/||f|| {worst:.1e}")
    ok = ode_err <= 1e-5 and log_err <= 1e-6 and order >= 1.9 and worst <= 1e-12
    report(5, "solver fidelity", ok, ", ".join(details))


def _grid_search_feasible(K, res=1e-3):
    k = int(round(1 / res))
    if K.shape[0] == 2:
        a = np.arange(k + 1) / k
        W = np.stack([a, 1 - a])
    else:
        i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
        m = i + j <= k
        W = np.stack([i[m], j[m], k - i[m] - j[m]]) / k
    return bool((K @ W).min(axis=0).max() > 0)


def test_criterion_6_lp_vs_grid_search():
    rng = np.random.default_rng(6)
    agree = feasible = 0
    for trial in range(100):
        n = 2 if trial < 50 else 3
        bl = rng.uniform(0.5, 3.0, size=n)
        bu = rng.uniform(0.0, 1.0, size=(n, n)) * rng.uniform(0.1, 1.5)
        np.fill_diagonal(bu, bl + rng.uniform(0.0, 0.5, size=n))
        dl = rng.uniform(0.2, 1.0)
        du = dl * rng.uniform(1.0, 2.5)
        lp = find_weights(dl, du, (bl, bu)).feasible
        gs = _grid_search_feasible(dominance_matrix(dl, du, bl, bu))
        agree += lp == gs
        feasible += lp
    report(6, "LP vs grid search", agree == 100, f"{agree}/100 agree ({feasible} feasible)")


def test_criterion_7_norm_sandwich_and_pseudometric():
    rng = np.random.default_rng(7)
    g = build_grid(1, [1.0], [17])
    dl, du = 0.925, 1.5
    violations = 0
    worst = 0.0
    for _ in range(1000):
        alpha = rng.dirichlet([1.0, 1.0]) * 0.98 + 0.01
        u, v, w = (Field(g, rng.uniform(dl, du, size=(2, 17))) for _ in range(3))
        th, comps = theta(u, v, alpha)
        sup = np.abs(u.values - v.values).max(axis=1).sum()
        gaps = [
            theta(u, u, alpha)[0],
            abs(th - theta(v, u, alpha)[0]),
            theta(u, w, alpha)[0] - th - theta(v, w, alpha)[0],
            alpha.min() * comps.sum() - th,
            th - alpha.max() * comps.sum(),
            alpha.min() / du * sup - th,
            th - alpha.max() / dl * sup,
        ]
        # per node: |u - v| / du <= |ln u - ln v| <= |u - v| / dl
        d = np.abs(u.values - v.values)
        lr = np.abs(np.log(u.values) - np.log(v.values))
        gaps += [float((d / du - lr).max()), float((lr - d / dl).max())]
        m = max(gaps)
        worst = max(worst, m)
        violations += m > 1e-12
    report(7, "norm sandwich and pseudometric", violations == 0,
           f"{violations} violations in 1000 cases, worst gap {worst:.1e}")


def test_criterion_8_averages():
    g = build_grid(1, [1.0], [11])
    spec = SystemSpec.lotka_volterra([3.0], [[1.0]], at=[1.0], omega=[1.0])
    errs = []
    ok = True
    for W in (25.0, 50.0, 100.0):
        est = estimate_averages(spec, g, 4 * W, W, 1e-2, method="finite_horizon")
        err = max(abs(est.m[0] - 3.0), abs(est.M[0] - 3.0))
        errs.append(f"W={W:g}: {err:.4f} <= {2 / W:.4f}")
        ok &= err <= 2.0 / W and bool(np.all(est.m <= est.M))
    periodic = estimate_averages(spec, g)
    ok &= abs(periodic.m[0] - 3.0) <= 1e-12
    specs = [
        SystemSpec.lotka_volterra(A, B, at=[0.5, 1.0], omega=[1.0, 1.0], ax=[0.3, -0.2],
                                  profile=SpatialProfile("cosine", (1.0,))),
        SystemSpec.lotka_volterra([1.0], [[1.0]], at=[0.9], omega=[0.7], bt=[[0.2]], omega_b=[[np.sqrt(3)]]),
        SystemSpec.lotka_volterra(A, B),
    ]
    for s in specs:
        for method in ("auto", "finite_horizon"):
            e = estimate_averages(s, g, 120.0, 30.0, 0.05, method=method)
            ok &= bool(np.all(e.m <= e.M))
    report(8, "averages", ok, "; ".join(errs) + "; m <= M on all specs")


def test_criterion_9_reproducible_manifest(tmp_path):
    cfg = {
        "system": {"a0": list(A), "b0": [list(r) for r in B]},
        "grid": {"dim": 1, "extents": [1.0], "nodes": [51]},
        "solver": {"dt": 0.002, "t_end": 4.0, "record_every": 10},
        "verify": {"window": 4.0},
        "seed": 99,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    codes = [main(["verify", "--config", str(path), "--out", str(tmp_path / f"run{i}")]) for i in (1, 2)]
    m1 = (tmp_path / "run1" / "manifest.json").read_bytes()
    m2 = (tmp_path / "run2" / "manifest.json").read_bytes()
    report(9, "reproducible manifest", codes == [0, 0] and m1 == m2,
           f"exit codes {codes}, manifests identical={m1 == m2}")


if __name__ == "__main__":
    import pathlib
    import sys
    import tempfile

    failed = 0
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_criterion_"):
            continue
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(pathlib.Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
