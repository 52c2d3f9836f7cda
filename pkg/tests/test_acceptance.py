"""End-to-end acceptance checks for the 1-D cubic study and the 2-D demo.

Each test records one PASS/FAIL line, collected in the pytest terminal
summary under "acceptance criteria".  The 500-run ensembles are computed
once per session.
"""
import json
import time

import numpy as np
import pytest

from rgpm.cli import main
from rgpm.constraints import (InequalityConstraint, apply_constraints, batch_constraint_update,
                              build_monotonicity_matrix)
from rgpm.kernel import KernelConfig, normalize
from rgpm.rgp import init_model
from rgpm.sim import NAMED_VARIANTS, cubic_scenario, eval_inputs, run_ensemble, run_episode
from rgpm.snapshot import load_snapshot, save_snapshot

pytestmark = pytest.mark.slow

N_RUNS = 500
VARIANTS = ["S0", "S1", "S2", "S3", "S4", "S5"]


@pytest.fixture(scope="session")
def study():
    sc = cubic_scenario(n_runs=N_RUNS)
    t0 = time.perf_counter()
    res = {v: run_ensemble(NAMED_VARIANTS[v], sc).mean for v in VARIANTS}
    return res, time.perf_counter() - t0


def at(stats, k):
    return stats.checkpoints.tolist().index(k)


def test_01_early_learning_advantage(study, criterion):
    res, elapsed = study
    ks = [k for k in res["S0"].checkpoints if k <= 50]
    worst = max(res[v].rmse[at(res[v], k)] / res["S0"].rmse[at(res["S0"], k)]
                for v in VARIANTS[1:] for k in ks)
    ok = worst < 1.0 and elapsed < 300
    criterion(1, "RGPm variants beat RGP for k<=50", ok,
              f"max RMSE ratio vs S0 = {worst:.4f}; six 500-run ensembles in {elapsed:.0f} s")


def test_02_convergence(study, criterion):
    res, _ = study
    final = np.array([res[v].rmse[-1] for v in VARIANTS])
    spread = (final.max() - final.min()) / final.mean()
    criterion(2, "final RMSE spread at k=1000", spread < 0.10,
              f"(max-min)/mean = {spread:.4f}; " + ", ".join(f"{v}={r:.4f}" for v, r in zip(VARIANTS, final)))


def test_03_budget_ordering(study, criterion):
    res, _ = study
    checks = []
    for k in (5, 10):
        r = {v: res[v].rmse[at(res[v], k)] for v in ("S1", "S2", "S4")}
        checks.append(r["S1"] <= r["S4"] * 1.02 and r["S4"] <= r["S2"] * 1.02)
    detail = "; ".join(
        f"k={k}: S1={res['S1'].rmse[at(res['S1'], k)]:.4f} S4={res['S4'].rmse[at(res['S4'], k)]:.4f} "
        f"S2={res['S2'].rmse[at(res['S2'], k)]:.4f}" for k in (5, 10))
    criterion(3, "RMSE(S1) <= RMSE(S4) <= RMSE(S2) at k=5,10", all(checks), detail)


def test_04_cpmu_plateau(study, criterion):
    res, _ = study
    growth = {v: res[v].cpmu[at(res[v], 1000)] / res[v].cpmu[at(res[v], 500)] - 1 for v in VARIANTS[1:]}
    ok = all(growth[v] < 0.05 for v in ("S3", "S5")) and all(growth[v] > 0.20 for v in ("S1", "S2", "S4"))
    criterion(4, "CPMU growth 500->1000 (S3,S5 < 5%; S1,S2,S4 > 20%)", ok,
              ", ".join(f"{v}={g * 100:+.1f}%" for v, g in growth.items()))


def test_05_heuristic_benefit(study, criterion):
    res, _ = study
    ks = [k for k in res["S0"].checkpoints if k <= 100]
    d32 = max(res["S3"].rmse[at(res["S3"], k)] - res["S2"].rmse[at(res["S2"], k)] for k in ks)
    d54 = max(res["S5"].rmse[at(res["S5"], k)] - res["S4"].rmse[at(res["S4"], k)] for k in ks)
    criterion(5, "RMSE(S3) < RMSE(S2) and RMSE(S5) < RMSE(S4) for k<=100", d32 < 0 and d54 < 0,
              f"max S3-S2 = {d32:.2e}, max S5-S4 = {d54:.2e}")


def test_06_covariance_reset_identity(criterion):
    sc = cubic_scenario()
    worst = 0.0
    for seed in range(100):
        ref = []
        run_episode(NAMED_VARIANTS["S0"], sc, seed, observer=lambda k, m, r: ref.append(m.C_g.copy()))

        def compare(k, m, r):
            nonlocal worst
            worst = max(worst, float(np.abs(m.C_g - ref[k - 1]).max()))

        run_episode(NAMED_VARIANTS["S5"], sc, seed, observer=compare)
    criterion(6, "S0 and S5 covariance trajectories, 100 seeds", worst <= 1e-12,
              f"max entrywise difference = {worst:.1e}")


def _random_1d_model(rng):
    cfg = cubic_scenario().kernel
    m = init_model(cfg)
    coef = rng.normal(0, 2, 3)
    for _ in range(int(rng.integers(3, 15))):
        z = rng.uniform(-1, 1)
        y = coef[0] * np.sin(3 * z) + coef[1] * z + coef[2] + 0.1 * rng.standard_normal()
        m.update(normalize([z], cfg), y, 1e-2)
    return m


def test_07_sequential_batch_equivalence(criterion):
    rng = np.random.default_rng(2024)
    err_single, err_multi = 0.0, 0.0
    for n_active, slot in ((1, "single"), (3, "multi")):
        for _ in range(50):
            m = _random_1d_model(rng)
            H = build_monotonicity_matrix(m.grid, m.cfg, m.K_I, 0)
            t = np.sort(H @ m.mu_g)
            bound = 0.5 * (t[n_active - 1] + t[n_active])
            c = InequalityConstraint(H=H, sign=-1, bound=bound)
            bmu, _ = batch_constraint_update(m.mu_g, m.C_g, [c])
            rep = apply_constraints(m, [c])
            assert rep.total == n_active
            e = float(np.abs(m.mu_g - bmu).max())
            if slot == "single":
                err_single = max(err_single, e)
            else:
                err_multi = max(err_multi, e)
    criterion(7, "sequential vs batch constrained mean, 50 models each",
              err_single <= 1e-10 and err_multi <= 1e-8,
              f"one active: {err_single:.1e} (tol 1e-10); three active: {err_multi:.1e} (tol 1e-8)")


def test_08_gradient_matrix(criterion):
    rng = np.random.default_rng(99)
    cfgs = {1: cubic_scenario().kernel,
            2: KernelConfig(2.0, 1.5, (5, 5), ((0.0, 1.0), (0.0, 1.0)))}
    worst = 0.0
    h = 1e-5
    for n_x, cfg in cfgs.items():
        lo, hi = np.asarray(cfg.input_bounds).T
        for _ in range(20):
            m = init_model(cfg)
            for _ in range(int(rng.integers(5, 60))):
                z = lo + (hi - lo) * rng.random(n_x)
                m.update(normalize(z, cfg), float(np.sin(2 * z.sum()) + z[0] + 0.1 * rng.standard_normal()), 1e-2)
            X = m.grid.vertices
            for dim in range(n_x):
                exact = build_monotonicity_matrix(m.grid, cfg, m.K_I, dim) @ m.mu_g
                e = np.zeros(n_x)
                e[dim] = h
                fd = (m.predict_mean(X + e) - m.predict_mean(X - e)) / (2 * h) * m.grid.beta[dim]
                worst = max(worst, float(np.abs(fd - exact).max() / np.abs(exact).max()))
    criterion(8, "H mu vs central differences, 20 models per n_X in {1,2}", worst < 1e-5,
              f"max relative error = {worst:.1e}")


def test_09_monotone_reconstruction_after_five_samples(criterion):
    sc = cubic_scenario(steps=5, checkpoints=(5,))
    Xg = normalize(eval_inputs(sc.kernel), sc.kernel)
    frac = {}
    for name in ("S0", "S1"):
        ok = 0
        for seed in range(N_RUNS):
            _, m = run_episode(NAMED_VARIANTS[name], sc, seed, return_model=True)
            ok += bool(np.all(np.diff(m.predict_mean(Xg)) > 0))
        frac[name] = ok / N_RUNS
    gap = frac["S1"] - frac["S0"]
    criterion(9, "strictly increasing mean on 201 points after 5 samples, 500 seeds", gap >= 0.30,
              f"RGPm {frac['S1'] * 100:.1f}% vs RGP {frac['S0'] * 100:.1f}% (gap {gap * 100:.1f} points, need 30)")


def test_10_determinism_and_persistence(tmp_path, criterion):
    from pathlib import Path
    cfg = Path(__file__).resolve().parents[1] / "configs" / "cubic.json"
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["simulate", str(cfg), "--seed", "123", "--out", str(out)]) == 0
    same_csv = all((outs[0] / f"{v}.csv").read_bytes() == (outs[1] / f"{v}.csv").read_bytes()
                   for v in VARIANTS)

    _, model = run_episode(NAMED_VARIANTS["S5"], cubic_scenario(steps=300), 8, return_model=True)
    save_snapshot(model, tmp_path / "snap.json")
    back = load_snapshot(tmp_path / "snap.json")
    X = normalize(eval_inputs(model.cfg), model.cfg)
    exact = (np.array_equal(back.mu_g, model.mu_g) and np.array_equal(back.C_g, model.C_g)
             and back.step == model.step and back.cfg == model.cfg
             and np.array_equal(back.infer(X).cov, model.infer(X).cov))
    criterion(10, "byte-identical CSVs and exact snapshot round trip", same_csv and exact,
              f"six CSVs identical: {same_csv}; snapshot exact: {exact}")
