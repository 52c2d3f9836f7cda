"""Compare the compiled and numpy kernel backends.

Times the three per-step kernels in isolation and whole 1-D episodes.
Run from the repository root::

    python3 benchmarks/bench_backends.py [--repeat 5] [--episodes 20]
"""
import argparse
import timeit

import numpy as np

from rgpm import backend
from rgpm.constraints import InequalityConstraint
from rgpm.kernel import normalize
from rgpm.rgp import init_model
from rgpm.sim import NAMED_VARIANTS, cubic_scenario, run_episode


def kernel_cases(kernels, model, H, x):
    cfg = model.cfg
    s2 = cfg.sigma_k**2
    _, J = kernels.gain_row(x, model.grid.vertices, model.K_I, s2, cfg.length_scale)
    act = np.empty(H.shape[0], dtype=np.int64)

    def gain():
        kernels.gain_row(x, model.grid.vertices, model.K_I, s2, cfg.length_scale)

    def update():
        kernels.measurement_update(model.mu_g.copy(), model.C_g.copy(), model.K, J, s2, 1.0, 1e-2)

    def constrain():
        kernels.constraint_pass(model.mu_g.copy(), model.C_g.copy(), H, -1.0, 0.0, 0.0, 0.0,
                                H.shape[0], 1e-8, act)

    return {"gain_row": gain, "measurement_update": update, "constraint_pass": constrain}


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--episodes", type=int, default=20)
    args = ap.parse_args()

    names = backend.available()
    if "compiled" not in names:
        print("compiled extension not built; only the numpy fallback is available")

    sc = cubic_scenario()
    model = init_model(sc.kernel)
    rng = np.random.default_rng(0)
    for z in rng.uniform(-1, 1, 5):
        model.update(normalize([z], sc.kernel), float(np.cos(5 * z)), 1e-2)
    H = InequalityConstraint.monotonicity(model, 0, sign=-1).H
    x = normalize([0.123], sc.kernel)

    results = {}
    for which in names:
        with backend.using(which):
            row = {k: best_of(fn, args.repeat, 2000)
                   for k, fn in kernel_cases(backend.kernels, model, H, x).items()}
            run_episode(NAMED_VARIANTS["S1"], sc, 0)  # warm the per-scenario cache
            t = timeit.repeat(lambda: [run_episode(NAMED_VARIANTS["S1"], sc, s) for s in range(args.episodes)],
                              repeat=args.repeat, number=1)
            row["S1 episode (1000 steps)"] = min(t) / args.episodes
            results[which] = row

    header = f"{'operation':<26}" + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(f"P = {model.n_basis} basis points, single thread")
    print(header)
    for op in results[names[0]]:
        line = f"{op:<26}" + "".join(f"{results[n][op] * 1e6:>11.1f} us" for n in names)
        if len(names) == 2:
            line += f"{results['python'][op] / results['compiled'][op]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
