"""Simulation harness: ensembles of online-learning runs on synthetic functions.

A run draws inputs uniformly over the input box, observes the hidden function
with Gaussian noise, updates an RGP after every sample and (for constrained
variants) applies the monotonicity pseudo-measurement step.  RMSE against the
hidden function and the cumulative number of pseudo-measurement updates
(CPMU) are recorded at fixed checkpoints.
"""
from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .constraints import ConstraintReport, InequalityConstraint, apply_constraints
from .errors import ConfigError
from .kernel import KernelConfig, normalize
from .rgp import RgpModel

__all__ = [
    "CHECKPOINTS",
    "NAMED_VARIANTS",
    "VariantSpec",
    "MonotonicitySpec",
    "ScenarioConfig",
    "RunStatistics",
    "EnsembleResult",
    "Surface2D",
    "hidden_cubic",
    "hidden_plane",
    "HIDDEN_FUNCTIONS",
    "cubic_scenario",
    "plane_scenario",
    "measurement_stream",
    "eval_inputs",
    "rmse_against",
    "build_constraints",
    "run_episode",
    "run_ensemble",
    "run_2d_scenario",
    "monotonicity_satisfied",
]

CHECKPOINTS = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)


def hidden_cubic(zeta):
    zeta = np.asarray(zeta, dtype=float)
    if zeta.ndim == 2:
        zeta = zeta[:, 0]
    return 2.0 * (1.0 + 0.1 * zeta + zeta**3)


def hidden_plane(zeta):
    """``2 + a - 0.5 b + 0.2 a b``: increasing in ``a``, decreasing in ``b`` for ``a < 2.5``."""
    zeta = np.asarray(zeta, dtype=float)
    a, b = zeta[..., 0], zeta[..., 1]
    return 2.0 + a - 0.5 * b + 0.2 * a * b


HIDDEN_FUNCTIONS: dict[str, Callable] = {"cubic": hidden_cubic, "plane2d": hidden_plane}


@dataclass(frozen=True)
class VariantSpec:
    """Constraint settings of one algorithm variant.

    ``max_updates=None`` means unlimited, i.e. one update per grid point.
    """

    name: str
    constrained: bool
    max_updates: int | None = None
    delta_b: float = 0.0
    delta_u: float = 0.0
    activation: str = "nominal"

    def __post_init__(self) -> None:
        if self.activation not in ("nominal", "effective"):
            raise ConfigError(f"variant {self.name}: activation must be 'nominal' or 'effective'")
        if self.max_updates is not None and self.max_updates < 0:
            raise ConfigError(f"variant {self.name}: max_updates must be >= 0")
        if self.delta_b < 0 or self.delta_u < 0:
            raise ConfigError(f"variant {self.name}: delta_b and delta_u must be >= 0")

    def check_named(self) -> None:
        """Reject a variant that borrows an S0-S5 name with different settings."""
        ref = NAMED_VARIANTS.get(self.name)
        if ref is not None and ref != self:
            raise ConfigError(f"variant {self.name} parameters differ from the named table: {ref}")


NAMED_VARIANTS: dict[str, VariantSpec] = {
    "S0": VariantSpec("S0", constrained=False),
    "S1": VariantSpec("S1", constrained=True, max_updates=None),
    "S2": VariantSpec("S2", constrained=True, max_updates=2),
    "S3": VariantSpec("S3", constrained=True, max_updates=2, delta_b=0.1, delta_u=0.1),
    "S4": VariantSpec("S4", constrained=True, max_updates=5),
    "S5": VariantSpec("S5", constrained=True, max_updates=5, delta_b=0.1, delta_u=0.1),
}


@dataclass(frozen=True)
class MonotonicitySpec:
    """Prior knowledge ``sign * (d z / d zeta_dim - bound) < 0``."""

    dim: int
    sign: int
    bound: float
    r_ic: float


@dataclass(frozen=True)
class ScenarioConfig:
    hidden: str
    kernel: KernelConfig
    noise_variance: float
    monotonicity: tuple[MonotonicitySpec, ...]
    steps: int = 1000
    checkpoints: tuple[int, ...] = CHECKPOINTS
    eval_points: int | None = None
    n_runs: int = 500
    seed_base: int = 0
    # fixed raw input value per dimension, None = drawn uniformly
    training_slice: tuple[float | None, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "checkpoints", tuple(int(c) for c in self.checkpoints))
        object.__setattr__(self, "monotonicity", tuple(self.monotonicity))
        if self.hidden not in HIDDEN_FUNCTIONS:
            raise ConfigError(f"unknown hidden function {self.hidden!r}")
        if not self.noise_variance > 0:
            raise ConfigError("noise_variance must be > 0")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        cp = self.checkpoints
        if any(b <= a for a, b in zip(cp, cp[1:])) or (cp and cp[0] < 0):
            raise ConfigError(f"checkpoints must be strictly increasing and >= 0: {cp}")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")
        for m in self.monotonicity:
            if not 0 <= m.dim < self.kernel.dims:
                raise ConfigError(f"monotonicity dim {m.dim} out of range")
            if m.sign not in (-1, 1):
                raise ConfigError(f"monotonicity sign must be -1 or +1, got {m.sign}")
            if not m.r_ic > 0:
                raise ConfigError("r_ic must be > 0")
        if self.training_slice is not None and len(self.training_slice) != self.kernel.dims:
            raise ConfigError("training_slice needs one entry per input dimension")

    @property
    def hidden_fn(self) -> Callable:
        return HIDDEN_FUNCTIONS[self.hidden]

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def cubic_scenario(**overrides) -> ScenarioConfig:
    """The 1-D cubic benchmark: L=3, sigma_k=10, 21 basis points on [-1, 1]."""
    base = dict(
        hidden="cubic",
        kernel=KernelConfig(sigma_k=10.0, length_scale=3.0, points_per_dim=(21,),
                            input_bounds=((-1.0, 1.0),)),
        noise_variance=1e-2,
        monotonicity=(MonotonicitySpec(dim=0, sign=-1, bound=0.0, r_ic=1e-8),),
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def plane_scenario(**overrides) -> ScenarioConfig:
    """2-D monotone surface on a 5x5 grid, trained along the slice ``b = 0.5``."""
    base = dict(
        hidden="plane2d",
        kernel=KernelConfig(sigma_k=2.0, length_scale=1.5, points_per_dim=(5, 5),
                            input_bounds=((0.0, 1.0), (0.0, 1.0))),
        noise_variance=1e-3,
        monotonicity=(MonotonicitySpec(dim=0, sign=-1, bound=0.0, r_ic=1e-8),
                      MonotonicitySpec(dim=1, sign=1, bound=0.0, r_ic=1e-8)),
        steps=200,
        checkpoints=(1, 2, 5, 10, 20, 50, 100, 200),
        n_runs=1,
        training_slice=(None, 0.5),
    )
    base.update(overrides)
    return ScenarioConfig(**base)


@dataclass
class RunStatistics:
    checkpoints: np.ndarray
    rmse: np.ndarray
    cpmu: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunStatistics):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(
            (self.checkpoints, self.rmse, self.cpmu), (other.checkpoints, other.rmse, other.cpmu)))


@dataclass
class EnsembleResult:
    mean: RunStatistics
    runs: list[RunStatistics]
    seeds: list[int]


def measurement_stream(scenario: ScenarioConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw inputs ``(steps, n_X)`` and noisy outputs ``(steps,)`` for one run.

    Depends only on ``(scenario, seed)``, so all variants see the same data.
    Inputs and noise come from two PCG64 streams spawned from
    ``SeedSequence(seed)``; a shorter run sees a prefix of a longer one.
    """
    input_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
    cfg = scenario.kernel
    lo, hi = np.asarray(cfg.input_bounds).T
    zeta = lo + (hi - lo) * np.random.default_rng(input_seq).random((scenario.steps, cfg.dims))
    noise = np.random.default_rng(noise_seq).standard_normal(scenario.steps)
    if scenario.training_slice is not None:
        for i, v in enumerate(scenario.training_slice):
            if v is not None:
                zeta[:, i] = v
    y = scenario.hidden_fn(zeta) + np.sqrt(scenario.noise_variance) * noise
    return zeta, y


def eval_inputs(cfg: KernelConfig, points: int | None = None) -> np.ndarray:
    """Dense raw-input evaluation grid: 201 points in 1-D, 41 per axis otherwise."""
    if points is None:
        points = 201 if cfg.dims == 1 else 41
    axes = [np.linspace(lo, hi, points) for lo, hi in cfg.input_bounds]
    mesh = np.meshgrid(*axes[::-1], indexing="ij")
    return np.stack([m.ravel() for m in mesh[::-1]], axis=1)


def rmse_against(model: RgpModel, hidden_fn: Callable, eval_grid) -> float:
    eval_grid = np.asarray(eval_grid, dtype=float)
    if eval_grid.ndim == 1:
        eval_grid = eval_grid[:, None]
    pred = model.predict_mean(normalize(eval_grid, model.cfg))
    return float(np.sqrt(np.mean((pred - hidden_fn(eval_grid)) ** 2)))


def build_constraints(model: RgpModel, scenario: ScenarioConfig,
                      variant: VariantSpec) -> list[InequalityConstraint]:
    if not variant.constrained:
        return []
    return [
        InequalityConstraint.monotonicity(
            model, dim=m.dim, sign=m.sign, bound=m.bound, r_ic=m.r_ic,
            delta_b=variant.delta_b, delta_u=variant.delta_u,
            max_updates=variant.max_updates, activation=variant.activation,
        )
        for m in sorted(scenario.monotonicity, key=lambda m: m.dim)
    ]


@dataclass
class _Prepared:
    template: RgpModel
    J_eval: np.ndarray
    z_eval: np.ndarray
    constraints: dict = field(default_factory=dict)


@functools.lru_cache(maxsize=16)
def _prepare(scenario: ScenarioConfig) -> _Prepared:
    model = RgpModel.from_config(scenario.kernel)
    grid = eval_inputs(scenario.kernel, scenario.eval_points)
    J_eval = model.gain(normalize(grid, scenario.kernel))
    return _Prepared(model, J_eval, scenario.hidden_fn(grid))


def _constraints_for(prep: _Prepared, scenario: ScenarioConfig, variant: VariantSpec):
    key = (variant.constrained, variant.max_updates, variant.delta_b, variant.delta_u,
           variant.activation)
    if key not in prep.constraints:
        prep.constraints[key] = build_constraints(prep.template, scenario, variant)
    return prep.constraints[key]


Observer = Callable[[int, RgpModel, "ConstraintReport | None"], None]


def run_episode(variant: VariantSpec, scenario: ScenarioConfig, seed: int,
                observer: Observer | None = None, return_model: bool = False):
    """Run one online-learning episode.

    Parameters
    ----------
    variant : VariantSpec
    scenario : ScenarioConfig
    seed : int
        Seeds the measurement stream.
    observer : callable, optional
        Called as ``observer(k, model, report)`` after every step ``k``.
    return_model : bool
        Also return the final model.

    Returns
    -------
    RunStatistics, or (RunStatistics, RgpModel) when ``return_model``.
    """
    prep = _prepare(scenario)
    model = prep.template.copy()
    constraints = _constraints_for(prep, scenario, variant)
    zeta, y = measurement_stream(scenario, seed)
    X = normalize(zeta, scenario.kernel)
    sy2 = scenario.noise_variance
    checkpoints = [c for c in scenario.checkpoints if c <= scenario.steps]
    wanted = set(checkpoints)
    rmse, cpmu = [], []
    total = 0

    def record():
        err = prep.J_eval @ model.mu_g - prep.z_eval
        rmse.append(float(np.sqrt(np.mean(err * err))))
        cpmu.append(total)

    if 0 in wanted:
        record()
    for k in range(1, scenario.steps + 1):
        model.update(X[k - 1], y[k - 1], sy2)
        report = None
        if constraints:
            report = apply_constraints(model, constraints)
            total += report.total
        if observer is not None:
            observer(k, model, report)
        if k in wanted:
            record()
    stats = RunStatistics(np.asarray(checkpoints, dtype=int), np.asarray(rmse), np.asarray(cpmu, dtype=float))
    return (stats, model) if return_model else stats


def _episode_job(args) -> RunStatistics:
    variant, scenario, seed = args
    return run_episode(variant, scenario, seed)


def run_ensemble(variant: VariantSpec, scenario: ScenarioConfig, n_runs: int | None = None,
                 parallel: int = 1) -> EnsembleResult:
    """Average ``n_runs`` episodes seeded ``seed_base + run index``.

    Per-run results are reduced in run-index order, so ``parallel`` does not
    affect the returned values.
    """
    n_runs = scenario.n_runs if n_runs is None else int(n_runs)
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    seeds = [scenario.seed_base + i for i in range(n_runs)]
    jobs = [(variant, scenario, s) for s in seeds]
    if parallel > 1 and n_runs > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            runs = list(pool.map(_episode_job, jobs, chunksize=max(1, n_runs // (4 * parallel))))
    else:
        runs = [_episode_job(j) for j in jobs]
    rmse = np.stack([r.rmse for r in runs])
    cpmu = np.stack([r.cpmu for r in runs])
    mean = RunStatistics(runs[0].checkpoints.copy(), rmse.mean(axis=0), cpmu.mean(axis=0))
    return EnsembleResult(mean=mean, runs=runs, seeds=seeds)


def monotonicity_satisfied(model: RgpModel, scenario: ScenarioConfig, tol: float = 1e-5) -> np.ndarray:
    """Boolean per basis vertex: every monotonicity assumption holds there (up to ``tol``)."""
    ok = np.ones(model.n_basis, dtype=bool)
    for m in scenario.monotonicity:
        c = InequalityConstraint.monotonicity(model, dim=m.dim, sign=m.sign, bound=m.bound, r_ic=m.r_ic)
        ok &= m.sign * (c.H @ model.mu_g - m.bound) <= tol
    return ok


@dataclass
class Surface2D:
    axes: list[np.ndarray]
    mean_constrained: np.ndarray
    mean_plain: np.ndarray
    var_constrained: np.ndarray
    var_plain: np.ndarray
    stats_constrained: RunStatistics
    stats_plain: RunStatistics
    satisfied_constrained: np.ndarray
    satisfied_plain: np.ndarray


def run_2d_scenario(scenario: ScenarioConfig, variant: VariantSpec, seed: int | None = None) -> Surface2D:
    """Train constrained and plain models on one shared stream; return surfaces.

    Surfaces are arrays of shape ``(n_a, n_b)`` indexed ``[i_a, i_b]`` over the
    dense evaluation grid.
    """
    if scenario.kernel.dims != 2:
        raise ConfigError("run_2d_scenario needs a 2-D kernel config")
    seed = scenario.seed_base if seed is None else seed
    plain_variant = VariantSpec("RGP", constrained=False)
    stats_c, model_c = run_episode(variant, scenario, seed, return_model=True)
    stats_p, model_p = run_episode(plain_variant, scenario, seed, return_model=True)
    grid = eval_inputs(scenario.kernel, scenario.eval_points)
    n = scenario.eval_points or 41
    Xg = normalize(grid, scenario.kernel)
    pc, pp = model_c.infer(Xg), model_p.infer(Xg)

    def surf(v):
        # grid rows run dimension 0 fastest, i.e. shape (n_b, n_a) in C order
        return np.asarray(v).reshape(n, n).T

    axes = [np.linspace(lo, hi, n) for lo, hi in scenario.kernel.input_bounds]
    return Surface2D(
        axes=axes,
        mean_constrained=surf(pc.mean), mean_plain=surf(pp.mean),
        var_constrained=surf(pc.var), var_plain=surf(pp.var),
        stats_constrained=stats_c, stats_plain=stats_p,
        satisfied_constrained=monotonicity_satisfied(model_c, scenario),
        satisfied_plain=monotonicity_satisfied(model_p, scenario),
    )
