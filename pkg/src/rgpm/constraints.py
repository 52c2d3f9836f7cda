"""Soft inequality constraints on a recursive GP via pseudo-measurements.

Every constraint row ``h_j`` encodes a linear functional of the basis mean
(a derivative at a vertex, or the output at a vertex).  A row is violated when
``sign * (h_j . mu - bound) > 0``; the violation is fed to an extended Kalman
filter as a ReLU pseudo-measurement with target value zero and small noise
``r_ic``.

:func:`apply_constraints` processes rows sequentially, skips inactive ones,
caps the number of updates per step, and discards the covariance changes at
the end of the step so only the mean correction survives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import backend
from .errors import NumericalError
from .kernel import BasisGrid, KernelConfig, se_kernel
from .rgp import RgpModel

__all__ = [
    "InequalityConstraint",
    "ConstraintReport",
    "build_monotonicity_matrix",
    "build_output_constraint_matrix",
    "relu_pseudo_measurement",
    "apply_constraints",
    "batch_constraint_update",
]


def build_monotonicity_matrix(grid: BasisGrid, cfg: KernelConfig, K_I: np.ndarray,
                              dim: int) -> np.ndarray:
    """Matrix mapping ``mu_g`` to mean partial derivatives at the basis grid.

    The derivative is taken w.r.t. the *raw* input of dimension ``dim``, so
    the normalized-space gradient is scaled by ``beta[dim]``.

    Parameters
    ----------
    grid : BasisGrid
    cfg : KernelConfig
    K_I : (P, P) ndarray
        Inverse of the (regularized) basis kernel matrix.
    dim : int
        Input dimension to differentiate along.

    Returns
    -------
    (P, P) ndarray
        ``-(beta_l / L) * ((X_l - X_l^T) * K) @ K_I``.
    """
    if not 0 <= dim < cfg.dims:
        raise ValueError(f"dim must be in [0, {cfg.dims}), got {dim}")
    X = grid.vertices
    K = se_kernel(X, X, cfg)
    diff = X[:, dim][:, None] - X[:, dim][None, :]
    H = -(grid.beta[dim] / cfg.length_scale) * (diff * K) @ K_I
    return np.ascontiguousarray(H)


def build_output_constraint_matrix(grid: BasisGrid) -> np.ndarray:
    # test grid == basis grid makes J = K K_I = I
    return np.eye(grid.n_basis)


def relu_pseudo_measurement(value: float, sign: float, bound: float) -> float:
    return max(0.0, sign * (value - bound))


@dataclass(frozen=True)
class InequalityConstraint:
    """One family of inequality constraints sharing sign, bound and budget.

    ``sign = +1`` expresses ``h . mu < bound`` and ``sign = -1`` expresses
    ``h . mu > bound``.  Active rows are pulled to the effective bound
    ``bound - delta_u * sign``, which lies ``delta_u`` inside the feasible side.

    With ``activation="nominal"`` (default) a row is active when
    ``sign * (h . mu - bound) > delta_b``, so it fires ``delta_b`` outside the
    bound and lands ``delta_u`` inside it.  ``activation="effective"`` measures
    the margin from the effective bound instead.
    """

    H: np.ndarray
    sign: int
    bound: float = 0.0
    delta_b: float = 0.0
    delta_u: float = 0.0
    max_updates: int | None = None
    r_ic: float = 1e-8
    dim: int | None = None
    activation: str = "nominal"

    def __post_init__(self) -> None:
        H = np.ascontiguousarray(self.H, dtype=float)
        H.setflags(write=False)
        object.__setattr__(self, "H", H)
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be -1 or +1, got {self.sign}")
        if self.delta_b < 0 or self.delta_u < 0:
            raise ValueError("delta_b and delta_u must be >= 0")
        if not self.r_ic > 0:
            raise ValueError(f"r_ic must be > 0, got {self.r_ic}")
        if H.ndim != 2 or H.shape[0] == 0:
            raise ValueError(f"H must be a nonempty 2-D matrix, got shape {H.shape}")
        if self.activation not in ("nominal", "effective"):
            raise ValueError(f"activation must be 'nominal' or 'effective', got {self.activation!r}")
        if self.max_updates is None:
            object.__setattr__(self, "max_updates", H.shape[0])
        elif self.max_updates < 0:
            raise ValueError(f"max_updates must be >= 0, got {self.max_updates}")

    @property
    def effective_bound(self) -> float:
        return self.bound - self.delta_u * self.sign

    @property
    def activation_bound(self) -> float:
        return self.bound if self.activation == "nominal" else self.effective_bound

    @classmethod
    def monotonicity(cls, model: RgpModel, dim: int, sign: int, bound: float = 0.0,
                     **kwargs) -> "InequalityConstraint":
        H = build_monotonicity_matrix(model.grid, model.cfg, model.K_I, dim)
        return cls(H=H, sign=sign, bound=bound, dim=dim, **kwargs)

    @classmethod
    def output(cls, model: RgpModel, sign: int, bound: float, **kwargs) -> "InequalityConstraint":
        return cls(H=build_output_constraint_matrix(model.grid), sign=sign, bound=bound, **kwargs)

    def margins(self, mu: np.ndarray) -> np.ndarray:
        """Signed margin ``sign * (H mu - activation_bound)``; rows above ``delta_b`` are active."""
        return self.sign * (self.H @ mu - self.activation_bound)


@dataclass
class ConstraintReport:
    updates_applied: list[int] = field(default_factory=list)
    activations: list[np.ndarray] = field(default_factory=list)
    budget_exhausted: list[bool] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.updates_applied)


def apply_constraints(model: RgpModel, constraints: Sequence[InequalityConstraint],
                      report_sink: list | None = None) -> ConstraintReport:
    """Apply the sequential pseudo-measurement update for one time step.

    Call after :meth:`RgpModel.update`.  Constraints are processed in list
    order, rows in ascending index order, at most ``max_updates`` rows each.
    Within a constraint the activation test uses the mean at the start of its
    pass; the covariance evolves through the pass and is carried to the next
    constraint.  On return
    ``model.mu_g`` holds the corrected mean and ``model.C_g`` is untouched.
    """
    k = backend.kernels
    report = ConstraintReport()
    C_work = model.C_g.copy()
    mu = model.mu_g
    n = model.n_basis
    for c in constraints:
        if c.H.shape[1] != n:
            raise ValueError(f"constraint H has {c.H.shape[1]} columns, model has {n} basis points")
        activated = np.empty(c.H.shape[0], dtype=np.int64)
        n_up, n_viol = k.constraint_pass(mu, C_work, c.H, float(c.sign), c.activation_bound,
                                         float(c.delta_b), c.effective_bound, int(c.max_updates),
                                         float(c.r_ic), activated)
        report.updates_applied.append(int(n_up))
        report.activations.append(activated[:n_up].copy())
        report.budget_exhausted.append(bool(n_viol > n_up))
    if report_sink is not None:
        report_sink.append(report)
    return report


def batch_constraint_update(mu: np.ndarray, C: np.ndarray,
                            constraints: Iterable[InequalityConstraint]) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (non-sequential) EKF update over all constraint rows.

    All rows are linearized at ``mu``; inactive rows get a zero Jacobian and
    budgets are ignored.  Intended as an independent check of
    :func:`apply_constraints`.  Returns new ``(mu, C)`` without the covariance
    reset.
    """
    rows, resid, noise = [], [], []
    for c in constraints:
        active = c.margins(mu) > c.delta_b
        rows.append(np.where(active[:, None], c.sign * c.H, 0.0))
        # ReLU pseudo-measurement residual w.r.t. the update target
        resid.append(np.where(active, c.sign * (c.H @ mu - c.effective_bound), 0.0))
        noise.append(np.full(c.H.shape[0], c.r_ic))
    if not rows:
        return mu.copy(), C.copy()
    Hh = np.vstack(rows)
    yhat = np.concatenate(resid)
    S = Hh @ C @ Hh.T + np.diag(np.concatenate(noise))
    try:
        G = np.linalg.solve(S, Hh @ C).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular innovation matrix in batch constraint update") from exc
    return mu - G @ yhat, C - G @ Hh @ C
