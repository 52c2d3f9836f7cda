"""Recursive GP regression on a fixed basis-vector grid.

The model state is the posterior mean ``mu_g`` and covariance ``C_g`` of the
latent function at the basis vertices.  Each measurement triggers one
Kalman-style scalar update; test-point predictions go through the gain
``J = k(X_test, X) K_I``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import NumericalError
from .kernel import BasisGrid, KernelConfig, build_basis_grid, se_kernel

__all__ = ["RgpModel", "Prediction", "init_model"]

NEG_VARIANCE_TOL = 1e-9


@dataclass
class Prediction:
    """Predictive moments at a set of test inputs.

    Attributes
    ----------
    mean : (m,) ndarray
    cov : (m, m) ndarray
        Full predictive covariance; its diagonal is clamped at zero.
    J : (m, P) ndarray
        Gain matrix ``k(X_test, X) K_I``.
    """

    mean: np.ndarray
    cov: np.ndarray
    J: np.ndarray

    @property
    def var(self) -> np.ndarray:
        return np.diag(self.cov).copy()


class RgpModel:
    """Basis-grid GP whose state is updated one measurement at a time.

    Holds a single writer's state: :meth:`update` mutates ``mu_g`` and
    ``C_g`` in place.  Use :meth:`copy` to snapshot for concurrent readers.
    """

    def __init__(self, cfg: KernelConfig, grid: BasisGrid, K: np.ndarray, K_I: np.ndarray,
                 mu_g: np.ndarray, C_g: np.ndarray, step: int = 0):
        self.cfg = cfg
        self.grid = grid
        self.K = K
        self.K_I = K_I
        self.mu_g = mu_g
        self.C_g = C_g
        self.step = step

    @classmethod
    def from_config(cls, cfg: KernelConfig) -> "RgpModel":
        grid = build_basis_grid(cfg)
        K = se_kernel(grid.vertices, grid.vertices, cfg)
        K_I = _regularized_inverse(K, cfg.jitter)
        return cls(cfg, grid, K, K_I, np.zeros(grid.n_basis), K.copy(), 0)

    @property
    def n_basis(self) -> int:
        return self.grid.n_basis

    def copy(self) -> "RgpModel":
        # cfg, grid, K, K_I are never written after construction and are shared
        return RgpModel(self.cfg, self.grid, self.K, self.K_I,
                        self.mu_g.copy(), self.C_g.copy(), self.step)

    def gain(self, X_test) -> np.ndarray:
        k_tx = se_kernel(X_test, self.grid.vertices, self.cfg)
        return k_tx @ self.K_I

    def infer(self, X_test) -> Prediction:
        """Predictive mean and covariance at normalized test inputs ``(m, n_X)``."""
        X_test = np.asarray(X_test, dtype=float)
        J = self.gain(X_test)
        k_tt = se_kernel(X_test, X_test, self.cfg)
        mean = J @ self.mu_g
        cov = k_tt + J @ (self.C_g - self.K) @ J.T
        cov = 0.5 * (cov + cov.T)
        d = np.diag(cov)
        if np.any(d < -NEG_VARIANCE_TOL):
            raise NumericalError(f"negative predictive variance {d.min():.3e}")
        idx = np.flatnonzero(d < 0)
        cov[idx, idx] = 0.0
        return Prediction(mean=mean, cov=cov, J=J)

    def predict_mean(self, X_test) -> np.ndarray:
        return self.gain(X_test) @ self.mu_g

    def update(self, x, y: float, sigma_y2: float) -> tuple[float, float]:
        """Incorporate one measurement ``y`` taken at normalized input ``x``.

        Returns the predicted mean and variance at ``x`` before the update.
        """
        if not sigma_y2 > 0:
            raise ValueError(f"sigma_y2 must be > 0, got {sigma_y2}")
        x = np.ascontiguousarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.cfg.dims:
            raise ValueError(f"x must have {self.cfg.dims} entries, got {x.shape[0]}")
        k = backend.kernels
        sigma2 = self.cfg.sigma_k**2
        _, J = k.gain_row(x, self.grid.vertices, self.K_I, sigma2, self.cfg.length_scale)
        out = k.measurement_update(self.mu_g, self.C_g, self.K, J, sigma2, float(y), float(sigma_y2))
        self.step += 1
        return out

    def gradient_means(self, H: np.ndarray) -> np.ndarray:
        """Derivative means at the basis grid, ``H @ mu_g``, for a matrix built by
        :func:`rgpm.constraints.build_monotonicity_matrix`."""
        H = np.asarray(H)
        if H.shape != (self.n_basis, self.n_basis):
            raise ValueError(f"H must be {self.n_basis}x{self.n_basis}, got {H.shape}")
        return H @ self.mu_g


def init_model(cfg: KernelConfig) -> RgpModel:
    return RgpModel.from_config(cfg)


def _regularized_inverse(K: np.ndarray, jitter: float) -> np.ndarray:
    A = K + jitter * np.eye(K.shape[0])
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NumericalError(
            f"kernel matrix is not positive definite with jitter {jitter:.3e}"
        ) from None
    K_I = np.linalg.inv(A)
    return np.ascontiguousarray(0.5 * (K_I + K_I.T))
