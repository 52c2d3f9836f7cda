"""Squared-exponential kernel, basis-vector grid and input normalization.

Inputs are mapped onto a grid with unit step in every dimension, so a single
joint length scale applies to all of them.  The map for dimension ``i`` is
``X_i = (zeta_i - lower_i) * beta_i`` with ``beta_i = (N_i - 1) / (upper_i -
lower_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "KernelConfig",
    "BasisGrid",
    "se_kernel",
    "build_basis_grid",
    "normalize",
    "denormalize",
]


@dataclass(frozen=True)
class KernelConfig:
    """Hyperparameters and grid layout of a recursive GP.

    Parameters
    ----------
    sigma_k : float
        Signal standard deviation (output units).
    length_scale : float
        Joint length scale ``L`` on normalized inputs.  The kernel exponent
        is ``-|x - x'|^2 / (2 L)``, so ``L`` has squared-distance units.
    points_per_dim : sequence of int
        Number of basis points ``N_i`` per input dimension (each >= 2).
    input_bounds : sequence of (float, float)
        Raw input range ``(lower_i, upper_i)`` per dimension.
    jitter : float, optional
        Diagonal regularizer added to ``K`` before inversion.  Defaults to
        ``1e-12 * sigma_k**2``.
    """

    sigma_k: float
    length_scale: float
    points_per_dim: tuple[int, ...]
    input_bounds: tuple[tuple[float, float], ...]
    jitter: float | None = field(default=None)

    def __post_init__(self) -> None:
        pts = tuple(int(n) for n in self.points_per_dim)
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.input_bounds)
        object.__setattr__(self, "points_per_dim", pts)
        object.__setattr__(self, "input_bounds", bounds)
        object.__setattr__(self, "sigma_k", float(self.sigma_k))
        object.__setattr__(self, "length_scale", float(self.length_scale))
        if self.jitter is None:
            object.__setattr__(self, "jitter", 1e-12 * self.sigma_k**2)
        else:
            object.__setattr__(self, "jitter", float(self.jitter))

        if not self.sigma_k > 0:
            raise ValueError(f"sigma_k must be > 0, got {self.sigma_k}")
        if not self.length_scale > 0:
            raise ValueError(f"length_scale must be > 0, got {self.length_scale}")
        if not self.jitter >= 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")
        if len(pts) == 0:
            raise ValueError("at least one input dimension is required")
        if len(pts) != len(bounds):
            raise ValueError(
                f"points_per_dim has {len(pts)} entries but input_bounds has {len(bounds)}"
            )
        for i, (n, (lo, hi)) in enumerate(zip(pts, bounds)):
            if n < 2:
                raise ValueError(f"points_per_dim[{i}] must be >= 2, got {n}")
            if not lo < hi:
                raise ValueError(f"input_bounds[{i}] needs lower < upper, got ({lo}, {hi})")

    @property
    def dims(self) -> int:
        return len(self.points_per_dim)

    @property
    def n_basis(self) -> int:
        return int(np.prod(self.points_per_dim))

    @property
    def beta(self) -> np.ndarray:
        n = np.asarray(self.points_per_dim, dtype=float)
        lo, hi = np.asarray(self.input_bounds, dtype=float).T
        return (n - 1.0) / (hi - lo)

    def to_dict(self) -> dict:
        return {
            "sigma_k": self.sigma_k,
            "length_scale": self.length_scale,
            "points_per_dim": list(self.points_per_dim),
            "input_bounds": [list(b) for b in self.input_bounds],
            "jitter": self.jitter,
        }


@dataclass(frozen=True)
class BasisGrid:
    """Fixed basis vertices (normalized units) and per-dimension scale factors."""

    vertices: np.ndarray
    beta: np.ndarray

    @property
    def n_basis(self) -> int:
        return self.vertices.shape[0]


def _as_points(A, dims: int, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, dims) if dims > 1 else A[:, None]
    if A.ndim != 2 or A.shape[1] != dims:
        raise ValueError(f"{name} must have {dims} columns, got shape {A.shape}")
    return A


def se_kernel(A, B, cfg: KernelConfig) -> np.ndarray:
    """Squared-exponential kernel matrix between two point sets.

    Parameters
    ----------
    A : (m, n_X) array_like
        Normalized points.
    B : (p, n_X) array_like
        Normalized points.
    cfg : KernelConfig

    Returns
    -------
    (m, p) ndarray
        ``sigma_k**2 * exp(-|A_a - B_b|**2 / (2 L))``.
    """
    A = _as_points(A, cfg.dims, "A")
    B = _as_points(B, cfg.dims, "B")
    diff = A[:, None, :] - B[None, :, :]
    sq = np.einsum("abi,abi->ab", diff, diff)
    return cfg.sigma_k**2 * np.exp(-sq / (2.0 * cfg.length_scale))


def build_basis_grid(cfg: KernelConfig) -> BasisGrid:
    """Integer grid vertices with the first dimension varying fastest."""
    axes = [np.arange(n, dtype=float) for n in cfg.points_per_dim]
    # meshgrid with ij indexing makes the *last* axis fastest; reverse twice
    mesh = np.meshgrid(*axes[::-1], indexing="ij")
    vertices = np.stack([m.ravel() for m in mesh[::-1]], axis=1)
    return BasisGrid(vertices=vertices, beta=cfg.beta)


def normalize(zeta: Sequence[float] | np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Map raw inputs to grid units.  Works row-wise on (m, n_X) arrays.

    Values outside the bounds are extrapolated linearly, not clipped.
    """
    zeta = np.asarray(zeta, dtype=float)
    lo = np.array([b[0] for b in cfg.input_bounds])
    if zeta.shape[-1:] != (cfg.dims,):
        raise ValueError(f"expected trailing dimension {cfg.dims}, got shape {zeta.shape}")
    return (zeta - lo) * cfg.beta


def denormalize(X: Sequence[float] | np.ndarray, cfg: KernelConfig) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    lo = np.array([b[0] for b in cfg.input_bounds])
    if X.shape[-1:] != (cfg.dims,):
        raise ValueError(f"expected trailing dimension {cfg.dims}, got shape {X.shape}")
    return X / cfg.beta + lo
