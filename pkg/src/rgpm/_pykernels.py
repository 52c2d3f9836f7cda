"""Reference numpy implementation of the per-step kernels.

Same signatures and in-place semantics as the compiled ``_ckernels`` module.
"""
import numpy as np

from .errors import NumericalError

NEG_VARIANCE_TOL = 1e-9


def gain_row(x, vertices, K_I, sigma2, length_scale):
    """Kernel row ``k(x, X)`` and gain ``J = k(x, X) K_I`` for one test point."""
    d = vertices - x
    kx = sigma2 * np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * length_scale))
    return kx, kx @ K_I


def measurement_update(mu, C, K, J, kxx, y, sigma_y2):
    """Scalar RGP measurement update; modifies ``mu`` and ``C`` in place.

    Returns the prior predicted mean and variance at the test input.
    """
    CJ = C @ J
    mean_p = J @ mu
    var_p = kxx + J @ CJ - J @ (K @ J)
    if var_p < 0.0:
        if var_p < -NEG_VARIANCE_TOL:
            raise NumericalError(f"negative predictive variance {var_p:.3e}")
        var_p = 0.0
    s = var_p + sigma_y2
    if not s > 0.0:
        raise NumericalError(f"nonpositive innovation variance {s:.3e}")
    G = CJ / s
    mu += G * (y - mean_p)
    C -= np.outer(G, CJ)
    C += C.T
    C *= 0.5
    return mean_p, var_p


def constraint_pass(mu, C, H, sign, activation_bound, delta_b, target_bound, max_updates,
                    r_ic, activated):
    """One sequential pseudo-measurement pass over the rows of ``H``.

    Row ``j`` is active when ``sign * (t_j - activation_bound) > delta_b``, with
    ``t = H @ mu`` taken at entry so all rows share one linearization point.
    Each accepted row applies a scalar EKF update that pulls ``h_j . mu`` to
    ``target_bound``; ``mu`` and ``C`` are modified in place.  Indices of
    updated rows are written to ``activated``.

    Returns ``(n_updates, n_violations)``.
    """
    t = H @ mu
    n_up = 0
    n_viol = 0
    for j in range(H.shape[0]):
        if sign * (t[j] - activation_bound) > delta_b:
            n_viol += 1
            if n_up >= max_updates:
                continue
            h = H[j]
            Ch = C @ h
            s = h @ Ch + r_ic
            if not s > 0.0:
                raise NumericalError(f"nonpositive pseudo-measurement variance {s:.3e}")
            mu -= Ch * ((h @ mu - target_bound) / s)
            C -= np.outer(Ch, Ch / s)
            activated[n_up] = j
            n_up += 1
    return n_up, n_viol
