"""Pure-Python/NumPy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np

from .losses import LOSS_KINDS, LossFamily, conjugate_values, coordinate_update, loss_values


def fwht_rows(A):
    """Orthonormal Walsh-Hadamard transform of every row of ``A``, in place."""
    n, m = A.shape
    if m & (m - 1):
        raise ValueError("row length must be a power of two")
    if m == 0:
        return
    h = 1
    while h < m:
        view = A.reshape(n, m // (2 * h), 2, h)
        a = view[:, :, 0, :].copy()
        b = view[:, :, 1, :]
        view[:, :, 0, :] += b
        view[:, :, 1, :] = a - b
        h *= 2
    A *= 1.0 / np.sqrt(m)


def sdca_epoch(X, y, alpha, beta, row_norms, order, code, lam, gamma):
    n = X.shape[0]
    lam_n = lam * n
    family = LossFamily(LOSS_KINDS[code], gamma if gamma > 0 else 1.0)
    for i in order:
        xi = X[i]
        margin = float(xi @ beta)
        a_new = coordinate_update(family, alpha[i], y[i], margin, row_norms[i], n, lam)
        delta = a_new - alpha[i]
        if delta != 0.0:
            alpha[i] = a_new
            beta += (-delta / lam_n) * xi


def sdca_run(X, y, alpha, beta, row_norms, orders, code, lam, gamma, tol, x_norm, gaps, exact):
    family = LossFamily(LOSS_KINDS[code], gamma if gamma > 0 else 1.0)
    n = X.shape[0]
    lam_n = lam * n
    done = 0
    for e, order in enumerate(orders):
        sdca_epoch(X, y, alpha, beta, row_norms, order, code, lam, gamma)
        done += 1
        gaps[e] = (float(np.mean(loss_values(family, X @ beta, y)))
                   + float(np.mean(conjugate_values(family, alpha, y))) + lam * float(beta @ beta))
        if gaps[e] <= tol:
            break
    exact[:] = -(X.T @ alpha) / lam_n
    diff = float(np.linalg.norm(beta - exact))
    scale = max(float(np.linalg.norm(exact)), x_norm * float(np.linalg.norm(alpha)) / lam_n)
    beta[:] = exact
    return done, (diff if diff > 1e-8 * scale else 0.0)
