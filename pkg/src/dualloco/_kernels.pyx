# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: row-wise Walsh-Hadamard transform and one SDCA epoch.

Both mirror ``dualloco._fallback`` operation for operation; the test-suite
checks the two against each other.
"""
from libc.math cimport sqrt, exp, log, log1p, fabs

DEF SQUARED = 0
DEF LOGISTIC = 1
DEF SMOOTHED_HINGE = 2
DEF HINGE = 3


def fwht_rows(double[:, ::1] A):
    """Orthonormal Walsh-Hadamard transform of every row of ``A``, in place."""
    cdef Py_ssize_t n = A.shape[0], m = A.shape[1]
    cdef Py_ssize_t r, h, i, j
    cdef double a, b, norm
    if m & (m - 1):
        raise ValueError("row length must be a power of two")
    if m == 0:
        return
    norm = 1.0 / sqrt(<double>m)
    with nogil:
        for r in range(n):
            h = 1
            while h < m:
                i = 0
                while i < m:
                    for j in range(i, i + h):
                        a = A[r, j]
                        b = A[r, j + h]
                        A[r, j] = a + b
                        A[r, j + h] = a - b
                    i += 2 * h
                h *= 2
            for j in range(m):
                A[r, j] *= norm


cdef inline double _clip01(double b) nogil:
    if b < 0.0:
        return 0.0
    if b > 1.0:
        return 1.0
    return b


cdef inline double _sigmoid(double t) nogil:
    cdef double e
    if t >= 0:
        return 1.0 / (1.0 + exp(-t))
    e = exp(t)
    return e / (1.0 + e)


cdef double _logistic_coordinate(double b_old, double ym, double s) nogil:
    cdef double lo = -ym - s, hi = -ym + s
    cdef double t = -ym + s * b_old - 0.5 * s
    cdef double sig, g, slope, step
    cdef double prev_step = hi - lo
    cdef int it
    for it in range(100):
        sig = _sigmoid(t)
        g = t + ym + s * (sig - b_old)
        if g > 0:
            hi = t
        elif g < 0:
            lo = t
        else:
            break
        slope = 1.0 + s * sig * (1.0 - sig)
        step = g / slope
        # bisect when Newton leaves the bracket or stops halving its step
        if not (lo <= t - step <= hi) or fabs(step) > 0.5 * fabs(prev_step):
            step = t - 0.5 * (lo + hi)
        prev_step = step
        t -= step
        if fabs(step) <= 1e-12 * (fabs(t) if fabs(t) > 1.0 else 1.0):
            break
    return _sigmoid(t)


cdef double _update(int code, double a, double y, double margin, double s, double gamma) nogil:
    cdef double b_old, ym, b
    if code == SQUARED:
        return a + (margin - y - a) / (1.0 + s)
    b_old = _clip01(-y * a)
    ym = y * margin
    if code == HINGE:
        if s == 0.0:
            if ym < 1.0:
                b = 1.0
            elif ym > 1.0:
                b = 0.0
            else:
                b = b_old
        else:
            b = _clip01(b_old + (1.0 - ym) / s)
    elif code == SMOOTHED_HINGE:
        b = _clip01(b_old + (1.0 - ym - gamma * b_old) / (gamma + s))
    else:
        b = _logistic_coordinate(b_old, ym, s)
    return -y * b


def sdca_epoch(const double[:, ::1] X, const double[::1] y, double[::1] alpha, double[::1] beta,
               const double[::1] row_norms, const long long[::1] order, int code, double lam,
               double gamma):
    """One pass of exact dual coordinate updates in the given sample order.

    ``beta`` is kept equal to -(1/(lam n)) X' alpha incrementally.
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double margin, a_new, delta, coef
    cdef double lam_n = lam * n
    with nogil:
        for t in range(order.shape[0]):
            i = order[t]
            margin = 0.0
            for j in range(d):
                margin += X[i, j] * beta[j]
            a_new = _update(code, alpha[i], y[i], margin, row_norms[i] / lam_n, gamma)
            delta = a_new - alpha[i]
            if delta != 0.0:
                alpha[i] = a_new
                coef = -delta / lam_n
                for j in range(d):
                    beta[j] += coef * X[i, j]


cdef double _loss(int code, double u, double y, double gamma) nogil:
    cdef double z
    if code == SQUARED:
        return 0.5 * (y - u) * (y - u)
    z = y * u
    if code == LOGISTIC:
        if z > 0:
            return log1p(exp(-z))
        return -z + log1p(exp(z))
    if code == HINGE:
        return 1.0 - z if z < 1.0 else 0.0
    if z >= 1.0:
        return 0.0
    if z <= 1.0 - gamma:
        return 1.0 - z - 0.5 * gamma
    return (1.0 - z) * (1.0 - z) / (2.0 * gamma)


cdef double _xlogx(double b) nogil:
    return b * log(b) if b > 0.0 else 0.0


cdef double _conjugate(int code, double a, double y, double gamma) nogil:
    cdef double b
    if code == SQUARED:
        return 0.5 * a * a + a * y
    b = _clip01(-y * a)
    if code == LOGISTIC:
        return _xlogx(b) + _xlogx(1.0 - b)
    if code == HINGE:
        return -b
    return -b + 0.5 * gamma * b * b


cdef inline double _dot(const double[:, ::1] X, Py_ssize_t i, double[::1] v, Py_ssize_t d) nogil:
    # four partial sums so the compiler can keep several multiply-adds in flight
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t j = 0
    while j + 4 <= d:
        s0 += X[i, j] * v[j]
        s1 += X[i, j + 1] * v[j + 1]
        s2 += X[i, j + 2] * v[j + 2]
        s3 += X[i, j + 3] * v[j + 3]
        j += 4
    while j < d:
        s0 += X[i, j] * v[j]
        j += 1
    return (s0 + s1) + (s2 + s3)


def sdca_run(const double[:, ::1] X, const double[::1] y, double[::1] alpha, double[::1] beta,
             const double[::1] row_norms, const long long[:, ::1] orders, int code, double lam,
             double gamma, double tol, double x_norm, double[::1] gaps, double[::1] exact):
    """Run up to ``orders.shape[0]`` epochs, stopping once the duality gap is <= tol.

    The gap after each epoch goes to ``gaps``. On return ``beta`` has been
    checked against -(1/(lam n)) X' alpha and replaced by it. Returns
    ``(epochs_done, drift)``; a positive ``drift`` means the incremental cache
    had moved away from the exact map by more than rounding allows.
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t e, t, i, j
    cdef double margin, a_new, delta, coef, diff2, ex2, al2, scale, bb, ploss, dconj
    cdef double lam_n = lam * n
    cdef Py_ssize_t done = 0
    cdef double drift = 0.0
    with nogil:
        for e in range(orders.shape[0]):
            for t in range(n):
                i = orders[e, t]
                margin = _dot(X, i, beta, d)
                a_new = _update(code, alpha[i], y[i], margin, row_norms[i] / lam_n, gamma)
                delta = a_new - alpha[i]
                if delta != 0.0:
                    alpha[i] = a_new
                    coef = -delta / lam_n
                    for j in range(d):
                        beta[j] += coef * X[i, j]
            done += 1
            bb = 0.0
            for j in range(d):
                bb += beta[j] * beta[j]
            ploss = 0.0
            dconj = 0.0
            for i in range(n):
                ploss += _loss(code, _dot(X, i, beta, d), y[i], gamma)
                dconj += _conjugate(code, alpha[i], y[i], gamma)
            gaps[e] = ploss / n + dconj / n + lam * bb
            if gaps[e] <= tol:
                break
        # cache coherence against the exact map
        for j in range(d):
            exact[j] = 0.0
        al2 = 0.0
        for i in range(n):
            al2 += alpha[i] * alpha[i]
            if alpha[i] != 0.0:
                for j in range(d):
                    exact[j] += X[i, j] * alpha[i]
        diff2 = 0.0
        ex2 = 0.0
        for j in range(d):
            exact[j] = -exact[j] / lam_n
            diff2 += (beta[j] - exact[j]) * (beta[j] - exact[j])
            ex2 += exact[j] * exact[j]
            beta[j] = exact[j]
        scale = sqrt(ex2)
        if x_norm * sqrt(al2) / lam_n > scale:
            scale = x_norm * sqrt(al2) / lam_n
        if sqrt(diff2) > 1e-8 * scale:
            drift = sqrt(diff2)
    return done, drift
