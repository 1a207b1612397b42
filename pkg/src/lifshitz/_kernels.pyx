# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every routine here has a line-for-line twin in ``_purepy.py``. Both evaluate
the same libm calls in the same order, so the two backends agree bit for bit.
"""
from libc.math cimport sin, cos, atan2, floor, pow, M_PI

DEF X_STAR = -0.75


def model_orbit(double x, double E, double amp, const double[::1] ys,
                double[::1] trace=None):
    """Iterate ``x -> x + amp*sin(pi x)**2 + E - y`` over the letters ``ys``.

    Returns ``(x_final, x_min, x_max)``; ``trace[i]`` receives the i-th image.
    """
    cdef Py_ssize_t i, n = ys.shape[0]
    cdef double s, lo = x, hi = x
    cdef bint keep = trace is not None
    with nogil:
        for i in range(n):
            s = sin(M_PI * x)
            x = x + amp * s * s + E - ys[i]
            if x < lo:
                lo = x
            if x > hi:
                hi = x
            if keep:
                trace[i] = x
    return x, lo, hi


def anderson_orbit(double x, double eps, const double[::1] us,
                   double[::1] trace=None):
    """Iterate the lifted projective action of ``[[-2+eps-u, -1], [1, 0]]``.

    Lift units are half-turns; ``X_STAR`` is the lift of ``[0:1]`` and
    ``X_STAR + 1/2`` the lift of its image ``[1:0]``.
    """
    cdef Py_ssize_t i, n = us.shape[0]
    cdef double lam, s, k, a, sn, cs, beta, lo = x, hi = x
    cdef bint keep = trace is not None
    with nogil:
        for i in range(n):
            lam = -2.0 + eps - us[i]
            s = x - X_STAR
            k = floor(s)
            a = M_PI * (s - k)
            sn = sin(a)
            cs = cos(a)
            beta = atan2(sn, lam * sn - cs)
            x = X_STAR + 0.5 + k + (1.0 - beta / M_PI)
            if x < lo:
                lo = x
            if x > hi:
                hi = x
            if keep:
                trace[i] = x
    return x, lo, hi


def envelope_passage(int twok, double coef, double eps, double start,
                     double target, double collar, long long cap):
    """Iterate ``x -> x + coef*x**twok + eps`` from ``start`` until ``x >= target``.

    Returns ``(steps, first_in, first_out, x)`` where ``first_in`` is the first
    step index with ``x >= -collar`` and ``first_out`` the first with
    ``x > collar`` (``-1`` if never reached). ``steps == -1`` means the cap hit.
    """
    cdef long long n = 0, m1 = -1, m2 = -1
    cdef double x = start
    if x >= -collar:
        m1 = 0
    if x > collar:
        m2 = 0
    with nogil:
        while x < target:
            if n >= cap:
                n = -1
                break
            x = x + coef * pow(x, twok) + eps
            n += 1
            if m1 < 0 and x >= -collar:
                m1 = n
            if m2 < 0 and x > collar:
                m2 = n
    return n, m1, m2, x


def sturm_count(const double[::1] v, double E):
    """Number of eigenvalues below ``E`` of the Dirichlet matrix ``diag(v) + J``.

    ``J`` has unit off-diagonals. A zero pivot is replaced by ``1e-300``.
    """
    cdef Py_ssize_t i, n = v.shape[0]
    cdef long long count = 0
    cdef double d
    if n == 0:
        return 0
    with nogil:
        d = v[0] - E
        if d < 0:
            count += 1
        for i in range(1, n):
            if d == 0.0:
                d = 1e-300
            d = v[i] - E - 1.0 / d
            if d < 0:
                count += 1
    return count
