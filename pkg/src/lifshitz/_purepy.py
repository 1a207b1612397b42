"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

The arithmetic is written in the same order as the Cython source so that the
two backends produce identical floats.
"""
from math import atan2, cos, floor, pi, sin

X_STAR = -0.75


def model_orbit(x, E, amp, ys, trace=None):
    x = float(x)
    lo = hi = x
    for i, y in enumerate(ys.tolist()):
        s = sin(pi * x)
        x = x + amp * s * s + E - y
        if x < lo:
            lo = x
        if x > hi:
            hi = x
        if trace is not None:
            trace[i] = x
    return x, lo, hi


def anderson_orbit(x, eps, us, trace=None):
    x = float(x)
    lo = hi = x
    for i, u in enumerate(us.tolist()):
        lam = -2.0 + eps - u
        s = x - X_STAR
        k = float(floor(s))
        a = pi * (s - k)
        sn = sin(a)
        cs = cos(a)
        beta = atan2(sn, lam * sn - cs)
        x = X_STAR + 0.5 + k + (1.0 - beta / pi)
        if x < lo:
            lo = x
        if x > hi:
            hi = x
        if trace is not None:
            trace[i] = x
    return x, lo, hi


def envelope_passage(twok, coef, eps, start, target, collar, cap):
    n, m1, m2 = 0, -1, -1
    x = float(start)
    if x >= -collar:
        m1 = 0
    if x > collar:
        m2 = 0
    twok = float(twok)
    while x < target:
        if n >= cap:
            n = -1
            break
        x = x + coef * x**twok + eps
        n += 1
        if m1 < 0 and x >= -collar:
            m1 = n
        if m2 < 0 and x > collar:
            m2 = n
    return n, m1, m2, x


def sturm_count(v, E):
    v = v.tolist()
    if not v:
        return 0
    d = v[0] - E
    count = 1 if d < 0 else 0
    for vi in v[1:]:
        if d == 0.0:
            d = 1e-300
        d = vi - E - 1.0 / d
        if d < 0:
            count += 1
    return count
