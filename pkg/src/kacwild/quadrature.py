"""Adaptive Simpson quadrature.

Small, dependency-free integrator used as the reference oracle for the
angular moments and for scalar Wild-product evaluations.  Absolute-error
driven; the integrand must be finite on the closed interval.
"""

from __future__ import annotations


def _simpson(f, a, fa, b, fb, m, fm):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(f, a, fa, m, fm, lm, flm)
    right = _simpson(f, m, fm, b, fb, rm, frm)
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    return _adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) + _adaptive(
        f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1
    )


def adaptive_simpson(f, a, b, tol=1e-12, max_depth=48):
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``."""
    if b == a:
        return 0.0
    fa = f(a)
    fb = f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, fa, b, fb, m, fm)
    return _adaptive(f, a, fa, b, fb, m, fm, whole, tol, max_depth)


def doubling_simpson(f, a, b, rel_tol=1e-10, panels=256, max_panels=4096):
    """Composite Simpson with panel doubling until the relative change
    drops below ``rel_tol`` (or ``max_panels`` is reached).

    Returns the last estimate.  ``f`` must accept a numpy array.
    """
    import numpy as np

    prev = None
    n = panels
    while True:
        x = np.linspace(a, b, n + 1)
        y = f(x)
        h = (b - a) / n
        val = (h / 3.0) * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())
        if prev is not None:
            scale = max(abs(val), 1e-300)
            if abs(val - prev) <= rel_tol * scale or n >= max_panels:
                return val
        prev = val
        n *= 2
