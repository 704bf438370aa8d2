"""Moment/cumulant calculus and the Edgeworth-approximant ingredients.

Conversions between raw moments and cumulants go through the classical
partition sum (all nonnegative integer solutions of k_1 + 2 k_2 + ... +
r k_r = r), enumerated explicitly.  Exact at small orders; capped at
order 20 to bound combinatorial growth.

The second half of the module builds the objects entering the
Gaussian-approximation bounds for weighted sums: the scaled cumulants
``lambda_tilde``, the correction polynomials ``ptilde``, the approximant
``eta`` itself, the log-remainder ``epsilon_k`` with its derivative
companion ``rho_k``, and the window half-width ``y0`` on which a
symmetric characteristic function is guaranteed to stay >= 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "MAX_ORDER",
    "EdgeworthSpec",
    "moments_to_cumulants",
    "cumulants_to_moments",
    "ptilde_polynomials",
    "eta_approximant",
    "remainder_epsilon_k",
    "rho_k",
    "epsilon_grid_suprema",
    "y0_threshold",
]

MAX_ORDER = 20


class OrderError(ValueError):
    """Requested moment/cumulant order beyond the enumeration cap."""


class WindowError(ValueError):
    """Argument outside the validity window [-y0, y0]."""


@lru_cache(maxsize=64)
def _weighted_partitions(r: int) -> tuple[tuple[int, ...], ...]:
    """All (k_1, ..., k_r) >= 0 with sum_l l*k_l = r."""
    out: list[tuple[int, ...]] = []

    def rec(l: int, rem: int, acc: list[int]) -> None:
        if l == 0:
            if rem == 0:
                out.append(tuple(reversed(acc)))
            return
        for k in range(rem // l + 1):
            acc.append(k)
            rec(l - 1, rem - l * k, acc)
            acc.pop()

    rec(r, r, [])
    return tuple(out)


def _check_order(n: int) -> None:
    if n > MAX_ORDER:
        raise OrderError(f"orders above {MAX_ORDER} are not supported (got {n})")


def moments_to_cumulants(moments) -> np.ndarray:
    """Cumulants (kappa_1..kappa_K) from raw moments (m_1..m_K).

    Partition-sum formula; inverse of :func:`cumulants_to_moments`.
    """
    m = np.asarray(moments, dtype=float)
    _check_order(m.size)
    if not np.all(np.isfinite(m)):
        raise ValueError("moments must be finite")
    kappa = np.empty_like(m)
    for r in range(1, m.size + 1):
        total = 0.0
        for part in _weighted_partitions(r):
            s = sum(part)
            term = (-1.0) ** (s - 1) * math.factorial(s - 1)
            for l, k in enumerate(part, start=1):
                if k:
                    term *= (m[l - 1] / math.factorial(l)) ** k / math.factorial(k)
            total += term
        kappa[r - 1] = math.factorial(r) * total
    return kappa


def cumulants_to_moments(cumulants) -> np.ndarray:
    """Raw moments from cumulants (complete Bell-polynomial sum)."""
    kap = np.asarray(cumulants, dtype=float)
    _check_order(kap.size)
    m = np.empty_like(kap)
    for r in range(1, kap.size + 1):
        total = 0.0
        for part in _weighted_partitions(r):
            term = 1.0
            for l, k in enumerate(part, start=1):
                if k:
                    term *= (kap[l - 1] / math.factorial(l)) ** k / math.factorial(k)
            total += term
        m[r - 1] = math.factorial(r) * total
    return m


def y0_threshold(sigma2: float, m4: float) -> float:
    """Half-width of the window on which a symmetric cf with these
    moments is guaranteed >= 1/2.

    Positive root of the biquadratic m4*y^4 + 12*sigma2*y^2 - 12 = 0.
    """
    sigma2 = float(sigma2)
    m4 = float(m4)
    if sigma2 <= 0.0 or m4 <= 0.0:
        raise ValueError("need sigma2 > 0 and m4 > 0")
    if m4 < sigma2 * sigma2 * (1.0 - 1e-12):
        raise ValueError(f"inconsistent moments: m4={m4} < sigma2^2={sigma2**2}")
    return math.sqrt((-6.0 * sigma2 + math.sqrt(36.0 * sigma2**2 + 12.0 * m4)) / m4)


@dataclass(frozen=True)
class EdgeworthSpec:
    """Weights and cumulant data for the Gaussian approximant of a
    standardized weighted sum.

    ``kappa2r`` holds (kappa_2, kappa_4, ..., kappa_{2*chi}) of the base
    law; ``weights`` must satisfy sum(c_j^2) = 1.
    """

    chi: int
    delta: float
    weights: np.ndarray
    sigma2: float
    m4: float
    kappa2r: tuple[float, ...]
    lambda_tilde: np.ndarray = field(init=False, repr=False)
    y0: float = field(init=False)

    def __post_init__(self):
        if self.chi < 2:
            raise ValueError(f"chi must be >= 2, got {self.chi}")
        if not 0.0 <= self.delta < 2.0:
            raise ValueError(f"delta must lie in [0, 2), got {self.delta}")
        w = np.asarray(self.weights, dtype=float)
        if abs(float(w @ w) - 1.0) > 1e-12:
            raise ValueError(f"weights must satisfy sum c^2 = 1, got {float(w @ w)!r}")
        if len(self.kappa2r) != self.chi:
            raise ValueError(f"need kappa_2..kappa_{2 * self.chi}, got {len(self.kappa2r)} entries")
        object.__setattr__(self, "weights", w)
        lam = np.array(
            [
                self.kappa2r[r - 1] / self.sigma2**r * float(np.sum(w ** (2 * r)))
                for r in range(1, self.chi + 1)
            ]
        )
        object.__setattr__(self, "lambda_tilde", lam)
        object.__setattr__(self, "y0", y0_threshold(self.sigma2, self.m4))

    @property
    def k(self) -> int:
        return 2 * self.chi


def ptilde_polynomials(spec: EdgeworthSpec) -> list[np.ndarray]:
    """Coefficient vectors (ascending powers of xi) of the correction
    polynomials P_r for r = 1..chi-1.

    P_1 is exactly (lambda_2 / 4!) * xi^4.
    """
    lam = spec.lambda_tilde
    polys: list[np.ndarray] = []
    for r in range(1, spec.chi):
        coeffs = np.zeros(2 * (r + r) + 1)
        for part in _weighted_partitions(r):
            s = sum(part)
            c = 1.0
            for m_idx, k in enumerate(part, start=1):
                if k:
                    c *= (lam[m_idx] / math.factorial(2 * m_idx + 2)) ** k / math.factorial(k)
            coeffs[2 * (r + s)] += (-1.0) ** (r + s) * c
        polys.append(coeffs)
    return polys


def eta_approximant(spec: EdgeworthSpec, xi):
    """Gaussian-with-corrections approximant at ``xi`` (scalar or array);
    real-valued because the base law is symmetric."""
    x = np.asarray(xi, dtype=float)
    corr = np.zeros_like(x)
    for coeffs in ptilde_polynomials(spec):
        corr += np.polynomial.polynomial.polyval(x, coeffs)
    out = np.exp(-0.5 * x * x) * (1.0 + corr)
    return out if out.ndim else float(out)


def _log_remainder(psi, k: int, x: np.ndarray, kappa2r) -> np.ndarray:
    chi = k // 2
    poly = np.zeros_like(x)
    x2 = x * x
    p = np.ones_like(x)
    for r in range(1, chi + 1):
        p = p * x2
        poly += (-1.0) ** r * kappa2r[r - 1] / math.factorial(2 * r) * p
    psi_x = np.real(np.asarray(psi(x), dtype=complex))
    return np.log(psi_x) - poly


def _epsilon_series(k: int, x: np.ndarray, kappa_tail) -> np.ndarray:
    # leading cumulant terms of the remainder: sum_{r>chi} (-1)^r kappa_{2r} x^{2r-k}/(2r)!
    chi = k // 2
    out = np.zeros_like(x)
    for i, kap in enumerate(kappa_tail):
        r = chi + 1 + i
        out += (-1.0) ** r * kap / math.factorial(2 * r) * x ** (2 * r - k)
    return out


def remainder_epsilon_k(psi, k: int, xi, *, kappa2r, y0: float, kappa_tail=None, switch_frac: float = 0.05):
    """Taylor remainder of log(psi) past order k = 2*chi, divided by xi^k.

    ``psi`` is the (real, even) characteristic function of the base law,
    ``kappa2r`` its even cumulants (kappa_2, ..., kappa_k).  Continuous,
    equal to 0 at xi = 0; only defined for |xi| <= y0 where psi >= 1/2.

    Near zero the direct formula loses all precision (the division by
    xi^k amplifies the log/polynomial cancellation), so when the next
    even cumulants ``kappa_tail`` = (kappa_{k+2}, ...) are supplied the
    remainder is evaluated from that series for |xi| < switch_frac*y0,
    where its truncation error is far below float resolution.
    """
    if k < 4 or k % 2:
        raise ValueError(f"k must be an even integer >= 4, got {k}")
    x = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(np.abs(x) > y0 * (1.0 + 1e-12)):
        raise WindowError(f"|xi| must be <= y0 = {y0}")
    out = np.zeros_like(x)
    cut = switch_frac * y0 if kappa_tail is not None else 0.0
    direct = np.abs(x) >= max(cut, 1e-300)
    if np.any(direct):
        out[direct] = _log_remainder(psi, k, x[direct], kappa2r) / x[direct] ** k
    small = ~direct & (x != 0.0)
    if np.any(small):
        out[small] = _epsilon_series(k, x[small], kappa_tail)
    return out if np.ndim(xi) else float(out[0])


def rho_k(psi, k: int, xi, *, kappa2r, y0: float, kappa_tail=None, step_frac: float = 1e-5):
    """xi * d/dxi of :func:`remainder_epsilon_k`, by central differences.

    Step is ``step_frac * y0``.  Within one step of the window edge the
    derivative is taken one-sided from the interior.
    """
    x = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(np.abs(x) > y0 * (1.0 + 1e-12)):
        raise WindowError(f"|xi| must be <= y0 = {y0}")
    h = step_frac * y0
    lo = np.clip(x - h, -y0, y0)
    hi = np.clip(x + h, -y0, y0)
    eps = lambda t: np.asarray(
        remainder_epsilon_k(psi, k, t, kappa2r=kappa2r, y0=y0, kappa_tail=kappa_tail),
        dtype=float,
    )
    d = (eps(hi) - eps(lo)) / (hi - lo)
    out = x * d
    out[x == 0.0] = 0.0
    return out if np.ndim(xi) else float(out[0])


def epsilon_grid_suprema(
    psi,
    k: int,
    *,
    kappa2r,
    y0: float,
    kappa_tail=None,
    delta: float = 0.0,
    n_grid: int = 10_000,
    floor_frac: float = 1e-3,
):
    """Grid estimates of sup |epsilon_k| and sup |rho_k| over [-y0, y0].

    With ``delta > 0`` the suprema of |epsilon_k(x)| / |x|^delta and
    |rho_k(x)| / |x|^delta are returned instead (both vanish at 0, so the
    Hoelder quotients are bounded).  Without a series tail, points below
    ``floor_frac * y0`` are excluded: there the true remainder is
    negligible while float cancellation would dominate.
    """
    lo = 0.0 if kappa_tail is not None else floor_frac * y0
    x = np.linspace(lo, y0, n_grid // 2)[1:]
    e = np.abs(
        np.asarray(remainder_epsilon_k(psi, k, x, kappa2r=kappa2r, y0=y0, kappa_tail=kappa_tail))
    )
    r = np.abs(np.asarray(rho_k(psi, k, x, kappa2r=kappa2r, y0=y0, kappa_tail=kappa_tail)))
    if delta > 0.0:
        e = e / x**delta
        r = r / x**delta
    return float(e.max()), float(r.max())
