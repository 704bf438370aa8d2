"""Error certificates for the Gaussian approximation of weighted sums.

For a symmetric base law with unit-sphere weights c_1..c_n, the cf of
the standardized sum is psi_n(xi) = prod_j psi(c_j xi / sigma).  The
module evaluates both sides of the five bound variants comparing psi_n
with the approximant eta_{k,n} inside the guaranteed window, using the
explicit constant recipes assembled from the base law's cumulants, the
window half-width y0, and grid-estimated suprema of the log-remainder
epsilon_k and its companion rho_k.

Two conventions, recorded in each certificate:
* |kappa_4| (and |kappa_{2s}|) enters the exponential factors; the
  signed value would shrink them below valid bounds for platykurtic
  bases such as the uniform law.
* the second remainder addend carries the extra exp(B_chi) factor that
  the product form of psi_n requires.

A violation is reported only beyond a small float guard (the exact
inequality concerns real numbers; psi_n and eta are O(1) quantities
evaluated to ~1e-15).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cumulants import (
    EdgeworthSpec,
    epsilon_grid_suprema,
    eta_approximant,
    moments_to_cumulants,
    remainder_epsilon_k,
    rho_k,
    y0_threshold,
    _weighted_partitions,
)
from .initial_data import InitialDatum

__all__ = [
    "BaseAnalysis",
    "BoundCertificate",
    "LEMMA_IDS",
    "psi_n",
    "window_A",
    "compute_C4_star",
    "lemma2_constants",
    "p0k_coefficients",
    "p0k_tight",
    "a_k",
    "verify_lemma",
]

LEMMA_IDS = {
    "l1": "L1-punt4",
    "l1fast": "L1-fast",
    "l1der": "L1-der",
    "l2": "L2-punt",
    "l2der": "L2-der",
}

POINT_GUARD = 1e-12
DERIV_GUARD = 1e-10


def _ratio_expm1(c: float) -> float:
    """(e^c - 1)/c, continuous value 1 at c = 0."""
    return math.expm1(c) / c if c > 0.0 else 1.0


def _f_extremum(c: float) -> float:
    """max over |x| <= c of |e^x - 1 - x| / x^2 (1/2 at c = 0)."""
    return (math.expm1(c) - c) / (c * c) if c > 0.0 else 0.5


def _check_weights(weights) -> np.ndarray:
    c = np.asarray(weights, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("weights must be a nonempty 1-d array")
    if abs(float(c @ c) - 1.0) > 1e-9:
        raise ValueError(f"weights must satisfy sum c^2 = 1, got {float(c @ c)!r}")
    return c


def psi_n(base: InitialDatum, weights, xi):
    """cf of the standardized weighted sum: prod_j psi(c_j xi / sigma)."""
    if not base.symmetric:
        raise ValueError("the approximation bounds assume a symmetric base law")
    c = _check_weights(weights)
    x = np.atleast_1d(np.asarray(xi, dtype=float))
    vals = np.ones_like(x)
    s = base.sigma
    for cj in c:
        if cj != 0.0:
            vals = vals * np.real(base.cf(cj * x / s))
    return vals if np.ndim(xi) else float(vals[0])


def window_A(weights, base: InitialDatum, k: int = 4, delta: float = 0.0) -> float:
    """Validity window sigma*y0*(sum c^4)^(-1/(k+delta)); >= sigma*y0."""
    c = _check_weights(weights)
    s4 = float(np.sum(c**4))
    y0 = y0_threshold(base.sigma2, base.moment(4))
    return base.sigma * y0 * s4 ** (-1.0 / (k + delta))


@dataclass(frozen=True)
class BaseAnalysis:
    """Per-base quantities entering the bound constants: window, even
    cumulants, remainder suprema (plain and delta-Hoelder)."""

    datum: InitialDatum
    k: int
    delta: float
    y0: float
    kappa2r: tuple[float, ...]  # kappa_2 .. kappa_k
    kappa_tail: tuple[float, ...]  # kappa_{k+2} .. as far as the datum goes
    m_abs_kd: float
    M0: float
    M1: float
    M0_hoelder: float
    M1_hoelder: float

    @classmethod
    def from_datum(cls, d: InitialDatum, k: int, delta: float = 0.0) -> "BaseAnalysis":
        if not d.symmetric:
            raise ValueError("the approximation bounds assume a symmetric base law")
        if k < 4 or k % 2:
            raise ValueError("k must be an even integer >= 4")
        if not 0.0 <= delta < 2.0:
            raise ValueError("delta must lie in [0, 2)")
        kap = moments_to_cumulants(d.moments)
        kappa2r = tuple(float(kap[2 * r - 1]) for r in range(1, k // 2 + 1))
        kappa_tail = tuple(float(kap[2 * r - 1]) for r in range(k // 2 + 1, kap.size // 2 + 1))
        y0 = y0_threshold(d.sigma2, d.moment(4))
        psi = lambda x: np.real(d.cf(x))
        m0, m1 = epsilon_grid_suprema(psi, k, kappa2r=kappa2r, y0=y0, kappa_tail=kappa_tail)
        if delta > 0.0:
            m0d, m1d = epsilon_grid_suprema(
                psi, k, kappa2r=kappa2r, y0=y0, kappa_tail=kappa_tail, delta=delta
            )
        else:
            m0d, m1d = m0, m1
        if d.abs_moment is None:
            raise ValueError(f"datum {d.name!r} lacks absolute moments")
        return cls(
            datum=d,
            k=k,
            delta=delta,
            y0=y0,
            kappa2r=kappa2r,
            kappa_tail=kappa_tail,
            m_abs_kd=float(d.abs_moment(k + delta)),
            M0=m0,
            M1=m1,
            M0_hoelder=m0d,
            M1_hoelder=m1d,
        )

    @property
    def chi(self) -> int:
        return self.k // 2

    @property
    def sigma2(self) -> float:
        return self.datum.sigma2

    @property
    def sigma(self) -> float:
        return self.datum.sigma

    def psi(self, x):
        return np.real(self.datum.cf(x))

    def epsilon(self, x):
        return remainder_epsilon_k(
            self.psi, self.k, x, kappa2r=self.kappa2r, y0=self.y0, kappa_tail=self.kappa_tail
        )

    def rho(self, x):
        return rho_k(
            self.psi, self.k, x, kappa2r=self.kappa2r, y0=self.y0, kappa_tail=self.kappa_tail
        )

    def edgeworth_spec(self, weights) -> EdgeworthSpec:
        return EdgeworthSpec(
            chi=self.chi,
            delta=self.delta,
            weights=np.asarray(weights, dtype=float),
            sigma2=self.sigma2,
            m4=self.datum.moment(4),
            kappa2r=self.kappa2r,
        )

    @property
    def B_chi(self) -> float:
        return sum(
            abs(self.kappa2r[r - 1]) * self.y0 ** (2 * r) for r in range(2, self.chi + 1)
        )

    @property
    def W_chi(self) -> float:
        prod = 1.0
        for r in range(2, self.chi + 1):
            prod *= max(abs(self.kappa2r[r - 1]) / self.sigma2**r, 1.0)
        return prod**self.chi


def compute_C4_star(base: InitialDatum | BaseAnalysis) -> float:
    """Single constant serving the three k=4 bound variants.

    Assembled from the window, |kappa_4|, and the grid supremum of the
    log-remainder; the maximum of the pointwise and (4x) the derivative
    constant, so the same multiplier works in all three inequalities.
    """
    a = base if isinstance(base, BaseAnalysis) else BaseAnalysis.from_datum(base, k=4)
    if a.sigma2 <= 0.0:
        raise ValueError("degenerate base law")
    kap4 = abs(a.kappa2r[1])
    y4 = a.y0**4
    u_bar = kap4 * y4 / 24.0
    a2 = math.expm1(a.M0 * y4) / (a.sigma2**2 * y4)
    f_ext = _f_extremum(u_bar)
    c_point = math.exp(u_bar) * a2 + f_ext
    e_m0 = math.exp(a.M0 * y4)
    c_deriv = (
        a2 * (1.0 + kap4 / (24.0 * a.sigma2**2))
        + f_ext * e_m0
        + e_m0 * math.exp(u_bar) * 4.0 / a.sigma2**2
        + e_m0 * (a.kappa2r[1] ** 2 / (144.0 * a.sigma2**4)) * _ratio_expm1(u_bar)
    )
    return max(c_point, 4.0 * c_deriv)


def p0k_coefficients(k: int) -> np.ndarray:
    """Coefficients (ascending powers of |xi|) of the window polynomial
    1 + (1+xi^2) * [2 xi^2 + 2 xi^(2k-6) + 2^chi xi^(k-2) + 2^chi xi^(chi*k-k-2)]."""
    chi = k // 2
    inner = np.zeros(max(2, 2 * k - 6, k - 2, chi * k - k - 2) + 1)
    inner[2] += 2.0
    inner[2 * k - 6] += 2.0
    inner[k - 2] += 2.0**chi
    inner[chi * k - k - 2] += 2.0**chi
    poly = np.polynomial.polynomial.polymul(np.array([1.0, 0.0, 1.0]), inner)
    poly[0] += 1.0
    return poly


def p0k_tight(k: int, delta: float, xi) -> np.ndarray:
    """Tight pre-majorization window polynomial
    1 + xi^k [ (xi^2 + xi^{k-2})^2 + (xi^2 + xi^{k-2})^chi ] / |xi|^{k+delta};
    the coarse :func:`p0k_coefficients` form upper-bounds it everywhere.
    The downstream envelope 9*(1+|xi|^{2s^2-s}) (k = 2s, delta = 1, s >= 3)
    dominates this tight form on [0, sigma*y0], not the coarse one.
    """
    chi = k // 2
    x = np.abs(np.asarray(xi, dtype=float))
    base = x**2 + x ** (k - 2)
    out = np.ones_like(x)
    nz = x > 0.0
    out[nz] += x[nz] ** k * (base[nz] ** 2 + base[nz] ** chi) / x[nz] ** (k + delta)
    return out


def _qm_coefficients(a: BaseAnalysis, m: int) -> np.ndarray:
    """(1/m!) sum_{r=m}^{chi-1} (|kappa_{2r+2}|/sigma^{2r+2}) xi^{2r+2}."""
    coeffs = np.zeros(2 * a.chi + 1)
    for r in range(m, a.chi):
        coeffs[2 * r + 2] += abs(a.kappa2r[r]) / a.sigma2 ** (r + 1)
    return coeffs / math.factorial(m)


def _sl_coefficients(a: BaseAnalysis, l: int) -> np.ndarray:
    """sum_{r=chi-l}^{chi-1} |kappa_{2r+2}|/sigma^{2r+2} |xi|^{2r+1}."""
    coeffs = np.zeros(2 * a.chi)
    for r in range(a.chi - l, a.chi):
        coeffs[2 * r + 1] += abs(a.kappa2r[r]) / a.sigma2 ** (r + 1)
    return coeffs


def _taylor_tail_polynomial(a: BaseAnalysis) -> np.ndarray:
    """Majorant (coefficients in |xi|) of the xi-derivative of the
    Lagrange-remainder term of the exponential's Taylor polynomial."""
    polyval = np.polynomial.polynomial
    total = np.zeros(1)
    for l in range(1, a.chi + 1):
        sl = _sl_coefficients(a, l)
        if not sl.any():
            continue
        part_sum = np.zeros(1)
        for part in _weighted_partitions(l):
            term = np.ones(1)
            ok = True
            for m_idx, km in enumerate(part, start=1):
                if km:
                    qm = _qm_coefficients(a, m_idx)
                    if not qm.any():
                        ok = False
                        break
                    for _ in range(km):
                        term = polyval.polymul(term, qm)
                    term = term / math.factorial(km)
            if ok:
                part_sum = polyval.polyadd(part_sum, term)
        contrib = polyval.polymul(part_sum, sl) * (math.exp(a.B_chi) / math.factorial(a.chi - l))
        total = polyval.polyadd(total, contrib)
    return total


def lemma2_constants(a: BaseAnalysis) -> dict:
    """Constant kit for the general-order bounds (pointwise and
    derivative), built from the base analysis."""
    k, chi = a.k, a.chi
    e_b = math.exp(a.B_chi)
    t1 = e_b * float(chi) ** (chi * chi) * a.W_chi ** (chi - 1)
    remainder_scale = _ratio_expm1(a.M0 * a.y0**k) * 2.0 * a.m_abs_kd / (
        math.factorial(k) * a.sigma ** (k + a.delta)
    )
    t2 = e_b * remainder_scale
    c_star = max(t1, t2)
    g_chi = sum(
        abs(a.kappa2r[r]) * a.y0 ** (2 * r + 1) / (math.factorial(2 * r + 1) * a.sigma)
        for r in range(1, chi)
    )
    deriv_b = e_b * g_chi * remainder_scale  # multiplies |xi|^{k+delta}
    deriv_c = (
        e_b
        * math.exp(a.M0 * a.y0**k)
        * (k * a.M0_hoelder + a.M1_hoelder)
        / a.sigma ** (k + a.delta)
    )  # multiplies |xi|^{k-1+delta}
    return {
        "C_star": c_star,
        "T1": t1,
        "T2": t2,
        "G_chi": g_chi,
        "deriv_B": deriv_b,
        "deriv_C": deriv_c,
        "taylor_tail_poly": _taylor_tail_polynomial(a),
        "B_chi": a.B_chi,
        "W_chi": a.W_chi,
        "M0": a.M0,
        "M1": a.M1,
        "M0_hoelder": a.M0_hoelder,
        "M1_hoelder": a.M1_hoelder,
        "y0": a.y0,
    }


def _derived_p1k(a: BaseAnalysis, consts: dict) -> np.ndarray:
    """Derivative-bound polynomial in |xi| (coefficients ascending),
    normalized so the certificate RHS is
    C_star * p1k(|xi|) * |xi|^{k-1+delta} * exp(-xi^2/2) * sum|c|^{k+delta}.

    Assembled term by term from the derivative majorization; labeled
    'derived' in certificates since only its existence, not its form,
    is pinned down elsewhere.
    """
    polyval = np.polynomial.polynomial
    k = a.k
    c_star = consts["C_star"]
    # term A: |xi| * pointwise bound -> xi^2 * p0k
    p = polyval.polymul(np.array([0.0, 0.0, c_star]), p0k_coefficients(k))
    # term B: carries one extra power of |xi|
    p = polyval.polyadd(p, np.array([0.0, consts["deriv_B"]]))
    # term C: constant in the normalized variable
    p = polyval.polyadd(p, np.array([consts["deriv_C"]]))
    # term D: Taylor-tail polynomial divided by |xi|^{k-1+delta}; the
    # fractional part uses |xi|^{-delta} <= 1 + |xi|^{-2} (valid for
    # 0 <= delta < 2), i.e. two integer shifts.  Tail powers start at
    # k+3, so both shifts stay polynomial.
    tail = consts["taylor_tail_poly"]
    if tail.any():
        low = int(np.nonzero(np.abs(tail) > 0)[0][0])
        if low < k + 1:
            raise RuntimeError("tail polynomial has lower degree than expected")
        p = polyval.polyadd(p, tail[k - 1 :])
        if a.delta > 0.0:
            p = polyval.polyadd(p, tail[k + 1 :])
    return p / c_star


def a_k(a: BaseAnalysis) -> float:
    """Square-integral constant: max of the two weighted L2 norms of the
    window polynomials against exp(-xi^2)."""

    def half_line_integral(coeffs: np.ndarray) -> float:
        # int_R |xi|^n e^{-xi^2} d xi = Gamma((n+1)/2), term by term
        return float(
            sum(c * math.gamma((n + 1) / 2.0) for n, c in enumerate(coeffs) if c != 0.0)
        )

    polyval = np.polynomial.polynomial
    p0 = p0k_coefficients(a.k)
    consts = lemma2_constants(a)
    p1 = _derived_p1k(a, consts)
    one_plus = np.array([1.0, 0.0, 1.0])
    w0 = polyval.polymul(polyval.polymul(p0, p0), polyval.polymul(one_plus, one_plus))
    w0_full = np.concatenate([np.zeros(2 * a.k), w0])
    w1 = polyval.polymul(polyval.polymul(p1, p1), polyval.polymul(one_plus, one_plus))
    w1_full = np.concatenate([np.zeros(2 * a.k - 2), w1])
    return max(math.sqrt(half_line_integral(w0_full)), math.sqrt(half_line_integral(w1_full)))


@dataclass(frozen=True)
class BoundCertificate:
    """Result of one bound verification on a grid."""

    lemma: str
    base: str
    weights: np.ndarray
    window: float
    max_violation: float
    argmax_xi: float
    constants: dict = field(repr=False)
    n_grid: int = 0
    guard: float = POINT_GUARD

    @property
    def holds(self) -> bool:
        return self.max_violation <= 0.0


def _central_diff(f, x: np.ndarray, h: float) -> np.ndarray:
    return (f(x - 2 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2 * h)) / (12.0 * h)


def verify_lemma(
    lemma: str,
    base: InitialDatum,
    weights,
    k: Optional[int] = None,
    delta: float = 0.0,
    n_grid: int = 4001,
    analysis: Optional[BaseAnalysis] = None,
) -> BoundCertificate:
    """Evaluate one bound variant on a symmetric grid inside its window
    and report the worst LHS - RHS gap (<= 0 means the bound holds).

    ``lemma`` is one of l1 / l1fast / l1der (k = 4, delta = 0) or
    l2 / l2der (general even k with delta in [0, 2)).  ``analysis`` may
    carry precomputed per-base quantities.
    """
    if lemma not in LEMMA_IDS:
        raise ValueError(f"unknown lemma id {lemma!r}; expected one of {sorted(LEMMA_IDS)}")
    if n_grid < 2000:
        raise ValueError("need at least 2000 grid points")
    c = _check_weights(weights)
    if lemma.startswith("l1"):
        k, delta = 4, 0.0
    else:
        if k is None:
            raise ValueError("general-order variants need k")
        if k < 4 or k % 2:
            raise ValueError("k must be an even integer >= 4")
    if analysis is None:
        analysis = BaseAnalysis.from_datum(base, k=k, delta=delta)
    a = analysis
    sigma = a.sigma
    s4 = float(np.sum(c**4))
    window = sigma * a.y0 * s4 ** (-1.0 / (k + delta))
    if not np.isfinite(window) or window <= 0.0:
        raise ValueError("empty validity window")
    xi = np.linspace(-window, window, n_grid)

    spec = a.edgeworth_spec(c)
    eta = lambda x: np.asarray(eta_approximant(spec, x), dtype=float)
    psi = lambda x: np.asarray(psi_n(base, c, x), dtype=float)

    nz = c[c != 0.0]

    def weighted_eps_sum(x, power, func):
        out = np.zeros_like(x)
        for cj in nz:
            out += np.abs(cj) ** power * np.abs(func(cj * x / sigma))
        return out

    ax = np.abs(xi)
    gauss = np.exp(-0.5 * xi * xi)
    constants: dict = {"k": k, "delta": delta, "window": window, "y0": a.y0}
    guard = POINT_GUARD

    if lemma.startswith("l1"):
        c4 = compute_C4_star(a)
        constants["C4_star"] = c4
        s6 = float(np.sum(c**6))
        t_eps = weighted_eps_sum(xi, 4, a.epsilon)
        if lemma == "l1":
            lhs = np.abs(psi(xi) - eta(xi))
            rhs = c4 * xi**4 * gauss * (xi**4 * s4 + t_eps)
        elif lemma == "l1fast":
            lhs = np.abs(psi(xi) - eta(xi))
            rhs = c4 * xi**4 * (1.0 + xi**4) * gauss * (s6 + t_eps)
        else:  # l1der
            guard = DERIV_GUARD
            h = 1e-4 * window
            lhs = np.abs(_central_diff(psi, xi, h) - _central_diff(eta, xi, h))
            t_rho = weighted_eps_sum(xi, 4, a.rho)
            rhs = c4 * ax**3 * (1.0 + xi**6) * gauss * (s6 + t_eps + t_rho)
    else:
        consts = lemma2_constants(a)
        constants.update({k_: v for k_, v in consts.items() if k_ != "taylor_tail_poly"})
        c_star = consts["C_star"]
        skd = float(np.sum(np.abs(c) ** (k + delta)))
        p0 = np.polynomial.polynomial.polyval(ax, p0k_coefficients(k))
        if lemma == "l2":
            lhs = np.abs(psi(xi) - eta(xi))
            rhs = c_star * p0 * ax ** (k + delta) * gauss * skd
        else:  # l2der
            guard = DERIV_GUARD
            h = 1e-4 * window
            lhs = np.abs(_central_diff(psi, xi, h) - _central_diff(eta, xi, h))
            p1 = np.polynomial.polynomial.polyval(ax, _derived_p1k(a, consts))
            rhs = c_star * p1 * ax ** (k - 1 + delta) * gauss * skd

    gap = lhs - rhs - guard
    imax = int(np.argmax(gap))
    return BoundCertificate(
        lemma=LEMMA_IDS[lemma],
        base=base.name,
        weights=c,
        window=window,
        max_violation=float(gap[imax]),
        argmax_xi=float(xi[imax]),
        constants=constants,
        n_grid=n_grid,
        guard=guard,
    )
