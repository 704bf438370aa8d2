"""Catalog of initial velocity laws.

Each entry carries the density (when one exists), the characteristic
function with an analytic derivative, raw moments to order 12 in closed
form, a sampler, and fractional absolute moments.  The catalog covers
every hypothesis combination the rate experiments need: nonzero excess
kurtosis (uniform, Laplace), zero fourth cumulant with nonzero sixth
(the uniform/Laplace mixture), exactly-Gaussian, odd perturbations of
the Gaussian, an atomic two-point law (tree/Wild tests only), and
user-supplied tabulated densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .cumulants import moments_to_cumulants

__all__ = [
    "InitialDatum",
    "SignedPerturbation",
    "TailCheck",
    "gaussian",
    "uniform",
    "laplace",
    "two_point",
    "make_zero_kurtosis_mixture",
    "make_odd_perturbed_gaussian",
    "from_table",
    "symmetrize",
    "kappa4_symmetrized",
    "check_tail_condition",
    "datum_from_config",
]

MOMENT_ORDER = 12

MIXTURE_UNIFORM_WEIGHT = 5.0 / 7.0  # balances kappa4 = -6/5 against +3 of Laplace(b^2 = 1/2)


@dataclass(frozen=True)
class InitialDatum:
    """A probability law on the line, as used by the solvers and samplers.

    ``moments[r-1]`` is the raw moment of order r; ``sigma2`` is the raw
    second moment (the conserved energy, regardless of the mean).
    """

    name: str
    cf: Callable[[np.ndarray], np.ndarray]
    moments: np.ndarray
    symmetric: bool
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    cf_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None
    abs_moment: Optional[Callable[[float], float]] = None
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    tail_order_p: Optional[float] = None
    grid_hint: Optional[tuple[int, float]] = None  # (n_points, xi_max) solver override

    def __post_init__(self):
        m = np.asarray(self.moments, dtype=float)
        object.__setattr__(self, "moments", m)
        if m.size < 2 or m[1] <= m[0] ** 2:
            raise ValueError("need a nondegenerate law with m2 > m1^2")
        if self.symmetric and np.max(np.abs(m[0::2])) != 0.0:
            raise ValueError("symmetric law must have exactly zero odd moments")

    @property
    def sigma2(self) -> float:
        return float(self.moments[1])

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def cumulants(self) -> np.ndarray:
        return moments_to_cumulants(self.moments)

    def moment(self, r: int) -> float:
        return float(self.moments[r - 1])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler is None:
            raise ValueError(f"datum {self.name!r} has no sampler")
        return self.sampler(rng, size)


@dataclass(frozen=True)
class SignedPerturbation:
    """Gaussian base plus an odd signed part o(-v) = -o(v).

    ``datum`` is the perturbed law itself; its symmetrization is exactly
    the base Gaussian, and the initial distance to equilibrium is
    ``abs_odd_mass / 2`` in total variation.
    """

    base: InitialDatum
    datum: InitialDatum
    epsilon: float
    odd_part: Callable[[np.ndarray], np.ndarray]
    abs_odd_mass: float


# ---------------------------------------------------------------------------
# catalog entries
# ---------------------------------------------------------------------------


def _double_factorial(n: int) -> int:
    out = 1
    for k in range(n, 0, -2):
        out *= k
    return out


def gaussian(sigma: float = 1.0) -> InitialDatum:
    sigma = float(sigma)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    s2 = sigma * sigma
    m = np.zeros(MOMENT_ORDER)
    for r in range(2, MOMENT_ORDER + 1, 2):
        m[r - 1] = _double_factorial(r - 1) * s2 ** (r // 2)

    def cf(xi):
        return np.exp(-0.5 * s2 * np.asarray(xi, dtype=float) ** 2)

    def cf_prime(xi):
        x = np.asarray(xi, dtype=float)
        return -s2 * x * np.exp(-0.5 * s2 * x * x)

    def density(v):
        v = np.asarray(v, dtype=float)
        return np.exp(-0.5 * v * v / s2) / math.sqrt(2.0 * math.pi * s2)

    return InitialDatum(
        name=f"gaussian(sigma={sigma:g})",
        cf=cf,
        cf_prime=cf_prime,
        density=density,
        moments=m,
        symmetric=True,
        abs_moment=lambda r: sigma**r * 2.0 ** (r / 2.0) * math.gamma((r + 1.0) / 2.0) / math.sqrt(math.pi),
        sampler=lambda rng, size: rng.normal(0.0, sigma, size),
        tail_order_p=None,  # decays faster than any power
        grid_hint=(4096, 20.0 * max(sigma, 1.0 / sigma)),
    )


def uniform(sigma: float = 1.0) -> InitialDatum:
    """Uniform law on [-a, a] with a = sqrt(3)*sigma (variance sigma^2)."""
    sigma = float(sigma)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    a = math.sqrt(3.0) * sigma
    m = np.zeros(MOMENT_ORDER)
    for r in range(2, MOMENT_ORDER + 1, 2):
        m[r - 1] = a**r / (r + 1.0)

    def cf(xi):
        x = np.asarray(xi, dtype=float)
        return np.sinc(a * x / math.pi)

    def cf_prime(xi):
        u = a * np.asarray(xi, dtype=float)
        small = np.abs(u) < 1e-4
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a * (u * np.cos(u) - np.sin(u)) / (u * u)
        series = a * (-u / 3.0) * (1.0 - u * u / 10.0)
        return np.where(small, series, out)

    def density(v):
        v = np.asarray(v, dtype=float)
        return np.where(np.abs(v) <= a, 1.0 / (2.0 * a), 0.0)

    return InitialDatum(
        name=f"uniform(sigma={sigma:g})",
        cf=cf,
        cf_prime=cf_prime,
        density=density,
        moments=m,
        symmetric=True,
        abs_moment=lambda r: a**r / (r + 1.0),
        sampler=lambda rng, size: rng.uniform(-a, a, size),
        tail_order_p=1.0,
    )


def laplace(b: float = 1.0 / math.sqrt(2.0)) -> InitialDatum:
    """Laplace law with scale b (variance 2*b^2); default has unit variance."""
    b = float(b)
    if b <= 0:
        raise ValueError("scale must be positive")
    m = np.zeros(MOMENT_ORDER)
    for r in range(2, MOMENT_ORDER + 1, 2):
        m[r - 1] = math.factorial(r) * b**r

    def cf(xi):
        x = np.asarray(xi, dtype=float)
        return 1.0 / (1.0 + (b * x) ** 2)

    def cf_prime(xi):
        x = np.asarray(xi, dtype=float)
        return -2.0 * b * b * x / (1.0 + (b * x) ** 2) ** 2

    def density(v):
        v = np.asarray(v, dtype=float)
        return np.exp(-np.abs(v) / b) / (2.0 * b)

    return InitialDatum(
        name=f"laplace(b={b:g})",
        cf=cf,
        cf_prime=cf_prime,
        density=density,
        moments=m,
        symmetric=True,
        abs_moment=lambda r: math.gamma(r + 1.0) * b**r,
        sampler=lambda rng, size: rng.laplace(0.0, b, size),
        tail_order_p=2.0,
    )


def two_point(c: float = 1.0) -> InitialDatum:
    """Atoms at +-c.  No density; fails the cf tail condition.  Used for
    tree/Wild tests only, never for total-variation experiments."""
    c = float(c)
    if c <= 0:
        raise ValueError("atom location must be positive")
    m = np.zeros(MOMENT_ORDER)
    for r in range(2, MOMENT_ORDER + 1, 2):
        m[r - 1] = c**r

    def cf(xi):
        return np.cos(c * np.asarray(xi, dtype=float))

    return InitialDatum(
        name=f"two_point(c={c:g})",
        cf=cf,
        cf_prime=lambda xi: -c * np.sin(c * np.asarray(xi, dtype=float)),
        density=None,
        moments=m,
        symmetric=True,
        abs_moment=lambda r: c**r,
        sampler=lambda rng, size: c * (2.0 * rng.integers(0, 2, size) - 1.0),
        tail_order_p=None,
    )


def make_zero_kurtosis_mixture() -> InitialDatum:
    """Variance-1 mixture (5/7)*uniform + (2/7)*Laplace(b=1/sqrt(2)).

    The uniform component contributes kappa4 = -6/5 and the Laplace
    component +3, so the fourth cumulant vanishes exactly while all
    moments stay finite and the sixth cumulant does not vanish.
    """
    w = MIXTURE_UNIFORM_WEIGHT
    u = uniform(1.0)
    l = laplace(1.0 / math.sqrt(2.0))
    m = w * u.moments + (1.0 - w) * l.moments

    def cf(xi):
        return w * u.cf(xi) + (1.0 - w) * l.cf(xi)

    def cf_prime(xi):
        return w * u.cf_prime(xi) + (1.0 - w) * l.cf_prime(xi)

    def density(v):
        return w * u.density(v) + (1.0 - w) * l.density(v)

    def sampler(rng, size):
        pick = rng.random(size) < w
        out = np.where(pick, u.sampler(rng, size), l.sampler(rng, size))
        return out

    return InitialDatum(
        name="mixture_zero_k4",
        cf=cf,
        cf_prime=cf_prime,
        density=density,
        moments=m,
        symmetric=True,
        abs_moment=lambda r: w * u.abs_moment(r) + (1.0 - w) * l.abs_moment(r),
        sampler=sampler,
        tail_order_p=1.0,
    )


def max_odd_amplitude(sigma: float = 1.0) -> float:
    """Largest epsilon keeping g_sigma(v) + eps*v*exp(-v^2/sigma^2) >= 0."""
    # minimum of g_sigma(v) / (v e^{-v^2/sigma^2}) over v > 0 sits at v = sigma
    return math.exp(0.5) / (sigma * sigma * math.sqrt(2.0 * math.pi))


def make_odd_perturbed_gaussian(sigma: float = 1.0, epsilon: float = 0.3) -> SignedPerturbation:
    """Gaussian gamma_sigma plus the odd part eps * v * exp(-v^2/sigma^2).

    The perturbed density must stay nonnegative; amplitudes above
    :func:`max_odd_amplitude` are rejected (the error reports the cap).
    The integral of |odd part| is eps*sigma^2, so the initial TV distance
    to equilibrium is eps*sigma^2/2 in closed form.
    """
    sigma = float(sigma)
    epsilon = float(epsilon)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    cap = max_odd_amplitude(sigma)
    if abs(epsilon) > cap * (1.0 + 1e-12):
        raise ValueError(
            f"|epsilon| = {abs(epsilon):g} makes the density negative; "
            f"maximal admissible amplitude is {cap:g}"
        )
    base = gaussian(sigma)
    s2 = sigma * sigma

    def odd_part(v):
        v = np.asarray(v, dtype=float)
        return epsilon * v * np.exp(-v * v / s2)

    # grid check of nonnegativity (belt and braces on top of the closed form)
    vg = np.linspace(-10.0 * sigma, 10.0 * sigma, 4001)
    dens_g = base.density(vg) + odd_part(vg)
    if dens_g.min() < -1e-15:
        raise ValueError("perturbed density is negative on the check grid")

    def density(v):
        return base.density(v) + odd_part(v)

    # Fourier transform of v*exp(-v^2/s2) is i*xi*(sqrt(pi)*sigma^3/2)*exp(-s2*xi^2/4)
    amp = epsilon * math.sqrt(math.pi) * sigma**3 / 2.0

    def cf(xi):
        x = np.asarray(xi, dtype=float)
        return np.exp(-0.5 * s2 * x * x) + 1j * amp * x * np.exp(-0.25 * s2 * x * x)

    def cf_prime(xi):
        x = np.asarray(xi, dtype=float)
        g = np.exp(-0.5 * s2 * x * x)
        h = np.exp(-0.25 * s2 * x * x)
        return -s2 * x * g + 1j * amp * (1.0 - 0.5 * s2 * x * x) * h

    m = base.moments.copy()
    for r in range(1, MOMENT_ORDER + 1, 2):
        half = (r - 1) // 2  # m_r = eps * Gamma(half + 3/2) * sigma^(r+2)
        m[r - 1] = epsilon * math.gamma(half + 1.5) * sigma ** (r + 2)

    accept_bound = 1.0 + abs(epsilon) * s2 * math.sqrt(2.0 * math.pi) * math.exp(-0.5)

    def sampler(rng, size):
        out = np.empty(size)
        have = 0
        while have < size:
            n = size - have
            v = rng.normal(0.0, sigma, n)
            u = rng.random(n)
            ratio = 1.0 + epsilon * sigma * math.sqrt(2.0 * math.pi) * v * np.exp(
                -0.5 * v * v / s2
            )
            keep = v[u * accept_bound <= ratio]
            out[have : have + keep.size] = keep
            have += keep.size
        return out

    datum = InitialDatum(
        name=f"odd_perturbed(sigma={sigma:g},eps={epsilon:g})",
        cf=cf,
        cf_prime=cf_prime,
        density=density,
        moments=m,
        symmetric=bool(epsilon == 0.0),
        abs_moment=base.abs_moment,  # the odd part integrates |v|^r against an odd function
        sampler=sampler,
        tail_order_p=None,
        grid_hint=(4096, 25.0 * max(sigma, 1.0 / sigma)),
    )
    return SignedPerturbation(
        base=base,
        datum=datum,
        epsilon=epsilon,
        odd_part=odd_part,
        abs_odd_mass=abs(epsilon) * s2,
    )


def from_table(v_nodes, f_values, name: str = "table") -> InitialDatum:
    """Tabulated density on a grid; cf/moments/sampler built numerically."""
    v = np.asarray(v_nodes, dtype=float)
    f = np.asarray(f_values, dtype=float)
    if v.ndim != 1 or v.size < 8 or np.any(np.diff(v) <= 0):
        raise ValueError("need an increasing grid with at least 8 nodes")
    if np.any(f < 0):
        raise ValueError("density values must be nonnegative")
    mass = np.trapezoid(f, v)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"tabulated density integrates to {mass:g}, not 1")
    f = f / mass

    moments = np.array([np.trapezoid(v**r * f, v) for r in range(1, MOMENT_ORDER + 1)])
    sym = bool(np.max(np.abs(moments[0::2])) < 1e-12)
    if sym:
        moments[0::2] = 0.0

    def cf(xi):
        x = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.trapezoid(f[None, :] * np.exp(1j * x[:, None] * v[None, :]), v, axis=1)
        return out if np.ndim(xi) else complex(out[0])

    def density(x):
        return np.interp(np.asarray(x, dtype=float), v, f, left=0.0, right=0.0)

    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(v))])
    cdf /= cdf[-1]

    def sampler(rng, size):
        return np.interp(rng.random(size), cdf, v)

    return InitialDatum(
        name=name,
        cf=cf,
        density=density,
        moments=moments,
        symmetric=sym,
        abs_moment=lambda r: float(np.trapezoid(np.abs(v) ** r * f, v)),
        sampler=sampler,
        tail_order_p=None,
    )


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def symmetrize(d: InitialDatum) -> InitialDatum:
    """Even part of the law: density (f(x)+f(-x))/2, cf Re(phi)."""
    if d.symmetric:
        return d
    m = d.moments.copy()
    m[0::2] = 0.0

    def cf(xi):
        return np.real(d.cf(xi)) + 0.0j

    density = None
    if d.density is not None:
        base_density = d.density
        density = lambda v: 0.5 * (base_density(np.asarray(v)) + base_density(-np.asarray(v)))

    cf_prime = None
    if d.cf_prime is not None:
        base_prime = d.cf_prime
        cf_prime = lambda xi: np.real(base_prime(xi)) + 0.0j

    sampler = None
    if d.sampler is not None:
        base_sampler = d.sampler

        def sampler(rng, size):
            return base_sampler(rng, size) * (2.0 * rng.integers(0, 2, size) - 1.0)

    return InitialDatum(
        name=f"symmetrized({d.name})",
        cf=cf,
        cf_prime=cf_prime,
        density=density,
        moments=m,
        symmetric=True,
        abs_moment=d.abs_moment,
        sampler=sampler,
        tail_order_p=d.tail_order_p,
        grid_hint=d.grid_hint,
    )


def kappa4_symmetrized(d: InitialDatum) -> float:
    """Fourth cumulant of the symmetrized law: m4 - 3*m2^2."""
    if d.moments.size < 4 or not np.isfinite(d.moments[3]):
        raise ValueError("fourth moment unavailable")
    return float(d.moments[3] - 3.0 * d.moments[1] ** 2)


@dataclass(frozen=True)
class TailCheck:
    """Grid verdict on cf decay.  Heuristic: a finite grid can witness
    but never prove an asymptotic bound."""

    holds: bool
    p: float
    L_p: float
    xi_max: float
    note: str = "heuristic grid verdict, not a proof"


def check_tail_condition(d: InitialDatum, p: float, xi_max: float = 50.0, n_grid: int = 20_000) -> TailCheck:
    """Estimate L_p = sup |xi|^p |phi(xi)| on [1, xi_max] and check that
    the envelope is not growing toward the grid edge."""
    if p <= 0 or xi_max <= 2.0:
        raise ValueError("need p > 0 and xi_max > 2")
    x = np.linspace(1.0, xi_max, n_grid)
    s = x**p * np.abs(d.cf(x))
    lp = float(s.max())
    half = n_grid // 2
    m_lo = float(s[:half].max())
    m_hi = float(s[half:].max())
    holds = m_hi <= m_lo * (1.0 + 1e-3)
    return TailCheck(holds=holds, p=float(p), L_p=lp, xi_max=float(xi_max))


# ---------------------------------------------------------------------------
# config-file construction
# ---------------------------------------------------------------------------

_KINDS = ("gaussian", "uniform", "laplace", "two_point", "mixture_zero_k4", "odd_perturbed", "table")


def datum_from_config(options: dict) -> InitialDatum:
    """Build a catalog entry from a flat key/value mapping (one ``[datum]``
    config block): ``kind`` plus kind-specific scalars."""
    opts = {k.strip(): str(v).strip() for k, v in options.items()}
    kind = opts.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown datum kind {kind!r}; expected one of {_KINDS}")
    if kind == "gaussian":
        return gaussian(float(opts.get("sigma", 1.0)))
    if kind == "uniform":
        return uniform(float(opts.get("sigma", 1.0)))
    if kind == "laplace":
        return laplace(float(opts.get("b", 1.0 / math.sqrt(2.0))))
    if kind == "two_point":
        return two_point(float(opts.get("c", 1.0)))
    if kind == "mixture_zero_k4":
        return make_zero_kurtosis_mixture()
    if kind == "odd_perturbed":
        pert = make_odd_perturbed_gaussian(
            sigma=float(opts.get("sigma", 1.0)), epsilon=float(opts.get("epsilon", 0.3))
        )
        return pert.datum
    table = np.loadtxt(opts["path"], delimiter=",")
    return from_table(table[:, 0], table[:, 1], name=opts.get("name", "table"))
