"""Formal heat-kernel coefficients on radial model geometries.

The model operator acts on radial functions as

    B = -d_r^2 - ((n - 1)/r) d_r + W(r),

and the coefficients of the formal kernel ``q_t(r) sum_i t^i Theta_i(r)`` with
``q_t(r) = (4 pi t)^{-n/2} exp(-r^2/4t)`` solve

    Theta_0 = 1,   Theta_i(r) = -int_0^1 u^{i-1} (B Theta_{i-1})(r u) du.

Every ``Theta_i`` is even in ``r`` and is stored as a Taylor polynomial in
``rho = r^2``; there ``B g = -4 rho g'' - 2 n g' + W g``.

Curved models conjugate the Laplacian of a metric with radial volume ratio
``J(r) = (s(r)/r)^(n-1)`` by ``J^{1/2}``, which gives the potential
``W = l''/2 + l'^2/4 + (n-1) l'/(2r)`` with ``l = log J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.special import zeta

from .errors import DomainError, FitError, ToleranceError

KINDS = ("flat", "flat-plus-potential", "radial-curved")
PROFILES = ("sphere", "hyperbolic")
NOISE_FLOOR = 1e-14


def _xcot_coeffs(profile: str, terms: int) -> np.ndarray:
    # x cot x = 1 - 2 sum zeta(2k) (x/pi)^{2k};  x coth x alternates the signs
    k = np.arange(1, terms)
    tail = -2 * zeta(2 * k) / np.pi ** (2 * k)
    if profile == "hyperbolic":
        tail = tail * (-1.0) ** k
    return np.concatenate([[1.0], tail])


def curved_potential_series(profile: str, n: int, terms: int = 80) -> Polynomial:
    """Taylor series in ``rho = r^2`` of the potential of a space-form model."""
    if profile not in PROFILES:
        raise DomainError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    m = n - 1
    P = Polynomial(_xcot_coeffs(profile, terms + 1)[1:])  # (x cot x - 1)/x^2
    rho = Polynomial([0.0, 1.0])
    W = 0.5 * m * (P + 2 * rho * P.deriv()) + 0.25 * m * m * (rho * P * P + 2 * P)
    return W.cutdeg(terms - 1)


@dataclass(frozen=True)
class ModelGeometry:
    """Radial model for the heat-coefficient recursion.

    Parameters
    ----------
    n : int
        Dimension.
    kind : str
        ``"flat"``, ``"flat-plus-potential"`` or ``"radial-curved"``.
    c : float
        Constant potential for ``flat-plus-potential``.
    profile : str
        ``"sphere"`` or ``"hyperbolic"`` for ``radial-curved``.
    kappa : float
        Cutoff radius.
    order : int
        Number of Taylor coefficients in ``rho`` kept for the potential.
    mesh_points : int
        Number of radial samples stored in the table.
    """

    n: int
    kind: str = "flat"
    c: float = 0.0
    profile: str = "sphere"
    kappa: float = 1.0
    order: int = 80
    mesh_points: int = 201

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("dimension must be positive")
        if self.kind not in KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")
        if self.kind == "radial-curved":
            if self.profile not in PROFILES:
                raise DomainError(f"unknown profile {self.profile!r}")
            if self.kappa >= 2.0:
                raise DomainError("curved models need kappa < 2 for the series potential")
        if self.order < 8 or self.mesh_points < 9:
            raise DomainError("order and mesh too coarse")

    def potential_series(self) -> Polynomial:
        if self.kind == "flat":
            return Polynomial([0.0])
        if self.kind == "flat-plus-potential":
            return Polynomial([float(self.c)])
        return curved_potential_series(self.profile, self.n, self.order)

    def potential(self) -> Callable[[np.ndarray], np.ndarray]:
        W = self.potential_series()
        return lambda rho: W(np.asarray(rho, dtype=float))

    def radial_mesh(self) -> np.ndarray:
        return np.linspace(0.0, self.kappa, self.mesh_points)

    def refined(self, factor: int = 2) -> "ModelGeometry":
        return ModelGeometry(self.n, self.kind, self.c, self.profile, self.kappa,
                             self.order * factor, (self.mesh_points - 1) * factor + 1)


def apply_B(g: Polynomial, W: Polynomial, n: int, order: int) -> Polynomial:
    """``-4 rho g'' - 2 n g' + W g`` in the variable ``rho = r^2``."""
    rho = Polynomial([0.0, 1.0])
    out = -4 * rho * g.deriv(2) - 2 * n * g.deriv(1) + W * g
    return out.cutdeg(max(order - 1, 0)) if out.degree() >= order else out


def radial_integral(Bg: Polynomial, i: int) -> Polynomial:
    """``-int_0^1 u^{i-1} Bg(rho u^2) du`` term by term."""
    k = np.arange(len(Bg.coef))
    return Polynomial(-Bg.coef / (i + 2 * k))


@dataclass(frozen=True)
class HeatCoefficientTable:
    """Coefficients ``Theta_0 .. Theta_N`` of one model geometry.

    The models carry a trivial line bundle, so coefficients are scalars.
    ``series[i]`` is the Taylor polynomial of ``Theta_i`` in ``rho = r^2``.
    """

    geometry: ModelGeometry
    N: int
    series: tuple
    r_mesh: np.ndarray
    theta: np.ndarray
    C_norms: np.ndarray

    def theta_at(self, i: int, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.series[i](r * r)


def _quad_check(Bg: Polynomial, i: int, rho: float, tol: float) -> float:
    val, err = quad(lambda u: u ** (i - 1) * Bg(rho * u * u), 0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    if not err <= max(tol, tol * abs(val)) * 10:
        raise ToleranceError(f"adaptive quadrature for Theta_{i} did not converge (err {err:.3g})")
    return -val


def solve_theta_recursion(geom: ModelGeometry, N: int, tol: float = 1e-10, checks: int = 5) -> HeatCoefficientTable:
    """Solve the transport recursion up to ``Theta_N``.

    The radial integral acts diagonally on Taylor coefficients in ``rho``.
    At ``checks`` mesh radii it is recomputed by adaptive quadrature; a
    mismatch beyond ``tol`` raises :class:`ToleranceError`.
    """
    if N < 0:
        raise DomainError("N must be nonnegative")
    if N >= geom.order // 2:
        raise DomainError(f"N={N} needs order > {2 * N}")
    W = geom.potential_series()
    r = geom.radial_mesh()
    probe = np.linspace(0.0, geom.kappa, checks) ** 2
    series = [Polynomial([1.0])]
    for i in range(1, N + 1):
        Bg = apply_B(series[-1], W, geom.n, geom.order - i)
        new = radial_integral(Bg, i)
        scale = max(1.0, float(np.max(np.abs(new(r * r)))))
        for rho in probe:
            if abs(_quad_check(Bg, i, rho, tol * 1e-2) - new(rho)) > tol * scale:
                raise ToleranceError(f"Theta_{i} disagrees with adaptive quadrature at rho={rho}")
        series.append(new)
    theta = np.array([s(r * r) for s in series])
    C = np.array([_ck_norm(s, i, r) for i, s in enumerate(series)])
    for a in (r, theta, C):
        a.flags.writeable = False
    return HeatCoefficientTable(geom, N, tuple(series), r, theta, C)


def _ck_norm(g: Polynomial, k: int, r: np.ndarray) -> float:
    """Sampled sup over the mesh of ``|d_r^j Theta|`` for ``j <= k``."""
    h = Polynomial(np.zeros(2 * len(g.coef) - 1))
    h.coef[::2] = g.coef  # Theta as an even polynomial in r
    best = float(np.max(np.abs(h(r))))
    for _ in range(k):
        h = h.deriv()
        best = max(best, float(np.max(np.abs(h(r)))))
    return best


def recursion_defect(table: HeatCoefficientTable) -> float:
    """Max over the mesh and ``i`` of ``|i Theta_i + r Theta_i' + B Theta_{i-1}|``.

    In ``rho`` the transport term ``r d_r`` becomes ``2 rho d_rho``.
    """
    geom = table.geometry
    W = geom.potential_series()
    rho = table.r_mesh**2
    worst = 0.0
    for i in range(1, table.N + 1):
        g = table.series[i]
        Bg = apply_B(table.series[i - 1], W, geom.n, geom.order - i)
        lhs = i * g(rho) + 2 * rho * g.deriv()(rho) + Bg(rho)
        worst = max(worst, float(np.max(np.abs(lhs))))
    return worst


# ---------------------------------------------------------------------------
# Borel summation

def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """Smooth monotone step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    a = _psi(x)
    return a / (a + _psi(1.0 - np.asarray(x, dtype=float)))


def bump(x):
    """Smooth even bump: 1 on ``|x| <= 1/2``, 0 on ``|x| >= 1``."""
    x = np.abs(np.asarray(x, dtype=float))
    return 1.0 - smooth_step(2.0 * x - 1.0)


@dataclass(frozen=True)
class BorelData:
    """Bound sequence and cutoffs for the Borel-summed kernel."""

    b: tuple
    kappa: float

    def __post_init__(self):
        b = tuple(float(x) for x in self.b)
        if any(x < 1 for x in b) or any(y < x for x, y in zip(b, b[1:])):
            raise DomainError("b must be nondecreasing with entries >= 1")
        object.__setattr__(self, "b", b)

    def beta(self, x):
        return bump(x)

    def chi(self, r):
        """1 for ``r <= kappa/2``, 0 for ``r >= kappa``."""
        return 1.0 - smooth_step(2.0 * np.asarray(r, dtype=float) / self.kappa - 1.0)


def raw_bound_sequence(table: HeatCoefficientTable, safety: float = 2.0) -> np.ndarray:
    """``max(2 * safety * C_{i,i}, 1)`` before enforcing monotonicity."""
    return np.maximum(2.0 * safety * np.asarray(table.C_norms), 1.0)


def estimate_bound_sequence(table: HeatCoefficientTable, safety: float = 2.0) -> tuple:
    """Nondecreasing bound sequence built from sampled ``C_{i,i}`` norms."""
    return tuple(np.maximum.accumulate(raw_bound_sequence(table, safety)).tolist())


def borel_data(table: HeatCoefficientTable, safety: float = 2.0) -> BorelData:
    return BorelData(estimate_bound_sequence(table, safety), table.geometry.kappa)


def q_t(t: float, r, n: int):
    r = np.asarray(r, dtype=float)
    return (4 * math.pi * t) ** (-n / 2) * np.exp(-r * r / (4 * t))


def borel_sum(table: HeatCoefficientTable, bdata: BorelData, t: float, r, N: int | None = None):
    """``chi(r) q_t(r) sum_{i<=N} beta(b_i t) t^i Theta_i(r)``."""
    if not t > 0:
        raise DomainError("t must be positive")
    N = table.N if N is None else N
    if N > table.N or N >= len(bdata.b):
        raise DomainError(f"N={N} exceeds the table or the bound sequence")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > table.geometry.kappa):
        raise DomainError("r must lie in [0, kappa]")
    acc = np.zeros_like(r)
    for i in range(N + 1):
        w = float(bdata.beta(bdata.b[i] * t))
        if w != 0.0:
            acc = acc + w * t**i * table.theta_at(i, r)
    return bdata.chi(r) * q_t(t, r, table.geometry.n) * acc


def partial_sum(table: HeatCoefficientTable, t: float, r, N: int | None = None):
    """Un-bumped ``q_t(r) sum_{i<=N} t^i Theta_i(r)`` (no spatial cutoff)."""
    N = table.N if N is None else N
    r = np.asarray(r, dtype=float)
    acc = sum(t**i * table.theta_at(i, r) for i in range(N + 1))
    return q_t(t, r, table.geometry.n) * acc


# ---------------------------------------------------------------------------
# residual order

def _dbeta(x, h=1e-6):
    return (bump(x + h) - bump(x - h)) / (2 * h)


def _weights(bdata: BorelData, t: float, N: int):
    w = np.array([float(bdata.beta(bdata.b[i] * t)) for i in range(N + 1)])
    dw = np.array([float(_dbeta(bdata.b[i] * t)) * bdata.b[i] for i in range(N + 1)])
    return w, dw


def kernel_residual(table: HeatCoefficientTable, bdata: BorelData, t: float, N: int,
                    method: str = "taylor", h: float | None = None) -> float:
    """Sup over ``r <= kappa/2`` of ``|(d_t + B)(q_t S)|`` with ``S`` truncated at ``N``.

    Uses ``(d_t + B)(q S) = q (d_t S + (r/t) d_r S + B S)``.  The time
    derivative of ``S`` is exact.  With ``method="taylor"`` the radial
    derivatives come from the Taylor polynomials; ``method="fd"`` uses
    fourth-order central differences with ``S`` continued evenly through 0.
    """
    geom = table.geometry
    n = geom.n
    M = (geom.mesh_points - 1) // 2
    h = geom.kappa / 2 / M if h is None else h
    r = np.arange(M + 1) * h
    w, dw = _weights(bdata, t, N)
    S = sum(w[i] * t**i * table.series[i] for i in range(N + 1))
    S_t = sum((w[i] * i * t ** (i - 1) if i else 0.0) * table.series[i] + dw[i] * t**i * table.series[i]
              for i in range(N + 1))
    rho = r * r
    if method == "taylor":
        W = geom.potential_series()
        inner = S_t(rho) + 2 * rho * S.deriv()(rho) / t + apply_B(S, W, n, 10 * geom.order)(rho)
    elif method == "fd":
        ext = np.arange(-2, M + 3) * h
        s = S(ext * ext)
        d1 = (-s[4:] + 8 * s[3:-1] - 8 * s[1:-3] + s[:-4]) / (12 * h)
        d2 = (-s[4:] + 16 * s[3:-1] - 30 * s[2:-2] + 16 * s[1:-3] - s[:-4]) / (12 * h * h)
        lap = np.empty_like(r)
        lap[0] = -n * d2[0]
        lap[1:] = -d2[1:] - (n - 1) / r[1:] * d1[1:]
        inner = S_t(rho) + (r / t) * d1 + lap + geom.potential()(rho) * s[2:-2]
    else:
        raise DomainError(f"unknown method {method!r}")
    return float(np.max(np.abs(q_t(t, r, n) * inner)))


@dataclass(frozen=True)
class ResidualFit:
    """Fitted power of ``t``; samples under the noise floor are left out of the fit."""

    slope: float | None
    floor: bool
    t_grid: tuple
    residuals: tuple


def heat_residual_order(geom: ModelGeometry, bdata: BorelData | None, N: int, t_grid: Sequence[float],
                        table: HeatCoefficientTable | None = None, method: str = "taylor") -> ResidualFit:
    """Fit the power of ``t`` in the heat-equation residual of the truncated kernel."""
    t_grid = tuple(float(t) for t in t_grid)
    if len(t_grid) < 2 or any(t <= 0 for t in t_grid):
        raise DomainError("t_grid needs at least two positive times")
    if table is None or table.N < N:
        table = solve_theta_recursion(geom, N)
    if bdata is None:
        bdata = borel_data(table)
    res = tuple(kernel_residual(table, bdata, t, N, method) for t in t_grid)
    keep = [k for k, v in enumerate(res) if v >= NOISE_FLOOR]
    if len(keep) < 2:
        return ResidualFit(None, True, t_grid, res)
    lt = np.log([t_grid[k] for k in keep])
    slope = float(np.polyfit(lt, np.log([res[k] for k in keep]), 1)[0])
    return ResidualFit(slope, False, t_grid, res)


# ---------------------------------------------------------------------------
# constant term

@dataclass(frozen=True)
class ConstantTermFit:
    value: complex
    coefficients: dict
    condition: float


def asymptotic_constant_term(samples: Sequence[tuple[float, complex]], model_powers: Sequence[float],
                             max_condition: float = 1e8) -> ConstantTermFit:
    """Least-squares fit of ``sum_p a_p t^p``; returns ``a_0`` and diagnostics."""
    powers = [float(p) for p in model_powers]
    if 0.0 not in powers:
        raise DomainError("model_powers must include 0")
    if len(samples) < len(powers):
        raise FitError(f"{len(samples)} samples cannot determine {len(powers)} coefficients")
    t = np.array([s[0] for s in samples], dtype=float)
    y = np.array([s[1] for s in samples], dtype=np.complex128)
    A = t[:, None] ** np.array(powers)[None, :]
    norms = np.linalg.norm(A, axis=0)
    As = A / norms
    cond = float(np.linalg.cond(As))
    if not cond <= max_condition:
        raise FitError(f"fit condition number {cond:.3g} exceeds {max_condition:.3g}")
    sol, *_ = np.linalg.lstsq(As, y, rcond=None)
    coef = sol / norms
    table = {p: complex(c) for p, c in zip(powers, coef)}
    return ConstantTermFit(table[0.0], table, cond)
