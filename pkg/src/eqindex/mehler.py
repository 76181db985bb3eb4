"""Limit objects of the rescaled heat equation.

The rescaled Laplacian on a normal fiber is

    Delta = -sum_i (d_i - a_i)^2 + F,   a_i = 1/4 sum_j R_ij (X^j + V^j),

and its heat kernel from the origin is the generalized Mehler kernel

    K_t(X) = (4 pi t)^{-n/2} det^{1/2}((tR/2) / sinh(tR/2))
             * exp(-<X|(tR/2) coth(tR/2)|X>/(4t) + <X|R|V>/4) * exp(-tF).

``R`` is either a real antisymmetric matrix (numeric mode) or an
antisymmetric :class:`~eqindex.graded_forms.FormMatrix` of 2-forms
(symbolic mode).  For real antisymmetric ``R`` the hyperbolic functions turn
trigonometric; evaluation is refused once ``|t spec(R)|`` reaches ``2 pi``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import expm
from scipy.special import bernoulli

from .errors import DegreeOverflowError, DimensionError, DomainError, RangeError, ToleranceError
from .graded_forms import FormMatrix, GradedForm, ahat_germ, analytic_det_half, exp_even


@dataclass(frozen=True)
class RescaledModelData:
    """Curvature, twisting curvature and normal offset for the model operator."""

    n: int
    R: object
    F_ES: object = None
    V: object = None

    def __post_init__(self):
        symbolic = isinstance(self.R, FormMatrix)
        if symbolic:
            if self.R.size != self.n or not self.R.antisymmetric:
                raise DimensionError("R must be an antisymmetric n x n FormMatrix")
            if self.F_ES is not None and not isinstance(self.F_ES, FormMatrix):
                raise DomainError("numeric and symbolic inputs cannot be mixed")
            if self.F_ES is not None and self.F_ES.fiber_rank != self.R.fiber_rank:
                raise DimensionError("R and F_ES live on different fibers")
        else:
            R = np.asarray(self.R, dtype=float)
            if R.shape != (self.n, self.n):
                raise DimensionError(f"R has shape {R.shape}, expected {(self.n, self.n)}")
            if np.max(np.abs(R + R.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(R))):
                raise DomainError("R must be antisymmetric")
            R.flags.writeable = False
            object.__setattr__(self, "R", R)
            if isinstance(self.F_ES, FormMatrix):
                raise DomainError("numeric and symbolic inputs cannot be mixed")
            F = np.zeros((1, 1)) if self.F_ES is None else np.atleast_2d(np.asarray(self.F_ES, dtype=float))
            if F.shape[0] != F.shape[1] or np.max(np.abs(F - F.T)) > 1e-12 * max(1.0, np.max(np.abs(F))):
                raise DomainError("F_ES must be a symmetric matrix")
            F.flags.writeable = False
            object.__setattr__(self, "F_ES", F)
        V = np.zeros(self.n) if self.V is None else np.asarray(self.V, dtype=float)
        if V.shape != (self.n,):
            raise DimensionError(f"V has shape {V.shape}, expected {(self.n,)}")
        V.flags.writeable = False
        object.__setattr__(self, "V", V)

    @property
    def mode(self) -> str:
        return "symbolic" if isinstance(self.R, FormMatrix) else "numeric"

    @property
    def d(self) -> int:
        if self.mode == "numeric":
            return self.F_ES.shape[0]
        return 1 if self.F_ES is None else self.F_ES.size

    def with_V(self, V) -> "RescaledModelData":
        return RescaledModelData(self.n, self.R, self.F_ES, V)


# ---------------------------------------------------------------------------
# numeric matrix functions of tR/2

def _half_angles(R: np.ndarray, t: float):
    """Eigen-data of (tR/2)^2 = -Q diag(phi^2) Q^T with phi >= 0."""
    Z = 0.5 * t * R
    mu, Q = np.linalg.eigh(Z @ Z)
    phi = np.sqrt(np.clip(-mu, 0.0, None))
    if np.any(phi >= math.pi * (1 - 1e-14)):
        raise RangeError(f"|t spec(R)| = {2 * phi.max():.6g} reaches 2 pi at t={t}")
    return phi, Q


def _xcotx(phi):
    phi = np.asarray(phi, dtype=float)
    out = np.ones_like(phi)
    big = phi > 1e-4
    out[big] = phi[big] / np.tan(phi[big])
    small = ~big
    out[small] = 1 - phi[small] ** 2 / 3 - phi[small] ** 4 / 45
    return out


def _xcscx(phi):
    phi = np.asarray(phi, dtype=float)
    out = np.ones_like(phi)
    big = phi > 1e-4
    out[big] = phi[big] / np.sin(phi[big])
    small = ~big
    out[small] = 1 + phi[small] ** 2 / 6 + 7 * phi[small] ** 4 / 360
    return out


def coth_matrix(R: np.ndarray, t: float) -> np.ndarray:
    """``(tR/2) coth(tR/2)`` for real antisymmetric ``R``."""
    phi, Q = _half_angles(R, t)
    return (Q * _xcotx(phi)) @ Q.T


def det_half_factor(R: np.ndarray, t: float) -> float:
    """``det^{1/2}((tR/2)/sinh(tR/2))`` for real antisymmetric ``R``."""
    phi, _ = _half_angles(R, t)
    return math.exp(0.5 * float(np.sum(np.log(_xcscx(phi)))))


def _zcothz_coeffs(order: int) -> np.ndarray:
    B = bernoulli(2 * order)
    return np.array([4.0**k * B[2 * k] / math.factorial(2 * k) for k in range(order + 1)])


def mehler_kernel(t: float, X, data: RescaledModelData):
    """Generalized Mehler kernel from the origin to ``X``.

    Returns a ``d x d`` array in numeric mode and a matrix-valued
    :class:`GradedForm` in symbolic mode.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    X = np.asarray(X, dtype=float)
    if X.shape != (data.n,):
        raise DimensionError(f"X has shape {X.shape}, expected {(data.n,)}")
    n = data.n
    pref = (4 * math.pi * t) ** (-n / 2)
    if data.mode == "numeric":
        R = data.R
        C = coth_matrix(R, t)
        expo = -(X @ C @ X) / (4 * t) + 0.25 * (X @ R @ data.V)
        return pref * det_half_factor(R, t) * math.exp(expo) * expm(-t * data.F_ES)
    R = data.R
    N = R.fiber_rank
    det = analytic_det_half(ahat_germ(N // 4), t * R)
    coeffs = _zcothz_coeffs(N // 4)
    R2 = R.form.wedge(R.form)
    C = GradedForm.scalar(N, coeffs[0], n)
    term = GradedForm.identity(N, n)
    for k in range(1, N // 4 + 1):
        term = term.wedge(R2)
        C = C + (coeffs[k] * (t / 2) ** (2 * k)) * term
    quad = GradedForm(N, np.einsum("i,kij,j->k", X, C.coeffs, X))
    pair = GradedForm(N, np.einsum("i,kij,j->k", X, R.form.coeffs, data.V))
    scalar = -quad / (4 * t) + 0.25 * pair
    d = data.d
    expo = GradedForm(N, scalar.coeffs[:, 0, 0][:, None, None] * np.eye(d))
    if data.F_ES is not None:
        expo = expo - t * data.F_ES.form
    return pref * det.wedge(exp_even(expo))


def theta0_limit(X, V, R):
    """``exp(<X|R|V>/4)``: a number for numeric ``R``, a form for a FormMatrix."""
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    if isinstance(R, FormMatrix):
        pair = GradedForm(R.fiber_rank, np.einsum("i,kij,j->k", X, R.form.coeffs, V))
        return exp_even(0.25 * pair)
    R = np.asarray(R, dtype=float)
    return math.exp(0.25 * float(X @ R @ V))


# ---------------------------------------------------------------------------
# polynomial x Gaussian sections

def _padd(p: dict, q: Mapping, s=1.0) -> dict:
    out = dict(p)
    for k, v in q.items():
        out[k] = out[k] + s * v if k in out else s * v
    return out


def _shift(e: tuple, i: int, by: int) -> tuple:
    lst = list(e)
    lst[i] += by
    return tuple(lst)


@dataclass(frozen=True)
class PolyGaussianSection:
    """``sum_alpha A_alpha X^a V^b * exp(-X^T Q X + b^T X)``.

    Exponent tuples have length ``2n``: powers of ``X`` then of ``V``.
    ``Q`` must be positive semidefinite; ``Q = 0`` gives polynomial sections.
    """

    n: int
    coeffs: Mapping
    gauss: np.ndarray = None
    linear: np.ndarray = None
    max_degree: int = 16

    def __post_init__(self):
        n = self.n
        Q = np.zeros((n, n)) if self.gauss is None else np.asarray(self.gauss, dtype=float)
        b = np.zeros(n) if self.linear is None else np.asarray(self.linear, dtype=float)
        if Q.shape != (n, n) or b.shape != (n,):
            raise DimensionError("Gaussian data has the wrong shape")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Q))):
            raise DomainError("Gaussian matrix must be symmetric")
        if np.linalg.eigvalsh(Q).min(initial=0.0) < -1e-12:
            raise DomainError("Gaussian matrix must be positive semidefinite")
        coeffs = {}
        for k, v in self.coeffs.items():
            k = tuple(int(x) for x in k)
            if len(k) != 2 * n or min(k, default=0) < 0:
                raise DimensionError(f"exponent {k} must have length {2 * n}")
            coeffs[k] = np.atleast_2d(np.asarray(v, dtype=np.complex128))
        if coeffs and self.degree_of(coeffs) > self.max_degree:
            raise DegreeOverflowError(f"degree {self.degree_of(coeffs)} exceeds cap {self.max_degree}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "gauss", Q)
        object.__setattr__(self, "linear", b)

    @staticmethod
    def degree_of(coeffs) -> int:
        return max((sum(k) for k in coeffs), default=0)

    @property
    def degree(self) -> int:
        return self.degree_of(self.coeffs)

    def evaluate(self, X, V=None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        V = np.zeros(self.n) if V is None else np.asarray(V, dtype=float)
        z = np.concatenate([X, V])
        g = math.exp(-(X @ self.gauss @ X) + self.linear @ X)
        out = None
        for k, v in self.coeffs.items():
            term = np.prod(z ** np.array(k)) * v
            out = term if out is None else out + term
        return (0 if out is None else out) * g


def _mul_linear(p: dict, lin: Mapping[int, float]) -> dict:
    """Multiply polynomial ``p`` by ``sum_v lin[v] z_v`` (variables of length 2n)."""
    out: dict = {}
    for k, v in p.items():
        for var, c in lin.items():
            if c != 0:
                out = _padd(out, {_shift(k, var, 1): c * v})
    return out


def _covariant_step(p: dict, i: int, n: int, Q: np.ndarray, b: np.ndarray, R: np.ndarray) -> dict:
    """Apply ``d_i - a_i`` to ``p * exp(-X^T Q X + b^T X)`` (Gaussian factor implicit)."""
    out: dict = {}
    for k, v in p.items():
        if k[i] > 0:
            out = _padd(out, {_shift(k, i, -1): k[i] * v})
        if b[i] != 0:
            out = _padd(out, {k: b[i] * v})
    # gaussian gradient -2 (Q X)_i and minus the connection 1/4 R_ij (X^j + V^j)
    lin = {j: -2.0 * Q[i, j] - 0.25 * R[i, j] for j in range(n)}
    lin.update({n + j: -0.25 * R[i, j] for j in range(n)})
    return _padd(out, _mul_linear(p, lin))


def apply_rescaled_laplacian(s: PolyGaussianSection, data: RescaledModelData) -> PolyGaussianSection:
    """Exact action of the rescaled Laplacian on a polynomial-Gaussian section.

    The ``V`` appearing in the connection is the polynomial variable of the
    section; ``data.V`` is not used here.
    """
    if data.mode != "numeric":
        raise DomainError("apply_rescaled_laplacian works with numeric R")
    if data.n != s.n:
        raise DimensionError("section and model have different dimensions")
    if s.degree + 2 > s.max_degree:
        raise DegreeOverflowError(f"result degree {s.degree + 2} exceeds cap {s.max_degree}")
    n = s.n
    acc: dict = {}
    for i in range(n):
        once = _covariant_step(s.coeffs, i, n, s.gauss, s.linear, data.R)
        twice = _covariant_step(once, i, n, s.gauss, s.linear, data.R)
        acc = _padd(acc, twice, -1.0)
    F = data.F_ES
    for k, v in s.coeffs.items():
        acc = _padd(acc, {k: F @ v})
    acc = {k: v for k, v in acc.items() if np.any(v != 0)}
    return PolyGaussianSection(n, acc, s.gauss, s.linear, s.max_degree)


def mehler_section(t: float, data: RescaledModelData, max_degree: int = 16) -> PolyGaussianSection:
    """The numeric Mehler kernel at time ``t`` as a polynomial-Gaussian section."""
    if data.mode != "numeric":
        raise DomainError("mehler_section needs numeric R")
    n = data.n
    C = coth_matrix(data.R, t)
    amp = (4 * math.pi * t) ** (-n / 2) * det_half_factor(data.R, t) * expm(-t * data.F_ES)
    Q = C / (4 * t)
    Q = 0.5 * (Q + Q.T)
    return PolyGaussianSection(n, {(0,) * (2 * n): amp}, Q, 0.25 * data.R @ data.V, max_degree)


# ---------------------------------------------------------------------------
# finite-difference heat residual

def default_grid(n: int) -> np.ndarray:
    if n <= 3:
        axis = np.linspace(-1.0, 1.0, 5)
        return np.array(list(itertools.product(axis, repeat=n)))
    rng = np.random.default_rng(0)
    return rng.uniform(-1.0, 1.0, size=(64, n))


def heat_residual(t: float, h: float = 1e-3, data: RescaledModelData | None = None, grid=None) -> float:
    """Max relative residual of the heat equation for the Mehler kernel.

    Central second-order differences with step ``h`` are used in ``t`` and in
    every coordinate of ``X``.
    """
    if data is None or data.mode != "numeric":
        raise DomainError("heat_residual needs numeric model data")
    if not t - h > 0:
        raise DomainError("time stencil leaves t > 0")
    n = data.n
    R, F, V = data.R, data.F_ES, data.V
    pts = default_grid(n) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))

    def K(tt, x):
        return mehler_kernel(tt, x, data)

    worst = 0.0
    for x in pts:
        k0 = K(t, x)
        dt = (K(t + h, x) - K(t - h, x)) / (2 * h)
        lap = F @ k0
        a = 0.25 * R @ (x + V)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            kp, km = K(t, x + e), K(t, x - e)
            d1 = (kp - km) / (2 * h)
            d2 = (kp - 2 * k0 + km) / (h * h)
            lap = lap - (d2 - 2 * a[i] * d1 + a[i] ** 2 * k0)
        worst = max(worst, float(np.linalg.norm(dt + lap) / np.linalg.norm(k0)))
    return worst


# ---------------------------------------------------------------------------
# Gaussian integrals over a normal 2-plane

def _sinc_half(x: float) -> float:
    """``(x/2)/sin(x/2)`` with its removable singularity filled in."""
    if abs(x) < 1e-6:
        return 1 + x * x / 24
    s = math.sin(x / 2)
    if abs(s) < 1e-14:
        raise DomainError(f"{x} sits on a zero of sin(x/2)")
    return (x / 2) / s


def eta(theta: float, omega: float, t: float) -> float:
    """``((t w/2)/sin(t w/2)) sin(theta/2) sin((theta - t w)/2)``."""
    return _sinc_half(t * omega) * math.sin(theta / 2) * math.sin((theta - t * omega) / 2)


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def normal_quadratic_form(theta: float, omega: float, t: float) -> np.ndarray:
    """Matrix ``A`` with ``exponent(V) = -V^T A V`` on one normal 2-plane.

    The exponent is that of the Mehler kernel evaluated at
    ``X = (gamma - 1) V`` with curvature block ``[[0, w], [-w, 0]]``.
    """
    Om = np.array([[0.0, omega], [-omega, 0.0]])
    M = _rotation(theta) - np.eye(2)
    C = coth_matrix(Om, t)
    quad = -(M.T @ C @ M) / (4 * t) + 0.25 * (M.T @ Om)
    return -0.5 * (quad + quad.T)


def fiber_gaussian_integral(theta: float, omega: float, t: float, mode: str = "closed_form",
                            nodes: int = 80) -> float:
    """Integral of the normal Gaussian factor over one 2-plane.

    ``closed_form`` returns ``pi t / eta``.  ``numeric`` assembles the
    quadratic form from the rotation and curvature matrices and integrates it
    with a tensor Gauss-Hermite rule.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if mode == "closed_form":
        e = eta(theta, omega, t)
        if not e > 0:
            raise DomainError(f"eta = {e} is not positive")
        return math.pi * t / e
    if mode != "numeric":
        raise DomainError(f"unknown mode {mode!r}")
    A = normal_quadratic_form(theta, omega, t)
    lam = np.linalg.eigvalsh(A)
    if lam.min() <= 0:
        raise DomainError("normal Gaussian is not decaying")
    # substitute V = s x so the Hermite weight dominates the remaining factor
    s = 1.0 / math.sqrt(lam.min())
    x, w = np.polynomial.hermite.hermgauss(nodes)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    B = s * s * A - np.eye(2)
    f = np.exp(-(B[0, 0] * X1**2 + 2 * B[0, 1] * X1 * X2 + B[1, 1] * X2**2))
    return s * s * math.fsum((W * f).ravel())


def exponent_pieces(theta: float, omega: float, V) -> tuple[float, float]:
    """The two parts of the normal exponent and a check of their sum.

    Returns ``(p1, p2)`` with ``p1 = (w/2) sin(theta/2) cos(theta/2) |V|^2``
    and ``p2 = -(w/2) cot(w/2) sin(theta/2)^2 |V|^2``.
    """
    V = np.asarray(V, dtype=float)
    v2 = float(V @ V)
    if abs(omega) > 1e-6 and abs(math.sin(omega / 2)) < 1e-14:
        raise DomainError(f"omega = {omega} sits on a zero of sin(omega/2)")
    sh, ch = math.sin(theta / 2), math.cos(theta / 2)
    p1 = 0.5 * omega * sh * ch * v2
    wcot = 1.0 if omega == 0 else float(_xcotx(np.array([abs(omega) / 2]))[0])
    p2 = -wcot * sh * sh * v2
    closed = -_sinc_half(omega) * sh * math.sin((theta - omega) / 2) * v2
    if abs(p1 + p2 - closed) > 1e-12 * max(1.0, abs(closed)):
        raise ToleranceError(f"exponent identity fails: {p1 + p2} vs {closed}")
    return p1, p2
