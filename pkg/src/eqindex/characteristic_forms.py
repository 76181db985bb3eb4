"""Factors of the fixed-point integrand and their assembly.

All forms live on the ``n0``-dimensional fiber of the fixed-point set.  The
normal rotation is given in 2x2 block form: block ``a`` rotates its plane by
``theta_a`` in ``(0, pi]`` and carries the scalar curvature 2-form
``omega_a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError
from .graded_forms import (
    FormMatrix,
    GradedForm,
    ahat_germ,
    analytic_det_half,
    apply_series,
    exp_even,
    inverse,
    supertrace,
    wedge,
)

REDUCTION_MODES = ("spin-tensor-W", "raw-top-component")

_I_POW = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def i_power(k: int) -> complex:
    """Exact ``1j**k`` for integer ``k``."""
    return _I_POW[k % 4]


def _check_angles(theta: Sequence[float]) -> tuple[float, ...]:
    out = tuple(float(t) for t in theta)
    for t in out:
        if not (0.0 < t <= math.pi):
            raise DomainError(f"rotation angle {t} outside (0, pi]: the normal action would have a fixed vector")
    return out


@dataclass(frozen=True)
class CurvatureBlockData:
    """Curvature data at one point of the fixed-point set.

    Attributes
    ----------
    n0, n1 : int
        Ranks of the tangent and normal parts; both even.
    R0 : FormMatrix or None
        Antisymmetric ``n0 x n0`` curvature of the tangent part (``None``
        means flat).
    R1_blocks : tuple of GradedForm
        Scalar 2-forms ``omega_a``, one per normal 2-plane.
    F_ES : FormMatrix or None
        Twisting curvature; ``None`` means zero of the size implied by the
        action data.
    theta : tuple of float
        Normal rotation angles in ``(0, pi]``.
    """

    n0: int
    n1: int
    R0: FormMatrix | None = None
    R1_blocks: tuple = ()
    F_ES: FormMatrix | None = None
    theta: tuple = ()

    def __post_init__(self):
        if self.n0 < 0 or self.n1 < 0 or self.n0 % 2 or self.n1 % 2:
            raise DomainError(f"n0={self.n0}, n1={self.n1} must be even and nonnegative")
        theta = _check_angles(self.theta)
        object.__setattr__(self, "theta", theta)
        if len(theta) != self.n1 // 2:
            raise DimensionError(f"{len(theta)} angles for n1={self.n1}")
        blocks = tuple(self.R1_blocks) or tuple(GradedForm.zeros(self.n0) for _ in theta)
        if len(blocks) != len(theta):
            raise DimensionError("one curvature 2-form per normal block is required")
        for b in blocks:
            if b.n != self.n0 or b.d != 1:
                raise DimensionError("normal curvature blocks must be scalar forms on the n0 fiber")
        object.__setattr__(self, "R1_blocks", blocks)
        if self.R0 is not None and (self.R0.size != self.n0 or self.R0.fiber_rank != self.n0):
            raise DimensionError("R0 must be an n0 x n0 matrix of forms on the n0 fiber")
        if self.F_ES is not None and self.F_ES.fiber_rank != self.n0:
            raise DimensionError("F_ES must live on the n0 fiber")

    @property
    def n(self) -> int:
        return self.n0 + self.n1


@dataclass(frozen=True)
class GammaActionData:
    """Action of the group element on the twisting part of the bundle.

    ``gammaE_top`` is the ``d x d`` matrix acting on the twisting factor: the
    action on ``W`` in ``spin-tensor-W`` mode, or the top Clifford-degree
    component of the action in a spin frame in ``raw-top-component`` mode.
    """

    gammaE_top: np.ndarray
    reduction_mode: str = "spin-tensor-W"
    grading: tuple | None = None

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gammaE_top, dtype=np.complex128))
        if g.shape[0] != g.shape[1]:
            raise DimensionError(f"gammaE_top must be square, got {g.shape}")
        g.flags.writeable = False
        object.__setattr__(self, "gammaE_top", g)
        if self.reduction_mode not in REDUCTION_MODES:
            raise DomainError(f"unknown reduction mode {self.reduction_mode!r}")
        if self.grading is not None and sum(self.grading) != g.shape[0]:
            raise DimensionError(f"grading {self.grading} does not split d={g.shape[0]}")

    @property
    def d(self) -> int:
        return self.gammaE_top.shape[0]


def a_hat(R0: FormMatrix) -> GradedForm:
    """The A-hat form of an antisymmetric curvature matrix."""
    if not R0.antisymmetric:
        c = R0.form.coeffs
        if np.max(np.abs(c + np.swapaxes(c, 1, 2)), initial=0.0) > 1e-12:
            raise DomainError("A-hat needs an antisymmetric curvature matrix")
        R0 = FormMatrix(R0.form, antisymmetric=True)
    return analytic_det_half(ahat_germ(R0.fiber_rank // 4), R0)


def twisted_chern(gamma, F: FormMatrix, grading: tuple | None = None) -> GradedForm:
    """``tr(gamma exp(-F))``, or the supertrace when ``grading`` is given."""
    gamma = np.atleast_2d(np.asarray(gamma, dtype=np.complex128))
    if gamma.shape != (F.size, F.size):
        raise DimensionError(f"gamma {gamma.shape} does not match F of size {F.size}")
    e = exp_even(-F.form).matmul_left(gamma)
    if grading is None:
        return e.trace()
    return supertrace(GradedForm(e.n, e.coeffs, grading))


def _sine_series(theta: float, order: int) -> list[float]:
    # Taylor coefficients in x of 2 sin((theta - x)/2)
    return [2.0 * (-0.5) ** k * math.sin(theta / 2 + k * math.pi / 2) / math.factorial(k) for k in range(order + 1)]


def det_half_denominator(theta: Sequence[float], R1_blocks: Sequence[GradedForm], t_scale: float = 1.0,
                         fiber_rank: int | None = None) -> GradedForm:
    """``prod_a 2 sin((theta_a - t omega_a)/2)`` expanded in the nilpotent ``omega_a``."""
    theta = _check_angles(theta)
    if len(theta) != len(R1_blocks):
        raise DimensionError("one curvature 2-form per angle is required")
    if t_scale < 0:
        raise DomainError("t_scale must be nonnegative")
    if fiber_rank is None:
        if not R1_blocks:
            raise DimensionError("fiber_rank is needed when there are no blocks")
        fiber_rank = R1_blocks[0].n
    out = GradedForm.identity(fiber_rank)
    for th, om in zip(theta, R1_blocks):
        if om.n != fiber_rank:
            raise DimensionError("blocks live on different fibers")
        out = out.wedge(apply_series(_sine_series(th, fiber_rank), t_scale * om))
    return out


def relative_chern_localized(gdata: GammaActionData, F_ES: FormMatrix | None, theta: Sequence[float],
                             fiber_rank: int | None = None) -> GradedForm:
    """Localized relative Chern character of the twisting data."""
    theta = _check_angles(theta)
    if F_ES is None:
        if fiber_rank is None:
            raise DimensionError("fiber_rank is needed when F_ES is omitted")
        F_ES = FormMatrix.zeros(fiber_rank, gdata.d)
    if gdata.reduction_mode == "spin-tensor-W":
        return twisted_chern(gdata.gammaE_top, F_ES, gdata.grading)
    scale = 2.0 ** (len(theta)) / math.prod(2.0 * math.sin(t / 2) for t in theta)
    return scale * twisted_chern(gdata.gammaE_top, F_ES, gdata.grading)


def normalization(n0: int, n1: int) -> complex:
    """``(2 pi i)**(-n0/2) * i**(-n1/2)``."""
    return (2 * math.pi) ** (-(n0 // 2)) * i_power(-(n0 // 2) - (n1 // 2))


def assemble_integrand(c: CurvatureBlockData, g: GammaActionData) -> GradedForm:
    """Full fixed-point integrand on the ``n0`` fiber (all degrees)."""
    n = c.n0
    F = c.F_ES if c.F_ES is not None else FormMatrix.zeros(n, g.d)
    if F.size != g.d:
        raise DimensionError(f"F_ES size {F.size} does not match action size {g.d}")
    A = a_hat(c.R0) if c.R0 is not None else GradedForm.identity(n)
    ch = relative_chern_localized(g, F, c.theta)
    den = det_half_denominator(c.theta, c.R1_blocks, 1.0, fiber_rank=n)
    return normalization(c.n0, c.n1) * wedge(A, ch, inverse(den))
