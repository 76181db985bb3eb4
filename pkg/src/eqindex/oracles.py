"""Independent reference values.

Nothing in this module calls the fixed-point machinery; each function
computes its answer from a different description of the same quantity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, RangeError
from .spinors import chirality, clifford_generators, spin_lift

TAIL_BOUND = 1e-14

GROUP_ELEMENTS = ("reflection", "identity")


@dataclass(frozen=True)
class TorusSpectralConfig:
    """Fourier truncation for the spin Dirac operator on the flat square torus.

    The spin structure is the periodic one in both directions, so the modes
    are ``exp(2 pi i k.x)`` with ``k`` in ``Z^2`` and ``|k_i| <= K``.
    """

    K: int
    t: float
    element: str = "reflection"
    lift_sign: int = 1

    def __post_init__(self):
        if self.element not in GROUP_ELEMENTS:
            raise DomainError(f"unknown group element {self.element!r}; expected one of {GROUP_ELEMENTS}")
        if self.lift_sign not in (1, -1):
            raise DomainError("lift_sign must be +1 or -1")
        if not self.t > 0:
            raise DomainError(f"t must be positive, got {self.t}")
        if self.K < 1 or math.exp(-4 * math.pi**2 * self.t * self.K**2) >= TAIL_BOUND:
            raise RangeError(f"cutoff K={self.K} too small for t={self.t}: tail exceeds {TAIL_BOUND}")

    @classmethod
    def for_time(cls, t: float, element: str = "reflection", lift_sign: int = 1, extra: int = 0):
        """Smallest cutoff meeting the tail bound, plus ``extra``."""
        K = max(1, math.ceil(math.sqrt(-math.log(TAIL_BOUND) / (4 * math.pi**2 * t)) + 1e-12))
        while math.exp(-4 * math.pi**2 * t * K**2) >= TAIL_BOUND:
            K += 1
        return cls(K + extra, t, element, lift_sign)


def torus_equivariant_supertrace(cfg: TorusSpectralConfig) -> complex:
    """Graded trace of ``gamma exp(-t D^2)`` as an explicit lattice sum.

    ``D = c_1 d_1 + c_2 d_2`` acts on the mode ``k`` as ``2 pi i (k_1 c_1 +
    k_2 c_2)``.  The point reflection sends mode ``k`` to ``-k`` and acts on
    spinors by the lift of rotation by ``pi``; only modes it fixes contribute
    to the trace.
    """
    c1, c2 = clifford_generators(2)
    if cfg.element == "reflection":
        perm, sigma = -1, cfg.lift_sign * spin_lift([math.pi])
    else:
        perm, sigma = 1, np.eye(2, dtype=np.complex128)
    return _kernels.torus_sum(cfg.K, float(cfg.t), np.ascontiguousarray(c1), np.ascontiguousarray(c2), perm,
                              np.ascontiguousarray(sigma), np.ascontiguousarray(chirality(2)))


def borel_weil_character(k: int, theta: float) -> complex:
    """Character of the rotation by ``theta`` on sections of ``O(k)`` over CP^1.

    Weights are symmetric: ``j - k/2`` for ``j = 0..k``.
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    terms = [cmath.exp(1j * (j - k / 2) * theta) for j in range(k + 1)]
    return complex(math.fsum(z.real for z in terms), math.fsum(z.imag for z in terms))


def atiyah_bott_isolated(theta_list: Sequence[float], weight_list: Sequence[float]) -> complex:
    """Holomorphic Lefschetz sum over isolated fixed points on a curve.

    Each point contributes ``exp(i w theta) / (1 - exp(-i theta))`` where
    ``theta`` is the rotation of the holomorphic tangent line and ``w`` the
    weight on the fiber.
    """
    if len(theta_list) != len(weight_list):
        raise DomainError("one weight per fixed point")
    terms = []
    for th, w in zip(theta_list, weight_list):
        den = 1 - cmath.exp(-1j * th)
        if abs(den) < 1e-14:
            raise DomainError(f"angle {th} is degenerate (trivial rotation)")
        terms.append(cmath.exp(1j * w * th) / den)
    return complex(math.fsum(z.real for z in terms), math.fsum(z.imag for z in terms))


def cp1_atiyah_bott(k: int, theta: float) -> complex:
    """CP^1 with O(k): two fixed points rotating by ``theta`` and ``-theta``."""
    return atiyah_bott_isolated([theta, -theta], [k / 2, k / 2])


def pv_reference(f: Callable[[np.ndarray], np.ndarray], resolution: int, a: float = -1.0, b: float = 1.0,
                 pole: float = 0.0, refine: int = 10) -> complex:
    """Principal value of ``f`` on ``[a, b]`` with one simple pole.

    The symmetric part ``f(p + s) + f(p - s)`` is integrated directly with a
    midpoint rule ``refine`` times finer than ``resolution`` cells on
    ``[a, b]``; any leftover one-sided piece uses the same step.
    """
    if not a < pole < b:
        raise DomainError("pole must lie inside the interval")
    n = refine * resolution
    h = (b - a) / n
    L = min(pole - a, b - pole)
    m = max(1, int(round(L / h)))
    s = (np.arange(m) + 0.5) * (L / m)
    sym = (f(pole + s) + f(pole - s)) * (L / m)
    parts = [sym]
    lo, hi = (pole + L, b) if b - pole > L else (a, pole - L)
    if hi - lo > 0:
        r = max(1, int(round((hi - lo) / h)))
        u = lo + (np.arange(r) + 0.5) * ((hi - lo) / r)
        parts.append(f(u) * ((hi - lo) / r))
    v = np.concatenate([np.asarray(p, dtype=np.complex128) for p in parts])
    return complex(math.fsum(v.real), math.fsum(v.imag))
