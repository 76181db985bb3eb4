"""Explicit complex spinor modules for even-dimensional Euclidean spaces.

Conventions: generators satisfy ``c_i c_j + c_j c_i = -2 delta_ij``; the
chirality operator is ``Gamma = i**(n/2) c_1 ... c_n``; the basis is ordered
so that ``Gamma = diag(I, -I)``.  The lift of a rotation by ``theta`` in the
plane ``(e_{2a-1}, e_{2a})`` is ``cos(theta/2) + sin(theta/2) c_{2a-1} c_{2a}``,
so that with ``n = 2`` one has ``str(c_1 c_2) = -2i``.
"""

from __future__ import annotations

import functools

import numpy as np

from .errors import DimensionError

_C1 = np.array([[0, -1], [1, 0]], dtype=np.complex128)
_C2 = np.array([[0, 1j], [1j, 0]], dtype=np.complex128)
_Z = np.diag([1.0, -1.0]).astype(np.complex128)
_I = np.eye(2, dtype=np.complex128)


def _kron_all(mats):
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, m)
    return out


@functools.lru_cache(maxsize=None)
def _module(n: int):
    if n < 0 or n % 2:
        raise DimensionError(f"spinor module needs even n >= 0, got {n}")
    h = n // 2
    gens = []
    for a in range(h):
        for base in (_C1, _C2):
            gens.append(_kron_all([_Z] * a + [base] + [_I] * (h - a - 1)))
    vol = np.eye(1 << h, dtype=np.complex128)
    for g in gens:
        vol = vol @ g
    gamma = (1j**h) * vol
    diag = np.real(np.diag(gamma))
    order = np.argsort(-diag, kind="stable")
    P = np.eye(1 << h)[order]
    gens = tuple(P @ g @ P.T for g in gens)
    vol = P @ vol @ P.T
    gamma = P @ gamma @ P.T
    for arr in (*gens, vol, gamma):
        arr.flags.writeable = False
    return gens, vol, gamma


def clifford_generators(n: int) -> tuple[np.ndarray, ...]:
    """Matrices ``c_1 .. c_n`` acting on spinors of dimension ``2**(n/2)``."""
    return _module(n)[0]


def chirality(n: int) -> np.ndarray:
    return _module(n)[2]


def spin_lift(thetas, n: int | None = None, lift_sign: int = 1) -> np.ndarray:
    """Spinor action of the block rotation with angles ``thetas``."""
    thetas = [float(t) for t in thetas]
    n = 2 * len(thetas) if n is None else n
    gens = clifford_generators(n)
    out = np.eye(1 << (n // 2), dtype=np.complex128)
    for a, th in enumerate(thetas):
        out = out @ (np.cos(th / 2) * np.eye(out.shape[0]) + np.sin(th / 2) * gens[2 * a] @ gens[2 * a + 1])
    return lift_sign * out


def spinor_supertrace(m: np.ndarray) -> complex:
    n = 2 * int(round(np.log2(m.shape[0])))
    return complex(np.trace(chirality(n) @ m))


def clifford_top_coefficient(m: np.ndarray) -> complex:
    """Coefficient of ``c_1 ... c_n`` in the Clifford expansion of ``m``."""
    n = 2 * int(round(np.log2(m.shape[0])))
    vol = _module(n)[1]
    # the monomials c_I are orthogonal for the normalized trace form
    return complex(np.trace(np.linalg.inv(vol) @ m) / m.shape[0])
