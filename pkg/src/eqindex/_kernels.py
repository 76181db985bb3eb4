"""Hot loops with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``EQINDEX_DISABLE_NUMBA`` is unset or ``0``.  Both paths are always
importable by name (``*_numba`` / ``*_numpy``) so the benchmark and the tests
can compare them directly; the unsuffixed names dispatch to the active one.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _flag_disabled() -> bool:
    return os.environ.get("EQINDEX_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and not _flag_disabled()


# ---------------------------------------------------------------------------
# wedge product of dense coefficient arrays

@njit(cache=True)
def wedge_numba(a, b, pi, pj, pk, psign, out):
    d1 = a.shape[1]
    d2 = a.shape[2]
    d3 = b.shape[2]
    for p in range(pi.shape[0]):
        i = pi[p]
        j = pj[p]
        k = pk[p]
        s = psign[p]
        for r in range(d1):
            for c in range(d3):
                acc = 0j
                for m in range(d2):
                    acc += a[i, r, m] * b[j, m, c]
                out[k, r, c] += s * acc
    return out


def wedge_numpy(a, b, pi, pj, pk, psign, out):
    prods = np.matmul(a[pi], b[pj]) * psign[:, None, None]
    np.add.at(out, pk, prods)
    return out


# ---------------------------------------------------------------------------
# symmetric-pair compensated sum (principal value)

@njit(cache=True)
def pair_sum_numba(values, partner):
    # Neumaier summation of v[k] + v[partner[k]] over k < partner[k],
    # plus unpaired entries (partner == -1), in index order.
    sr = 0.0
    cr = 0.0
    si = 0.0
    ci = 0.0
    for k in range(values.shape[0]):
        p = partner[k]
        if p == -1:
            x = values[k]
        elif p > k:
            x = values[k] + values[p]
        else:
            continue
        xr = x.real
        t = sr + xr
        if abs(sr) >= abs(xr):
            cr += (sr - t) + xr
        else:
            cr += (xr - t) + sr
        sr = t
        xi = x.imag
        t = si + xi
        if abs(si) >= abs(xi):
            ci += (si - t) + xi
        else:
            ci += (xi - t) + si
        si = t
    return complex(sr + cr, si + ci)


def pair_sum_numpy(values, partner):
    idx = np.arange(values.shape[0])
    single = partner == -1
    lead = partner > idx
    terms = np.empty(values.shape[0], dtype=np.complex128)
    terms[single] = values[single]
    terms[lead] = values[lead] + values[partner[lead]]
    keep = single | lead
    picked = terms[keep]
    return complex(math.fsum(picked.real), math.fsum(picked.imag))


# ---------------------------------------------------------------------------
# flat 2-torus lattice supertrace

@njit(cache=True)
def _expm2(a):
    s = 0.5 * (a[0, 0] + a[1, 1])
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    q = np.sqrt(s * s - det + 0j)
    es = np.exp(s)
    if abs(q) < 1e-8:
        sh = 1.0 + q * q / 6.0
    else:
        sh = np.sinh(q) / q
    ch = np.cosh(q)
    out = np.empty((2, 2), dtype=np.complex128)
    out[0, 0] = es * (ch + sh * (a[0, 0] - s))
    out[1, 1] = es * (ch + sh * (a[1, 1] - s))
    out[0, 1] = es * sh * a[0, 1]
    out[1, 0] = es * sh * a[1, 0]
    return out


@njit(cache=True)
def torus_sum_numba(K, t, c1, c2, perm_sign, sigma, chir):
    tw = 2.0 * np.pi
    sr = 0.0
    si = 0.0
    for k1 in range(-K, K + 1):
        for k2 in range(-K, K + 1):
            # only modes fixed by k -> perm_sign * k survive the permutation trace
            if perm_sign * k1 != k1 or perm_sign * k2 != k2:
                continue
            d = 1j * tw * (k1 * c1 + k2 * c2)
            e = _expm2(-t * (d @ d))
            m = chir @ sigma @ e
            v = m[0, 0] + m[1, 1]
            sr += v.real
            si += v.imag
    return complex(sr, si)


def torus_sum_numpy(K, t, c1, c2, perm_sign, sigma, chir):
    from scipy.linalg import expm

    ks = np.arange(-K, K + 1)
    k1, k2 = np.meshgrid(ks, ks, indexing="ij")
    k1 = k1.ravel()
    k2 = k2.ravel()
    fixed = (perm_sign * k1 == k1) & (perm_sign * k2 == k2)
    d = 2j * np.pi * (k1[fixed, None, None] * c1 + k2[fixed, None, None] * c2)
    e = np.array([expm(-t * (m @ m)) for m in d])
    m = chir @ sigma @ e
    v = np.trace(m, axis1=1, axis2=2)
    return complex(math.fsum(v.real), math.fsum(v.imag))


if USE_NUMBA:
    wedge_kernel = wedge_numba
    pair_sum = pair_sum_numba
    torus_sum = torus_sum_numba
else:
    wedge_kernel = wedge_numpy
    pair_sum = pair_sum_numpy
    torus_sum = torus_sum_numpy


def backend() -> str:
    """Name of the active kernel backend (``"numba"`` or ``"numpy"``)."""
    return "numba" if USE_NUMBA else "numpy"
