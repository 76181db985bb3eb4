"""Exterior algebra with matrix coefficients.

A :class:`GradedForm` on an ``n``-dimensional fiber stores one ``d x d``
complex matrix per basis monomial ``e^I = e^{i_1} ^ ... ^ e^{i_k}``.  Monomials
are indexed by bitmask: bit ``i`` of the index is set when ``e^i`` is a
factor, so subsets are kept in ascending order and antisymmetry is built in.
Index sets exposed through the public API are 0-based tuples.

Coefficient matrices combine by the ordinary tensor product, i.e.
``(alpha (x) A) ^ (beta (x) B) = (alpha ^ beta) (x) AB`` with no sign between
the matrix grading and the form degree.  :func:`supercommutator` accounts for
this when forming graded commutators.
"""

from __future__ import annotations

import functools
import math
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .errors import BranchError, DimensionError, DomainError

MAX_FIBER_RANK = 12


@functools.lru_cache(maxsize=None)
def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    deg = np.zeros(1 << n, dtype=np.int64)
    for bit in range(n):
        deg += (idx >> bit) & 1
    deg.flags.writeable = False
    return deg


@functools.lru_cache(maxsize=None)
def _wedge_table(n: int):
    """Disjoint pairs (I, J) with target I|J and Koszul sign of e^I ^ e^J."""
    size = 1 << n
    I, J = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    I = I.ravel()
    J = J.ravel()
    keep = (I & J) == 0
    I = I[keep]
    J = J[keep]
    # inversions: pairs i in I, j in J with i > j
    inv = np.zeros(I.shape[0], dtype=np.int64)
    for j in range(n):
        has_j = (J >> j) & 1
        above = I >> (j + 1)
        cnt = np.zeros_like(above)
        for bit in range(n):
            cnt += (above >> bit) & 1
        inv += has_j * cnt
    sign = np.where(inv % 2 == 0, 1.0, -1.0).astype(np.complex128)
    out = (I.astype(np.int64), J.astype(np.int64), (I | J).astype(np.int64), sign)
    for arr in out:
        arr.flags.writeable = False
    return out


def subset_to_mask(subset: Iterable[int]) -> int:
    mask = 0
    for i in subset:
        if mask >> i & 1:
            raise DomainError(f"repeated index {i} in {tuple(subset)}")
        mask |= 1 << i
    return mask


def mask_to_subset(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _permutation_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


class GradedForm:
    """Element of the complexified exterior algebra with matrix coefficients.

    Parameters
    ----------
    n : int
        Fiber rank.  ``n = 0`` is allowed and gives plain matrices.
    coeffs : array_like
        Array of shape ``(2**n, d, d)`` (or ``(2**n,)`` for scalar forms)
        indexed by monomial bitmask.
    grading : tuple of int, optional
        Even/odd split ``(d_plus, d_minus)`` of the coefficient space.

    Notes
    -----
    Instances are immutable; the coefficient array is stored read-only.
    """

    __slots__ = ("n", "_c", "grading")

    def __init__(self, n: int, coeffs, grading: tuple[int, int] | None = None):
        n = int(n)
        if n < 0 or n > MAX_FIBER_RANK:
            raise DimensionError(f"fiber rank {n} outside [0, {MAX_FIBER_RANK}]")
        c = np.array(coeffs, dtype=np.complex128)
        if c.ndim == 1:
            c = c.reshape(-1, 1, 1)
        if c.ndim != 3 or c.shape[0] != 1 << n or c.shape[1] != c.shape[2]:
            raise DimensionError(f"coefficient array of shape {c.shape} does not fit n={n}")
        if grading is not None:
            grading = (int(grading[0]), int(grading[1]))
            if min(grading) < 0 or sum(grading) != c.shape[1]:
                raise DimensionError(f"grading {grading} does not split d={c.shape[1]}")
        c.flags.writeable = False
        self.n = n
        self._c = c
        self.grading = grading

    # -- constructors -----------------------------------------------------
    @classmethod
    def zeros(cls, n: int, d: int = 1, grading=None) -> "GradedForm":
        return cls(n, np.zeros((1 << n, d, d), dtype=np.complex128), grading)

    @classmethod
    def scalar(cls, n: int, value=1.0, d: int = 1, grading=None) -> "GradedForm":
        """Degree-0 form ``value * I_d``; ``value`` may also be a ``d x d`` matrix."""
        value = np.asarray(value, dtype=np.complex128)
        if value.ndim == 2:
            d = value.shape[0]
        c = np.zeros((1 << n, d, d), dtype=np.complex128)
        c[0] = value if value.ndim == 2 else value * np.eye(d)
        return cls(n, c, grading)

    @classmethod
    def identity(cls, n: int, d: int = 1, grading=None) -> "GradedForm":
        return cls.scalar(n, 1.0, d, grading)

    @classmethod
    def basis(cls, n: int, indices: Sequence[int], coeff=1.0, d: int = 1, grading=None) -> "GradedForm":
        """Monomial ``coeff * e^{i_1} ^ ... ^ e^{i_k}`` for indices in any order."""
        indices = tuple(int(i) for i in indices)
        if any(i < 0 or i >= n for i in indices):
            raise DimensionError(f"index out of range for n={n}: {indices}")
        sign = _permutation_sign(indices)
        coeff = np.asarray(coeff, dtype=np.complex128)
        if coeff.ndim == 2:
            d = coeff.shape[0]
        c = np.zeros((1 << n, d, d), dtype=np.complex128)
        c[subset_to_mask(indices)] = sign * (coeff if coeff.ndim == 2 else coeff * np.eye(d))
        return cls(n, c, grading)

    @classmethod
    def from_components(cls, n: int, parts: Mapping[Sequence[int], object], d: int = 1, grading=None) -> "GradedForm":
        """Sum of :meth:`basis` monomials given as ``{indices: coeff}``."""
        out = cls.zeros(n, d, grading)
        for idx, coeff in parts.items():
            out = out + cls.basis(n, idx, coeff, d, grading)
        return out

    # -- accessors --------------------------------------------------------
    @property
    def d(self) -> int:
        return self._c.shape[1]

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degrees(self) -> np.ndarray:
        return _popcounts(self.n)

    def coefficient(self, indices: Sequence[int]) -> np.ndarray:
        """Coefficient of the monomial on ``indices`` (sign-adjusted for order)."""
        return _permutation_sign(indices) * self._c[subset_to_mask(indices)]

    def components(self, atol: float = 0.0) -> dict[tuple[int, ...], np.ndarray]:
        """Nonzero coefficients keyed by ascending index tuple."""
        out = {}
        for mask in np.argsort(self.degrees, kind="stable"):
            block = self._c[mask]
            if np.max(np.abs(block)) > atol:
                out[mask_to_subset(int(mask))] = block
        return out

    def degree_part(self, k: int) -> "GradedForm":
        c = np.where((self.degrees == k)[:, None, None], self._c, 0)
        return GradedForm(self.n, c, self.grading)

    def even_part(self) -> "GradedForm":
        c = np.where((self.degrees % 2 == 0)[:, None, None], self._c, 0)
        return GradedForm(self.n, c, self.grading)

    def has_odd_part(self) -> bool:
        return bool(np.any(self._c[self.degrees % 2 == 1] != 0))

    def max_degree(self, atol: float = 0.0) -> int:
        live = np.max(np.abs(self._c), axis=(1, 2)) > atol
        return int(self.degrees[live].max()) if live.any() else -1

    def scalar_part(self) -> np.ndarray:
        return self._c[0]

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: "GradedForm") -> None:
        if not isinstance(other, GradedForm):
            raise TypeError(f"expected GradedForm, got {type(other).__name__}")
        if other.n != self.n:
            raise DimensionError(f"fiber ranks differ: {self.n} vs {other.n}")

    def _join_grading(self, other: "GradedForm"):
        if self.grading == other.grading:
            return self.grading
        return self.grading or other.grading

    def __add__(self, other):
        if not isinstance(other, GradedForm):
            return self + GradedForm.scalar(self.n, other, self.d, self.grading)
        self._check(other)
        if other.d != self.d:
            raise DimensionError(f"coefficient sizes differ: {self.d} vs {other.d}")
        return GradedForm(self.n, self._c + other._c, self._join_grading(other))

    __radd__ = __add__

    def __neg__(self):
        return GradedForm(self.n, -self._c, self.grading)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, s):
        if isinstance(s, GradedForm):
            return NotImplemented
        return GradedForm(self.n, self._c * complex(s), self.grading)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / complex(s))

    def matmul_left(self, m) -> "GradedForm":
        """Multiply every coefficient on the left by the constant matrix ``m``."""
        m = np.asarray(m, dtype=np.complex128)
        return GradedForm(self.n, np.matmul(m, self._c), None if m.shape[0] != self.d else self.grading)

    def matmul_right(self, m) -> "GradedForm":
        m = np.asarray(m, dtype=np.complex128)
        return GradedForm(self.n, np.matmul(self._c, m), None if m.shape[1] != self.d else self.grading)

    def wedge(self, other: "GradedForm") -> "GradedForm":
        self._check(other)
        if self.d != other.d and self.d != 1 and other.d != 1:
            raise DimensionError(f"coefficients not composable: {self.d}x{self.d} by {other.d}x{other.d}")
        a, b = self._c, other._c
        if a.shape[2] != b.shape[1]:
            # scalar form times matrix form
            if a.shape[1] == 1:
                a = a * np.eye(b.shape[1])
            else:
                b = b * np.eye(a.shape[2])
        pi, pj, pk, ps = _wedge_table(self.n)
        out = np.zeros((a.shape[0], a.shape[1], b.shape[2]), dtype=np.complex128)
        _kernels.wedge_kernel(np.ascontiguousarray(a), np.ascontiguousarray(b), pi, pj, pk, ps, out)
        return GradedForm(self.n, out, self._join_grading(other))

    def trace(self) -> "GradedForm":
        return GradedForm(self.n, np.trace(self._c, axis1=1, axis2=2))

    def allclose(self, other: "GradedForm", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        if not isinstance(other, GradedForm):
            other = GradedForm.scalar(self.n, other, self.d)
        return self.n == other.n and np.allclose(self._c, other._c, atol=atol, rtol=rtol)

    def __repr__(self) -> str:
        parts = []
        for idx, block in self.components().items():
            val = block[0, 0] if self.d == 1 else f"<{self.d}x{self.d}>"
            mono = "^".join(f"e{i}" for i in idx) or "1"
            parts.append(f"{val}*{mono}")
        body = " + ".join(parts) if parts else "0"
        return f"GradedForm(n={self.n}, d={self.d}: {body})"


def wedge(a: GradedForm, b: GradedForm, *more: GradedForm) -> GradedForm:
    """Exterior product with Koszul signs; extra arguments associate left."""
    out = a.wedge(b)
    for c in more:
        out = out.wedge(c)
    return out


def power(a: GradedForm, k: int) -> GradedForm:
    out = GradedForm.identity(a.n, a.d, a.grading)
    for _ in range(k):
        out = out.wedge(a)
    return out


def _nilpotent_split(a: GradedForm) -> tuple[np.ndarray, GradedForm]:
    c = np.array(a.coeffs)
    a0 = c[0].copy()
    c[0] = 0
    return a0, GradedForm(a.n, c, a.grading)


def exp_even(a: GradedForm) -> GradedForm:
    """Exponential of an even form.

    The degree-0 part must commute with every other coefficient; the rest is
    nilpotent, so the series terminates at ``n // 2``.
    """
    if a.has_odd_part():
        raise DomainError("exp_even needs a form with no odd-degree component")
    a0, nil = _nilpotent_split(a)
    scale = max(1.0, float(np.max(np.abs(a.coeffs))))
    comm = np.matmul(a0, nil.coeffs) - np.matmul(nil.coeffs, a0)
    if np.max(np.abs(comm)) > 1e-12 * scale * scale:
        raise DomainError("degree-0 part does not commute with the nilpotent part")
    out = GradedForm.identity(a.n, a.d, a.grading)
    term = out
    for k in range(1, a.n // 2 + 1):
        term = term.wedge(nil) / k
        out = out + term
    if np.any(a0 != 0):
        out = out.matmul_left(expm(a0))
    return out


def inverse(a: GradedForm) -> GradedForm:
    """Inverse of a form whose degree-0 coefficient is an invertible matrix."""
    a0, nil = _nilpotent_split(a)
    try:
        a0inv = np.linalg.inv(a0)
    except np.linalg.LinAlgError as exc:
        raise DomainError("degree-0 coefficient is singular") from exc
    x = -nil.matmul_left(a0inv)
    out = GradedForm.identity(a.n, a.d, a.grading)
    term = out
    for _ in range(a.n):
        term = term.wedge(x)
        out = out + term
    return out.matmul_right(a0inv)


def apply_series(coeffs: Sequence[complex], x: GradedForm) -> GradedForm:
    """Evaluate ``sum_k coeffs[k] x^k`` for ``x`` with vanishing degree-0 part."""
    if np.any(x.scalar_part() != 0):
        raise DomainError("apply_series needs a nilpotent argument")
    top = min(len(coeffs) - 1, x.n)
    out = GradedForm.scalar(x.n, coeffs[top], x.d, x.grading)
    for k in range(top - 1, -1, -1):
        out = out.wedge(x) + GradedForm.scalar(x.n, coeffs[k], x.d, x.grading)
    return out


# ---------------------------------------------------------------------------
# power series helpers (coefficients in ascending powers)

def series_log(c: Sequence[float]) -> np.ndarray:
    """Coefficients of ``log(c(y))`` for ``c(0) > 0``; entry 0 is ``log c(0)``."""
    c = np.asarray(c, dtype=np.complex128)
    c0 = c[0]
    if c0.imag != 0 or c0.real <= 0:
        raise BranchError(f"log needs a positive constant term, got {c0}")
    a = c / c0
    out = np.zeros(len(c), dtype=np.complex128)
    out[0] = math.log(c0.real)
    for k in range(1, len(c)):
        s = a[k]
        for j in range(1, k):
            s -= j * out[j] * a[k - j] / k
        out[k] = s
    return out


def ahat_germ(order: int) -> np.ndarray:
    """Coefficients of ``(x/2)/sinh(x/2)`` in powers of ``x**2`` up to ``x**(2*order)``."""
    from scipy.special import bernoulli

    B = bernoulli(2 * order)
    return np.array(
        [(2.0 - 2.0 ** (2 * k)) * B[2 * k] / (math.factorial(2 * k) * 4.0**k) for k in range(order + 1)]
    )


# ---------------------------------------------------------------------------
# matrices of forms

class FormMatrix:
    """Square matrix of even scalar forms, stored as one matrix-valued form.

    An ``m x m`` matrix of scalar forms and a form with ``m x m`` coefficients
    are the same data; products of matrices of even forms are wedges.
    """

    __slots__ = ("form", "antisymmetric")

    def __init__(self, form: GradedForm, antisymmetric: bool = False, atol: float = 1e-12):
        if form.has_odd_part():
            raise DomainError("FormMatrix entries must have even degree")
        if antisymmetric:
            c = form.coeffs
            if np.max(np.abs(c + np.swapaxes(c, 1, 2)), initial=0.0) > atol * max(1.0, np.max(np.abs(c))):
                raise DomainError("matrix flagged antisymmetric is not")
        self.form = form
        self.antisymmetric = bool(antisymmetric)

    @classmethod
    def zeros(cls, n: int, m: int, antisymmetric: bool = False) -> "FormMatrix":
        return cls(GradedForm.zeros(n, m), antisymmetric)

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[GradedForm]], antisymmetric: bool = False) -> "FormMatrix":
        m = len(entries)
        forms = [e for row in entries for e in row if isinstance(e, GradedForm)]
        if not forms:
            raise DimensionError("at least one entry must be a GradedForm to fix the fiber rank")
        n = forms[0].n
        c = np.zeros((1 << n, m, m), dtype=np.complex128)
        for i, row in enumerate(entries):
            if len(row) != m:
                raise DimensionError("FormMatrix must be square")
            for j, e in enumerate(row):
                if not isinstance(e, GradedForm):
                    e = GradedForm.scalar(n, e)
                if e.n != n or e.d != 1:
                    raise DimensionError("entries must be scalar forms on one fiber")
                c[:, i, j] = e.coeffs[:, 0, 0]
        return cls(GradedForm(n, c), antisymmetric)

    @classmethod
    def from_two_form(cls, n: int, parts: Mapping[tuple[int, int], np.ndarray], antisymmetric: bool = True) -> "FormMatrix":
        """``sum_{(i,j)} M_ij e^i ^ e^j`` with constant ``m x m`` matrices ``M_ij``."""
        first = next(iter(parts.values()))
        m = np.asarray(first).shape[0]
        form = GradedForm.zeros(n, m)
        for (i, j), mat in parts.items():
            form = form + GradedForm.basis(n, (i, j), mat)
        return cls(form, antisymmetric)

    @classmethod
    def block_diag(cls, *blocks: "FormMatrix") -> "FormMatrix":
        n = blocks[0].fiber_rank
        m = sum(b.size for b in blocks)
        c = np.zeros((1 << n, m, m), dtype=np.complex128)
        at = 0
        for b in blocks:
            if b.fiber_rank != n:
                raise DimensionError("blocks live on different fibers")
            c[:, at:at + b.size, at:at + b.size] = b.form.coeffs
            at += b.size
        return cls(GradedForm(n, c), all(b.antisymmetric for b in blocks))

    @property
    def size(self) -> int:
        return self.form.d

    @property
    def fiber_rank(self) -> int:
        return self.form.n

    def entry(self, i: int, j: int) -> GradedForm:
        return GradedForm(self.form.n, self.form.coeffs[:, i, j])

    def __matmul__(self, other: "FormMatrix") -> "FormMatrix":
        return FormMatrix(self.form.wedge(other.form))

    def __add__(self, other: "FormMatrix") -> "FormMatrix":
        return FormMatrix(self.form + other.form, self.antisymmetric and other.antisymmetric)

    def __mul__(self, s) -> "FormMatrix":
        return FormMatrix(self.form * s, self.antisymmetric)

    __rmul__ = __mul__

    def __neg__(self) -> "FormMatrix":
        return FormMatrix(-self.form, self.antisymmetric)

    def trace(self) -> GradedForm:
        return self.form.trace()

    def __repr__(self) -> str:
        return f"FormMatrix(size={self.size}, n={self.fiber_rank}, antisymmetric={self.antisymmetric})"


def analytic_det_half(germ: Sequence[float], R: FormMatrix) -> GradedForm:
    """``det^{1/2} g(R)`` computed as ``exp(tr(log g(R)) / 2)``.

    Parameters
    ----------
    germ : sequence of float
        Coefficients ``g_k`` of the even germ ``g(x) = sum_k g_k x**(2k)``.
    R : FormMatrix
        Antisymmetric matrix of 2-forms (nilpotent entries).

    Returns
    -------
    GradedForm
        Scalar form whose degree-0 part is ``g(0)**(m/2)``.
    """
    if not R.antisymmetric:
        raise DomainError("analytic_det_half needs an antisymmetric FormMatrix")
    germ = np.asarray(germ, dtype=np.complex128)
    if germ[0].imag != 0 or germ[0].real <= 0:
        raise BranchError(f"germ must satisfy g(0) > 0, got {germ[0]}")
    n = R.fiber_rank
    kmax = n // 4
    padded = np.zeros(kmax + 1, dtype=np.complex128)
    padded[: min(len(germ), kmax + 1)] = germ[: kmax + 1]
    ell = series_log(padded)
    R2 = R.form.wedge(R.form)
    logg = GradedForm.scalar(n, ell[0], R.size)
    term = GradedForm.identity(n, R.size)
    for k in range(1, kmax + 1):
        term = term.wedge(R2)
        logg = logg + ell[k] * term
    return exp_even(0.5 * logg.trace())


def trace(a: GradedForm) -> GradedForm:
    return a.trace()


def supertrace(a: GradedForm) -> GradedForm:
    """Trace over the even block minus trace over the odd block."""
    if a.grading is None:
        raise DomainError("supertrace needs a graded form")
    dp = a.grading[0]
    c = a.coeffs
    vals = np.trace(c[:, :dp, :dp], axis1=1, axis2=2) - np.trace(c[:, dp:, dp:], axis1=1, axis2=2)
    return GradedForm(a.n, vals)


def top_component(a: GradedForm, orientation: int = 1):
    """Coefficient of ``e^0 ^ ... ^ e^{n-1}`` times ``orientation``."""
    if orientation not in (1, -1):
        raise DomainError(f"orientation must be +1 or -1, got {orientation}")
    block = a.coeffs[-1] * orientation
    return complex(block[0, 0]) if a.d == 1 else block.copy()


def _homogeneous_parities(a: GradedForm) -> tuple[int, int]:
    degs = a.degrees
    live = np.max(np.abs(a.coeffs), axis=(1, 2)) > 0
    form_par = set((degs[live] % 2).tolist())
    if len(form_par) > 1:
        raise DomainError("form is not homogeneous in degree parity")
    dp = a.grading[0]
    c = a.coeffs
    diag = np.any(c[:, :dp, :dp] != 0) or np.any(c[:, dp:, dp:] != 0)
    off = np.any(c[:, :dp, dp:] != 0) or np.any(c[:, dp:, :dp] != 0)
    if diag and off:
        raise DomainError("coefficients mix even and odd matrix blocks")
    return (form_par.pop() if form_par else 0), int(off)


def supercommutator(a: GradedForm, b: GradedForm) -> GradedForm:
    """Graded commutator of homogeneous graded matrix forms.

    With the ordinary tensor-product convention the sign is
    ``(-1)**(|alpha||beta| + |A||B|)`` for form parities ``alpha, beta`` and
    matrix parities ``A, B``.
    """
    if a.grading is None or b.grading is None:
        raise DomainError("supercommutator needs graded forms")
    fa, ma = _homogeneous_parities(a)
    fb, mb = _homogeneous_parities(b)
    sign = (-1) ** (fa * fb + ma * mb)
    return a.wedge(b) - sign * b.wedge(a)
