"""Quadrature of the fixed-point integrand and principal-value traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _kernels
from .characteristic_forms import CurvatureBlockData, GammaActionData, assemble_integrand
from .errors import DimensionError, DomainError, MeshError
from .graded_forms import top_component

DEFAULT_PV_RESOLUTION = 8192


@dataclass(frozen=True)
class MeshPoint:
    """One quadrature node on a fixed-point component.

    ``density`` is the trace-density value at the node; ``coord`` is only
    needed when the component carries principal-value poles.
    """

    label: str
    weight: float
    curvature: CurvatureBlockData
    gamma: GammaActionData
    density: complex = 1.0
    orientation: int = 1
    coord: tuple = ()


@dataclass(frozen=True)
class FixedPointComponent:
    """A connected component of the fixed-point set with its quadrature mesh.

    Parameters
    ----------
    n0, n1 : int
        Tangent and normal ranks (even).
    points : tuple of MeshPoint
        Quadrature nodes, summed in the given order.
    pv_poles : tuple of float
        Pole locations of the density along coordinate ``pv_axis``.
    period : float, optional
        Period of the pole coordinate for closed components.
    has_divisor : bool
        Must be set for ``pv_poles`` to be accepted.
    """

    n0: int
    n1: int
    points: tuple
    pv_poles: tuple = ()
    pv_axis: int = 0
    period: float | None = None
    has_divisor: bool = False
    name: str = ""

    def __post_init__(self):
        if self.n0 < 0 or self.n1 < 0 or self.n0 % 2 or self.n1 % 2:
            raise DomainError(f"component ranks n0={self.n0}, n1={self.n1} must be even")
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "pv_poles", tuple(float(p) for p in self.pv_poles))
        if not pts:
            raise MeshError("component has no mesh points")
        for p in pts:
            if not p.weight > 0:
                raise MeshError(f"weight at {p.label!r} must be positive, got {p.weight}")
            if p.orientation not in (1, -1):
                raise DomainError(f"orientation at {p.label!r} must be +1 or -1")
            if (p.curvature.n0, p.curvature.n1) != (self.n0, self.n1):
                raise DimensionError(f"point {p.label!r} has ranks {(p.curvature.n0, p.curvature.n1)}")
        if self.n0 == 0 and (len(pts) != 1 or pts[0].weight != 1):
            raise MeshError("an isolated fixed point needs exactly one node with weight 1")
        if self.pv_poles and not self.has_divisor:
            raise DomainError("pv_poles given on a component without a divisor")


@dataclass(frozen=True)
class CharacterReport:
    group_parameter: object
    per_component: tuple
    total: complex
    oracle_value: complex | None = None
    abs_error: float | None = None
    labels: tuple = ()


def _fsum_complex(values) -> complex:
    values = np.asarray(values, dtype=np.complex128)
    return complex(math.fsum(values.real), math.fsum(values.imag))


def point_values(c: FixedPointComponent) -> np.ndarray:
    """``density * orientation * top_component(integrand)`` at every node."""
    cache: dict = {}
    out = np.empty(len(c.points), dtype=np.complex128)
    for k, p in enumerate(c.points):
        key = (id(p.curvature), id(p.gamma))
        if key not in cache:
            cache[key] = assemble_integrand(p.curvature, p.gamma)
        out[k] = complex(p.density) * top_component(cache[key], p.orientation)
    return out


def evaluate_component(c: FixedPointComponent) -> complex:
    """Weighted sum of the integrand's top-degree part over the mesh."""
    vals = point_values(c)
    weights = np.array([p.weight for p in c.points])
    if c.pv_poles:
        coords = np.array([p.coord for p in c.points], dtype=float)
        return pv_quadrature(vals, weights, coords, c.pv_poles, period=c.period, axis=c.pv_axis)
    return _fsum_complex(weights * vals)


def evaluate_character(components: Sequence[FixedPointComponent], group_parameter=None,
                       oracle_value: complex | None = None) -> CharacterReport:
    """Sum component contributions in declared order."""
    per = tuple(evaluate_component(c) for c in components)
    total = _fsum_complex(per) if per else 0j
    err = None if oracle_value is None else abs(total - oracle_value)
    return CharacterReport(group_parameter, per, total, oracle_value, err, tuple(c.name for c in components))


# ---------------------------------------------------------------------------
# principal value

def symmetric_midpoint_mesh(a: float, b: float, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints and weights of ``resolution`` equal cells on ``[a, b]``."""
    if resolution < 1:
        raise MeshError("resolution must be positive")
    h = (b - a) / resolution
    x = a + (np.arange(resolution) + 0.5) * h
    return x, np.full(resolution, h)


def _wrap(x, period):
    return x if period is None else np.mod(x + period / 2, period) - period / 2


def pair_partners(coords: np.ndarray, poles: Sequence[float], period: float | None = None, axis: int = 0,
                  weights: np.ndarray | None = None, radius: float | None = None,
                  rtol: float = 1e-9) -> np.ndarray:
    """Index of each node's mirror image through its nearest pole.

    Nodes farther than ``radius`` from every pole get ``-1`` (no pairing).

    Raises
    ------
    MeshError
        A pole sits on a node, or a node near a pole has no mirror.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    poles = np.asarray(poles, dtype=float)
    x = coords[:, axis]
    npts = x.shape[0]
    span = np.ptp(x) if npts > 1 else 1.0
    tol = rtol * max(span, 1.0)
    delta = _wrap(x[:, None] - poles[None, :], period)
    dist = np.abs(delta)
    near = np.argmin(dist, axis=1)
    dnear = dist[np.arange(npts), near]
    if np.any(dnear <= tol):
        k = int(np.argmin(dnear))
        raise MeshError(f"pole {poles[near[k]]} sits on mesh node {x[k]}")
    others = np.delete(coords, axis, axis=1)
    wkey = np.zeros(npts) if weights is None else np.asarray(weights, dtype=float)
    # bucket nodes by their remaining coordinates
    keyed = np.round(np.column_stack([others, wkey]) / tol).astype(np.int64)
    buckets: dict = {}
    for k in range(npts):
        buckets.setdefault(tuple(keyed[k]), []).append(k)
    partner = np.full(npts, -1, dtype=np.int64)
    for members in buckets.values():
        members = np.array(members)
        if radius is not None:
            members = members[dnear[members] <= radius]
            if members.size == 0:
                continue
        xs = _wrap(x[members], period)
        order = np.argsort(xs)
        sx = xs[order]
        target = _wrap(2 * poles[near[members]] - x[members], period)
        pos = np.searchsorted(sx, target)
        last = len(sx) - 1
        hit = np.full(members.size, -1, dtype=np.int64)
        for cand in (np.clip(pos - 1, 0, last), np.clip(pos, 0, last), np.zeros_like(pos), np.full_like(pos, last)):
            ok = (hit < 0) & (np.abs(_wrap(sx[cand] - target, period)) <= tol)
            hit[ok] = members[order[cand[ok]]]
        bad = (hit < 0) | (near[np.maximum(hit, 0)] != near[members])
        if np.any(bad):
            k = members[np.argmax(bad)]
            raise MeshError(f"node {x[k]} has no mirror image through pole {poles[near[k]]}")
        partner[members] = hit
    idx = np.nonzero(partner >= 0)[0]
    if np.any(partner[partner[idx]] != idx):
        raise MeshError("mirror pairing is not an involution")
    return partner


def pv_quadrature(values, weights, coords, poles: Sequence[float], period: float | None = None, axis: int = 0,
                  radius: float | None = None) -> complex:
    """Principal-value sum by symmetric pairing around each pole.

    Parameters
    ----------
    values : array_like of complex
        Integrand at the nodes, including the ``1/x`` singular factor.
    weights : array_like of float
        Quadrature weights.
    coords : array_like
        Node coordinates, shape ``(N,)`` or ``(N, k)``.
    poles : sequence of float
        Pole locations along coordinate ``axis``.
    period : float, optional
        Period of the pole coordinate.
    radius : float, optional
        Only nodes within ``radius`` of a pole need a mirror.

    Returns
    -------
    complex
        Compensated sum in which mirrored contributions are added first.
    """
    values = np.asarray(values, dtype=np.complex128)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape:
        raise DimensionError("values and weights differ in length")
    if len(poles) == 0:
        return _fsum_complex(values * weights)
    partner = pair_partners(coords, poles, period, axis, weights, radius)
    return _kernels.pair_sum(np.ascontiguousarray(values * weights), partner)


def pv_integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, poles: Sequence[float],
                 resolution: int = DEFAULT_PV_RESOLUTION, period: float | None = None) -> complex:
    """Principal value of ``f`` over ``[a, b]`` on a midpoint mesh."""
    x, w = symmetric_midpoint_mesh(a, b, resolution)
    return pv_quadrature(f(x), w, x, poles, period=period)


# ---------------------------------------------------------------------------
# orientation bookkeeping

def orientation_sign(region_label: str, anchor_orientation_table: Mapping[str, int]) -> int:
    """Sign of the density on a region where the anchor is an isomorphism."""
    try:
        s = anchor_orientation_table[region_label]
    except KeyError:
        raise DomainError(f"unknown region {region_label!r}; known: {sorted(anchor_orientation_table)}") from None
    if s not in (1, -1):
        raise DomainError(f"region {region_label!r} has sign {s}")
    return s


def sign_along_path(path: Sequence[str], anchor_orientation_table: Mapping[str, int]) -> int:
    """Follow a path of regions, one hypersurface crossing per step.

    Every step must flip the sign; the sign of the final region is returned.
    """
    signs = [orientation_sign(r, anchor_orientation_table) for r in path]
    for a, b, s, t in zip(path, path[1:], signs, signs[1:]):
        if s != -t:
            raise DomainError(f"crossing from {a!r} to {b!r} does not flip orientation")
    return signs[-1]


def normalize_rotation(phi: float) -> tuple[float, int]:
    """Reduce a signed rotation angle to ``(theta, orientation)``, theta in (0, pi]."""
    # -pi keeps orientation -1: it is the same rotation as +pi with the opposite spin lift
    th = math.remainder(phi, 2 * math.pi)
    if abs(th) < 1e-15:
        raise DomainError(f"rotation by {phi} fixes the normal plane")
    return (th, 1) if th > 0 else (-th, -1)
