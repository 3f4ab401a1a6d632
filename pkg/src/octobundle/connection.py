"""Torsion, octonion covariant derivative and the exterior calculus built on it.

Octonion-valued p-forms are stored densely: a 1-form field has shape
``grid.shape + (7, 8)`` and a 2-form ``grid.shape + (7, 7, 8)`` with the
two form axes antisymmetric. Indices are lowered and raised with the flat
identity metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import octonion as oc
from .forms import (
    StructureConstants,
    TorsionComponents,
    antisymmetrize,
    decompose_torsion,
    hodge_star3,
    metric_from_phi,
    phi0,
    sigma,
)
from .lattice import Grid

# Curvature terms vanish on the flat torus. Every identity that would carry a
# Riem contribution adds this constant so the extension point is greppable.
RIEM_FLAT = 0.0


@dataclass(eq=False)
class TorsionField:
    """Per-site torsion ``T[..., a, m] = T_a^m`` of the G2-structure ``phi``.

    ``phi`` has shape ``grid.shape + (7, 7, 7)`` or ``(7, 7, 7)`` for a
    constant structure.
    """

    grid: Grid
    T: np.ndarray
    phi: np.ndarray

    @cached_property
    def sc(self) -> StructureConstants:
        return StructureConstants(self.phi, hodge_star3(self.phi), np.eye(7))

    @cached_property
    def components(self) -> TorsionComponents:
        return decompose_torsion(self.T, self.sc)

    def as_oneform(self) -> np.ndarray:
        """``T_a = (0, T_a^.)`` as an octonion 1-form field."""
        return np.concatenate([np.zeros(self.T.shape[:-1] + (1,)), self.T], axis=-1)

    def reassembly_error(self) -> float:
        return float(np.max(np.abs(self.components.reassemble(self.sc) - self.T)))


def phi_field(grid: Grid, phi=None) -> np.ndarray:
    full = phi0().full() if phi is None else np.asarray(phi, dtype=float)
    return np.broadcast_to(full, grid.shape + (7, 7, 7)).copy()


def zero_torsion(grid: Grid, phi=None) -> TorsionField:
    return TorsionField(grid, np.zeros(grid.shape + (7, 7)), phi_field(grid, phi))


def check_structure(grid: Grid, phi: np.ndarray, tol: float = 1e-8) -> None:
    """Raise if any site carries a non-positive form or a non-identity metric."""
    g, _, positive = metric_from_phi(phi)
    positive = np.broadcast_to(positive, grid.shape)
    if not np.all(positive):
        site = tuple(int(i) for i in np.argwhere(~positive)[0])
        raise ValueError(f"3-form is not positive at site {site}")
    dev = np.max(np.abs(g - np.eye(7)), axis=(-2, -1))
    if np.any(dev > tol):
        site = tuple(int(i) for i in np.unravel_index(np.argmax(dev), dev.shape))
        raise ValueError(f"associated metric is not the flat metric at site {site} (deviation {dev.max():.3g})")


def full_torsion(grid: Grid, phi: np.ndarray, check: bool = True) -> TorsionField:
    """``T_a^m = (1/48) (d_a phi_bcd) psi^mbcd`` with ``psi = *phi`` per site."""
    phi = np.asarray(phi, dtype=float)
    if check:
        check_structure(grid, phi)
    psi = hodge_star3(phi)
    dphi = grid.grad(phi)  # (..., a, b, c, d)
    T = np.einsum("...abcd,...mbcd->...am", dphi, psi) / 48.0
    return TorsionField(grid, T, phi)


def codiffphi_residual(tf: TorsionField) -> np.ndarray:
    """Per-site max of ``|d_a phi_bcd - 2 T_a^e psi_ebcd|``."""
    dphi = tf.grid.grad(tf.phi)
    rhs = 2 * np.einsum("...ae,...ebcd->...abcd", tf.T, tf.sc.psi)
    return np.max(np.abs(dphi - rhs), axis=(-4, -3, -2, -1))


def _site_sc(tf: TorsionField, ndim_extra: int) -> StructureConstants:
    """Structure constants broadcastable against fields with extra axes after the lattice axes."""
    if ndim_extra == 0:
        return tf.sc
    pad = (slice(None),) * tf.grid.ndim + (None,) * ndim_extra
    phi = tf.sc.phi if tf.sc.phi.ndim == 3 else tf.sc.phi[pad]
    psi = tf.sc.psi if tf.sc.psi.ndim == 4 else tf.sc.psi[pad]
    return StructureConstants(phi, psi, np.eye(7))


def _right_mul_T(Q: np.ndarray, tf: TorsionField, p: int) -> np.ndarray:
    """``(Q T)[b1..bp, c] = Q_{b1..bp} T_c`` (new trailing form axis)."""
    Tf = tf.as_oneform()  # (..., 7, 8)
    sl = (slice(None),) * tf.grid.ndim
    Qe = Q[sl + (Ellipsis, None, slice(None))] if p else Q[..., None, :]
    Te = Tf[sl + (None,) * p + (slice(None), slice(None))]
    return oc.mul(Qe, Te, _site_sc(tf, p + 1))


def cov_d(A: np.ndarray, tf: TorsionField) -> np.ndarray:
    """``D_i A = d_i A - A T_i``; returns a 1-form field ``(..., 7, 8)``."""
    return ext_d(A, tf, 0)


def ext_d(Q: np.ndarray, tf: TorsionField, p: int) -> np.ndarray:
    """Exterior covariant derivative of an octonion p-form.

    ``(p+1) [ d_{b1} Q_{b2..b(p+1)} - (-1)^p Q_{b1..bp} T_{b(p+1)} ]`` antisymmetrized.
    """
    grid = tf.grid
    Q = np.asarray(Q, dtype=float)
    dq = grid.grad(Q)  # derivative axis first
    term = dq - (-1) ** p * _right_mul_T(Q, tf, p)
    if p == 0:
        return term
    axes = tuple(range(grid.ndim, grid.ndim + p + 1))
    return (p + 1) * antisymmetrize(term, axes)


def codiff(P: np.ndarray, tf: TorsionField, p: int) -> np.ndarray:
    """``(d_D^* P)_{b2..bp} = -(d_{b1} P_{b1 b2..} - P_{b1 b2..} T_{b1})``."""
    grid = tf.grid
    P = np.asarray(P, dtype=float)
    if p < 1:
        raise ValueError("codiff needs p >= 1")
    k = grid.ndim  # position of the first form axis
    div = sum(grid.ddx(np.take(P, b, axis=k), b) for b in range(7))
    Tf = tf.as_oneform()
    extra = p - 1
    sc = _site_sc(tf, extra)
    prod = 0.0
    for b in range(7):
        Tb = Tf[(slice(None),) * k + (b,)]
        Tb = Tb[(slice(None),) * k + (None,) * extra] if extra else Tb
        prod = prod + oc.mul(np.take(P, b, axis=k), Tb, sc)
    return -(div - prod)


def form_inner(P: np.ndarray, Q: np.ndarray, grid: Grid, p: int) -> np.ndarray:
    """Pointwise ``(1/p!) sum over index tuples of <P, Q>``."""
    axes = tuple(range(grid.ndim, np.ndim(P)))
    return np.sum(np.asarray(P) * np.asarray(Q), axis=axes) / math.factorial(p)


def pairing(P: np.ndarray, Q: np.ndarray, grid: Grid, p: int) -> float:
    """L2 inner product of octonion p-forms."""
    return float(grid.integrate(form_inner(P, Q, grid, p)))


def laplacian_dd(A: np.ndarray, tf: TorsionField) -> np.ndarray:
    """``D^* D A`` (nonnegative operator)."""
    return codiff(cov_d(A, tf), tf, 1)


def d_squared(A: np.ndarray, tf: TorsionField) -> np.ndarray:
    """``D^2 A = D_i D^i A``, which is ``-D^* D A`` on the flat torus."""
    return -laplacian_dd(A, tf)


def rayleigh_quotient(A: np.ndarray, tf: TorsionField) -> float:
    """``<D*D A, A> / <A, A>``; small values flag near-parallel sections.

    Diagnostic only: the discrete converse of "D^2 A = 0 implies DA = 0" is not claimed.
    """
    num = pairing(laplacian_dd(A, tf), A, tf.grid, 0)
    den = pairing(A, A, tf.grid, 0)
    return float(num / den)


def gauge_structure(V: np.ndarray, tf: TorsionField) -> np.ndarray:
    """``sigma_V(phi)`` per site."""
    return sigma(V, tf.phi)


def _require_unit(V: np.ndarray, tol: float = 1e-12) -> None:
    dev = np.abs(oc.norm2(V) - 1)
    if np.any(dev > tol):
        raise ValueError(f"gauge field must be unit norm (max deviation {dev.max():.3g})")


def torsion_of_gauge(V: np.ndarray, tf: TorsionField, return_both: bool = False):
    """Torsion of ``sigma_V(phi)`` from ``-(DV) V^-1``.

    Also evaluates ``Im(Ad_V T + V dV^-1)``; with ``return_both`` the
    discrepancy between the two formulas is returned as well.
    """
    _require_unit(V)
    grid = tf.grid
    V = np.asarray(V, dtype=float)
    sc1 = _site_sc(tf, 1)
    vinv = oc.inverse(V)
    Ve = V[..., None, :]
    dv = cov_d(V, tf)
    path1 = -oc.mul(dv, vinv[..., None, :], sc1)
    adT = np.einsum("...ij,...aj->...ai", oc.ad_matrix(V, tf.sc), tf.T)
    dvinv = grid.grad(vinv)
    path2 = adT + oc.mul(Ve, dvinv, sc1)[..., 1:]
    new = TorsionField(grid, path1[..., 1:], gauge_structure(V, tf))
    if return_both:
        return new, float(np.max(np.abs(path1[..., 1:] - path2)))
    return new


def bianchi_residual(tf: TorsionField) -> np.ndarray:
    """Per-site max over (a,b,c) of ``d_a T_bc - d_b T_ac + 2 T_am T_bn phi_mnc`` (+ Riem)."""
    dT = tf.grid.grad(tf.T)  # (..., a, b, c)
    quad = 2 * np.einsum("...am,...bn,...mnc->...abc", tf.T, tf.T, tf.sc.phi)
    res = dT - np.swapaxes(dT, -3, -2) + quad + RIEM_FLAT
    return np.max(np.abs(res), axis=(-3, -2, -1))


def scalar_curvature_residual(tf: TorsionField) -> np.ndarray:
    """``42 tau1^2 + 30|tau7|^2 - |tau14|^2 - |tau27|^2 + 6 div tau7 - R/4`` with R = 0."""
    c = tf.components
    div7 = sum(tf.grid.ddx(c.tau7[..., a], a) for a in range(7))
    return (
        42 * c.tau1**2
        + 30 * np.sum(c.tau7**2, axis=-1)
        - np.sum(c.tau14**2, axis=(-2, -1))
        - np.sum(c.tau27**2, axis=(-2, -1))
        + 6 * div7
        - RIEM_FLAT
    )


def torsion_divergence(tf: TorsionField) -> np.ndarray:
    """``(Div T)^m = d_a T_a^m``."""
    return sum(tf.grid.ddx(tf.T[..., a, :], a) for a in range(7))


def reference_torsion(grid: Grid, W: np.ndarray) -> TorsionField:
    """Torsion field of ``sigma_W(phi0)`` computed by finite differences."""
    return full_torsion(grid, sigma(W, phi_field(grid)))
