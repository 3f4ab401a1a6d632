"""Octonionic Dirac operator on the flat torus."""

from __future__ import annotations

import numpy as np

from . import octonion as oc
from .connection import (
    TorsionField,
    _site_sc,
    codiff,
    cov_d,
    ext_d,
    torsion_of_gauge,
)
from .forms import decompose_torsion

DELTA = np.concatenate([np.zeros((7, 1)), np.eye(7)], axis=1)  # delta_i = (0, e_i)


def dirac(A: np.ndarray, tf: TorsionField) -> np.ndarray:
    """``sum_i delta_i (D_i A)``."""
    DA = cov_d(A, tf)
    return np.sum(oc.mul(DELTA, DA, _site_sc(tf, 1)), axis=-2)


def div_T(A, tf: TorsionField) -> np.ndarray:
    """``div alpha - a0 Tr T + <alpha, T_|phi>``."""
    g = tf.grid
    a0, al = A[..., 0], A[..., 1:]
    div = sum(g.ddx(al[..., i], i) for i in range(7))
    trT = np.trace(tf.T, axis1=-2, axis2=-1)
    tphi = np.einsum("...ij,...ijk->...k", tf.T, tf.sc.phi)
    return div - a0 * trT + np.sum(al * tphi, axis=-1)


def grad_T(A, tf: TorsionField) -> np.ndarray:
    """``grad a0 - a0 T_|phi``."""
    a0 = A[..., 0]
    grad = np.stack([tf.grid.ddx(a0, m) for m in range(7)], axis=-1)
    tphi = np.einsum("...ij,...ijk->...k", tf.T, tf.sc.phi)
    return grad - a0[..., None] * tphi


def curl_T(A, tf: TorsionField) -> np.ndarray:
    """Torsion-twisted curl of the imaginary part."""
    al = A[..., 1:]
    dal = tf.grid.grad(al)  # (..., i, k) = d_i alpha_k
    curl = np.einsum("...mik,...ik->...m", tf.sc.phi, dal)
    trT = np.trace(tf.T, axis1=-2, axis2=-1)
    return (
        curl
        - np.einsum("...mijk,...j,...ik->...m", tf.sc.psi, al, tf.T)
        + np.einsum("...mk,...k->...m", tf.T, al)
        - al * trT[..., None]
        + np.einsum("...i,...im->...m", al, tf.T)
    )


def dirac_explicit(A: np.ndarray, tf: TorsionField) -> np.ndarray:
    """``(-div_T A, grad_T A + curl_T A)``, an independent evaluation of :func:`dirac`."""
    A = np.asarray(A, dtype=float)
    re = -div_T(A, tf)
    im = grad_T(A, tf) + curl_T(A, tf)
    return np.concatenate([re[..., None], im], axis=-1)


def dirac_squared(V, tf: TorsionField) -> np.ndarray:
    return dirac(dirac(V, tf), tf)


def lichnerowicz_residual(V, tf: TorsionField) -> float:
    """Lattice L2 norm of ``Dirac^2 V - d_D^* d_D V`` (scalar curvature term zero)."""
    diff = dirac_squared(V, tf) - codiff(ext_d(V, tf, 0), tf, 1)
    return float(np.sqrt(tf.grid.integrate(oc.norm2(diff))))


def energy_identity_residual(V, tf: TorsionField) -> float:
    """``|int |Dirac V|^2 - int |DV|^2|``."""
    g = tf.grid
    lhs = g.integrate(oc.norm2(dirac(V, tf)))
    rhs = g.integrate(np.sum(oc.norm2(cov_d(V, tf)), axis=-1))
    return float(abs(lhs - rhs))


def torsion_17_from_dirac(V, tf: TorsionField):
    """``(tau1, tau7)`` of the gauge-transformed torsion read off ``(Dirac V) V^-1``.

    The 14- and 27-parts are not determined by the Dirac operator.
    """
    w = oc.mul(dirac(V, tf), oc.inverse(V), tf.sc)
    return w[..., 0] / 7.0, -w[..., 1:] / 6.0


def torsion_17_from_gauge(V, tf: TorsionField):
    c = decompose_torsion(torsion_of_gauge(V, tf).T, torsion_of_gauge(V, tf).sc)
    return c.tau1, c.tau7


def clifford_residual(A, B, sc=None) -> float:
    """``max |L_A L_B + L_B L_A + 2<A,B> Id|`` over a batch of imaginary octonions."""
    LA = oc.left_matrix(A, sc)
    LB = oc.left_matrix(B, sc)
    anti = LA @ LB + LB @ LA + 2 * oc.inner(A, B)[..., None, None] * np.eye(8)
    return float(np.max(np.abs(anti)))


def delta_triple_table(sc=None) -> np.ndarray:
    """All 343 products ``delta_i (delta_j delta_k)``, shape (7, 7, 7, 8)."""
    d = DELTA
    jk = oc.mul(d[:, None, :], d[None, :, :], sc)  # (j, k, 8)
    return oc.mul(d[:, None, None, :], jk[None], sc)


def delta_triple_expected(sc=None) -> np.ndarray:
    from .forms import phi_tensor, psi_tensor

    phi = phi_tensor(sc)
    psi = psi_tensor(sc)
    g = np.eye(7)
    im = (
        np.einsum("aijk->ijka", psi)
        - np.einsum("ia,jk->ijka", g, g)
        + np.einsum("ja,ik->ijka", g, g)
        - np.einsum("ka,ij->ijka", g, g)
    )
    return np.concatenate([-phi[..., None], im], axis=-1)


def eigen_defect(V, tf: TorsionField) -> tuple[float, float]:
    """Best constant ``lam`` with ``dirac(V) ~ lam V`` and the max per-site misfit.

    Reported as a diagnostic; only eigensection => critical point is tested.
    """
    dv = dirac(V, tf)
    g = tf.grid
    lam = float(g.integrate(np.sum(dv * V, axis=-1)) / g.integrate(np.sum(V * V, axis=-1)))
    return lam, float(np.max(np.abs(dv - lam * V)))
