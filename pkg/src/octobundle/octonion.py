"""Octonion algebra defined by a positive 3-form.

Octonions are float arrays with trailing axis of length 8: index 0 is the
real part, indices 1..7 the imaginary 7-vector. Every function broadcasts
over leading axes, and the structure 3-form may itself carry batch axes
(one G2-structure per lattice site).
"""

from __future__ import annotations

import numpy as np

from .forms import StructureConstants, phi_tensor, psi_tensor

ONE = np.array([1.0, 0, 0, 0, 0, 0, 0, 0])


def octonion(re=0.0, im=None) -> np.ndarray:
    out = np.zeros(8)
    out[0] = re
    if im is not None:
        out[1:] = im
    return out


def basis(i: int) -> np.ndarray:
    """Imaginary unit e_{i+1} as an octonion (0-based i)."""
    out = np.zeros(8)
    out[i + 1] = 1.0
    return out


def cross(alpha, beta, sc=None) -> np.ndarray:
    return np.einsum("...abc,...b,...c->...a", phi_tensor(sc), alpha, beta)


def mul(A, B, sc: StructureConstants | None = None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    a, al = A[..., 0], A[..., 1:]
    b, be = B[..., 0], B[..., 1:]
    re = a * b - np.sum(al * be, axis=-1)
    im = a[..., None] * be + b[..., None] * al + cross(al, be, sc)
    return np.concatenate([re[..., None], im], axis=-1)


def conj(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return np.concatenate([A[..., :1], -A[..., 1:]], axis=-1)


def norm2(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return np.sum(A * A, axis=-1)


def norm(A) -> np.ndarray:
    return np.sqrt(norm2(A))


def inner(A, B) -> np.ndarray:
    return np.sum(np.asarray(A) * np.asarray(B), axis=-1)


def _require_nonzero(A, what: str):
    n2 = norm2(A)
    if np.any(n2 == 0):
        raise ZeroDivisionError(f"{what}: zero octonion")
    return n2


def inverse(A) -> np.ndarray:
    n2 = _require_nonzero(A, "inverse")
    return conj(A) / n2[..., None]


def commutator(A, B, sc=None) -> np.ndarray:
    return mul(A, B, sc) - mul(B, A, sc)


def associator(A, B, C, sc=None) -> np.ndarray:
    return mul(A, mul(B, C, sc), sc) - mul(mul(A, B, sc), C, sc)


def associator_psi(A, B, C, sc=None) -> np.ndarray:
    """Closed form ``2 psi(., alpha, beta, gamma)`` of the associator."""
    im = 2 * np.einsum(
        "...abcd,...b,...c,...d->...a",
        psi_tensor(sc),
        np.asarray(A)[..., 1:],
        np.asarray(B)[..., 1:],
        np.asarray(C)[..., 1:],
    )
    return np.concatenate([np.zeros(im.shape[:-1] + (1,)), im], axis=-1)


def exp_im(alpha) -> np.ndarray:
    """``cos|alpha| + alpha sin|alpha| / |alpha|``."""
    alpha = np.asarray(alpha, dtype=float)
    r = np.sqrt(np.sum(alpha * alpha, axis=-1))
    sinc = np.sinc(r / np.pi)  # sin(r)/r, equal to 1 at r = 0
    return np.concatenate([np.cos(r)[..., None], alpha * sinc[..., None]], axis=-1)


def pow_int(B, k: int, sc=None) -> np.ndarray:
    """Integer power via ``|B|^k (cos k theta + beta_hat sin k theta / sin theta)``.

    ``beta_hat = beta / |B|`` and ``cos theta = b / |B|``. When ``beta = 0``
    the ratio is replaced by its limit ``k (+-1)^(k-1)``.
    """
    B = np.asarray(B, dtype=float)
    k = int(k)
    if k == 0:
        return np.broadcast_to(ONE, B.shape).copy()
    if k == 1:
        return B.copy()
    if k < 0:
        return pow_int(inverse(B), -k, sc)
    r = norm(B)
    b = B[..., 0]
    beta = B[..., 1:]
    bn = np.sqrt(np.sum(beta * beta, axis=-1))
    theta = np.arctan2(bn, b)
    s = np.sin(theta)
    small = np.abs(s) < 1e-8
    safe_s = np.where(small, 1.0, s)
    # U_{k-1}(cos theta) = sin k theta / sin theta, continuous through theta = 0, pi
    ratio = np.where(small, k * np.where(np.cos(theta) >= 0, 1.0, (-1.0) ** (k - 1)), np.sin(k * theta) / safe_s)
    rk = r**k
    safe_r = np.where(r == 0, 1.0, r)
    re = rk * np.cos(k * theta)
    im = (rk / safe_r * ratio)[..., None] * beta
    return np.concatenate([re[..., None], im], axis=-1)


def ad_matrix(V, sc=None) -> np.ndarray:
    """Matrix of ``A -> V A V^-1`` restricted to the imaginary octonions."""
    V = np.asarray(V, dtype=float)
    n2 = _require_nonzero(V, "ad_matrix")
    v0 = V[..., 0]
    v = V[..., 1:]
    vphi = np.einsum("...c,...cab->...ab", v, phi_tensor(sc))
    eye = np.eye(7)
    m = (
        (v0 * v0 - np.sum(v * v, axis=-1))[..., None, None] * eye
        - 2 * v0[..., None, None] * vphi
        + 2 * np.einsum("...a,...b->...ab", v, v)
    )
    return m / n2[..., None, None]


def ad(V, A, sc=None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    im = np.einsum("...ab,...b->...a", ad_matrix(V, sc), A[..., 1:])
    return np.concatenate([A[..., :1], im], axis=-1)


def circ_v(A, B, V, sc=None) -> np.ndarray:
    """Deformed product ``(AV)(V^-1 B)``."""
    _require_nonzero(V, "circ_v")
    return mul(mul(A, V, sc), mul(inverse(V), B, sc), sc)


def circ_v_assoc(A, B, V, sc=None) -> np.ndarray:
    """Same product written as ``AB + [A,B,V] V^-1``."""
    return mul(A, B, sc) + mul(associator(A, B, V, sc), inverse(V), sc)


def associator_v(A, B, C, V, sc=None) -> np.ndarray:
    """``A o_V (B o_V C) - (A o_V B) o_V C``."""
    return circ_v(A, circ_v(B, C, V, sc), V, sc) - circ_v(circ_v(A, B, V, sc), C, V, sc)


def associator_v_closed(A, B, C, V, sc=None) -> np.ndarray:
    """``[A,B,CV] V^-1 - [A,B,V](V^-1 C)``."""
    vinv = inverse(V)
    return mul(associator(A, B, mul(C, V, sc), sc), vinv, sc) - mul(
        associator(A, B, V, sc), mul(vinv, C, sc), sc
    )


def left_matrix(A, sc=None) -> np.ndarray:
    """8x8 matrix of left multiplication ``X -> A X``."""
    A = np.asarray(A, dtype=float)
    eye = np.eye(8)
    cols = mul(A[..., None, :], eye, sc)  # (..., 8 columns, 8)
    return np.swapaxes(cols, -1, -2)
