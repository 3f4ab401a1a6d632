"""Exterior-algebra machinery on R^7 for G2-structures.

Three- and four-forms are stored compressed (35 components over strictly
increasing index tuples, lexicographic order) in :class:`ThreeForm` and
:class:`FourForm`; the numerical kernels work on dense antisymmetric arrays
of shape ``(..., 7, 7, 7)`` / ``(..., 7, 7, 7, 7)``. Leading batch axes are
allowed everywhere so that a whole lattice of forms is handled at once.

Indices are 0-based (``0`` is ``e^1``); JSON uses the conventional 1-based
labels.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass

import numpy as np

DIM = 7

TRIPLES: tuple[tuple[int, int, int], ...] = tuple(itertools.combinations(range(DIM), 3))
QUADS: tuple[tuple[int, int, int, int], ...] = tuple(itertools.combinations(range(DIM), 4))


def perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (0 if an entry repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _scatter_table(k: int, tuples):
    """For every full k-index, (position in the canonical list, sign)."""
    pos = {t: i for i, t in enumerate(tuples)}
    shape = (DIM,) * k
    where = np.zeros(shape, dtype=np.intp)
    sign = np.zeros(shape)
    for idx in itertools.product(range(DIM), repeat=k):
        s = perm_sign(idx)
        if s:
            where[idx] = pos[tuple(sorted(idx))]
            sign[idx] = s
    return where, sign


_WHERE3, _SIGN3 = _scatter_table(3, TRIPLES)
_WHERE4, _SIGN4 = _scatter_table(4, QUADS)
_T3 = np.array(TRIPLES)
_Q4 = np.array(QUADS)


class _CompressedForm:
    degree = 0
    _tuples: tuple = ()

    def __init__(self, comp):
        comp = np.asarray(comp, dtype=float)
        if comp.shape[-1:] != (35,):
            raise ValueError(f"expected trailing dimension 35, got shape {comp.shape}")
        self.comp = comp

    def __getitem__(self, idx):
        idx = tuple(int(i) for i in idx)
        s = perm_sign(idx)
        if len(idx) != self.degree:
            raise IndexError(f"{type(self).__name__} takes {self.degree} indices")
        if s == 0:
            return np.zeros(self.comp.shape[:-1])[()]
        return s * self.comp[..., self._tuples.index(tuple(sorted(idx)))]

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.comp.shape[:-1]})"

    def __eq__(self, other):
        return type(self) is type(other) and np.array_equal(self.comp, other.comp)

    def __add__(self, other):
        return type(self)(self.comp + other.comp)

    def __sub__(self, other):
        return type(self)(self.comp - other.comp)

    def __neg__(self):
        return type(self)(-self.comp)

    def __mul__(self, k):
        return type(self)(self.comp * k)

    __rmul__ = __mul__


class ThreeForm(_CompressedForm):
    """Totally antisymmetric rank-3 tensor, 35 canonical components."""

    degree = 3
    _tuples = TRIPLES

    def full(self) -> np.ndarray:
        return self.comp[..., _WHERE3] * _SIGN3

    @classmethod
    def from_full(cls, t) -> ThreeForm:
        t = np.asarray(t, dtype=float)
        return cls(t[..., _T3[:, 0], _T3[:, 1], _T3[:, 2]])

    @classmethod
    def from_terms(cls, terms: dict) -> ThreeForm:
        """Build from ``{(i, j, k): value}`` with 1-based labels, e.g. ``(1, 2, 3)`` for e^123."""
        comp = np.zeros(35)
        for idx, val in terms.items():
            zero_based = tuple(i - 1 for i in idx)
            s = perm_sign(zero_based)
            if s == 0:
                raise ValueError(f"repeated index in {idx}")
            comp[TRIPLES.index(tuple(sorted(zero_based)))] += s * val
        return cls(comp)

    def to_json(self) -> str:
        if self.comp.ndim != 1:
            raise ValueError("only a single 3-form serializes to JSON")
        triples = [[a + 1, b + 1, c + 1, float(v)] for (a, b, c), v in zip(TRIPLES, self.comp) if v != 0.0]
        return json.dumps({"triples": triples})

    @classmethod
    def from_json(cls, text: str) -> ThreeForm:
        data = json.loads(text)
        return cls.from_terms({tuple(int(i) for i in t[:3]): float(t[3]) for t in data["triples"]})


class FourForm(_CompressedForm):
    """Totally antisymmetric rank-4 tensor, 35 canonical components."""

    degree = 4
    _tuples = QUADS

    def full(self) -> np.ndarray:
        return self.comp[..., _WHERE4] * _SIGN4

    @classmethod
    def from_full(cls, t) -> FourForm:
        t = np.asarray(t, dtype=float)
        return cls(t[..., _Q4[:, 0], _Q4[:, 1], _Q4[:, 2], _Q4[:, 3]])


def as_full(form) -> np.ndarray:
    if isinstance(form, _CompressedForm):
        return form.full()
    return np.asarray(form, dtype=float)


def _like(template, full: np.ndarray):
    if isinstance(template, ThreeForm):
        return ThreeForm.from_full(full)
    if isinstance(template, FourForm):
        return FourForm.from_full(full)
    return full


PHI0_TERMS = {
    (1, 2, 3): 1.0,
    (1, 4, 5): 1.0,
    (1, 6, 7): 1.0,
    (2, 4, 6): 1.0,
    (2, 5, 7): -1.0,
    (3, 4, 7): -1.0,
    (3, 5, 6): -1.0,
}


def phi0() -> ThreeForm:
    """The standard positive 3-form e^123 + e^145 + e^167 + e^246 - e^257 - e^347 - e^356."""
    return ThreeForm.from_terms(PHI0_TERMS)


# Levi-Civita symbol on 7 letters as a sparse list of (permutation, sign).
@functools.lru_cache(maxsize=None)
def _levi_civita():
    perms = np.array(list(itertools.permutations(range(DIM))), dtype=np.intp)
    signs = np.array([perm_sign(p) for p in perms], dtype=float)
    return perms, signs


def _complement_tables(k: int):
    """For each canonical k-tuple: the complementary sorted tuple and sign of the concatenation."""
    tuples = TRIPLES if k == 3 else QUADS
    comps, signs = [], []
    for t in tuples:
        rest = tuple(i for i in range(DIM) if i not in t)
        comps.append(rest)
        signs.append(perm_sign(t + rest))
    return np.array(comps), np.array(signs, dtype=float)


_COMP3, _ = _complement_tables(3)  # triple -> quadruple
_COMP4, _ = _complement_tables(4)  # quadruple -> triple


def _metric_factors(g):
    if g is None:
        return None, 1.0
    g = np.asarray(g, dtype=float)
    eig = np.linalg.eigvalsh(g)
    if np.any(eig <= 0):
        raise ValueError("metric must be positive definite")
    return np.linalg.inv(g), np.sqrt(np.linalg.det(g))


def hodge_star3(phi, g=None):
    """Hodge dual of a 3-form, ``psi_abcd = (1/3!) eps_abcd^efg phi_efg sqrt(det g)``.

    ``g`` defaults to the Euclidean metric; orientation is e^1234567. Returns
    a :class:`FourForm` for a :class:`ThreeForm` input, else a dense array.
    """
    full = as_full(phi)
    ginv, vol = _metric_factors(g)
    if ginv is not None:
        full = np.einsum("...abc,ad,be,cf->...def", full, ginv, ginv, ginv)
    up = full[..., _T3[:, 0], _T3[:, 1], _T3[:, 2]]  # phi^{efg} on canonical triples
    comp = np.zeros(up.shape[:-1] + (35,))
    # psi on the quadruple complementary to each triple
    quad_pos = [QUADS.index(tuple(q)) for q in _COMP3]
    sgn = np.array([perm_sign(tuple(q) + t) for q, t in zip(_COMP3, TRIPLES)], dtype=float)
    comp[..., quad_pos] = sgn * up * vol
    out = FourForm(comp)
    return out if isinstance(phi, ThreeForm) else out.full()


def hodge_star4(psi, g=None):
    """Hodge dual of a 4-form (``(1/4!) eps_abcd^efg psi^abcd sqrt(det g)``)."""
    full = as_full(psi)
    ginv, vol = _metric_factors(g)
    if ginv is not None:
        full = np.einsum("...abcd,ae,bf,cg,dh->...efgh", full, ginv, ginv, ginv, ginv)
    up = full[..., _Q4[:, 0], _Q4[:, 1], _Q4[:, 2], _Q4[:, 3]]
    comp = np.zeros(up.shape[:-1] + (35,))
    tri_pos = [TRIPLES.index(tuple(t)) for t in _COMP4]
    sgn = np.array([perm_sign(q + tuple(t)) for q, t in zip(QUADS, _COMP4)], dtype=float)
    comp[..., tri_pos] = sgn * up * vol
    out = ThreeForm(comp)
    return out if isinstance(psi, FourForm) else out.full()


def bilinear_form(phi) -> np.ndarray:
    """Coefficient of e^1..7 in ``(1/6)(u_|phi)^(v_|phi)^phi`` on basis vectors.

    Equals ``(1/144) phi_iab phi_jcd phi_efg eps^abcdefg``; the epsilon
    contraction of the last factor is the Euclidean Hodge dual, leaving
    ``(1/24) phi_iab phi_jcd (*phi)_abcd``.
    """
    full = as_full(phi)
    dual = hodge_star3(full)
    return np.einsum("...iab,...jcd,...abcd->...ij", full, full, dual, optimize=True) / 24.0


def bilinear_form_bruteforce(phi) -> np.ndarray:
    """Same as :func:`bilinear_form` by summing over all 5040 permutations."""
    full = as_full(phi)
    perms, signs = _levi_civita()
    p = perms.T
    x = full[..., :, p[0], p[1]]
    y = full[..., :, p[2], p[3]]
    z = full[..., p[4], p[5], p[6]] * signs
    return np.einsum("...ip,...jp,...p->...ij", x, y, z) / 144.0


def metric_from_phi(phi):
    """Metric, volume factor and positivity flag determined by a 3-form.

    With ``B = bilinear_form(phi)`` the metric is ``B / det(B)^(1/9)`` and the
    volume factor ``det(B)^(1/9)``, normalized so that phi0 gives the identity.
    The flag is True where ``B`` is positive definite; elsewhere the metric is
    returned as NaN.
    """
    b = bilinear_form(phi)
    sym = 0.5 * (b + np.swapaxes(b, -1, -2))
    eig = np.linalg.eigvalsh(sym)
    positive = np.all(eig > 0, axis=-1)
    det = np.where(positive, np.prod(np.where(positive[..., None], eig, 1.0), axis=-1), 1.0)
    vol = det ** (1.0 / 9.0)
    g = np.where(positive[..., None, None], sym / vol[..., None, None], np.nan)
    vol = np.where(positive, vol, np.nan)
    if np.ndim(positive) == 0:
        return g, float(vol), bool(positive)
    return g, vol, positive


@dataclass(frozen=True, eq=False)
class StructureConstants:
    """Octonion structure determined by a positive 3-form.

    ``phi`` and ``psi`` are dense arrays with optional leading batch axes;
    ``psi`` is always the Hodge dual of ``phi`` under the Euclidean metric.
    """

    phi: np.ndarray
    psi: np.ndarray
    metric: np.ndarray

    @classmethod
    def from_phi(cls, phi, metric=None) -> StructureConstants:
        full = as_full(phi)
        g = np.eye(DIM) if metric is None else np.asarray(metric, dtype=float)
        psi = hodge_star3(full, None if metric is None else g)
        return cls(full, np.asarray(psi), g)

    @classmethod
    @functools.lru_cache(maxsize=None)
    def standard(cls) -> StructureConstants:
        return cls.from_phi(phi0())


def phi_tensor(sc) -> np.ndarray:
    """Dense 3-form from a StructureConstants, ThreeForm or array."""
    if sc is None:
        return StructureConstants.standard().phi
    if isinstance(sc, StructureConstants):
        return sc.phi
    return as_full(sc)


def psi_tensor(sc) -> np.ndarray:
    if sc is None:
        return StructureConstants.standard().psi
    if isinstance(sc, StructureConstants):
        return sc.psi
    return hodge_star3(as_full(sc))


def wedge_1_2(alpha, omega) -> np.ndarray:
    """``(alpha ^ omega)_abc = alpha_a omega_bc + alpha_b omega_ca + alpha_c omega_ab``."""
    t = np.einsum("...a,...bc->...abc", alpha, omega)
    return t + np.einsum("...abc->...bca", t) + np.einsum("...abc->...cab", t)


def sigma(A, phi=None, metric=None):
    """Isometric deformation of a 3-form by a nonzero octonion ``A = (a, alpha)``.

    ``((a^2 - |alpha|^2) phi - 2 a alpha_|psi + 2 alpha ^ (alpha_|phi)) / |A|^2``
    with ``psi = *phi``. ``A`` may carry batch axes matching a batched ``phi``.
    """
    if phi is None:
        phi = phi0()
    full = as_full(phi)
    psi = np.asarray(hodge_star3(full, metric))
    A = np.asarray(A, dtype=float)
    n2 = np.sum(A * A, axis=-1)
    if np.any(n2 == 0):
        raise ValueError("sigma requires a nonzero octonion")
    a = A[..., 0]
    al = A[..., 1:]
    al_phi = np.einsum("...a,...abc->...bc", al, full)
    al_psi = np.einsum("...a,...abcd->...bcd", al, psi)
    out = (
        (a * a - np.sum(al * al, axis=-1))[..., None, None, None] * full
        - 2 * a[..., None, None, None] * al_psi
        + 2 * wedge_1_2(al, al_phi)
    ) / n2[..., None, None, None]
    return _like(phi, out)


def vec_to_2form(v, sc=None) -> np.ndarray:
    """``(v _| phi)_ab = v^c phi_cab``."""
    return np.einsum("...c,...cab->...ab", v, phi_tensor(sc))


def form2_to_vec(omega, sc=None) -> np.ndarray:
    """``(omega _| phi)_c = omega_ab phi_abc``."""
    return np.einsum("...ab,...abc->...c", omega, phi_tensor(sc))


def project_2form(omega, sc=None):
    """Split an antisymmetric 2-tensor into its Lambda^2_7 vector and Lambda^2_14 part."""
    omega = np.asarray(omega, dtype=float)
    pi7 = form2_to_vec(omega, sc) / 6.0
    pi14 = omega - vec_to_2form(pi7, sc)
    return pi7, pi14


def i_phi(h, sc=None) -> np.ndarray:
    """The map ``h -> h_[a^d phi_bc]d`` from symmetric 2-tensors to 3-forms."""
    t = np.einsum("...ad,...bcd->...abc", h, phi_tensor(sc))
    return (t + np.einsum("...abc->...bca", t) + np.einsum("...abc->...cab", t)) / 3.0


def sym_traceless(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    s = 0.5 * (m + np.swapaxes(m, -1, -2))
    tr = np.trace(s, axis1=-2, axis2=-1)
    return s - tr[..., None, None] * np.eye(DIM) / DIM


def project_3form(chi, sc=None):
    """Split a 3-form as ``pi1 * phi + pi7 _| psi + i_phi(pi27)``.

    Returns ``(pi1, pi7, pi27)`` with ``pi27`` symmetric traceless.
    """
    phi = phi_tensor(sc)
    psi = psi_tensor(sc)
    chi = as_full(chi)
    pi1 = np.einsum("...abc,...abc->...", chi, phi) / 42.0
    pi7 = np.einsum("...bcd,...abcd->...a", chi, psi) / 24.0
    rest = chi - pi1[..., None, None, None] * phi - np.einsum("...a,...abcd->...bcd", pi7, psi)
    # j(i_phi(h)) = (4/3) h on traceless symmetric h
    pi27 = 0.75 * sym_traceless(np.einsum("...acd,...bcd->...ab", rest, phi))
    return pi1, pi7, pi27


@dataclass
class TorsionComponents:
    """``T = tau1 g + tau7 _| phi + tau14 + tau27``."""

    tau1: np.ndarray
    tau7: np.ndarray
    tau14: np.ndarray
    tau27: np.ndarray

    def reassemble(self, sc=None) -> np.ndarray:
        return (
            np.asarray(self.tau1)[..., None, None] * np.eye(DIM)
            + vec_to_2form(self.tau7, sc)
            + self.tau14
            + self.tau27
        )

    def norms(self) -> dict:
        """Pointwise Euclidean norms (full-tensor sums for the matrix pieces)."""
        return {
            "tau1": np.abs(self.tau1),
            "tau7": np.sqrt(np.sum(self.tau7**2, axis=-1)),
            "tau14": np.sqrt(np.sum(self.tau14**2, axis=(-2, -1))),
            "tau27": np.sqrt(np.sum(self.tau27**2, axis=(-2, -1))),
        }


def decompose_torsion(T, sc=None) -> TorsionComponents:
    T = np.asarray(T, dtype=float)
    tau1 = np.trace(T, axis1=-2, axis2=-1) / DIM
    skew = 0.5 * (T - np.swapaxes(T, -1, -2))
    tau7, tau14 = project_2form(skew, sc)
    tau27 = sym_traceless(T)
    return TorsionComponents(tau1, tau7, tau14, tau27)


def antisymmetrize(t, axes) -> np.ndarray:
    """Average of signed permutations of the listed axes (the ``[...]`` bracket)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    perms = list(itertools.permutations(range(len(axes))))
    for p in perms:
        order = list(range(t.ndim))
        for src, dst in zip(axes, p):
            order[src] = axes[dst]
        out += perm_sign(p) * np.transpose(t, order)
    return out / len(perms)


def verify_contraction_identities(sc=None, rng=None, trials: int = 100) -> dict:
    """Maximum residuals of the phi-phi, phi-psi and double cross product identities.

    Works for any 3-form (a non-G2 form simply gives large residuals).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    phi = phi_tensor(sc)
    psi = psi_tensor(sc)
    g = np.eye(DIM)
    phiphi = np.einsum("abc,mnc->abmn", phi, phi)
    expected = np.einsum("am,bn->abmn", g, g) - np.einsum("an,bm->abmn", g, g) + psi
    r_phiphi = float(np.max(np.abs(phiphi - expected)))

    lhs = np.einsum("abc,mnpc->abmnp", phi, psi)
    t1 = antisymmetrize(np.einsum("am,npb->abmnp", g, phi), (2, 3, 4))
    t2 = antisymmetrize(np.einsum("bm,npa->abmnp", g, phi), (2, 3, 4))
    r_phipsi = float(np.max(np.abs(lhs + 3 * (t1 - t2))))

    x = rng.uniform(-1, 1, size=(trials, 3, DIM))
    al, be, ga = x[:, 0], x[:, 1], x[:, 2]

    def cross(u, v):
        return np.einsum("abc,...b,...c->...a", phi, u, v)

    lhs = cross(al, cross(be, ga))
    rhs = (
        np.sum(al * ga, axis=-1)[:, None] * be
        - np.sum(al * be, axis=-1)[:, None] * ga
        + np.einsum("abcd,...b,...c,...d->...a", psi, al, be, ga)
    )
    r_double = float(np.max(np.abs(lhs - rhs)))
    return {"phiphi": r_phiphi, "phipsi": r_phipsi, "double_cross": r_double}
