"""Gradient flow of the torsion energy over unit octonion fields."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import octonion as oc
from .connection import TorsionField, cov_d, laplacian_dd, torsion_divergence, torsion_of_gauge

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("step", "t", "energy", "grad_norm", "div_T_inf", "tau1_L2", "tau7_L2", "tau14_L2", "tau27_L2")


class StiffFlow(RuntimeError):
    """The backtracking step size fell below its floor."""


def energy(V, tf: TorsionField) -> float:
    """``(1/2) int sum_i |D_i V|^2``."""
    dv = cov_d(V, tf)
    return 0.5 * float(tf.grid.integrate(np.sum(oc.norm2(dv), axis=-1)))


def energy_from_gauge_torsion(V, tf: TorsionField) -> float:
    """``(1/2) int sum_i |(D_i V) V^-1|^2``; equals :func:`energy` for unit ``V``.

    Only the imaginary part of ``(DV)V^-1`` is the gauge torsion; on the
    lattice the real part is a second-order quantity (see
    :func:`energy_from_torsion`).
    """
    dv = cov_d(V, tf)
    w = oc.mul(dv, oc.inverse(V)[..., None, :], tf.sc if np.ndim(tf.sc.phi) == 3 else _sc1(tf))
    return 0.5 * float(tf.grid.integrate(np.sum(oc.norm2(w), axis=-1)))


def energy_from_torsion(V, tf: TorsionField) -> float:
    """``(1/2) int |T^(V)|^2``."""
    t = torsion_of_gauge(V, tf).T
    return 0.5 * float(tf.grid.integrate(np.sum(t * t, axis=(-2, -1))))


def _sc1(tf):
    from .connection import _site_sc

    return _site_sc(tf, 1)


def euler_gradient(V, tf: TorsionField) -> np.ndarray:
    """``G = D^*D V - |DV|^2 V``."""
    dv = cov_d(V, tf)
    dv2 = np.sum(oc.norm2(dv), axis=-1)
    return laplacian_dd(V, tf) - dv2[..., None] * V


def gauge_divergence(V, tf: TorsionField) -> np.ndarray:
    """``Div T^(V)`` as a 7-vector field."""
    return torsion_divergence(torsion_of_gauge(V, tf))


@dataclass
class FlowState:
    V: np.ndarray
    t: float = 0.0
    energy: float = 0.0
    grad_norm: float = 0.0
    div_T_norm: float = 0.0
    step_count: int = 0
    tau_L2: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = {
            "step": self.step_count,
            "t": self.t,
            "energy": self.energy,
            "grad_norm": self.grad_norm,
            "div_T_inf": self.div_T_norm,
        }
        for k in ("tau1", "tau7", "tau14", "tau27"):
            out[f"{k}_L2"] = self.tau_L2.get(k, 0.0)
        return out


def _normalize(V):
    return V / oc.norm(V)[..., None]


def evaluate(V, tf: TorsionField, t: float = 0.0, step: int = 0) -> FlowState:
    """Fill every diagnostic of a state."""
    g = euler_gradient(V, tf)
    tv = torsion_of_gauge(V, tf)
    div = torsion_divergence(tv)
    norms = tv.components.norms()
    tau = {k: float(np.sqrt(tf.grid.integrate(v**2))) for k, v in norms.items()}
    return FlowState(
        V=V,
        t=t,
        energy=energy(V, tf),
        grad_norm=float(np.max(oc.norm(g))),
        div_T_norm=float(np.max(np.sqrt(np.sum(div * div, axis=-1)))),
        step_count=step,
        tau_L2=tau,
    )


def flow_step(state: FlowState, tf: TorsionField, dt: float, dt_min: float) -> tuple[FlowState, float]:
    """One accepted explicit Euler step with retraction to unit norm.

    Halves ``dt`` until the energy does not increase. Returns the new state
    and the step size that was accepted; raises :class:`StiffFlow` once
    ``dt < dt_min``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    G = euler_gradient(state.V, tf)
    while dt >= dt_min:
        # oversized trial steps may overflow; a non-finite energy is rejected
        with np.errstate(over="ignore", invalid="ignore"):
            trial = _normalize(state.V - dt * G)
            e = energy(trial, tf)
        if e <= state.energy:
            new = evaluate(trial, tf, state.t + dt, state.step_count + 1)
            return new, dt
        dt *= 0.5
    raise StiffFlow(f"step size fell below {dt_min:.3g}")


@dataclass
class FlowResult:
    state: FlowState
    trace: list
    status: str  # "converged", "max_steps" or "stiff"


def run_flow(V0, tf: TorsionField, dt0: float = 0.05, max_steps: int = 1000, tol: float = 1e-6) -> FlowResult:
    """Flow until ``max |Div T^(V)| < tol`` or ``max_steps`` accepted steps.

    After each accepted step the next attempt starts from ``min(2 dt, dt0)``.
    """
    if dt0 <= 0:
        raise ValueError("dt0 must be positive")
    dt_min = 1e-12 * dt0
    state = evaluate(_normalize(np.asarray(V0, dtype=float)), tf)
    trace = [state.row()]
    dt = dt0
    while True:
        if state.div_T_norm < tol:
            return FlowResult(state, trace, "converged")
        if state.step_count >= max_steps:
            return FlowResult(state, trace, "max_steps")
        try:
            state, used = flow_step(state, tf, dt, dt_min)
        except StiffFlow as exc:
            log.warning("flow aborted: %s", exc)
            return FlowResult(state, trace, "stiff")
        trace.append(state.row())
        log.debug("step %d t=%.4g E=%.6g div=%.3g", state.step_count, state.t, state.energy, state.div_T_norm)
        dt = min(2 * used, dt0)


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        w.writeheader()
        for row in trace:
            w.writerow({k: (repr(float(v)) if k != "step" else int(v)) for k, v in row.items()})
