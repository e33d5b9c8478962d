"""Dephasing, quench phase shift and coherence of the sensor qubit.

Every frequency integral is folded onto omega >= 0 using the symmetry of
real time-domain signals, then handed to the adaptive engine with panels
capped at ``tol.cap_factor / t_f``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bath import kramers_kronig_re, retarded_green_time
from .control import Piecewise, PeriodicNvPlan, PulseSequence, QuenchSchedule, step_schedule
from .quadrature import DEFAULT_TOL, QuadratureError, Tolerance, integrate


class PhaseUnresolvable(ValueError):
    pass


def _tail_target(tol: Tolerance) -> float:
    # the bounds ignore oscillatory cancellation, so they overstate the true tail
    return 0.1 * tol.abstol


def _n_pieces(sig) -> int:
    return len(sig.segments)


def dephasing(seq: PulseSequence, noise, tol: Tolerance = DEFAULT_TOL) -> float:
    """zeta = int dw/4pi |F[w]|^2 S[w]."""
    p = noise.exponent
    balanced = abs(seq.F0) <= 1e-12 * seq.t_f
    if (balanced and p <= -3) or (not balanced and p <= -1):
        raise ValueError(f"dephasing integral not integrable at low frequency (p = {p:g})")
    bound = (2 * seq.L + 2) ** 2 / (2 * np.pi)
    X, tail = noise.truncation(2.0, _tail_target(tol), bound)

    def f(w):
        return np.abs(seq.ft(w)) ** 2 * noise.S(w)

    r = integrate(f, 0.0, X, tol=tol.scaled(2 * np.pi), cap=tol.cap_factor / seq.t_f,
                  points=noise.breakpoints)
    return float(r.value.real if np.iscomplexobj(r.value) else r.value) / (2 * np.pi)


def _check_static(model, balanced):
    s = model.low_s
    if s <= -2:
        raise ValueError(f"divergent low-frequency behaviour of the QPS integral (s = {s:g})")
    if not balanced and s <= 0:
        raise ValueError(f"unbalanced sequence needs s > 0 for a finite QPS (s = {s:g})")


def qps_static(seq: PulseSequence, model, beta_V: float = 0.5,
               tol: Tolerance = DEFAULT_TOL) -> float:
    """Step quench: Phi_q = 2 beta_V int_0^inf (Re F[w] - Re F[0]) J[w]/w dw."""
    if beta_V == 0 or all(p.alpha == 0 for p in model.components):
        return 0.0
    F0 = seq.F0
    balanced = abs(F0) <= 1e-12 * seq.t_f
    _check_static(model, balanced)
    X, _ = model.truncation(2.0, _tail_target(tol), 2 * abs(beta_V) * (2 * seq.L + 2))

    def f(w):
        return seq.ft(w).real * model.J_over_w(w)

    val = integrate(f, 0.0, X, tol=tol, cap=tol.cap_factor / seq.t_f,
                    points=model.breakpoints).value
    if not balanced:
        X1, _ = model.truncation(1.0, _tail_target(tol), 2 * abs(beta_V * F0))
        val -= F0 * integrate(model.J_over_w, 0.0, X1, tol=tol,
                              points=model.breakpoints).value
    return 2 * beta_V * float(val)


def _transforms(seq, sched):
    if isinstance(seq, PeriodicNvPlan):
        plan = seq
        sched = sched or plan.schedule
        if sched.segments == plan.schedule.segments:
            # |Dirichlet|^2 averages to M over a period, so the tail bound scales with M, not M^2
            fb = 2 * len(plan.F_base.segments)
            eb = 2 * sum(abs(l) for _, _, l in plan.eta_base.segments)
            return plan.filter_ft, plan.quench_ft, sched, plan.t_f, plan.M * fb * eb
        seq = plan.sequence
    t_end = max([seq.t_f, *sched.breakpoints]) if sched.segments else seq.t_f
    ebound = 2 * sum(abs(l) for _, _, l in sched.segments)
    return seq.ft, sched.ft, sched, t_end, (2 * seq.L + 2) * ebound


def qps_general(seq, sched: QuenchSchedule | None, model, tol: Tolerance = DEFAULT_TOL,
                check_residue: bool = True) -> float:
    """Phi_q = int dw/2pi F*[w] eta[w] G^R_{xi V}[w] with G^R_{xi V} = beta_V G^R_{xi xi}."""
    Fw, Ew, sched, t_end, bound = _transforms(seq, sched)
    if not sched.segments or sched.beta_V == 0 or all(p.alpha == 0 for p in model.components):
        return 0.0
    beta = sched.beta_V
    if model.low_s <= -2:
        raise ValueError(f"divergent low-frequency behaviour of the QPS integral (s = {model.low_s:g})")
    X, _ = model.truncation(2.0, _tail_target(tol), abs(beta) * bound)
    cap = tol.cap_factor / t_end

    probe = np.linspace(0.0, X, 4097)[1:]
    fe = np.conj(Fw(probe)) * Ew(probe)
    if check_residue:
        fe_neg = np.conj(Fw(-probe)) * Ew(-probe)
        resid = np.max(np.abs(fe_neg - np.conj(fe)))
        if resid > 1e-6 * max(np.max(np.abs(fe)), 1e-300):
            raise QuadratureError("imaginary residue in the QPS integrand: convention fault")
    needs_real = np.max(np.abs(fe.real)) > 1e-12 * max(np.max(np.abs(fe)), 1e-300)

    def f_im(w):
        return (np.conj(Fw(w)) * Ew(w)).imag * model.J(w)

    val = integrate(f_im, 0.0, X, tol=tol, cap=cap, points=model.breakpoints).value
    if needs_real:
        if model.low_s <= 0:
            raise ValueError("Re G^R[0] diverges for s <= 0; general quench needs s > 0")
        val += _real_part(Fw, Ew, model, X, abs(beta) * bound, cap, tol) / np.pi
    return beta * float(val)


_N_MOMENTS = 30


def _green_moments(model, X, tol):
    """mu_n = 2 int_0^X u^(2n+1) J(u) du, so Re G^R[w] = sum_n mu_n / w^(2n+2) for w >= 2X."""
    return np.array([2 * integrate(lambda u, n=n: u ** (2 * n + 1) * model.J(u), 0.0, X,
                                   tol=tol.scaled(X ** (2 * n)), points=model.breakpoints).value
                     for n in range(_N_MOMENTS)])


def _real_part(Fw, Ew, model, X, bound, cap, tol):
    """int_0^inf Re(F* eta) Re G^R dw; Re G^R decays only like 1/w^2, far beyond J's support."""

    def f_kk(w):
        return (np.conj(Fw(w)) * Ew(w)).real * kramers_kronig_re(model, w)

    X2 = 2 * X
    val = integrate(f_kk, 0.0, X2, tol=tol, cap=cap, points=model.breakpoints).value
    mu = _green_moments(model, X, tol)

    def f_far(w):
        inv = 1.0 / (w * w)
        re_g = np.zeros_like(w)
        for m in mu[::-1]:
            re_g = (re_g + m) * inv
        return (np.conj(Fw(w)) * Ew(w)).real * re_g

    # |Re(F* eta)| <= bound / w^2 and |Re G^R| <= mu_0 / w^2 beyond X2
    target = _tail_target(tol) * np.pi
    X3 = max(X2, (bound * abs(mu[0]) / (3 * target)) ** (1 / 3))
    if X3 > X2:
        val += integrate(f_far, X2, X3, tol=tol, cap=cap).value
    return val


def _cross_correlation(F: Piecewise, eta: Piecewise, tau):
    """C(tau) = int dt eta(t) F(t + tau); piecewise linear in tau."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    for a, b, f in F.segments:
        for c, d, e in eta.segments:
            if f == 0 or e == 0:
                continue
            ov = np.minimum(d, b - tau) - np.maximum(c, a - tau)
            out += f * e * np.clip(ov, 0.0, None)
    return out


def qps_time_domain(seq, sched: QuenchSchedule, model, tol: Tolerance | None = None) -> float:
    """Phi_q = int dt1 F(t1) int dt2 eta(t2) G^R_{xi V}(t1 - t2), reduced to
    int dtau G^R(tau) C(tau) with C the exact overlap of the two profiles."""
    tol = tol or Tolerance(abstol=1e-12, reltol=1e-10)
    if isinstance(seq, PeriodicNvPlan):
        sched = sched or seq.schedule
        F = seq.filter_signal
    else:
        F = seq.signal
    if not sched.segments or sched.beta_V == 0 or all(p.alpha == 0 for p in model.components):
        return 0.0
    eta = sched.signal
    lo = max(0.0, min(a for a, _, _ in F.segments) - max(d for _, d, _ in eta.segments))
    hi = max(b for _, b, _ in F.segments) - min(c for c, _, _ in eta.segments)
    if hi <= 0:
        return 0.0
    kinks = sorted({b - c for b in F.breakpoints for c in eta.breakpoints if lo < b - c < hi})

    inner = Tolerance(abstol=tol.abstol * 1e-2, reltol=tol.reltol * 1e-2,
                      cap_factor=tol.cap_factor, max_panels=tol.max_panels)

    def f(tau):
        return retarded_green_time(model, tau, inner) * _cross_correlation(F, eta, tau)

    outer = Tolerance(abstol=tol.abstol, reltol=tol.reltol * 10)
    r = integrate(f, lo, hi, tol=outer, points=kinks, min_panels=8)
    return sched.beta_V * float(r.value)


def external_phase(seq: PulseSequence, field, omega_max: float | None = None,
                   tol: Tolerance = DEFAULT_TOL) -> float:
    """Phi_ext = int dw/2pi F*[w] B[w].

    ``field`` may be a number (static field), a Piecewise time profile, or a
    callable B[w] (then ``omega_max`` bounds its support).
    """
    if field is None:
        return 0.0
    if isinstance(field, (int, float)):
        return float(field) * seq.F0
    if isinstance(field, Piecewise):
        return float(_cross_correlation(seq.signal, field, 0.0))
    if omega_max is None:
        raise ValueError("callable B[w] needs omega_max")
    r = integrate(lambda w: (np.conj(seq.ft(w)) * field(w)).real, 0.0, omega_max,
                  tol=tol, cap=tol.cap_factor / seq.t_f)
    return float(r.value) / np.pi


def coherence_value(zeta: float, phi: float) -> complex:
    return 0.5 * math.exp(-zeta) * complex(math.cos(phi), -math.sin(phi))


def sigma_y(zeta: float, phi: float) -> float:
    return -math.exp(-zeta) * math.sin(phi)


def n_meas(zeta: float, phi: float) -> float:
    sy = sigma_y(zeta, phi)
    if sy == 0 or abs(math.sin(phi)) < 1e-15:
        raise PhaseUnresolvable("phase unresolvable: sin(Phi) = 0")
    return 1.0 / (sy * sy)


@dataclass(frozen=True)
class TracePoint:
    t_f: float
    zeta: float
    phi_q: float
    phi_ext: float

    @property
    def coherence(self) -> complex:
        return coherence_value(self.zeta, self.phi_q + self.phi_ext)

    @property
    def n_meas(self) -> float:
        try:
            return n_meas(self.zeta, self.phi_q + self.phi_ext)
        except PhaseUnresolvable:
            return math.inf


def coherence(seq, sched, noise, model, field=None, tol: Tolerance = DEFAULT_TOL) -> complex:
    z = dephasing(seq, noise, tol) if noise is not None else 0.0
    if sched is None or model is None:
        pq = 0.0
    elif sched.segments == step_schedule(seq.t_f).segments:
        pq = qps_static(seq, model, sched.beta_V, tol)
    else:
        pq = qps_general(seq, sched, model, tol)
    return coherence_value(z, pq + external_phase(seq, field))


def _trace_point(args):
    seq, noise, model, beta_V, field, tol, quench = args
    z = dephasing(seq, noise, tol) if noise is not None else 0.0
    if model is None:
        pq = 0.0
    elif quench is None:
        pq = qps_static(seq, model, beta_V, tol)
    else:
        segs = tuple((a * seq.t_f, b * seq.t_f, l) for a, b, l in quench)
        pq = qps_general(seq, QuenchSchedule(segs, beta_V), model, tol)
    pe = external_phase(seq, field)
    return TracePoint(seq.t_f, z, pq, pe)


def compute_trace(template: PulseSequence, grid, noise=None, model=None, beta_V: float = 0.5,
                  field=None, tol: Tolerance = DEFAULT_TOL, jobs: int = 1, quench=None):
    """Trace over a t_f grid; output order follows the grid.

    ``quench`` is an optional eta(t) profile given as (start, stop, level)
    fractions of t_f; the default is a step over the whole protocol.
    """
    work = [(template.with_time(float(t)), noise, model, beta_V, field, tol, quench)
            for t in grid]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_trace_point, work))
    return [_trace_point(w) for w in work]
