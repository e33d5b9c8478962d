"""Thermometry, equilibrium diagnosis, T1 relaxometry and comb reconstruction."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bath import effective_temperature, im_response
from .control import PeriodicNvPlan, build_nv_plan, validate_symmetry
from .dynamics import qps_general
from .quadrature import Tolerance

# the comb integrand is a smooth envelope times a Dirichlet kernel; one
# oscillation period per initial panel is enough for the adaptive engine
COMB_TOL = Tolerance(abstol=1e-10, reltol=1e-8, cap_factor=2 * np.pi)


class EstimationWindowError(RuntimeError):
    pass


class InsufficientCoverage(RuntimeError):
    pass


@dataclass(frozen=True)
class ThermometryResult:
    kT: float
    T2: float
    phi_infinity: float
    diagnostics: dict = field(default_factory=dict)


def ohmic_thermometry(T2: float, phi_inf: float) -> float:
    if not (T2 > 0 and phi_inf > 0):
        raise ValueError("thermometry needs T2 > 0 and phi_inf > 0")
    return 1.0 / (2.0 * T2 * phi_inf)


def _log_slope(t, y):
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore"):
        return np.gradient(np.log(y), np.log(t))


def _tail_window(t, ok, min_points=3):
    """Indices of the trailing run where ``ok`` holds, clipped to the last decade."""
    t = np.asarray(t, dtype=float)
    if not ok[-1]:
        return None
    i = len(ok) - 1
    while i > 0 and ok[i - 1]:
        i -= 1
    idx = np.arange(i, len(ok))
    idx = idx[t[idx] >= t[-1] / 10]
    return idx if idx.size >= min_points else None


def extract_t2(t_f, zeta, slope_tol: float = 0.05) -> tuple[float, dict]:
    """T2 from the trailing linear-in-t_f window of zeta (zeta ~ t_f / T2)."""
    t_f = np.asarray(t_f, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    idx = _tail_window(t_f, np.abs(_log_slope(t_f, zeta) - 1) <= slope_tol)
    if idx is None:
        raise EstimationWindowError("asymptotic regime not reached (zeta not linear in t_f)")
    slope, icpt = np.polyfit(t_f[idx], zeta[idx], 1)
    fit = slope * t_f[idx] + icpt
    return 1.0 / slope, {"window": [float(t_f[idx[0]]), float(t_f[idx[-1]])],
                         "points": int(idx.size), "intercept": float(icpt),
                         "residual": float(np.max(np.abs(fit - zeta[idx])))}


def extract_plateau(t_f, phi, slope_tol: float = 0.02) -> tuple[float, dict]:
    t_f = np.asarray(t_f, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.all(phi == phi[0]):
        return float(phi[0]), {"window": [float(t_f[0]), float(t_f[-1])], "points": len(phi),
                               "residual": 0.0}
    idx = _tail_window(t_f, np.abs(_log_slope(t_f, phi)) <= slope_tol)
    if idx is None:
        raise EstimationWindowError("asymptotic regime not reached (phase not flat)")
    val = float(np.mean(phi[idx]))
    return val, {"window": [float(t_f[idx[0]]), float(t_f[idx[-1]])], "points": int(idx.size),
                 "residual": float(np.max(np.abs(phi[idx] - val)))}


def thermometry_from_trace(t_f, zeta, phi_q, zeta_tol=0.05, phi_tol=0.02) -> ThermometryResult:
    T2, dz = extract_t2(t_f, zeta, zeta_tol)
    phi_inf, dp = extract_plateau(t_f, phi_q, phi_tol)
    return ThermometryResult(ohmic_thermometry(T2, phi_inf), T2, phi_inf,
                             {"t2_fit": dz, "plateau_fit": dp})


def t1_relaxometry(model, kT: float, Omega: float) -> tuple[float, float]:
    """Gamma_tot = 2 S[Omega], <sigma_z>_ss = Im G^R[Omega] / S[Omega]."""
    if not Omega > 0:
        raise ValueError("qubit frequency must be > 0")
    x = Omega / (2 * kT)
    J = float(model.J(Omega))
    S = np.pi * J / np.tanh(x) if x < 700 else np.pi * J
    if S == 0:
        return 0.0, -float(np.tanh(x))
    return float(2 * S), float(im_response(model, Omega)) / float(S)


def teff_profile(noise, model, omegas):
    w = np.asarray(omegas, dtype=float)
    return effective_temperature(noise.S(w), model.J(w), w)


def diagnose_equilibrium(noise, model, omegas, tol: float = 0.05) -> tuple[bool, float]:
    """True when T_eff varies by less than ``tol`` (relative) over ``omegas``."""
    T = np.atleast_1d(teff_profile(noise, model, omegas))
    ratio = float(T.max() / T.min())
    return ratio - 1 <= tol, ratio


# ---- comb reconstruction ----------------------------------------------------

def comb_weights(plan: PeriodicNvPlan, harmonics=(1, 3, 5, 7)) -> dict:
    """A_l = -(w0^2/4) Im(F0*[l w0] eta0[l w0]); for the NV plan A_l = 4 sin(l pi/2)/l^2."""
    validate_symmetry(plan)
    w0 = plan.omega0
    out = {}
    for l in harmonics:
        w = l * w0
        v = np.conj(plan.F_base.ft(w)) * plan.eta_base.ft(w)
        out[int(l)] = float(-(w0 ** 2) / 4 * v.imag)
    return out


@dataclass(frozen=True)
class ReconstructionPlan:
    nv_plan: PeriodicNvPlan
    harmonics: tuple = (1, 3, 5)

    @property
    def comb_weights(self) -> dict:
        return comb_weights(self.nv_plan, self.harmonics)

    @property
    def target_freqs(self) -> np.ndarray:
        return np.array(self.harmonics, dtype=float) * self.nv_plan.omega0


def comb_gain(plan: PeriodicNvPlan) -> float:
    """Phi_q ~ comb_gain * sum_l A_l J(l w0) in the many-repetition limit."""
    return -4.0 * plan.beta_V * plan.M / plan.omega0


def qps_comb(plan: PeriodicNvPlan, model, harmonics=None, tol_weight: float = 1e-12) -> float:
    if harmonics is None:
        X, _ = model.truncation(0.0, 1e-14)
        harmonics = range(1, int(X / plan.omega0) + 1)
    A = comb_weights(plan, harmonics)
    total = sum(a * float(model.J(l * plan.omega0)) for l, a in A.items() if abs(a) > tol_weight)
    return comb_gain(plan) * total


@dataclass(frozen=True)
class Reconstruction:
    omega: np.ndarray
    J_hat: np.ndarray
    residual: np.ndarray  # rms measurement residual over rows touching each frequency
    condition: float
    design: np.ndarray


def reconstruct_spectral_function(measurements, harmonics=(1, 3, 5), ridge: float = 0.0,
                                  omega_max: float | None = None,
                                  merge_rtol: float = 1e-9) -> Reconstruction:
    """Least-squares solve of Phi^(k) = sum_j W_kj J(w_j).

    Harmonic frequencies above ``omega_max`` (default: the largest fundamental)
    are treated as carrying negligible spectral weight.
    """
    if not measurements:
        raise InsufficientCoverage("insufficient comb coverage: no measurements")
    plans = [p for p, _ in measurements]
    phis = np.array([float(v) for _, v in measurements])
    for p in plans:
        validate_symmetry(p)
    if omega_max is None:
        omega_max = max(p.omega0 for p in plans) * (1 + merge_rtol)
    rows = []
    freqs: list[float] = []

    def slot(w):
        for j, f in enumerate(freqs):
            if abs(f - w) <= merge_rtol * max(f, w):
                return j
        freqs.append(w)
        return len(freqs) - 1

    for p in plans:
        A = comb_weights(p, harmonics)
        g = comb_gain(p)
        row = {}
        for l, a in A.items():
            w = l * p.omega0
            if w > omega_max or a == 0:
                continue
            j = slot(w)
            row[j] = row.get(j, 0.0) + g * a
        rows.append(row)
    n = len(freqs)
    W = np.zeros((len(plans), n))
    for k, row in enumerate(rows):
        for j, v in row.items():
            W[k, j] = v
    order = np.argsort(freqs)
    W = W[:, order]
    omega = np.array(freqs)[order]
    rank = np.linalg.matrix_rank(W)
    if rank < n and ridge == 0:
        raise InsufficientCoverage(f"insufficient comb coverage: rank {rank} < {n} unknowns")
    if ridge > 0:
        Wa = np.vstack([W, np.sqrt(ridge) * np.eye(n)])
        ya = np.concatenate([phis, np.zeros(n)])
        J_hat = np.linalg.lstsq(Wa, ya, rcond=None)[0]
    else:
        J_hat = np.linalg.lstsq(W, phis, rcond=None)[0]
    r = phis - W @ J_hat
    touch = W != 0
    resid = np.array([np.sqrt(np.mean(r[touch[:, j]] ** 2)) if touch[:, j].any() else np.nan
                      for j in range(n)])
    sv = np.linalg.svd(W, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return Reconstruction(omega, J_hat, resid, cond, W)


def uniform_comb_plans(delta: float, count: int, M: int, beta_V: float = 0.5):
    """Plans with fundamentals w0 = k delta (k = 1..count); harmonics land on the same grid."""
    return [build_nv_plan(M, np.pi / (k * delta), beta_V) for k in range(1, count + 1)]


def _forward(args):
    plan, model, tol = args
    return qps_general(plan, None, model, tol)


def forward_phases(plans, model, tol: Tolerance = COMB_TOL, jobs: int = 1) -> list[float]:
    """Finite-M phases for each plan (exact integrals, no comb idealisation)."""
    work = [(p, model, tol) for p in plans]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_forward, work))
    return [_forward(w) for w in work]


def reconstruction_benchmark(model, delta: float, count: int = 8, M: int = 64,
                             harmonics=(1, 3, 5), ridge: float = 0.0, jobs: int = 1,
                             tol: Tolerance = COMB_TOL):
    """Forward-simulate a uniform comb design, invert, and return (reconstruction, J_true)."""
    plans = uniform_comb_plans(delta, count, M)
    phis = forward_phases(plans, model, tol, jobs)
    rec = reconstruct_spectral_function(list(zip(plans, phis)), harmonics, ridge)
    return rec, np.asarray(model.J(rec.omega), dtype=float)
