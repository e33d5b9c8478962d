"""Spectral functions, noise spectra and linear response of a bosonic bath.

Units: hbar = k_B = 1, so temperatures and rates are angular frequencies.
J is defined for omega >= 0 only; Im G^R is its odd extension,
Im G^R[w] = -pi sgn(w) J[|w|].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import DEFAULT_TOL, Tolerance, integrate

FAMILIES = ("gaussian", "exponential", "lorentzian", "step", "lorentzian_peak")
_X_MAX = 1e4  # hard ceiling on the truncation point, in units of omega_c


def _phi(family: str, x, eps=None):
    x = np.asarray(x, dtype=float)
    if family == "gaussian":
        return np.exp(-x * x)
    if family == "exponential":
        return np.exp(-x)
    if family == "lorentzian":
        return 1.0 / (1.0 + x * x)
    if family == "step":
        return np.where(x < 1.0, 1.0, 0.0)
    if family == "lorentzian_peak":
        e2 = eps * eps
        return (1 + e2) ** 2 / (((x - 1) ** 2 + e2) * ((x + 1) ** 2 + e2))
    raise ValueError(f"unknown cutoff family {family!r}")


def _tail_integral(family: str, x: float, m: float, eps=None) -> float:
    """Upper bound on int_x^inf u^m phi(u) du."""
    if family == "step":
        return 0.0 if x >= 1.0 else math.inf
    if family == "gaussian":
        if m - 1 <= 0:
            return x ** (m - 1) * math.exp(-x * x) / 2
        d = 1 - (m - 1) / (2 * x * x)
        return x ** (m - 1) * math.exp(-x * x) / (2 * d) if d > 0 else math.inf
    if family == "exponential":
        if m <= 0:
            return x ** m * math.exp(-x)
        d = 1 - m / x
        return x ** m * math.exp(-x) / d if d > 0 else math.inf
    if family == "lorentzian":
        return x ** (m - 1) / (1 - m) if m < 1 else math.inf
    if family == "lorentzian_peak":
        if x < 2 or m >= 3:
            return math.inf
        return (1 + eps * eps) ** 2 * (16 / 9) * x ** (m - 3) / (3 - m)
    raise ValueError(family)


@dataclass(frozen=True)
class SpectralModel:
    s: float
    alpha: float
    omega_c: float
    cutoff: str = "gaussian"
    epsilon: float | None = None

    def __post_init__(self):
        if self.cutoff not in FAMILIES:
            raise ValueError(f"cutoff must be one of {FAMILIES}, got {self.cutoff!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.omega_c <= 0:
            raise ValueError("omega_c must be > 0")
        if self.cutoff == "lorentzian_peak":
            if self.epsilon is None or not 0 < self.epsilon < 1:
                raise ValueError("lorentzian_peak needs 0 < epsilon < 1")

    @property
    def A0(self) -> float:
        return self.alpha * self.omega_c ** (1 - self.s)

    @property
    def components(self):
        return (self,)

    @property
    def breakpoints(self):
        return (self.omega_c,) if self.cutoff in ("step", "lorentzian_peak") else ()

    @property
    def low_s(self) -> float:
        return self.s

    def J(self, w):
        w = np.asarray(w, dtype=float)
        x = w / self.omega_c
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.where(x > 0, np.abs(x) ** self.s, 0.0 if self.s > 0 else np.inf)
        if self.s == 0:
            pw = np.ones_like(x)
        return (self.alpha / np.pi) * self.omega_c * pw * _phi(self.cutoff, x, self.epsilon)

    def J_over_w(self, w):
        """J[w]/w with the w -> 0 limit taken analytically."""
        w = np.asarray(w, dtype=float)
        x = w / self.omega_c
        e = self.s - 1
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.where(x > 0, np.abs(x) ** e, 0.0 if e > 0 else np.inf)
        if e == 0:
            pw = np.ones_like(x)
        return (self.alpha / np.pi) * pw * _phi(self.cutoff, x, self.epsilon)

    def tail(self, X: float, k: float = 0.0) -> float:
        """Bound on int_X^inf J[w] w^-k dw."""
        if self.alpha == 0:
            return 0.0
        b = _tail_integral(self.cutoff, X / self.omega_c, self.s - k, self.epsilon)
        return (self.alpha / np.pi) * self.omega_c ** (2 - k) * b

    def truncation(self, k: float, target: float, scale: float = 1.0) -> tuple[float, float]:
        """Smallest X on a geometric ladder with scale * tail(X, k) <= target."""
        if self.cutoff == "step":
            return self.omega_c, 0.0
        X = self.omega_c
        while X < _X_MAX * self.omega_c:
            t = scale * self.tail(X, k)
            if t <= target:
                return X, t
            X *= 1.25
        return X, scale * self.tail(X, k)


@dataclass(frozen=True)
class CompositeSpectral:
    """Sum of spectral models (e.g. an Ohmic background plus a resonance)."""
    parts: tuple = field(default_factory=tuple)

    @property
    def components(self):
        return tuple(self.parts)

    @property
    def low_s(self) -> float:
        return min(p.s for p in self.parts)

    @property
    def s(self) -> float:
        return self.low_s

    @property
    def A0(self) -> float:
        return sum(p.A0 for p in self.parts if p.s == self.low_s)

    @property
    def omega_c(self) -> float:
        return max(p.omega_c for p in self.parts)

    @property
    def alpha(self) -> float:
        return sum(p.alpha for p in self.parts)

    @property
    def breakpoints(self):
        return tuple(sorted({b for p in self.parts for b in p.breakpoints}))

    def J(self, w):
        return sum(p.J(w) for p in self.parts)

    def J_over_w(self, w):
        return sum(p.J_over_w(w) for p in self.parts)

    def tail(self, X, k=0.0):
        return sum(p.tail(X, k) for p in self.parts)

    def truncation(self, k, target, scale=1.0):
        n = len(self.parts)
        cuts = [p.truncation(k, target / n, scale) for p in self.parts]
        X = max(c[0] for c in cuts)
        return X, scale * self.tail(X, k)


def _coth_weight(w, kT):
    """coth(|w|/2kT) for w != 0, guarded near zero."""
    x = np.abs(np.asarray(w, dtype=float)) / (2 * kT)
    small = x < 1e-4
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        big = 1.0 / np.tanh(x)
        series = 1.0 / x + x / 3.0
    return np.where(small, series, big)


@dataclass(frozen=True)
class ThermalNoise:
    spectral: SpectralModel | CompositeSpectral
    kT: float

    def __post_init__(self):
        if not self.kT > 0:
            raise ValueError("thermal noise needs kT > 0")

    @property
    def exponent(self) -> float:
        return self.spectral.low_s - 1

    def S(self, w):
        w = np.abs(np.asarray(w, dtype=float))
        x = w / (2 * self.kT)
        small = x < 1e-4
        out = np.empty_like(w)
        big = ~small
        if big.any():
            out[big] = np.pi * self.spectral.J(w[big]) * _coth_weight(w[big], self.kT)
        if small.any():
            ws = w[small]
            # pi J coth(x) ~ pi J (1/x + x/3), with J/x = 2kT J/w regular at w = 0
            out[small] = np.pi * (2 * self.kT * self.spectral.J_over_w(ws)
                                  + self.spectral.J(ws) * x[small] / 3)
        return out

    def tail(self, X, k=0.0):
        # coth(X/2kT) <= coth(omega_c / 2kT) once X >= omega_c
        c = 1.0 / math.tanh(max(X, 1e-300) / (2 * self.kT))
        return np.pi * c * self.spectral.tail(X, k)

    def truncation(self, k, target, scale=1.0):
        c = 1.0 / math.tanh(self.spectral.omega_c / (2 * self.kT))
        X, _ = self.spectral.truncation(k, target, scale * np.pi * c)
        return X, scale * self.tail(X, k)

    @property
    def breakpoints(self):
        return self.spectral.breakpoints


@dataclass(frozen=True)
class FreeformNoise:
    p: float
    S0: float
    omega_c: float
    cutoff: str = "gaussian"
    epsilon: float | None = None

    def __post_init__(self):
        if self.cutoff not in FAMILIES:
            raise ValueError(f"cutoff must be one of {FAMILIES}, got {self.cutoff!r}")

    @property
    def exponent(self) -> float:
        return self.p

    def S(self, w):
        w = np.abs(np.asarray(w, dtype=float))
        x = w / self.omega_c
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.where(w > 0, w ** self.p, 0.0 if self.p > 0 else np.inf)
        if self.p == 0:
            pw = np.ones_like(w)
        return self.S0 * pw * _phi(self.cutoff, x, self.epsilon)

    def tail(self, X, k=0.0):
        b = _tail_integral(self.cutoff, X / self.omega_c, self.p - k, self.epsilon)
        return self.S0 * self.omega_c ** (self.p - k + 1) * b

    def truncation(self, k, target, scale=1.0):
        if self.cutoff == "step":
            return self.omega_c, 0.0
        X = self.omega_c
        while X < _X_MAX * self.omega_c and scale * self.tail(X, k) > target:
            X *= 1.25
        return X, scale * self.tail(X, k)

    @property
    def breakpoints(self):
        return (self.omega_c,) if self.cutoff in ("step", "lorentzian_peak") else ()


NoiseModel = ThermalNoise | FreeformNoise


def eval_spectral_function(model, w):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("J is defined for omega >= 0; use the odd extension of Im G^R")
    out = model.J(w)
    return float(out) if out.ndim == 0 else out


def eval_nsd(noise, w):
    out = noise.S(np.asarray(w, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def im_response(model, w):
    """Im G^R[w] = -pi sgn(w) J[|w|]."""
    w = np.asarray(w, dtype=float)
    return -np.pi * np.sign(w) * model.J(np.abs(w))


def effective_temperature(S, J, w):
    """kT_eff = w / (2 arccoth(S / (pi J)))."""
    S, J, w = (np.asarray(v, dtype=float) for v in (S, J, w))
    if np.any(w <= 0):
        raise ValueError("effective temperature needs omega > 0")
    r = S / (np.pi * J)
    if np.any(~(r > 1)):
        raise ValueError("sub-vacuum noise: FDT inversion undefined (S <= pi J)")
    out = w / np.log((r + 1) / (r - 1))  # 2 arccoth(r) = ln((r+1)/(r-1))
    return float(out) if out.ndim == 0 else out


def _check_kk(model):
    for p in model.components:
        if p.alpha == 0:
            continue
        if p.s <= 0:
            raise ValueError(f"divergent principal value: low-frequency tail w^{p.s - 1:g} "
                             "is not integrable")
        if p.cutoff == "lorentzian" and p.s >= 2:
            raise ValueError(f"divergent principal value: high-frequency tail w^{p.s - 3:g}")


def _kk_point(model, w, tol):
    target = 1e-3 * tol.abstol
    if w == 0:
        X, t = model.truncation(1.0, target, 2.0)
        r = integrate(model.J_over_w, 0.0, X, tol=tol, points=model.breakpoints)
        return -2.0 * r.value
    w = abs(w)
    W = min(model.omega_c, w) / 2
    X, _ = model.truncation(1.0, target, 4.0)
    X = max(X, 2 * w + 2 * W)

    def regular(v):
        return model.J(v) / (v - w) + model.J(v) / (v + w)

    pts = [p for p in model.breakpoints]
    left = integrate(regular, 0.0, w - W, tol=tol, points=pts) if w - W > 0 else None
    right = integrate(regular, w + W, X, tol=tol, points=pts)

    def paired(u):
        # P int_{w-W}^{w+W} J(v)/(v-w) dv with the pole folded out,
        # plus the smooth 1/(v+w) piece on the same window
        jp, jm = model.J(w + u), model.J(w - u)
        return (jp - jm) / u + jp / (2 * w + u) + jm / (2 * w - u)

    upts = [abs(p - w) for p in pts if 0 < abs(p - w) < W]
    mid = integrate(paired, 0.0, W, tol=tol, points=upts)
    total = mid.value + right.value + (left.value if left is not None else 0.0)
    return -total


def kramers_kronig_re(model, w, tol: Tolerance = DEFAULT_TOL):
    """Re G^R[w] from Im G^R by a principal-value transform."""
    _check_kk(model)
    if all(p.alpha == 0 for p in model.components):
        return 0.0 if np.ndim(w) == 0 else np.zeros(np.shape(w))
    ws = np.atleast_1d(np.asarray(w, dtype=float))
    out = np.array([_kk_point(model, float(v), tol) for v in ws])
    return float(out[0]) if np.ndim(w) == 0 else out


def retarded_green_time(model, t, tol: Tolerance = DEFAULT_TOL):
    """G^R(t) = -2 Theta(t) int_0^inf J[w] sin(w t) dw."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(ts)
    if all(p.alpha == 0 for p in model.components):
        return float(out[0]) if np.ndim(t) == 0 else out
    if model.low_s <= -1:
        raise ValueError("J not integrable at low frequency (s <= -1)")
    X, _ = model.truncation(0.0, 1e-3 * tol.abstol, 2.0)
    for i, tt in enumerate(ts):
        if tt <= 0:
            continue
        r = integrate(lambda v: model.J(v) * np.sin(v * tt), 0.0, X, tol=tol,
                      cap=tol.cap_factor / tt, points=model.breakpoints)
        out[i] = -2.0 * r.value
    return float(out[0]) if np.ndim(t) == 0 else out


SPECTRAL_KEYS = {"s", "alpha", "omega_c", "cutoff", "epsilon"}
NOISE_KEYS = SPECTRAL_KEYS | {"kT", "p", "S0"}


def spectral_from_config(cfg: dict) -> SpectralModel | CompositeSpectral:
    if "components" in cfg:
        return CompositeSpectral(tuple(spectral_from_config(c) for c in cfg["components"]))
    unknown = set(cfg) - NOISE_KEYS
    if unknown:
        raise KeyError(f"unknown bath keys: {sorted(unknown)}")
    return SpectralModel(s=float(cfg["s"]), alpha=float(cfg["alpha"]),
                         omega_c=float(cfg["omega_c"]),
                         cutoff=cfg.get("cutoff", "gaussian"),
                         epsilon=cfg.get("epsilon"))


def noise_from_config(cfg: dict, spectral=None):
    unknown = set(cfg) - NOISE_KEYS - {"components"}
    if unknown:
        raise KeyError(f"unknown bath keys: {sorted(unknown)}")
    if "kT" in cfg:
        spectral = spectral or spectral_from_config(
            {k: v for k, v in cfg.items() if k != "kT"})
        return ThermalNoise(spectral, float(cfg["kT"]))
    if "p" in cfg and "S0" in cfg:
        return FreeformNoise(p=float(cfg["p"]), S0=float(cfg["S0"]),
                             omega_c=float(cfg.get("omega_c", 1.0)),
                             cutoff=cfg.get("cutoff", "gaussian"),
                             epsilon=cfg.get("epsilon"))
    return None
