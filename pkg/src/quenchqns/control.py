"""Pulse sequences, filter functions, quench schedules and the NV switching plan.

Fourier convention: f[w] = int dt e^{i w t} f(t).  F(t) starts at +1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _segment_ft(starts, ends, levels, w):
    """Sum_k level_k (e^{i w b_k} - e^{i w a_k})/(i w), stable at w -> 0."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape, dtype=complex)
    for a, b, lev in zip(starts, ends, levels):
        if lev == 0 or b <= a:
            continue
        half = 0.5 * (b - a)
        # np.sinc(x) = sin(pi x)/(pi x)
        out += lev * (b - a) * np.exp(0.5j * w * (a + b)) * np.sinc(w * half / np.pi)
    return out


@dataclass(frozen=True)
class Piecewise:
    """Piecewise-constant signal given as (start, end, level) triples."""
    segments: tuple

    def __post_init__(self):
        segs = tuple((float(a), float(b), float(l)) for a, b, l in self.segments)
        for a, b, _ in segs:
            if b < a:
                raise ValueError(f"segment ({a}, {b}) has negative length")
        ordered = sorted(segs)
        for (a0, b0, _), (a1, _, _) in zip(ordered[:-1], ordered[1:]):
            if a1 < b0 - 1e-12 * max(1.0, abs(b0)):
                raise ValueError("segments overlap")
        object.__setattr__(self, "segments", tuple(ordered))

    @property
    def arrays(self):
        if not self.segments:
            return np.zeros(0), np.zeros(0), np.zeros(0)
        a, b, l = zip(*self.segments)
        return np.array(a), np.array(b), np.array(l)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for a, b, lev in self.segments:
            out = np.where((t > a) & (t < b), lev, out)
        return out

    def ft(self, w):
        return _segment_ft(*self.arrays, w)

    def integral(self) -> float:
        return float(sum(lev * (b - a) for a, b, lev in self.segments))

    def shifted(self, dt: float) -> "Piecewise":
        return Piecewise(tuple((a + dt, b + dt, l) for a, b, l in self.segments))

    @property
    def breakpoints(self):
        return sorted({x for a, b, _ in self.segments for x in (a, b)})


@dataclass(frozen=True)
class PulseSequence:
    fractions: tuple
    t_f: float

    def __post_init__(self):
        fr = tuple(float(a) for a in self.fractions)
        if not self.t_f > 0:
            raise ValueError("t_f must be > 0")
        if any(not 0 < a < 1 for a in fr) or any(b <= a for a, b in zip(fr, fr[1:])):
            raise ValueError("pulse fractions must be strictly increasing inside (0, 1)")
        object.__setattr__(self, "fractions", fr)

    @property
    def L(self) -> int:
        return len(self.fractions)

    def with_time(self, t_f: float) -> "PulseSequence":
        return PulseSequence(self.fractions, t_f)

    @property
    def signal(self) -> Piecewise:
        edges = (0.0, *self.fractions, 1.0)
        return Piecewise(tuple((self.t_f * a, self.t_f * b, (-1.0) ** k)
                               for k, (a, b) in enumerate(zip(edges[:-1], edges[1:]))))

    def ft(self, w):
        return filter_freq(self, w)

    @property
    def F0(self) -> float:
        """F[0] = int F(t) dt."""
        edges = (0.0, *self.fractions, 1.0)
        return self.t_f * sum((-1) ** k * (b - a)
                              for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])))

    @property
    def breakpoints(self):
        return [0.0, *(a * self.t_f for a in self.fractions), self.t_f]


def ramsey(t_f: float) -> PulseSequence:
    return PulseSequence((), t_f)


def hahn(t_f: float) -> PulseSequence:
    return PulseSequence((0.5,), t_f)


def cpmg(n: int, t_f: float) -> PulseSequence:
    return PulseSequence(tuple((k + 0.5) / n for k in range(n)), t_f)


def sequence_from_config(desc, t_f: float = 1.0) -> PulseSequence:
    if isinstance(desc, dict):
        if set(desc) != {"pulses"}:
            raise KeyError(f"unknown sequence keys: {sorted(set(desc) - {'pulses'})}")
        return PulseSequence(tuple(desc["pulses"]), t_f)
    if isinstance(desc, (list, tuple)):
        return PulseSequence(tuple(desc), t_f)
    name = str(desc).strip().lower()
    if name == "ramsey":
        return ramsey(t_f)
    if name == "hahn":
        return hahn(t_f)
    if name.startswith("cpmg:"):
        n = int(name.split(":", 1)[1])
        if n < 1:
            raise ValueError("cpmg needs at least one pulse")
        return cpmg(n, t_f)
    raise ValueError(f"unknown sequence preset {desc!r}")


def filter_time(seq: PulseSequence, t):
    out = seq.signal(t)
    return float(out) if np.ndim(out) == 0 else out


def filter_freq(seq: PulseSequence, w):
    out = seq.signal.ft(w)
    return complex(out) if np.ndim(out) == 0 else out


def filter_freq_closed(seq: PulseSequence, w):
    """[2 sum_l (-1)^(l-1) e^{i a_l w t_f} - 1 + (-1)^L e^{i w t_f}] / (i w), w != 0."""
    w = np.asarray(w, dtype=float)
    num = -1.0 + (-1) ** seq.L * np.exp(1j * w * seq.t_f)
    for l, a in enumerate(seq.fractions, start=1):
        num = num + 2 * (-1) ** (l - 1) * np.exp(1j * a * w * seq.t_f)
    return num / (1j * w)


def check_balanced(seq: PulseSequence, rtol: float = 1e-12) -> bool:
    return abs(seq.F0) <= rtol * seq.t_f


@dataclass(frozen=True)
class QuenchSchedule:
    """eta(t) as a piecewise-constant profile; V = beta_V xi when proportional."""
    segments: tuple = ()
    beta_V: float = 0.5
    initial_state: str = "down"

    def __post_init__(self):
        if self.initial_state not in ("down", "up"):
            raise ValueError("initial_state must be 'down' or 'up'")
        for seg in self.segments:
            if seg[2] not in (-1, 0, 1):
                raise ValueError("quench levels must be -1, 0 or +1")
        object.__setattr__(self, "segments", Piecewise(self.segments).segments)

    @property
    def signal(self) -> Piecewise:
        return Piecewise(self.segments)

    def ft(self, w):
        return self.signal.ft(w)

    def flipped(self) -> "QuenchSchedule":
        other = "up" if self.initial_state == "down" else "down"
        return QuenchSchedule(self.segments, -self.beta_V, other)

    def scaled(self, beta_V: float) -> "QuenchSchedule":
        return QuenchSchedule(self.segments, beta_V, self.initial_state)

    @property
    def breakpoints(self):
        return self.signal.breakpoints


def step_schedule(t_f: float, beta_V: float = 0.5, initial_state: str = "down") -> QuenchSchedule:
    return QuenchSchedule(((0.0, t_f, 1),), beta_V, initial_state)


def quench_freq(sched: QuenchSchedule, w):
    out = sched.ft(w)
    return complex(out) if np.ndim(out) == 0 else out


_NV_F0 = ((0.0, 0.25, 1), (0.25, 0.75, -1), (0.75, 1.0, 1))  # in units of 2T
_NV_ETA0 = ((0.0, 0.5, -1), (0.5, 1.0, 1))


def _dirichlet(x, M):
    """sin(M x)/sin(x) with the removable points filled in."""
    x = np.asarray(x, dtype=float)
    s = np.sin(x)
    k = np.round(x / np.pi)
    near = np.abs(x - k * np.pi) < 1e-7
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(M * x) / s
    lim = M * np.where((k * (M - 1)) % 2 == 0, 1.0, -1.0)
    return np.where(near, lim, val)


@dataclass(frozen=True)
class PeriodicNvPlan:
    """M repetitions of a 2T-long base filter/quench template."""
    M: int
    T: float
    base_filter: tuple = _NV_F0
    base_quench: tuple = _NV_ETA0
    beta_V: float = 0.5

    def __post_init__(self):
        if self.M < 1 or not self.T > 0:
            raise ValueError("nv plan needs M >= 1 and T > 0")

    @property
    def t_f(self) -> float:
        return 2 * self.M * self.T

    @property
    def omega0(self) -> float:
        return np.pi / self.T

    def _base(self, tmpl) -> Piecewise:
        return Piecewise(tuple((2 * self.T * a, 2 * self.T * b, l) for a, b, l in tmpl))

    @property
    def F_base(self) -> Piecewise:
        return self._base(self.base_filter)

    @property
    def eta_base(self) -> Piecewise:
        return self._base(self.base_quench)

    def _repeat(self, base: Piecewise) -> Piecewise:
        segs = []
        for n in range(self.M):
            segs.extend(base.shifted(2 * n * self.T).segments)
        return Piecewise(tuple(segs))

    @property
    def filter_signal(self) -> Piecewise:
        return self._repeat(self.F_base)

    @property
    def sequence(self) -> PulseSequence:
        """The full pulse train (the base filter must start at +1 and be +-1 valued)."""
        sig = self.filter_signal
        flips = [b for (a, b, l), (a2, _, l2) in zip(sig.segments, sig.segments[1:])
                 if l2 == -l and abs(a2 - b) < 1e-12 * self.t_f]
        return PulseSequence(tuple(x / self.t_f for x in flips), self.t_f)

    @property
    def schedule(self) -> QuenchSchedule:
        segs = self._repeat(self.eta_base).segments
        return QuenchSchedule(tuple((a, b, int(l)) for a, b, l in segs), self.beta_V)

    def _periodic(self, base_ft, w):
        w = np.asarray(w, dtype=float)
        phase = np.exp(1j * w * (self.M - 1) * self.T)
        return phase * _dirichlet(w * self.T, self.M) * base_ft(w)

    def filter_ft(self, w):
        return self._periodic(self.F_base.ft, w)

    def quench_ft(self, w):
        return self._periodic(self.eta_base.ft, w)


def build_nv_plan(M: int, T: float, beta_V: float = 0.5) -> PeriodicNvPlan:
    return PeriodicNvPlan(int(M), float(T), beta_V=beta_V)


def nv_filter_closed(plan: PeriodicNvPlan, w):
    """-(4/w) e^{i w t_f/2} sin(w t_f/2) sin^2(w t_f/8M) / cos(w t_f/4M)."""
    w = np.asarray(w, dtype=float)
    tf, M = plan.t_f, plan.M
    return (-(4 / w) * np.exp(0.5j * w * tf) * np.sin(w * tf / 2)
            * np.sin(w * tf / (8 * M)) ** 2 / np.cos(w * tf / (4 * M)))


def nv_quench_closed(plan: PeriodicNvPlan, w):
    """(2i/w) e^{i w t_f/2} sin(w t_f/2) tan(w t_f/4M)."""
    w = np.asarray(w, dtype=float)
    tf, M = plan.t_f, plan.M
    return (2j / w) * np.exp(0.5j * w * tf) * np.sin(w * tf / 2) * np.tan(w * tf / (4 * M))


def _parity(sig: Piecewise, period: float, n: int = 4001) -> int | None:
    t = (np.arange(n) + 0.3719) / n * period
    a, b = sig(t), sig(period - t)
    if np.allclose(a, b):
        return 1
    if np.allclose(a, -b):
        return -1
    return None


def validate_symmetry(plan: PeriodicNvPlan) -> tuple[int, int]:
    sF = _parity(plan.F_base, 2 * plan.T)
    se = _parity(plan.eta_base, 2 * plan.T)
    if sF is None or se is None or sF * se != -1:
        raise ValueError(f"reconstruction conditions violated (s_F={sF}, s_eta={se})")
    return sF, se


def plan_from_config(cfg: dict) -> PeriodicNvPlan:
    unknown = set(cfg) - {"M", "T", "beta_V"}
    if unknown:
        raise KeyError(f"unknown nv_plan keys: {sorted(unknown)}")
    return build_nv_plan(int(cfg["M"]), float(cfg["T"]), float(cfg.get("beta_V", 0.5)))
