"""Exact finite-dimensional oracle for the qubit coherence.

Each branch of the qubit superposition evolves under the bath Hamiltonian
conditioned on the level it currently occupies; pi-pulses swap the branches
and NV switching changes the level pair.  Segments are constant, so every
propagator is an exact matrix exponential from a Hermitian eigendecomposition.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .control import PulseSequence
from .quadrature import QuadratureError


def _herm_err(A):
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


@dataclass(frozen=True, eq=False)
class FiniteBath:
    H: dict  # level label -> (N, N) Hermitian matrix
    rho: np.ndarray
    modular: np.ndarray | None = None  # K with rho = e^{-K}/Z, if known

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        N = rho.shape[0]
        if rho.shape != (N, N):
            raise ValueError("rho must be square")
        H = {}
        for k, m in self.H.items():
            m = np.asarray(m, dtype=complex)
            if m.shape != (N, N):
                raise ValueError(f"H[{k!r}] has shape {m.shape}, expected {(N, N)}")
            if _herm_err(m) > 1e-12 * max(1.0, float(np.max(np.abs(m)))):
                raise ValueError(f"H[{k!r}] is not Hermitian")
            H[k] = 0.5 * (m + m.conj().T)
        if _herm_err(rho) > 1e-12:
            raise ValueError("rho is not Hermitian")
        if abs(np.trace(rho).real - 1) > 1e-12:
            raise ValueError("rho must have unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-12:
            raise ValueError("rho must be positive semidefinite")
        if self.modular is not None:
            object.__setattr__(self, "modular", np.asarray(self.modular, dtype=complex))
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "rho", 0.5 * (rho + rho.conj().T))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def check_linear_levels(self, tol: float = 1e-12) -> bool:
        """H_{+1} - H_0 == H_0 - H_{-1} (single magnetic coupling operator)."""
        d1 = self.H[1] - self.H[0]
        d2 = self.H[0] - self.H[-1]
        return float(np.max(np.abs(d1 - d2))) <= tol

    def with_rho(self, rho, modular=None) -> "FiniteBath":
        return FiniteBath(self.H, rho, modular)


def thermal_state(H, kT: float):
    E, V = np.linalg.eigh(H)
    w = np.exp(-(E - E.min()) / kT)
    w /= w.sum()
    return (V * w) @ V.conj().T


class _Propagators:
    def __init__(self, H: dict):
        self._eig = {k: np.linalg.eigh(m) for k, m in H.items()}

    def __call__(self, level, dt):
        E, V = self._eig[level]
        return (V * np.exp(-1j * E * dt)) @ V.conj().T


def _segments(seq: PulseSequence, switching):
    """Yield (t0, t1, pulses_so_far, (up_level, down_level))."""
    pulses = [a * seq.t_f for a in seq.fractions]
    if switching is None:
        switching = [(0.0, seq.t_f, ("up", "down"))]
    cuts = sorted({0.0, seq.t_f, *pulses, *(x for a, b, _ in switching for x in (a, b))})
    cuts = [c for c in cuts if 0.0 <= c <= seq.t_f]
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (t0 + t1)
        k = sum(p < mid for p in pulses)
        pair = next((lv for a, b, lv in switching if a <= mid <= b), None)
        if pair is None:
            raise ValueError(f"switching schedule does not cover t = {mid}")
        yield t0, t1, k, pair


def exact_coherence(bath: FiniteBath, seq: PulseSequence, switching=None) -> complex:
    """<sigma_-(t_f)> = 1/2 Tr(U_A rho U_B^dagger); A starts in the upper level."""
    prop = _Propagators(bath.H)
    N = bath.dim
    UA = np.eye(N, dtype=complex)
    UB = np.eye(N, dtype=complex)
    for t0, t1, k, (u, d) in _segments(seq, switching):
        a, b = (u, d) if k % 2 == 0 else (d, u)
        UA = prop(a, t1 - t0) @ UA
        UB = prop(b, t1 - t0) @ UB
    for U in (UA, UB):
        drift = float(np.max(np.abs(U.conj().T @ U - np.eye(N))))
        if drift > 1e-8:
            raise QuadratureError("non-unitary propagator", error=drift)
    return 0.5 * np.trace(UA @ bath.rho @ UB.conj().T)


def zeta_phi(coh: complex) -> tuple[float, float]:
    c = 2 * coh
    return -math.log(abs(c)), -math.atan2(c.imag, c.real)


NV_SUBSPACES = {"0,-1": (0, -1), "+1,0": (1, 0), "+1,-1": (1, -1)}


def nv_switching(plan) -> list:
    """Level pairs for the periodic NV plan: {0,-1} where eta = -1, {+1,0} where eta = +1."""
    out = []
    for a, b, lev in plan.schedule.segments:
        out.append((a, b, NV_SUBSPACES["0,-1"] if lev < 0 else NV_SUBSPACES["+1,0"]))
    return out


@dataclass(frozen=True, eq=False)
class QuenchDecomposition:
    H_prime: np.ndarray
    V_prime: np.ndarray
    eigen_groups: list = field(default_factory=list)
    projectors: list = field(default_factory=list)


def quench_decompose(bath: FiniteBath, degeneracy_tol: float | None = None,
                     levels=("up", "down")) -> QuenchDecomposition:
    """Split H_avg into H' (block diagonal in the eigenspaces of rho) and V'.

    When the bath carries its modular Hamiltonian K, the eigenspaces are taken
    from K: they coincide with those of rho but stay resolvable where the
    populations e^{-K} underflow.
    """
    H_avg = 0.5 * (bath.H[levels[0]] + bath.H[levels[1]])
    if bath.modular is not None:
        p, V = np.linalg.eigh(bath.modular)
        scale = max(1.0, float(np.max(np.abs(p))))
    else:
        p, V = np.linalg.eigh(bath.rho)
        scale = float(np.max(np.abs(p)))
    tol = degeneracy_tol if degeneracy_tol is not None else 1e-8 * scale
    order = np.argsort(p)
    p, V = p[order], V[:, order]
    if bath.modular is None:
        p = np.where(np.abs(p) <= tol, 0.0, p)  # explicit zero group for rank-deficient rho
    groups, start = [], 0
    for i in range(1, len(p) + 1):
        if i == len(p) or p[i] - p[i - 1] > tol:
            groups.append((start, i))
            start = i
    gaps = np.diff(p)
    if np.any((gaps > tol) & (gaps < 10 * tol)):
        warnings.warn("ambiguous eigenvalue grouping: gaps within 10x of degeneracy_tol",
                      RuntimeWarning, stacklevel=2)
    Hp = np.zeros_like(H_avg)
    projs = []
    for a, b in groups:
        P = V[:, a:b] @ V[:, a:b].conj().T
        projs.append(P)
        Hp += P @ H_avg @ P
    return QuenchDecomposition(Hp, H_avg - Hp,
                               [(float(np.mean(p[a:b])), b - a) for a, b in groups], projs)


def ladder(n_max: int):
    n = np.arange(1, n_max)
    return np.diag(np.sqrt(n), 1).astype(complex)


def squeeze_operator(r: float, n: int):
    b = ladder(n)
    return expm(0.5 * r * (b @ b - b.conj().T @ b.conj().T))


def build_squeezed_thermal(Omega: float, g: float, r: float, kT: float, n_max: int,
                           headroom: int | None = None, tail_tol: float = 1e-8) -> FiniteBath:
    """H_down = Omega b^dag b, H_up = H_down + (g b^dag + h.c.), rho = S e^{-H_down/kT} S^dag / Z.

    The population beyond ``n_max`` must stay below ``tail_tol``.  Matrices
    carry ``headroom`` extra Fock states (default 3 n_max) so that the
    eigenprojectors of rho are accurate well inside the first n_max levels.
    """
    N = n_max + (3 * n_max if headroom is None else headroom)
    nn = np.arange(N)
    if kT > 0:
        w = np.exp(-Omega * nn / kT)
    else:
        w = (nn == 0).astype(float)
    w /= w.sum()
    S = squeeze_operator(r, N)
    rho = (S * w) @ S.conj().T
    tail = 1.0 - float(np.trace(rho[:n_max, :n_max]).real)
    if tail > tail_tol or w[n_max:].sum() > tail_tol:
        raise ValueError(f"truncation tail {tail:.2e} exceeds {tail_tol:g}; increase n_max")
    rho /= np.trace(rho).real
    K = (S * (Omega * nn / kT)) @ S.conj().T if kT > 0 else None
    b = ladder(N)
    Hd = Omega * b.conj().T @ b
    Hu = Hd + g * (b + b.conj().T)
    return FiniteBath({"up": Hu, "down": Hd}, rho, K)


def squeezed_v_prime_closed(Omega: float, g: float, r: float, n_max: int):
    """-Omega b^dag b sinh^2 2r + 1/4(-Omega b^dag^2 sinh 4r + 2 g b^dag + h.c.)."""
    b = ladder(n_max)
    bd = b.conj().T
    half = 0.25 * (-Omega * bd @ bd * math.sinh(4 * r) + 2 * g * bd)
    return -Omega * math.sinh(2 * r) ** 2 * bd @ b + half + half.conj().T


def single_boson_bath(Omega: float, g: float, kT: float, n_max: int) -> FiniteBath:
    return build_squeezed_thermal(Omega, g, 0.0, kT, n_max, headroom=0)


def nv_boson_bath(Omega: float, g: float, kT: float, n_max: int) -> FiniteBath:
    """H_m = Omega b^dag b + m g (b + b^dag), rho thermal in H_0."""
    b = ladder(n_max)
    H0 = Omega * b.conj().T @ b
    B = g * (b + b.conj().T)
    H = {m: H0 + m * B for m in (-1, 0, 1)}
    nn = np.arange(n_max)
    w = np.exp(-Omega * nn / kT)
    return FiniteBath(H, np.diag(w / w.sum()))


def _decode(arr):
    a = np.asarray(arr, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def bath_from_json(obj) -> FiniteBath:
    if isinstance(obj, str):
        with open(obj) as fh:
            obj = json.load(fh)
    unknown = set(obj) - {"dim", "H", "rho"}
    if unknown:
        raise KeyError(f"unknown bath keys: {sorted(unknown)}")
    H = {}
    for k, v in obj["H"].items():
        try:
            key = int(k)
        except ValueError:
            key = k
        H[key] = _decode(v)
    bath = FiniteBath(H, _decode(obj["rho"]))
    if bath.dim != int(obj["dim"]):
        raise ValueError("dim does not match matrix sizes")
    return bath


def bath_to_json(bath: FiniteBath) -> dict:
    enc = lambda m: np.stack([m.real, m.imag], axis=-1).tolist()
    return {"dim": bath.dim, "H": {str(k): enc(v) for k, v in bath.H.items()},
            "rho": enc(bath.rho)}


def spin_bath(Omega: float, g: float, kT: float) -> FiniteBath:
    """Single two-level bath: H_down = Omega sz/2, H_up = H_down + g sx, rho thermal in H_down."""
    sz = np.diag([1.0, -1.0]).astype(complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    Hd = 0.5 * Omega * sz
    return FiniteBath({"up": Hd + g * sx, "down": Hd}, thermal_state(Hd, kT))


def gaussian_single_mode(seq: PulseSequence, Omega: float, noise_weight: float,
                         response_weight: float, beta_V: float = 0.5) -> tuple[float, float]:
    """Gaussian zeta and Phi_q for S = pi w_S delta(|w| - Omega), J = w_J delta(w - Omega).

    A linearly coupled boson has w_S = g^2 coth(Omega/2kT) and w_J = g^2; a
    two-level bath has w_S = g^2 and w_J = g^2 tanh(Omega/2kT).
    """
    F = complex(seq.ft(Omega))
    zeta = 0.5 * abs(F) ** 2 * noise_weight
    phi = 2 * beta_V * (F.real - seq.F0) * response_weight / Omega
    return zeta, phi
