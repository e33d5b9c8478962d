"""Long-time power laws of the dephasing and the quench phase shift.

Normalisation: for a step quench with coefficient beta_V,
    zeta(t_f)  ~ C_zeta(p) S0 t_f^(1-p)                 (-3 < p < 1)
    Phi_q(t_f) ~ 2 beta_V C_Phi(s) A0 t_f^(1-s)         (-2 < s < 2)
so that beta_V = 1/2 gives Phi_q ~ C_Phi A0 t_f^(1-s).  This is the
normalisation that reproduces the quadrature; see the notes in the README.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import kramers_kronig_re
from .control import PulseSequence, check_balanced
from .special import gamma, gamma_residue

ZETA_WINDOW = (-3.0, 1.0)
PHI_WINDOW = (-2.0, 2.0)


def _power_terms_zeta(seq: PulseSequence):
    """(coef, x) pairs with B(p) = sum coef * x^(1-p)."""
    a = seq.fractions
    L = len(a)
    out = []
    for l in range(L):
        for lp in range(l):
            # 1-based indices l+1 > lp+1
            out.append((4 * (-1) ** (l + lp), a[l] - a[lp]))
    for l, al in enumerate(a, start=1):
        out.append((2 * (-1) ** l * (-1) ** (L + 1), 1 - al))
        out.append((2 * (-1) ** l, al))
    out.append(((-1) ** (L + 1), 1.0))
    return out


def _power_terms_phi(seq: PulseSequence):
    L = seq.L
    out = [(2 * (-1) ** l, al) for l, al in enumerate(seq.fractions, start=1)]
    out.append(((-1) ** (L + 1), 1.0))
    return out


def _bracket(terms, e):
    return sum(c * x ** (1 - e) for c, x in terms if x > 0)


def _bracket_deriv(terms, e):
    return sum(-c * x ** (1 - e) * math.log(x) for c, x in terms if x > 0)


def _gamma_product(e: float, terms, trig, dtrig) -> float:
    """Gamma(e - 1)/pi * B(e) * trig(e), continued through the poles of Gamma."""
    e0 = round(e)
    if abs(e - e0) < 1e-12 and e0 <= 1:
        n = 1 - e0
        h0 = _bracket(terms, e0) * trig(e0)
        scale = sum(abs(c) for c, _ in terms)
        if abs(h0) > 1e-10 * scale:
            raise ValueError(f"coefficient diverges at exponent {e0} (logarithmic law)")
        dh = _bracket_deriv(terms, e0) * trig(e0) + _bracket(terms, e0) * dtrig(e0)
        return gamma_residue(n) * dh / math.pi
    return gamma(e - 1) / math.pi * _bracket(terms, e) * trig(e)


def _require(seq, e, window, name):
    if not check_balanced(seq, 1e-12):
        raise ValueError("unbalanced sequence: the asymptotic law needs F[0] = 0")
    if not window[0] < e < window[1]:
        raise ValueError(f"{name} = {e:g} outside {window}: cutoff-dependent regime")


def coeff_zeta(p: float, seq: PulseSequence) -> float:
    _require(seq, p, ZETA_WINDOW, "p")
    sin = lambda x: math.sin(x * math.pi / 2)
    dsin = lambda x: 0.5 * math.pi * math.cos(x * math.pi / 2)
    return _gamma_product(p, _power_terms_zeta(seq), sin, dsin)


def coeff_phi(s: float, seq: PulseSequence) -> float:
    _require(seq, s, PHI_WINDOW, "s")
    cos = lambda x: math.cos(x * math.pi / 2)
    dcos = lambda x: -0.5 * math.pi * math.sin(x * math.pi / 2)
    return _gamma_product(s, _power_terms_phi(seq), cos, dcos)


def coeff_zeta_hahn(p: float) -> float:
    """(1 - 2^(p+1)) Gamma(p-1) sin(p pi/2) / pi."""
    return coeff_zeta(p, PulseSequence((0.5,), 1.0))


def coeff_phi_hahn(s: float) -> float:
    """(1 - 2^s) Gamma(s-1) cos(s pi/2) / pi."""
    return coeff_phi(s, PulseSequence((0.5,), 1.0))


@dataclass(frozen=True)
class AsymptoticLaw:
    kind: str  # "dephasing" or "qps"
    exponent: float
    coefficient: float  # C_zeta or C_Phi
    amplitude: float  # S0 or 2 beta_V A0

    def __post_init__(self):
        window = {"dephasing": ZETA_WINDOW, "qps": PHI_WINDOW}.get(self.kind)
        if window is None:
            raise ValueError("kind must be 'dephasing' or 'qps'")
        if not window[0] < self.exponent < window[1]:
            raise ValueError(f"exponent {self.exponent:g} outside the universal window {window}")

    def __call__(self, t_f):
        return self.coefficient * self.amplitude * np.asarray(t_f, dtype=float) ** (1 - self.exponent)


def dephasing_law(seq: PulseSequence, p: float, S0: float) -> AsymptoticLaw:
    return AsymptoticLaw("dephasing", p, coeff_zeta(p, seq), S0)


def qps_law(seq: PulseSequence, model, beta_V: float = 0.5) -> AsymptoticLaw:
    return AsymptoticLaw("qps", model.s, coeff_phi(model.s, seq), 2 * beta_V * model.A0)


def asymptotic_zeta(law: AsymptoticLaw, t_f):
    if law.kind != "dephasing":
        raise ValueError("not a dephasing law")
    return law(t_f)


def asymptotic_qps(law: AsymptoticLaw, t_f):
    if law.kind != "qps":
        raise ValueError("not a qps law")
    return law(t_f)


def ohmic_plateau(model, F0: float, beta_V: float = 0.5) -> float:
    """Phi_q(inf) = 2 beta_V [ (F[0]/2) Re G^R[0] + (pi/2) J'(0) ]."""
    if abs(model.s - 1) > 1e-12:
        raise ValueError("the Ohmic plateau needs s = 1")
    if model.alpha == 0:
        return 0.0
    slope = float(model.J_over_w(0.0))  # J'(0) for s = 1
    static = 0.5 * F0 * kramers_kronig_re(model, 0.0) if F0 != 0 else 0.0
    return 2 * beta_V * (static + 0.5 * math.pi * slope)


def hahn_qps_exp_cutoff_s52(alpha: float, omega_c: float, t_f: float, beta_V: float = 0.5) -> float:
    """Closed form for s = 5/2 with an exponential cutoff:
    A0/(2 sqrt(pi)) t_f^(-3/2) [2^(3/2) e^{i pi/4} (1 + 2i/(w_c t_f))^(-3/2)
                                - 2^(-1) e^{i pi/4} (1 + i/(w_c t_f))^(-3/2) + c.c.]
    """
    A0 = alpha * omega_c ** (1 - 2.5)
    u = omega_c * t_f
    rot = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    z = 2 ** 1.5 * rot * (1 + 2j / u) ** -1.5 - 0.5 * rot * (1 + 1j / u) ** -1.5
    return 2 * beta_V * A0 / (2 * math.sqrt(math.pi)) * t_f ** -1.5 * 2 * z.real


def coefficient_table(p_grid, s_grid, seq: PulseSequence):
    """Rows (kind, exponent, coefficient); out-of-window points are skipped."""
    rows = []
    for p in p_grid:
        try:
            rows.append(("zeta", float(p), coeff_zeta(float(p), seq)))
        except ValueError:
            pass
    for s in s_grid:
        try:
            rows.append(("phi", float(s), coeff_phi(float(s), seq)))
        except ValueError:
            pass
    return rows
