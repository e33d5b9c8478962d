"""Fit Phi_q ~ c t_f^(1-s) over omega_c t_f in [50, 500] and compare with C_Phi,H A0."""
import numpy as np

from quenchqns.asymptotics import coeff_phi_hahn
from quenchqns.bath import SpectralModel
from quenchqns.control import hahn
from quenchqns.dynamics import qps_static

t = np.geomspace(50, 500, 15)
for s in (0.5, 1.0, 1.5):
    model = SpectralModel(s, 0.1, 1.0, "gaussian")
    phi = np.array([qps_static(hahn(x), model) for x in t])
    slope, icpt = np.polyfit(np.log(t), np.log(np.abs(phi)), 1)
    pref = np.exp(icpt) * np.sign(phi[-1])
    want = coeff_phi_hahn(s) * model.A0
    print(f"s={s:.1f}  exponent {slope:+.4f} (expect {1 - s:+.4f})  "
          f"prefactor {pref:.5f} (C_Phi A0 = {want:.5f}, rel {pref / want - 1:+.2%})")
