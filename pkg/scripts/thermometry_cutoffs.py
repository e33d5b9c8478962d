"""End-to-end Ohmic thermometry for two cutoff families and two couplings."""
import numpy as np

from quenchqns.bath import SpectralModel, ThermalNoise
from quenchqns.control import hahn
from quenchqns.dynamics import compute_trace
from quenchqns.estimation import thermometry_from_trace

kT = 0.01
grid = np.geomspace(10, 2e4, 25)
for cutoff in ("gaussian", "exponential"):
    for alpha in (0.1, 0.2):
        model = SpectralModel(1.0, alpha, 1.0, cutoff)
        trace = compute_trace(hahn(1.0), grid, ThermalNoise(model, kT), model, jobs=4)
        res = thermometry_from_trace([p.t_f for p in trace], [p.zeta for p in trace],
                                     [p.phi_q for p in trace])
        print(f"{cutoff:12s} alpha={alpha:.1f}  kT={res.kT:.6f} (true {kT})  "
              f"T2={res.T2:.2f}  phi_inf={res.phi_infinity:.6f}")
