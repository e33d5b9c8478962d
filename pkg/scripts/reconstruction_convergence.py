"""Comb reconstruction error versus the number of repetitions M."""
import sys

import numpy as np

from quenchqns.bath import CompositeSpectral, SpectralModel
from quenchqns.estimation import reconstruction_benchmark

model = CompositeSpectral((SpectralModel(1.0, 0.1, 1.0, "gaussian"),
                           SpectralModel(1.0, 0.005, 0.6, "lorentzian_peak", 0.1)))
jobs = int(sys.argv[1]) if len(sys.argv) > 1 else 4
for M in (16, 32, 64, 128):
    rec, truth = reconstruction_benchmark(model, 0.25, 8, M, jobs=jobs)
    err = np.abs(rec.J_hat / truth - 1)
    below = rec.omega < 1.0
    print(f"M={M:4d}  err(w0)={err[0]:.3e}  max err below omega_c={err[below].max():.3e}  "
          f"max err all={err.max():.3e}  cond={rec.condition:.2f}")
