"""Exact single-boson NV bath: phase for each qubit subspace and for flipped initial states."""
from quenchqns.control import hahn
from quenchqns.exactbath import (NV_SUBSPACES, exact_coherence, nv_boson_bath,
                                 single_boson_bath, thermal_state, zeta_phi)

seq = hahn(7.3)
bath = nv_boson_bath(Omega=1.0, g=0.05, kT=0.2, n_max=30)
print("subspace   zeta            Phi_q")
for name, pair in NV_SUBSPACES.items():
    z, phi = zeta_phi(exact_coherence(bath, seq, [(0.0, seq.t_f, pair)]))
    print(f"{name:8s} {z:14.6e} {phi:+14.6e}")

qubit = single_boson_bath(1.0, 0.05, 0.2, 30)
H = qubit.H
for label, rho in (("thermal(H_down)", qubit.rho),
                   ("thermal(H_up)", thermal_state(H["up"], 0.2)),
                   ("thermal(H_avg)", thermal_state(0.5 * (H["up"] + H["down"]), 0.2))):
    z, phi = zeta_phi(exact_coherence(qubit.with_rho(rho), seq))
    print(f"{label:16s} zeta={z:.6e} Phi={phi:+.6e}")
