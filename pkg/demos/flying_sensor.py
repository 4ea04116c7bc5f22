"""Flying sensor: entanglement from a single pass, as a function of speed.

The accumulated phase beta scales as 1/v; at the optimal velocity beta = pi
and both measurement branches leave a Bell state.
"""
import numpy as np

from nvent import SpinSystem
from nvent.core import ket2dm, plus_state
from nvent.dynamics import evolve_coherent
from nvent.hamiltonians import FlightPath, Schedule, ZZHamiltonian
from nvent.measurement import flying_beta, flying_outcome, mean_ef, measure_nv_pm, optimal_velocity

system = SpinSystem.default()
v_opt = optimal_velocity(100e-9, 5e-9, system)
print(f"v_opt = {v_opt:.6e} m/s (1/v_opt = {1 / v_opt:.3f} s/m)")

print(f"{'v/v_opt':>8} {'beta':>8} {'p-':>7} {'mean EF':>8} {'mean EF (ODE)':>14}")
for scale in (0.25, 0.5, 1.0, 2.0, 4.0):
    path = FlightPath(100e-9, 5e-9, scale * v_opt)
    beta = flying_beta(path, system)
    closed = flying_outcome(beta)
    h = ZZHamiltonian(system, Schedule.flying(path), qubit_coupling=False)
    psi = evolve_coherent(plus_state(system), h, [0, path.measurement_time], rtol=1e-12, atol=1e-14).states[-1]
    numeric = measure_nv_pm(ket2dm(psi), system)
    print(f"{scale:8.2f} {beta:8.4f} {closed[1].probability:7.4f} {mean_ef(closed):8.5f} {mean_ef(numeric):14.5f}")

products = np.array([flying_beta(FlightPath(100e-9, 5e-9, v), system) * v for v in (1e-3, 1e-2, 1e-1)])
print(f"beta * v = {products[0]:.6e} rad m/s, relative spread {np.ptp(products) / abs(products[0]):.1e}")
