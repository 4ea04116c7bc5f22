"""Vibrating sensor: maximal mean EF when the NV oscillates about the midpoint.

Compares exact ensemble evolution with the perturbative closed forms, for a
frequency-averaged mode and for a uniformly distributed phase.
"""
import math

from nvent import SpinSystem, StaticGeometry
from nvent.averaging import ParameterDistribution, VibratingScenario, max_mean_ef_averaged
from nvent.hamiltonians import VibrationMode

system, geometry = SpinSystem.default(), StaticGeometry(10e-9)
two_pi_khz = 2 * math.pi * 1e3

print("frequency-averaged (1% spread), phase pi/2")
for delta_nm in (0.1, 0.4):
    for f_khz in (50, 200, 500):
        mode = VibrationMode(delta_nm * 1e-9, f_khz * two_pi_khz, math.pi / 2)
        sc = VibratingScenario(system, geometry, mode)
        dist = ParameterDistribution.truncated_normal(mode.angular_frequency, 0.01)
        exact, t_exact = max_mean_ef_averaged("omega", dist, sc, n_nodes=9)
        approx, _ = max_mean_ef_averaged("omega", dist, sc, method="first_order", n_nodes=9)
        print(f"  delta {delta_nm} nm, {f_khz:3d} kHz: M exact {exact:.5f} at {t_exact * 1e6:.3f} us,"
              f" first order {approx:.5f}")

print("uniform phase")
for f_khz in (50, 500):
    for delta_nm in (0.0, 0.2, 0.5):
        sc = VibratingScenario(system, geometry, VibrationMode(delta_nm * 1e-9, f_khz * two_pi_khz))
        exact, _ = max_mean_ef_averaged("phi", ParameterDistribution.uniform_phase(), sc, n_nodes=17)
        approx, _ = max_mean_ef_averaged("phi", None, sc, method="second_order_phase")
        print(f"  {f_khz:3d} kHz, delta {delta_nm} nm: M exact {exact:.5f}, second order {approx:.5f}")
