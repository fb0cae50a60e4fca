"""Dissipation potentials and the energy-dissipation identity.

A flow is a state space, a driving energy, and a quadratic dissipation.
The residual F(z_T) - F(z_0) + int [Psi + Psi*] vanishes along true
solutions and stays strictly positive for any other curve -- here shown on
the spring-dashpot system, whose solution is known in closed form.

Run:  python3 demos/04_dissipation_and_edi.py
"""

import math

import numpy as np

from gradflow.gradient_flow import (
    EnergyFunctional,
    FlowProblem,
    QuadraticDissipation,
    edi_residual,
    legendre_dual,
    local_step,
)
from gradflow.models import spring_dashpot_solve

k, eta, x0 = 2.0, 1.0, 1.0
energy = EnergyFunctional.finite_dim(lambda z: 0.5 * k * float(z @ z), lambda z: k * z)
problem = FlowProblem(energy, QuadraticDissipation("scalar", eta))

print(f"spring-dashpot: k={k}, eta={eta}, x0={x0}")
res = spring_dashpot_solve(k, eta, x0, 1.0, 1e-3)
print(f"  closed form at t=1 : {res.exact[-1]:.6f} (exp(-2) = {math.exp(-2):.6f})")

state = np.array([x0])
for _ in range(1000):
    state = local_step(problem, state, 1e-3)
print(f"  local stepping     : {state[0]:.6f}")

# EDI residuals: the closed-form solution nearly closes the identity; its
# time reversal pays roughly twice the dissipated energy
dt = 1e-3
times = np.arange(0, 1.0 + dt / 2, dt)
closed_form = [np.array([x0 * math.exp(-k * t / eta)]) for t in times]
forward = edi_residual(problem, closed_form, dt)
backward = edi_residual(problem, closed_form[::-1], dt)
print(f"\nEDI residual, exact trajectory   : {forward:.2e}")
print(f"EDI residual, time-reversed curve: {backward:.4f}  (> 0, order one)")

# the dual potential is the Legendre transform of the primal one
s = np.linspace(-4, 4, 8001)
psi = eta * s**2 / 2
print("\nLegendre transform of Psi(s) = eta s^2/2 at a few forces:")
for xi in (0.5, 1.0, 2.0):
    print(
        f"  Psi*({xi}) = {legendre_dual(s, psi, xi):.5f}"
        f"   (xi^2/(2 eta) = {xi**2 / (2 * eta):.5f})"
    )
