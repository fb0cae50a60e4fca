"""Exact large deviations on finite alphabets: coin tails, Sanov by
multinomial enumeration, Varadhan tilting, and degeneracy counting.

Run:  python3 demos/10_large_deviations.py
"""

import math

import numpy as np

from gradflow.particles import (
    FiniteLdpProblem,
    HalfSpace,
    coin_rate,
    coin_tail_exact,
    log_degeneracy,
    sanov_exact,
    varadhan_tilt,
)

print("fair-coin tail P(S_n >= 0.6 n) ~ exp(-n I(0.6)):")
print(f"  rate I(0.6) = {coin_rate(0.6):.6f}")
for n in (100, 500, 2000, 10000):
    tail = coin_tail_exact(n, 0.6)
    print(f"  n = {n:5d}: -(1/n) log P = {tail:.6f}  (gap {tail - coin_rate(0.6):+.5f})")

print("\nSanov on a 3-letter alphabet, set {rho_1 >= 0.6}, uniform reference:")
mu = np.full(3, 1.0 / 3.0)
constraint = HalfSpace(np.array([1.0, 0.0, 0.0]), 0.6)
for n in (30, 60, 120):
    res = sanov_exact(FiniteLdpProblem(mu=mu, n=n), constraint)
    print(
        f"  n = {n:3d}: exact rate {res.exact_rate:.5f}, "
        f"inf H = {res.entropy_infimum:.5f}"
    )
print(f"  entropy minimizer on the boundary: {np.round(res.minimizer, 4)}")

print("\nVaradhan tilting with F = (0, 1) shifts the typical state:")
table = varadhan_tilt(
    FiniteLdpProblem(mu=np.array([0.5, 0.5]), n=120, tilt=np.array([0.0, 1.0]))
)
target = np.array([0.5, 0.5]) * np.exp(-np.array([0.0, 1.0]))
target /= target.sum()
print(f"  exact-table argmin  : {table.argmin_exact()}")
print(f"  tilted Boltzmann law: {np.round(target, 4)}")

print("\ndegeneracy of half-half occupation vectors (exact vs Stirling):")
for N in (4, 40, 400):
    exact, approx = log_degeneracy([N // 2, N // 2])
    print(
        f"  N = {N:3d}: log multiplicity {exact:9.4f},"
        f" Stirling {approx:9.4f}, gap/N = {(approx - exact) / N:.4f}"
    )
print("\nentropy is the (per-particle) log of how many microstates share a macrostate")
