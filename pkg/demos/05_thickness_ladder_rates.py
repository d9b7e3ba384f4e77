"""Empirical convergence rates over a ladder of channel thicknesses.

For each thickness the full-order coupled problem is solved, the reduced
model is solved once, the approximate solution is rebuilt, and the three
error norms are measured: velocity and pressure in L2 of time and the thin
channel, displacement in L-infinity of time with H2 values.  Least-squares
slopes on log-log axes then estimate the convergence rates; the theory
guarantees at least 3, 1 and kappa + 1/2, and gentle configurations
superconverge.

This demo uses a reduced resolution so it finishes in a few seconds; the
acceptance suite and the `lubelastic verify rates` command run the full
configuration.

Run as:  python3 demos/05_thickness_ladder_rates.py
"""
from fractions import Fraction

from lubelastic.verify import RateStudyConfig, run_rate_study

config = RateStudyConfig(
    kappa=Fraction(2),
    eps_list=(0.125, 0.0625, 0.03125, 0.015625),
    n=16, m=16, dt=5e-4, t_end=0.25, snapshot_stride=25,
    rho_f=40.0, rho_s=40.0, theta=20.0,
)
print(f"ladder: eps in {config.eps_list}, kappa = {config.kappa} "
      f"(tau = {config.kappa - 3})")

result = run_rate_study(config)

print(f"\n{'eps':>10} {'velocity':>12} {'pressure':>12} {'displacement':>14} "
      f"{'energy ratio':>13}")
for r in result.reports:
    print(f"{r.eps:>10.6f} {r.err_velocity:>12.4e} {r.err_pressure:>12.4e} "
          f"{r.err_displacement:>14.4e} {r.energy_ratio:>13.4e}")

targets = {"velocity": 3.0, "pressure": 1.0,
           "displacement": float(config.kappa) + 0.5}
print("\nfitted log-log slopes (one-sided targets in parentheses):")
for which, fit in result.fits.items():
    print(f"  {which:>13}: slope {fit.slope:5.2f} (>= ~{targets[which]:.1f}), "
          f"r^2 {fit.r2:.4f}")

print("\nenergy audits:", "all pass" if all(a.ok for a in result.audits) else "FAILED")
