"""Error norms, empirical convergence rates and energy audits.

The three norms mirror the error bounds of the reduced-model theory:
velocity and pressure differences are measured in L2 of time and of the thin
channel (the vertical measure carries the thickness eps), the displacement
difference in L-infinity of time with values in H2.  Rates are least-squares
slopes on log-log axes over a ladder of thicknesses; the theory provides
upper bounds, so acceptance checks are one-sided and superconvergence
passes.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DegenerateFitError, GridMismatchError, ParameterError
from .fsi import (
    EnergyLedger,
    FsiParams,
    FsiTrajectory,
    harmonic_ramp_forcing,
    run_fsi,
)
from .reconstruction import ApproxTriple, assemble_approx, solve_reduced
from .scaling import ModelParams, eps_power
from .spectral import ChannelField, PeriodicField, PeriodicGrid, VerticalNodes

logger = logging.getLogger("lubelastic.verify")


# ----------------------------------------------------------------------
# norms
# ----------------------------------------------------------------------

def _snapshot_channel_sq(snapshot) -> float:
    """Integral of |.|^2 over the unit-depth reference channel, summed over
    components when a snapshot is a sequence of fields."""
    if isinstance(snapshot, ChannelField):
        comps = (snapshot,)
    else:
        comps = tuple(snapshot)
    total = 0.0
    for comp in comps:
        vertical = comp.values**2 @ comp.vnodes.weights
        total += float(np.mean(vertical))
    return total


def thin_norm_L2L2(snapshots: Sequence, eps: float, times: np.ndarray) -> float:
    """L2(0,T; L2 of the thin channel) norm of a snapshot sequence.

    Each snapshot is a ChannelField on the reference domain, or a sequence
    of them (vector components); the thin-channel measure contributes one
    factor eps.  Time integration is trapezoidal on the snapshot grid.
    """
    times = np.asarray(times, dtype=float)
    if len(times) != len(snapshots):
        raise GridMismatchError("one snapshot per time sample is required")
    if len(times) < 2:
        raise ParameterError("need at least two time samples")
    sq = np.array([_snapshot_channel_sq(s) for s in snapshots])
    return float(np.sqrt(eps * np.trapezoid(sq, times)))


def h2_norm(field: PeriodicField) -> float:
    """Full H2 norm: L2 of the value, the gradient and all second derivatives."""
    grid = field.grid
    hat = field.hat
    if grid.dim == 1:
        xi2 = grid.xi[0] ** 2
    else:
        xi2 = grid.xi[0] ** 2 + grid.xi[1] ** 2
    sym = 1.0 + xi2 + xi2**2
    return float(np.sqrt(np.sum(grid.mode_weights * sym * np.abs(hat) ** 2)))


def norm_LinfH2(snapshots: Sequence[PeriodicField]) -> float:
    """Max over snapshots of the full H2 norm."""
    if not snapshots:
        raise ParameterError("need at least one snapshot")
    return max(h2_norm(f) for f in snapshots)


# ----------------------------------------------------------------------
# reports and rate fits
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorReport:
    """Model-error norms for one thickness, plus the energy-audit ratio."""

    eps: float
    kappa: float
    err_velocity: float
    err_pressure: float
    err_displacement: float
    energy_ratio: float


_NORM_FIELDS = {
    "velocity": "err_velocity",
    "pressure": "err_pressure",
    "displacement": "err_displacement",
}


@dataclass(frozen=True)
class RateFit:
    which: str
    pairs: tuple[tuple[float, float], ...]
    slope: float
    r2: float


def fit_rate(reports: Sequence[ErrorReport], which: str) -> RateFit:
    """Least-squares slope of log(error) against log(eps)."""
    if which not in _NORM_FIELDS:
        raise ParameterError(f"unknown norm selector {which!r}")
    if len(reports) < 3:
        raise ParameterError("need at least three ladder points for a rate fit")
    kappas = {r.kappa for r in reports}
    if len(kappas) != 1:
        raise ParameterError(f"ladder mixes rigidity exponents: {sorted(kappas)}")
    pairs = tuple((r.eps, getattr(r, _NORM_FIELDS[which])) for r in reports)
    errs = np.array([e for _, e in pairs])
    if np.any(errs <= 0.0) or np.any(errs < 1e-300):
        raise DegenerateFitError(
            f"{which} errors contain machine-exact zeros; no rate can be fitted"
        )
    x = np.log(np.array([e for e, _ in pairs]))
    y = np.log(errs)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(which=which, pairs=pairs, slope=float(slope), r2=r2)


# ----------------------------------------------------------------------
# energy audit
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AuditResult:
    ok: bool
    first_violation: int | None
    ratios: np.ndarray
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def energy_audit(ledger: EnergyLedger, params, rel_tol: float = 1e-12) -> AuditResult:
    """Check the discrete energy inequality at every step.

    The left side (energies plus accumulated dissipation) must not exceed
    the accumulated work of forcing beyond rel_tol times the scale of the
    terms involved, and each dissipation integral must be nonnegative and
    nondecreasing.  The ratio series reports lhs(t) / (t_physical * eps^3),
    with t_physical = eps^tau * t, the combination the energy bound keeps
    of order one.
    """
    model = params.model if isinstance(params, FsiParams) else params
    n = len(ledger)
    if n == 0:
        return AuditResult(ok=True, first_violation=None, ratios=np.array([]))
    lhs = ledger.lhs()
    work = np.array(ledger.work)
    for name in ("viscous_dissipation", "viscoelastic_dissipation", "numerical_dissipation"):
        arr = np.array(getattr(ledger, name))
        increments = np.diff(np.concatenate([[0.0], arr]))
        bad = np.nonzero(increments < -rel_tol * np.maximum.accumulate(np.abs(arr) + 1e-300))[0]
        if bad.size:
            return AuditResult(
                ok=False, first_violation=int(bad[0] + 1), ratios=np.array([]),
                message=f"negative {name} increment at step {int(bad[0] + 1)}",
            )
    scale = np.maximum.reduce([
        np.abs(lhs), np.abs(work),
        np.array(ledger.numerical_dissipation),
    ])
    scale = np.maximum(scale, 1e-300)
    slack = work - lhs
    bad = np.nonzero(slack < -rel_tol * scale)[0]
    t = np.array(ledger.t)
    denom = t * eps_power(model.eps, model.tau + 3)
    ratios = ledger.lhs() / np.maximum(denom, 1e-300)
    if bad.size:
        step = int(bad[0] + 1)
        return AuditResult(
            ok=False, first_violation=step, ratios=ratios,
            message=f"energy inequality violated at step {step}: "
                    f"slack {slack[bad[0]]:.3e} vs scale {scale[bad[0]]:.3e}",
        )
    return AuditResult(ok=True, first_violation=None, ratios=ratios)


# ----------------------------------------------------------------------
# ladder pipeline
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RateStudyConfig:
    """One rate study: a thickness ladder at fixed rigidity exponent."""

    kappa: Fraction = Fraction(2)
    eps_list: tuple[float, ...] = (0.125, 0.0625, 0.03125, 0.015625)
    dim: int = 1
    n: int = 16
    m: int = 24
    dt: float = 1e-4
    t_end: float = 0.5
    snapshot_stride: int = 20
    amplitude: float = 1.0
    ramp_time: float = 0.1
    wavevector: tuple[int, ...] = (1,)
    component: int = 0
    rho_f: float = 1.0
    rho_s: float = 1.0
    B: float = 1.0
    nu: float = 1.0
    theta: float = 1.0

    def __post_init__(self):
        if len(self.eps_list) < 1:
            raise ParameterError("eps ladder must not be empty")
        if np.any(np.diff(self.eps_list) >= 0):
            raise ParameterError("eps ladder must be strictly decreasing")
        for e in self.eps_list:
            if not (0 < e < 1) or 2.0 ** round(np.log2(e)) != e:
                raise ParameterError(f"ladder entries must be powers of two in (0,1), got {e}")

    def model_for(self, eps: float) -> ModelParams:
        return ModelParams(rho_f=self.rho_f, nu=self.nu, rho_s=self.rho_s,
                           B=self.B, theta=self.theta, eps=eps, kappa=self.kappa,
                           v_D=0.0, dim=self.dim)


@dataclass(frozen=True)
class RateStudyResult:
    config: RateStudyConfig
    reports: tuple[ErrorReport, ...]
    fits: dict
    audits: tuple[AuditResult, ...]
    ledgers: tuple[EnergyLedger, ...]


def _study_pieces(config: RateStudyConfig):
    grid = PeriodicGrid(dim=config.dim, n=config.n)
    vnodes = VerticalNodes(config.m)
    forcing = harmonic_ramp_forcing(
        grid, vnodes, amplitude=config.amplitude, wavevector=config.wavevector,
        component=config.component, ramp_time=config.ramp_time,
    )
    return grid, vnodes, forcing


def compare_trajectories(traj: FsiTrajectory, approx: ApproxTriple) -> tuple[float, float, float]:
    """Error-norm distances between a full-order trajectory and a
    reconstructed triple on matching snapshot times."""
    if len(traj.states) != len(approx.times):
        raise GridMismatchError("trajectories have different snapshot counts")
    if np.max(np.abs(traj.times - approx.times)) > 1e-8 * max(traj.times[-1], 1e-300):
        raise GridMismatchError("trajectories sample different times")
    eps = traj.params.model.eps
    v_diffs = []
    p_diffs = []
    eta_diffs = []
    for state, comps, p_ap, eta_ap in zip(traj.states, approx.v, approx.p, approx.eta):
        v_diffs.append(tuple(sv - av for sv, av in zip(state.v, comps)))
        p_diffs.append(state.p - p_ap)
        eta_diffs.append(state.eta - eta_ap)
    err_v = thin_norm_L2L2(v_diffs, eps, traj.times)
    err_p = thin_norm_L2L2(p_diffs, eps, traj.times)
    err_eta = norm_LinfH2(eta_diffs)
    return err_v, err_p, err_eta


def _ladder_point(config: RateStudyConfig, eps: float):
    """Run one thickness: full-order solve, reconstruction, error norms."""
    grid, vnodes, forcing = _study_pieces(config)
    model = config.model_for(eps)
    params = FsiParams(model=model, grid=grid, vnodes=vnodes, dt=config.dt,
                       forcing=forcing)
    traj = run_fsi(params, config.t_end, snapshot_stride=config.snapshot_stride)
    reduced = solve_reduced(model, grid, vnodes, forcing, config.t_end,
                            config.dt, snapshot_stride=config.snapshot_stride)
    approx = assemble_approx(reduced, model, forcing, vnodes)
    err_v, err_p, err_eta = compare_trajectories(traj, approx)
    audit = energy_audit(traj.ledger, params)
    t_phys = config.t_end * eps_power(eps, model.tau)
    ratio = float(traj.ledger.lhs()[-1] / (t_phys * eps**3))
    report = ErrorReport(eps=eps, kappa=float(model.kappa), err_velocity=err_v,
                         err_pressure=err_p, err_displacement=err_eta,
                         energy_ratio=ratio)
    return report, traj.ledger, audit


def run_rate_study(config: RateStudyConfig, jobs: int = 1) -> RateStudyResult:
    """Run the full ladder and fit the three rates.

    Ladder points are independent; with jobs > 1 they run in separate
    processes.  Results are ordered by the configured ladder either way.
    """
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_ladder_point, config, eps) for eps in config.eps_list]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_ladder_point(config, eps) for eps in config.eps_list]
    reports = tuple(o[0] for o in outcomes)
    ledgers = tuple(o[1] for o in outcomes)
    audits = tuple(o[2] for o in outcomes)
    fits = {which: fit_rate(reports, which) for which in _NORM_FIELDS}
    return RateStudyResult(config=config, reports=reports, fits=fits,
                           audits=audits, ledgers=ledgers)


def resolution_guard(config: RateStudyConfig, factor: float = 0.1) -> dict:
    """Refinement pre-pass at the smallest thickness.

    Halving dt and raising the vertical resolution must move each error norm
    by at most `factor` of its value, so discretization error sits well
    below the model error a rate fit measures.
    """
    eps = config.eps_list[-1]
    base, _, _ = _ladder_point(config, eps)
    fine_dt, _, _ = _ladder_point(replace(config, dt=config.dt / 2), eps)
    fine_m, _, _ = _ladder_point(replace(config, m=config.m + 8), eps)
    out = {}
    for which, attr in _NORM_FIELDS.items():
        b = getattr(base, attr)
        shifts = [abs(getattr(fine_dt, attr) - b) / b, abs(getattr(fine_m, attr) - b) / b]
        out[which] = {"error": b, "dt_shift": shifts[0], "m_shift": shifts[1],
                      "ok": max(shifts) <= factor}
    out["ok"] = all(v["ok"] for v in out.values() if isinstance(v, dict))
    return out
