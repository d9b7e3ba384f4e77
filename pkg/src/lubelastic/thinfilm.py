"""Degenerate-parabolic film-height models on the periodic line.

The family solved here is

    d/dt eta = (-1)**((alpha-1)/2) d/dx(eta**3 d^alpha/dx^alpha eta)
               + d/dx(eta**3 d/dx Phi'(eta)) - P d/dx(eta * v_D),

with alpha in {1, 3, 5} selecting the pressure balance (gravity, surface
tension, plate bending), an optional potential Phi and a bottom-wall drift
of speed v_D with prefactor P (default 6).  A linearized variant replaces
the cubic mobility by the constant coefficient c.

Time stepping is semi-implicit: the leading operator with the mobility
frozen at its maximum is inverted through its Fourier symbol, everything
else is explicit.  The divergence form is applied spectrally as the last
operation, so the mean of eta is conserved to roundoff.

A mode-exact exponential integrator is provided for the linear sixth-order
evolution d/dt eta - c (Lap')^3 eta = F, and the classical stationary
pressure problem -d/dx(eta**3 dp/dx) = -6 nu v_D d/dx eta is solved in
closed form through the periodic flux balance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError, PositivityError
from .spectral import (
    PeriodicField,
    dealiased_product,
    laplacian_symbol,
    spectral_derivative,
)

POSITIVITY_FLOOR = 1e-6
MAX_HALVINGS = 20


@dataclass(frozen=True)
class ThinFilmModel:
    """One member of the film-height model family.

    alpha selects the leading operator order (the equation is of order
    alpha + 1); mobility_scale multiplies the cubic mobility of the leading
    term only.  With linearized=True the mobility is the constant 1 and c is
    the leading coefficient; a potential is not meaningful in that case.
    """

    alpha: int = 5
    c: float = 1.0
    mobility_scale: float = 1.0
    potential_dPhi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    v_D: float = 0.0
    drift_prefactor: float = 6.0
    linearized: bool = False

    def __post_init__(self):
        if self.alpha not in (1, 3, 5):
            raise ParameterError(f"alpha must be one of 1, 3, 5, got {self.alpha}")
        if self.c < 0:
            raise ParameterError(f"leading coefficient must be nonnegative, got {self.c}")
        if self.linearized and self.potential_dPhi is not None:
            raise ParameterError("a potential term is not defined for the linearized model")

    @property
    def sign(self) -> float:
        return (-1.0) ** ((self.alpha - 1) // 2)


@dataclass(frozen=True)
class FilmState:
    eta: PeriodicField
    t: float = 0.0


@dataclass(frozen=True)
class FilmTrajectory:
    states: tuple[FilmState, ...]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def fields(self) -> list[PeriodicField]:
        return [s.eta for s in self.states]

    def __len__(self) -> int:
        return len(self.states)


def rhs(model: ThinFilmModel, eta: PeriodicField) -> PeriodicField:
    """Spatial right-hand side of the model; zero mean by divergence form."""
    if eta.grid.dim != 1:
        raise ParameterError("the film family is one-dimensional")
    if not np.all(np.isfinite(eta.values)):
        raise ParameterError("film height contains non-finite values")
    xi = eta.grid.xi[0]
    hat = eta.hat
    out = np.zeros_like(hat)

    if model.linearized:
        out += model.sign * model.c * (1j * xi) ** (model.alpha + 1) * hat
    else:
        if eta.values.min() <= 0.0:
            raise PositivityError(
                f"nonpositive film height (min {eta.values.min():.3e}) under cubic mobility",
                last_state=FilmState(eta),
            )
        d_alpha = spectral_derivative(eta, model.alpha)
        flux = dealiased_product(eta, eta, eta, d_alpha)
        out += model.sign * model.mobility_scale * (1j * xi) * flux.hat
        if model.potential_dPhi is not None:
            dphi = PeriodicField(eta.grid, np.asarray(model.potential_dPhi(eta.values), dtype=float))
            dphi_x = spectral_derivative(dphi, 1)
            pot_flux = dealiased_product(eta, eta, eta, dphi_x)
            out += (1j * xi) * pot_flux.hat

    if model.v_D != 0.0:
        out -= model.drift_prefactor * model.v_D * (1j * xi) * hat
    out[0] = 0.0
    return PeriodicField.from_hat(eta.grid, out)


def _frozen_symbol(model: ThinFilmModel, eta: PeriodicField) -> np.ndarray:
    """Fourier symbol of the leading operator with mobility frozen at max."""
    xi = eta.grid.xi[0]
    if model.linearized:
        gain = model.c
    else:
        gain = model.mobility_scale * float(eta.values.max()) ** 3
    return -gain * xi ** (model.alpha + 1)


def _imex_step(model: ThinFilmModel, eta: PeriodicField, dt: float) -> PeriodicField:
    L = _frozen_symbol(model, eta)
    n_hat = rhs(model, eta).hat
    hat = eta.hat
    new_hat = (hat + dt * (n_hat - L * hat)) / (1.0 - dt * L)
    return PeriodicField.from_hat(eta.grid, new_hat)


def step(model: ThinFilmModel, state: FilmState, dt: float,
         floor: float = POSITIVITY_FLOOR) -> FilmState:
    """Advance the state by dt with one semi-implicit step.

    If the candidate height dips below the positivity floor the internal
    step is halved (at most 20 times from the requested dt) and integration
    continues from the last valid height until t + dt is reached.
    """
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    eta = state.eta
    remaining = dt
    sub = dt
    halvings = 0
    while remaining > 1e-14 * dt:
        sub = min(sub, remaining)
        candidate = _imex_step(model, eta, sub)
        if not model.linearized and candidate.values.min() < floor:
            halvings += 1
            if halvings > MAX_HALVINGS:
                raise PositivityError(
                    f"positivity floor {floor} unreachable after {MAX_HALVINGS} halvings",
                    last_state=FilmState(eta, state.t + (dt - remaining)),
                )
            sub *= 0.5
            continue
        eta = candidate
        remaining -= sub
    return FilmState(eta, state.t + dt)


def film_energy(model: ThinFilmModel, eta: PeriodicField) -> float:
    """Diagnostic energy: 1/2 |Lap' eta|^2 for alpha=5, 1/2 |d/dx eta|^2 for
    alpha=3, 1/2 |eta|^2 for alpha=1 and for linearized runs."""
    hat = eta.hat
    w = eta.grid.mode_weights
    xi2 = -laplacian_symbol(eta.grid)
    if model.linearized or model.alpha == 1:
        sym = np.ones_like(xi2)
    elif model.alpha == 3:
        sym = xi2
    else:
        sym = xi2**2
    return float(0.5 * np.sum(w * sym * np.abs(hat) ** 2))


def mass(eta: PeriodicField) -> float:
    return eta.mean()


def solve_linear_sixth(
    c: float,
    F,
    eta0: PeriodicField,
    t_end: float,
    dt: float,
    snapshot_stride: int = 1,
) -> FilmTrajectory:
    """Integrate d/dt eta - c (Lap')^3 eta = F mode-exactly.

    Parameters
    ----------
    c : positive coefficient of the sixth-order operator.
    F : source; None, a constant PeriodicField, or a callable t -> PeriodicField.
        Sampled at the step endpoints and integrated by the exponential
        trapezoidal rule, which is exact for sources at most linear in time
        at any stiffness, second-order accurate otherwise.
    eta0 : initial height.
    t_end, dt : horizon and step; t_end must be an integer number of steps.
    snapshot_stride : keep every stride-th state (the initial and final states
        are always kept).

    The zero mode is untouched whenever F has zero mean, so a zero-mean eta
    stays zero-mean.
    """
    if c <= 0:
        raise ParameterError(f"need c > 0, got {c}")
    nsteps = int(round(t_end / dt))
    if nsteps < 1 or abs(nsteps * dt - t_end) > 1e-9 * t_end:
        raise ParameterError(f"t_end = {t_end} is not an integer multiple of dt = {dt}")
    grid = eta0.grid
    lam = c * (-laplacian_symbol(grid)) ** 3  # decay rate per mode, >= 0
    z = -lam * dt
    decay = np.exp(z)
    phi1 = _phi1(z)
    phi2 = _phi2(z)

    def source_hat(t: float):
        if F is None:
            return None
        f = F(t) if callable(F) else F
        return f.hat

    hat = eta0.hat.copy()
    s_old = source_hat(0.0)
    states = [FilmState(eta0, 0.0)]
    for i in range(nsteps):
        t_next = (i + 1) * dt
        hat = decay * hat
        if s_old is not None:
            s_new = source_hat(t_next)
            hat = hat + dt * ((phi1 - phi2) * s_old + phi2 * s_new)
            s_old = s_new
        if (i + 1) % snapshot_stride == 0 or i == nsteps - 1:
            states.append(FilmState(PeriodicField.from_hat(grid, hat), t_next))
    return FilmTrajectory(tuple(states))


def _phi1(z: np.ndarray) -> np.ndarray:
    """(exp(z) - 1)/z, stable at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    big = np.abs(z) > 1e-8
    out[big] = np.expm1(z[big]) / z[big]
    small = ~big
    out[small] = 1.0 + 0.5 * z[small]
    return out


def _phi2(z: np.ndarray) -> np.ndarray:
    """(exp(z) - 1 - z)/z**2, stable at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.full_like(z, 0.5)
    big = np.abs(z) > 1e-6
    out[big] = (np.expm1(z[big]) - z[big]) / z[big] ** 2
    small = ~big
    out[small] = 0.5 + z[small] / 6.0
    return out


def solve_reynolds_stationary(eta: PeriodicField, v_D: float, nu: float = 1.0) -> PeriodicField:
    """Stationary pressure under a profile eta sliding over a wall at speed v_D.

    Solves -d/dx(eta**3 dp/dx) = -6 nu v_D d/dx eta on the periodic line in
    closed form: integrating once gives eta**3 p' = 6 nu v_D eta + const,
    and the constant is fixed by requiring p' to have zero mean so that p is
    periodic.  nu = 1 recovers the classical normalized equation.  Returns
    the unique zero-mean pressure.
    """
    if eta.grid.dim != 1:
        raise ParameterError("the stationary pressure problem is one-dimensional")
    if nu <= 0:
        raise ParameterError(f"need nu > 0, got {nu}")
    h = eta.values
    if h.min() <= 0.0:
        raise ParameterError(f"profile must be strictly positive, min is {h.min():.3e}")
    inv2 = h**-2
    inv3 = h**-3
    flux_const = -6.0 * nu * v_D * inv2.mean() / inv3.mean()
    dp = (6.0 * nu * v_D * h + flux_const) * inv3
    dp -= dp.mean()  # zero to roundoff already; enforce exactly
    dp_hat = eta.grid.rfft(dp)
    xi = eta.grid.xi[0]
    p_hat = np.zeros_like(dp_hat)
    p_hat[1:] = dp_hat[1:] / (1j * xi[1:])
    return PeriodicField.from_hat(eta.grid, p_hat)


def reynolds_residual(eta: PeriodicField, p: PeriodicField, v_D: float, nu: float = 1.0) -> float:
    """L2 residual of the stationary strong form for a candidate pressure."""
    dp = spectral_derivative(p, 1)
    flux = dealiased_product(eta, eta, eta, dp)
    lhs = -spectral_derivative(flux, 1).values
    rhs_ = -6.0 * nu * v_D * spectral_derivative(eta, 1).values
    return float(np.sqrt(np.mean((lhs - rhs_) ** 2)))
