"""Model parameters, scaling laws and reduced-model coefficients.

All quantities are nondimensional.  Exponents (kappa, tau) are kept as exact
`Fraction`s so that derived exponents like tau + kappa + 3 never drift when
film thicknesses are swept over a ladder of powers of two.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Union

from .errors import ParameterError, RegimeError

Exponent = Union[int, float, str, Fraction]


def _as_fraction(x: Exponent) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)  # exact for ints and binary floats


def time_scale_exponent(kappa: Exponent) -> Fraction:
    """Time-scale exponent tau matched to a plate-rigidity exponent kappa.

    The coupled thin-channel/plate dynamics is nontrivial in the slow time
    scale T = eps**tau exactly when tau = kappa - 3.
    """
    k = _as_fraction(kappa)
    if k <= 0:
        raise RegimeError(f"rigidity exponent kappa must be positive, got {k}")
    return k - 3


@dataclass(frozen=True)
class RegimeCheck:
    """Outcome of a rate-guarantee regime validation."""

    ok: bool
    kappa: Fraction
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_theorem_regime(kappa: Exponent) -> RegimeCheck:
    """Check whether kappa admits the proven error rates.

    Passes iff 0 < kappa <= 5/2, equivalently tau <= -1/2.  A failing check
    is not an error: the solver still runs outside this range, only the rate
    guarantee is void (callers emit a warning instead of refusing).
    """
    k = _as_fraction(kappa)
    if k <= 0:
        raise RegimeError(f"rigidity exponent kappa must be positive, got {k}")
    if k <= Fraction(5, 2):
        return RegimeCheck(ok=True, kappa=k)
    return RegimeCheck(
        ok=False,
        kappa=k,
        reason=f"kappa = {k} violates kappa <= 5/2 (tau = {k - 3} > -1/2); "
        "error rates are not guaranteed",
    )


def reduced_coefficient_e0(B: float, nu: float) -> float:
    """Sixth-order coefficient B/(12 nu) of the reduced plate evolution
    driven through a plate already modeled as a lower-dimensional bending
    surface."""
    if B <= 0 or nu <= 0:
        raise ParameterError(f"need B > 0 and nu > 0, got B={B}, nu={nu}")
    return B / (12.0 * nu)


def reduced_coefficient_eh(lame: "LameParams", nu: float) -> float:
    """Sixth-order coefficient 2*mu*(mu+lambda) / (9*nu*(2*mu+lambda)) of the
    reduced evolution obtained when the covering layer is a genuinely
    three-dimensional elastic plate."""
    if nu <= 0:
        raise ParameterError(f"need nu > 0, got nu={nu}")
    mu, lam = lame.mu, lame.lam
    return 2.0 * mu * (mu + lam) / (9.0 * nu * (2.0 * mu + lam))


def reynolds_number(rho_f: float, L: float, mu: float, T: float) -> float:
    """Reynolds number rho_f * L**2 / (mu * T)."""
    for name, val in (("rho_f", rho_f), ("L", L), ("mu", mu), ("T", T)):
        if val <= 0:
            raise ParameterError(f"need {name} > 0, got {val}")
    return rho_f * L * L / (mu * T)


def eps_power(eps: float, exponent: Exponent) -> float:
    """eps**exponent with exact exponent arithmetic for powers of two.

    When eps is a power of two the result is computed as 2**(log2(eps) *
    exponent) with the product carried out in rational arithmetic, so ladder
    sweeps reproduce bit-identical scalings.
    """
    if eps <= 0:
        raise ParameterError(f"need eps > 0, got {eps}")
    e = _as_fraction(exponent)
    log2eps = math.log2(eps)
    if log2eps == int(log2eps):
        return 2.0 ** float(int(log2eps) * e)
    return float(eps) ** float(e)


@dataclass(frozen=True)
class LameParams:
    """Lame constants of a linearly elastic layer."""

    mu: float
    lam: float = 0.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ParameterError(f"first Lame constant must be positive, got {self.mu}")
        if self.lam < 0:
            raise ParameterError(f"second Lame constant must be nonnegative, got {self.lam}")


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional physical and scaling parameters of one problem instance.

    Attributes
    ----------
    rho_f, nu : fluid density and viscosity.
    rho_s, B, theta : plate density, bending rigidity and visco-elasticity.
    eps : film thickness ratio, in (0, 1).
    kappa : plate rigidity exponent (> 0); the plate coefficients scale like
        B * eps**(-kappa) and rho_s * eps**(-kappa).
    tau : time-scale exponent; defaults to kappa - 3, the value at which the
        fluid pressure balances plate bending in the reduced model.
    v_D : bottom-wall drift speed.
    dim : number of horizontal directions (1 or 2).
    """

    rho_f: float = 1.0
    nu: float = 1.0
    rho_s: float = 1.0
    B: float = 1.0
    theta: float = 0.0
    eps: float = 0.125
    kappa: Fraction = field(default=Fraction(2))
    tau: Fraction | None = None
    v_D: float = 0.0
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kappa", _as_fraction(self.kappa))
        if self.tau is None:
            object.__setattr__(self, "tau", self.kappa - 3)
        else:
            object.__setattr__(self, "tau", _as_fraction(self.tau))
        if not (0.0 < self.eps < 1.0):
            raise ParameterError(f"eps must lie in (0, 1), got {self.eps}")
        if self.kappa <= 0:
            raise ParameterError(f"kappa must be positive, got {self.kappa}")
        if self.nu <= 0:
            raise ParameterError(f"nu must be positive, got {self.nu}")
        if self.rho_f < 0 or self.rho_s < 0:
            raise ParameterError("densities must be nonnegative")
        if self.B <= 0:
            raise ParameterError(f"B must be positive, got {self.B}")
        if self.theta < 0:
            raise ParameterError(f"theta must be nonnegative, got {self.theta}")
        if self.dim not in (1, 2):
            raise ParameterError(f"dim must be 1 or 2, got {self.dim}")

    @property
    def coupled_regime(self) -> bool:
        """True when tau = kappa - 3, the scaling regime in which the reduced
        model carries a fluid-plate coupling."""
        return self.tau == self.kappa - 3

    def eps_to(self, exponent: Exponent) -> float:
        return eps_power(self.eps, exponent)

    @property
    def time_scale(self) -> float:
        """T = eps**tau, the slow time unit."""
        return self.eps_to(self.tau)

    @property
    def reduced_coefficient(self) -> float:
        return reduced_coefficient_e0(self.B, self.nu)

    def with_eps(self, eps: float) -> "ModelParams":
        return ModelParams(
            rho_f=self.rho_f, nu=self.nu, rho_s=self.rho_s, B=self.B,
            theta=self.theta, eps=eps, kappa=self.kappa, tau=None if self.coupled_regime else self.tau,
            v_D=self.v_D, dim=self.dim,
        )


_MODEL_PARAM_NAMES = {f.name for f in fields(ModelParams)}


def model_params_from_dict(doc: dict) -> ModelParams:
    """Build ModelParams from a flat key/value mapping; unknown keys error."""
    unknown = set(doc) - _MODEL_PARAM_NAMES
    if unknown:
        raise ParameterError(f"unknown parameter keys: {sorted(unknown)}")
    kwargs = dict(doc)
    for key in ("kappa", "tau"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = _as_fraction(kwargs[key])
    return ModelParams(**kwargs)


def model_params_from_json(text_or_path) -> ModelParams:
    """Load ModelParams from a JSON document (path or raw string)."""
    text = str(text_or_path)
    if not text.lstrip().startswith("{"):
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return model_params_from_dict(json.loads(text))


@dataclass(frozen=True)
class NonlinearScalingPreset:
    """Thin-film scaling of the moving-boundary plate problem.

    The hatted constants are eps-independent; the physical coefficients then
    scale as B = B_hat/eps, D = D_hat/eps**2, rho_s = rho_s_hat/eps and the
    time unit as T = eps**-2.  Under this scaling the total energy obeys a
    C*t*eps**3 bound and the displacement a C*eps sup bound, which are the
    targets a run summary documents.
    """

    B_hat: float = 1.0
    D_hat: float = 1.0
    rho_s_hat: float = 1.0

    def __post_init__(self):
        for name in ("B_hat", "D_hat", "rho_s_hat"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")

    def coefficients(self, eps: float) -> dict:
        if not (0.0 < eps < 1.0):
            raise ParameterError(f"eps must lie in (0, 1), got {eps}")
        return {
            "eps": eps,
            "B": self.B_hat / eps,
            "D": self.D_hat / eps**2,
            "rho_s": self.rho_s_hat / eps,
            "time_scale": eps**-2,
            "energy_bound_exponent": 3,      # total energy <= C * t * eps**3
            "displacement_bound_exponent": 1,  # sup |eta| <= C * eps
        }
