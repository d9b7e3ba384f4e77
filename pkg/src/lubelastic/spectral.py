"""Periodic pseudo-spectral machinery and vertical Chebyshev discretization.

Horizontal directions live on the unit torus (0,1)^dim sampled at n uniform
nodes per direction, with derivatives applied through the Fourier symbol
(2*pi*i*k)**order.  The vertical direction lives on (-1, 0) sampled at
Chebyshev-Gauss-Lobatto points; differentiation, antiderivatives and Gram
matrices are assembled exactly in Chebyshev coefficient space, so quadrature
is exact for every polynomial the solvers produce.

Nonlinear products are formed nodally on a 3/2 zero-padded grid; the cubic
mobility of the film models aliases badly at marginal resolution otherwise.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import GridMismatchError, ParameterError

__all__ = [
    "PeriodicGrid",
    "PeriodicField",
    "VerticalNodes",
    "ChannelField",
    "spectral_derivative",
    "vertical_integral",
    "mean_value",
    "dealiased_product",
]


# ----------------------------------------------------------------------
# horizontal grids and fields
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    """Uniform periodic grid on (0,1)^dim with power-of-two resolution."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ParameterError(f"n must be a power of two >= 8, got {self.n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @cached_property
    def nodes(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.n) / self.n
        return (x,) * self.dim

    @cached_property
    def meshes(self) -> tuple[np.ndarray, ...]:
        if self.dim == 1:
            return (self.nodes[0],)
        return tuple(np.meshgrid(*self.nodes, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers for each axis of the half-spectrum layout."""
        full = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)
        half = np.arange(self.n // 2 + 1)
        if self.dim == 1:
            return (half,)
        return (full, half)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers 2*pi*k broadcast over the spectral layout."""
        ks = self.wavenumbers
        if self.dim == 1:
            return (2.0 * np.pi * ks[0],)
        return (
            2.0 * np.pi * ks[0][:, None].astype(float),
            2.0 * np.pi * ks[1][None, :].astype(float),
        )

    @cached_property
    def mode_weights(self) -> np.ndarray:
        """Parseval multiplicities of the half-spectrum layout.

        With coefficients normalized by n**dim, the nodal mean of |g|^2
        equals sum(mode_weights * |ghat|^2).
        """
        n = self.n
        wlast = np.full(n // 2 + 1, 2.0)
        wlast[0] = 1.0
        wlast[-1] = 1.0
        if self.dim == 1:
            return wlast
        return np.broadcast_to(wlast[None, :], (n, n // 2 + 1)).copy()

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        if self.dim == 1:
            return (self.n // 2 + 1,)
        return (self.n, self.n // 2 + 1)

    def rfft(self, values: np.ndarray) -> np.ndarray:
        """Forward real transform over the horizontal axes, normalized."""
        axes = tuple(range(self.dim))
        return np.fft.rfftn(values, axes=axes) / self.n**self.dim

    def irfft(self, coeffs: np.ndarray) -> np.ndarray:
        axes = tuple(range(self.dim))
        shape = self.shape
        return np.fft.irfftn(coeffs * self.n**self.dim, s=shape, axes=axes)


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """Real scalar field on a periodic horizontal grid."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn) -> "PeriodicField":
        return cls(grid, np.asarray(fn(*grid.meshes), dtype=float))

    @classmethod
    def from_hat(cls, grid: PeriodicGrid, coeffs: np.ndarray) -> "PeriodicField":
        return cls(grid, grid.irfft(coeffs))

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "PeriodicField":
        return cls(grid, np.zeros(grid.shape))

    @property
    def hat(self) -> np.ndarray:
        return self.grid.rfft(self.values)

    def mean(self) -> float:
        return float(self.values.mean())

    def l2(self) -> float:
        """L2 norm over the unit torus."""
        return float(np.sqrt(np.mean(self.values**2)))

    def derivative(self, order: int, axis: int = 0) -> "PeriodicField":
        return spectral_derivative(self, order, axis)

    def __add__(self, other):
        self._check(other)
        return PeriodicField(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return PeriodicField(self.grid, self.values - other.values)

    def __mul__(self, a: float):
        return PeriodicField(self.grid, self.values * a)

    __rmul__ = __mul__

    def __neg__(self):
        return PeriodicField(self.grid, -self.values)

    def _check(self, other):
        if not isinstance(other, PeriodicField) or other.grid is not self.grid:
            if isinstance(other, PeriodicField) and other.grid.shape == self.grid.shape:
                return
            raise GridMismatchError("fields live on different grids")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if self.grid.dim == 1:
                writer.writerow(["x", "value"])
                for x, v in zip(self.grid.nodes[0], self.values):
                    writer.writerow([repr(float(x)), repr(float(v))])
            else:
                writer.writerow(["x1", "x2", "value"])
                X, Y = self.grid.meshes
                for x, y, v in zip(X.ravel(), Y.ravel(), self.values.ravel()):
                    writer.writerow([repr(float(x)), repr(float(y)), repr(float(v))])


def spectral_derivative(f: PeriodicField, order: int, axis: int = 0) -> PeriodicField:
    """Differentiate through the Fourier symbol; exact for band-limited fields.

    Odd orders zero the Nyquist mode (its derivative is not representable on
    the grid) and always return a zero-mean field.
    """
    if not (1 <= order <= 6):
        raise ParameterError(f"derivative order must lie in [1, 6], got {order}")
    if not (0 <= axis < f.grid.dim):
        raise ParameterError(f"axis {axis} out of range for dim {f.grid.dim}")
    hat = f.hat
    xi = f.grid.xi[axis]
    if f.grid.dim == 1:
        sym = (1j * xi) ** order
        if order % 2 == 1:
            sym[-1] = 0.0
        out = hat * sym
    else:
        sym = (1j * xi) ** order
        if order % 2 == 1:
            if axis == 0:
                sym = sym.copy()
                sym[f.grid.n // 2, :] = 0.0
            else:
                sym = sym.copy()
                sym[:, -1] = 0.0
        out = hat * sym
    return PeriodicField.from_hat(f.grid, out)


def mean_value(f: PeriodicField) -> float:
    """Spectral mean (zeroth Fourier coefficient)."""
    return f.mean()


def laplacian_symbol(grid: PeriodicGrid) -> np.ndarray:
    """Symbol of the horizontal Laplacian, -|xi|^2, on the spectral layout."""
    if grid.dim == 1:
        return -grid.xi[0] ** 2
    return -(grid.xi[0] ** 2 + grid.xi[1] ** 2)


def dealiased_product(*factors: PeriodicField) -> PeriodicField:
    """Nodal product of fields formed on a 3/2 zero-padded grid."""
    if not factors:
        raise ParameterError("need at least one factor")
    grid = factors[0].grid
    n, dim = grid.n, grid.dim
    npad = 3 * n // 2
    axes = tuple(range(dim))
    prod = None
    for f in factors:
        padded = _pad_hat(f.hat, n, npad, dim)
        vals = np.fft.irfftn(padded * npad**dim, s=(npad,) * dim, axes=axes)
        prod = vals if prod is None else prod * vals
    hat_pad = np.fft.rfftn(prod, axes=axes) / npad**dim
    return PeriodicField.from_hat(grid, _truncate_hat(hat_pad, n, npad, dim))


def _pad_hat(hat: np.ndarray, n: int, npad: int, dim: int) -> np.ndarray:
    if dim == 1:
        out = np.zeros(npad // 2 + 1, dtype=complex)
        out[: n // 2 + 1] = hat
        return out
    out = np.zeros((npad, npad // 2 + 1), dtype=complex)
    half = n // 2
    out[: half + 1, : half + 1] = hat[: half + 1, :]
    out[npad - (n - half - 1):, : half + 1] = hat[half + 1:, :]
    return out


def _truncate_hat(hat_pad: np.ndarray, n: int, npad: int, dim: int) -> np.ndarray:
    if dim == 1:
        return hat_pad[: n // 2 + 1].copy()
    half = n // 2
    out = np.zeros((n, half + 1), dtype=complex)
    out[: half + 1, :] = hat_pad[: half + 1, : half + 1]
    out[half + 1:, :] = hat_pad[npad - (n - half - 1):, : half + 1]
    return out


# ----------------------------------------------------------------------
# vertical discretization on (-1, 0)
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VerticalNodes:
    """Chebyshev-Gauss-Lobatto nodes on (-1, 0) with exact quadrature.

    nodes[0] = -1 and nodes[m-1] = 0; the weights integrate every polynomial
    of degree <= m-1 exactly over (-1, 0).  The default resolution is ample
    for the smooth per-mode channel profiles.
    """

    m: int = 32
    nodes: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.m < 4:
            raise ParameterError(f"need at least 4 vertical nodes, got {self.m}")
        u = -np.cos(np.pi * np.arange(self.m) / (self.m - 1))  # increasing on [-1, 1]
        y = (u - 1.0) / 2.0  # increasing on [-1, 0]
        y[0], y[-1] = -1.0, 0.0
        object.__setattr__(self, "nodes", y)
        object.__setattr__(self, "_u", u)
        object.__setattr__(self, "weights", self.ops.weights)

    @cached_property
    def ops(self) -> "ChebOps":
        return ChebOps(self._u)


class ChebOps:
    """Exact collocation operators for profiles sampled at mapped CGL nodes.

    Everything is assembled in Chebyshev coefficient space on the reference
    variable u in [-1, 1] with y = (u - 1)/2, so differentiation matrices,
    antiderivative matrices and Gram matrices are exact for polynomials up to
    the representable degree.
    """

    def __init__(self, u_nodes: np.ndarray):
        self.u = np.asarray(u_nodes, dtype=float)
        self.m = len(self.u)
        m = self.m
        V = C.chebvander(self.u, m - 1)            # values of T_k at nodes
        self.coeff = np.linalg.solve(V, np.eye(m))  # nodal values -> coefficients
        # cardinal polynomial coefficient columns
        cols = [self.coeff[:, j] for j in range(m)]
        # d/dy = 2 d/du
        self.D = np.stack(
            [C.chebval(self.u, 2.0 * C.chebder(c)) for c in cols], axis=1
        )
        # first and second antiderivatives with lower bound y = -1 (u = -1)
        int1 = [C.chebint(c, m=1, lbnd=-1, scl=0.5) for c in cols]
        int2 = [C.chebint(c, m=2, lbnd=-1, scl=0.5) for c in cols]
        self.Q = np.stack([C.chebval(self.u, c) for c in int1], axis=1)
        self.Q2 = np.stack([C.chebval(self.u, c) for c in int2], axis=1)
        self.Q[0, :] = 0.0   # running integrals start at the bottom wall
        self.Q2[0, :] = 0.0
        self.weights = np.array([C.chebval(1.0, c) for c in int1])
        # first moment row: integral of y * l_j(y) dy over (-1, 0)
        ymul = np.array([-0.5, 0.5])  # y = (u - 1)/2 as a Chebyshev series
        self.moment1 = np.array(
            [C.chebval(1.0, C.chebint(C.chebmul(ymul, c), m=1, lbnd=-1, scl=0.5)) for c in cols]
        )
        # Gram matrices over (-1, 0), exact in coefficient space
        self.M = self._gram(cols, cols)
        dcols = [2.0 * C.chebder(c) for c in cols]
        self.K = self._gram(dcols, dcols)
        self.MA = self._gram(int1, int1)
        self.C_dA = self._gram(dcols, int1)   # int l_i' * A_j
        self.M_Al = self._gram(int1, cols)    # int A_i * l_j

    @staticmethod
    def _gram(rows, cols) -> np.ndarray:
        out = np.empty((len(rows), len(cols)))
        for i, a in enumerate(rows):
            for j, b in enumerate(cols):
                out[i, j] = C.chebval(1.0, C.chebint(C.chebmul(a, b), m=1, lbnd=-1, scl=0.5))
        return out

    def integrate(self, profile: np.ndarray) -> np.ndarray:
        """Integral over (-1, 0) along the last axis."""
        return np.asarray(profile) @ self.weights

    def antiderivative(self, profile: np.ndarray) -> np.ndarray:
        """Running integral from -1, applied along the last axis."""
        return np.asarray(profile) @ self.Q.T

    def second_antiderivative(self, profile: np.ndarray) -> np.ndarray:
        return np.asarray(profile) @ self.Q2.T

    def differentiate(self, profile: np.ndarray) -> np.ndarray:
        return np.asarray(profile) @ self.D.T


def vertical_integral(vnodes: VerticalNodes, profile: np.ndarray, weight=None) -> np.ndarray:
    """Quadrature over (-1, 0) of profile * weight(y), along the last axis.

    Exact for polynomial integrands of degree <= m-1.  Returns a scalar for a
    single profile, otherwise one value per horizontal node.
    """
    profile = np.asarray(profile)
    if profile.shape[-1] != vnodes.m:
        raise GridMismatchError(
            f"profile has {profile.shape[-1]} vertical samples, node set has {vnodes.m}"
        )
    if weight is not None:
        profile = profile * weight(vnodes.nodes)
    out = profile @ vnodes.weights
    if out.ndim == 0:
        return float(out)
    return out


# ----------------------------------------------------------------------
# channel fields on the reference domain
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChannelField:
    """Real scalar field on the reference channel, horizontal grid times
    vertical nodes; the last axis runs over the vertical profiles."""

    grid: PeriodicGrid
    vnodes: VerticalNodes
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        expected = self.grid.shape + (self.vnodes.m,)
        if vals.shape != expected:
            raise GridMismatchError(f"values shape {vals.shape}, expected {expected}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: PeriodicGrid, vnodes: VerticalNodes) -> "ChannelField":
        return cls(grid, vnodes, np.zeros(grid.shape + (vnodes.m,)))

    @classmethod
    def from_hat(cls, grid: PeriodicGrid, vnodes: VerticalNodes, hat: np.ndarray) -> "ChannelField":
        return cls(grid, vnodes, grid.irfft(hat))

    @property
    def hat(self) -> np.ndarray:
        """Per-mode vertical profiles, shape spectral_shape + (m,)."""
        return self.grid.rfft(self.values)

    def top_trace(self) -> PeriodicField:
        return PeriodicField(self.grid, self.values[..., -1])

    def bottom_trace(self) -> PeriodicField:
        return PeriodicField(self.grid, self.values[..., 0])

    def l2(self) -> float:
        """L2 norm over the unit-depth reference channel."""
        sq = self.values**2
        vertical = sq @ self.vnodes.weights
        return float(np.sqrt(np.mean(vertical)))

    def __sub__(self, other: "ChannelField") -> "ChannelField":
        return ChannelField(self.grid, self.vnodes, self.values - other.values)

    def __add__(self, other: "ChannelField") -> "ChannelField":
        return ChannelField(self.grid, self.vnodes, self.values + other.values)

    def __mul__(self, a: float) -> "ChannelField":
        return ChannelField(self.grid, self.vnodes, self.values * a)

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            y = self.vnodes.nodes
            if self.grid.dim == 1:
                writer.writerow(["x", "y3", "value"])
                for i, x in enumerate(self.grid.nodes[0]):
                    for k in range(self.vnodes.m):
                        writer.writerow([repr(float(x)), repr(float(y[k])), repr(float(self.values[i, k]))])
            else:
                writer.writerow(["x1", "x2", "y3", "value"])
                X, Y = self.grid.meshes
                for idx in np.ndindex(*self.grid.shape):
                    for k in range(self.vnodes.m):
                        writer.writerow([
                            repr(float(X[idx])), repr(float(Y[idx])),
                            repr(float(y[k])), repr(float(self.values[idx + (k,)])),
                        ])
