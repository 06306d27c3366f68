"""
Building blocks of the composite wave: viscous shock profiles, the
self-similar viscous contact wave and the smoothed rarefaction wave.

Shock profiles
--------------

A traveling wave ``U(x - sigma t)`` of the Navier-Stokes level system

.. math::

    -\\sigma v' - u_1' = 0,\\quad
    -\\sigma u_1' + p' = \\tfrac43 (\\mu u_1'/v)',\\quad
    -\\sigma \\theta' + p u_1' = (\\alpha \\theta'/v)' + \\tfrac43 \\mu (u_1')^2/v

is integrated once from the left state, which leaves a planar system in
``(v, theta)``. One end state is a saddle of that system and the other a
node; the profile is the one dimensional manifold of the saddle, integrated
from the saddle until it settles on the node. Beyond the integrated range
the table is continued with the exact linearised flow at each end state.

Contact wave
------------

The temperature of the viscous contact solves the nonlinear diffusion
equation ``Theta_t = (9p/10)(alpha(Theta) Theta_x / Theta)_x`` and is
self-similar in ``eta = x / sqrt(1 + t)``. The profile ODE is solved as a
two point boundary value problem by collocation.

Rarefaction wave
----------------

The 1-rarefaction is smoothed by solving Burgers' equation for the
characteristic speed ``w = lambda_1`` from ``tanh`` data of width ``kappa``
and mapping ``w`` back through the isentrope of the wave.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable
from typing import NamedTuple
from typing import Optional
from typing import Tuple

import numpy as np
from scipy import integrate
from scipy import interpolate

from krl import errors
from krl.gas import FluidState
from krl.gas import GAS_CONSTANT


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transport:
    """Viscosity ``mu = mu0 sqrt(theta)`` and heat conductivity
    ``alpha = gamma mu``.
    """
    mu0: float = 1.0
    gamma: float = 2.5

    @classmethod
    def for_bgk(cls, kappa: float = 1.0) -> "Transport":
        """Coefficients of the Chapman-Enskog expansion of the BGK operator
        with collision frequency ``rho sqrt(theta) / kappa``.
        """
        return cls(mu0=GAS_CONSTANT * kappa, gamma=5.0 / 3.0)

    def mu(self, theta: np.ndarray) -> np.ndarray:
        return self.mu0 * np.sqrt(theta)

    def alpha(self, theta: np.ndarray) -> np.ndarray:
        return self.gamma * self.mu(theta)

    def check(self) -> "Transport":
        if not (self.mu0 > 0 and self.gamma > 0):
            raise errors.ProfileError("Transport coefficients must be positive",
                                      mu0=self.mu0, gamma=self.gamma)
        return self


class WaveFields(NamedTuple):
    """Values and first x-derivatives of ``(v, u1, theta)`` on a grid."""
    v: np.ndarray
    u1: np.ndarray
    theta: np.ndarray
    v_x: np.ndarray
    u1_x: np.ndarray
    theta_x: np.ndarray

    @classmethod
    def constant(cls, state: FluidState, x: np.ndarray) -> "WaveFields":
        ones, zeros = np.ones_like(x, dtype=float), np.zeros_like(x, dtype=float)
        return cls(state.v * ones, state.u1 * ones, state.theta * ones,
                   zeros, zeros.copy(), zeros.copy())


# --------------------------------------------------------------------------
# Shock profiles


class ProfileTable:
    """Tabulated shock profile ``U(z)`` with ``z = x - sigma t`` and first
    and second derivative columns. Outside the table the end states are
    returned.
    """

    def __init__(
        self,
        z: np.ndarray,
        values: np.ndarray,
        derivatives: np.ndarray,
        second_derivatives: np.ndarray,
        family: int,
        sigma: float,
        left: FluidState,
        right: FluidState,
        transport: Transport,
    ) -> None:
        self.z              = z
        self.values         = values
        self.derivatives    = derivatives
        self.second         = second_derivatives
        self.family         = family
        self.sigma          = sigma
        self.left           = left
        self.right          = right
        self.transport      = transport
        self.delta          = abs(right.v - left.v)
        self._interpolants: Optional[Tuple[Callable[..., np.ndarray], ...]] = None

    v       = property(lambda self: self.values[:, 0])
    u1      = property(lambda self: self.values[:, 1])
    theta   = property(lambda self: self.values[:, 2])
    dv      = property(lambda self: self.derivatives[:, 0])
    du1     = property(lambda self: self.derivatives[:, 1])
    dtheta  = property(lambda self: self.derivatives[:, 2])

    @property
    def half_width(self) -> float:
        return float(self.z[-1])

    def _build_interpolants(self) -> Tuple[Callable[..., np.ndarray], ...]:
        if self._interpolants is None:
            self._interpolants = (
                interpolate.PchipInterpolator(self.z, self.values,
                                              extrapolate=False),
                interpolate.PchipInterpolator(self.z, self.derivatives,
                                              extrapolate=False),
            )
        return self._interpolants

    def evaluate(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Values ``(n, 3)`` and z-derivatives ``(n, 3)`` at ``z``."""
        z = np.asarray(z, dtype=float)
        if self.delta == 0:
            values = np.tile(self.left.as_array(), (z.size, 1))
            return values, np.zeros_like(values)
        value_fn, derivative_fn = self._build_interpolants()
        values = value_fn(z)
        derivatives = derivative_fn(z)
        left = z < self.z[0]
        right = z > self.z[-1]
        values[left] = self.left.as_array()
        values[right] = self.right.as_array()
        derivatives[left | right] = 0.0
        return values, derivatives

    def fields(self, x: np.ndarray, shift: float, scale: float = 1.0) -> WaveFields:
        """The profile translated to ``x = shift + scale z``, with
        x-derivatives.
        """
        values, derivatives = self.evaluate((np.asarray(x) - shift) / scale)
        derivatives = derivatives / scale
        return WaveFields(values[:, 0], values[:, 1], values[:, 2],
                          derivatives[:, 0], derivatives[:, 1], derivatives[:, 2])

    def to_rows(self) -> np.ndarray:
        """Columns z, v, u1, theta, v', u1', theta'."""
        return np.column_stack([self.z, self.values, self.derivatives])


class ShockSystem:
    """The planar traveling wave system in ``(v, theta)`` integrated once
    from ``left``.
    """

    def __init__(self, left: FluidState, sigma: float, transport: Transport) -> None:
        self.left       = left
        self.sigma      = sigma
        self.transport  = transport

    def rhs(self, _z: float, y: np.ndarray) -> np.ndarray:
        v, theta = y[0], y[1]
        left, sigma = self.left, self.sigma
        p = 2.0 * theta / (3.0 * v)
        dv = v - left.v
        mu = self.transport.mu(theta)
        alpha = self.transport.alpha(theta)
        v_z = -3.0 * v / (4.0 * mu * sigma) * (sigma ** 2 * dv + p - left.pressure)
        theta_z = v / alpha * (-sigma * (theta - left.theta)
                               + 0.5 * sigma ** 3 * dv ** 2
                               - sigma * left.pressure * dv)
        return np.array([v_z, theta_z])

    def velocity(self, v: np.ndarray) -> np.ndarray:
        return self.left.u1 - self.sigma * (v - self.left.v)

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        jac = np.empty((2, 2))
        for k in range(2):
            h = 1e-7 * max(1.0, abs(y[k]))
            step = np.zeros(2)
            step[k] = h
            jac[:, k] = (self.rhs(0.0, y + step) - self.rhs(0.0, y - step)) / (2 * h)
        return jac


class _LinearTail:
    """Exact solution of the flow linearised at ``base``:
    ``y(z) = base + sum_i c_i r_i exp(lambda_i (z - z0))``.
    """

    def __init__(self, base: np.ndarray, eigvals: np.ndarray, eigvecs: np.ndarray,
                 point: np.ndarray, z0: float) -> None:
        self.base       = base
        self.eigvals    = eigvals
        self.eigvecs    = eigvecs
        self.coeffs     = np.linalg.solve(eigvecs, point - base)
        self.z0         = z0

    def __call__(self, z: np.ndarray, order: int = 0) -> np.ndarray:
        growth = np.exp(np.outer(z - self.z0, self.eigvals)) * self.coeffs
        growth = growth * self.eigvals ** order
        offset = growth @ self.eigvecs.T
        return offset if order else self.base + offset


def _eigensystem(jac: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    eigvals, eigvecs = np.linalg.eig(jac)
    if np.any(np.abs(eigvals.imag) > 1e-12 * np.max(np.abs(eigvals))):
        raise errors.ProfileError("End state is a focus, no monotone profile",
                                  eigenvalues=eigvals.tolist())
    return eigvals.real, eigvecs.real


def _constant_table(state: FluidState, family: int, sigma: float,
                    transport: Transport, n_nodes: int) -> ProfileTable:
    z = np.linspace(-1.0, 1.0, n_nodes)
    values = np.tile(state.as_array(), (n_nodes, 1))
    zeros = np.zeros_like(values)
    return ProfileTable(z, values, zeros, zeros.copy(), family, sigma,
                        state, state, transport)


def solve_shock_profile(
    family: int,
    left: FluidState,
    right: FluidState,
    sigma: float,
    transport: Transport,
    n_nodes: int = 4000,
    min_half_width: Optional[float] = None,
    tail_tolerance: float = 1e-10,
    rtol: float = 1e-12,
) -> ProfileTable:
    """Tabulate the viscous profile of the ``family`` shock ``left ->
    right`` moving with speed ``sigma``, normalized so that
    ``v(0) = (v_left + v_right) / 2``.

    The table spans ``|z| <= Z`` with ``Z`` at least ``20/delta`` and large
    enough for both tails to fall below ``tail_tolerance * delta``.
    """
    transport.check()
    delta = abs(right.v - left.v)
    if delta == 0:
        return _constant_table(left, family, sigma, transport, n_nodes)
    if family not in (1, 3) or (sigma < 0) != (family == 1):
        raise errors.ProfileError("Shock speed does not match family",
                                  family=family, sigma=sigma)

    system = ShockSystem(left, sigma, transport)
    y_left = np.array([left.v, left.theta])
    y_right = np.array([right.v, right.theta])
    if np.max(np.abs(system.rhs(0.0, y_right))) > 1e-9 * delta:
        raise errors.ProfileError("End states are not connected by a shock",
                                  residual=system.rhs(0.0, y_right).tolist())

    eig_left = _eigensystem(system.jacobian(y_left))
    eig_right = _eigensystem(system.jacobian(y_right))
    left_saddle = np.prod(eig_left[0]) < 0
    right_saddle = np.prod(eig_right[0]) < 0
    if left_saddle == right_saddle:
        raise errors.ProfileError("No saddle-node connection between end states",
                                  left_eigenvalues=eig_left[0].tolist(),
                                  right_eigenvalues=eig_right[0].tolist())

    if left_saddle:
        saddle, node, eig_saddle, eig_node, direction = (
            y_left, y_right, eig_left, eig_right, 1.0)
    else:
        saddle, node, eig_saddle, eig_node, direction = (
            y_right, y_left, eig_right, eig_left, -1.0)

    # leave the saddle along the eigenvector growing in the integration direction
    k = int(np.argmax(direction * eig_saddle[0]))
    rate_saddle = eig_saddle[0][k]
    r = eig_saddle[1][:, k] / abs(eig_saddle[1][0, k])
    r = r * np.sign(r[0]) * np.sign(node[0] - saddle[0])
    start = saddle + 1e-6 * delta * r

    v_mid = 0.5 * (left.v + right.v)
    switch = 1e-6 * delta

    def reach_mid(_z: float, y: np.ndarray) -> float:
        return y[0] - v_mid

    def reach_node(_z: float, y: np.ndarray) -> float:
        return abs(y[0] - node[0]) - switch

    reach_node.terminal = True  # type: ignore

    span = direction * 1e4 / delta
    result = integrate.solve_ivp(
        system.rhs, (0.0, span), start, method='DOP853', dense_output=True,
        events=(reach_mid, reach_node), rtol=rtol, atol=1e-14 * delta)
    if result.status != 1 or not len(result.t_events[0]):
        raise errors.ProfileError("Saddle manifold did not reach the other state",
                                  family=family, delta=delta, status=result.status,
                                  message=result.message)

    z_mid = result.t_events[0][0]
    z_end = result.t_events[1][0]
    z_start_rel = -z_mid
    z_end_rel = z_end - z_mid

    saddle_tail = _LinearTail(saddle, *eig_saddle, start, z_start_rel)
    node_tail = _LinearTail(node, *eig_node, result.sol(z_end), z_end_rel)

    slow = min(abs(rate_saddle), np.min(np.abs(eig_node[0])))
    half_width = max(min_half_width or 20.0 / delta,
                     math.log(1.0 / tail_tolerance) / slow,
                     abs(z_start_rel), abs(z_end_rel))
    z = np.linspace(-half_width, half_width, n_nodes)

    lo, hi = sorted((z_start_rel, z_end_rel))
    on_orbit = (z >= lo) & (z <= hi)
    near_saddle = ~on_orbit & (direction * z < 0)
    near_node = ~on_orbit & ~near_saddle

    states = np.empty((n_nodes, 2))
    slopes = np.empty((n_nodes, 2))
    curvatures = np.empty((n_nodes, 2))
    orbit_states = result.sol(z[on_orbit] + z_mid).T
    states[on_orbit] = orbit_states
    slopes[on_orbit] = np.array([system.rhs(0.0, y) for y in orbit_states])
    curvatures[on_orbit] = np.array(
        [system.jacobian(y) @ s for y, s in zip(orbit_states, slopes[on_orbit])])
    for mask, tail in ((near_saddle, saddle_tail), (near_node, node_tail)):
        states[mask] = tail(z[mask])
        slopes[mask] = tail(z[mask], 1)
        curvatures[mask] = tail(z[mask], 2)

    def with_velocity(cols: np.ndarray, order: int) -> np.ndarray:
        u1 = system.velocity(cols[:, 0]) if order == 0 else -sigma * cols[:, 0]
        return np.column_stack([cols[:, 0], u1, cols[:, 1]])

    table = ProfileTable(
        z, with_velocity(states, 0), with_velocity(slopes, 1),
        with_velocity(curvatures, 2), family, sigma, left, right, transport)
    log.debug("Shock profile family=%d delta=%.3g half_width=%.1f slow_rate=%.3g",
              family, delta, half_width, slow)
    return table


def profile_residual(table: ProfileTable) -> float:
    """Largest mismatch between the tabulated derivative columns and fourth
    order central differences of the value columns, over interior nodes.
    """
    if table.delta == 0:
        return 0.0
    h = table.z[1] - table.z[0]
    y = table.values
    central = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    return float(np.max(np.abs(central - table.derivatives[2:-2])))


def integrated_residual(table: ProfileTable) -> float:
    """Residual of the once integrated mass and momentum equations."""
    left, sigma = table.left, table.sigma
    mu = table.transport.mu(table.theta)
    mass = -sigma * (table.v - left.v) - (table.u1 - left.u1)
    p = 2.0 * table.theta / (3.0 * table.v)
    momentum = (-sigma * (table.u1 - left.u1) + p - left.pressure
                - 4.0 / 3.0 * mu * table.du1 / table.v)
    return float(max(np.max(np.abs(mass)), np.max(np.abs(momentum))))


def tail_decay_rate(table: ProfileTable, side: int = 1,
                    window: Tuple[float, float] = (1e-10, 1e-3)) -> float:
    """Least squares slope of ``log|v'|`` against ``|z|`` on one side of the
    profile (``side=1`` right, ``-1`` left), using nodes where ``|v'|/delta``
    lies inside ``window``.
    """
    mask = side * table.z > 0
    z = np.abs(table.z[mask])
    slope = np.abs(table.dv[mask])
    select = (slope > window[0] * table.delta) & (slope < window[1] * table.delta)
    if np.count_nonzero(select) < 4:
        raise errors.DiagnosticError("Too few tail nodes to fit a decay rate")
    rate = np.polyfit(z[select], np.log(slope[select]), 1)[0]
    return float(-rate)


def second_derivative_constant(table: ProfileTable) -> float:
    """Smallest ``C`` with ``|U''| <= C delta |U'|`` on the table."""
    if table.delta == 0:
        return 0.0
    first = np.linalg.norm(table.derivatives, axis=1)
    second = np.linalg.norm(table.second, axis=1)
    mask = first > 1e-14 * table.delta
    return float(np.max(second[mask] / first[mask]) / table.delta)


def monotonicity_holds(table: ProfileTable) -> bool:
    """Sign pattern of a Lax shock: ``(-, -, +)`` for the 1-family and
    ``(+, -, -)`` for the 3-family in ``(v', u1', theta')``.
    """
    signs = np.array([-1, -1, 1]) if table.family == 1 else np.array([1, -1, -1])
    return bool(np.all(table.derivatives * signs > 0))


def reflect_profile(table: ProfileTable) -> ProfileTable:
    """The same profile seen under ``(z, u1) -> (-z, -u1)``."""
    flip = np.array([1.0, -1.0, 1.0])
    return ProfileTable(
        -table.z[::-1],
        table.values[::-1] * flip,
        -table.derivatives[::-1] * flip,
        table.second[::-1] * flip,
        4 - table.family, -table.sigma,
        table.right.reflected(), table.left.reflected(), table.transport)


# --------------------------------------------------------------------------
# Contact wave


class ContactProfile:
    """Self-similar temperature ``Theta(eta)``, ``eta = x / sqrt(1 + t)``,
    joining ``theta_left`` to ``theta_right`` at constant pressure.
    """

    def __init__(
        self,
        eta: np.ndarray,
        theta: np.ndarray,
        flux: np.ndarray,
        solution: Optional[Callable[[np.ndarray], np.ndarray]],
        pressure: float,
        u1: float,
        theta_left: float,
        theta_right: float,
        transport: Transport,
    ) -> None:
        self.eta            = eta
        self.theta          = theta
        self.flux           = flux
        self.solution       = solution
        self.pressure       = pressure
        self.u1             = u1
        self.theta_left     = theta_left
        self.theta_right    = theta_right
        self.transport      = transport
        self.delta          = abs(theta_right - theta_left)

    def diffusivity(self, theta: np.ndarray) -> np.ndarray:
        return 0.9 * self.pressure * self.transport.alpha(theta) / theta

    @property
    def dtheta(self) -> np.ndarray:
        """``dTheta/deta`` at the nodes."""
        return self.flux / self.diffusivity(self.theta)

    def similarity(self, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """``Theta`` and the flux ``D(Theta) Theta'`` at ``eta``."""
        eta = np.asarray(eta, dtype=float)
        if self.solution is None:
            return np.full(eta.shape, self.theta_left), np.zeros(eta.shape)
        inside = np.clip(eta, self.eta[0], self.eta[-1])
        theta, flux = self.solution(inside)
        theta = np.where(eta < self.eta[0], self.theta_left, theta)
        theta = np.where(eta > self.eta[-1], self.theta_right, theta)
        flux = np.where((eta < self.eta[0]) | (eta > self.eta[-1]), 0.0, flux)
        return theta, flux

    def fields(self, t: float, x: np.ndarray) -> WaveFields:
        """``(v, u1, theta)`` of the viscous contact at normalized time
        ``t`` and position ``x``, with x-derivatives.
        """
        root = math.sqrt(1.0 + t)
        eta = np.asarray(x, dtype=float) / root
        theta, flux = self.similarity(eta)
        theta_eta = flux / self.diffusivity(theta)
        theta_x = theta_eta / root
        p = self.pressure
        v = 2.0 * theta / (3.0 * p)
        u1 = self.u1 + 2.0 / (3.0 * p) * flux / root
        u1_x = 2.0 / (3.0 * p) * (-0.5 * eta * theta_eta) / (1.0 + t)
        return WaveFields(v, u1, theta, 2.0 * theta_x / (3.0 * p), u1_x, theta_x)

    def scaled_fields(self, tau: float, y: np.ndarray, kappa: float) -> WaveFields:
        """Fields at macroscopic ``(tau, y)`` for Knudsen number ``kappa``."""
        f = self.fields(tau / kappa, np.asarray(y) / kappa)
        return f._replace(v_x=f.v_x / kappa, u1_x=f.u1_x / kappa,
                          theta_x=f.theta_x / kappa)


def solve_contact_profile(
    theta_left: float,
    theta_right: float,
    pressure: float,
    u1: float,
    transport: Transport,
    half_width: float = 12.0,
    n_nodes: int = 801,
    tol: float = 1e-10,
) -> ContactProfile:
    """Solve ``(D(Theta) Theta')' + (eta/2) Theta' = 0`` on
    ``|eta| <= half_width`` with ``Theta(-L) = theta_left``,
    ``Theta(L) = theta_right`` and ``D = (9p/10) alpha(Theta)/Theta``.
    """
    transport.check()
    if not (theta_left > 0 and theta_right > 0 and pressure > 0):
        raise errors.ProfileError(
            "Contact temperatures and pressure must be positive",
            theta_left=theta_left, theta_right=theta_right, pressure=pressure)
    eta = np.linspace(-half_width, half_width, n_nodes)
    if theta_left == theta_right:
        return ContactProfile(eta, np.full(n_nodes, theta_left), np.zeros(n_nodes),
                              None, pressure, u1, theta_left, theta_right, transport)

    def diffusivity(theta: np.ndarray) -> np.ndarray:
        return 0.9 * pressure * transport.alpha(theta) / theta

    def rhs(s: np.ndarray, y: np.ndarray) -> np.ndarray:
        slope = y[1] / diffusivity(y[0])
        return np.vstack([slope, -0.5 * s * slope])

    def boundary(ya: np.ndarray, yb: np.ndarray) -> np.ndarray:
        return np.array([ya[0] - theta_left, yb[0] - theta_right])

    mid, jump = 0.5 * (theta_left + theta_right), 0.5 * (theta_right - theta_left)
    guess_theta = mid + jump * np.tanh(eta / 2.0)
    guess_flux = diffusivity(guess_theta) * jump * 0.5 / np.cosh(eta / 2.0) ** 2
    guess = np.vstack([guess_theta, guess_flux])
    result = integrate.solve_bvp(rhs, boundary, eta, guess, tol=tol,
                                 max_nodes=200000)
    if not result.success:
        raise errors.ProfileError("Contact boundary value problem did not converge",
                                  theta_left=theta_left, theta_right=theta_right,
                                  message=result.message)
    theta, flux = result.sol(eta)
    mismatch = max(abs(theta[0] - theta_left), abs(theta[-1] - theta_right))
    if mismatch > 1e-8:
        raise errors.ProfileError("Contact boundary mismatch", mismatch=mismatch)
    log.debug("Contact profile converged with %d collocation nodes", result.x.size)
    return ContactProfile(eta, theta, flux, result.sol, pressure, u1,
                          theta_left, theta_right, transport)


def fit_gaussian_tail(profile: ContactProfile,
                      window: Tuple[float, float] = (2.0, 8.0)) -> float:
    """Fitted ``c0`` in ``|Theta'(eta)| ~ exp(-c0 eta^2)`` over
    ``window[0] <= |eta| <= window[1]``, the smaller of the two sides.
    """
    if profile.delta == 0:
        raise errors.DiagnosticError("Constant contact profile has no tail")
    slope = np.abs(profile.dtheta)
    rates = []
    for side in (-1, 1):
        mask = ((side * profile.eta >= window[0]) & (side * profile.eta <= window[1])
                & (slope > 1e-300))
        if np.count_nonzero(mask) < 4:
            raise errors.DiagnosticError("Too few nodes in the contact tail window")
        rates.append(-np.polyfit(profile.eta[mask] ** 2, np.log(slope[mask]), 1)[0])
    return float(min(rates))


def _lp_norm(diff: np.ndarray, dx: float, p: float) -> float:
    pointwise = np.linalg.norm(diff, axis=1)
    return float((np.sum(pointwise ** p) * dx) ** (1.0 / p))


def contact_lp_distance(
    profile: ContactProfile,
    kappa: float,
    tau: float,
    p: float,
    y: np.ndarray,
) -> float:
    """L^p distance in ``y`` between the viscous contact at macroscopic time
    ``tau`` and the inviscid contact discontinuity at ``y = 0``.
    """
    fields = profile.scaled_fields(tau, y, kappa)
    theta_step = np.where(y < 0, profile.theta_left, profile.theta_right)
    sharp = np.column_stack([2.0 * theta_step / (3.0 * profile.pressure),
                             np.full_like(y, profile.u1), theta_step])
    smooth = np.column_stack([fields.v, fields.u1, fields.theta])
    return _lp_norm(smooth - sharp, y[1] - y[0], p)


# --------------------------------------------------------------------------
# Rarefaction wave


class RarefactionWave:
    """Smoothed 1-rarefaction from ``minus`` to ``star``. Burgers' equation
    for ``w`` is solved from ``w(0, x) = (w_* + w_-)/2 + (w_* - w_-)/2
    tanh(x / kappa)`` and evaluated at ``t + time_offset``.
    """

    def __init__(self, minus: FluidState, star: FluidState, kappa: float,
                 time_offset: float = 0.0) -> None:
        self.minus          = minus
        self.star           = star
        self.kappa          = float(kappa)
        self.time_offset    = float(time_offset)
        self.w_minus        = minus.characteristic_speed(1)
        self.w_star         = star.characteristic_speed(1)
        self.strength       = abs(star.v - minus.v)
        isentrope = star.pressure * star.v ** (5.0 / 3.0)
        self.amplitude      = math.sqrt(5.0 * isentrope / 3.0)

    def burgers(self, t: float, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """``w`` and ``w_x`` by inverting the characteristic map
        ``x = x0 + s w0(x0)`` with safeguarded Newton iterations.
        """
        x = np.asarray(x, dtype=float)
        s = t + self.time_offset
        mid = 0.5 * (self.w_star + self.w_minus)
        half = 0.5 * (self.w_star - self.w_minus)
        kappa = self.kappa

        def initial(x0: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
            th = np.tanh(x0 / kappa)
            return mid + half * th, half * (1.0 - th ** 2) / kappa

        lo, hi = x - s * self.w_star, x - s * self.w_minus
        x0 = np.clip(x - s * mid, lo, hi)
        for _ in range(100):
            w0, dw0 = initial(x0)
            residual = x0 + s * w0 - x
            hi = np.where(residual > 0, x0, hi)
            lo = np.where(residual > 0, lo, x0)
            newton = x0 - residual / (1.0 + s * dw0)
            bad = (newton <= lo) | (newton >= hi)
            x0 = np.where(bad, 0.5 * (lo + hi), newton)
            if np.max(np.abs(residual)) <= 1e-14 * (1.0 + np.max(np.abs(x))):
                break
        w0, dw0 = initial(x0)
        return w0, dw0 / (1.0 + s * dw0)

    def states_from_speed(
        self,
        w: np.ndarray,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        v = (self.amplitude / -w) ** 0.75
        star = self.star
        theta = star.theta * (star.v / v) ** (2.0 / 3.0)
        u1 = star.u1 + 3.0 * self.amplitude * (star.v ** (-1.0 / 3.0)
                                               - v ** (-1.0 / 3.0))
        return v, u1, theta

    def fields(self, t: float, x: np.ndarray) -> WaveFields:
        w, w_x = self.burgers(t, x)
        v, u1, theta = self.states_from_speed(w)
        v_x = -0.75 * v / w * w_x
        return WaveFields(v, u1, theta, v_x, 0.75 * v * w_x,
                          -2.0 * theta / (3.0 * v) * v_x)


def evaluate_rarefaction(
    wave: RarefactionWave,
    t: float,
    x: np.ndarray,
) -> WaveFields:
    """Smoothed rarefaction at time ``t``, mapped to ``(v, u1, theta)``."""
    if not wave.w_minus < wave.w_star:
        raise errors.ProfileError("Rarefaction data is not expansive",
                                  w_minus=wave.w_minus, w_star=wave.w_star)
    if not wave.kappa > 0:
        raise errors.ProfileError("Smoothing scale must be positive",
                                  kappa=wave.kappa)
    return wave.fields(t, x)


def rarefaction_lp_distance(wave: RarefactionWave, t: float, p: float,
                            x: np.ndarray) -> float:
    """L^p distance between the smoothed wave and the centered fan at the
    same Burgers time.
    """
    smooth = evaluate_rarefaction(wave, t, x)
    s = t + wave.time_offset
    if s > 0:
        w_fan = np.clip(x / s, wave.w_minus, wave.w_star)
    else:
        w_fan = np.where(x < 0, wave.w_minus, wave.w_star)
    sharp = wave.states_from_speed(w_fan)
    diff = np.column_stack([smooth.v - sharp[0], smooth.u1 - sharp[1],
                            smooth.theta - sharp[2]])
    return _lp_norm(diff, x[1] - x[0], p)
