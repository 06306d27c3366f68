"""
Maxwellians, the macro-micro decomposition and the relative entropy.

The local Maxwellian of a state ``U = (v, u, theta)`` is

.. math::

    M[U](\\xi) = \\frac{\\rho}{(2\\pi R\\theta)^{3/2}}
        \\exp\\Big(-\\frac{|\\xi - u|^2}{2R\\theta}\\Big),\\qquad \\rho = 1/v.

On a truncated velocity grid the Gaussian does not reproduce its own
moments exactly, so :func:`discrete_maxwellian_field` corrects the three
parameters ``(rho, u, theta)`` of the Gaussian by Newton's method until the
quadrature moments match the target state to round off.

The macroscopic projection ``P0`` is the orthogonal projection onto
``span{M, xi_i M, |xi|^2 M}`` in the inner product ``<f, g>_M = sum w f g /
M``. It is evaluated with the Gram matrix of the discrete quadrature so
that ``P0`` is a projector to round off on the grid, not only in the
continuum.

Example
-------

.. code-block:: python

    from krl import grids, macromicro
    from krl.gas import FluidState

    grid = grids.build_velocity_grid((0, 0, 0), 8.0, 16)
    m = macromicro.discrete_maxwellian(FluidState(1.0, 0.0, 1.0), grid)
    micro = macromicro.project_micro(m, FluidState(1.0, 0.0, 1.0), grid)
"""
import logging
import math
from dataclasses import dataclass
from typing import Any
from typing import Optional
from typing import Tuple

import numpy as np
from scipy import special

from krl import errors
from krl.gas import FluidState
from krl.gas import GAS_CONSTANT
from krl.grids import FluidField
from krl.grids import VelocityGrid
from krl.profiles import WaveFields


log = logging.getLogger(__name__)

MOMENT_COUNT = 5

# cells handled per batch by the moment correction
CHUNK_SIZE = 64


def collision_invariants(grid: VelocityGrid) -> np.ndarray:
    """``(1, xi_1, xi_2, xi_3, |xi|^2/2)`` on the nodes, shape ``(N, 5)``."""
    return np.column_stack([np.ones(grid.size), grid.nodes, 0.5 * grid.speed_sq])


def gaussian(
    rho: np.ndarray,
    u: np.ndarray,
    theta: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """Continuum Maxwellian of every cell on the nodes, shape ``(n, N)``."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    u = np.asarray(u, dtype=float).reshape(len(rho), 3)
    rt = GAS_CONSTANT * theta
    c2 = np.sum((grid.nodes[None, :, :] - u[:, None, :]) ** 2, axis=2)
    norm = rho / (2.0 * math.pi * rt) ** 1.5
    return norm[:, None] * np.exp(-c2 / (2.0 * rt[:, None]))


def _targets(rho: np.ndarray, u: np.ndarray, theta: np.ndarray) -> np.ndarray:
    energy = rho * (theta + 0.5 * np.sum(u ** 2, axis=1))
    return np.column_stack([rho, rho[:, None] * u, energy])


def _log_derivatives(
    u: np.ndarray,
    theta: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """Derivatives of ``ln M`` with respect to ``(ln rho, u, theta)``,
    shape ``(n, N, 5)``.
    """
    rt = GAS_CONSTANT * theta
    c = grid.nodes[None, :, :] - u[:, None, :]
    c2 = np.sum(c ** 2, axis=2)
    d_theta = c2 / (2.0 * rt[:, None] * theta[:, None]) - 1.5 / theta[:, None]
    return np.concatenate(
        [np.ones(c2.shape + (1,)), c / rt[:, None, None], d_theta[:, :, None]],
        axis=2)


def _correct_chunk(
    targets: np.ndarray,
    grid: VelocityGrid,
    phi: np.ndarray,
    tol: float,
    max_iter: int,
) -> np.ndarray:
    rho = targets[:, 0].copy()
    u = targets[:, 1:4] / rho[:, None]
    theta = targets[:, 4] / rho - 0.5 * np.sum(u ** 2, axis=1)
    params_log_rho = np.log(rho)
    scale = targets[:, :1]
    previous = np.inf
    for iteration in range(max_iter):
        values = gaussian(np.exp(params_log_rho), u, theta, grid)
        weighted = values * grid.weights
        residual = weighted @ phi - targets
        error = np.max(np.abs(residual) / scale)
        # round off floor: no further progress close to the tolerance
        if error <= tol or (error >= previous and error <= 1e3 * tol):
            log.debug("Moment correction converged in %d iterations", iteration)
            return values
        previous = error
        derivs = _log_derivatives(u, theta, grid)
        jacobian = np.einsum('nk,ka,nkb->nab', weighted, phi, derivs, optimize=True)
        step = np.linalg.solve(jacobian, -residual[:, :, None])[:, :, 0]
        params_log_rho = params_log_rho + step[:, 0]
        u = u + step[:, 1:4]
        theta = theta + step[:, 4]
        if np.any(theta <= 0) or not np.all(np.isfinite(step)):
            break
    raise errors.ConvergenceError(
        f"Discrete Maxwellian moment correction diverged (residual {error:.3e}); "
        f"the velocity grid {grid!r} is too coarse or too narrow for "
        f"theta up to {np.max(targets[:, 4] / targets[:, 0]):.3g}, "
        f"try a larger radius")


def discrete_maxwellian_field(
    fluid: FluidField,
    grid: VelocityGrid,
    tol: float = 1e-13,
    max_iter: int = 30,
) -> np.ndarray:
    """Moment corrected Maxwellians of every cell of ``fluid``, shape
    ``(n, N)``. The quadrature moments equal ``(rho, rho u, rho(theta +
    |u|^2/2))`` to ``tol`` relative to the density.

    :raises ConvergenceError: when the Newton iteration diverges
    """
    targets = _targets(fluid.rho, fluid.u, fluid.theta)
    phi = collision_invariants(grid)
    out = np.empty((len(fluid), grid.size))
    for start in range(0, len(fluid), CHUNK_SIZE):
        chunk = slice(start, start + CHUNK_SIZE)
        out[chunk] = _correct_chunk(targets[chunk], grid, phi, tol, max_iter)
    return out


def discrete_maxwellian(
    state: FluidState,
    grid: VelocityGrid,
    **kwargs: Any,
) -> np.ndarray:
    """Moment corrected Maxwellian ``M[U]`` of one state, shape ``(N,)``."""
    state.check()
    fluid = FluidField([state.v], [state.velocity], [state.theta])
    return discrete_maxwellian_field(fluid, grid, **kwargs)[0]  # type: ignore


def discrete_entropy(values: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    """``sum w f ln f`` over the last axis."""
    return special.xlogy(values, values) @ grid.weights


def gaussian_entropy(state: FluidState) -> float:
    """Closed form ``int M ln M`` of the continuum Maxwellian."""
    rho = state.rho
    return rho * (math.log(rho / (2.0 * math.pi * GAS_CONSTANT * state.theta) ** 1.5)
                  - 1.5)


# --------------------------------------------------------------------------
# Projections


def orthonormal_basis(state: FluidState, grid: VelocityGrid) -> np.ndarray:
    """The five functions ``chi_i`` orthonormal in ``<., .>_{M[U]}``,
    built on the continuum Maxwellian, shape ``(5, N)``.
    """
    rho, theta = state.rho, state.theta
    m = gaussian(rho, state.velocity, theta, grid)[0]
    rt = GAS_CONSTANT * theta
    c = grid.nodes - state.velocity
    c2 = np.sum(c ** 2, axis=1)
    chi0 = m / math.sqrt(rho)
    chis = c.T * m / math.sqrt(rho * rt)
    chi4 = (c2 / (2.0 * rt) - 1.5) * math.sqrt(2.0 / 3.0) * m / math.sqrt(rho)
    return np.vstack([chi0, chis, chi4])


def inner_product(f: np.ndarray, g: np.ndarray, maxwellian: np.ndarray,
                  grid: VelocityGrid) -> np.ndarray:
    """``<f, g>_M = sum w f g / M`` over the last axis."""
    return (f * g / maxwellian) @ grid.weights


def macro_projection(
    values: np.ndarray,
    maxwellian: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """``P0`` with respect to ``maxwellian``, cellwise for ``(n, N)`` or a
    single ``(N,)`` array.
    """
    single = values.ndim == 1
    values = np.atleast_2d(values)
    maxwellian = np.atleast_2d(maxwellian)
    phi = collision_invariants(grid)
    weighted_m = maxwellian * grid.weights
    gram = np.einsum('nk,ka,kb->nab', weighted_m, phi, phi, optimize=True)
    coeffs = np.linalg.solve(gram, ((values * grid.weights) @ phi)[:, :, None])
    projected = maxwellian * (phi @ coeffs[:, :, 0].T).T
    return projected[0] if single else projected


def micro_projection(
    values: np.ndarray,
    maxwellian: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """``P1 = I - P0``."""
    return values - macro_projection(values, maxwellian, grid)


def _check_moments(values: np.ndarray, fluid: FluidField, grid: VelocityGrid,
                   tol: float) -> None:
    phi = collision_invariants(grid)
    found = (np.atleast_2d(values) * grid.weights) @ phi
    expected = _targets(fluid.rho, fluid.u, fluid.theta)
    mismatch = np.max(np.abs(found - expected) / expected[:, :1])
    if mismatch > tol:
        raise errors.StateError(
            f"State does not match the moments of the distribution "
            f"(relative mismatch {mismatch:.3e})")


def project_micro_field(
    values: np.ndarray,
    fluid: FluidField,
    grid: VelocityGrid,
    maxwellian: Optional[np.ndarray] = None,
    tol: float = 1e-8,
) -> np.ndarray:
    """Microscopic part ``G = f - P0 f`` of every cell, where ``P0`` is
    taken at the Maxwellian of ``fluid``.

    :raises StateError: if ``fluid`` is not the moment state of ``values``
    """
    _check_moments(values, fluid, grid, tol)
    if maxwellian is None:
        maxwellian = discrete_maxwellian_field(fluid, grid)
    return micro_projection(values, maxwellian, grid)


def project_micro(
    values: np.ndarray,
    state: FluidState,
    grid: VelocityGrid,
    maxwellian: Optional[np.ndarray] = None,
    tol: float = 1e-8,
) -> np.ndarray:
    """Microscopic part of a single cell distribution, see
    :func:`project_micro_field`.
    """
    fluid = FluidField([state.v], [state.velocity], [state.theta])
    if maxwellian is not None:
        maxwellian = maxwellian[None, :]
    return project_micro_field(values[None, :], fluid, grid, maxwellian, tol)[0]


# --------------------------------------------------------------------------
# Chapman-Enskog split


@dataclass
class MicroSplit:
    """``micro = diffusion + remainder`` with the diffusion part
    ``-(1/(nu v)) P1(xi_1 M_x)``.
    """
    micro: np.ndarray
    diffusion: np.ndarray
    remainder: np.ndarray

    def momentum_flux(self, grid: VelocityGrid) -> np.ndarray:
        """``sum w xi_1^2 G`` of the diffusion part, the viscous stress with
        its sign reversed.
        """
        return (self.diffusion * grid.xi1 ** 2) @ grid.weights

    def heat_flux(self, grid: VelocityGrid) -> np.ndarray:
        return (self.diffusion * grid.xi1 * 0.5 * grid.speed_sq) @ grid.weights


def collision_frequency(
    rho: np.ndarray,
    theta: np.ndarray,
    kappa: float,
) -> np.ndarray:
    """BGK collision frequency ``rho sqrt(theta) / kappa``."""
    return rho * np.sqrt(theta) / kappa


def maxwellian_derivative(
    maxwellian: np.ndarray,
    fields: WaveFields,
    grid: VelocityGrid,
) -> np.ndarray:
    """``M_x`` by the chain rule through ``(v, u_1, theta)``."""
    v = np.asarray(fields.v, dtype=float)
    theta = np.asarray(fields.theta, dtype=float)
    rt = GAS_CONSTANT * theta
    u1 = np.asarray(fields.u1)[:, None]
    c1 = grid.xi1[None, :] - u1
    c2 = grid.speed_sq[None, :] - 2.0 * grid.xi1[None, :] * u1 + u1 ** 2
    log_x = (-(fields.v_x / v)[:, None]
             + c1 * (fields.u1_x / rt)[:, None]
             + (c2 / (2.0 * (rt * theta)[:, None]) - 1.5 / theta[:, None])
             * fields.theta_x[:, None])
    return maxwellian * log_x


def diffusion_part(
    maxwellian: np.ndarray,
    fields: WaveFields,
    nu: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """Leading Chapman-Enskog term ``-(1/(nu v)) P1(xi_1 M_x)``."""
    nu = np.broadcast_to(np.asarray(nu, dtype=float), np.shape(fields.v))
    if np.any(nu <= 0):
        raise errors.StateError("Collision frequency must be positive")
    m_x = maxwellian_derivative(maxwellian, fields, grid)
    projected = micro_projection(grid.xi1 * m_x, maxwellian, grid)
    return -projected / (nu * fields.v)[:, None]


def chapman_enskog_split(
    micro: np.ndarray,
    maxwellian: np.ndarray,
    fields: WaveFields,
    nu: np.ndarray,
    grid: VelocityGrid,
) -> MicroSplit:
    """Split ``micro`` into its diffusion part and the remainder ``Pi_1``."""
    diffusion = diffusion_part(maxwellian, fields, nu, grid)
    return MicroSplit(micro, diffusion, micro - diffusion)


def fields_from_fluid(fluid: FluidField, dx: float) -> WaveFields:
    """Cell values of ``fluid`` with centered difference derivatives."""
    v, u1, theta = fluid.v, fluid.u1, fluid.theta
    return WaveFields(v, u1, theta, np.gradient(v, dx), np.gradient(u1, dx),
                      np.gradient(theta, dx))


def wave_maxwellian(fields: WaveFields, grid: VelocityGrid) -> np.ndarray:
    zeros = np.zeros_like(fields.u1)
    velocity = np.column_stack([fields.u1, zeros, zeros])
    fluid = FluidField(fields.v, velocity, fields.theta)
    return discrete_maxwellian_field(fluid, grid)


def shock_micro_part(
    fields: WaveFields,
    kappa: float,
    grid: VelocityGrid,
) -> np.ndarray:
    """Closed form BGK microscopic part of a tabulated shock profile,
    ``-(1/(nu v)) P1(xi_1 M_x)`` with ``nu = rho sqrt(theta) / kappa``.
    """
    maxwellian = wave_maxwellian(fields, grid)
    nu = collision_frequency(1.0 / fields.v, fields.theta, kappa)
    return diffusion_part(maxwellian, fields, nu, grid)


def contact_micro_part(
    maxwellian: np.ndarray,
    fields: WaveFields,
    contact: WaveFields,
    nu: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """``(3/(2 v theta)) L^{-1} P1[xi_1 M (xi_1 u1_x^C + |xi - u|^2/(2 theta)
    theta_x^C)]`` with ``L^{-1} = -1/nu`` on the microscopic subspace.
    ``fields`` is the local state, ``contact`` supplies the derivatives.
    """
    u1 = np.asarray(fields.u1)[:, None]
    theta = np.asarray(fields.theta)[:, None]
    c2 = grid.speed_sq[None, :] - 2.0 * grid.xi1[None, :] * u1 + u1 ** 2
    source = grid.xi1 * maxwellian * (
        grid.xi1 * contact.u1_x[:, None]
        + c2 / (2.0 * theta) * contact.theta_x[:, None])
    projected = micro_projection(source, maxwellian, grid)
    return -1.5 * projected / (np.asarray(nu) * fields.v * fields.theta)[:, None]


# --------------------------------------------------------------------------
# Reference Maxwellian and weighted norms


def global_maxwellian(
    v_plus: float,
    theta_max: float,
    grid: VelocityGrid,
) -> np.ndarray:
    """Reference weight ``M_# = M[(v_+, 0, 2 theta_max)]`` (continuum)."""
    return gaussian(1.0 / v_plus, np.zeros(3), 2.0 * theta_max, grid)[0]


def norm_sq(
    values: np.ndarray,
    reference: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """``||g||^2_{M#} = sum w g^2 / M#`` over the last axis."""
    return (values ** 2 / reference) @ grid.weights


def nu_norm_sq(
    values: np.ndarray,
    reference: np.ndarray,
    grid: VelocityGrid,
) -> np.ndarray:
    """``||g||^2_{nu,M#} = sum w (1 + |xi|) g^2 / M#``."""
    return ((1.0 + np.sqrt(grid.speed_sq)) * values ** 2 / reference) @ grid.weights


# --------------------------------------------------------------------------
# Relative entropy


def entropy_potential(z: np.ndarray) -> np.ndarray:
    """``Phi(z) = z - 1 - ln z``."""
    return z - 1.0 - np.log(z)


def relative_entropy_density(
    v: np.ndarray,
    u: np.ndarray,
    theta: np.ndarray,
    v_bar: np.ndarray,
    u_bar: np.ndarray,
    theta_bar: np.ndarray,
) -> np.ndarray:
    """``(2/3) theta_bar Phi(v/v_bar) + theta_bar Phi(theta/theta_bar) +
    |u - u_bar|^2 / 2``, with ``u`` of shape ``(n,)`` or ``(n, 3)``.
    """
    v, theta = np.asarray(v, dtype=float), np.asarray(theta, dtype=float)
    if np.any(v <= 0) or np.any(theta <= 0) or np.any(np.asarray(v_bar) <= 0) \
            or np.any(np.asarray(theta_bar) <= 0):
        raise errors.StateError(
            "Relative entropy needs positive volumes and temperatures")
    psi = np.asarray(u, dtype=float) - np.asarray(u_bar, dtype=float)
    kinetic = 0.5 * (np.sum(psi ** 2, axis=-1) if psi.ndim > 1 else psi ** 2)
    return (2.0 / 3.0 * theta_bar * entropy_potential(v / v_bar)
            + theta_bar * entropy_potential(theta / theta_bar) + kinetic)


def relative_entropy(state: FluidState, reference: FluidState) -> float:
    """Relative entropy ``eta(U | U_bar)`` of two states."""
    state.check()
    reference.check()
    return float(relative_entropy_density(
        np.array([state.v]), state.velocity[None, :], np.array([state.theta]),
        reference.v, reference.velocity[None, :], reference.theta)[0])


def quadratic_entropy(state: FluidState, reference: FluidState) -> float:
    """Second order expansion of :func:`relative_entropy` about
    ``reference``.
    """
    phi = state.v - reference.v
    zeta = state.theta - reference.theta
    psi = state.velocity - reference.velocity
    return (reference.theta * phi ** 2 / (3.0 * reference.v ** 2)
            + zeta ** 2 / (2.0 * reference.theta) + 0.5 * float(psi @ psi))


def perturbation_sq(state: FluidState, reference: FluidState) -> float:
    diff = np.subtract(state, reference)
    return float(diff @ diff)


def equivalence_constants(
    samples: np.ndarray,
    references: np.ndarray,
) -> Tuple[float, float]:
    """Extreme ratios ``eta / |(phi, psi, zeta)|^2`` over paired rows of
    ``(v, u1, theta)`` samples and references.
    """
    eta = relative_entropy_density(
        samples[:, 0], samples[:, 1], samples[:, 2],
        references[:, 0], references[:, 1], references[:, 2])
    size = np.sum((samples - references) ** 2, axis=1)
    mask = size > 0
    ratio = eta[mask] / size[mask]
    return float(np.min(ratio)), float(np.max(ratio))
