"""Manifold transport: the position-space map induced by flowing a
Lagrangian line, the evolved phase on its image, and the transport operator
that rearranges amplitudes along it.

A bundle flows a fan of seeds (grad S0(x_i), x_i) and records everything
needed downstream.  The map derivative at a seed comes from the tangent
matrix applied to the manifold tangent (1, alpha), never from differencing
neighbouring trajectories.  Interpolation between nodes is cubic Hermite
with those exact derivatives, so the tabulated map and its inverse agree
with the flow to interpolation order and monotonicity can be certified one
interval at a time (the derivative of each cubic piece is a quadratic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

from .errors import CausticError, ConvergenceError, OutOfDomainError
from .dynamics import flow_bundle
from .grids import WaveFunction, refine_wavefunction
from .hamiltonians import QuadraticPhase

__all__ = [
    "TrajectoryBundle",
    "TransportMap",
    "build_bundle",
    "build_transport_map",
    "refined_transport_map",
    "invert_transport",
    "evolved_phase",
    "transport_operator",
    "transport_operator_adjoint",
    "curvature_matrix_A",
    "window_mass_deficit",
]

CAUSTIC_THRESHOLD = 1e-6


@dataclass(eq=False, frozen=True)
class TrajectoryBundle:
    model: object
    phase0: QuadraticPhase
    seeds: np.ndarray        # initial positions, uniform, increasing
    times: np.ndarray
    p_seed: np.ndarray       # grad S0 at the seeds
    q_t: np.ndarray          # (n_times, n_seeds)
    p_t: np.ndarray
    action_t: np.ndarray
    tangent_t: np.ndarray    # (n_times, n_seeds, 2, 2)
    dphi_t: np.ndarray       # derivative of the map along the manifold

    @property
    def n_seeds(self) -> int:
        return self.seeds.size

    def time_index(self, t: float) -> int:
        hit = np.nonzero(np.abs(self.times - t) <= 1e-9 * (1.0 + abs(t)))[0]
        if hit.size == 0:
            raise ValueError(f"t={t} is not among the bundle sample times {self.times}")
        return int(hit[0])


def build_bundle(model, phase0: QuadraticPhase, x_window, n_seeds: int, times, *,
                 dt_max: float = 1e-3, method: str = "auto",
                 side: str = "minus") -> TrajectoryBundle:
    """Flow a uniform fan of seeds on the initial manifold through `times`.

    Raises CausticError carrying the earliest offending (t, x) if the map
    derivative drops below the caustic threshold at any sample time.
    """
    if n_seeds < 33:
        raise ValueError("need at least 33 seeds for a trustworthy tabulation")
    lo, hi = float(x_window[0]), float(x_window[1])
    if not hi > lo:
        raise ValueError("x_window must be a nonempty interval")
    seeds = np.linspace(lo, hi, n_seeds)
    p_seed = np.asarray(phase0.grad(seeds), dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))

    alpha = phase0.alpha
    q_t = np.empty((times.size, n_seeds))
    p_t = np.empty_like(q_t)
    action_t = np.empty_like(q_t)
    dphi_t = np.empty_like(q_t)
    tangent_t = np.empty((times.size, n_seeds, 2, 2))
    for k, t in enumerate(times):
        fb = flow_bundle(model, p_seed, seeds, t, dt_max=dt_max, method=method, side=side)
        q_t[k] = fb.q
        p_t[k] = fb.p
        action_t[k] = fb.action
        tangent_t[k] = fb.tangent
        dphi_t[k] = fb.tangent[:, 1, 0] * alpha + fb.tangent[:, 1, 1]
        if np.min(dphi_t[k]) < CAUSTIC_THRESHOLD:
            i = int(np.argmin(dphi_t[k]))
            raise CausticError(float(t), float(seeds[i]))
    return TrajectoryBundle(model, phase0, seeds, times, p_seed,
                            q_t, p_t, action_t, tangent_t, dphi_t)


def _piecewise_derivative_min(x: np.ndarray, y: np.ndarray, d: np.ndarray) -> float:
    """Exact minimum of the derivative of the Hermite interpolant.

    On each interval the derivative is a quadratic in the local coordinate;
    the minimum is attained at an endpoint or the interior vertex.
    """
    h = np.diff(x)
    dy = y[:-1] - y[1:]
    a = 6.0 * dy + 3.0 * h * (d[:-1] + d[1:])
    b = -6.0 * dy - 4.0 * h * d[:-1] - 2.0 * h * d[1:]
    c = h * d[:-1]
    vals = np.minimum(c, a + b + c)
    safe_a = np.where(a == 0.0, 1.0, a)
    s_star = -b / (2.0 * safe_a)
    interior = (a != 0.0) & (s_star > 0.0) & (s_star < 1.0)
    v_star = a * s_star**2 + b * s_star + c
    vals = np.where(interior, np.minimum(vals, v_star), vals)
    return float(np.min(vals / h))


class TransportMap:
    """Per-time monotone tabulation of the manifold map with phase data.

    Immutable after construction; all queries are read-only.  The phase is
    stored relative to the central trajectory so spline values stay small;
    the central action is re-added as a scalar on evaluation.
    """

    def __init__(self, bundle: TrajectoryBundle):
        self.bundle = bundle
        self._phi = []
        self._phi_prime = []
        self._s_rel = []
        self._s_center = []
        mid = bundle.n_seeds // 2
        s0 = np.asarray(bundle.phase0.phase(bundle.seeds), dtype=float)
        for k, t in enumerate(bundle.times):
            dmin = _piecewise_derivative_min(bundle.seeds, bundle.q_t[k], bundle.dphi_t[k])
            if dmin <= 0.0:
                i = int(np.argmin(bundle.dphi_t[k]))
                raise CausticError(float(t), float(bundle.seeds[i]),
                                   f"interpolated map loses monotonicity at t={t}; "
                                   "refine the seed fan")
            phi = CubicHermiteSpline(bundle.seeds, bundle.q_t[k], bundle.dphi_t[k])
            self._phi.append(phi)
            self._phi_prime.append(phi.derivative())
            s_nodes = s0 + bundle.action_t[k]
            center = float(s_nodes[mid])
            self._s_rel.append(CubicHermiteSpline(bundle.q_t[k], s_nodes - center,
                                                  bundle.p_t[k]))
            self._s_center.append(center)
        # populated by refined_transport_map
        self.refinement_residual = None

    @property
    def times(self) -> np.ndarray:
        return self.bundle.times

    @property
    def seed_window(self):
        return float(self.bundle.seeds[0]), float(self.bundle.seeds[-1])

    def time_index(self, t: float) -> int:
        return self.bundle.time_index(t)

    def image_interval(self, t: float):
        k = self.time_index(t)
        return float(self.bundle.q_t[k][0]), float(self.bundle.q_t[k][-1])

    @property
    def non_contraction_certificate(self) -> float:
        """Smallest tabulated |map derivative| over all times and seeds."""
        return float(np.min(np.abs(self.bundle.dphi_t)))

    def map_values(self, t: float, x):
        k = self.time_index(t)
        return self._phi[k](x)

    def map_derivative(self, t: float, x):
        k = self.time_index(t)
        return self._phi_prime[k](x)


def build_transport_map(model, phase0: QuadraticPhase, x_window, n_seeds: int, times,
                        **flow_kwargs) -> TransportMap:
    return TransportMap(build_bundle(model, phase0, x_window, n_seeds, times, **flow_kwargs))


def _as_map(bundle_or_map) -> TransportMap:
    if isinstance(bundle_or_map, TransportMap):
        return bundle_or_map
    return TransportMap(bundle_or_map)


def _invert_on_index(tmap: TransportMap, k: int, y: np.ndarray) -> np.ndarray:
    bundle = tmap.bundle
    seeds = bundle.seeds
    q_nodes = bundle.q_t[k]
    phi = tmap._phi[k]
    dphi = tmap._phi_prime[k]
    x = np.interp(y, q_nodes, seeds)
    tol = 1e-10 * (1.0 + np.abs(y))
    done = np.zeros(y.shape, dtype=bool)
    for _ in range(60):
        f = phi(x) - y
        done = np.abs(f) < tol
        if done.all():
            break
        slope = np.maximum(dphi(x), 1e-12)
        x = np.clip(x - f / slope, seeds[0], seeds[-1])
    if not done.all():
        for i in np.nonzero(~done)[0]:
            x[i] = brentq(lambda u: float(phi(u)) - y[i], seeds[0], seeds[-1], xtol=1e-14)
    return x


def invert_transport(tmap: TransportMap, t: float, y):
    """Preimage under the manifold map, to 1e-10*(1+|y|) in residual."""
    tmap = _as_map(tmap)
    k = tmap.time_index(t)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    lo, hi = tmap.bundle.q_t[k][0], tmap.bundle.q_t[k][-1]
    edge = 1e-9 * (1.0 + max(abs(lo), abs(hi)))
    if np.any(y_arr < lo - edge) or np.any(y_arr > hi + edge):
        raise OutOfDomainError(f"position outside the image [{lo:.6g}, {hi:.6g}] at t={t}")
    x = _invert_on_index(tmap, k, np.clip(y_arr, lo, hi))
    if np.isscalar(y) or np.asarray(y).ndim == 0:
        return float(x[0])
    return x


def evolved_phase(bundle_or_map, t: float, y):
    """Phase S(t, y) on the image of the transported manifold."""
    tmap = _as_map(bundle_or_map)
    k = tmap.time_index(t)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    lo, hi = tmap.bundle.q_t[k][0], tmap.bundle.q_t[k][-1]
    edge = 1e-9 * (1.0 + max(abs(lo), abs(hi)))
    if np.any(y_arr < lo - edge) or np.any(y_arr > hi + edge):
        raise OutOfDomainError(f"position outside the image [{lo:.6g}, {hi:.6g}] at t={t}")
    vals = tmap._s_rel[k](np.clip(y_arr, lo, hi)) + tmap._s_center[k]
    if np.isscalar(y) or np.asarray(y).ndim == 0:
        return float(vals[0])
    return vals


def _amplitude_interpolator(amplitude: WaveFunction, oversample: int):
    if oversample > 1:
        fine = refine_wavefunction(amplitude, oversample)
    else:
        fine = amplitude
    return CubicSpline(fine.grid.x, fine.values)


def transport_operator(tmap: TransportMap, t: float, amplitude: WaveFunction, *,
                       oversample: int = 8) -> WaveFunction:
    """Pull the amplitude back along the map with the unitary Jacobian factor.

    Grid points outside the image of the seeded window get amplitude zero;
    callers are responsible for keeping the corresponding mass deficit
    negligible (see window_mass_deficit).
    """
    tmap = _as_map(tmap)
    k = tmap.time_index(t)
    grid = amplitude.grid
    x = grid.x
    lo, hi = tmap.bundle.q_t[k][0], tmap.bundle.q_t[k][-1]
    out = np.zeros(grid.n_points, dtype=np.complex128)
    inside = (x >= lo) & (x <= hi)
    if inside.any():
        x_pre = _invert_on_index(tmap, k, x[inside])
        interp = _amplitude_interpolator(amplitude, oversample)
        jac = tmap._phi_prime[k](x_pre)
        out[inside] = interp(x_pre) / np.sqrt(jac)
    return WaveFunction(grid, out, amplitude.hbar)


def transport_operator_adjoint(tmap: TransportMap, t: float, amplitude: WaveFunction, *,
                               oversample: int = 8) -> WaveFunction:
    """Adjoint: push forward along the map, (T* B)(x) = sqrt(phi') B(phi(x))."""
    tmap = _as_map(tmap)
    k = tmap.time_index(t)
    grid = amplitude.grid
    x = grid.x
    w_lo, w_hi = tmap.seed_window
    out = np.zeros(grid.n_points, dtype=np.complex128)
    inside = (x >= w_lo) & (x <= w_hi)
    if inside.any():
        phi_x = tmap._phi[k](x[inside])
        jac = tmap._phi_prime[k](x[inside])
        interp = _amplitude_interpolator(amplitude, oversample)
        vals = np.where((phi_x >= grid.x_min) & (phi_x <= grid.x_max),
                        interp(np.clip(phi_x, grid.x_min, grid.x_max)), 0.0)
        out[inside] = np.sqrt(jac) * vals
    return WaveFunction(grid, out, amplitude.hbar)


def curvature_matrix_A(tmap: TransportMap, t: float, x):
    """Inverse squared map derivative (the 1D curvature symbol)."""
    tmap = _as_map(tmap)
    k = tmap.time_index(t)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    w_lo, w_hi = tmap.seed_window
    edge = 1e-9 * (1.0 + max(abs(w_lo), abs(w_hi)))
    if np.any(x_arr < w_lo - edge) or np.any(x_arr > w_hi + edge):
        raise OutOfDomainError(f"position outside the seeded window [{w_lo:.6g}, {w_hi:.6g}]")
    d = tmap._phi_prime[k](np.clip(x_arr, w_lo, w_hi))
    if np.min(np.abs(d)) < CAUSTIC_THRESHOLD:
        i = int(np.argmin(np.abs(d)))
        raise CausticError(float(t), float(x_arr[i]))
    vals = d**-2
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(vals[0])
    return vals


def window_mass_deficit(tmap: TransportMap, amplitude: WaveFunction) -> float:
    """Fraction of the amplitude's mass outside the seeded window."""
    tmap = _as_map(tmap)
    w_lo, w_hi = tmap.seed_window
    x = amplitude.grid.x
    outside = (x < w_lo) | (x > w_hi)
    total = amplitude.norm_sq
    if total == 0.0:
        return 0.0
    lost = float(np.sum(np.abs(amplitude.values[outside]) ** 2) * amplitude.grid.dx)
    return lost / total


def refined_transport_map(model, phase0: QuadraticPhase, x_window, times,
                          amplitude: WaveFunction, *, n_seeds: int = 65,
                          tol: float = 1e-8, max_rounds: int = 6,
                          oversample: int = 8, **flow_kwargs) -> TransportMap:
    """Halve the seed spacing until the transported amplitude settles.

    The convergence measure is the largest L2 change of the transported
    amplitude across the sample times, relative to the amplitude norm.
    """
    n = max(n_seeds, 33)
    tmap = build_transport_map(model, phase0, x_window, n, times, **flow_kwargs)
    ref = amplitude.norm
    prev = [transport_operator(tmap, t, amplitude, oversample=oversample)
            for t in np.atleast_1d(times)]
    for _ in range(max_rounds):
        n = 2 * n - 1
        finer = build_transport_map(model, phase0, x_window, n, times, **flow_kwargs)
        cur = [transport_operator(finer, t, amplitude, oversample=oversample)
               for t in np.atleast_1d(times)]
        residual = max(
            float(np.sqrt(np.sum(np.abs(c.values - p.values) ** 2) * c.grid.dx)) / ref
            for c, p in zip(cur, prev)
        )
        if residual < tol:
            finer.refinement_residual = residual
            return finer
        tmap, prev = finer, cur
    raise ConvergenceError(
        f"transport map did not settle below {tol} after {max_rounds} refinements "
        f"(last n_seeds={n})")
