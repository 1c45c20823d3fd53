"""Numerically exact grid propagation used as ground truth.

Split-operator Strang stepping for kinetic-plus-potential models, a single
exact Fourier multiplier for momentum-only models, and a kick-and-rotate
stepper for the kicked oscillator that shares the classical kick schedule
(integer end times mean "just before the kick").  Convergence is enforced
by doubling substeps until the final state stops moving in L2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryMassError, GridMismatchError, StepSizeError
from .dynamics import kick_times
from .grids import GridSpec, WaveFunction, edge_mass_fraction, overlap, spectral_edge_fraction
from .hamiltonians import FreeParticle, IntegrableMomentum, KickedHarmonic

__all__ = [
    "PropagationConfig",
    "ExactResult",
    "split_operator_step",
    "split_operator_evolve",
    "momentum_evolve",
    "kho_step",
    "kho_evolve",
    "exact_state",
    "fidelity",
    "fidelity_series",
    "expectation_q",
    "expectation_p",
    "kho_default_grid",
]

EDGE_MASS_TOL = 1e-12


def kho_default_grid() -> GridSpec:
    """Fallback grid for kicked-oscillator runs when none is given."""
    return GridSpec(-8.0, 8.0, 8192)


def _max_kinetic(model, grid: GridSpec, hbar: float) -> float:
    xi = grid.xi(hbar)
    return float(np.max(np.abs(np.asarray(model.kinetic_energy(xi), dtype=float))))


def aliasing_limit(model, grid: GridSpec, hbar: float) -> float:
    """Largest stable substep: the kinetic phase per step must stay under pi."""
    return math.pi * hbar / _max_kinetic(model, grid, hbar)


@dataclass(frozen=True)
class PropagationConfig:
    grid: GridSpec
    hbar: float
    n_substeps_per_unit: int

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.n_substeps_per_unit < 1:
            raise ValueError("need at least one substep per unit time")

    @property
    def dt(self) -> float:
        return 1.0 / self.n_substeps_per_unit

    def validate(self, model) -> None:
        limit = aliasing_limit(model, self.grid, self.hbar)
        if self.dt >= limit:
            raise StepSizeError(
                f"dt={self.dt:.3e} exceeds the aliasing limit {limit:.3e} "
                "(kinetic phase per step would pass pi)")

    def check_state(self, psi: WaveFunction) -> None:
        m = edge_mass_fraction(psi)
        if m > EDGE_MASS_TOL:
            raise BoundaryMassError(f"boundary mass {m:.2e} exceeds {EDGE_MASS_TOL}")


def _strang_phases(model, grid: GridSpec, hbar: float, dt: float):
    v = np.asarray(model.potential_energy(grid.x), dtype=float)
    kin = np.asarray(model.kinetic_energy(grid.xi(hbar)), dtype=float)
    return np.exp(-0.5j * v * dt / hbar), np.exp(-1j * kin * dt / hbar)


def _guard(model, grid: GridSpec, hbar: float, dt: float) -> None:
    if dt * _max_kinetic(model, grid, hbar) / hbar >= math.pi:
        raise StepSizeError(
            f"substep {dt:.3e} violates the aliasing guard for this grid")


def _strang_run(vals: np.ndarray, half_v: np.ndarray, kin: np.ndarray,
                n_steps: int) -> np.ndarray:
    for _ in range(n_steps):
        vals = half_v * np.fft.ifft(kin * np.fft.fft(half_v * vals))
    return vals


# triple-jump composition coefficients: w1, w0 = -2^(1/3) w1 sum to 1 and
# cancel the second-order error of the Strang kernel
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1


def _yoshida_phases(model, grid: GridSpec, hbar: float, dt: float):
    v = np.asarray(model.potential_energy(grid.x), dtype=float)
    kin = np.asarray(model.kinetic_energy(grid.xi(hbar)), dtype=float)

    def vp(c):
        return np.exp(-1j * v * c * dt / hbar)

    def kp(c):
        return np.exp(-1j * kin * c * dt / hbar)

    # outer half, outer kinetic, merged middle potential, inner kinetic
    return vp(0.5 * _W1), kp(_W1), vp(0.5 * (_W1 + _W0)), kp(_W0)


def _yoshida_run(vals: np.ndarray, phases, n_steps: int) -> np.ndarray:
    a, b, c, d = phases
    fft, ifft = np.fft.fft, np.fft.ifft
    for _ in range(n_steps):
        vals = ifft(b * fft(a * vals))
        vals = ifft(d * fft(c * vals))
        vals = a * ifft(b * fft(c * vals))
    return vals


def split_operator_step(model, psi: WaveFunction, dt: float) -> WaveFunction:
    """One Strang step: half potential, full kinetic, half potential."""
    _guard(model, psi.grid, psi.hbar, dt)
    half_v, kin = _strang_phases(model, psi.grid, psi.hbar, dt)
    return WaveFunction(psi.grid, _strang_run(psi.values, half_v, kin, 1), psi.hbar)


def split_operator_evolve(model, psi: WaveFunction, t: float, *,
                          n_substeps: int, order: int = 2) -> WaveFunction:
    """Split stepping over [0, t] with n_substeps equal steps.

    order=2 is plain Strang; order=4 composes three Strang kernels per step
    (triple jump), which converges much faster once the state has spread.
    """
    if t == 0 or n_substeps == 0:
        return WaveFunction(psi.grid, psi.values.copy(), psi.hbar)
    dt = t / n_substeps
    if order == 2:
        _guard(model, psi.grid, psi.hbar, dt)
        half_v, kin = _strang_phases(model, psi.grid, psi.hbar, dt)
        vals = _strang_run(psi.values, half_v, kin, n_substeps)
    elif order == 4:
        _guard(model, psi.grid, psi.hbar, abs(_W0) * dt)
        vals = _yoshida_run(psi.values, _yoshida_phases(model, psi.grid, psi.hbar, dt),
                            n_substeps)
    else:
        raise ValueError(f"unsupported splitting order {order}")
    return WaveFunction(psi.grid, vals, psi.hbar)


def momentum_evolve(model, psi: WaveFunction, t: float) -> WaveFunction:
    """Exact one-shot evolution for momentum-only models (diagonal in xi)."""
    xi = psi.grid.xi(psi.hbar)
    mult = np.exp(-1j * np.asarray(model.kinetic_energy(xi), dtype=float) * t / psi.hbar)
    vals = np.fft.ifft(mult * np.fft.fft(psi.values))
    return WaveFunction(psi.grid, vals, psi.hbar)


def _kick_multiplier(k: float, grid: GridSpec, hbar: float) -> np.ndarray:
    return np.exp(-1j * k * np.cos(grid.x) / hbar)


def kho_step(k: float, psi: WaveFunction, substeps: int) -> WaveFunction:
    """One full kicked-oscillator period: unit-time harmonic segment via
    Strang substeps on the q^2/2 well, then the kick multiplier."""
    model = KickedHarmonic(k)
    out = split_operator_evolve(model, psi, 1.0, n_substeps=substeps)
    vals = out.values * _kick_multiplier(k, psi.grid, psi.hbar)
    return WaveFunction(psi.grid, vals, psi.hbar)


def kho_evolve(k: float, psi: WaveFunction, t: float, substeps: int, *,
               side: str = "minus", sample_times=(), order: int = 2):
    """Evolve through t with the classical kick schedule; returns
    (final_state, samples) where samples maps each requested time to the
    state there (integer times are pre-kick unless side='plus' makes the
    final time post-kick)."""
    model = KickedHarmonic(k)
    grid, hbar = psi.grid, psi.hbar
    dt = 1.0 / substeps
    if order == 2:
        _guard(model, grid, hbar, dt)
        unit_phases = _strang_phases(model, grid, hbar, dt)
    elif order == 4:
        _guard(model, grid, hbar, abs(_W0) * dt)
        unit_phases = _yoshida_phases(model, grid, hbar, dt)
    else:
        raise ValueError(f"unsupported splitting order {order}")

    def seg_phases(seg_dt):
        if order == 2:
            return _strang_phases(model, grid, hbar, seg_dt)
        return _yoshida_phases(model, grid, hbar, seg_dt)

    def run(vals, phases, n_steps):
        if order == 2:
            return _strang_run(vals, phases[0], phases[1], n_steps)
        return _yoshida_run(vals, phases, n_steps)

    kick = _kick_multiplier(k, grid, hbar)

    want = [float(s) for s in sample_times]
    for s in want:
        if s < 0 or s > t + 1e-9:
            raise ValueError(f"sample time {s} outside [0, {t}]")
        if abs(s - round(s)) > 1e-9 and abs(s - t) > 1e-9:
            raise ValueError(f"sample time {s} is neither an integer nor the end time")

    def matches(a, b):
        return abs(a - b) <= 1e-9

    samples = {}
    vals = psi.values.copy()
    if any(matches(0.0, s) for s in want):
        samples[0.0] = WaveFunction(grid, vals.copy(), hbar)
    prev = 0.0
    kicks = kick_times(t, side)
    for n in kicks:
        seg = n - prev
        if seg > 0:
            n_steps = max(1, int(round(substeps * seg)))
            if abs(n_steps * dt - seg) > 1e-12:
                n_steps = max(1, int(math.ceil(substeps * seg)))
                vals = run(vals, seg_phases(seg / n_steps), n_steps)
            else:
                vals = run(vals, unit_phases, n_steps)
        m = edge_mass_fraction(WaveFunction(grid, vals, hbar))
        if m > EDGE_MASS_TOL:
            raise BoundaryMassError(
                f"boundary mass {m:.2e} at t={n}- exceeds {EDGE_MASS_TOL}")
        if not (side == "plus" and matches(float(n), t)):
            for s in want:
                if matches(s, float(n)):
                    samples[s] = WaveFunction(grid, vals.copy(), hbar)
        vals = vals * kick
        prev = float(n)
    if t - prev > 1e-12:
        seg = t - prev
        n_steps = max(1, int(math.ceil(substeps * seg)))
        vals = run(vals, seg_phases(seg / n_steps), n_steps)
    final = WaveFunction(grid, vals, hbar)
    m = edge_mass_fraction(final)
    if m > EDGE_MASS_TOL:
        raise BoundaryMassError(
            f"boundary mass {m:.2e} at t={t} exceeds {EDGE_MASS_TOL}")
    for s in want:
        if matches(s, t) and s not in samples:
            samples[s] = WaveFunction(grid, vals.copy(), hbar)
    return final, samples


@dataclass(eq=False)
class ExactResult:
    state: WaveFunction
    samples: dict
    substeps: int | None
    ladder_delta: float
    diagnostics: dict = field(default_factory=dict)


def _l2_diff(a: WaveFunction, b: WaveFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(a.values - b.values) ** 2) * a.grid.dx))


def exact_state(model, psi: WaveFunction, t: float, *, substeps: int | None = None,
                tol: float = 1e-9, max_doublings: int = 4, side: str = "minus",
                sample_times=(), order: int = 4) -> ExactResult:
    """Ground-truth evolution with substeps doubled until the final state
    moves by less than tol in L2.  Momentum-only models skip the ladder
    (the multiplier is exact)."""
    if isinstance(model, (FreeParticle, IntegrableMomentum)):
        final = momentum_evolve(model, psi, t)
        samples = {float(s): momentum_evolve(model, psi, float(s)) for s in sample_times}
        return ExactResult(final, samples, None, 0.0,
                           {"method": "momentum-multiplier"})

    def run(n):
        if isinstance(model, KickedHarmonic):
            return kho_evolve(model.k, psi, t, n, side=side,
                              sample_times=sample_times, order=order)
        out = split_operator_evolve(model, psi, t, order=order,
                                    n_substeps=max(1, int(round(n * t))))
        samples = {float(s): split_operator_evolve(
            model, psi, float(s), order=order, n_substeps=max(1, int(round(n * s))))
            for s in sample_times}
        return out, samples

    if substeps is None:
        limit = aliasing_limit(model, psi.grid, psi.hbar)
        scale = abs(_W0) if order == 4 else 1.0
        substeps = 2 ** int(math.ceil(math.log2(1.25 * scale / limit)))
    prev_final, _ = run(substeps)
    delta = math.inf
    for _ in range(max_doublings):
        substeps *= 2
        final, samples = run(substeps)
        delta = _l2_diff(final, prev_final)
        if delta < tol:
            edge = spectral_edge_fraction(final)
            return ExactResult(final, samples, substeps, delta,
                               {"method": "strang-ladder",
                                "spectral_edge_fraction": edge})
        prev_final = final
    raise StepSizeError(
        f"substep ladder did not converge below {tol} (last delta {delta:.2e} "
        f"at {substeps} substeps per unit time)")


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    return abs(overlap(a, b)) / (a.norm * b.norm)


def fidelity_series(method_states, exact_states):
    if len(method_states) != len(exact_states):
        raise GridMismatchError("state lists differ in length")
    return [fidelity(m, e) for m, e in zip(method_states, exact_states)]


def expectation_q(psi: WaveFunction) -> float:
    w = np.abs(psi.values) ** 2
    return float(np.sum(psi.grid.x * w) / np.sum(w))


def expectation_p(psi: WaveFunction) -> float:
    xi = psi.grid.xi(psi.hbar)
    hat = np.fft.fft(psi.values)
    w = np.abs(hat) ** 2
    return float(np.sum(xi * w) / np.sum(w))
