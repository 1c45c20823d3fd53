"""Grids, wave functions, the hbar-scaled Fourier transform and Wigner tools.

Conventions
-----------
Position grids are uniform and periodic for FFT purposes: ``x_j = x_min +
j*dx`` with ``dx = (x_max - x_min)/n_points`` and ``x_max`` itself excluded.
The scaled transform used throughout is

    A_hat(xi) = integral exp(-i*x*xi/hbar) * A(x) dx,

with inverse ``A(x) = (2*pi*hbar)**-1 * integral exp(+i*x*xi/hbar) A_hat dxi``.
On the grid the conjugate momenta are ``xi_k = 2*pi*hbar*k/(x_max - x_min)``
with ``k`` centred about zero, so the transform is realised exactly by a DFT
plus an ``exp(-i*x_min*xi/hbar)`` phase; round trips are exact to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import fft as sp_fft

from .errors import BandwidthError, GridMismatchError

__all__ = [
    "GridSpec",
    "WaveFunction",
    "WignerField",
    "conjugate_grid",
    "hbar_fourier_transform",
    "overlap",
    "wigner_function",
    "band_mass",
    "refine_wavefunction",
    "embed_wavefunction",
    "edge_amplitude_fraction",
    "edge_mass_fraction",
    "spectral_edge_fraction",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic position grid.

    Parameters
    ----------
    x_min, x_max : float
        Domain endpoints; ``x_max`` is excluded from the sample points.
    n_points : int
        Number of samples, a power of two (>= 2) so transforms stay exact
        and fast.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError(f"empty domain [{self.x_min}, {self.x_max}]")
        if not _is_power_of_two(self.n_points):
            raise ValueError(f"n_points must be a power of two >= 2, got {self.n_points}")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    def xi(self, hbar: float) -> np.ndarray:
        """Conjugate momenta in FFT ordering."""
        return 2.0 * math.pi * hbar * sp_fft.fftfreq(self.n_points, d=self.dx)

    def nyquist_momentum(self, hbar: float) -> float:
        """Largest momentum magnitude representable on this grid."""
        return math.pi * hbar / self.dx


def conjugate_grid(grid: GridSpec, hbar: float) -> GridSpec:
    """Momentum-side grid conjugate to ``grid`` under the scaled transform."""
    xi_nyq = grid.nyquist_momentum(hbar)
    return GridSpec(-xi_nyq, xi_nyq, grid.n_points)


@dataclass(eq=False)
class WaveFunction:
    """Complex samples on a :class:`GridSpec` with an attached hbar.

    ``conjugate_origin`` is set on momentum-side functions produced by the
    forward transform; it records the ``x_min`` of the position grid so the
    inverse transform can restore the exact phase convention.
    """

    grid: GridSpec
    values: np.ndarray
    hbar: float
    conjugate_origin: float | None = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid with "
                f"{self.grid.n_points} points"
            )
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    def normalized(self) -> "WaveFunction":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero function")
        return replace(self, values=self.values / n)

    def to_csv(self, path) -> None:
        header = (
            f"# hbar={self.hbar!r} x_min={self.grid.x_min!r} "
            f"x_max={self.grid.x_max!r} n_points={self.grid.n_points}"
        )
        if self.conjugate_origin is not None:
            header += f" conjugate_origin={self.conjugate_origin!r}"
        x = self.grid.x
        with open(path, "w") as f:
            f.write(header + "\n")
            f.write("x,re,im\n")
            for xj, vj in zip(x, self.values):
                f.write(f"{xj:.17g},{vj.real:.17g},{vj.imag:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "WaveFunction":
        with open(path) as f:
            meta_line = f.readline().strip()
            if not meta_line.startswith("#"):
                raise ValueError(f"{path}: missing metadata header")
            meta = {}
            for token in meta_line[1:].split():
                key, _, val = token.partition("=")
                meta[key] = val
            header = f.readline().strip()
            if header != "x,re,im":
                raise ValueError(f"{path}: unexpected column header {header!r}")
            rows = np.loadtxt(f, delimiter=",")
        grid = GridSpec(float(meta["x_min"]), float(meta["x_max"]), int(meta["n_points"]))
        values = rows[:, 1] + 1j * rows[:, 2]
        origin = float(meta["conjugate_origin"]) if "conjugate_origin" in meta else None
        wf = cls(grid, values, float(meta["hbar"]), conjugate_origin=origin)
        if not np.allclose(rows[:, 0], grid.x, rtol=0, atol=1e-12 * max(1.0, abs(grid.x_max))):
            raise ValueError(f"{path}: x column inconsistent with grid metadata")
        return wf


def _check_same_grid(a: WaveFunction, b: WaveFunction) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")
    if a.hbar != b.hbar:
        raise GridMismatchError(f"hbar differs: {a.hbar} vs {b.hbar}")


def overlap(a: WaveFunction, b: WaveFunction) -> complex:
    """Inner product <a|b> = sum(conj(a)*b)*dx on a shared grid."""
    _check_same_grid(a, b)
    return complex(np.sum(np.conj(a.values) * b.values) * a.grid.dx)


def hbar_fourier_transform(psi: WaveFunction, direction: str = "forward") -> WaveFunction:
    """Scaled Fourier transform between position and momentum grids.

    The forward direction maps a position-side function to its spectrum on
    the centred conjugate grid (monotone ordering).  The inverse direction
    requires a momentum-side function carrying ``conjugate_origin`` and
    reverses the forward map exactly.
    """
    if direction == "forward":
        grid = psi.grid
        xi = grid.xi(psi.hbar)
        vals = sp_fft.fft(psi.values)
        vals *= grid.dx * np.exp(-1j * grid.x_min * xi / psi.hbar)
        return WaveFunction(
            conjugate_grid(grid, psi.hbar),
            sp_fft.fftshift(vals),
            psi.hbar,
            conjugate_origin=grid.x_min,
        )
    if direction == "inverse":
        if psi.conjugate_origin is None:
            raise ValueError("inverse transform needs conjugate_origin metadata")
        xi_grid = psi.grid
        n = xi_grid.n_points
        dxi = xi_grid.dx
        length = 2.0 * math.pi * psi.hbar / dxi
        dx = length / n
        x_min = psi.conjugate_origin
        pos_grid = GridSpec(x_min, x_min + length, n)
        xi = pos_grid.xi(psi.hbar)
        vals = sp_fft.ifftshift(psi.values) * np.exp(1j * x_min * xi / psi.hbar)
        vals = sp_fft.ifft(vals) / dx
        return WaveFunction(pos_grid, vals, psi.hbar)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


@dataclass(eq=False)
class WignerField:
    """Wigner samples ``values[i, j] = W(q_i, p_j)`` on rectangular axes."""

    q: np.ndarray
    p: np.ndarray
    values: np.ndarray
    hbar: float

    def total_mass(self) -> float:
        dq = self.q[1] - self.q[0] if len(self.q) > 1 else 1.0
        dp = self.p[1] - self.p[0] if len(self.p) > 1 else 1.0
        return float(np.sum(self.values) * dq * dp)

    def q_marginal(self) -> np.ndarray:
        dp = self.p[1] - self.p[0] if len(self.p) > 1 else 1.0
        return np.sum(self.values, axis=1) * dp

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(f"# hbar={self.hbar!r}\n")
            f.write("q,p,w\n")
            for i, qi in enumerate(self.q):
                for j, pj in enumerate(self.p):
                    f.write(f"{qi:.17g},{pj:.17g},{self.values[i, j]:.17g}\n")


def wigner_function(
    psi: WaveFunction,
    p_grid: np.ndarray | None = None,
    q_indices: np.ndarray | None = None,
    _chunk: int = 256,
) -> WignerField:
    """Wigner distribution of ``psi``.

    For each fixed grid point q the cross correlation ``psi(q+u)*conj(psi(q-u))``
    is transformed in u on the grid's own lattice.  The default momentum axis
    is the conjugate grid of that lattice at half the usual spacing,
    ``p_k = pi*hbar*k/(x_max - x_min)``; an explicit ``p_grid`` may not exceed
    the Nyquist bound ``pi*hbar/(2*dx)``.

    Out-of-range correlation samples are treated as zero (no periodic wrap),
    which is exact for states with negligible boundary mass.
    """
    grid = psi.grid
    n = grid.n_points
    dx = grid.dx
    hbar = psi.hbar
    if q_indices is None:
        q_indices = np.arange(n)
    else:
        q_indices = np.asarray(q_indices, dtype=int)

    p_nyquist = math.pi * hbar / (2.0 * dx)
    if p_grid is not None:
        p_grid = np.asarray(p_grid, dtype=float)
        if np.max(np.abs(p_grid)) > p_nyquist * (1 + 1e-12):
            raise BandwidthError(
                f"requested |p| up to {np.max(np.abs(p_grid)):.6g} exceeds the "
                f"Wigner Nyquist bound {p_nyquist:.6g}"
            )

    m = np.arange(-n // 2, n // 2)  # correlation offsets, in units of dx
    default_p = sp_fft.fftshift(2.0 * math.pi * hbar * sp_fft.fftfreq(n, d=2.0 * dx))
    values = np.empty((len(q_indices), n if p_grid is None else len(p_grid)))

    vals = psi.values
    for start in range(0, len(q_indices), _chunk):
        rows = q_indices[start : start + _chunk]
        jp = rows[:, None] + m[None, :]
        jm = rows[:, None] - m[None, :]
        valid = (jp >= 0) & (jp < n) & (jm >= 0) & (jm < n)
        corr = np.zeros((len(rows), n), dtype=np.complex128)
        np.copyto(
            corr,
            vals[np.clip(jp, 0, n - 1)] * np.conj(vals[np.clip(jm, 0, n - 1)]),
            where=valid,
        )
        if p_grid is None:
            # exp(-2i p m dx / hbar) on the default axis is a plain DFT in m
            block = sp_fft.fft(sp_fft.ifftshift(corr, axes=1), axis=1)
            block = sp_fft.fftshift(block, axes=1)
        else:
            kernel = np.exp(-2j * np.outer(m, p_grid) * dx / hbar)
            block = corr @ kernel
        values[start : start + len(rows)] = block.real * (dx / (math.pi * hbar))

    p_axis = default_p if p_grid is None else p_grid
    return WignerField(grid.x[q_indices], p_axis, values, hbar)


def refine_wavefunction(psi: WaveFunction, factor: int) -> WaveFunction:
    """Band-limited upsampling by an integer power-of-two factor.

    Zero-pads the spectrum, which evaluates the trigonometric interpolant of
    the periodic extension on the finer grid; exact for functions resolved by
    the original grid.
    """
    if factor == 1:
        return psi
    if factor < 1 or factor & (factor - 1):
        raise ValueError("refinement factor must be a power of two >= 1")
    n = psi.grid.n_points
    spec = sp_fft.fftshift(sp_fft.fft(psi.values))
    pad = (factor - 1) * n // 2
    spec = np.concatenate([np.zeros(pad, complex), spec, np.zeros(pad, complex)])
    fine_vals = sp_fft.ifft(sp_fft.ifftshift(spec)) * factor
    fine_grid = GridSpec(psi.grid.x_min, psi.grid.x_max, n * factor)
    return WaveFunction(fine_grid, fine_vals, psi.hbar)


def band_mass(
    psi: WaveFunction,
    slope: float,
    width: float,
    center: tuple[float, float] = (0.0, 0.0),
) -> float:
    """Wigner mass inside the band ``|p - p_c - slope*(q - q_c)| < width``.

    Uses the shear covariance of the Wigner function: multiplying by
    ``exp(-i*(p_c*x + slope*(x-q_c)^2/2)/hbar)`` maps the band onto a
    horizontal momentum strip, whose mass is a momentum-marginal integral.
    The state is upsampled first so the chirped function stays below the
    working Nyquist momentum.
    """
    p_c, q_c = center
    grid = psi.grid
    edge = max(abs(grid.x_min - q_c), abs(grid.x_max - q_c))
    chirp_max = abs(p_c) + abs(slope) * edge
    nyq = grid.nyquist_momentum(psi.hbar)
    factor = 1
    while factor * nyq < 1.05 * (chirp_max + nyq):
        factor *= 2
        if factor > 64:
            raise BandwidthError("band slope too steep for a practical refinement")
    work = refine_wavefunction(psi, factor)
    x = work.grid.x
    phase = p_c * x + 0.5 * slope * (x - q_c) ** 2
    sheared = WaveFunction(work.grid, work.values * np.exp(-1j * phase / psi.hbar), psi.hbar)
    spec = hbar_fourier_transform(sheared, "forward")
    xi = spec.grid.x
    inside = np.abs(xi) <= width
    mass = np.sum(np.abs(spec.values[inside]) ** 2) * spec.grid.dx / (2.0 * math.pi * psi.hbar)
    return float(mass)


def embed_wavefunction(psi: WaveFunction, grid: GridSpec) -> WaveFunction:
    """Copy a state into a containing grid with the same spacing, zero-padded.

    The target lattice must contain the source points exactly (same dx, offset
    an integer number of cells); anything else raises GridMismatchError.
    """
    src = psi.grid
    if grid.x_min > src.x_min + 1e-12 or grid.x_max < src.x_max - 1e-12:
        raise GridMismatchError("target grid does not contain the source domain")
    if abs(grid.dx - src.dx) > 1e-15 * max(grid.dx, src.dx):
        raise GridMismatchError("target grid spacing differs from the source")
    shift = (src.x_min - grid.x_min) / grid.dx
    offset = int(round(shift))
    if abs(shift - offset) > 1e-9:
        raise GridMismatchError("source lattice is not aligned with the target")
    vals = np.zeros(grid.n_points, complex)
    vals[offset:offset + src.n_points] = psi.values
    return WaveFunction(grid, vals, psi.hbar)


def edge_amplitude_fraction(psi: WaveFunction, n_edge: int = 4) -> float:
    """Largest |psi| within ``n_edge`` cells of either boundary, relative to max."""
    mags = np.abs(psi.values)
    peak = mags.max()
    if peak == 0.0:
        return 0.0
    return float(max(mags[:n_edge].max(), mags[-n_edge:].max()) / peak)


def edge_mass_fraction(psi: WaveFunction, n_edge: int = 4) -> float:
    mags2 = np.abs(psi.values) ** 2
    total = mags2.sum()
    if total == 0.0:
        return 0.0
    return float((mags2[:n_edge].sum() + mags2[-n_edge:].sum()) / total)


def spectral_edge_fraction(psi: WaveFunction, n_edge: int = 4) -> float:
    """Relative spectral amplitude near the Nyquist edges (aliasing probe)."""
    spec = hbar_fourier_transform(psi, "forward")
    return edge_amplitude_fraction(spec, n_edge=n_edge)
