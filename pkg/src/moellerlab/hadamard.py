"""Vacuum two-point kernels, their transport, and a smoothness proxy.

The reference object is the mode-sum vacuum of an ultrastatic metric on the
circle, built with the spatially discretized dispersion so that its spatial
structure matches the lattice operator exactly; all residuals against
lattice quantities are then pure time-discretization effects of second
order.  The wavefront-set characterization of physical kernels is not
computable at desk scale; its stand-in compares a kernel against a
reference vacuum and requires the difference to be smooth in a quantitative
sense (small high-frequency spatial tail, bounded growth of divided
differences under refinement).  Every report carries an explicit
``proxy_for`` marker saying so.

Kernels are handled column-wise: ``column(q)`` returns the complex field
K(., q) over the whole grid for a probe point q, which keeps pullbacks
through realized intertwiners affordable on refined grids.
"""

from __future__ import annotations

import numpy as np

from .greenhyp import GreenSystem, HyperbolicOperator, PAST_MARGIN
from .lattice import SpacetimeGrid

__all__ = [
    "VacuumKernel",
    "PullbackKernel",
    "SmoothnessReport",
    "ultrastatic_vacuum",
    "ccr_hypothesis_check",
    "bisolution_check",
    "pullback_kernel",
    "smoothness_proxy",
    "hadamard_verdict",
    "default_probes",
]

PROXY_FOR = "wavefront-set condition (not computable at desk scale)"


class VacuumKernel:
    """Mode-sum two-point kernel of a static lattice vacuum.

    For the flat cylinder, K(p, q) = sum_k exp(i w_k (t_p - t_q) +
    i k (x_p - x_q)) / (2 w_k L) with w_k^2 = m^2 + (2/dx sin(k dx/2))^2
    over the lattice momenta: the spatially discretized dispersion, so the
    kernel solves the space-discretized field equation exactly and every
    residual against lattice quantities is a pure O(dt^2) time effect.  A
    constant diagonal metric diag(g_tt, g_xx) generalizes the dispersion to
    w^2 = (|i^xx| disp^2 + m^2)/|i^tt| and the mode density to
    1/(2 w |i^tt| vol L), which keeps the commutator normalization of the
    canonical operator exact.  The frequency sign is the positive-frequency
    bookkeeping matching this package's wave-operator sign, so that
    K(p,q) - K(q,p) = i G(p,q) up to the declared tolerance.
    """

    def __init__(self, grid: SpacetimeGrid, mass: float, metric=None):
        if grid.rank != 1:
            raise ValueError("vacuum kernels are built for rank-1 bundles")
        if mass <= 0.0:
            raise ValueError("mass must be positive for a gapped vacuum")
        self.grid = grid
        self.mass = float(mass)
        if metric is None:
            itt, ixx, vol = -1.0, 1.0, 1.0
        else:
            if np.max(np.abs(metric.g_tx)) != 0.0:
                raise ValueError("mode-sum vacua need a static diagonal metric")
            its = metric.inverse_components()
            itt = float(its[0][0, 0])
            ixx = float(its[2][0, 0])
            vol = float(metric.volume_density()[0, 0])
            varies = max(np.ptp(metric.g_tt), np.ptp(metric.g_xx))
            if varies > 0.0 or itt >= 0.0 or ixx <= 0.0:
                raise ValueError("mode-sum vacua need a constant t-class metric")
        j = np.arange(grid.nx)
        j = np.where(j <= grid.nx // 2, j, j - grid.nx)
        self.k = 2.0 * np.pi * j / grid.length
        disp = (2.0 / grid.dx) * np.sin(self.k * grid.dx / 2.0)
        self.omega = np.sqrt((ixx * disp**2 + self.mass**2) / (-itt))
        t = grid.times
        x = grid.sites
        phase = np.exp(1j * (self.omega[None, None, :] * t[:, None, None]
                             + self.k[None, None, :] * x[None, :, None]))
        self._phi = phase.reshape(grid.n_points, grid.nx)       # (points, modes)
        self._d = 1.0 / (2.0 * self.omega * (-itt) * vol * grid.length)

    def column(self, q: int) -> np.ndarray:
        """K(., q) over the grid, shape (nt, nx), complex."""
        g = self.grid
        coef = self._d * np.conj(self._phi[q])
        return (self._phi @ coef).reshape(g.nt, g.nx)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """K @ v on flattened grid vectors."""
        w = self._phi.conj().T @ np.asarray(vec, dtype=complex).reshape(-1)
        return (self._phi @ (self._d * w)).reshape(self.grid.nt, self.grid.nx)

    def equal_time_value(self) -> float:
        """K(p, p): the coincidence value sum_k 1/(2 w_k L)."""
        return float(np.sum(self._d))

    def params_json(self) -> str:
        """Evaluator parameters (enough to rebuild the mode sum)."""
        import json
        g = self.grid
        return json.dumps({
            "grid": {"nt": g.nt, "nx": g.nx, "t_min": g.t_min, "t_max": g.t_max,
                     "length": g.length},
            "mass": self.mass,
            "omega": self.omega.tolist(),
            "momenta": self.k.tolist(),
            "density": self._d.tolist(),
        }, sort_keys=True)

    def table_csv(self, points) -> str:
        """Kernel values on a probe set, row-major, 're+imj' entries."""
        rows = []
        cols = {q: self.column(q).reshape(-1) for q in points}
        for p in points:
            rows.append(",".join(f"{float(cols[q][p].real)!r}{float(cols[q][p].imag):+}j"
                                 for q in points))
        return "\n".join(rows) + "\n"

    def evaluate(self, f: np.ndarray, h: np.ndarray, weights: np.ndarray) -> complex:
        """Smeared pairing with explicit volume weights (vol * dt * dx)."""
        vf = (weights * f).reshape(-1)
        vh = (weights * h).reshape(-1)
        return complex(vf @ self.apply(vh).reshape(-1))


class PullbackKernel:
    """Kernel transported by a realized intertwiner: K' = R K R^T."""

    def __init__(self, base, R):
        self.base = base
        self.R = R
        self.grid = R.op_start.grid

    def _rt(self, vec):
        return self.R.transpose_apply(vec.reshape(self.grid.nt, self.grid.nx, 1)).reshape(-1)

    def _r(self, vec):
        return self.R.apply(vec.reshape(self.grid.nt, self.grid.nx, 1)).reshape(-1)

    def column(self, q: int) -> np.ndarray:
        e = np.zeros(self.grid.n_points)
        e[q] = 1.0
        w = self._rt(e)
        mid = self.base.apply(w).reshape(-1)
        out = self._r(mid.real) + 1j * self._r(mid.imag)
        return out.reshape(self.grid.nt, self.grid.nx)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        w = self._rt(vec.real) + 1j * self._rt(vec.imag)
        mid = self.base.apply(w).reshape(-1)
        out = self._r(mid.real) + 1j * self._r(mid.imag)
        return out.reshape(self.grid.nt, self.grid.nx)


def ultrastatic_vacuum(grid: SpacetimeGrid, mass: float, metric=None) -> VacuumKernel:
    return VacuumKernel(grid, mass, metric=metric)


def default_probes(grid: SpacetimeGrid, times=3):
    """Interior probe points: all sites at a few mid-window levels."""
    levels = np.linspace(PAST_MARGIN + 2, grid.nt - PAST_MARGIN - 3, times).astype(int)
    return [int(n) * grid.nx + j for n in levels for j in range(grid.nx)]


def _green_kernel_column(N: HyperbolicOperator, q: int) -> np.ndarray:
    """Column of the causal-propagator kernel G(., q) (weights divided out)."""
    g = N.grid
    e = np.zeros((g.nt, g.nx, 1))
    n, j = divmod(q, g.nx)
    e[n, j, 0] = 1.0 / N.weight_blocks[n, j, 0, 0]
    gs = GreenSystem(N)
    return (gs.plus(e) - gs.minus(e))[:, :, 0]


def ccr_hypothesis_check(nu, N: HyperbolicOperator, probes=None) -> dict:
    """Residual of antisym(nu) against i times the propagator kernel.

    Hermitian kernels have antisym part 2i Im K(., q); the report carries
    the sup norm over probe columns and the smoothness verdict of the
    residual data.
    """
    g = N.grid
    probes = default_probes(g) if probes is None else probes
    sup = 0.0
    resid_slices = []
    scale_slices = []
    for q in probes:
        col = nu.column(q)
        gcol = _green_kernel_column(N, q)
        resid = 2.0 * col.imag - gcol
        sup = max(sup, float(np.max(np.abs(resid[1:-1]))))
        resid_slices.append(resid)
        scale_slices.append(np.abs(col))
    proxy = smoothness_proxy(np.array(resid_slices), reference=np.array(scale_slices))
    return {"sup": sup, "proxy": proxy}


def bisolution_check(nu, N: HyperbolicOperator, probes=None) -> dict:
    """Apply the operator in each argument of the kernel on probe columns."""
    g = N.grid
    probes = default_probes(g) if probes is None else probes
    sup_left = 0.0
    resid_slices = []
    scale_slices = []
    for q in probes:
        col = nu.column(q)[:, :, None]
        r = N.apply(col.real) + 1j * N.apply(col.imag)
        sup_left = max(sup_left, float(np.max(np.abs(r[1:-1]))))
        resid_slices.append(r[:, :, 0])
        scale_slices.append(np.abs(col[:, :, 0]))
    # right slot by Hermitian symmetry: N_q K(p, q) = conj(N_q K(q, p))
    proxy = smoothness_proxy(np.array(resid_slices), reference=np.array(scale_slices))
    return {"sup_left": sup_left, "sup_right": sup_left, "proxy": proxy}


def pullback_kernel(nu, R) -> PullbackKernel:
    """Transport K through the intertwiner: (f, h) -> K(R^dagger f, R^dagger h)."""
    if R.op_start.grid.rank != 1:
        raise ValueError("kernel transport is rank-1 only")
    return PullbackKernel(nu, R)


class SmoothnessReport:
    """Quantitative stand-in for 'the difference is smooth'.

    tail_ratio: energy of the top-quarter spatial frequencies of the data
    relative to the same bands of the reference kernel; derivative_growth:
    factor by which mixed divided differences up to third order grow from a
    2x-coarsened subsample to the native grid.  Fixed thresholds: 1e-3 and
    4 (documented constants, not derived quantities).
    """

    TAIL_THRESHOLD = 1e-3
    GROWTH_THRESHOLD = 4.0

    def __init__(self, tail_ratio, derivative_growth):
        self.tail_ratio = float(tail_ratio)
        self.derivative_growth = float(derivative_growth)
        self.tail_ok = self.tail_ratio <= self.TAIL_THRESHOLD
        self.growth_ok = self.derivative_growth <= self.GROWTH_THRESHOLD
        self.passes = self.tail_ok and self.growth_ok
        self.proxy_for = PROXY_FOR

    def as_dict(self):
        return {
            "tail_ratio": self.tail_ratio,
            "derivative_growth": self.derivative_growth,
            "passes": self.passes,
            "proxy_for": self.proxy_for,
        }

    def __repr__(self):
        return (f"SmoothnessReport(tail={self.tail_ratio:.2e}, "
                f"growth={self.derivative_growth:.2f}, passes={self.passes})")


def _tail_energy(slices):
    """Energy in the top-quarter spatial frequencies, summed over slices."""
    coef = np.fft.fft(slices, axis=-1)
    nx = slices.shape[-1]
    j = np.arange(nx)
    j = np.minimum(j, nx - j)
    tail = j >= nx // 4
    return float(np.sum(np.abs(coef[..., tail]) ** 2))


def _max_mixed_derivative(data, dt, dx, order=3):
    worst = 0.0
    for a in range(order + 1):
        for b in range(order + 1 - a):
            if a + b == 0 or a + b > order:
                continue
            d = data
            for _ in range(a):
                d = np.diff(d, axis=-2) / dt
            for _ in range(b):
                d = (np.roll(d, -1, axis=-1) - d) / dx
            if d.size:
                worst = max(worst, float(np.max(np.abs(d))))
    return worst


def smoothness_proxy(data, reference=None, spacing=(1.0, 1.0)) -> SmoothnessReport:
    """Smoothness verdict for kernel-difference data.

    data: real or complex array (..., nt, nx) of difference slices;
    reference: same-shape magnitudes of the kernel being compared (defaults
    to data itself, making the ratio 1 for empty input).
    """
    data = np.asarray(data)
    ref = data if reference is None else np.asarray(reference)
    tail_d = _tail_energy(np.abs(data))
    tail_r = max(_tail_energy(np.abs(ref)), 1e-300)
    dt, dx = spacing
    fine = _max_mixed_derivative(np.abs(data), dt, dx)
    coarse = _max_mixed_derivative(np.abs(data[..., ::2, ::2]), 2 * dt, 2 * dx)
    growth = fine / max(coarse, 1e-300) if fine > 0 else 1.0
    return SmoothnessReport(tail_d / tail_r, growth)


def hadamard_verdict(nu_prime, reference, N_prime: HyperbolicOperator,
                     probes=None) -> dict:
    """Aggregate report: CCR residual, bisolution residual, difference proxy.

    reference is the target metric side's own vacuum (kernels compared
    column by column); the wavefront-set conclusion itself is replaced by
    the difference-smoothness proxy and labelled as such.
    """
    g = N_prime.grid
    probes = default_probes(g) if probes is None else probes
    ccr = ccr_hypothesis_check(nu_prime, N_prime, probes)
    bis = bisolution_check(nu_prime, N_prime, probes)
    diff_slices = []
    ref_slices = []
    for q in probes:
        diff_slices.append(nu_prime.column(q) - reference.column(q))
        ref_slices.append(nu_prime.column(q))
    proxy = smoothness_proxy(np.array(diff_slices), reference=np.array(ref_slices),
                             spacing=(g.dt, g.dx))
    return {
        "ccr_sup": ccr["sup"],
        "ccr_proxy": ccr["proxy"].as_dict(),
        "bisolution_sup": bis["sup_left"],
        "bisolution_proxy": bis["proxy"].as_dict(),
        "difference_proxy": proxy.as_dict(),
        "proxy_for": PROXY_FOR,
        "passes": bool(proxy.passes),
    }
