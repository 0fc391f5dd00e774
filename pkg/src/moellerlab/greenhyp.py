"""Normally hyperbolic lattice operators and their exact causal inverses.

The second-order part of every operator is assembled in summation-by-parts
divergence form

    N = -(1/vol) [ d_t(vol g^tt d_t .) + d_t(vol g^tx d_x .) + d_x(...) ] + lower order

with forward differences on staggered edges for the pure d_t^2 / d_x^2
pieces and centered differences for the cross piece.  This makes the
volume-weighted matrix V N (V = vol * dt * dx tensor fiber metric) exactly
symmetric, so formal self-adjointness, slice independence of the symplectic
flux and antisymmetry of the causal propagator kernel hold to round-off
rather than to discretization order.

Operators keep a nine-offset stencil representation: OFF[(a, b)] holds the
(r x r) coupling of row (n, j) to column (n+a, j+b mod nx).  Green operators
are realized as causal triangular solves: the equation rows at levels
1..nt-2 are marched forward (retarded) or backward (advanced) in time, with
per-level new-time-slice systems factorized once and cached.  Sources must
vanish on the first two (resp. last two) time levels, the discrete stand-in
for past (future) compact support in the window.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .geometry import MetricField, sharp_interpolation
from .lattice import FiberMetric, ScalarField, Section, smooth_step

__all__ = [
    "CFLError",
    "SymbolMismatch",
    "HyperbolicOperator",
    "GreenSystem",
    "CausalPropagator",
    "build_operator",
    "wave_operator",
    "symmetrize",
    "convex_operator",
    "solve_cauchy",
    "green_plus",
    "green_minus",
    "green_scaled",
    "causal_propagator",
    "exactness_check",
    "symplectic_form",
    "propagator_symplectic_identity",
    "green_adjoint_relation",
]

PAST_MARGIN = 2     # levels a past-compact-in-window source keeps clear of t_min
CFL_SAFETY = 0.8

_OFFSETS = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]


class CFLError(RuntimeError):
    pass


class SymbolMismatch(ValueError):
    pass


def _roll_x(u, b):
    return np.roll(u, -b, axis=1) if b else u


def _blocks(grid, value_field=None):
    """Promote an (nt, nx) scalar field to diagonal (nt, nx, r, r) blocks."""
    r = grid.rank
    out = np.zeros((grid.nt, grid.nx, r, r))
    idx = np.arange(r)
    if value_field is not None:
        out[:, :, idx, idx] = np.asarray(value_field)[:, :, None]
    return out


class HyperbolicOperator:
    """Assembled lattice operator with metric, weights and stencil offsets."""

    def __init__(self, metric: MetricField, offsets, fiber: FiberMetric,
                 A0=None, A1=None, B=None, self_adjoint=False):
        self.metric = metric
        self.grid = metric.grid
        self.fiber = fiber
        self.offsets = {k: np.ascontiguousarray(v) for k, v in offsets.items()}
        self.A0, self.A1, self.B = A0, A1, B
        self.vol = metric.volume_density()
        self.self_adjoint = self_adjoint
        w = self.vol * self.grid.dt * self.grid.dx
        self.weight_blocks = fiber.values * w[:, :, None, None]
        self.weight_inv_blocks = np.linalg.inv(self.weight_blocks)
        self._lu_plus = {}
        self._lu_minus = {}
        self._dense = None

    # -- linear action -----------------------------------------------------

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Full matrix action on (nt, nx, r) values, boundary rows included."""
        g = self.grid
        out = np.zeros_like(u)
        for (a, b), C in self.offsets.items():
            shifted = _roll_x(u, b)
            if a == 0:
                out += np.einsum("txab,txb->txa", C, shifted)
            elif a == 1:
                out[:-1] += np.einsum("txab,txb->txa", C[:-1], shifted[1:])
            else:
                out[1:] += np.einsum("txab,txb->txa", C[1:], shifted[:-1])
        return out

    def apply_section(self, f: Section) -> Section:
        return Section(self.grid, self.apply(f.values))

    def interior_residual(self, u, f=None) -> float:
        """Sup norm of N u - f over the equation rows (levels 1..nt-2)."""
        r = self.apply(u)
        if f is not None:
            r = r - f
        return float(np.max(np.abs(r[1:-1])))

    # -- weighted transpose ------------------------------------------------

    def transpose_offsets(self):
        """Offsets of N^T: trans[(a, b)](n, j) = N[(-a, -b)](n+a, j+b)^T."""
        out = {}
        for (a, b), C in self.offsets.items():
            # original key (a, b) feeds transposed key (-a, -b); its value at
            # row (n, j) is the block at the source row (n - a, j - b)
            T = np.swapaxes(C, -1, -2)
            T = _roll_x(T, -b)
            if a == 1:                 # transposed key is (-1, -b): need C[n-1]
                S = np.zeros_like(T)
                S[1:] = T[:-1]
                T = S
            elif a == -1:              # transposed key is (+1, -b): need C[n+1]
                S = np.zeros_like(T)
                S[:-1] = T[1:]
                T = S
            out[(-a, -b)] = T
        return out

    def adjoint_offsets(self):
        """Offsets of V^{-1} N^T V (the formal adjoint in the same volume)."""
        tr = self.transpose_offsets()
        out = {}
        for (a, b), C in tr.items():
            Wcol = _roll_x(np.roll(self.weight_blocks, -a, axis=0), b)
            if a == 1:
                Wcol[-1] = np.eye(self.grid.rank)
            elif a == -1:
                Wcol[0] = np.eye(self.grid.rank)
            out[(a, b)] = np.einsum("txab,txbc,txcd->txad", self.weight_inv_blocks, C, Wcol)
        return out

    def v_symmetry_defect(self) -> float:
        """Sup norm of N - V^{-1} N^T V entries."""
        adj = self.adjoint_offsets()
        d = 0.0
        for k in set(self.offsets) | set(adj):
            A = self.offsets.get(k)
            Bk = adj.get(k)
            if A is None:
                d = max(d, float(np.max(np.abs(Bk))))
            elif Bk is None:
                d = max(d, float(np.max(np.abs(A))))
            else:
                d = max(d, float(np.max(np.abs(A - Bk))))
        return d

    # -- dense form and weights ---------------------------------------------

    def as_dense(self) -> np.ndarray:
        if self._dense is None:
            g = self.grid
            n_dof = g.n_dof
            M = np.zeros((n_dof, n_dof))
            r = g.rank
            for (a, b), C in self.offsets.items():
                for n in range(g.nt):
                    m = n + a
                    if m < 0 or m >= g.nt:
                        continue
                    for j in range(g.nx):
                        jp = (j + b) % g.nx
                        row = (n * g.nx + j) * r
                        col = (m * g.nx + jp) * r
                        M[row:row + r, col:col + r] += C[n, j]
            self._dense = M
        return self._dense

    def weight_dense(self) -> np.ndarray:
        g = self.grid
        r = g.rank
        M = np.zeros((g.n_dof, g.n_dof))
        for n in range(g.nt):
            for j in range(g.nx):
                row = (n * g.nx + j) * r
                M[row:row + r, row:row + r] = self.weight_blocks[n, j]
        return M

    # -- principal symbol ----------------------------------------------------

    def principal_coefficients(self):
        """Stencil-extracted second-order coefficients (att, atx, axx)."""
        g = self.grid
        att = np.zeros((g.nt, g.nx))
        atx = np.zeros((g.nt, g.nx))
        axx = np.zeros((g.nt, g.nx))
        r = g.rank
        for (a, b), C in self.offsets.items():
            tr = np.trace(C, axis1=-2, axis2=-1) / r
            att += 0.5 * a * a * g.dt**2 * tr
            atx += a * b * g.dt * g.dx * tr / 2.0
            axx += 0.5 * b * b * g.dx**2 * tr
        return att, 2.0 * atx, axx

    def check_symbol(self, tol_scale=1e-9):
        """Verify the principal symbol equals -g_sharp(xi, xi) Id.

        The staggered edge weights average neighboring metric values, so the
        pointwise tolerance includes the metric's own discrete second
        differences; constant metrics are checked at round-off level.
        """
        itt, itx, ixx = self.metric.inverse_components()
        att, atx2, axx = self.principal_coefficients()
        scale = np.maximum(self.metric.scale(), 1.0)

        def stagger_err(w):
            e = np.zeros_like(w)
            e[1:-1] = np.abs(w[:-2] - 2 * w[1:-1] + w[2:]) / 4.0
            e[:, :] += np.abs(np.roll(w, 1, 1) - 2 * w + np.roll(w, -1, 1)) / 4.0
            e[0] += np.abs(w[1] - w[0])
            e[-1] += np.abs(w[-1] - w[-2])
            return e

        vit = self.vol * itt
        vix = self.vol * ixx
        vitx = self.vol * itx
        tol = tol_scale * scale
        # factor 2 margin: edge averaging in t and x mixes in the cross term
        bad_tt = np.abs(att - (-itt)) > 2 * stagger_err(vit) / self.vol + np.abs(itt) * 1e-9 + tol
        bad_xx = np.abs(axx - (-ixx)) > 2 * stagger_err(vix) / self.vol + np.abs(ixx) * 1e-9 + tol
        bad_tx = np.zeros_like(bad_tt)
        bad_tx[1:-1] = np.abs(atx2 - (-2 * itx))[1:-1] > (2 * stagger_err(vitx) / self.vol + np.abs(itx) * 1e-9 + tol)[1:-1]
        bad = bad_tt | bad_xx | bad_tx
        bad[0] = bad[-1] = False  # one-sided rows carry partial sums
        if bad.any():
            n, j = map(int, np.argwhere(bad)[0])
            raise SymbolMismatch(f"principal symbol mismatch at point (level={n}, site={j})")

    # -- causal marching ------------------------------------------------------

    def max_characteristic_speed(self) -> float:
        lo, hi = self.metric.null_slopes()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise CFLError("a null direction is parallel to the time slices; no time marching")
        return float(np.max(np.maximum(np.abs(lo), np.abs(hi))))

    def check_cfl(self):
        s = self.max_characteristic_speed()
        if self.grid.dt > CFL_SAFETY * self.grid.dx / max(s, 1e-300):
            raise CFLError(
                f"CFL violated: dt={self.grid.dt:.3g} > {CFL_SAFETY}*dx/speed="
                f"{CFL_SAFETY * self.grid.dx / s:.3g}")

    def _level_matrix(self, a, n):
        """Dense (nx r) x (nx r) coupling of rows at level n to level n+a."""
        g = self.grid
        r = g.rank
        M = np.zeros((g.nx, r, g.nx, r))
        cols = np.arange(g.nx)
        for b in (-1, 0, 1):
            C = self.offsets.get((a, b))
            if C is None:
                continue
            M[cols, :, (cols + b) % g.nx, :] += C[n]
        return M.reshape(g.nx * r, g.nx * r)

    def _lu(self, a, n):
        cache = self._lu_plus if a == 1 else self._lu_minus
        if n not in cache:
            cache[n] = lu_factor(self._level_matrix(a, n))
        return cache[n]

    def _row_rhs(self, n, u_n, u_other, a_other):
        g = self.grid
        acc = np.zeros((g.nx, g.rank))
        for b in (-1, 0, 1):
            C = self.offsets.get((0, b))
            if C is not None:
                acc += np.einsum("xab,xb->xa", C[n], _roll_x(u_n[None], b)[0])
            C = self.offsets.get((a_other, b))
            if C is not None:
                acc += np.einsum("xab,xb->xa", C[n], _roll_x(u_other[None], b)[0])
        return acc

    def march(self, f: np.ndarray, direction: int, seed_level=None, seeds=None) -> np.ndarray:
        """Solve the equation rows causally in time.

        direction +1: zero data on the first two levels (retarded solve);
        direction -1: zero data on the last two levels (advanced solve).
        With seed_level/seeds given, marches both ways from Cauchy data
        (seeds = values on levels seed_level and seed_level+1).
        """
        self.check_cfl()
        g = self.grid
        u = np.zeros((g.nt, g.nx, g.rank))
        if seeds is not None:
            s0, s1 = seeds
            u[seed_level] = s0
            u[seed_level + 1] = s1
            lo, hi = seed_level, seed_level + 1
        elif direction == 1:
            lo, hi = 0, 1
        else:
            lo, hi = g.nt - 2, g.nt - 1
        if direction >= 0 or seeds is not None:
            for n in range(hi, g.nt - 1):
                rhs = f[n] - self._row_rhs(n, u[n], u[n - 1], -1)
                u[n + 1] = lu_solve(self._lu(1, n), rhs.reshape(-1)).reshape(g.nx, g.rank)
        if direction < 0 or seeds is not None:
            for n in range(lo, 0, -1):
                rhs = f[n] - self._row_rhs(n, u[n], u[n + 1], 1)
                u[n - 1] = lu_solve(self._lu(-1, n), rhs.reshape(-1)).reshape(g.nx, g.rank)
        return u


# -- constructors -------------------------------------------------------------

def _edge_mean_t(w):
    return 0.5 * (w[:-1] + w[1:])


def _edge_mean_x(w):
    return 0.5 * (w + np.roll(w, -1, axis=1))


def _difference_matrices(grid):
    """1d sparse building blocks for the divergence-form assembly."""
    import scipy.sparse as sp

    nt, nx, dt, dx = grid.nt, grid.nx, grid.dt, grid.dx
    ones = np.ones(nt - 1)
    Dt = sp.diags([-ones / dt, ones / dt], [0, 1], shape=(nt - 1, nt))  # node -> t edge
    Dx = (sp.diags([np.full(nx, -1.0)], [0], shape=(nx, nx))
          + sp.diags([np.ones(nx - 1)], [1], shape=(nx, nx))
          + sp.coo_matrix(([1.0], ([nx - 1], [0])), shape=(nx, nx))) / dx  # periodic edge
    # centered t derivative with half-weight one-sided boundary rows: the
    # boundary rows feed the transpose so that equation rows 1 and nt-2 keep
    # the full interior cross coupling
    rows, cols, vals = [], [], []
    for n in range(nt):
        lo, hi = (max(n - 1, 0), min(n + 1, nt - 1))
        rows += [n, n]
        cols += [lo, hi]
        vals += [-0.5 / dt, 0.5 / dt]
    Ct = sp.coo_matrix((vals, (rows, cols)), shape=(nt, nt))
    Cx = sp.diags([np.ones(nx - 1) * 0.5, -np.ones(nx - 1) * 0.5], [1, -1],
                  shape=(nx, nx)).tolil()
    Cx[0, nx - 1] = -0.5
    Cx[nx - 1, 0] = 0.5
    Cx = (Cx / dx).tocsr()
    I_t = sp.identity(nt)
    I_x = sp.identity(nx)
    return {
        "Dt": sp.kron(Dt, I_x).tocsr(),
        "Dx": sp.kron(I_t, Dx).tocsr(),
        "Ct": sp.kron(Ct, I_x).tocsr(),
        "Cx": sp.kron(I_t, Cx).tocsr(),
    }


def _offsets_from_sparse(grid, M):
    """Decode a 3x3-banded sparse point matrix into offset arrays."""
    S = {k: np.zeros((grid.nt, grid.nx)) for k in _OFFSETS}
    M = M.tocoo()
    n, j = M.row // grid.nx, M.row % grid.nx
    m, l = M.col // grid.nx, M.col % grid.nx
    a = m - n
    b = (l - j) % grid.nx
    b = np.where(b == grid.nx - 1, -1, b)
    if np.any(np.abs(a) > 1) or np.any(np.abs(b) > 1):
        raise AssertionError("assembled stencil leaks outside the 3x3 neighborhood")
    for key in _OFFSETS:
        sel = (a == key[0]) & (b == key[1])
        np.add.at(S[key], (n[sel], j[sel]), M.data[sel])
    return S


def _principal_offsets(metric: MetricField, ixx_override=None):
    """Scalar nine-offset stencil of -(1/vol) div(vol g_sharp grad .)."""
    import scipy.sparse as sp

    g = metric.grid
    itt, itx, ixx = metric.inverse_components()
    if ixx_override is not None:
        ixx = np.broadcast_to(np.asarray(ixx_override, dtype=float), ixx.shape)
    vol = metric.volume_density()
    D = _difference_matrices(g)
    Wtt = sp.diags(_edge_mean_t(vol * itt).reshape(-1))
    Wxx = sp.diags(_edge_mean_x(vol * ixx).reshape(-1))
    M = D["Dt"].T @ Wtt @ D["Dt"] + D["Dx"].T @ Wxx @ D["Dx"]
    if np.any(itx != 0.0):
        Wtx = sp.diags((vol * itx).reshape(-1))
        M = M + D["Ct"].T @ Wtx @ D["Cx"] + D["Cx"].T @ Wtx @ D["Ct"]
    S = _offsets_from_sparse(g, M)
    for k in list(S):
        S[k] = S[k] / vol
        if not np.any(S[k]):
            del S[k]
    return S


def build_operator(metric: MetricField, A0=None, A1=None, B=None,
                   fiber: FiberMetric | None = None, hxx_override=None,
                   check=True) -> HyperbolicOperator:
    """Assemble the lattice operator for a metric plus lower-order fields.

    A0, A1, B are per-point (r x r) coefficient fields (or scalars / (nt,nx)
    arrays for rank 1) entering as A0 d_t + A1 d_x + B; hxx_override replaces
    the spatial principal coefficient and exists to exercise the symbol
    verifier, which rejects any stencil whose extracted second-order part
    deviates from -g_sharp.
    """
    g = metric.grid
    fiber = fiber or FiberMetric(g)
    S = _principal_offsets(metric, ixx_override=hxx_override)
    offsets = {k: _blocks(g, v) for k, v in S.items() if np.any(v != 0.0)}

    def coerce(c):
        if c is None:
            return None
        c = np.asarray(c, dtype=float)
        if c.shape == ():
            out = _blocks(g, np.full((g.nt, g.nx), float(c)))
        elif c.shape == (g.nt, g.nx):
            out = _blocks(g, c)
        elif c.shape == (g.nt, g.nx, g.rank, g.rank):
            out = c.copy()
        else:
            raise ValueError("coefficient shape does not match grid/rank")
        return out

    A0c, A1c, Bc = coerce(A0), coerce(A1), coerce(B)
    if A0c is not None:
        blk = A0c / (2.0 * g.dt)
        blk[0] = 0.0
        blk[-1] = 0.0
        offsets[(1, 0)] = offsets.get((1, 0), _blocks(g)) + blk
        offsets[(-1, 0)] = offsets.get((-1, 0), _blocks(g)) - blk
    if A1c is not None:
        blk = A1c / (2.0 * g.dx)
        offsets[(0, 1)] = offsets.get((0, 1), _blocks(g)) + blk
        offsets[(0, -1)] = offsets.get((0, -1), _blocks(g)) - blk
    if Bc is not None:
        offsets[(0, 0)] = offsets.get((0, 0), _blocks(g)) + Bc
    op = HyperbolicOperator(metric, offsets, fiber, A0c, A1c, Bc)
    if check:
        op.check_symbol()
    return op


def wave_operator(metric: MetricField, mass=1.0, fiber=None) -> HyperbolicOperator:
    """Canonical formally self-adjoint operator of a metric: div form + m^2."""
    op = build_operator(metric, B=float(mass) ** 2, fiber=fiber)
    if op.v_symmetry_defect() <= 1e-10 * (1.0 + float(np.max(op.metric.scale()))):
        op.self_adjoint = True
        return op
    return symmetrize(op)


def symmetrize(N: HyperbolicOperator) -> HyperbolicOperator:
    """(N + V^{-1} N^T V) / 2; fixes the self-adjoint flag, keeps the symbol."""
    adj = N.adjoint_offsets()
    keys = set(N.offsets) | set(adj)
    zero = _blocks(N.grid)
    offsets = {k: 0.5 * (N.offsets.get(k, zero) + adj.get(k, zero)) for k in keys}
    out = HyperbolicOperator(N.metric, offsets, N.fiber, N.A0, N.A1, N.B, self_adjoint=True)
    return out


def convex_operator(N0: HyperbolicOperator, N1: HyperbolicOperator, chi: ScalarField) -> HyperbolicOperator:
    """Interpolating operator over the sharp-blended metric.

    The principal part is the divergence form of the blended metric (whose
    inverse is the pointwise blend of the two inverses, so the symbol is the
    exact convex combination of the endpoint symbols); the lower-order
    fields blend pointwise.  Where chi is exactly 0 / 1 the stencil
    coincides bitwise with N0 / N1, which keeps the switch-on region of the
    scattering construction exactly inert.
    """
    w = chi.values
    if np.all(w == 0.0):
        return N0
    if np.all(w == 1.0):
        return N1
    gchi = sharp_interpolation(N0.metric, N1.metric, chi)

    def blend(c0, c1):
        if c0 is None and c1 is None:
            return None
        z = _blocks(N0.grid)
        a = c0 if c0 is not None else z
        b = c1 if c1 is not None else z
        return (1.0 - w[:, :, None, None]) * a + w[:, :, None, None] * b

    return build_operator(gchi, blend(N0.A0, N1.A0), blend(N0.A1, N1.A1),
                          blend(N0.B, N1.B), N0.fiber)


# -- Green systems -------------------------------------------------------------

def _check_margin(f, side, what="source"):
    tol = 1e-12 * (1.0 + float(np.max(np.abs(f))))  # round-off dribble is not support
    if side > 0 and np.max(np.abs(f[:PAST_MARGIN])) > tol:
        raise ValueError(f"{what} must vanish on the first {PAST_MARGIN} time levels")
    if side < 0 and np.max(np.abs(f[-PAST_MARGIN:])) > tol:
        raise ValueError(f"{what} must vanish on the last {PAST_MARGIN} time levels")


class GreenSystem:
    """Retarded/advanced solvers G^+ / G^- of one operator."""

    def __init__(self, N: HyperbolicOperator, scale: ScalarField | None = None):
        self.operator = N
        self.scale = scale  # solves rho N when given: G_{rho N} = G_N (. / rho)

    def _prep(self, f):
        v = f.values if isinstance(f, Section) else np.asarray(f, dtype=float)
        if v.shape == (self.operator.grid.nt, self.operator.grid.nx):
            v = v[:, :, None]
        if self.scale is not None:
            v = v / self.scale.values[:, :, None]
        return v

    def plus(self, f):
        v = self._prep(f)
        _check_margin(v, +1)
        return self.operator.march(v, +1)

    def minus(self, f):
        v = self._prep(f)
        _check_margin(v, -1)
        return self.operator.march(v, -1)

    def propagator(self, f):
        v = self._prep(f)
        _check_margin(v, +1)
        _check_margin(v, -1)
        return self.operator.march(v, +1) - self.operator.march(v, -1)


def green_plus(N: HyperbolicOperator, f: Section) -> Section:
    """Retarded solve: N (G+ f) = f on equation rows, zero before the source."""
    return Section(N.grid, GreenSystem(N).plus(f))


def green_minus(N: HyperbolicOperator, f: Section) -> Section:
    return Section(N.grid, GreenSystem(N).minus(f))


def green_scaled(N: HyperbolicOperator, rho: ScalarField) -> GreenSystem:
    """Green system of rho N, realized as G_N applied to f / rho."""
    if rho.values.min() <= 0.0:
        raise ValueError("scaling field must be positive")
    return GreenSystem(N, scale=rho)


class CausalPropagator:
    """f -> G+ f - G- f on window-compact sections, with optional dense kernel."""

    def __init__(self, N: HyperbolicOperator):
        self.operator = N
        self.system = GreenSystem(N)
        self._kernel = None

    def apply(self, f):
        return self.system.propagator(f)

    def apply_section(self, f: Section) -> Section:
        return Section(self.operator.grid, self.apply(f))

    def kernel_matrix(self) -> np.ndarray:
        """Dense matrix of the map (admissible interior columns only)."""
        if self._kernel is None:
            g = self.operator.grid
            n = g.n_dof
            K = np.zeros((n, n))
            e = np.zeros((g.nt, g.nx, g.rank))
            flat = e.reshape(-1)
            for q in range(n):
                lvl = q // (g.nx * g.rank)
                if lvl < PAST_MARGIN or lvl >= g.nt - PAST_MARGIN:
                    continue
                flat[q] = 1.0
                K[:, q] = self.apply(e).reshape(-1)
                flat[q] = 0.0
            self._kernel = K
        return self._kernel


def causal_propagator(N: HyperbolicOperator) -> CausalPropagator:
    return CausalPropagator(N)


# -- Cauchy problem -------------------------------------------------------------

def solve_cauchy(N: HyperbolicOperator, slice_index: int, h1, h2, f=None) -> Section:
    """March both ways from data on a slice: values h1 and time derivative h2.

    The first step uses a second-order Taylor start built from the equation,
    so smooth solutions converge at the scheme's quadratic rate; the discrete
    residual N Psi - f vanishes on every equation row regardless.
    """
    g = N.grid
    if slice_index < 1 or slice_index > g.nt - 3:
        raise ValueError("Cauchy slice must keep one level clear of the window boundary")
    N.check_cfl()
    h1 = np.asarray(h1, dtype=float).reshape(g.nx, g.rank)
    h2 = np.asarray(h2, dtype=float).reshape(g.nx, g.rank)
    fv = np.zeros((g.nt, g.nx, g.rank)) if f is None else \
        (f.values if isinstance(f, Section) else np.asarray(f, dtype=float))
    if fv.shape == (g.nt, g.nx):
        fv = fv[:, :, None]
    # second-order start: read u_tt off the equation at the data slice by
    # probing the stencil with the linear-in-time extension of the data
    u0 = np.zeros((g.nt, g.nx, g.rank))
    u0[slice_index] = h1
    u0[slice_index + 1] = h1 + g.dt * h2
    u0[slice_index - 1] = h1 - g.dt * h2
    res = fv[slice_index] - N.apply(u0)[slice_index]
    itt = N.metric.inverse_components()[0][slice_index][:, None]
    utt = res / (-itt)  # the stencil's u_tt coefficient is -g^tt
    u1 = h1 + g.dt * h2 + 0.5 * g.dt**2 * utt
    sol = N.march(fv, 0, seed_level=slice_index, seeds=(h1, u1))
    return Section(g, sol)


# -- verification-grade identities ----------------------------------------------

def exactness_check(N: HyperbolicOperator, seed=0, count=5) -> dict:
    """Residuals of the four-term exact sequence on random window sections.

    (a) injectivity of N on compacts via retarded recovery, (b) G(N h) = 0,
    (c) every spatially-compact homogeneous solution is G of N(chi Psi),
    (d) kernel of G on compacts is N of something compact.
    """
    g = N.grid
    rng = np.random.default_rng(seed)
    G = CausalPropagator(N)
    Gs = GreenSystem(N)
    out = {"injectivity": 0.0, "complex": 0.0, "reconstruction": 0.0, "kernel": 0.0}
    lo, hi = g.nt // 4, g.nt - g.nt // 4
    chi = smooth_step(g, g.times[g.nt // 3], g.times[2 * g.nt // 3])
    for _ in range(count):
        h = _window_section(g, rng, lo, hi)
        f = N.apply(h)
        f[:1] = 0.0
        f[-1:] = 0.0
        rec = Gs.plus(f)
        out["injectivity"] = max(out["injectivity"], float(np.max(np.abs(rec - h))) / max(np.max(np.abs(h)), 1e-300))
        out["complex"] = max(out["complex"], float(np.max(np.abs(G.apply(f)))))
        psi = solve_cauchy(N, 2, rng.standard_normal((g.nx, g.rank)),
                           rng.standard_normal((g.nx, g.rank))).values
        fpsi = N.apply(chi.values[:, :, None] * psi)
        fpsi[:1] = 0.0
        fpsi[-1:] = 0.0
        out["reconstruction"] = max(out["reconstruction"],
                                    float(np.max(np.abs(G.apply(fpsi) - psi))) / max(np.max(np.abs(psi)), 1e-300))
        # (d): f with G f = 0 is exhibited as N h via h = G+ f
        h2 = Gs.plus(f)
        out["kernel"] = max(out["kernel"], N.interior_residual(h2, f) / max(np.max(np.abs(f)), 1e-300))
    return out


def _window_section(grid, rng, lo, hi):
    u = np.zeros((grid.nt, grid.nx, grid.rank))
    u[lo:hi] = rng.standard_normal((hi - lo, grid.nx, grid.rank))
    # smooth a little so sup norms are O(1)
    for _ in range(2):
        u[lo:hi] = 0.25 * np.roll(u[lo:hi], 1, 1) + 0.5 * u[lo:hi] + 0.25 * np.roll(u[lo:hi], -1, 1)
    return u


def flux_blocks(N: HyperbolicOperator, n: int) -> np.ndarray:
    """(V N)[level n rows, level n+1 cols] as per-offset blocks for the flux."""
    out = {}
    for b in (-1, 0, 1):
        C = N.offsets.get((1, b))
        if C is not None:
            out[b] = np.einsum("xab,xbc->xac", N.weight_blocks[n], C[n])
    return out


def symplectic_form(N: HyperbolicOperator, psi, phi, slice_index: int) -> float:
    """Conserved symplectic flux through the cut between two time levels.

    Equals the slice integral of <Psi | grad_n Phi> - <grad_n Psi | Phi>
    evaluated with staggered differences; slice independence on equation
    rows is exact because V N is exactly symmetric.
    """
    if not N.self_adjoint:
        raise ValueError("symplectic flux needs a formally self-adjoint operator")
    g = N.grid
    n = int(slice_index)
    if n < 0 or n > g.nt - 2:
        raise ValueError("slice must have a successor level inside the window")
    pv = psi.values if isinstance(psi, Section) else psi
    fv = phi.values if isinstance(phi, Section) else phi
    tol = 1e-8 * max(float(np.max(np.abs(pv))), float(np.max(np.abs(fv))), 1.0)
    if N.interior_residual(pv) > tol or N.interior_residual(fv) > tol:
        raise ValueError("arguments must be homogeneous solutions")
    return _flux(N, pv, fv, n)


def _flux(N, pv, fv, n):
    # orientation fixed so that sigma(G f, G h) = +<f, G h>_V; this pins the
    # sign of the slice normal consistently with the wave-operator sign
    acc = 0.0
    for b, Bk in flux_blocks(N, n).items():
        fpn = np.roll(fv[n + 1], -b, axis=0)
        ppn = np.roll(pv[n + 1], -b, axis=0)
        acc += float(np.einsum("xa,xab,xb->", fv[n], Bk, ppn))
        acc -= float(np.einsum("xa,xab,xb->", pv[n], Bk, fpn))
    return acc


def propagator_symplectic_identity(N: HyperbolicOperator, f: Section, h: Section) -> dict:
    """sigma(G f, G h) against the volume pairing of f with G h."""
    G = CausalPropagator(N)
    pf = Section(N.grid, G.apply(f))
    ph = Section(N.grid, G.apply(h))
    n = N.grid.nt // 2
    lhs = symplectic_form(N, pf, ph, n)
    gh = G.apply(h)
    rhs = float(np.einsum("txa,txab,txb->", f.values, N.weight_blocks, gh))
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)}


def green_adjoint_relation(N: HyperbolicOperator, fp: Section, f: Section) -> dict:
    """Both weighted-transpose identities tying G+ of N to G- of its adjoint."""
    adj = HyperbolicOperator(N.metric, N.adjoint_offsets(), N.fiber)
    Gs_N = GreenSystem(N)
    Gs_A = GreenSystem(adj)
    W = N.weight_blocks

    def pair(a, b):
        return float(np.einsum("txa,txab,txb->", a, W, b))

    r1 = abs(pair(Gs_A.minus(fp), f.values) - pair(fp.values, Gs_N.plus(f)))
    r2 = abs(pair(Gs_A.plus(fp), f.values) - pair(fp.values, Gs_N.minus(f)))
    scale = max(np.max(np.abs(f.values)), np.max(np.abs(fp.values)), 1e-300)
    return {"minus_plus": r1 / scale, "plus_minus": r2 / scale}
