"""Scattering-style intertwiners between hyperbolic operators on one lattice.

For a cone-comparable pair g0 preceq g1 with operators N0, N1 the elementary
steps are

    R+ = Id - G+_{rho N_chi} (rho N_chi - N0)      rho  = vol_chi / vol_0
    R- = Id - G-_{rho' N_1} (rho' N_1 - rho N_chi) rho' = vol_1  / vol_0

built over a time-interpolating operator N_chi whose switch window [t0, t1]
sits strictly inside the lattice window.  Their inverses swap the solver for
the other operator's retarded/advanced solve, and their adjoints are again
marching compositions because every operator in the pipeline is exactly
volume-weighted self-adjoint.  Chains compose steps link by link; reversed
links use inverse steps.

Lattice-time marching imposes a real restriction mirrored from the causal
geometry: every metric along a link (endpoints and the interpolating family)
must keep exactly one coordinate axis timelike, with the same axis on both
ends.  A link that crosses from t-timelike to x-timelike cones passes
through a metric whose constant-time slices are characteristic (the inverse
metric's tt component changes sign), where no stable causal solve in
lattice time exists; on the spatial circle this is the same obstruction
that makes the rotated flat metric fail global hyperbolicity.  Such links
raise :class:`MollerObstruction` instead of producing garbage.
"""

from __future__ import annotations

import numpy as np

from .geometry import ALIGNED, MetricField, ParacausalChain, preceq
from .greenhyp import HyperbolicOperator, convex_operator, wave_operator
from .lattice import ScalarField, Section, smooth_step

__all__ = [
    "MollerObstruction",
    "MollerStep",
    "MollerOperator",
    "AdjointOperator",
    "build_rplus",
    "build_rminus",
    "build_inverses",
    "verify_intertwine",
    "restrict_to_solutions",
    "adjoint",
    "weight_dense",
    "compose_chain",
    "verify_moller_identities",
    "random_dictionary",
]


class MollerObstruction(RuntimeError):
    def __init__(self, reason, detail=""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


def _axis_class(metric: MetricField):
    """+1 when dt is timelike (t-class), -1 for the x-class, 0 when mixed."""
    itt, _, ixx = metric.inverse_components()
    if np.max(itt) < 0.0 and np.min(ixx) > 0.0:
        return 1
    if np.min(itt) > 0.0 and np.max(ixx) < 0.0:
        return -1
    return 0


def _check_link_marchable(ga: MetricField, gb: MetricField):
    ca, cb = _axis_class(ga), _axis_class(gb)
    if ca == 0 or cb == 0 or ca != cb:
        raise MollerObstruction(
            "characteristic-slice link",
            "the interpolating metrics change which coordinate axis is "
            "timelike, so some constant-time slice becomes characteristic "
            "and no lattice-time causal solve exists (the cylinder analog "
            "of losing global hyperbolicity under cone rotation)")


def _vol_ratio(g_from: MetricField, g_to: MetricField) -> np.ndarray:
    return g_to.volume_density() / g_from.volume_density()


def _wmul(op: HyperbolicOperator, u):
    return np.einsum("txab,txb->txa", op.weight_blocks, u)


def _winv(op: HyperbolicOperator, u):
    return np.einsum("txab,txb->txa", op.weight_inv_blocks, u)


class MollerStep:
    """One elementary scattering factor with realized linear actions.

    kind "plus" fixes the past (output equals input below t0); kind "minus"
    fixes the future above t1.  Inverse and transpose actions are realized
    through the opposite-direction causal solves of the same operators.
    """

    def __init__(self, kind, op_small, op_mid, rho, t0_level, t1_level,
                 rho_hi=None, check=True):
        self.kind = kind
        self.op_small = op_small      # N0 for plus, N_chi for minus
        self.op_mid = op_mid          # N_chi for plus, N1 for minus
        self.rho = rho                # vol ratio scaling op_mid (plus) / lower factor (minus)
        self.rho_hi = rho_hi          # rho' for minus steps
        self.t0_level = t0_level
        self.t1_level = t1_level
        self.grid = op_mid.grid
        self._tr_small = None
        self._tr_mid = None
        if check:
            self._check_profiles()
            self._check_identity_region()

    # difference operators ---------------------------------------------------

    def _diff(self, u):
        """(rho N_chi - N0) u for plus; (rho' N1 - rho N_chi) u for minus."""
        if self.kind == "plus":
            return self.rho[:, :, None] * self.op_mid.apply(u) - self.op_small.apply(u)
        return (self.rho_hi[:, :, None] * self.op_mid.apply(u)
                - self.rho[:, :, None] * self.op_small.apply(u))

    def _transpose_op(self, which):
        cache = "_tr_small" if which == "small" else "_tr_mid"
        if getattr(self, cache) is None:
            op = self.op_small if which == "small" else self.op_mid
            tr = HyperbolicOperator(op.metric, op.transpose_offsets(), op.fiber)
            setattr(self, cache, tr)
        return getattr(self, cache)

    def _diff_transpose(self, w):
        if self.kind == "plus":
            return (self._transpose_op("mid").apply(self.rho[:, :, None] * w)
                    - self._transpose_op("small").apply(w))
        return (self._transpose_op("mid").apply(self.rho_hi[:, :, None] * w)
                - self._transpose_op("small").apply(self.rho[:, :, None] * w))

    # realized actions ---------------------------------------------------------

    def apply(self, u):
        d = self._diff(u)
        if self.kind == "plus":
            return u - self.op_mid.march(d / self.rho[:, :, None], +1)
        return u - self.op_mid.march(d / self.rho_hi[:, :, None], -1)

    def inverse_apply(self, u):
        d = self._diff(u)
        if self.kind == "plus":
            return u + self.op_small.march(d, +1)
        return u + self.op_small.march(d / self.rho[:, :, None], -1)

    def transpose_apply(self, h):
        """Plain matrix transpose action, valid on window-compact sections."""
        if self.kind == "plus":
            # R+^T = Id - D^T diag(1/rho) V_chi G-_{chi} V_chi^{-1}
            mid = self.op_mid
            w = _wmul(mid, mid.march(_winv(mid, h), -1)) / self.rho[:, :, None]
            return h - self._diff_transpose(w)
        big = self.op_mid
        w = _wmul(big, big.march(_winv(big, h), +1)) / self.rho_hi[:, :, None]
        return h - self._diff_transpose(w)

    def inverse_transpose_apply(self, h):
        if self.kind == "plus":
            small = self.op_small
            w = _wmul(small, small.march(_winv(small, h), -1))
            return h + self._diff_transpose(w)
        small = self.op_small
        w = _wmul(small, small.march(_winv(small, h), +1)) / self.rho[:, :, None]
        return h + self._diff_transpose(w)

    # build-time invariants ------------------------------------------------------

    def _check_profiles(self):
        g = self.grid
        if self.kind == "plus":
            early = self.rho[: max(self.t0_level - 1, 0)]
            if early.size and np.max(np.abs(early - 1.0)) > 1e-12:
                raise ValueError("scaling profile must equal 1 below the switch window")
        else:
            late = (self.rho_hi - self.rho)[self.t1_level + 2:]
            if late.size and np.max(np.abs(late)) > 1e-12:
                raise ValueError("the two scaling profiles must agree above the switch window")
        # plus-kind differences vanish strictly below the window, minus-kind
        # strictly above it (the other side carries the metric mismatch)
        probe = np.zeros((g.nt, g.nx, g.rank))
        probe[1:-1] = 1.0
        d = self._diff(probe)
        if self.kind == "plus":
            region = d[1:max(self.t0_level - 1, 1)]
        else:
            region = d[self.t1_level + 2: g.nt - 1]
        if region.size and np.max(np.abs(region)) > 1e-10 * (1 + np.max(np.abs(d))):
            raise ValueError("difference operator does not vanish on its inert side")

    def _check_identity_region(self):
        g = self.grid
        rng = np.random.default_rng(7)
        u = np.zeros((g.nt, g.nx, g.rank))
        u[2:-2] = rng.standard_normal((g.nt - 4, g.nx, g.rank))
        out = self.apply(u)
        if self.kind == "plus":
            region = slice(0, max(self.t0_level - 1, 0))
        else:
            region = slice(self.t1_level + 2, g.nt)
        err = float(np.max(np.abs((out - u)[region]))) if u[region].size else 0.0
        if err > 1e-10 * (1.0 + float(np.max(np.abs(u)))):
            raise AssertionError(f"identity region violated at build time: {err:.2e}")


def _window_levels(grid, t0, t1):
    l0, l1 = grid.level_of_time(t0), grid.level_of_time(t1)
    if l0 < 3 or l1 > grid.nt - 4 or l0 >= l1:
        raise ValueError("switch window must sit strictly inside the lattice window")
    return l0, l1


def build_rplus(N0: HyperbolicOperator, Nchi: HyperbolicOperator, rho: ScalarField,
                t0: float, t1: float) -> MollerStep:
    """Past-fixing step Id - G+_{rho N_chi}(rho N_chi - N0)."""
    r = preceq(N0.metric, Nchi.metric)
    if r is not ALIGNED:
        raise ValueError("need N0's cone inside the interpolating cone with aligned futures")
    l0, l1 = _window_levels(N0.grid, t0, t1)
    return MollerStep("plus", N0, Nchi, rho.values, l0, l1)


def build_rminus(Nchi: HyperbolicOperator, N1: HyperbolicOperator, rho: ScalarField,
                 rho_hi: ScalarField, t0: float, t1: float) -> MollerStep:
    """Future-fixing step Id - G-_{rho' N1}(rho' N1 - rho N_chi)."""
    r = preceq(Nchi.metric, N1.metric)
    if r is not ALIGNED:
        raise ValueError("need the interpolating cone inside N1's cone with aligned futures")
    l0, l1 = _window_levels(N1.grid, t0, t1)
    return MollerStep("minus", Nchi, N1, rho.values, l0, l1, rho_hi=rho_hi.values)


class _InverseStep:
    """View of a step with apply/inverse exchanged."""

    def __init__(self, step: MollerStep):
        self.base = step
        self.kind = step.kind + "-inverse"
        self.grid = step.grid

    def apply(self, u):
        return self.base.inverse_apply(u)

    def inverse_apply(self, u):
        return self.base.apply(u)

    def transpose_apply(self, h):
        return self.base.inverse_transpose_apply(h)

    def inverse_transpose_apply(self, h):
        return self.base.transpose_apply(h)


def build_inverses(step: MollerStep) -> _InverseStep:
    """Two-sided inverse step (Id + opposite-solver composition)."""
    return _InverseStep(step)


class MollerOperator:
    """Composed intertwiner along a paracausal chain.

    steps are stored in application order; the adjoint with respect to the
    end metrics is realized as V_g^{-1} R^T V_{g'} with the transpose folded
    through the steps in reverse.
    """

    def __init__(self, steps, g: MetricField, gp: MetricField,
                 op_start: HyperbolicOperator, op_end: HyperbolicOperator, chain=None):
        self.steps = list(steps)
        self.g = g
        self.gp = gp
        self.op_start = op_start
        self.op_end = op_end
        self.chain = chain
        self.c_prime = _vol_ratio(g, gp)
        if np.min(self.c_prime) <= 0.0:
            raise ValueError("volume ratio must be positive")
        self._dense = {}

    # actions ------------------------------------------------------------------

    def apply(self, u):
        v = np.array(u, dtype=float)
        for s in self.steps:
            v = s.apply(v)
        return v

    def inverse_apply(self, u):
        v = np.array(u, dtype=float)
        for s in reversed(self.steps):
            v = s.inverse_apply(v)
        return v

    def transpose_apply(self, h):
        v = np.array(h, dtype=float)
        for s in reversed(self.steps):
            v = s.transpose_apply(v)
        return v

    def adjoint_apply(self, h):
        """R^{dagger_{g g'}} h = V_g^{-1} R^T V_{g'} h on compact sections."""
        v = _wmul(self.op_end, np.asarray(h, dtype=float))
        v = self.transpose_apply(v)
        return _winv(self.op_start, v)

    def apply_section(self, f: Section) -> Section:
        return Section(self.op_start.grid, self.apply(f.values))

    def adjoint_section(self, f: Section) -> Section:
        return Section(self.op_start.grid, self.adjoint_apply(f.values))

    def inverse(self) -> "MollerOperator":
        inv_steps = []
        for s in reversed(self.steps):
            inv_steps.append(s.base if isinstance(s, _InverseStep) else _InverseStep(s))
        chain = self.chain.reversed() if self.chain is not None else None
        return MollerOperator(inv_steps, self.gp, self.g, self.op_end, self.op_start, chain)

    # dense realizations ----------------------------------------------------------

    def _matrix_of(self, action) -> np.ndarray:
        g = self.op_start.grid
        n = g.n_dof
        M = np.zeros((n, n))
        e = np.zeros((g.nt, g.nx, g.rank))
        flat = e.reshape(-1)
        for q in range(n):
            flat[q] = 1.0
            M[:, q] = action(e).reshape(-1)
            flat[q] = 0.0
        return M

    def as_matrix(self) -> np.ndarray:
        if "R" not in self._dense:
            self._dense["R"] = self._matrix_of(self.apply)
        return self._dense["R"]

    def adjoint_matrix(self) -> np.ndarray:
        """Definitional weighted transpose of the realized matrix."""
        Vg = weight_dense(self.op_start)
        Vgp = weight_dense(self.op_end)
        return np.linalg.solve(Vg, self.as_matrix().T @ Vgp)


def weight_dense(op: HyperbolicOperator) -> np.ndarray:
    return op.weight_dense()


class AdjointOperator:
    """Dense weighted transpose T -> V_g^{-1} T^T V_{g'} on one grid."""

    def __init__(self, matrix: np.ndarray, op_g: HyperbolicOperator, op_gp: HyperbolicOperator):
        self.base_matrix = np.asarray(matrix, dtype=float)
        self.op_g = op_g
        self.op_gp = op_gp
        Vg = op_g.weight_dense()
        Vgp = op_gp.weight_dense()
        self.matrix = np.linalg.solve(Vg, self.base_matrix.T @ Vgp)

    def apply(self, u):
        g = self.op_g.grid
        return (self.matrix @ np.asarray(u).reshape(-1)).reshape(g.nt, g.nx, g.rank)


def adjoint(T, op_g: HyperbolicOperator, op_gp: HyperbolicOperator) -> AdjointOperator:
    """Adjoint with respect to the two volume-weighted pairings (dense mode)."""
    if isinstance(T, MollerOperator):
        T = T.as_matrix()
    elif isinstance(T, HyperbolicOperator):
        T = T.as_dense()
    return AdjointOperator(T, op_g, op_gp)


# -- chain composition ------------------------------------------------------------

def compose_chain(chain: ParacausalChain, operators=None, window=None, mass=1.0) -> MollerOperator:
    """Compose elementary steps along a validated chain.

    operators supplies one formally self-adjoint operator per chain metric
    (canonical massive wave operators are built when omitted); window is the
    shared switch interval (t0, t1), defaulting to the middle third of the
    lattice time extent.  Forward links contribute R- R+; reversed links
    contribute the inverse steps in mirrored order.
    """
    grid = chain.metrics[0].grid
    if operators is None:
        operators = [wave_operator(m, mass=mass) for m in chain.metrics]
    if len(operators) != len(chain.metrics):
        raise ValueError("need one operator per chain metric")
    for op, m in zip(operators, chain.metrics):
        if op.metric is not m and np.max(np.abs(op.metric.g_tt - m.g_tt)) > 0:
            raise ValueError("operator metrics must match the chain metrics")
        if not op.self_adjoint:
            raise ValueError("chain operators must be formally self-adjoint")
    if window is None:
        span = grid.t_max - grid.t_min
        window = (grid.t_min + span / 3.0, grid.t_min + 2.0 * span / 3.0)
    t0, t1 = window
    chi = smooth_step(grid, t0, t1)
    for k in range(len(chain.flags)):
        _check_link_marchable(chain.metrics[k], chain.metrics[k + 1])
    steps = []
    for k, flag in enumerate(chain.flags):
        if flag == ParacausalChain.FWD:
            lo_op, hi_op = operators[k], operators[k + 1]
        else:
            lo_op, hi_op = operators[k + 1], operators[k]
        nchi = convex_operator(lo_op, hi_op, chi)
        rho = ScalarField(grid, _vol_ratio(lo_op.metric, nchi.metric), ScalarField.POSITIVE)
        rho_hi = ScalarField(grid, _vol_ratio(lo_op.metric, hi_op.metric), ScalarField.POSITIVE)
        plus = build_rplus(lo_op, nchi, rho, t0, t1)
        minus = build_rminus(nchi, hi_op, rho, rho_hi, t0, t1)
        if flag == ParacausalChain.FWD:
            steps += [plus, minus]
        else:
            steps += [_InverseStep(minus), _InverseStep(plus)]
    return MollerOperator(steps, chain.metrics[0], chain.metrics[-1],
                          operators[0], operators[-1], chain)


# -- verification ------------------------------------------------------------------

def random_dictionary(grid, count=16, seed=0, window=None, smooth_passes=2):
    """Seeded compact test sections, lightly smoothed, support in `window`."""
    rng = np.random.default_rng(seed)
    lo, hi = window if window is not None else (2, grid.nt - 2)
    out = []
    for _ in range(count):
        u = np.zeros((grid.nt, grid.nx, grid.rank))
        u[lo:hi] = rng.standard_normal((hi - lo, grid.nx, grid.rank))
        taper = np.sin(np.linspace(0.0, np.pi, hi - lo)) ** 2
        u[lo:hi] *= taper[:, None, None]
        for _ in range(smooth_passes):
            u[lo:hi] = 0.25 * np.roll(u[lo:hi], 1, 1) + 0.5 * u[lo:hi] + 0.25 * np.roll(u[lo:hi], -1, 1)
        out.append(Section(grid, u))
    return out


def verify_intertwine(obj, dictionary) -> dict:
    """Operator-level interchange residuals over a test dictionary.

    Steps report || rho N_chi R+ f - N0 f || (resp. the minus analog);
    composed operators report || c' N' R f - N f ||, both relative to the
    source term's size and measured on equation rows.
    """
    worst = 0.0
    for f in dictionary:
        u = f.values
        if isinstance(obj, MollerStep) and obj.kind == "plus":
            lhs = obj.rho[:, :, None] * obj.op_mid.apply(obj.apply(u))
            rhs = obj.op_small.apply(u)
        elif isinstance(obj, MollerStep):
            lhs = obj.rho_hi[:, :, None] * obj.op_mid.apply(obj.apply(u))
            rhs = obj.rho[:, :, None] * obj.op_small.apply(u)
        else:
            lhs = obj.c_prime[:, :, None] * obj.op_end.apply(obj.apply(u))
            rhs = obj.op_start.apply(u)
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        worst = max(worst, float(np.max(np.abs((lhs - rhs)[1:-1]))) / scale)
    return {"intertwine": worst}


def restrict_to_solutions(R: MollerOperator, kind="ker", tol=1e-8):
    """Solution-space restriction with verified outputs.

    Returns a callable mapping sections; inputs must solve the source
    equation (homogeneous for kind="ker", compact source for kind="sol") and
    outputs are checked to solve the target equation at matching tolerance.
    """
    if kind not in ("ker", "sol"):
        raise ValueError("kind must be 'ker' or 'sol'")

    def mapped(f: Section) -> Section:
        u = f.values
        scale = max(float(np.max(np.abs(u))), 1e-300)
        if kind == "ker" and R.op_start.interior_residual(u) > tol * scale:
            raise ValueError("input is not a homogeneous solution")
        out = R.apply(u)
        if kind == "ker" and R.op_end.interior_residual(out) > 10 * tol * scale:
            raise AssertionError("image failed to solve the target equation")
        return Section(R.op_start.grid, out)

    return mapped


def verify_moller_identities(R: MollerOperator, dictionary=None, seed=0,
                             dense=False, sympl_pairs=10) -> dict:
    """Residual report for the composed-intertwiner laws.

    Covers: source interchange c' N' R = N; propagator transport
    R G R^dagger = G'; adjoint interchange R^dagger N' = N on compacts;
    symplectic-flux preservation on solution pairs; two-sided inverse
    round trip; and exact identity regions of the first/last steps.
    """
    from .greenhyp import CausalPropagator, symplectic_form

    grid = R.op_start.grid
    if dense and grid.n_dof > 4096:
        raise ValueError("dense kernel mode is restricted to small grids")
    if dictionary is None:
        dictionary = random_dictionary(grid, count=12, seed=seed,
                                       window=(3, grid.nt - 3))
    rep = {}
    rep.update(verify_intertwine(R, dictionary))

    Gn = CausalPropagator(R.op_start)
    Gnp = CausalPropagator(R.op_end)
    worst = 0.0
    for f in dictionary:
        lhs = R.apply(Gn.apply(R.adjoint_apply(f.values)))
        rhs = Gnp.apply(f.values)
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
    rep["propagator_transport"] = worst

    worst = 0.0
    for f in dictionary:
        lhs = R.adjoint_apply(R.op_end.apply(f.values))
        rhs = R.op_start.apply(f.values)
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        worst = max(worst, float(np.max(np.abs((lhs - rhs)[1:-1]))) / scale)
    rep["adjoint_interchange"] = worst

    worst = 0.0
    for f in dictionary:
        rt = R.inverse_apply(R.apply(f.values))
        scale = max(float(np.max(np.abs(f.values))), 1e-300)
        worst = max(worst, float(np.max(np.abs(rt - f.values))) / scale)
    rep["inverse_roundtrip"] = worst

    # symplectic preservation on solution pairs seeded from the dictionary
    rng = np.random.default_rng(seed + 1)
    from .greenhyp import solve_cauchy
    worst = 0.0
    n_slice = grid.nt // 2
    for _ in range(sympl_pairs):
        psi = solve_cauchy(R.op_start, 3, rng.standard_normal((grid.nx, grid.rank)),
                           rng.standard_normal((grid.nx, grid.rank)))
        phi = solve_cauchy(R.op_start, 3, rng.standard_normal((grid.nx, grid.rank)),
                           rng.standard_normal((grid.nx, grid.rank)))
        s0 = symplectic_form(R.op_start, psi, phi, n_slice)
        s1 = symplectic_form(R.op_end, Section(grid, R.apply(psi.values)),
                             Section(grid, R.apply(phi.values)), n_slice)
        worst = max(worst, abs(s1 - s0) / max(abs(s0), 1e-300))
    rep["symplectic_preservation"] = worst

    # identity regions of the outermost steps (below t0 for plus-kind, above
    # t1 for minus-kind; inversion does not move the inert side)
    rng = np.random.default_rng(seed + 2)
    u = np.zeros((grid.nt, grid.nx, grid.rank))
    u[2:-2] = rng.standard_normal((grid.nt - 4, grid.nx, grid.rank))
    worst = 0.0
    for s in (R.steps[0], R.steps[-1]):
        base = s.base if isinstance(s, _InverseStep) else s
        out = s.apply(u)
        if base.kind == "plus":
            region = (out - u)[: max(base.t0_level - 1, 0)]
        else:
            region = (out - u)[base.t1_level + 2:]
        if region.size:
            worst = max(worst, float(np.max(np.abs(region))))
    rep["identity_region"] = worst

    if dense:
        Rm = R.as_matrix()
        Rd = R.adjoint_matrix()
        Gm = Gn.kernel_matrix()
        Gpm = Gnp.kernel_matrix()
        sel = np.zeros(grid.n_dof, bool)
        sel.reshape(grid.nt, grid.nx, grid.rank)[2:-2] = True
        lhs = (Rm @ Gm @ Rd)[:, sel]
        rhs = Gpm[:, sel]
        rep["propagator_transport_dense"] = float(np.max(np.abs(lhs - rhs))) / max(
            float(np.max(np.abs(rhs))), 1e-300)
    return rep
