"""Convex QP relaxation of the MIOCP for a partial integer assignment.

A PartialAssignment fixes the integer decision of a subset of stages;
the remaining stages are relaxed onto the per-channel interval hull of
their integer sets.  build_relaxation stacks the resulting convex QP
over the decision vector (x(0..N), u(0..N-1), relaxed v entries), and
solve_qp runs a primal-dual interior-point method on it.
"""

from __future__ import annotations

import os
import weakref
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import MiocpInstance, Trajectory

_INF = float("inf")

# set TMIQP_IPM_DEBUG=1 to print per-iteration interior-point residuals
_IPM_DEBUG = bool(os.environ.get("TMIQP_IPM_DEBUG"))

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"


class NonconvexRejected(ValueError):
    """The reduced Hessian of the relaxation is not positive semidefinite."""


@dataclass(frozen=True)
class PartialAssignment:
    """Per-stage integer decision: a fixed integer vector or None (relaxed)."""

    entries: tuple

    def __post_init__(self):
        norm = tuple(
            None if e is None else tuple(int(round(c)) for c in np.atleast_1d(e))
            for e in self.entries
        )
        object.__setattr__(self, "entries", norm)

    @classmethod
    def all_relaxed(cls, N):
        return cls(entries=(None,) * N)

    def __len__(self):
        return len(self.entries)

    @property
    def fixed_stages(self):
        return tuple(k for k, e in enumerate(self.entries) if e is not None)

    @property
    def depth(self):
        """Length of the front-contiguous fixed prefix."""
        d = 0
        for e in self.entries:
            if e is None:
                break
            d += 1
        return d

    def fix(self, k, value):
        """Return a copy with stage k fixed to the given integer vector."""
        entries = list(self.entries)
        entries[k] = tuple(int(c) for c in np.atleast_1d(value))
        return PartialAssignment(entries=tuple(entries))

    def extends(self, other) -> bool:
        """True if this assignment fixes a superset of other's entries with
        identical values."""
        if len(self) != len(other):
            return False
        return all(o is None or o == s
                   for s, o in zip(self.entries, other.entries))

    def check_channels(self, v_sets):
        for k, e in enumerate(self.entries):
            if e is None:
                continue
            if len(e) != len(v_sets):
                raise ValueError(f"stage {k}: fixed vector length != n_v")
            for j, val in enumerate(e):
                if val not in v_sets[j]:
                    raise ValueError(
                        f"stage {k}: value {val} not in channel set {v_sets[j]}")


@dataclass
class QPData:
    """Stacked convex QP: minimize 0.5 z'Hz + h'z + const subject to
    A_eq z = b_eq and G z <= g."""

    H: sp.csr_matrix
    h: np.ndarray
    const: float
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    G: sp.csr_matrix
    g: np.ndarray
    n_var: int
    # bookkeeping for trajectory reconstruction
    inst: MiocpInstance = None
    pa: PartialAssignment = None
    x_offset: int = 0
    u_offset: int = 0
    v_offsets: dict = field(default_factory=dict)
    trivially_infeasible: bool = False


@dataclass
class RelaxedSolution:
    status: str
    objective: float
    traj: Trajectory
    kkt_residual: float
    iterations: int = 0
    z: np.ndarray = None
    primal_residual: float = float("nan")


def build_relaxation(inst: MiocpInstance, pa: PartialAssignment) -> QPData:
    """Assemble the convex QP relaxation for a partial assignment.

    Fixed stages have v substituted as constants into dynamics, costs and
    mixed rows; relaxed stages carry continuous v variables bounded by the
    channel hull.
    """
    if len(pa) != inst.N:
        raise ValueError(f"assignment length {len(pa)} != horizon {inst.N}")
    pa.check_channels(inst.constraints.v_sets)

    N, n_x, n_u, n_v = inst.N, inst.n_x, inst.n_u, inst.n_v
    d, cs = inst.dyn, inst.constraints
    relaxed = [k for k in range(N) if pa.entries[k] is None]

    x_off = 0
    u_off = (N + 1) * n_x
    v_offsets = {}
    off = u_off + N * n_u
    for k in relaxed:
        v_offsets[k] = off
        off += n_v
    n_var = off

    def xi(k):
        return x_off + k * n_x

    def ui(k):
        return u_off + k * n_u

    # ---- cost -------------------------------------------------------------
    h_rows, h_cols, h_vals = [], [], []
    h = np.zeros(n_var)
    const = 0.0

    def add_h_block(r0, c0, M):
        nz = np.nonzero(M)
        if nz[0].size:
            h_rows.append(nz[0] + r0)
            h_cols.append(nz[1] + c0)
            h_vals.append(M[nz])

    for k in range(N):
        sc = inst.stage_costs[k]
        Ruu = sc.R[:n_u, :n_u]
        Ruv = sc.R[:n_u, n_u:]
        Rvv = sc.R[n_u:, n_u:]
        ru, rv = sc.r[:n_u], sc.r[n_u:]
        add_h_block(xi(k), xi(k), 2.0 * sc.Q)
        h[xi(k):xi(k) + n_x] += sc.q
        add_h_block(ui(k), ui(k), 2.0 * Ruu)
        h[ui(k):ui(k) + n_u] += ru
        const += sc.constant
        if pa.entries[k] is None:
            vo = v_offsets[k]
            add_h_block(vo, vo, 2.0 * Rvv)
            add_h_block(ui(k), vo, 2.0 * Ruv)
            add_h_block(vo, ui(k), 2.0 * Ruv.T)
            h[vo:vo + n_v] += rv
        else:
            vk = np.asarray(pa.entries[k], dtype=float)
            h[ui(k):ui(k) + n_u] += 2.0 * Ruv @ vk
            const += float(vk @ Rvv @ vk + rv @ vk)
    tc = inst.terminal_cost
    add_h_block(xi(N), xi(N), 2.0 * tc.Q)
    h[xi(N):xi(N) + n_x] += tc.q
    const += tc.constant
    if h_rows:
        H = sp.csr_matrix((np.concatenate(h_vals),
                           (np.concatenate(h_rows), np.concatenate(h_cols))),
                          shape=(n_var, n_var))
    else:
        H = sp.csr_matrix((n_var, n_var))

    # ---- equalities: x(0) = x0 and the dynamics ----------------------------
    rows, cols, vals = [], [], []
    b_eq = np.zeros(n_x + N * n_x)
    for i in range(n_x):
        rows.append(i)
        cols.append(xi(0) + i)
        vals.append(1.0)
    b_eq[:n_x] = inst.x0
    for k in range(N):
        r0 = n_x + k * n_x
        for i in range(n_x):
            rows.append(r0 + i)
            cols.append(xi(k + 1) + i)
            vals.append(1.0)
        _append_block(rows, cols, vals, r0, xi(k), -d.A)
        _append_block(rows, cols, vals, r0, ui(k), -d.B1)
        rhs = d.c.copy()
        if pa.entries[k] is None:
            _append_block(rows, cols, vals, r0, v_offsets[k], -d.B2)
        else:
            rhs = rhs + d.B2 @ np.asarray(pa.entries[k], dtype=float)
        b_eq[r0:r0 + n_x] = rhs
    A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(len(b_eq), n_var))

    # ---- inequalities -------------------------------------------------------
    # All single-variable rows (boxes and one-coefficient mixed rows) fold
    # into per-variable bound arrays; multi-coefficient rows are grouped by
    # direction so that parallel bounds collapse to the tightest one.  In
    # both cases an opposing pair with equal bounds becomes an equality row;
    # leaving an implicit equality as two inequalities makes the multipliers
    # non-unique and the interior-point duals diverge.
    var_lo = np.full(n_var, -_INF)
    var_hi = np.full(n_var, _INF)
    trivially_infeasible = False

    def clip_var(col, lo, hi):
        if lo > var_lo[col]:
            var_lo[col] = lo
        if hi < var_hi[col]:
            var_hi[col] = hi

    def add_box(base, lo, hi):
        n = len(lo)
        np.maximum(var_lo[base:base + n], lo, out=var_lo[base:base + n])
        np.minimum(var_hi[base:base + n], hi, out=var_hi[base:base + n])

    for k in range(N + 1):
        add_box(xi(k), cs.x_lo, cs.x_hi)
    if inst.x0_lo is not None:
        add_box(xi(0), inst.x0_lo, inst.x0_hi)
    for k in range(N):
        add_box(ui(k), cs.u_lo, cs.u_hi)
    hull_lo, hull_hi = cs.v_hull()
    for k in relaxed:
        add_box(v_offsets[k], hull_lo, hull_hi)

    groups = {}

    def add_row(coeffs, lo, hi):
        # coeffs: sorted tuple of (col, val); lo/hi may be infinite
        if not coeffs:
            nonlocal trivially_infeasible
            if hi < 0.0 or lo > 0.0:
                trivially_infeasible = True
            return
        if len(coeffs) == 1:
            col, val = coeffs[0]
            if val > 0.0:
                clip_var(col, lo / val, hi / val)
            else:
                clip_var(col, hi / val, lo / val)
            return
        sign = 1.0 if coeffs[0][1] > 0.0 else -1.0
        key = coeffs if sign > 0.0 else tuple((c, -v) for c, v in coeffs)
        bounds = groups.get(key)
        if bounds is None:
            bounds = groups[key] = [-_INF, _INF]
        if sign > 0.0:
            bounds[0] = max(bounds[0], lo)
            bounds[1] = min(bounds[1], hi)
        else:
            bounds[0] = max(bounds[0], -hi)
            bounds[1] = min(bounds[1], -lo)

    mixed_coeffs = _mixed_row_coeffs(inst)
    for k in range(N):
        for (cx, cu, cv), row in zip(mixed_coeffs, cs.mixed):
            coeffs = [(xi(k) + i, val) for i, val in cx]
            coeffs += [(ui(k) + i, val) for i, val in cu]
            lo, hi = row.lo, row.hi
            if pa.entries[k] is None:
                coeffs += [(v_offsets[k] + i, val) for i, val in cv]
            else:
                shift = sum(val * pa.entries[k][i] for i, val in cv)
                lo, hi = lo - shift, hi - shift
            add_row(tuple(sorted(coeffs)), lo, hi)

    g_rows, g_cols, g_vals, g_rhs = [], [], [], []
    eq_extra = []

    def emit(coeffs, ub):
        r = len(g_rhs)
        for c, v in coeffs:
            g_rows.append(r)
            g_cols.append(c)
            g_vals.append(v)
        g_rhs.append(ub)

    for key, (lo, ub) in groups.items():
        if np.isfinite(ub) and np.isfinite(lo):
            if lo > ub + 1e-12 * (1.0 + abs(ub)):
                trivially_infeasible = True
                continue
            if ub - lo <= 1e-12 * (1.0 + abs(ub)):
                eq_extra.append((key, 0.5 * (ub + lo)))
                continue
        if np.isfinite(ub):
            emit(key, ub)
        if np.isfinite(lo):
            emit(tuple((c, -v) for c, v in key), -lo)

    # variable bounds: contradictions, pinned values, then plain box rows
    tol_eq = 1e-12 * (1.0 + np.abs(var_hi, where=np.isfinite(var_hi),
                                   out=np.zeros(n_var)))
    both = np.isfinite(var_lo) & np.isfinite(var_hi)
    if np.any(var_lo[both] > var_hi[both] + tol_eq[both]):
        trivially_infeasible = True
    pinned = both & (var_hi - var_lo <= tol_eq)
    for col in np.nonzero(pinned)[0]:
        eq_extra.append((((int(col), 1.0),),
                         0.5 * (var_lo[col] + var_hi[col])))
    free = ~pinned
    up_cols = np.nonzero(np.isfinite(var_hi) & free)[0]
    lo_cols = np.nonzero(np.isfinite(var_lo) & free)[0]
    r0 = len(g_rhs)
    box_rows = np.arange(r0, r0 + up_cols.size + lo_cols.size)
    box_cols = np.concatenate([up_cols, lo_cols])
    box_vals = np.concatenate([np.ones(up_cols.size), -np.ones(lo_cols.size)])
    box_rhs = np.concatenate([var_hi[up_cols], -var_lo[lo_cols]])

    if eq_extra:
        r0 = len(b_eq)
        b_eq = np.concatenate([b_eq, [rhs for _, rhs in eq_extra]])
        for key, _ in eq_extra:
            for c, v in key:
                rows.append(r0)
                cols.append(c)
                vals.append(v)
            r0 += 1
        A_eq = sp.csr_matrix((vals, (rows, cols)),
                             shape=(len(b_eq), n_var))

    G = sp.csr_matrix((np.concatenate([np.asarray(g_vals), box_vals]),
                       (np.concatenate([np.asarray(g_rows, dtype=int),
                                        box_rows]),
                        np.concatenate([np.asarray(g_cols, dtype=int),
                                        box_cols]))),
                      shape=(len(g_rhs) + box_rows.size, n_var))
    g_rhs = np.concatenate([np.asarray(g_rhs, dtype=float), box_rhs])

    return QPData(H=H, h=h, const=const, A_eq=A_eq, b_eq=b_eq,
                  G=G, g=g_rhs, n_var=n_var,
                  inst=inst, pa=pa, x_offset=x_off, u_offset=u_off,
                  v_offsets=dict(v_offsets),
                  trivially_infeasible=trivially_infeasible)


_MIXED_COEFF_CACHE = {}


def _mixed_row_coeffs(inst):
    """Nonzero (index, value) tuples of each mixed row, cached per instance
    since every node relaxation walks the same rows."""
    key = id(inst)
    hit = _MIXED_COEFF_CACHE.get(key)
    if hit is not None and hit[0]() is inst:
        return hit[1]

    def nz(vec):
        return tuple((i, float(val)) for i, val in enumerate(vec)
                     if val != 0.0)

    coeffs = tuple((nz(row.gx), nz(row.gu), nz(row.gv))
                   for row in inst.constraints.mixed)
    if len(_MIXED_COEFF_CACHE) > 256:
        _MIXED_COEFF_CACHE.clear()
    _MIXED_COEFF_CACHE[key] = (weakref.ref(inst), coeffs)
    return coeffs


def _append_block(rows, cols, vals, r0, c0, M):
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            if M[i, j] != 0.0:
                rows.append(r0 + i)
                cols.append(c0 + j)
                vals.append(M[i, j])


_PSD_FLAG_CACHE = {}


def _instance_psd_flags(inst):
    """(Q blocks PSD, full R blocks PSD, upper-left R blocks PSD), cached
    per instance object since node relaxations reuse the same costs."""
    key = id(inst)
    hit = _PSD_FLAG_CACHE.get(key)
    if hit is not None and hit[0]() is inst:
        return hit[1]

    def psd(M):
        return M.size == 0 or np.linalg.eigvalsh(M)[0] >= -1e-9

    n_u = inst.n_u
    q_psd = psd(inst.terminal_cost.Q) and \
        all(psd(sc.Q) for sc in inst.stage_costs)
    r_psd = all(psd(sc.R) for sc in inst.stage_costs)
    ruu_psd = r_psd or all(psd(sc.R[:n_u, :n_u]) for sc in inst.stage_costs)
    flags = (q_psd, r_psd, ruu_psd)
    if len(_PSD_FLAG_CACHE) > 256:
        _PSD_FLAG_CACHE.clear()
    _PSD_FLAG_CACHE[key] = (weakref.ref(inst), flags)
    return flags


def _check_convexity(qp: QPData):
    """Reject QPs whose reduced Hessian is not PSD.

    Cheap sufficient test first: H itself PSD.  The cost assembly makes H
    block diagonal over the groups {x(k)} and {(u(k), v(k))}, so PSD-ness
    of the small per-stage blocks implies PSD-ness of H.  Only if a block
    is indefinite do we project onto the nullspace of the equality
    constraints, which needs a dense SVD and is O(n_var^3).
    """
    inst, pa = qp.inst, qp.pa
    if inst is not None and pa is not None:
        q_psd, r_psd, ruu_psd = _instance_psd_flags(inst)
        has_relaxed = any(e is None for e in pa.entries)
        has_fixed = any(e is not None for e in pa.entries)
        if q_psd and (r_psd or not has_relaxed) and (ruu_psd or not has_fixed):
            return
    import scipy.linalg
    Hd = qp.H.toarray()
    if np.linalg.eigvalsh(0.5 * (Hd + Hd.T))[0] >= -1e-9:
        return
    Z = scipy.linalg.null_space(qp.A_eq.toarray())
    if Z.size == 0:
        return
    red = Z.T @ Hd @ Z
    if np.linalg.eigvalsh(0.5 * (red + red.T))[0] < -1e-9:
        raise NonconvexRejected(
            "reduced Hessian has negative eigenvalues; relaxation not convex")


def _extract_trajectory(qp: QPData, z):
    inst, pa = qp.inst, qp.pa
    if inst is None or pa is None:
        return None
    N, n_x, n_u, n_v = inst.N, inst.n_x, inst.n_u, inst.n_v
    x = z[qp.x_offset:qp.x_offset + (N + 1) * n_x].reshape(N + 1, n_x)
    u = z[qp.u_offset:qp.u_offset + N * n_u].reshape(N, n_u)
    v = np.zeros((N, n_v))
    for k in range(N):
        if pa.entries[k] is None:
            off = qp.v_offsets[k]
            v[k] = z[off:off + n_v]
        else:
            v[k] = np.asarray(pa.entries[k], dtype=float)
    return Trajectory(x=x, u=u, v=v)


def solve_qp(qp: QPData, tol: float = 1e-8, max_iter: int = 100) -> RelaxedSolution:
    """Primal-dual interior-point solve of the stacked QP.

    Mehrotra predictor-corrector path following.  Status is
    - optimal: primal/dual residuals and complementarity below tol,
    - infeasible: the primal residual stalls above 1e-6 while the duality
      measure has fallen below 1e-10 (or the dual iterates diverge with a
      Farkas-like certificate),
    - iteration_limit: neither test fired within max_iter iterations.
    """
    if qp.trivially_infeasible:
        return RelaxedSolution(status=INFEASIBLE, objective=_INF, traj=None,
                               kkt_residual=_INF, iterations=0)
    _check_convexity(qp)

    A, b = qp.A_eq, qp.b_eq
    G, g = qp.G, qp.g
    n, me, mi = qp.n_var, b.shape[0], g.shape[0]

    if mi == 0:
        return _solve_equality_qp(qp, tol)

    # dense fast path for small KKT systems; sparse LU for large ones
    dense = (n + me) <= 400
    if dense:
        import scipy.linalg as sla
        Hc = qp.H.toarray()
        Ac = A.toarray()
        Gc = G.toarray()
        GT, AT = Gc.T, Ac.T

        def factor(M):
            # IPM KKT matrices get very ill-conditioned near convergence;
            # only exact breakdown counts as singular here
            fac = sla.lu_factor(M, check_finite=False)
            diag = np.diag(fac[0])
            if not np.all(np.isfinite(diag)) or np.any(diag == 0.0):
                raise RuntimeError("singular KKT matrix")
            return fac

        def backsolve(fac, rhs):
            return sla.lu_solve(fac, rhs, check_finite=False)

        def kkt_matrix(GDG, delta):
            K = np.zeros((n + me, n + me))
            K[:n, :n] = Hc + GDG
            K[:n, :n] += delta * np.eye(n)
            if me:
                K[:n, n:] = AT
                K[n:, :n] = Ac
                K[n:, n:] = -delta * np.eye(me)
            return K
    else:
        Hc = sp.csc_matrix(qp.H)
        Ac = sp.csc_matrix(A)
        Gc = sp.csc_matrix(G)
        GT = Gc.T.tocsc()
        AT = Ac.T.tocsc()

        def factor(M):
            return spla.splu(sp.csc_matrix(M))

        def backsolve(fac, rhs):
            return fac.solve(rhs)

        def kkt_matrix(GDG, delta):
            if me:
                return sp.bmat([[Hc + GDG + delta * sp.eye(n), AT],
                                [Ac, -delta * sp.eye(me)]], format="csc")
            return sp.csc_matrix(Hc + GDG + delta * sp.eye(n))

    # starting point: regularized equality-constrained solve, slacks shifted
    try:
        zero_D = np.zeros((n, n)) if dense else sp.csr_matrix((n, n))
        fac0 = factor(kkt_matrix(zero_D, 1e-8))
        zy = backsolve(fac0, np.concatenate([-qp.h, b]))
        z = zy[:n]
    except (RuntimeError, ValueError):
        z = np.zeros(n)
    s0 = g - Gc @ z
    shift = max(0.0, -1.5 * s0.min()) + 1.0
    s = s0 + shift
    lam = np.ones(mi)
    y = np.zeros(me)

    scale_h = 1.0 + np.abs(qp.h).max(initial=0.0)
    scale_b = 1.0 + np.abs(b).max(initial=0.0)
    scale_g = 1.0 + np.abs(g).max(initial=0.0)

    best_prim = _INF
    stall = 0
    status = ITERATION_LIMIT
    it = 0
    for it in range(1, max_iter + 1):
        r_d = Hc @ z + qp.h + AT @ y + GT @ lam
        r_pe = Ac @ z - b
        r_pi = Gc @ z + s - g
        mu = float(s @ lam) / mi
        prim = max(np.abs(r_pe).max(initial=0.0) / scale_b,
                   np.abs(r_pi).max(initial=0.0) / scale_g)
        dual = np.abs(r_d).max(initial=0.0) / scale_h

        if _IPM_DEBUG:
            print(f"it={it} prim={prim:.3e} dual={dual:.3e} mu={mu:.3e}")
        if prim <= tol and dual <= tol and mu <= tol:
            status = OPTIMAL
            break

        # infeasibility heuristics (documented in the docstring)
        if prim < best_prim * 0.9999:
            best_prim = prim
            stall = 0
        else:
            stall += 1
        if mu < 1e-10 and prim > 1e-6:
            status = INFEASIBLE
            break
        dual_norm = np.abs(lam).max(initial=0.0) + np.abs(y).max(initial=0.0)
        if dual_norm > 1e10 and prim > 1e-6:
            status = INFEASIBLE
            break
        if stall > 15 and prim > 1e-6 and mu < 1e-6:
            status = INFEASIBLE
            break

        D = lam / np.maximum(s, 1e-300)
        if dense:
            GDG = (GT * D) @ Gc
        else:
            GDG = GT @ sp.diags(D) @ Gc
        delta = 1e-10
        for _ in range(6):
            try:
                fac = factor(kkt_matrix(GDG, delta))
                break
            except RuntimeError:
                delta = max(delta * 1e3, 1e-8)
        else:
            status = ITERATION_LIMIT
            break

        def kkt_step(rc):
            # Newton step targeting s*lam == rc after elimination of
            # (ds, dlam); see the standard augmented-system reduction.
            rhs_z = -r_d + GT @ ((s * lam - rc - lam * r_pi)
                                 / np.maximum(s, 1e-300))
            if me:
                sol = backsolve(fac, np.concatenate([rhs_z, -r_pe]))
                dz, dy = sol[:n], sol[n:]
            else:
                dz, dy = backsolve(fac, rhs_z), np.zeros(0)
            ds = -r_pi - Gc @ dz
            dlam = (rc - lam * ds) / np.maximum(s, 1e-300) - lam
            return dz, dy, ds, dlam

        # predictor (affine scaling)
        dz_a, dy_a, ds_a, dlam_a = kkt_step(np.zeros(mi))
        a_p = _max_step(s, ds_a)
        a_d = _max_step(lam, dlam_a)
        mu_aff = float((s + a_p * ds_a) @ (lam + a_d * dlam_a)) / mi
        sigma = (max(mu_aff, 0.0) / mu) ** 3 if mu > 0 else 0.1

        # corrector
        rc = sigma * mu - ds_a * dlam_a
        dz, dy, ds, dlam = kkt_step(rc)
        a_p = min(1.0, 0.995 * _max_step(s, ds))
        a_d = min(1.0, 0.995 * _max_step(lam, dlam))
        z = z + a_p * dz
        s = s + a_p * ds
        y = y + a_d * dy
        lam = lam + a_d * dlam

    r_d = Hc @ z + qp.h + AT @ y + GT @ lam
    r_pe = Ac @ z - b
    r_pi = np.maximum(Gc @ z - g, 0.0)
    kkt = max(np.abs(r_d).max(initial=0.0),
              np.abs(r_pe).max(initial=0.0),
              r_pi.max(initial=0.0),
              abs(float(s @ lam)) / mi)
    prim_res = max(np.abs(r_pe).max(initial=0.0), r_pi.max(initial=0.0))

    if status == OPTIMAL:
        obj = float(0.5 * z @ (Hc @ z) + qp.h @ z + qp.const)
        return RelaxedSolution(status=OPTIMAL, objective=obj,
                               traj=_extract_trajectory(qp, z),
                               kkt_residual=float(kkt), iterations=it, z=z,
                               primal_residual=float(prim_res))
    if status == INFEASIBLE:
        return RelaxedSolution(status=INFEASIBLE, objective=_INF, traj=None,
                               kkt_residual=float(kkt), iterations=it,
                               primal_residual=float(prim_res))
    obj = float(0.5 * z @ (Hc @ z) + qp.h @ z + qp.const)
    return RelaxedSolution(status=ITERATION_LIMIT, objective=obj,
                           traj=_extract_trajectory(qp, z),
                           kkt_residual=float(kkt), iterations=it, z=z,
                           primal_residual=float(prim_res))


def _max_step(x, dx):
    """Largest alpha in (0, 1] with x + alpha*dx >= 0."""
    neg = dx < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-x[neg] / dx[neg])))


def _solve_equality_qp(qp: QPData, tol):
    """No inequalities: one symmetric KKT solve."""
    n, me = qp.n_var, qp.b_eq.shape[0]
    K = sp.bmat([[sp.csc_matrix(qp.H) + 1e-12 * sp.eye(n), qp.A_eq.T],
                 [qp.A_eq, -1e-12 * sp.eye(me)]], format="csc")
    sol = spla.splu(K).solve(np.concatenate([-qp.h, qp.b_eq]))
    z, y = sol[:n], sol[n:]
    r_d = qp.H @ z + qp.h + qp.A_eq.T @ y
    r_p = qp.A_eq @ z - qp.b_eq
    kkt = max(np.abs(r_d).max(initial=0.0), np.abs(r_p).max(initial=0.0))
    obj = float(0.5 * z @ (qp.H @ z) + qp.h @ z + qp.const)
    status = OPTIMAL if kkt <= max(tol, 1e-7) * (1.0 + np.abs(qp.h).max(initial=0.0)) \
        else ITERATION_LIMIT
    return RelaxedSolution(status=status, objective=obj,
                           traj=_extract_trajectory(qp, z),
                           kkt_residual=float(kkt), iterations=1, z=z,
                           primal_residual=float(np.abs(r_p).max(initial=0.0)))


def is_integer_feasible(sol: RelaxedSolution, inst: MiocpInstance,
                        tol: float = 1e-6) -> bool:
    """True iff every v(k) component is within tol of a member of its
    channel set."""
    if sol.status != OPTIMAL:
        raise ValueError("integer feasibility is only defined for optimal solutions")
    v_sets = inst.constraints.v_sets
    for k in range(inst.N):
        for j, ch in enumerate(v_sets):
            val = sol.traj.v[k, j]
            if min(abs(val - m) for m in ch) > tol:
                return False
    return True


def round_to_channels(traj: Trajectory, inst: MiocpInstance) -> Trajectory:
    """Snap each v component to the nearest member of its channel set."""
    v = traj.v.copy()
    for j, ch in enumerate(inst.constraints.v_sets):
        members = np.asarray(ch, dtype=float)
        for k in range(v.shape[0]):
            v[k, j] = members[np.argmin(np.abs(members - v[k, j]))]
    return Trajectory(x=traj.x, u=traj.u, v=v)
