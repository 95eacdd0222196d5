"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Two kernels dominate runtime: the link-by-wall segment crossing test used by
the map-based LOS resolver, and the breakpoint scan of the dual-slope fit.
Each has a ``*_numba`` and a ``*_numpy`` implementation with identical
semantics. The public names (:func:`crossing_matrix`, :func:`scan_breakpoints`)
dispatch to the numba version unless numba is missing or the environment
variable ``INHCHANNEL_DISABLE_NUMBA`` is set to a truthy value.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a soft dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _env_disabled() -> bool:
    return os.environ.get("INHCHANNEL_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _env_disabled()

# Normal-equation matrices with a larger condition number are treated as singular.
COND_LIMIT = 1e12


# ---------------------------------------------------------------------------
# Segment crossing
# ---------------------------------------------------------------------------


@njit(cache=True)
def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(cache=True)
def _within(ax, ay, bx, by, px, py):
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


@njit(cache=True)
def _crossing_matrix_numba(p, q, walls):
    n_links = p.shape[0]
    n_walls = walls.shape[0]
    hit = np.zeros((n_links, n_walls), dtype=np.bool_)
    tpar = np.full((n_links, n_walls), np.nan)
    for i in range(n_links):
        px, py = p[i, 0], p[i, 1]
        qx, qy = q[i, 0], q[i, 1]
        rx, ry = qx - px, qy - py
        rr = rx * rx + ry * ry
        for j in range(n_walls):
            ax, ay, bx, by = walls[j, 0], walls[j, 1], walls[j, 2], walls[j, 3]
            o1 = _orient(px, py, qx, qy, ax, ay)
            o2 = _orient(px, py, qx, qy, bx, by)
            o3 = _orient(ax, ay, bx, by, px, py)
            o4 = _orient(ax, ay, bx, by, qx, qy)
            crossed = ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and (
                (o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)
            )
            if not crossed:
                crossed = (
                    (o1 == 0 and _within(px, py, qx, qy, ax, ay))
                    or (o2 == 0 and _within(px, py, qx, qy, bx, by))
                    or (o3 == 0 and _within(ax, ay, bx, by, px, py))
                    or (o4 == 0 and _within(ax, ay, bx, by, qx, qy))
                )
            if not crossed:
                continue
            hit[i, j] = True
            sx, sy = bx - ax, by - ay
            denom = rx * sy - ry * sx
            if denom != 0.0:
                t = ((ax - px) * sy - (ay - py) * sx) / denom
            elif rr > 0.0:
                ta = ((ax - px) * rx + (ay - py) * ry) / rr
                tb = ((bx - px) * rx + (by - py) * ry) / rr
                t = min(ta, tb)
            else:
                t = 0.0
            tpar[i, j] = min(max(t, 0.0), 1.0)
    return hit, tpar


def _crossing_matrix_numpy(p, q, walls):
    px, py = p[:, 0:1], p[:, 1:2]
    qx, qy = q[:, 0:1], q[:, 1:2]
    ax, ay, bx, by = (walls[None, :, k] for k in range(4))

    def orient(x0, y0, x1, y1, x2, y2):
        return (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)

    def within(x0, y0, x1, y1, xp, yp):
        return (
            (np.minimum(x0, x1) <= xp)
            & (xp <= np.maximum(x0, x1))
            & (np.minimum(y0, y1) <= yp)
            & (yp <= np.maximum(y0, y1))
        )

    o1 = orient(px, py, qx, qy, ax, ay)
    o2 = orient(px, py, qx, qy, bx, by)
    o3 = orient(ax, ay, bx, by, px, py)
    o4 = orient(ax, ay, bx, by, qx, qy)
    proper = (np.sign(o1) * np.sign(o2) < 0) & (np.sign(o3) * np.sign(o4) < 0)
    touch = (
        ((o1 == 0) & within(px, py, qx, qy, ax, ay))
        | ((o2 == 0) & within(px, py, qx, qy, bx, by))
        | ((o3 == 0) & within(ax, ay, bx, by, px, py))
        | ((o4 == 0) & within(ax, ay, bx, by, qx, qy))
    )
    hit = proper | touch

    rx, ry = qx - px, qy - py
    sx, sy = bx - ax, by - ay
    denom = rx * sy - ry * sx
    rr = rx * rx + ry * ry
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cross = ((ax - px) * sy - (ay - py) * sx) / denom
        ta = ((ax - px) * rx + (ay - py) * ry) / rr
        tb = ((bx - px) * rx + (by - py) * ry) / rr
    t_col = np.where(rr > 0, np.minimum(ta, tb), 0.0)
    t = np.where(denom != 0, t_cross, t_col)
    t = np.clip(t, 0.0, 1.0)
    return hit, np.where(hit, t, np.nan)


def crossing_matrix(p, q, walls):
    """Closed segment intersection test of every link against every wall.

    Parameters
    ----------
    p, q : (L, 2) arrays
        Link endpoints in plan view.
    walls : (W, 4) array
        Wall segments as ``x1, y1, x2, y2``.

    Returns
    -------
    hit : (L, W) bool array
        True where the link touches or crosses the wall.
    t : (L, W) float array
        Position of the first contact along ``p -> q`` in ``[0, 1]``; NaN where
        there is no hit.
    """
    p = np.ascontiguousarray(p, dtype=np.float64).reshape(-1, 2)
    q = np.ascontiguousarray(q, dtype=np.float64).reshape(-1, 2)
    walls = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 4)
    if USE_NUMBA:
        return _crossing_matrix_numba(p, q, walls)
    return _crossing_matrix_numpy(p, q, walls)


# ---------------------------------------------------------------------------
# Dual-slope breakpoint scan
# ---------------------------------------------------------------------------


@njit(cache=True)
def _scan_breakpoints_numba(D, y, G1, G2, C, dbp, min_side):
    # Sweep breakpoints in ascending order, moving samples from the right to
    # the left segment as they pass. A right-side design row is affine in the
    # breakpoint, x = u + b v with u = [0, D g2, c] and v = [g1, -g2, 0], so
    # its normal-equation contribution is u u' + b (u v' + v u') + b^2 v v'.
    # Keeping those three sums (and the left-side x x') as running totals makes
    # every candidate O(p^3) after an O(n p^2) pass, instead of O(n p^2) each.
    n = D.shape[0]
    k1, k2, k3 = G1.shape[1], G2.shape[1], C.shape[1]
    p = k1 + k2 + k3
    m = dbp.shape[0]
    sse = np.full(m, np.inf)
    coef = np.full((m, p), np.nan)
    valid = np.zeros(m, dtype=np.bool_)

    order = np.argsort(D)
    L = np.zeros((p, p))
    Lr = np.zeros(p)
    U = np.zeros((p, p))
    W = np.zeros((p, p))
    V = np.zeros((p, p))
    Ur = np.zeros(p)
    Vr = np.zeros(p)
    u = np.zeros(p)
    v = np.zeros(p)
    x = np.zeros(p)
    yy = 0.0

    for i in range(n):
        _right_row(D[i], G1[i], G2[i], C[i], k1, k2, k3, u, v)
        yi = y[i]
        yy += yi * yi
        for a in range(p):
            Ur[a] += u[a] * yi
            Vr[a] += v[a] * yi
            for c in range(p):
                U[a, c] += u[a] * u[c]
                W[a, c] += u[a] * v[c]
                V[a, c] += v[a] * v[c]

    moved = 0
    for jj in np.argsort(dbp):
        b = dbp[jj]
        while moved < n and D[order[moved]] <= b:
            i = order[moved]
            _right_row(D[i], G1[i], G2[i], C[i], k1, k2, k3, u, v)
            for a in range(p):
                x[a] = 0.0
            for a in range(k1):
                x[a] = D[i] * G1[i, a]
            for a in range(k3):
                x[k1 + k2 + a] = C[i, a]
            yi = y[i]
            for a in range(p):
                Ur[a] -= u[a] * yi
                Vr[a] -= v[a] * yi
                Lr[a] += x[a] * yi
                for c in range(p):
                    U[a, c] -= u[a] * u[c]
                    W[a, c] -= u[a] * v[c]
                    V[a, c] -= v[a] * v[c]
                    L[a, c] += x[a] * x[c]
            moved += 1
        if moved < min_side or n - moved < min_side:
            continue
        A = np.empty((p, p))
        r = np.empty(p)
        for a in range(p):
            r[a] = Lr[a] + Ur[a] + b * Vr[a]
            for c in range(p):
                A[a, c] = L[a, c] + U[a, c] + b * (W[a, c] + W[c, a]) + b * b * V[a, c]
        if np.linalg.cond(A) > COND_LIMIT:
            continue
        beta = np.linalg.solve(A, r)
        s = yy
        for a in range(p):
            s -= beta[a] * r[a]
        sse[jj] = max(s, 0.0)
        coef[jj, :] = beta
        valid[jj] = True
    return sse, coef, valid


@njit(cache=True)
def _right_row(d, g1, g2, c, k1, k2, k3, u, v):
    for a in range(k1):
        u[a] = 0.0
        v[a] = g1[a]
    for a in range(k2):
        u[k1 + a] = d * g2[a]
        v[k1 + a] = -g2[a]
    for a in range(k3):
        u[k1 + k2 + a] = c[a]
        v[k1 + k2 + a] = 0.0


def _scan_breakpoints_numpy(D, y, G1, G2, C, dbp, min_side):
    m = dbp.shape[0]
    p = G1.shape[1] + G2.shape[1] + C.shape[1]
    sse = np.full(m, np.inf)
    coef = np.full((m, p), np.nan)
    valid = np.zeros(m, dtype=bool)
    for j, b in enumerate(dbp):
        left = D <= b
        n_left = int(left.sum())
        if n_left < min_side or D.size - n_left < min_side:
            continue
        lo = np.where(left, D, b)
        hi = np.where(left, 0.0, D - b)
        X = np.hstack([lo[:, None] * G1, hi[:, None] * G2, C])
        A = X.T @ X
        if np.linalg.cond(A) > COND_LIMIT:
            continue
        beta = np.linalg.solve(A, X.T @ y)
        e = y - X @ beta
        sse[j] = float(e @ e)
        coef[j] = beta
        valid[j] = True
    return sse, coef, valid


def scan_breakpoints(D, y, G1, G2, C, dbp, min_side=2):
    """Least-squares fit of a continuous two-segment model at each breakpoint.

    The model is linear in its coefficients once the breakpoint is fixed::

        y ~ min(D, Dbp) * G1 @ c1 + max(D - Dbp, 0) * G2 @ c2 + C @ c3

    where ``D`` is the log-distance regressor (``10 log10 d``). Breakpoints
    with fewer than ``min_side`` samples on either side, or with a singular
    normal matrix, are flagged invalid.

    Returns ``(sse, coef, valid)`` with one row per candidate in ``dbp``.
    """
    D = np.ascontiguousarray(D, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = D.shape[0]

    def cols(a):
        a = np.asarray(a, dtype=np.float64)
        if a.size == 0:
            return np.zeros((n, 0))
        return np.ascontiguousarray(a.reshape(n, -1))

    G1, G2, C = cols(G1), cols(G2), cols(C)
    dbp = np.ascontiguousarray(dbp, dtype=np.float64)
    if USE_NUMBA:
        return _scan_breakpoints_numba(D, y, G1, G2, C, dbp, int(min_side))
    return _scan_breakpoints_numpy(D, y, G1, G2, C, dbp, int(min_side))
