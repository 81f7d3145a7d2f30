"""Compiled inner loops.

Points are always passed padded to three columns (the third is zero in the
plane), so one set of kernels serves d = 2 and d = 3 without changing any
floating-point result: adding ``0.0 * 0.0`` to a sum of squares is exact.
"""

import math

import numpy as np
from numba import njit

DEAD_END = -1
ORIGIN_SINK = -2

KIND_DIRECTED = 0
KIND_RADIAL = 1


@njit(cache=True, nogil=True, inline="always")
def _lex_less(a0, a1, a2, b0, b1, b2):
    if a0 != b0:
        return a0 < b0
    if a1 != b1:
        return a1 < b1
    return a2 < b2


@njit(cache=True, nogil=True)
def _visit_cell(cid, qi, q0, q1, q2, u0, u1, u2, qn2, spts, sidx, cell_start,
                kind, use_cone, cos_t, best):
    # best = [d2, index, y0, y1, y2]
    for p in range(cell_start[cid], cell_start[cid + 1]):
        j = sidx[p]
        if j == qi:
            continue
        y0 = spts[p, 0]
        y1 = spts[p, 1]
        y2 = spts[p, 2]
        if kind == KIND_DIRECTED:
            if not (y0 > q0):
                continue
        else:
            yn2 = y0 * y0
            yn2 += y1 * y1
            yn2 += y2 * y2
            if not (yn2 < qn2):
                continue
        e0 = y0 - q0
        e1 = y1 - q1
        e2 = y2 - q2
        d2 = e0 * e0
        d2 += e1 * e1
        d2 += e2 * e2
        if use_cone:
            dot = e0 * u0
            dot += e1 * u1
            dot += e2 * u2
            if not (dot >= cos_t * math.sqrt(d2)):
                continue
        if d2 < best[0] or (d2 == best[0] and _lex_less(y0, y1, y2, best[2], best[3], best[4])):
            best[0] = d2
            best[1] = j
            best[2] = y0
            best[3] = y1
            best[4] = y2


@njit(cache=True, nogil=True)
def _cell_coord(v, lo, c, n):
    k = int(math.floor((v - lo) / c))
    if k < 0:
        return 0
    if k > n - 1:
        return n - 1
    return k


@njit(cache=True, nogil=True, inline="always")
def _gap2(lo, g, c):
    a = lo + g * c
    b = a + c
    if a > 0.0:
        return a * a
    if b < 0.0:
        return b * b
    return 0.0


@njit(cache=True, nogil=True)
def nn_query(qi, pts, spts, sidx, cell_start, lo, c, ncell, kind, use_cone, cos_t, slack):
    """Constrained nearest neighbour of node ``qi`` with lexicographic tie-break.

    Returns a node index, ``DEAD_END`` (directed, no admissible point) or
    ``ORIGIN_SINK`` (radial, the origin wins).
    """
    q0 = pts[qi, 0]
    q1 = pts[qi, 1]
    q2 = pts[qi, 2]
    nx, ny, nz = ncell[0], ncell[1], ncell[2]
    cx = _cell_coord(q0, lo[0], c, nx)
    cy = _cell_coord(q1, lo[1], c, ny)
    cz = _cell_coord(q2, lo[2], c, nz)
    best = np.empty(5)
    qn2 = q0 * q0
    qn2 += q1 * q1
    qn2 += q2 * q2
    u0 = 1.0
    u1 = 0.0
    u2 = 0.0
    qnorm = 0.0
    if kind == KIND_DIRECTED:
        best[0] = np.inf
        best[1] = DEAD_END
        best[2] = 0.0
        best[3] = 0.0
        best[4] = 0.0
    else:
        qn = math.sqrt(qn2)
        u0 = -q0 / qn
        u1 = -q1 / qn
        u2 = -q2 / qn
        best[0] = qn2
        best[1] = ORIGIN_SINK
        best[2] = 0.0
        best[3] = 0.0
        best[4] = 0.0
        qnorm = qn
    kmax = max(max(cx, nx - 1 - cx), max(max(cy, ny - 1 - cy), max(cz, nz - 1 - cz)))
    for k in range(kmax + 1):
        x_lo = 0 if kind == KIND_DIRECTED else max(-k, -cx)
        x_hi = min(k, nx - 1 - cx)
        y_lo = max(-k, -cy)
        y_hi = min(k, ny - 1 - cy)
        z_lo = max(-k, -cz)
        z_hi = min(k, nz - 1 - cz)
        for dx in range(x_lo, x_hi + 1):
            ax = dx == k or dx == -k
            gx = cx + dx
            for dy in range(y_lo, y_hi + 1):
                gy = cy + dy
                if ax or dy == k or dy == -k:
                    zs = z_lo
                    ze = z_hi
                    step = 1
                else:
                    zs = -k
                    ze = k
                    step = 2 * k
                dz = zs
                while dz <= ze:
                    if dz >= z_lo and dz <= z_hi:
                        gz = cz + dz
                        visit = True
                        if kind == KIND_RADIAL:
                            # skip cells entirely outside the ball |y| < |q|
                            m2 = _gap2(lo[0], gx, c) + _gap2(lo[1], gy, c) + _gap2(lo[2], gz, c)
                            if math.sqrt(m2) > qnorm + slack:
                                visit = False
                        if visit:
                            cid = (gx * ny + gy) * nz + gz
                            _visit_cell(cid, qi, q0, q1, q2, u0, u1, u2, qn2, spts, sidx,
                                        cell_start, kind, use_cone, cos_t, best)
                    dz += step
        t = k * c - slack
        if t > 0.0 and best[0] < t * t:
            break
    return int(best[1])


@njit(cache=True, nogil=True)
def nn_all(pts, spts, sidx, cell_start, lo, c, ncell, kind, use_cone, cos_t, slack):
    n = pts.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = nn_query(i, pts, spts, sidx, cell_start, lo, c, ncell, kind, use_cone, cos_t, slack)
    return out


@njit(cache=True, nogil=True)
def nn_brute(pts, kind, use_cone, cos_t):
    """Full-scan reference for :func:`nn_all` (same arithmetic, no index)."""
    n = pts.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        q0 = pts[i, 0]
        q1 = pts[i, 1]
        q2 = pts[i, 2]
        qn2 = q0 * q0
        qn2 += q1 * q1
        qn2 += q2 * q2
        u0 = 1.0
        u1 = 0.0
        u2 = 0.0
        bd = np.inf
        bj = DEAD_END
        b0 = 0.0
        b1 = 0.0
        b2 = 0.0
        if kind == KIND_RADIAL:
            qn = math.sqrt(qn2)
            u0 = -q0 / qn
            u1 = -q1 / qn
            u2 = -q2 / qn
            bd = qn2
            bj = ORIGIN_SINK
        for j in range(n):
            if j == i:
                continue
            y0 = pts[j, 0]
            y1 = pts[j, 1]
            y2 = pts[j, 2]
            if kind == KIND_DIRECTED:
                if not (y0 > q0):
                    continue
            else:
                yn2 = y0 * y0
                yn2 += y1 * y1
                yn2 += y2 * y2
                if not (yn2 < qn2):
                    continue
            e0 = y0 - q0
            e1 = y1 - q1
            e2 = y2 - q2
            d2 = e0 * e0
            d2 += e1 * e1
            d2 += e2 * e2
            if use_cone:
                dot = e0 * u0
                dot += e1 * u1
                dot += e2 * u2
                if not (dot >= cos_t * math.sqrt(d2)):
                    continue
            if d2 < bd or (d2 == bd and _lex_less(y0, y1, y2, b0, b1, b2)):
                bd = d2
                bj = j
                b0 = y0
                b1 = y1
                b2 = y2
        out[i] = bj
    return out


@njit(cache=True, nogil=True)
def min_hop(pts, order, spts, sidx, cell_start, lo, c, ncell, rho, slack):
    """Minimum-hop parents towards the origin over links of length at most ``rho``.

    ``order`` lists the nodes by increasing norm.  Returns ``(parent, hops)``
    with ``hops = -1`` for nodes that cannot reach the origin.
    """
    n = pts.shape[0]
    parent = np.full(n, DEAD_END, dtype=np.int64)
    hops = np.full(n, -1, dtype=np.int64)
    norm2 = np.empty(n)
    for i in range(n):
        norm2[i] = pts[i, 0] * pts[i, 0] + pts[i, 1] * pts[i, 1] + pts[i, 2] * pts[i, 2]
    rho2 = rho * rho
    nx, ny, nz = ncell[0], ncell[1], ncell[2]
    reach = int(math.ceil(rho / c)) + 1
    for oi in range(n):
        i = order[oi]
        if norm2[i] <= rho2:
            parent[i] = ORIGIN_SINK
            hops[i] = 1
            continue
        q0 = pts[i, 0]
        q1 = pts[i, 1]
        q2 = pts[i, 2]
        cx = _cell_coord(q0, lo[0], c, nx)
        cy = _cell_coord(q1, lo[1], c, ny)
        cz = _cell_coord(q2, lo[2], c, nz)
        bh = np.int64(-1)
        bn = np.inf
        bj = DEAD_END
        b0 = 0.0
        b1 = 0.0
        b2 = 0.0
        for gx in range(max(0, cx - reach), min(nx - 1, cx + reach) + 1):
            for gy in range(max(0, cy - reach), min(ny - 1, cy + reach) + 1):
                for gz in range(max(0, cz - reach), min(nz - 1, cz + reach) + 1):
                    cid = (gx * ny + gy) * nz + gz
                    for p in range(cell_start[cid], cell_start[cid + 1]):
                        j = sidx[p]
                        hj = hops[j]
                        if hj < 0 or not (norm2[j] < norm2[i]):
                            continue
                        y0 = spts[p, 0]
                        y1 = spts[p, 1]
                        y2 = spts[p, 2]
                        e0 = y0 - q0
                        e1 = y1 - q1
                        e2 = y2 - q2
                        if e0 * e0 + e1 * e1 + e2 * e2 > rho2:
                            continue
                        better = False
                        if bh < 0 or hj < bh:
                            better = True
                        elif hj == bh:
                            if norm2[j] < bn:
                                better = True
                            elif norm2[j] == bn and _lex_less(y0, y1, y2, b0, b1, b2):
                                better = True
                        if better:
                            bh = hj
                            bn = norm2[j]
                            bj = j
                            b0 = y0
                            b1 = y1
                            b2 = y2
        if bh >= 0:
            parent[i] = bj
            hops[i] = bh + 1
    return parent, hops


@njit(cache=True, nogil=True)
def accumulate(order, succ, rates):
    """Subtree sums: ``order`` must list every node before its successor."""
    delta = rates.copy()
    for k in range(order.shape[0]):
        i = order[k]
        j = succ[i]
        if j >= 0:
            delta[j] += delta[i]
    return delta


@njit(cache=True, nogil=True)
def path_reduce(order, succ, vals, op):
    """Reduce ``vals`` along every trajectory; ``order`` lists successors first.

    ``op``: 0 sum, 1 min, 2 max.
    """
    out = vals.copy()
    for k in range(order.shape[0]):
        i = order[k]
        j = succ[i]
        if j >= 0:
            if op == 0:
                out[i] = vals[i] + out[j]
            elif op == 1:
                out[i] = min(vals[i], out[j])
            else:
                out[i] = max(vals[i], out[j])
    return out


@njit(cache=True, nogil=True)
def directed_walk_dev(succ, pts, seg_p, seg_q, seg_ok):
    """Max distance of clipped trajectory segments to each start's horizontal line."""
    n = succ.shape[0]
    out = np.zeros(n)
    for i in range(n):
        a1 = pts[i, 1]
        a2 = pts[i, 2]
        m = 0.0
        j = i
        steps = 0
        while j >= 0 and steps <= n:
            if seg_ok[j]:
                e1 = seg_p[j, 1] - a1
                e2 = seg_p[j, 2] - a2
                v = math.sqrt(e1 * e1 + e2 * e2)
                if v > m:
                    m = v
                e1 = seg_q[j, 1] - a1
                e2 = seg_q[j, 2] - a2
                v = math.sqrt(e1 * e1 + e2 * e2)
                if v > m:
                    m = v
            j = succ[j]
            steps += 1
        out[i] = m
    return out


@njit(cache=True, nogil=True, inline="always")
def _cross_norm(pts, j, u0, u1, u2):
    y0 = pts[j, 0]
    y1 = pts[j, 1]
    y2 = pts[j, 2]
    c0 = y1 * u2 - y2 * u1
    c1 = y2 * u0 - y0 * u2
    c2 = y0 * u1 - y1 * u0
    return math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)


@njit(cache=True, nogil=True)
def radial_walk_dev(succ, pts, norms):
    """Max distance of trajectory nodes to the line through ``o`` and the start."""
    n = succ.shape[0]
    out = np.zeros(n)
    for i in range(n):
        xn = norms[i]
        if xn == 0.0:
            continue
        u0 = pts[i, 0] / xn
        u1 = pts[i, 1] / xn
        u2 = pts[i, 2] / xn
        m = 0.0
        j = succ[i]
        steps = 0
        while j >= 0 and steps <= n:
            if norms[j] <= m:
                # all later nodes are closer to o than the current maximum
                break
            v = _cross_norm(pts, j, u0, u1, u2)
            if v > m:
                m = v
            j = succ[j]
            steps += 1
        out[i] = m
    return out
