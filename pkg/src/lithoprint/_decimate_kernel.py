"""Compiled decimation engine.

Mirrors ``decimate._Decimator`` step for step (same visiting order, same
floating-point expressions), so both engines return identical meshes.
Per-vertex incidence is kept as singly linked lists of triangle corners:
corner ``c`` is slot ``c % 3`` of triangle ``c // 3``.
"""

import math

import numpy as np
from numba import njit

CONVEX_SINE = 1e-12


@njit(cache=True)
def _grow(tris, talive, cnext, need):
    cap = tris.shape[0]
    if need <= cap:
        return tris, talive, cnext
    new_cap = max(need, 2 * cap)
    t2 = np.empty((new_cap, 3), np.int64)
    t2[:cap] = tris
    a2 = np.zeros(new_cap, np.bool_)
    a2[:cap] = talive
    c2 = np.full(3 * new_cap, -1, np.int64)
    c2[: 3 * cap] = cnext
    return t2, a2, c2


@njit(cache=True)
def _unlink(head, cnext, v, c):
    prev = -1
    cur = head[v]
    while cur != c:
        prev = cur
        cur = cnext[cur]
    if prev == -1:
        head[v] = cnext[c]
    else:
        cnext[prev] = cnext[c]


@njit(cache=True)
def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(cache=True)
def _convex(xs, ys, a, b, c):
    cr = _orient(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c])
    if cr <= 0.0:
        return False
    ab2 = (xs[b] - xs[a]) ** 2 + (ys[b] - ys[a]) ** 2
    bc2 = (xs[c] - xs[b]) ** 2 + (ys[c] - ys[b]) ** 2
    return cr * cr > CONVEX_SINE * CONVEX_SINE * ab2 * bc2


@njit(cache=True)
def ear_clip_nb(xs, ys, out, out_start):
    """Same rule as ``decimate.ear_clip``; writes local index triples into
    ``out[out_start:]`` and returns the count, or -1 on failure."""
    n = xs.shape[0]
    if n < 3:
        return -1
    xmin = xs[0]
    xmax = xs[0]
    ymin = ys[0]
    ymax = ys[0]
    for i in range(1, n):
        xmin = min(xmin, xs[i])
        xmax = max(xmax, xs[i])
        ymin = min(ymin, ys[i])
        ymax = max(ymax, ys[i])
    span = max(xmax - xmin, ymax - ymin)
    if span <= 0.0:
        return -1
    tol = CONVEX_SINE * span * span
    idx = np.arange(n)
    flags = np.empty(n, np.bool_)
    blockers = np.empty(n, np.int64)
    m = n
    cnt = 0
    while m > 3:
        nb = 0
        for k in range(m):
            f = _convex(xs, ys, idx[(k - 1 + m) % m], idx[k], idx[(k + 1) % m])
            flags[k] = f
            if not f:
                blockers[nb] = idx[k]
                nb += 1
        clipped = -1
        for k in range(m):
            if not flags[k]:
                continue
            a = idx[(k - 1 + m) % m]
            b = idx[k]
            c = idx[(k + 1) % m]
            ax = xs[a]
            ay = ys[a]
            bx = xs[b]
            by = ys[b]
            cx = xs[c]
            cy = ys[c]
            blocked = False
            for q in range(nb):
                p = blockers[q]
                if p == a or p == c:
                    continue
                px = xs[p]
                py = ys[p]
                if (
                    _orient(ax, ay, bx, by, px, py) >= -tol
                    and _orient(bx, by, cx, cy, px, py) >= -tol
                    and _orient(cx, cy, ax, ay, px, py) >= -tol
                ):
                    blocked = True
                    break
            if not blocked:
                out[out_start + cnt, 0] = a
                out[out_start + cnt, 1] = b
                out[out_start + cnt, 2] = c
                cnt += 1
                clipped = k
                break
        if clipped < 0:
            return -1
        for j in range(clipped, m - 1):
            idx[j] = idx[j + 1]
        m -= 1
    if not _convex(xs, ys, idx[0], idx[1], idx[2]):
        return -1
    out[out_start + cnt, 0] = idx[0]
    out[out_start + cnt, 1] = idx[1]
    out[out_start + cnt, 2] = idx[2]
    return cnt + 1


@njit(cache=True)
def _plane_spread(px, py, pz, nx, ny, nz):
    k = px.shape[0]
    sx = 0.0
    sy = 0.0
    sz = 0.0
    for i in range(k):
        sx += px[i]
    for i in range(k):
        sy += py[i]
    for i in range(k):
        sz += pz[i]
    cx = sx / k
    cy = sy / k
    cz = sz / k
    c = cx * nx + cy * ny + cz * nz
    worst = 0.0
    for i in range(k):
        d = abs(px[i] * nx + py[i] * ny + pz[i] * nz - c)
        if i == 0 or d > worst:
            worst = d
    return worst


@njit(cache=True)
def _unit3(x, y, z):
    n = math.sqrt(x * x + y * y + z * z)
    if n == 0.0 or not math.isfinite(n):
        return False, 0.0, 0.0, 0.0
    return True, x / n, y / n, z / n


@njit(cache=True)
def _ring(v, head, cnext, tris):
    deg = 0
    c = head[v]
    while c != -1:
        deg += 1
        c = cnext[c]
    xs = np.empty(deg, np.int64)
    ys = np.empty(deg, np.int64)
    c = head[v]
    i = 0
    while c != -1:
        t = c // 3
        j = c % 3
        xs[i] = tris[t, (j + 1) % 3]
        ys[i] = tris[t, (j + 2) % 3]
        i += 1
        c = cnext[c]
    empty = np.empty(0, np.int64)
    for a in range(deg):
        for b in range(a + 1, deg):
            if xs[a] == xs[b]:
                return empty
    if deg < 3:
        return empty
    start = xs[0]
    for a in range(1, deg):
        if xs[a] > start:
            start = xs[a]
    ring = np.empty(deg, np.int64)
    ring[0] = start
    length = 1
    cur = -1
    for a in range(deg):
        if xs[a] == start:
            cur = ys[a]
    while cur != start:
        if length >= deg:
            return empty
        ring[length] = cur
        length += 1
        found = -1
        for a in range(deg):
            if xs[a] == cur:
                found = a
                break
        if found < 0:
            return empty
        cur = ys[found]
    if length != deg:
        return empty
    return ring


@njit(cache=True)
def _edge_exists(a, b, head, cnext, tris):
    c = head[a]
    while c != -1:
        t = c // 3
        if tris[t, 0] == b or tris[t, 1] == b or tris[t, 2] == b:
            return True
        c = cnext[c]
    return False


@njit(cache=True)
def _plan(v, ring, pos, tol, head, cnext, tris):
    """Triangulation of the hole left by ``v`` as ring-position triples.

    Returns an (k-2, 3) array of global vertex ids, or an empty array.
    """
    k = ring.shape[0]
    fail = np.empty((0, 3), np.int64)
    vx = pos[v, 0]
    vy = pos[v, 1]
    vz = pos[v, 2]
    qx = np.empty(k)
    qy = np.empty(k)
    qz = np.empty(k)
    for i in range(k):
        qx[i] = pos[ring[i], 0] - vx
        qy[i] = pos[ring[i], 1] - vy
        qz[i] = pos[ring[i], 2] - vz
    tnx = np.empty(k)
    tny = np.empty(k)
    tnz = np.empty(k)
    for i in range(k):
        j = (i + 1) % k
        tnx[i] = qy[i] * qz[j] - qz[i] * qy[j]
        tny[i] = qz[i] * qx[j] - qx[i] * qz[j]
        tnz[i] = qx[i] * qy[j] - qy[i] * qx[j]
    sx = 0.0
    sy = 0.0
    sz = 0.0
    for i in range(k):
        sx += tnx[i]
    for i in range(k):
        sy += tny[i]
    for i in range(k):
        sz += tnz[i]

    # polygons: arcs of ring positions, each with its plane normal
    n_poly = 0
    arc_start = np.zeros(2, np.int64)
    arc_len = np.zeros(2, np.int64)
    arc_n = np.zeros((2, 3))

    ok, nx, ny, nz = _unit3(sx, sy, sz)
    planar = False
    if ok:
        px = np.empty(k + 1)
        py = np.empty(k + 1)
        pz = np.empty(k + 1)
        px[:k] = qx
        py[:k] = qy
        pz[:k] = qz
        px[k] = 0.0
        py[k] = 0.0
        pz[k] = 0.0
        if _plane_spread(px, py, pz, nx, ny, nz) <= tol:
            planar = True
            for i in range(k):
                if not (tnx[i] * nx + tny[i] * ny + tnz[i] * nz > 0.0):
                    return fail
            n_poly = 1
            arc_start[0] = 0
            arc_len[0] = k
            arc_n[0, 0] = nx
            arc_n[0, 1] = ny
            arc_n[0, 2] = nz
    if not planar:
        ux = np.empty(k)
        uy = np.empty(k)
        uz = np.empty(k)
        for i in range(k):
            ok, a, b, c = _unit3(tnx[i], tny[i], tnz[i])
            if not ok:
                return fail
            ux[i] = a
            uy[i] = b
            uz[i] = c
        nf = 0
        s = -1
        e = -1
        for i in range(k):
            ib = (i - 1 + k) % k
            inx = (i + 1) % k
            d1 = abs(qx[inx] * ux[ib] + qy[inx] * uy[ib] + qz[inx] * uz[ib])
            d2 = abs(qx[ib] * ux[i] + qy[ib] * uy[i] + qz[ib] * uz[i])
            if d1 > tol or d2 > tol:
                nf += 1
                if nf > 2:
                    return fail
                if nf == 1:
                    s = i
                else:
                    e = i
        if nf != 2:
            return fail
        dot_se = qx[s] * qx[e] + qy[s] * qy[e] + qz[s] * qz[e]
        if dot_se >= 0.0:
            return fail
        chx = qx[e] - qx[s]
        chy = qy[e] - qy[s]
        chz = qz[e] - qz[s]
        chord_len = math.sqrt(chx * chx + chy * chy + chz * chz)
        if chord_len == 0.0:
            return fail
        crx = qy[s] * qz[e] - qz[s] * qy[e]
        cry = qz[s] * qx[e] - qx[s] * qz[e]
        crz = qx[s] * qy[e] - qy[s] * qx[e]
        if math.sqrt(crx * crx + cry * cry + crz * crz) / chord_len > tol:
            return fail
        arc_start[0] = s
        arc_len[0] = e - s + 1
        arc_start[1] = e
        arc_len[1] = k - e + s + 1
        for p in range(2):
            st = arc_start[p]
            ln = arc_len[p]
            ax = 0.0
            ay = 0.0
            az = 0.0
            for f in range(ln - 1):
                ax += tnx[(st + f) % k]
            for f in range(ln - 1):
                ay += tny[(st + f) % k]
            for f in range(ln - 1):
                az += tnz[(st + f) % k]
            ok, nx, ny, nz = _unit3(ax, ay, az)
            if not ok:
                return fail
            px = np.empty(ln + 1)
            py = np.empty(ln + 1)
            pz = np.empty(ln + 1)
            for f in range(ln):
                px[f] = qx[(st + f) % k]
                py[f] = qy[(st + f) % k]
                pz[f] = qz[(st + f) % k]
            px[ln] = 0.0
            py[ln] = 0.0
            pz[ln] = 0.0
            if _plane_spread(px, py, pz, nx, ny, nz) > tol:
                return fail
            for f in range(ln - 1):
                j = (st + f) % k
                if not (tnx[j] * nx + tny[j] * ny + tnz[j] * nz > 0.0):
                    return fail
            arc_n[p, 0] = nx
            arc_n[p, 1] = ny
            arc_n[p, 2] = nz
        n_poly = 2

    new = np.empty((k - 2, 3), np.int64)
    n_new = 0
    for p in range(n_poly):
        st = arc_start[p]
        ln = arc_len[p]
        nx = arc_n[p, 0]
        ny = arc_n[p, 1]
        nz = arc_n[p, 2]
        # in-plane basis, as decimate._basis
        ax_i = 0
        if abs(ny) < abs(nx):
            ax_i = 1
        if abs(nz) < abs(nx if ax_i == 0 else ny):
            ax_i = 2
        ex = 1.0 if ax_i == 0 else 0.0
        ey = 1.0 if ax_i == 1 else 0.0
        ez = 1.0 if ax_i == 2 else 0.0
        ok, bux, buy, buz = _unit3(ny * ez - nz * ey, nz * ex - nx * ez, nx * ey - ny * ex)
        bwx = ny * buz - nz * buy
        bwy = nz * bux - nx * buz
        bwz = nx * buy - ny * bux
        xs2 = np.empty(ln)
        ys2 = np.empty(ln)
        for f in range(ln):
            j = (st + f) % k
            xs2[f] = qx[j] * bux + qy[j] * buy + qz[j] * buz
            ys2[f] = qx[j] * bwx + qy[j] * bwy + qz[j] * bwz
        local = np.empty((ln - 2, 3), np.int64)
        cnt = ear_clip_nb(xs2, ys2, local, 0)
        if cnt < 0:
            return fail
        for f in range(cnt):
            new[n_new, 0] = ring[(st + local[f, 0]) % k]
            new[n_new, 1] = ring[(st + local[f, 1]) % k]
            new[n_new, 2] = ring[(st + local[f, 2]) % k]
            n_new += 1

    if k == 3:
        c = head[ring[0]]
        while c != -1:
            t = c // 3
            hits = 0
            for j in range(3):
                w = tris[t, j]
                if w == ring[0] or w == ring[1] or w == ring[2]:
                    hits += 1
            if hits == 3:
                return fail
            c = cnext[c]
    else:
        for f in range(n_new):
            for j in range(3):
                a = new[f, j]
                b = new[f, (j + 1) % 3]
                pa = -1
                pb = -1
                for i in range(k):
                    if ring[i] == a:
                        pa = i
                    if ring[i] == b:
                        pb = i
                d = (pa - pb + k) % k
                if d == 1 or d == k - 1:
                    continue
                if _edge_exists(a, b, head, cnext, tris):
                    return fail
    return new


@njit(cache=True)
def decimate_kernel(pos, tris0, tol, budget):
    """Returns (alive triangles in slot order, removed, passes, budget_met)."""
    n = pos.shape[0]
    f0 = tris0.shape[0]
    cap = max(2 * f0, 16)
    tris = np.empty((cap, 3), np.int64)
    tris[:f0] = tris0
    talive = np.zeros(cap, np.bool_)
    talive[:f0] = True
    cnext = np.full(3 * cap, -1, np.int64)
    head = np.full(n, -1, np.int64)
    for t in range(f0):
        for j in range(3):
            c = 3 * t + j
            w = tris[t, j]
            cnext[c] = head[w]
            head[w] = c
    slots = f0
    n_tris = f0
    valive = np.ones(n, np.bool_)
    queued = np.ones(n, np.bool_)
    later = np.zeros(n, np.bool_)
    stamp = np.zeros(n, np.int64)
    removed = 0
    passes = 0
    met = budget >= 0 and n_tris <= budget
    work = n > 0
    star = np.empty(0, np.int64)
    while work and not met:
        passes += 1
        for v in range(n):
            if not queued[v]:
                continue
            queued[v] = False
            if not valive[v]:
                continue
            ring = _ring(v, head, cnext, tris)
            if ring.shape[0] == 0:
                continue
            new = _plan(v, ring, pos, tol, head, cnext, tris)
            if new.shape[0] == 0:
                continue
            k = ring.shape[0]
            # detach the star
            deg = 0
            c = head[v]
            while c != -1:
                deg += 1
                c = cnext[c]
            star = np.empty(deg, np.int64)
            c = head[v]
            i = 0
            while c != -1:
                star[i] = c // 3
                i += 1
                c = cnext[c]
            for i in range(deg):
                t = star[i]
                for j in range(3):
                    w = tris[t, j]
                    if w != v:
                        _unlink(head, cnext, w, 3 * t + j)
                talive[t] = False
            head[v] = -1
            valive[v] = False
            tris, talive, cnext = _grow(tris, talive, cnext, slots + new.shape[0])
            for f in range(new.shape[0]):
                t = slots
                slots += 1
                talive[t] = True
                for j in range(3):
                    w = new[f, j]
                    tris[t, j] = w
                    cc = 3 * t + j
                    cnext[cc] = head[w]
                    head[w] = cc
            n_tris += new.shape[0] - k
            removed += 1
            if budget >= 0 and n_tris <= budget:
                met = True
                break
            # requeue the 2-ring
            for i in range(k):
                r = ring[i]
                c = head[r]
                while c != -1:
                    t = c // 3
                    for j in range(3):
                        u = tris[t, j]
                        if valive[u]:
                            if u > v:
                                queued[u] = True
                            else:
                                later[u] = True
                    c = cnext[c]
        if met:
            break
        tmp = queued
        queued = later
        later = tmp
        later[:] = False
        work = False
        for v in range(n):
            if queued[v]:
                work = True
                break
    out = np.empty((n_tris, 3), np.int64)
    o = 0
    for t in range(slots):
        if talive[t]:
            out[o] = tris[t]
            o += 1
    return out, removed, passes, met
