"""Compiled numerical kernels.

Everything here works on raw float64 arrays so the same code path serves
the public assembly/solve API and the compiled time-stepping loop.
Node arrays have shape (n, 2). Segment k joins node k and node k + 1
(wrapping to node 0 for closed curves).
"""

import math

import numpy as np
from numba import njit

EPS_GEOM = 1e-12
PIVOT_TOL = 1e-14

MCF = 0
MCF_VOLUME = 1
WETTING = 2

OK = 0
DEGENERATE = 1
SINGULAR = 2
STATIONARY = 3


@njit(cache=True)
def segments(X, closed):
    n = X.shape[0]
    m = n if closed else n - 1
    lengths = np.empty(m)
    tangents = np.zeros((m, 2))
    for k in range(m):
        j = k + 1 if k + 1 < n else 0
        dx = X[j, 0] - X[k, 0]
        dy = X[j, 1] - X[k, 1]
        ell = math.hypot(dx, dy)
        lengths[k] = ell
        if ell > 0.0:
            tangents[k, 0] = dx / ell
            tangents[k, 1] = dy / ell
    return lengths, tangents


@njit(cache=True)
def length_weights(lengths, closed, delta, gamma):
    """d(energy)/d(length_k) for gamma * sum(l) + delta * sum((l_k / l_{k+1} - 1)^2)."""
    m = lengths.shape[0]
    s = np.full(m, gamma)
    if delta != 0.0:
        nterms = m if closed else m - 1
        for k in range(nterms):
            k1 = k + 1 if k + 1 < m else 0
            r = lengths[k] / lengths[k1]
            c = 2.0 * delta * (r - 1.0) / lengths[k1]
            s[k] += c
            s[k1] -= c * r
    return s


@njit(cache=True)
def forces_closed(tangents, s):
    n = tangents.shape[0]
    g = np.empty((n, 2))
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        g[i, 0] = s[i] * tangents[i, 0] - s[im] * tangents[im, 0]
        g[i, 1] = s[i] * tangents[i, 1] - s[im] * tangents[im, 1]
    return g


@njit(cache=True)
def forces_open(tangents, s, gamma_cos):
    m = tangents.shape[0]
    n = m + 1
    g = np.zeros((n, 2))
    for i in range(1, n - 1):
        g[i, 0] = s[i] * tangents[i, 0] - s[i - 1] * tangents[i - 1, 0]
        g[i, 1] = s[i] * tangents[i, 1] - s[i - 1] * tangents[i - 1, 1]
    # endpoints slide along the substrate: only the horizontal force survives
    g[0, 0] = s[0] * tangents[0, 0] + gamma_cos
    g[n - 1, 0] = -s[m - 1] * tangents[m - 1, 0] - gamma_cos
    return g


@njit(cache=True)
def assemble_closed(X, lengths):
    n = X.shape[0]
    diag = np.empty((n, 2))
    off = np.empty((n, 2))
    border = np.empty((n, 2))
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i + 1 < n else 0
        d = (lengths[im] + lengths[i]) / 3.0
        diag[i, 0] = d
        diag[i, 1] = d
        off[i, 0] = lengths[i] / 6.0
        off[i, 1] = lengths[i] / 6.0
        # P/2 (x_{i+1} - x_{i-1}) with P = [[0, 1], [-1, 0]]
        border[i, 0] = 0.5 * (X[ip, 1] - X[im, 1])
        border[i, 1] = -0.5 * (X[ip, 0] - X[im, 0])
    return diag, off, border


@njit(cache=True)
def assemble_open(X, lengths, xi0, xi1):
    n = X.shape[0]
    m = n - 1
    diag = np.empty((n, 2))
    off = np.empty((m, 2))
    border = np.zeros((n, 2))
    for i in range(1, n - 1):
        d = xi0 * (lengths[i - 1] + lengths[i]) / 3.0
        diag[i, 0] = d
        diag[i, 1] = d
        border[i, 0] = 0.5 * (X[i + 1, 1] - X[i - 1, 1])
        border[i, 1] = -0.5 * (X[i + 1, 0] - X[i - 1, 0])
    diag[0, 0] = xi0 * lengths[0] / 3.0 + xi1
    diag[0, 1] = 1.0
    diag[n - 1, 0] = xi0 * lengths[m - 1] / 3.0 + xi1
    diag[n - 1, 1] = 1.0
    for k in range(m):
        off[k, 0] = xi0 * lengths[k] / 6.0
        off[k, 1] = xi0 * lengths[k] / 6.0
    off[0, 1] = 0.0
    off[m - 1, 1] = 0.0
    border[0, 0] = 0.5 * X[1, 1]
    border[n - 1, 0] = -0.5 * X[n - 2, 1]
    return diag, off, border


@njit(cache=True)
def thomas(d, c, rhs):
    """Symmetric tridiagonal solve; returns (x, smallest |pivot|)."""
    n = d.shape[0]
    ncol = rhs.shape[1]
    cp = np.zeros(n)
    x = np.empty((n, ncol))
    piv = d[0]
    pmin = abs(piv)
    if pmin == 0.0:
        return x, 0.0
    if n > 1:
        cp[0] = c[0] / piv
    for j in range(ncol):
        x[0, j] = rhs[0, j] / piv
    for i in range(1, n):
        piv = d[i] - c[i - 1] * cp[i - 1]
        if abs(piv) < pmin:
            pmin = abs(piv)
        if piv == 0.0:
            return x, 0.0
        if i < n - 1:
            cp[i] = c[i] / piv
        for j in range(ncol):
            x[i, j] = (rhs[i, j] - c[i - 1] * x[i - 1, j]) / piv
    for i in range(n - 2, -1, -1):
        for j in range(ncol):
            x[i, j] -= cp[i] * x[i + 1, j]
    return x, pmin


@njit(cache=True)
def thomas_cyclic(d, c, rhs):
    """Cyclic symmetric tridiagonal solve (c[n-1] couples rows 0 and n-1).

    Sherman-Morrison correction around a non-cyclic core.
    """
    n = d.shape[0]
    ncol = rhs.shape[1]
    corner = c[n - 1]
    shift = -d[0]
    dm = d.copy()
    dm[0] -= shift
    dm[n - 1] -= corner * corner / shift
    ext = np.zeros((n, ncol + 1))
    ext[:, :ncol] = rhs
    ext[0, ncol] = shift
    ext[n - 1, ncol] = corner
    sol, pmin = thomas(dm, c[: n - 1], ext)
    if pmin == 0.0:
        return sol[:, :ncol], 0.0
    z0 = sol[0, ncol]
    zn = sol[n - 1, ncol]
    denom = 1.0 + z0 + corner * zn / shift
    if denom == 0.0:
        return sol[:, :ncol], 0.0
    x = np.empty((n, ncol))
    for j in range(ncol):
        fac = (sol[0, j] + corner * sol[n - 1, j] / shift) / denom
        for i in range(n):
            x[i, j] = sol[i, j] - fac * sol[i, ncol]
    return x, min(pmin, abs(denom) * abs(shift))


@njit(cache=True)
def solve_structured(diag, off, border, rhs, closed, bordered):
    """Solve the (optionally bordered) block system by per-component reduction.

    Returns (velocities, multiplier, relative pivot). The multiplier is
    NaN for unbordered systems.
    """
    n = diag.shape[0]
    V = np.empty((n, 2))
    W = np.empty((n, 2))
    scale = 0.0
    for i in range(n):
        for comp in range(2):
            if abs(diag[i, comp]) > scale:
                scale = abs(diag[i, comp])
    prel = np.inf
    ncol = 2 if bordered else 1
    R = np.empty((n, ncol))
    for comp in range(2):
        for i in range(n):
            R[i, 0] = rhs[i, comp]
            if bordered:
                R[i, 1] = border[i, comp]
        if closed:
            sol, p = thomas_cyclic(diag[:, comp].copy(), off[:, comp].copy(), R)
        else:
            sol, p = thomas(diag[:, comp].copy(), off[:, comp].copy(), R)
        prel = min(prel, p / scale)
        for i in range(n):
            V[i, comp] = sol[i, 0]
            if bordered:
                W[i, comp] = sol[i, 1]
    lam = np.nan
    if bordered:
        bu = 0.0
        bw = 0.0
        bb = 0.0
        for i in range(n):
            for comp in range(2):
                bu += border[i, comp] * V[i, comp]
                bw += border[i, comp] * W[i, comp]
                bb += border[i, comp] * border[i, comp]
        # Schur complement b^T A^{-1} b, relative to |b|^2 / scale
        schur = bw * scale / bb if bb > 0.0 else 0.0
        prel = min(prel, schur)
        if schur <= 0.0:
            return V, lam, 0.0
        lam = bu / bw
        for i in range(n):
            for comp in range(2):
                V[i, comp] -= lam * W[i, comp]
    return V, lam, prel


@njit(cache=True)
def matvec(diag, off, border, V, lam, closed):
    """Block part A V, plus lam * border when lam is finite."""
    n = diag.shape[0]
    m = off.shape[0]
    out = np.empty((n, 2))
    for i in range(n):
        for comp in range(2):
            out[i, comp] = diag[i, comp] * V[i, comp]
    for k in range(m):
        j = k + 1 if k + 1 < n else 0
        for comp in range(2):
            out[k, comp] += off[k, comp] * V[j, comp]
            out[j, comp] += off[k, comp] * V[k, comp]
    if not np.isnan(lam):
        for i in range(n):
            for comp in range(2):
                out[i, comp] += lam * border[i, comp]
    return out


@njit(cache=True)
def quad_form(diag, off, V):
    n = diag.shape[0]
    m = off.shape[0]
    q = 0.0
    for i in range(n):
        for comp in range(2):
            q += diag[i, comp] * V[i, comp] * V[i, comp]
    for k in range(m):
        j = k + 1 if k + 1 < n else 0
        for comp in range(2):
            q += 2.0 * off[k, comp] * V[k, comp] * V[j, comp]
    return q


@njit(cache=True)
def velocity(X, kind, delta, gamma, cos_y, xi0, xi1):
    """Assemble and solve at state X.

    Returns (V, lam, status, rhs, diag, off, border).
    """
    closed = kind != WETTING
    bordered = kind != MCF
    lengths, tangents = segments(X, closed)
    if lengths.min() <= EPS_GEOM:
        n = X.shape[0]
        z = np.zeros((n, 2))
        return z, np.nan, DEGENERATE, z, z, z, z
    s = length_weights(lengths, closed, delta, gamma)
    if closed:
        g = forces_closed(tangents, s)
        diag, off, border = assemble_closed(X, lengths)
    else:
        g = forces_open(tangents, s, gamma * cos_y)
        diag, off, border = assemble_open(X, lengths, xi0, xi1)
    V, lam, prel = solve_structured(diag, off, border, g, closed, bordered)
    status = OK if prel >= PIVOT_TOL else SINGULAR
    if not closed:
        V[0, 1] = 0.0
        V[X.shape[0] - 1, 1] = 0.0
    return V, lam, status, g, diag, off, border


@njit(cache=True)
def _audit(g, diag, off, border, V):
    gv = 0.0
    bv = 0.0
    for i in range(V.shape[0]):
        for comp in range(2):
            gv += g[i, comp] * V[i, comp]
            bv += border[i, comp] * V[i, comp]
    q = quad_form(diag, off, V)
    return abs(gv - q) / (1.0 + abs(gv)), abs(bv), q


@njit(cache=True)
def signed_area(X):
    n = X.shape[0]
    a = 0.0
    for i in range(n):
        j = (i + 1) % n
        a += X[i, 0] * X[j, 1] - X[j, 0] * X[i, 1]
    return 0.5 * a


@njit(cache=True)
def advance(X, kind, delta, gamma, cos_y, xi0, xi1, dt, nsteps, stat_tol):
    """Run up to nsteps improved-Euler steps.

    Returns (X, steps_taken, status, vmax, worst_identity, worst_constraint,
    min_dissipation). worst_* are maxima over every evaluated state;
    min_dissipation is the smallest V^T A V / 2 seen.
    """
    closed = kind != WETTING
    X = X.copy()
    n = X.shape[0]
    worst_id = 0.0
    worst_con = 0.0
    min_phi = np.inf
    vmax = np.nan
    for k in range(nsteps):
        V0, lam0, st, g, d, o, b = velocity(X, kind, delta, gamma, cos_y, xi0, xi1)
        if st != OK:
            return X, k, st, vmax, worst_id, worst_con, min_phi
        e_id, e_con, q = _audit(g, d, o, b, V0)
        worst_id = max(worst_id, e_id)
        if kind != MCF:
            worst_con = max(worst_con, e_con)
        min_phi = min(min_phi, 0.5 * q)
        vmax = np.abs(V0).max()
        if vmax <= stat_tol:
            return X, k, STATIONARY, vmax, worst_id, worst_con, min_phi
        Xp = X + dt * V0
        V1, lam1, st, g, d, o, b = velocity(Xp, kind, delta, gamma, cos_y, xi0, xi1)
        if st != OK:
            return X, k, st, vmax, worst_id, worst_con, min_phi
        e_id, e_con, q = _audit(g, d, o, b, V1)
        worst_id = max(worst_id, e_id)
        if kind != MCF:
            worst_con = max(worst_con, e_con)
        min_phi = min(min_phi, 0.5 * q)
        Xn = X + (0.5 * dt) * (V0 + V1)
        if not closed:
            Xn[0, 1] = 0.0
            Xn[n - 1, 1] = 0.0
        lengths, _ = segments(Xn, closed)
        # an inverted region (e.g. a circle stepped past its collapse) is degenerate too
        if lengths.min() <= EPS_GEOM or signed_area(Xn) <= 0.0:
            return X, k, DEGENERATE, vmax, worst_id, worst_con, min_phi
        X = Xn
    return X, nsteps, OK, vmax, worst_id, worst_con, min_phi
