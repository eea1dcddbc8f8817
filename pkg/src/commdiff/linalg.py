"""Dense least squares and damped Newton on mpmath floats.

The least-squares path is a column-pivoted Householder QR with column
equilibration; pivots expose rank loss, which callers treat as an error
beyond the normalization freedom they expect.  The Newton path is a
Levenberg-style damped Gauss-Newton with finite-difference Jacobians, used
for the small nonlinear recoveries (elliptic parameter fits).
"""

from __future__ import annotations

from mpmath import mp, mpf, sqrt, lu_solve, matrix

from .errors import ConvergenceError, RankDeficiencyError


def lstsq(rows, rhs, rank_tol=None):
    """Minimize ||A x - b||_2 by column-pivoted Householder QR.

    rows: list of rows of A (m x n, m >= n); rhs: length-m vector.
    Returns (x, info) with info = {rank, n, rdiag, resid_inf, pivot}.
    Rank is decided against rank_tol (default 2^(-3p/4)) relative to the
    largest pivot.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    if m < n:
        raise ValueError(f"underdetermined system: {m} equations, {n} unknowns")
    if rank_tol is None:
        rank_tol = mpf(2) ** (-(3 * mp.prec) // 4)

    A = [[mpf(v) for v in row] for row in rows]
    b = [mpf(v) for v in rhs]

    # column equilibration
    colscale = []
    for j in range(n):
        s = max(abs(A[i][j]) for i in range(m))
        s = s if s > 0 else mpf(1)
        colscale.append(s)
        for i in range(m):
            A[i][j] /= s

    perm = list(range(n))
    rdiag = []
    for k in range(n):
        # pivot on the column with the largest remaining norm
        best, best_j = mpf(-1), k
        for j in range(k, n):
            cn = sqrt(sum(A[i][j] ** 2 for i in range(k, m)))
            if cn > best:
                best, best_j = cn, j
        if best_j != k:
            for i in range(m):
                A[i][k], A[i][best_j] = A[i][best_j], A[i][k]
            perm[k], perm[best_j] = perm[best_j], perm[k]
        # Householder on column k
        alpha = sqrt(sum(A[i][k] ** 2 for i in range(k, m)))
        if alpha == 0:
            rdiag.append(mpf(0))
            continue
        if A[k][k] > 0:
            alpha = -alpha
        v = [A[i][k] for i in range(k, m)]
        v[0] -= alpha
        vnorm2 = sum(t * t for t in v)
        A[k][k] = alpha
        for i in range(k + 1, m):
            A[i][k] = mpf(0)
        if vnorm2 > 0:
            for j in range(k + 1, n):
                dot = sum(v[i - k] * A[i][j] for i in range(k, m))
                f = 2 * dot / vnorm2
                for i in range(k, m):
                    A[i][j] -= f * v[i - k]
            dot = sum(v[i - k] * b[i] for i in range(k, m))
            f = 2 * dot / vnorm2
            for i in range(k, m):
                b[i] -= f * v[i - k]
        rdiag.append(alpha)

    r0 = max((abs(d) for d in rdiag), default=mpf(0))
    rank = sum(1 for d in rdiag if abs(d) > rank_tol * r0) if r0 > 0 else 0

    x = [mpf(0)] * n
    for k in range(min(rank, n) - 1, -1, -1):
        s = b[k] - sum(A[k][j] * x[j] for j in range(k + 1, n))
        x[k] = s / A[k][k]

    out = [mpf(0)] * n
    for k in range(n):
        out[perm[k]] = x[k] / colscale[perm[k]]

    resid = mpf(0)
    for i in range(m):
        r = sum(rows[i][j] * out[j] for j in range(n)) - rhs[i]
        resid = max(resid, abs(r))

    info = {"rank": rank, "n": n, "rdiag": rdiag, "resid_inf": resid, "pivot": perm}
    return out, info


def require_full_rank(info, context: str = "linear system"):
    if info["rank"] < info["n"]:
        raise RankDeficiencyError(
            f"{context}: rank {info['rank']} < {info['n']} unknowns"
        )


def fd_jacobian(fun, x, scale_floor=mpf("1e-6")):
    """Central finite-difference Jacobian columns of fun at x."""
    r0 = fun(x)
    if r0 is None:
        raise ValueError("residual function undefined at the base point")
    m = len(r0)
    h0 = mpf(2) ** (-mp.prec // 3)
    cols = []
    for i in range(len(x)):
        h = h0 * max(scale_floor, abs(x[i]))
        xp = list(x)
        xm = list(x)
        xp[i] += h
        xm[i] -= h
        rp, rm = fun(xp), fun(xm)
        if rp is None or rm is None:
            raise ValueError("residual function undefined at a difference point")
        cols.append([(rp[j] - rm[j]) / (2 * h) for j in range(m)])
    return r0, cols


def damped_newton(fun, x0, max_iter=60, target_inf=None, lam0=mpf("1e-6")):
    """Levenberg-damped Gauss-Newton for small nonlinear least squares.

    fun(x) returns the residual list, or None when x leaves the domain (the
    step is then rejected).  Stops when max |r| <= target_inf or the damping
    saturates.  Returns (x, info); raises ConvergenceError if the target was
    given and missed.
    """
    if target_inf is None:
        target_inf = mpf(2) ** (-(3 * mp.prec) // 4)
    x = [mpf(v) for v in x0]
    r = fun(x)
    if r is None:
        raise ValueError("initial point outside the residual domain")
    rnorm = sqrt(sum(t * t for t in r))
    lam = mpf(lam0)
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        rmax = max(abs(t) for t in r)
        trace.append(rmax)
        if rmax <= target_inf:
            break
        _, cols = fd_jacobian(fun, x)
        nv, m = len(x), len(r)
        colscale = [max(max(abs(c) for c in col), mpf(2) ** (-mp.prec)) for col in cols]
        ata = [
            [
                sum(cols[i][k] * cols[j][k] for k in range(m)) / (colscale[i] * colscale[j])
                for j in range(nv)
            ]
            for i in range(nv)
        ]
        atb = [-sum(cols[i][k] * r[k] for k in range(m)) / colscale[i] for i in range(nv)]
        accepted = False
        for _ in range(40):
            lhs = matrix(ata)
            for i in range(nv):
                lhs[i, i] *= 1 + lam
            try:
                dx = lu_solve(lhs, matrix(atb))
            except Exception:
                lam *= 10
                continue
            xn = [x[i] + dx[i] / colscale[i] for i in range(nv)]
            rn = fun(xn)
            if rn is not None:
                rn_norm = sqrt(sum(t * t for t in rn))
                if rn_norm < rnorm:
                    x, r, rnorm = xn, rn, rn_norm
                    lam = max(lam / 3, mpf("1e-14"))
                    accepted = True
                    break
            lam *= 10
        if not accepted:
            break
    final = max(abs(t) for t in r)
    info = {"iterations": it, "resid_inf": final, "trace": trace}
    if final > target_inf:
        raise ConvergenceError(
            f"damped Newton stalled at residual {final} > target {target_inf} "
            f"after {it} iterations"
        )
    return x, info
