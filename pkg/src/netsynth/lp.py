"""Dense two-phase primal simplex for the covering relaxations.

Solves  min c.x  s.t.  G x >= h,  0 <= x <= upper.

Covering LPs here are small and well-conditioned (0/1 matrices), so a dense
tableau is fine.  Pricing is Dantzig by default and switches to Bland's rule
after a run of degenerate pivots, which guarantees termination.
"""

from dataclasses import dataclass

import numpy as np

_EPS = 1e-9
_FEAS_EPS = 1e-7


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float = float("nan")


def _pivot(tab, basis, row, col):
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and abs(tab[r, col]) > _EPS:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _run_simplex(tab, basis, ncols) -> str:
    """Optimize the tableau in place (last row = objective, last col = rhs)."""
    m = tab.shape[0] - 1
    degenerate_run = 0
    bland = False
    while True:
        obj = tab[-1, :ncols]
        if bland:
            col = next((j for j in range(ncols) if obj[j] < -_EPS), -1)
        else:
            col = int(np.argmin(obj))
            if obj[col] >= -_EPS:
                col = -1
        if col == -1:
            return "optimal"
        if m == 0:
            return "unbounded"
        ratios = np.full(m, np.inf)
        col_vals = tab[:m, col]
        pos = col_vals > _EPS
        ratios[pos] = tab[:m, -1][pos] / col_vals[pos]
        best = ratios.min()
        if not np.isfinite(best):
            return "unbounded"
        # tie-break on the smallest leaving basis variable (Bland-compatible)
        cand = [r for r in range(m) if ratios[r] <= best + _EPS]
        row = min(cand, key=lambda r: basis[r])
        if tab[row, -1] < _EPS:
            degenerate_run += 1
            if degenerate_run > 50:
                bland = True
        else:
            degenerate_run = 0
        _pivot(tab, basis, row, col)


def solve_lp(c, g_mat, h, upper=None) -> LpResult:
    c = np.asarray(c, dtype=float)
    g_mat = np.asarray(g_mat, dtype=float)
    h = np.asarray(h, dtype=float)
    n = len(c)
    if g_mat.size == 0:
        g_mat = g_mat.reshape(0, n)
    rows = [(-g_mat[i], -h[i]) for i in range(g_mat.shape[0])]  # as <= rows
    if upper is not None:
        for i, u in enumerate(np.asarray(upper, dtype=float)):
            if np.isfinite(u):
                e = np.zeros(n)
                e[i] = 1.0
                rows.append((e, u))
    # drop vacuous rows (<= with nonnegative rhs and nonpositive coefficients)
    m = len(rows)
    a = np.zeros((m, n))
    b = np.zeros(m)
    for i, (coef, rhs) in enumerate(rows):
        a[i] = coef
        b[i] = rhs
    # normalize to b >= 0
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0
    # each row becomes a*x (+/- slack) (+ artificial) = b
    # rows not flipped: a x + s = b (slack basic); flipped: a x - s + art = b
    n_slack = m
    n_art = int(flip.sum())
    total = n + n_slack + n_art
    tab = np.zeros((m + 1, total + 1))
    basis = [0] * m
    art_col = n + n_slack
    for i in range(m):
        tab[i, :n] = a[i]
        tab[i, -1] = b[i]
        tab[i, n + i] = -1.0 if flip[i] else 1.0
        if flip[i]:
            tab[i, art_col] = 1.0
            basis[i] = art_col
            art_col += 1
        else:
            basis[i] = n + i
    if n_art:
        # phase 1: minimize artificial sum
        tab[-1, n + n_slack : n + n_slack + n_art] = 1.0
        for i in range(m):
            if basis[i] >= n + n_slack:
                tab[-1] -= tab[i]
        status = _run_simplex(tab, basis, n + n_slack)
        if status != "optimal" or tab[-1, -1] < -_FEAS_EPS:
            return LpResult("infeasible")
        # drive leftover artificials out of the basis where possible
        for r in range(m):
            if basis[r] >= n + n_slack:
                piv = next(
                    (j for j in range(n + n_slack) if abs(tab[r, j]) > _EPS), -1
                )
                if piv >= 0:
                    _pivot(tab, basis, r, piv)
        # remove artificial columns
        keep = list(range(n + n_slack)) + [total]
        tab = tab[:, keep]
        rows_keep = [r for r in range(m) if basis[r] < n + n_slack]
        tab = tab[rows_keep + [m]]
        basis = [basis[r] for r in rows_keep]
        m = len(basis)
    # phase 2
    tab[-1, :] = 0.0
    tab[-1, :n] = c
    for i in range(m):
        if basis[i] < n and abs(c[basis[i]]) > _EPS:
            tab[-1] -= c[basis[i]] * tab[i]
    status = _run_simplex(tab, basis, n + n_slack)
    if status == "unbounded":
        return LpResult("unbounded")
    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i, -1]
    return LpResult("optimal", x=x, objective=float(c @ x))
