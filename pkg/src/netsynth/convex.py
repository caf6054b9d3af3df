"""Convex constraints over continuous sensor coordinates and a feasibility
engine based on cyclic projections (POCS).

The engine either converges to a witness (max violation below tolerance),
detects a residual stall and shrinks the constraint set to an (approximately
minimal) infeasible core via deletion filtering, or gives up with Unknown
after exhausting its iteration budget.  Infeasibility is decided
heuristically: a wrong verdict costs only completeness, never soundness,
because final placements are always re-verified with exact predicates.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HalfPlane:
    """ax*x + ay*y <= b - margin for one sensor's coordinates.

    The normal is normalized on construction so violations are Euclidean
    distances and margins are in meters.
    """

    sensor: int
    ax: float
    ay: float
    b: float
    margin: float = 0.0

    def __post_init__(self):
        n = math.hypot(self.ax, self.ay)
        if n == 0.0:
            raise ValueError("degenerate half-plane normal")
        if abs(n - 1.0) > 1e-12:
            object.__setattr__(self, "ax", self.ax / n)
            object.__setattr__(self, "ay", self.ay / n)
            object.__setattr__(self, "b", self.b / n)


@dataclass(frozen=True)
class Ball:
    """|s - center| <= r - margin for one sensor."""

    sensor: int
    cx: float
    cy: float
    r: float
    margin: float = 0.0

    def __post_init__(self):
        if self.r - self.margin <= 0:
            raise ValueError("ball radius must exceed its margin")


@dataclass(frozen=True)
class PairBall:
    """|s_i - s_j| <= r - margin between two sensors."""

    i: int
    j: int
    r: float
    margin: float = 0.0

    def __post_init__(self):
        if self.r - self.margin <= 0:
            raise ValueError("pair-ball radius must exceed its margin")


def violation(c, pts: np.ndarray) -> float:
    """Signed constraint violation in meters (<= 0 means satisfied)."""
    if isinstance(c, HalfPlane):
        x, y = pts[c.sensor]
        return c.ax * x + c.ay * y - (c.b - c.margin)
    if isinstance(c, Ball):
        x, y = pts[c.sensor]
        return math.hypot(x - c.cx, y - c.cy) - (c.r - c.margin)
    x1, y1 = pts[c.i]
    x2, y2 = pts[c.j]
    return math.hypot(x1 - x2, y1 - y2) - (c.r - c.margin)


def project(pts: np.ndarray, c) -> np.ndarray:
    """Euclidean projection of the stacked coordinates onto one constraint.

    Half-planes and balls move only the owning sensor; a pair-ball moves both
    endpoints toward each other along their chord by equal amounts.
    """
    out = np.array(pts, dtype=float)
    if isinstance(c, HalfPlane):
        x, y = out[c.sensor]
        excess = c.ax * x + c.ay * y - (c.b - c.margin)
        if excess > 0:
            out[c.sensor, 0] -= excess * c.ax
            out[c.sensor, 1] -= excess * c.ay
    elif isinstance(c, Ball):
        x, y = out[c.sensor]
        d = math.hypot(x - c.cx, y - c.cy)
        reff = c.r - c.margin
        if d > reff:
            t = reff / d
            out[c.sensor, 0] = c.cx + (x - c.cx) * t
            out[c.sensor, 1] = c.cy + (y - c.cy) * t
    else:
        x1, y1 = out[c.i]
        x2, y2 = out[c.j]
        d = math.hypot(x1 - x2, y1 - y2)
        reff = c.r - c.margin
        if d > reff:
            shift = 0.5 * (d - reff) / d
            dx, dy = x2 - x1, y2 - y1
            out[c.i, 0] += shift * dx
            out[c.i, 1] += shift * dy
            out[c.j, 0] -= shift * dx
            out[c.j, 1] -= shift * dy
    return out


@dataclass
class FeasibilityOutcome:
    kind: str  # "feasible" | "infeasible" | "unknown"
    witness: np.ndarray | None = None
    core: list | None = None
    residual: float = 0.0
    sweeps: int = 0

    @property
    def feasible(self) -> bool:
        return self.kind == "feasible"

    @property
    def infeasible(self) -> bool:
        return self.kind == "infeasible"


class _Compiled:
    """Constraint batches in array form for vectorized violation scans.

    Scanning all violations in numpy and only projecting the violated
    constraints (sequentially, in a fixed order) keeps the per-sweep cost
    proportional to the number of active conflicts rather than the full
    constraint count.
    """

    def __init__(self, constraints):
        hp_i, hp_a, hp_b = [], [], []
        ba_i, ba_c, ba_r = [], [], []
        pb_i, pb_j, pb_r = [], [], []
        for c in constraints:
            if isinstance(c, HalfPlane):
                hp_i.append(c.sensor)
                hp_a.append((c.ax, c.ay))
                hp_b.append(c.b - c.margin)
            elif isinstance(c, Ball):
                ba_i.append(c.sensor)
                ba_c.append((c.cx, c.cy))
                ba_r.append(c.r - c.margin)
            elif isinstance(c, PairBall):
                pb_i.append(c.i)
                pb_j.append(c.j)
                pb_r.append(c.r - c.margin)
            else:
                raise TypeError(f"unknown constraint {c!r}")
        self.hp_i = np.array(hp_i, dtype=np.int64)
        self.hp_a = np.array(hp_a, dtype=float).reshape(len(hp_i), 2)
        self.hp_b = np.array(hp_b, dtype=float)
        self.ba_i = np.array(ba_i, dtype=np.int64)
        self.ba_c = np.array(ba_c, dtype=float).reshape(len(ba_i), 2)
        self.ba_r = np.array(ba_r, dtype=float)
        self.pb_i = np.array(pb_i, dtype=np.int64)
        self.pb_j = np.array(pb_j, dtype=np.int64)
        self.pb_r = np.array(pb_r, dtype=float)

    def violations(self, pts):
        v_hp = (self.hp_a * pts[self.hp_i]).sum(axis=1) - self.hp_b
        d_ba = pts[self.ba_i] - self.ba_c
        v_ba = np.sqrt((d_ba * d_ba).sum(axis=1)) - self.ba_r
        d_pb = pts[self.pb_i] - pts[self.pb_j]
        v_pb = np.sqrt((d_pb * d_pb).sum(axis=1)) - self.pb_r
        return v_hp, v_ba, v_pb

    def sweep(self, pts, skip_below: float = 0.0) -> float:
        """Scan violations, then project the violated constraints one by one.
        Returns the max violation observed at scan time; when it is already
        below `skip_below` the point is left untouched (it is a witness)."""
        v_hp, v_ba, v_pb = self.violations(pts)
        vmax = 0.0
        if len(v_hp):
            vmax = max(vmax, float(v_hp.max()))
        if len(v_ba):
            vmax = max(vmax, float(v_ba.max()))
        if len(v_pb):
            vmax = max(vmax, float(v_pb.max()))
        if vmax < skip_below:
            return vmax
        for k in np.nonzero(v_ba > 0)[0]:
            i = self.ba_i[k]
            cx, cy = self.ba_c[k]
            x, y = pts[i]
            d = math.hypot(x - cx, y - cy)
            if d > self.ba_r[k]:
                t = self.ba_r[k] / d
                pts[i, 0] = cx + (x - cx) * t
                pts[i, 1] = cy + (y - cy) * t
        for k in np.nonzero(v_hp > 0)[0]:
            i = self.hp_i[k]
            ax, ay = self.hp_a[k]
            excess = ax * pts[i, 0] + ay * pts[i, 1] - self.hp_b[k]
            if excess > 0:
                pts[i, 0] -= excess * ax
                pts[i, 1] -= excess * ay
        for k in np.nonzero(v_pb > 0)[0]:
            i, j = self.pb_i[k], self.pb_j[k]
            x1, y1 = pts[i]
            x2, y2 = pts[j]
            d = math.hypot(x1 - x2, y1 - y2)
            if d > self.pb_r[k]:
                s = 0.5 * (d - self.pb_r[k]) / d
                dx, dy = x2 - x1, y2 - y1
                pts[i, 0] = x1 + s * dx
                pts[i, 1] = y1 + s * dy
                pts[j, 0] = x2 - s * dx
                pts[j, 1] = y2 - s * dy
        return vmax

    def residual(self, pts) -> float:
        v_hp, v_ba, v_pb = self.violations(pts)
        worst = 0.0
        for v in (v_hp, v_ba, v_pb):
            if len(v):
                worst = max(worst, float(v.max()))
        return worst


def _compile(constraints):
    return _Compiled(constraints)


_STALL_REL = 1e-3


def _pocs(comp, start, tol, max_sweeps, stall_window, deadline=None):
    """Run cyclic projections; returns (verdict, points, residual, sweeps)
    with verdict in {"feasible", "stall", "unknown"}."""
    import time

    pts = np.array(start, dtype=float)
    if len(comp.hp_b) + len(comp.ba_r) + len(comp.pb_r) == 0:
        return "feasible", pts, 0.0, 0
    history = []
    for sweep in range(1, max_sweeps + 1):
        vmax = comp.sweep(pts, skip_below=tol)
        if vmax < tol:
            return "feasible", pts, vmax, sweep
        history.append(vmax)
        if len(history) >= 2 * stall_window:
            prev = min(history[-2 * stall_window : -stall_window])
            cur = min(history[-stall_window:])
            # a residual within a few tolerances may still be slow convergence
            if prev - cur < _STALL_REL * prev and cur > 3 * tol:
                return "stall", pts, cur, sweep
        if deadline is not None and sweep % 32 == 0 and time.monotonic() > deadline:
            return "unknown", pts, history[-1], sweep
    return "unknown", pts, history[-1] if history else 0.0, max_sweeps


def feasibility(
    constraints,
    start: np.ndarray,
    tol: float = 1e-6,
    max_iters: int = 10**5,
    stall_window: int = 50,
    deadline: float | None = None,
) -> FeasibilityOutcome:
    """Decide the conjunction of constraints from a deterministic start point.

    Feasible carries a witness with every violation below tol; Infeasible
    carries a constraint core that itself re-tests as infeasible; Unknown is
    returned only on iteration exhaustion (or deadline) without a stall.
    """
    constraints = list(constraints)
    if not constraints:
        raise ValueError("feasibility requires a nonempty constraint set")
    comp = _compile(constraints)
    verdict, pts, res, sweeps = _pocs(comp, start, tol, max_iters, stall_window, deadline)
    if verdict == "feasible":
        return FeasibilityOutcome("feasible", witness=pts, residual=res, sweeps=sweeps)
    if verdict == "unknown":
        return FeasibilityOutcome("unknown", residual=res, sweeps=sweeps)

    # core extraction: collect the limit-cycle participants (constraints that
    # still project the stalled point), find a small stalling prefix of them
    # ordered by violation, then deletion-filter inside it
    inner_cap = max(4 * stall_window, 300)
    probe = np.array(pts)
    cand = {}
    for _ in range(3):
        for k in range(len(constraints)):
            v = violation(constraints[k], probe)
            if v > tol:
                cand[k] = max(cand.get(k, 0.0), v)
                probe = project(probe, constraints[k])
    fallback = FeasibilityOutcome(
        "infeasible", core=list(constraints), residual=res, sweeps=sweeps
    )
    if not cand:
        return fallback

    def stalls(idx_list):
        v, *_ = _pocs(
            _compile([constraints[k] for k in idx_list]),
            start, tol, inner_cap, stall_window,
        )
        return v == "stall"

    by_violation = sorted(cand, key=lambda k: (-cand[k], k))
    prefix = None
    size = 2
    while size < 2 * len(by_violation):
        head = by_violation[: min(size, len(by_violation))]
        if stalls(head):
            prefix = head
            break
        size *= 2
    if prefix is None:
        if not stalls(by_violation):
            # participants alone not provably infeasible: keep everything
            return fallback
        prefix = by_violation
    core = list(prefix)
    for k in list(core):
        if len(core) <= 2:
            break
        trial = [t for t in core if t != k]
        if stalls(trial):
            core = trial
    return FeasibilityOutcome(
        "infeasible",
        core=[constraints[k] for k in sorted(core)],
        residual=res,
        sweeps=sweeps,
    )
