"""Complete propositional SAT engine with incremental clause addition.

Conflict-driven clause learning with two-watched-literal propagation,
activity-based (VSIDS) branching, phase saving and Luby restarts.  Variables
are 1-based integers, literals are signed integers.  Branching prefers the
saved phase, which defaults to False: models assert as few pseudo-booleans
as propagation allows, which keeps the convex constraint sets small in the
lazy loop.

Everything is deterministic: ties break toward the lowest variable id, so a
run is reproducible clause-for-clause.
"""

import time
from dataclasses import dataclass
from enum import Enum
from heapq import heappop, heappush


class SatStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    TIMEOUT = "timeout"


@dataclass
class SolveResult:
    status: SatStatus
    model: list | None = None  # model[v] is the boolean of variable v (1-based)
    elapsed: float = 0.0
    conflicts: int = 0
    decisions: int = 0

    def value(self, lit: int) -> bool:
        v = self.model[abs(lit)]
        return v if lit > 0 else not v


class Solver:
    _RESCALE = 1e100
    _DECAY = 1.0 / 0.95

    def __init__(self):
        self.nvars = 0
        self.clauses = []        # clause lists; first two literals are watched
        self.watches = [[], []]  # per internal literal index (2v, 2v+1)
        self.n_original = 0
        self._units = []         # literals forced by unit clauses
        self._unsat = False
        # assignment state (rebuilt at the start of every solve call)
        self.assigns = [0]
        self.level = [0]
        self.reason = [-1]
        self.act = [0.0]
        self.phase = [False]
        self.var_inc = 1.0
        self._heap = []

    # -- construction -------------------------------------------------------

    def new_var(self) -> int:
        self.nvars += 1
        self.assigns.append(0)
        self.level.append(0)
        self.reason.append(-1)
        self.act.append(0.0)
        self.phase.append(False)
        self.watches.append([])
        self.watches.append([])
        return self.nvars

    def new_vars(self, n: int) -> list:
        return [self.new_var() for _ in range(n)]

    def add_clause(self, lits) -> None:
        """Add a clause; duplicate literals collapse and tautologies vanish.
        An empty clause marks the formula unsatisfiable."""
        seen = set()
        clause = []
        for l in lits:
            v = abs(l)
            if v == 0 or v > self.nvars:
                raise ValueError(f"literal {l} references an undeclared variable")
            if -l in seen:
                return  # tautology
            if l not in seen:
                seen.add(l)
                clause.append(int(l))
        if not clause:
            self._unsat = True
            return
        if len(clause) == 1:
            self._units.append(clause[0])
            return
        ci = len(self.clauses)
        self.clauses.append(clause)
        self.watches[self._lidx(clause[0])].append(ci)
        self.watches[self._lidx(clause[1])].append(ci)
        self.n_original += 1

    def add_at_most(self, lits, m: int) -> None:
        """Sequential-counter (LTseq) encoding of sum(lits) <= m."""
        lits = list(lits)
        n = len(lits)
        if m < 0:
            self._unsat = True
            return
        if m >= n:
            return
        if m == 0:
            for l in lits:
                self.add_clause([-l])
            return
        reg = [[self.new_var() for _ in range(m)] for _ in range(n - 1)]
        self.add_clause([-lits[0], reg[0][0]])
        for j in range(1, m):
            self.add_clause([-reg[0][j]])
        for i in range(1, n - 1):
            self.add_clause([-lits[i], reg[i][0]])
            self.add_clause([-reg[i - 1][0], reg[i][0]])
            for j in range(1, m):
                self.add_clause([-lits[i], -reg[i - 1][j - 1], reg[i][j]])
                self.add_clause([-reg[i - 1][j], reg[i][j]])
            self.add_clause([-lits[i], -reg[i - 1][m - 1]])
        self.add_clause([-lits[n - 1], -reg[n - 2][m - 1]])

    def add_at_least(self, lits, k: int) -> None:
        """Auxiliary-variable encoding whose models are exactly the
        assignments with at least k true literals."""
        lits = list(lits)
        if k <= 0:
            return
        if k > len(lits):
            self._unsat = True  # immediate UNSAT marker
            return
        if k == len(lits):
            for l in lits:
                self.add_clause([l])
            return
        self.add_at_most([-l for l in lits], len(lits) - k)

    # -- solving --------------------------------------------------------------

    @staticmethod
    def _lidx(lit: int) -> int:
        return (lit << 1) if lit > 0 else ((-lit) << 1) | 1

    def _value(self, lit: int) -> int:
        a = self.assigns[lit if lit > 0 else -lit]
        return a if lit > 0 else -a

    def _bump(self, v: int) -> None:
        self.act[v] += self.var_inc
        if self.act[v] > self._RESCALE:
            inv = 1.0 / self._RESCALE
            for u in range(1, self.nvars + 1):
                self.act[u] *= inv
            self.var_inc *= inv
        heappush(self._heap, (-self.act[v], v))

    def _enqueue(self, lit: int, reason: int) -> None:
        v = lit if lit > 0 else -lit
        self.assigns[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self) -> int:
        """Unit propagation; returns a conflicting clause index or -1."""
        clauses = self.clauses
        watches = self.watches
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            neg = -p
            ws = watches[self._lidx(neg)]
            i = j = 0
            n_ws = len(ws)
            while i < n_ws:
                ci = ws[i]
                i += 1
                clause = clauses[ci]
                if clause[0] == neg:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self._value(first) == 1:
                    ws[j] = ci
                    j += 1
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self._value(clause[k]) != -1:
                        clause[1], clause[k] = clause[k], clause[1]
                        watches[self._lidx(clause[1])].append(ci)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = ci
                j += 1
                if self._value(first) == -1:
                    while i < n_ws:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    return ci
                self._enqueue(first, ci)
            del ws[j:]
        return -1

    def _analyze(self, confl: int):
        """First-UIP conflict analysis; returns (learnt clause, backtrack level)."""
        learnt = [0]
        seen = self._seen
        cur_level = len(self.trail_lim)
        counter = 0
        p = 0
        idx = len(self.trail) - 1
        clause = self.clauses[confl]
        while True:
            for q in clause:
                if q == p:
                    continue
                v = q if q > 0 else -q
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                p = self.trail[idx]
                idx -= 1
                pv = p if p > 0 else -p
                if seen[pv]:
                    break
            seen[pv] = False
            counter -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[pv]]
        learnt[0] = -p
        for q in learnt[1:]:
            seen[abs(q)] = False
        if len(learnt) == 1:
            return learnt, 0
        # place the highest-level remaining literal second for watching
        hi = max(range(1, len(learnt)), key=lambda k: self.level[abs(learnt[k])])
        learnt[1], learnt[hi] = learnt[hi], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _backtrack(self, target: int) -> None:
        limit = self.trail_lim[target]
        for lit in reversed(self.trail[limit:]):
            v = lit if lit > 0 else -lit
            self.phase[v] = lit > 0
            self.assigns[v] = 0
            heappush(self._heap, (-self.act[v], v))
        del self.trail[limit:]
        del self.trail_lim[target:]
        self.qhead = limit

    def _pick_branch(self) -> int:
        heap = self._heap
        while heap:
            negact, v = heappop(heap)
            if self.assigns[v] == 0 and -negact == self.act[v]:
                return v
        for v in range(1, self.nvars + 1):  # heap starved; linear fallback
            if self.assigns[v] == 0:
                return v
        return 0

    @staticmethod
    def _luby(i: int) -> int:
        """Luby restart sequence 1,1,2,1,1,2,4,... (1-based index)."""
        while True:
            k = i.bit_length()
            if i == (1 << k) - 1:
                return 1 << (k - 1)
            i -= (1 << (k - 1)) - 1

    def solve(self, time_budget: float | None = None) -> SolveResult:
        """Sound and complete within the budget; keeps all clauses learned in
        earlier calls, so the constraint set only ever grows."""
        start = time.monotonic()
        if self._unsat:
            return SolveResult(SatStatus.UNSAT, elapsed=0.0)
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        for v in range(1, self.nvars + 1):
            self.assigns[v] = 0
        self._seen = [False] * (self.nvars + 1)
        self._heap = [(-self.act[v], v) for v in range(1, self.nvars + 1)]
        self._heap.sort()

        for lit in self._units:
            if self._value(lit) == -1:
                self._unsat = True
                return SolveResult(SatStatus.UNSAT, elapsed=time.monotonic() - start)
            if self._value(lit) == 0:
                self._enqueue(lit, -1)

        conflicts = decisions = 0
        restart_idx = 1
        restart_limit = 100 * self._luby(1)
        restart_conflicts = 0
        while True:
            confl = self._propagate()
            if confl >= 0:
                conflicts += 1
                restart_conflicts += 1
                if not self.trail_lim:
                    self._unsat = True
                    return SolveResult(
                        SatStatus.UNSAT,
                        elapsed=time.monotonic() - start,
                        conflicts=conflicts,
                        decisions=decisions,
                    )
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._units.append(learnt[0])
                    self._enqueue(learnt[0], -1)
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches[self._lidx(learnt[0])].append(ci)
                    self.watches[self._lidx(learnt[1])].append(ci)
                    self._enqueue(learnt[0], ci)
                self.var_inc *= self._DECAY
                if conflicts % 256 == 0 and time_budget is not None:
                    if time.monotonic() - start > time_budget:
                        return SolveResult(
                            SatStatus.TIMEOUT,
                            elapsed=time.monotonic() - start,
                            conflicts=conflicts,
                            decisions=decisions,
                        )
                if restart_conflicts >= restart_limit:
                    restart_idx += 1
                    restart_limit = 100 * self._luby(restart_idx)
                    restart_conflicts = 0
                    if self.trail_lim:
                        self._backtrack(0)
            else:
                v = self._pick_branch()
                if v == 0:
                    model = [False] * (self.nvars + 1)
                    for u in range(1, self.nvars + 1):
                        model[u] = self.assigns[u] > 0
                    return SolveResult(
                        SatStatus.SAT,
                        model=model,
                        elapsed=time.monotonic() - start,
                        conflicts=conflicts,
                        decisions=decisions,
                    )
                decisions += 1
                if decisions % 2048 == 0 and time_budget is not None:
                    if time.monotonic() - start > time_budget:
                        return SolveResult(
                            SatStatus.TIMEOUT,
                            elapsed=time.monotonic() - start,
                            conflicts=conflicts,
                            decisions=decisions,
                        )
                self.trail_lim.append(len(self.trail))
                self._enqueue(v if self.phase[v] else -v, -1)

    # -- DIMACS ------------------------------------------------------------------

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.nvars} {self.n_original + len(self._units)}"]
        for lit in self._units:
            lines.append(f"{lit} 0")
        for clause in self.clauses[: self.n_original]:
            lines.append(" ".join(map(str, clause)) + " 0")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dimacs(cls, text: str) -> "Solver":
        solver = cls()
        nvars = 0
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith(("c", "%")):
                continue
            if line.startswith("p"):
                nvars = int(line.split()[2])
                solver.new_vars(nvars)
                continue
            lits = [int(tok) for tok in line.split()]
            if lits and lits[-1] == 0:
                lits = lits[:-1]
            while max((abs(l) for l in lits), default=0) > solver.nvars:
                solver.new_var()
            solver.add_clause(lits)
        return solver
