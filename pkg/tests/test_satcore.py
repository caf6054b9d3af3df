from itertools import product

import numpy as np
import pytest

from netsynth.satcore import SatStatus, Solver


def clause_satisfied(clause, model):
    return any(model[abs(l)] == (l > 0) for l in clause)


def enumerate_satisfiable(nvars, clauses):
    """Truth-table oracle: boolean vector over all 2^n assignments."""
    idx = np.arange(1 << nvars, dtype=np.uint32)
    sat = np.ones(1 << nvars, dtype=bool)
    for clause in clauses:
        cl = np.zeros(len(idx), dtype=bool)
        for lit in clause:
            bit = (idx >> (abs(lit) - 1)) & 1
            cl |= bit == (1 if lit > 0 else 0)
        sat &= cl
    return sat


def test_empty_formula_is_sat():
    s = Solver()
    assert s.solve().status == SatStatus.SAT


def test_simple_sat_and_unsat():
    s = Solver()
    a, b = s.new_vars(2)
    s.add_clause([a, -b])
    res = s.solve()
    assert res.status == SatStatus.SAT
    assert clause_satisfied([a, -b], res.model)

    s2 = Solver()
    a = s2.new_var()
    s2.add_clause([a])
    s2.add_clause([-a])
    assert s2.solve().status == SatStatus.UNSAT


def test_three_clause_example():
    # a1 and (a2 or a3) and (a1 or a3) admits e.g. a1=T, a2=F, a3=T
    s = Solver()
    a1, a2, a3 = s.new_vars(3)
    clauses = [[a1], [a2, a3], [a1, a3]]
    for c in clauses:
        s.add_clause(c)
    res = s.solve()
    assert res.status == SatStatus.SAT
    assert all(clause_satisfied(c, res.model) for c in clauses)


def test_incremental_clauses_never_forgotten():
    s = Solver()
    a, b, c = s.new_vars(3)
    s.add_clause([a, b])
    assert s.solve().status == SatStatus.SAT
    s.add_clause([-a])
    res = s.solve()
    assert res.status == SatStatus.SAT
    assert res.model[b]
    s.add_clause([-b])
    assert s.solve().status == SatStatus.UNSAT
    # once unsat, always unsat
    assert s.solve().status == SatStatus.UNSAT


def test_pigeonhole_4_into_3_unsat():
    s = Solver()
    holes = 3
    var = {}
    for p in range(4):
        for h in range(holes):
            var[p, h] = s.new_var()
    for p in range(4):
        s.add_clause([var[p, h] for h in range(holes)])
    for h in range(holes):
        for p in range(4):
            for q in range(p + 1, 4):
                s.add_clause([-var[p, h], -var[q, h]])
    assert s.solve().status == SatStatus.UNSAT


def test_random_3sat_matches_enumeration(rng):
    for _ in range(60):
        n = int(rng.integers(3, 14))
        m = int(rng.integers(2, int(4.5 * n)))
        clauses = []
        for _ in range(m):
            vs = rng.choice(n, size=3, replace=False) + 1
            clauses.append([int(v) * (1 if rng.uniform() < 0.5 else -1) for v in vs])
        s = Solver()
        s.new_vars(n)
        for c in clauses:
            s.add_clause(c)
        res = s.solve()
        want = enumerate_satisfiable(n, clauses).any()
        assert (res.status == SatStatus.SAT) == want
        if res.status == SatStatus.SAT:
            assert all(clause_satisfied(c, res.model) for c in clauses)


def test_at_least_zero_is_tautology():
    s = Solver()
    lits = s.new_vars(3)
    s.add_at_least(lits, 0)
    res = s.solve()
    assert res.status == SatStatus.SAT


def test_at_least_all_forces_units():
    s = Solver()
    lits = s.new_vars(3)
    s.add_at_least(lits, 3)
    res = s.solve()
    assert res.status == SatStatus.SAT
    assert all(res.model[v] for v in lits)


def test_at_least_above_width_is_unsat():
    s = Solver()
    lits = s.new_vars(2)
    s.add_at_least(lits, 3)
    assert s.solve().status == SatStatus.UNSAT


def _projected_model_count(n, k, extra_neg=None):
    """Count assignments of the n base vars extendable to a model."""
    count = 0
    for bits in product([False, True], repeat=n):
        s = Solver()
        lits = s.new_vars(n)
        s.add_at_least(lits, k)
        if extra_neg:
            s.add_clause(extra_neg)
        for v, val in zip(lits, bits):
            s.add_clause([v if val else -v])
        if s.solve().status == SatStatus.SAT:
            assert sum(bits) >= k
            count += 1
    return count


def test_at_least_projected_model_counts():
    # 4 literals, k=2: C(4,2)+C(4,3)+C(4,4) = 11
    assert _projected_model_count(4, 2) == 11
    assert _projected_model_count(4, 1) == 15
    assert _projected_model_count(5, 3) == 16  # C(5,3)+C(5,4)+C(5,5)


def test_at_least_never_excludes_valid_assignments(rng):
    for n in range(2, 7):
        for k in range(0, n + 1):
            assert _projected_model_count(n, k) == sum(
                1
                for bits in product([0, 1], repeat=n)
                if sum(bits) >= k
            )


def test_at_most_counts(rng):
    for n in range(2, 6):
        for m in range(0, n + 1):
            count = 0
            for bits in product([False, True], repeat=n):
                s = Solver()
                lits = s.new_vars(n)
                s.add_at_most(lits, m)
                for v, val in zip(lits, bits):
                    s.add_clause([v if val else -v])
                if s.solve().status == SatStatus.SAT:
                    count += 1
            want = sum(
                1 for bits in product([0, 1], repeat=n) if sum(bits) <= m
            )
            assert count == want


def test_solver_deterministic(rng):
    clauses = []
    n = 12
    for _ in range(40):
        vs = rng.choice(n, size=3, replace=False) + 1
        clauses.append([int(v) * (1 if rng.uniform() < 0.5 else -1) for v in vs])

    def run():
        s = Solver()
        s.new_vars(n)
        for c in clauses:
            s.add_clause(c)
        return s.solve().model

    assert run() == run()


def test_dimacs_round_trip():
    s = Solver()
    a, b, c = s.new_vars(3)
    s.add_clause([a, -b])
    s.add_clause([b, c])
    s.add_clause([-c])
    text = s.to_dimacs()
    s2 = Solver.from_dimacs(text)
    r1, r2 = s.solve(), s2.solve()
    assert r1.status == r2.status == SatStatus.SAT
    assert r1.model == r2.model


def test_timeout_reports_elapsed():
    # a hard pigeonhole instance with a zero budget times out immediately
    s = Solver()
    holes = 7
    var = {}
    for p in range(holes + 1):
        for h in range(holes):
            var[p, h] = s.new_var()
    for p in range(holes + 1):
        s.add_clause([var[p, h] for h in range(holes)])
    for h in range(holes):
        for p in range(holes + 1):
            for q in range(p + 1, holes + 1):
                s.add_clause([-var[p, h], -var[q, h]])
    res = s.solve(time_budget=0.0)
    assert res.status == SatStatus.TIMEOUT
    assert res.elapsed >= 0.0
