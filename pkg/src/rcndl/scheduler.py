"""Phase 2 of the interpreter: iterative evidence application.

Evidence arrives as constraint sets with per-set gradient thresholds.  The
reasoning loop runs in passes: within a pass every constraint set is used
exactly once, ordered either by greatest current gradient or by program
order, and each use updates the constraint's home clause and propagates the
change through the clause tree.  The loop stops when, at a pass boundary,
every gradient is below its threshold (or the pass budget runs out).

Propagation walks the clause tree breadth-first away from the updated
clause, visiting each clause at most once.  Every edge carries a separator
scope, and crossing an edge means a marginal (Jeffrey) update of the far
clause with the near clause's separator distribution; group nodes make this
exact even where a rule head spans several upstream clauses.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    conditional_update,
    constraint_gradient,
    gradient_scalar,
    jeffrey_update,
    lec_solve,
)
from .errors import NetworkStructureError, ScopeError
from .model import (
    ConditionalConstraint,
    ConstraintSet,
    LinearConstraint,
    MarginalConstraint,
    Scope,
    marginalize,
)
from .preprocess import GROUP, PreparedNetwork

GREATEST_GRADIENT = "greatest-gradient"
PROGRAM_ORDER = "program-order"

DEFAULT_THRESHOLD = 1e-3
DEFAULT_MAX_PASSES = 100


@dataclass(frozen=True)
class EvidenceSet:
    """The evidence for one reasoning run."""

    constraints: tuple[ConstraintSet, ...]
    policy: str = GREATEST_GRADIENT
    max_passes: int = DEFAULT_MAX_PASSES
    default_threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.policy not in (GREATEST_GRADIENT, PROGRAM_ORDER):
            raise ValueError(f"unknown ordering policy {self.policy!r}")

    def threshold(self, i: int) -> float:
        t = self.constraints[i].threshold
        return self.default_threshold if t is None else t


@dataclass
class Step:
    """One constraint use inside a pass."""

    pass_no: int
    constraint: str
    gradient_before: float
    home: int
    touched: tuple[int, ...]
    marginals: dict[str, float]


@dataclass
class RunTrace:
    steps: list[Step] = field(default_factory=list)
    passes: int = 0
    converged: bool = False
    final_gradients: dict[str, float] = field(default_factory=dict)


def home_clause(net: PreparedNetwork, c: ConstraintSet) -> int:
    """Smallest-scope node containing all constrained variables."""
    if isinstance(c, MarginalConstraint):
        needed = set(c.scope.vars)
    elif isinstance(c, ConditionalConstraint):
        needed = set(c.variables())
    elif isinstance(c, LinearConstraint):
        needed = set(c.scope.vars)
    else:
        raise TypeError(f"unknown constraint type {type(c).__name__}")
    best = None
    for node in net.nodes:
        if node.kind == GROUP:
            continue  # evidence lands on clauses, not internal group joints
        if needed <= set(node.scope.vars):
            if best is None or len(node.scope) < len(net.nodes[best].scope):
                best = node.idx
    if best is None:
        raise ScopeError(
            f"no clause scope contains the constrained variables {sorted(needed)}"
        )
    return best


def validate_evidence(net: PreparedNetwork, ev: EvidenceSet) -> None:
    """Marginal evidence must target declared observables; conditional and
    linear constraints only need their variables inside some clause scope."""
    for c in ev.constraints:
        if isinstance(c, MarginalConstraint):
            undeclared = [v for v in c.scope.vars if v not in net.observables]
            if undeclared:
                raise NetworkStructureError(
                    f"evidence on {undeclared} but these variables are not "
                    f"declared as observations"
                )
        home_clause(net, c)  # raises if no scope covers the variables


def propagate_clause_update(net: PreparedNetwork, updated: int) -> PreparedNetwork:
    """Carry one clause's new table through the rest of the clause tree.

    Breadth-first from the updated clause; every clause is visited at most
    once per propagation.  Each crossed edge applies a Jeffrey update to
    the far clause with the near clause's current separator marginal.
    """
    visited = {updated}
    queue = deque([updated])
    while queue:
        i = queue.popleft()
        for ei in net.adjacency[i]:
            edge = net.edges[ei]
            j = edge.other(i)
            if j in visited:
                continue
            sep_dist = marginalize(net.tables[i], edge.separator)
            refreshed = jeffrey_update(
                net.tables[j],
                MarginalConstraint(edge.separator, tuple(sep_dist.probs)),
            )
            net = net.with_table(j, refreshed)
            visited.add(j)
            queue.append(j)
    return net


def apply_constraint(
    net: PreparedNetwork, c: ConstraintSet
) -> tuple[PreparedNetwork, int]:
    """Apply one constraint set to its home clause and propagate."""
    home = home_clause(net, c)
    table = net.tables[home]
    if isinstance(c, MarginalConstraint):
        new = jeffrey_update(table, c)
    elif isinstance(c, ConditionalConstraint):
        new = conditional_update(table, c)
    else:
        new, _ = lec_solve(table, c)
    net = net.with_table(home, new)
    return propagate_clause_update(net, home), home


def current_gradient(net: PreparedNetwork, c: ConstraintSet) -> np.ndarray:
    """Constraint-set gradient against the current home-clause table."""
    return constraint_gradient(net.tables[home_clause(net, c)], c)


def _scalar(net: PreparedNetwork, c: ConstraintSet) -> float:
    return gradient_scalar(net.tables[home_clause(net, c)], c)


def run_reasoning(
    net: PreparedNetwork, ev: EvidenceSet
) -> tuple[PreparedNetwork, RunTrace]:
    """Iterate constraint applications until every gradient is in tolerance.

    One pass uses each constraint set exactly once.  Under the
    greatest-gradient policy the next constraint within a pass is the
    not-yet-used one with the largest current gradient magnitude (ties in
    program order); under program order they run in the order given.
    Convergence is checked at pass boundaries.
    """
    validate_evidence(net, ev)
    trace = RunTrace()
    cons = ev.constraints
    if not cons:
        trace.converged = True
        return net, trace

    def below_thresholds() -> bool:
        return all(
            _scalar(net, c) < ev.threshold(i) for i, c in enumerate(cons)
        )

    converged = False
    for pass_no in range(1, ev.max_passes + 1):
        if below_thresholds():
            converged = True
            break
        unused = list(range(len(cons)))
        while unused:
            if ev.policy == GREATEST_GRADIENT:
                pick = max(unused, key=lambda i: (_scalar(net, cons[i]), -i))
            else:
                pick = unused[0]
            unused.remove(pick)
            g_before = _scalar(net, cons[pick])
            before_tables = net.tables
            net, home = apply_constraint(net, cons[pick])
            touched = tuple(
                i for i, t in enumerate(net.tables) if t is not before_tables[i]
            )
            trace.steps.append(Step(
                pass_no=pass_no,
                constraint=cons[pick].label(),
                gradient_before=g_before,
                home=home,
                touched=touched,
                marginals={v: posterior_marginal(net, v)[1]
                           for v in net.introducer},
            ))
        trace.passes = pass_no

    trace.converged = converged or below_thresholds()
    trace.final_gradients = {c.label(): _scalar(net, c) for c in cons}
    return net, trace


def posterior_marginal(net: PreparedNetwork, var: str) -> tuple[float, float]:
    """``[P(not var), P(var)]`` read from the clause introducing the variable."""
    if var not in net.introducer:
        raise ScopeError(f"unknown variable {var!r}")
    p = marginalize(net.tables[net.introducer[var]], Scope((var,))).probs
    return float(p[0]), float(p[1])


def marginal_spread(net: PreparedNetwork, var: str) -> float:
    """Largest disagreement on P(var) across the nodes containing it."""
    if var not in net.introducer:
        raise ScopeError(f"unknown variable {var!r}")
    sub = Scope((var,))
    values = [
        marginalize(net.tables[n.idx], sub).probs[1]
        for n in net.nodes
        if var in n.scope
    ]
    return max(values) - min(values)
