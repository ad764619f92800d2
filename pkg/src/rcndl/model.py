"""Domain types shared by every stage of the interpreter.

A network is a collection of small joint probability tables over ordered
scopes of binary variables.  State indexing follows one fixed convention
everywhere: for a scope ``(x0, x1, ..., x_{n-1})``, state ``j`` assigns
``x_k`` the value ``(j >> (n-1-k)) & 1``.  In other words the *first*
variable in the scope is the most significant bit and ``false`` orders
before ``true``, so the table over ``(A, B)`` is laid out as
``[p(~A,~B), p(~A,B), p(A,~B), p(A,B)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ArityError, InfeasibleEvidenceError, ScopeError

UNIT_SUM_TOL = 1e-9

# Sentinel accepted in source probability lists for "unknown".
UNKNOWN = -1.0


@dataclass(frozen=True)
class Scope:
    """An ordered tuple of distinct variable names."""

    vars: tuple[str, ...]

    def __init__(self, vars: Iterable[str]):
        vs = tuple(vars)
        if not vs:
            raise ScopeError("scope must contain at least one variable")
        if len(set(vs)) != len(vs):
            raise ScopeError(f"duplicate variable in scope {vs}")
        object.__setattr__(self, "vars", vs)

    def __len__(self) -> int:
        return len(self.vars)

    def __iter__(self):
        return iter(self.vars)

    def __contains__(self, var: str) -> bool:
        return var in self.vars

    def index(self, var: str) -> int:
        try:
            return self.vars.index(var)
        except ValueError:
            raise ScopeError(f"variable {var!r} not in scope {self.vars}") from None

    def issubset(self, other: "Scope") -> bool:
        return set(self.vars) <= set(other.vars)

    @property
    def n_states(self) -> int:
        return 1 << len(self.vars)


def state_index(scope: Scope, assignment: Mapping[str, bool]) -> int:
    """Index of the state in which each scope variable takes the given value.

    The assignment must cover exactly the scope's variables.
    """
    if set(assignment) != set(scope.vars):
        missing = set(scope.vars) - set(assignment)
        extra = set(assignment) - set(scope.vars)
        raise ScopeError(
            f"assignment does not match scope: missing {sorted(missing)}, "
            f"extra {sorted(extra)}"
        )
    n = len(scope)
    j = 0
    for k, v in enumerate(scope.vars):
        if assignment[v]:
            j |= 1 << (n - 1 - k)
    return j


def _bit_column(scope: Scope, var: str) -> np.ndarray:
    """0/1 value of ``var`` in every state of ``scope``, as an int array."""
    n = len(scope)
    k = scope.index(var)
    idx = np.arange(scope.n_states)
    return (idx >> (n - 1 - k)) & 1


def event_indices(scope: Scope, partial: Mapping[str, bool]) -> np.ndarray:
    """Indices of all states of ``scope`` consistent with a partial assignment."""
    mask = np.ones(scope.n_states, dtype=bool)
    for var, val in partial.items():
        mask &= _bit_column(scope, var) == int(val)
    return np.nonzero(mask)[0]


@dataclass(frozen=True)
class JointTable:
    """A probability distribution over the states of a scope."""

    scope: Scope
    probs: np.ndarray = field(repr=False)

    def __init__(self, scope: Scope, probs, *, _validate: bool = True):
        p = np.asarray(probs, dtype=float)
        if p.shape != (scope.n_states,):
            raise ArityError(
                f"table over {scope.vars} needs {scope.n_states} entries, "
                f"got {p.shape}"
            )
        if _validate:
            if p.min() < -1e-12:
                raise ValueError(f"negative probability {p.min()} in table")
            if abs(p.sum() - 1.0) > UNIT_SUM_TOL:
                raise ValueError(f"table sums to {p.sum():.12f}, not 1")
            p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "probs", p)

    def __repr__(self):
        vals = ", ".join(f"{v:.6f}" for v in self.probs)
        return f"JointTable({'/'.join(self.scope.vars)}: [{vals}])"

    def prob_of(self, partial: Mapping[str, bool]) -> float:
        """Total probability of the event described by a partial assignment."""
        return float(self.probs[event_indices(self.scope, partial)].sum())


def _substate_map(scope: Scope, sub: Scope) -> np.ndarray:
    """For each state of ``scope``, the index of its restriction to ``sub``."""
    m = len(sub)
    out = np.zeros(scope.n_states, dtype=np.intp)
    for k, var in enumerate(sub.vars):
        out |= _bit_column(scope, var) << (m - 1 - k)
    return out


def marginalize(table: JointTable, sub: Scope) -> JointTable:
    """Sum the table down onto a sub-scope (any variable order)."""
    if not sub.issubset(table.scope):
        raise ScopeError(
            f"{sub.vars} is not a subset of table scope {table.scope.vars}"
        )
    smap = _substate_map(table.scope, sub)
    out = np.zeros(sub.n_states)
    np.add.at(out, smap, table.probs)
    return JointTable(sub, out, _validate=False)


def multiply_condition(
    head_joint: JointTable, cond: Sequence[float], body: str
) -> JointTable:
    """Extend a joint over the head scope by a conditional for one new variable.

    ``cond[i]`` is the probability that ``body`` is true given head
    configuration ``i``; the result ranges over ``head ++ [body]``.
    """
    n = head_joint.scope.n_states
    c = np.asarray(cond, dtype=float)
    if c.shape != (n,):
        raise ArityError(f"conditional list needs {n} entries, got {c.shape}")
    if body in head_joint.scope:
        raise ScopeError(f"body variable {body!r} already occurs in the head")
    out = np.empty(2 * n)
    out[0::2] = head_joint.probs * (1.0 - c)
    out[1::2] = head_joint.probs * c
    return JointTable(Scope(tuple(head_joint.scope.vars) + (body,)), out,
                      _validate=False)


def scale_events(
    table: JointTable, partition: Scope, targets: np.ndarray
) -> JointTable:
    """Rescale each event of a partition to hit the target event probabilities.

    This is the shared mechanical core of the marginal (Jeffrey) update:
    every state belonging to partition event ``l`` is multiplied by
    ``targets[l] / current[l]``.  Events with zero target and zero current
    mass are left alone; positive target on a zero-mass event is infeasible.
    """
    smap = _substate_map(table.scope, partition)
    current = np.zeros(partition.n_states)
    np.add.at(current, smap, table.probs)
    factors = np.ones(partition.n_states)
    for l in range(partition.n_states):
        if current[l] > 0.0:
            factors[l] = targets[l] / current[l]
        elif targets[l] > 0.0:
            raise InfeasibleEvidenceError(
                f"event {l} of partition {partition.vars} has zero prior "
                f"probability but target {targets[l]}"
            )
    return JointTable(table.scope, table.probs * factors[smap], _validate=False)


# --------------------------------------------------------------------------
# Parsed clause forms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SourcePos:
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class QueryClause:
    """``?- c1 : [..]; c2 : [..].`` -- the root cliques with their priors."""

    cliques: tuple[tuple[Scope, tuple[float, ...]], ...]
    pos: SourcePos | None = None


@dataclass(frozen=True)
class RuleClause:
    """``h1, h2 -> b : [..].`` -- conditionals P(body | head config)."""

    head: Scope
    body: str
    cond: tuple[float, ...]
    pos: SourcePos | None = None


@dataclass(frozen=True)
class ObservationClause:
    """``v1, v2.`` -- declares observable variables."""

    vars: tuple[str, ...]
    pos: SourcePos | None = None


Clause = QueryClause | RuleClause | ObservationClause


# --------------------------------------------------------------------------
# Constraint sets (evidence)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginalConstraint:
    """Target probabilities for the event partition of a variable set."""

    scope: Scope
    targets: tuple[float, ...]
    threshold: float | None = None

    def __post_init__(self):
        t = np.asarray(self.targets, dtype=float)
        if t.shape != (self.scope.n_states,):
            raise ArityError(
                f"marginal constraint over {self.scope.vars} needs "
                f"{self.scope.n_states} targets"
            )
        # tolerate float rounding from propagated separator marginals
        if t.min() < -1e-12 or t.max() > 1.0 + 1e-12:
            raise ValueError("marginal targets must lie in [0, 1]")
        if abs(t.sum() - 1.0) > UNIT_SUM_TOL:
            raise ValueError(f"marginal targets sum to {t.sum()}, not 1")

    @property
    def is_bayesian(self) -> bool:
        return all(t in (0.0, 1.0) for t in self.targets)

    def label(self) -> str:
        if len(self.scope) == 1:
            return f"P({self.scope.vars[0]})={self.targets[1]:g}"
        return f"P({','.join(self.scope.vars)})=[{','.join(f'{t:g}' for t in self.targets)}]"


@dataclass(frozen=True)
class ConditionalConstraint:
    """A target value for P(target | condition event)."""

    target: str
    condition: tuple[tuple[str, bool], ...]
    prob: float
    threshold: float | None = None

    def __post_init__(self):
        cond_vars = [v for v, _ in self.condition]
        if len(set(cond_vars)) != len(cond_vars):
            raise ScopeError("duplicate variable in condition event")
        if self.target in cond_vars:
            raise ScopeError(
                f"target {self.target!r} may not appear in its own condition"
            )
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError("conditional target must lie in [0, 1]")

    @property
    def is_bayesian(self) -> bool:
        return self.prob in (0.0, 1.0)

    def variables(self) -> tuple[str, ...]:
        return (self.target,) + tuple(v for v, _ in self.condition)

    def label(self) -> str:
        conds = ", ".join(v if val else f"!{v}" for v, val in self.condition)
        return f"P({self.target}|{conds})={self.prob:g}"


@dataclass(frozen=True)
class LinearConstraint:
    """Rows ``a_k`` over the states of a scope with right-hand sides ``b_k``."""

    scope: Scope
    rows: tuple[tuple[float, ...], ...]
    rhs: tuple[float, ...]
    threshold: float | None = None

    def __post_init__(self):
        if len(self.rows) != len(self.rhs):
            raise ArityError("row count does not match right-hand side count")
        for r in self.rows:
            if len(r) != self.scope.n_states:
                raise ArityError(
                    f"linear row needs {self.scope.n_states} coefficients"
                )

    @property
    def is_bayesian(self) -> bool:
        return False

    def label(self) -> str:
        return f"linear[{len(self.rows)} rows on {','.join(self.scope.vars)}]"


ConstraintSet = MarginalConstraint | ConditionalConstraint | LinearConstraint
