"""Projection of global types onto participants, merge, well-formedness, subtyping."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MergeFailure
from .syntax import (
    GBranch, GEnd, GRec, GVar, Global,
    LEnd, LRec, LRecv, LSend, LVar, Local,
    Participant, gparticipants, unfold,
)


def merge(t1: Local, t2: Local, _path: tuple[str, ...] = ()) -> Local:
    """The partial commutative merge ⊔.

    T ⊔ T = T; receive branchings from the same peer union their branches,
    recursing on shared labels; homomorphic on rec; undefined elsewhere.
    """
    if t1 == t2:
        return t1
    if isinstance(t1, LRecv) and isinstance(t2, LRecv) and t1.peer == t2.peer:
        left, right = dict(t1.branches), dict(t2.branches)
        out = []
        for lbl in sorted(left.keys() | right.keys()):
            if lbl in left and lbl in right:
                out.append((lbl, merge(left[lbl], right[lbl], _path + (lbl,))))
            else:
                out.append((lbl, left.get(lbl, right.get(lbl))))
        return LRecv(t1.peer, tuple(out))
    if isinstance(t1, LRec) and isinstance(t2, LRec) and t1.var == t2.var:
        return LRec(t1.var, merge(t1.body, t2.body, _path))
    raise MergeFailure(f"cannot merge {t1} with {t2}", _path)


def project(g: Global, p: Participant,
            _memo: dict | None = None) -> Local:
    """Project a global type onto one participant (Def-3.1 equations).

    Senders see a selection, receivers a branching, third parties the merge
    of the branch projections.  An in-flight branching (mid set) projects
    with the receiver still seeing the full branching while everyone else
    sees the chosen branch.
    """
    memo = _memo if _memo is not None else {}
    key = (g, p)
    if key in memo:
        return memo[key]
    out = _project(g, p, memo)
    memo[key] = out
    return out


def _project(g: Global, p: Participant, memo) -> Local:
    if isinstance(g, GEnd):
        return LEnd()
    if isinstance(g, GVar):
        return LVar(g.var)
    if isinstance(g, GRec):
        body = project(g.body, p, memo)
        if body == LVar(g.var):
            return LEnd()
        return LRec(g.var, body)
    assert isinstance(g, GBranch)
    if g.mid is not None:
        chosen = g.branches[g.mid][1]
        if p == g.dst:
            return LRecv(g.src, tuple((l, project(b, p, memo)) for l, b in g.branches))
        return project(chosen, p, memo)
    if p == g.src:
        return LSend(g.dst, tuple((l, project(b, p, memo)) for l, b in g.branches))
    if p == g.dst:
        return LRecv(g.src, tuple((l, project(b, p, memo)) for l, b in g.branches))
    acc = None
    for l, b in g.branches:
        t = project(b, p, memo)
        acc = t if acc is None else merge(acc, t, (l,))
    return acc


@dataclass(frozen=True)
class WellFormedReport:
    ok: bool
    failures: tuple[tuple[Participant, str], ...]

    def __bool__(self):
        return self.ok


def well_formed(g: Global) -> WellFormedReport:
    """True iff every participant of g is projectable."""
    failures = []
    for p in sorted(gparticipants(g)):
        try:
            project(g, p)
        except MergeFailure as e:
            failures.append((p, str(e)))
    return WellFormedReport(not failures, tuple(failures))


# --------------------------------------------------------------------------
# Subtyping: send branches covariant with identical label sets, receive
# branches widen (I ⊆ J).  Decided by unfolding both sides into their finite
# state graphs and running a simulation fixpoint.

def _head(t: Local) -> Local:
    while isinstance(t, LRec):
        t = unfold(t)
    return t


def subtype(t1: Local, t2: Local) -> bool:
    pending = [(_head(t1), _head(t2))]
    shape_ok: dict[tuple, bool] = {}
    succ: dict[tuple, list[tuple]] = {}
    seen = set()
    while pending:
        a, b = pending.pop()
        if (a, b) in seen:
            continue
        seen.add((a, b))
        key = (a, b)
        if isinstance(a, LEnd) and isinstance(b, LEnd):
            shape_ok[key] = True
            succ[key] = []
        elif isinstance(a, LSend) and isinstance(b, LSend) and a.peer == b.peer \
                and set(a.labels()) == set(b.labels()):
            shape_ok[key] = True
            succ[key] = [(_head(a.branch(l)), _head(b.branch(l))) for l in a.labels()]
        elif isinstance(a, LRecv) and isinstance(b, LRecv) and a.peer == b.peer \
                and set(a.labels()) <= set(b.labels()):
            shape_ok[key] = True
            succ[key] = [(_head(a.branch(l)), _head(b.branch(l))) for l in a.labels()]
        else:
            shape_ok[key] = False
            succ[key] = []
        pending.extend(succ[key])
    # greatest fixpoint: knock out pairs whose requirements fail
    ok = {k for k, v in shape_ok.items() if v}
    changed = True
    while changed:
        changed = False
        for k in list(ok):
            if any(s not in ok for s in succ[k]):
                ok.discard(k)
                changed = True
    return (_head(t1), _head(t2)) in ok
