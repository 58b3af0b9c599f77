"""Asynchronous semantics of global types and collections of local types.

A global type executes by splitting each exchange into a send and a receive:
the send commits the branch and leaves an in-flight marker on the type, the
receive discharges it.  Execution may also proceed underneath an exchange —
uniformly across uncommitted branches for participants not involved in it,
and inside a committed branch for everyone but its receiver.  Buffer contents
are recoverable from the markers, which is how send bounding works.

A collection of local types executes against explicit FIFO buffers with the
same bounding discipline, so trace sets of the two sides can be compared,
as well as against the trace sets of machine systems.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cfsm import node_cap, traces as system_traces
from .errors import ResourceLimit
from .projection import project
from .syntax import (Action, GBranch, GEnd, Global, GRec, GVar, LRec, LRecv,
                     LSend, LVar, Local, Participant, System, gparticipants,
                     unfold)


def step_global(g: Global, k: int | None = None) -> tuple[tuple[Action, Global], ...]:
    """All enabled steps of a global type, k-bounded when k is given."""
    steps = _step(g)
    if k is not None:
        bufs = gbuffers(g)
        steps = tuple(
            (act, g2) for act, g2 in steps
            if act.op == "?" or len(bufs.get(act.channel, ())) < k)
    return steps


def _step(g: Global, blocked: frozenset = frozenset()) -> tuple[tuple[Action, Global], ...]:
    # `blocked` holds participants pinned down by enclosing exchanges; once
    # a subterm involves only blocked participants nothing inside it can
    # surface, which also grounds the recursion on recursive types.
    if isinstance(g, (GEnd, GVar)):
        return ()
    if blocked and gparticipants(g) <= blocked:
        return ()
    if isinstance(g, GRec):
        return _step(unfold(g), blocked)
    assert isinstance(g, GBranch)
    out = []
    if g.mid is None:
        # commit a branch by sending its label
        if g.src not in blocked:
            for j, (label, _) in enumerate(g.branches):
                act = Action(g.src, g.dst, "!", label)
                out.append((act, GBranch(g.src, g.dst, g.branches, mid=j)))
        # step uniformly under every branch for uninvolved participants
        inner = blocked | {g.src, g.dst}
        for act, g0 in _step(g.branches[0][1], inner):
            if act.subject in (g.src, g.dst):
                continue
            newbranches = [(g.branches[0][0], g0)]
            okay = True
            for label, gi in g.branches[1:]:
                succ = [h for a2, h in _step(gi, inner) if a2 == act]
                if not succ:
                    okay = False
                    break
                newbranches.append((label, succ[0]))
            if okay:
                out.append((act, GBranch(g.src, g.dst, tuple(newbranches))))
    else:
        label, cont = g.branches[g.mid]
        if g.dst not in blocked:
            act = Action(g.src, g.dst, "?", label)
            out.append((act, cont))
        # inside the committed branch everyone but the receiver may move
        for a2, c2 in _step(cont, blocked | {g.dst}):
            if a2.subject == g.dst:
                continue
            newbranches = list(g.branches)
            newbranches[g.mid] = (label, c2)
            out.append((a2, GBranch(g.src, g.dst, tuple(newbranches), mid=g.mid)))
    return tuple(out)


def gbuffers(g: Global) -> dict[tuple[Participant, Participant], tuple[str, ...]]:
    """In-flight words per channel, read off the commitment markers."""
    bufs: dict[tuple[Participant, Participant], tuple[str, ...]] = {}

    def go(u: Global) -> None:
        if isinstance(u, GRec):
            go(u.body)
        elif isinstance(u, GBranch):
            if u.mid is None:
                go(u.branches[0][1])
            else:
                ch = (u.src, u.dst)
                bufs[ch] = bufs.get(ch, ()) + (u.branches[u.mid][0],)
                go(u.branches[u.mid][1])

    go(g)
    return bufs


# --------------------------------------------------------------------------
# Collections of local types with explicit buffers

Channel = tuple[Participant, Participant]


def _channels(participants: tuple[Participant, ...]) -> tuple[Channel, ...]:
    return tuple((p, q) for p in participants for q in participants if p != q)


@dataclass(frozen=True)
class LocalConfig:
    """A sorted family of local types plus FIFO buffers for every channel."""

    types: tuple[tuple[Participant, Local], ...]
    buffers: tuple[tuple[str, ...], ...]

    @property
    def participants(self) -> tuple[Participant, ...]:
        return tuple(p for p, _ in self.types)

    @property
    def channels(self) -> tuple[Channel, ...]:
        return _channels(self.participants)

    def type_of(self, p: Participant) -> Local:
        for q, t in self.types:
            if q == p:
                return t
        raise KeyError(p)


def local_config(types: dict[Participant, Local]) -> LocalConfig:
    items = tuple(sorted(types.items()))
    ps = tuple(p for p, _ in items)
    return LocalConfig(items, tuple(() for _ in _channels(ps)))


def project_config(g: Global) -> LocalConfig:
    """Project a (possibly marked) global type to a local configuration,
    buffers included."""
    ps = gparticipants(g)
    types = {p: project(g, p) for p in ps}
    cfg = local_config(types)
    bufs = gbuffers(g)
    chans = cfg.channels
    return LocalConfig(cfg.types,
                       tuple(bufs.get(ch, ()) for ch in chans))


def _norm(t: Local) -> Local:
    while isinstance(t, LRec):
        t = unfold(t)
    return t


def step_local(c: LocalConfig, k: int | None = None) -> tuple[tuple[Action, LocalConfig], ...]:
    """All enabled steps of a local-type collection (k-bounded sends)."""
    chans = c.channels
    index = {ch: i for i, ch in enumerate(chans)}
    out = []
    for i, (p, t0) in enumerate(c.types):
        t = _norm(t0)
        if isinstance(t, LSend):
            ci = index[(p, t.peer)]
            if k is not None and len(c.buffers[ci]) >= k:
                continue
            for label, cont in t.branches:
                bufs = list(c.buffers)
                bufs[ci] = bufs[ci] + (label,)
                types = list(c.types)
                types[i] = (p, cont)
                out.append((Action(p, t.peer, "!", label),
                            LocalConfig(tuple(types), tuple(bufs))))
        elif isinstance(t, LRecv):
            ci = index[(t.peer, p)]
            buf = c.buffers[ci]
            if not buf:
                continue
            for label, cont in t.branches:
                if buf[0] != label:
                    continue
                bufs = list(c.buffers)
                bufs[ci] = bufs[ci][1:]
                types = list(c.types)
                types[i] = (p, cont)
                out.append((Action(t.peer, p, "?", label),
                            LocalConfig(tuple(types), tuple(bufs))))
    return tuple(out)


# --------------------------------------------------------------------------
# Trace tries and trace equivalence

def traces_global(g: Global, max_len: int, k: int, cap: int | None = None) -> dict:
    return _trie(g, step_global, max_len, k, cap)


def traces_local(c: LocalConfig, max_len: int, k: int, cap: int | None = None) -> dict:
    return _trie(c, step_local, max_len, k, cap)


def _trie(state, stepper, max_len: int, k: int, cap: int | None) -> dict:
    cap = cap if cap is not None else node_cap()
    root: dict = {}
    frontier = {(state, id(root)): (state, root)}
    count = 0
    for _ in range(max_len):
        nxt = {}
        for st, node in frontier.values():
            for act, st2 in stepper(st, k):
                sub = node.get(act)
                if sub is None:
                    sub = {}
                    node[act] = sub
                    count += 1
                    if count > cap:
                        raise ResourceLimit(
                            f"trace trie exceeded the node cap of {cap}")
                nxt.setdefault((st2, id(sub)), (st2, sub))
        frontier = nxt
        if not frontier:
            break
    return root


def _as_trie(x, max_len: int, k: int) -> dict:
    if isinstance(x, dict) and all(isinstance(v, dict) for v in x.values()) \
            and all(isinstance(a, Action) for a in x):
        return x  # already a trie
    if isinstance(x, (GEnd, GVar, GRec, GBranch)):
        return traces_global(x, max_len, k)
    if isinstance(x, LocalConfig):
        return traces_local(x, max_len, k)
    if isinstance(x, System):
        return system_traces(x, max_len, k)
    from . import generalized as gen
    if isinstance(x, gen.GeneralGlobal):
        return gen.gtraces_global(x, max_len, k)
    if isinstance(x, dict):
        return gen.gtraces_local(x, max_len, k)
    raise TypeError(f"cannot take traces of {type(x).__name__}")


def trace_equiv(x, y, max_len: int, k: int) -> tuple[bool, tuple[Action, ...] | None]:
    """Compare bounded trace sets; on mismatch return a shortest
    distinguishing trace (ties broken lexicographically)."""
    tx = _as_trie(x, max_len, k)
    ty = _as_trie(y, max_len, k)
    if tx == ty:
        return True, None
    # BFS over the union of both tries for the first point of divergence
    frontier = [((), tx, ty)]
    while frontier:
        nxt = []
        for prefix, a, b in frontier:
            labels = sorted(set(a) | set(b))
            for act in labels:
                if (act in a) != (act in b):
                    return False, prefix + (act,)
            for act in labels:
                nxt.append((prefix + (act,), a[act], b[act]))
        frontier = nxt
    raise AssertionError("tries differ but no divergence found")
