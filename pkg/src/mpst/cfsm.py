"""Operational engine for communicating systems.

Configurations pair the joint control state with one FIFO word per ordered
participant pair.  Exploration is k-bounded: a send is enabled only while its
channel holds fewer than k messages.  All iteration orders are deterministic
so reports and golden tests are stable.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from itertools import product as iproduct

from .errors import ResourceLimit
from .syntax import Action, Machine, Participant, System

DEFAULT_NODE_CAP = 1_000_000


def node_cap() -> int:
    var = os.environ.get("MPST_NODE_CAP")
    return int(var) if var else DEFAULT_NODE_CAP


@dataclass(frozen=True)
class Config:
    """Joint control state + buffer contents, aligned with the system's
    sorted participant and channel tuples."""

    states: tuple[str, ...]
    buffers: tuple[tuple[str, ...], ...]

    def is_stable(self) -> bool:
        return all(not b for b in self.buffers)


def initial(s: System) -> Config:
    return Config(tuple(s.machine(p).initial for p in s.participants),
                  tuple(() for _ in s.channels))


def state_of(c: Config, s: System, p: Participant) -> str:
    return c.states[s.participants.index(p)]


def fire(c: Config, s: System, k: int | None = None) -> tuple[tuple[Action, Config], ...]:
    """All enabled transitions from c (k-bounded when k is given)."""
    chan_index = {ch: i for i, ch in enumerate(s.channels)}
    out = []
    for i, p in enumerate(s.participants):
        m = s.machine(p)
        for src, act, dst in m.outgoing(c.states[i]):
            ci = chan_index[act.channel]
            if act.op == "!":
                if k is not None and len(c.buffers[ci]) >= k:
                    continue
                bufs = list(c.buffers)
                bufs[ci] = bufs[ci] + (act.label,)
            else:
                if not c.buffers[ci] or c.buffers[ci][0] != act.label:
                    continue
                bufs = list(c.buffers)
                bufs[ci] = bufs[ci][1:]
            states = list(c.states)
            states[i] = dst
            out.append((act, Config(tuple(states), tuple(bufs))))
    return tuple(out)


@dataclass(frozen=True)
class ReachSet:
    """k-bounded reachability set with its transition edges and BFS parents."""

    k: int
    initial: Config
    configs: tuple[Config, ...]
    edges: tuple[tuple[Config, Action, Config], ...]
    parents: dict[Config, tuple[Config, Action] | None] = field(hash=False, compare=False, default=None)

    def path_to(self, c: Config) -> tuple[Action, ...]:
        """Shortest action path from the initial configuration to c."""
        acc = []
        while True:
            prev = self.parents[c]
            if prev is None:
                return tuple(reversed(acc))
            c, act = prev[0], prev[1]
            acc.append(act)

    @property
    def config_set(self) -> frozenset[Config]:
        return frozenset(self.configs)


def reach(s: System, k: int, cap: int | None = None) -> ReachSet:
    """BFS closure of k-bounded firing from the initial configuration."""
    if k < 1:
        raise ValueError("bound k must be >= 1")
    cap = cap if cap is not None else node_cap()
    init = initial(s)
    parents: dict[Config, tuple[Config, Action] | None] = {init: None}
    order = [init]
    edges = []
    q = deque([init])
    while q:
        c = q.popleft()
        for act, c2 in fire(c, s, k):
            edges.append((c, act, c2))
            if c2 not in parents:
                parents[c2] = (c, act)
                order.append(c2)
                if len(order) > cap:
                    raise ResourceLimit(
                        f"reachability set exceeded the node cap of {cap}")
                q.append(c2)
    return ReachSet(k, init, tuple(order), tuple(edges), parents)


def classify(c: Config, s: System) -> frozenset[str]:
    """Configuration flags: stable/final/deadlock/orphan/unspecified_reception,
    or intermediate when none apply.  Multiple flags may hold."""
    flags = set()
    stable = c.is_stable()
    machines = [s.machine(p) for p in s.participants]
    allfinal = all(m.is_final(q) for m, q in zip(machines, c.states))
    if stable:
        flags.add("stable")
    if stable and allfinal:
        flags.add("final")
    if stable and not allfinal and all(m.is_receiving(q) for m, q in zip(machines, c.states)):
        flags.add("deadlock")
    if allfinal and any(c.buffers):
        flags.add("orphan")
    chan_index = {ch: i for i, ch in enumerate(s.channels)}
    for m, q in zip(machines, c.states):
        if not m.is_receiving(q):
            continue
        outs = m.outgoing(q)
        if all(c.buffers[chan_index[a.channel]]
               and c.buffers[chan_index[a.channel]][0] != a.label
               for _, a, _ in outs):
            flags.add("unspecified_reception")
            break
    return frozenset(flags) if flags else frozenset({"intermediate"})


BAD_FLAGS = frozenset({"deadlock", "orphan", "unspecified_reception"})


@dataclass(frozen=True)
class SafetyReport:
    k: int
    violations: tuple[tuple[str, tuple[Action, ...], Config], ...]
    liveness: bool | None  # None when no final configuration exists in RS_k
    liveness_counterexample: Config | None = None

    @property
    def ok(self) -> bool:
        return not self.violations and self.liveness is not False

    def to_json(self) -> dict:
        return {
            "bound": self.k,
            "violations": [
                {"kind": kind,
                 "path": [str(a) for a in path],
                 "configuration": _config_json(cfg)}
                for kind, path, cfg in self.violations
            ],
            "liveness": self.liveness,
        }


def _config_json(c: Config) -> dict:
    return {"states": list(c.states),
            "buffers": [list(b) for b in c.buffers]}


def check_safety(s: System, k: int, check_liveness: bool = True,
                 cap: int | None = None) -> SafetyReport:
    """Scan RS_k for deadlock/orphan/unspecified-reception configurations;
    k-bounded liveness = every configuration can reach a final one in RS_k."""
    rs = reach(s, k, cap)
    violations = []
    finals = []
    for c in rs.configs:
        flags = classify(c, s)
        for kind in sorted(flags & BAD_FLAGS):
            violations.append((kind, rs.path_to(c), c))
        if "final" in flags:
            finals.append(c)
    liveness: bool | None = None
    counterexample = None
    if check_liveness and finals:
        backward: dict[Config, set[Config]] = {}
        for a, _, b in rs.edges:
            backward.setdefault(b, set()).add(a)
        live = set(finals)
        todo = list(finals)
        while todo:
            x = todo.pop()
            for y in backward.get(x, ()):
                if y not in live:
                    live.add(y)
                    todo.append(y)
        liveness = True
        for c in rs.configs:
            if c not in live:
                liveness = False
                counterexample = c
                break
    return SafetyReport(k, tuple(violations), liveness, counterexample)


def is_basic(m: Machine) -> tuple[bool, tuple[str, ...]]:
    """Deterministic + directed + no mixed states, with reasons when not."""
    reasons = []
    seen: dict[tuple[str, Action], str] = {}
    for src, act, dst in m.transitions:
        if (src, act) in seen and seen[(src, act)] != dst:
            reasons.append(f"nondeterministic: {src} --{act}--> both "
                           f"{seen[(src, act)]} and {dst}")
        seen[(src, act)] = dst
    for q in sorted(m.states):
        outs = m.outgoing(q)
        peers = {a.receiver if a.op == "!" else a.sender for _, a, _ in outs}
        if len(peers) > 1:
            reasons.append(f"not directed: state {q} talks to {sorted(peers)}")
        if m.is_mixed(q):
            reasons.append(f"mixed state: {q} both sends and receives")
    return (not reasons, tuple(reasons))


# --------------------------------------------------------------------------
# Trace tries.  A trace set is stored as a nested dict mapping Action to
# sub-trie; the set is prefix-closed so every node is accepting.

def traces(s: System, max_len: int, k: int, cap: int | None = None) -> dict:
    cap = cap if cap is not None else node_cap()
    init = initial(s)
    root: dict = {}
    # Level-synchronous walk over (config, trie-node) pairs, deduplicated so
    # converging interleavings do not multiply the frontier.
    frontier = {(init, id(root)): (init, root)}
    count = 0
    for _ in range(max_len):
        nxt = {}
        for c, node in frontier.values():
            for act, c2 in fire(c, s, k):
                sub = node.get(act)
                if sub is None:
                    sub = {}
                    node[act] = sub
                    count += 1
                    if count > cap:
                        raise ResourceLimit(f"trace trie exceeded the node cap of {cap}")
                nxt.setdefault((c2, id(sub)), (c2, sub))
        frontier = nxt
        if not frontier:
            break
    return root


def trie_flatten(trie: dict, prefix: tuple = ()) -> set[tuple]:
    """All traces in the trie (prefix-closed set of action tuples)."""
    out = {prefix}
    for act, sub in trie.items():
        out |= trie_flatten(sub, prefix + (act,))
    return out


# --------------------------------------------------------------------------
# Associated product CFSM

@dataclass(frozen=True)
class ProductMachine:
    """Product of several machines with componentwise transitions.

    States are tuples aligned with `names`; expansion is lazy, `materialize`
    builds the full product space Q1 x ... x Qn.
    """

    names: tuple[Participant, ...]
    machines: tuple[Machine, ...]
    initial: tuple[str, ...]

    def successors(self, state: tuple[str, ...]) -> tuple[tuple[Action, tuple[str, ...]], ...]:
        out = []
        for i, m in enumerate(self.machines):
            for _, act, dst in m.outgoing(state[i]):
                nxt = list(state)
                nxt[i] = dst
                out.append((act, tuple(nxt)))
        return tuple(out)

    def materialize(self) -> tuple[tuple[tuple[str, ...], ...],
                                   tuple[tuple[tuple[str, ...], Action, tuple[str, ...]], ...]]:
        spaces = [sorted(m.states) for m in self.machines]
        states = tuple(iproduct(*spaces))
        edges = []
        for st in states:
            for act, nxt in self.successors(st):
                edges.append((st, act, nxt))
        return states, tuple(edges)


def associated(s: System, minus: Participant | None = None) -> ProductMachine:
    names = tuple(p for p in s.participants if p != minus)
    machines = tuple(s.machine(p) for p in names)
    return ProductMachine(names, machines,
                          tuple(m.initial for m in machines))


# --------------------------------------------------------------------------
# DOT export

def dot_machine(m: Machine) -> str:
    lines = [f'digraph "{m.owner}" {{', "  rankdir=LR;",
             f'  "__init" [shape=point, style=invis];']
    for q in sorted(m.states):
        shape = "doublecircle" if q == m.initial else "circle"
        lines.append(f'  "{q}" [shape={shape}];')
    lines.append(f'  "__init" -> "{m.initial}";')
    for src, act, dst in m.transitions:
        lines.append(f'  "{src}" -> "{dst}" [label="{act}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dot_system(s: System) -> str:
    return "".join(dot_machine(m) for _, m in s.machines)


def dot_reach(rs: ReachSet) -> str:
    names = {c: f"c{i}" for i, c in enumerate(rs.configs)}
    lines = ["digraph reach {", "  rankdir=LR;"]
    for c in rs.configs:
        label = ",".join(c.states)
        shape = "doublecircle" if c == rs.initial else "circle"
        lines.append(f'  "{names[c]}" [shape={shape}, label="{label}"];')
    for a, act, b in rs.edges:
        lines.append(f'  "{names[a]}" -> "{names[b]}" [label="{act}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
