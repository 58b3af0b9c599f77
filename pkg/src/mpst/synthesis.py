"""Synthesis of a global type from a compatible communicating system.

The synthesiser walks stable control tuples under the alternating
discipline: at each tuple it picks a sender/receiver pair whose states
match, emits one exchange, and recurses into every label.  Revisiting a
tuple already on the stack closes a recursion binder, provided every
participant has either moved since that frame or is finished; otherwise the
tuple is expanded again, preferring pairs that involve the left-out
participants.
"""

from __future__ import annotations

from itertools import count

from .cfsm import is_basic
from .compat import multiparty_compatible
from .errors import NotBasic, NotCompatible, SynthesisFailure
from .projection import well_formed
from .semantics import trace_equiv
from .syntax import (Action, GBranch, GEnd, Global, GRec, GVar, System,
                     alpha_canonical)


def synthesize(s: System, pair_order: str = "lex") -> Global:
    """Build a global type whose executions match the system's."""
    if pair_order not in ("lex", "revlex"):
        raise ValueError("pair_order must be 'lex' or 'revlex'")
    for p, m in s.machines:
        ok, reasons = is_basic(m)
        if not ok:
            raise NotBasic(f"{p}: {reasons[0]}")
    report = multiparty_compatible(s)
    if not report:
        raise NotCompatible(
            "system is not multiparty compatible: "
            + report.failures[0].message)

    ps = s.participants
    machines = [s.machine(p) for p in ps]
    finals = [m.final_states for m in machines]
    fresh = count()
    stack: list[dict] = []
    snapshots: set[tuple] = set()

    def final_at(tup):
        return {p for p, q, f in zip(ps, tup, finals) if q in f}

    def enabled_pairs(tup):
        pairs = []
        for i, p in enumerate(ps):
            offers: dict[str, set[str]] = {}
            for _, a, _ in machines[i].outgoing(tup[i]):
                if a.op == "!":
                    offers.setdefault(a.receiver, set()).add(a.label)
            for r in sorted(offers):
                j = ps.index(r)
                J = {a.label for _, a, _ in machines[j].outgoing(tup[j])
                     if a.op == "?" and a.sender == p}
                if J:
                    pairs.append((p, r, frozenset(offers[r]), frozenset(J)))
        pairs.sort(key=lambda t: (t[0], t[1]))
        if pair_order == "revlex":
            pairs.reverse()
        return pairs

    def advance(tup, p, r, label):
        i, j = ps.index(p), ps.index(r)
        send = Action(p, r, "!", label)
        recv = Action(p, r, "?", label)
        nxt = list(tup)
        nxt[i] = next(d for _, a, d in machines[i].outgoing(tup[i]) if a == send)
        nxt[j] = next(d for _, a, d in machines[j].outgoing(tup[j]) if a == recv)
        return tuple(nxt)

    def emit(tup) -> Global:
        frame = next((f for f in reversed(stack) if f["tup"] == tup), None)
        if frame is not None:
            if frame["moved"] | final_at(tup) == set(ps):
                frame["used"] = True
                return GVar(frame["var"])
            snap = (tup, frozenset(frame["moved"]))
            if snap in snapshots:
                raise SynthesisFailure(
                    f"cannot close a loop at {tup}: participants "
                    f"{sorted(set(ps) - frame['moved'] - final_at(tup))} "
                    f"never move")
            snapshots.add(snap)
            try:
                return expand(tup, set(ps) - frame["moved"] - final_at(tup))
            finally:
                snapshots.discard(snap)
        return expand(tup, None)

    def expand(tup, prefer) -> Global:
        if final_at(tup) == set(ps):
            return GEnd()
        pairs = enabled_pairs(tup)
        if not pairs:
            raise SynthesisFailure(
                f"no matching sender/receiver pair at control state "
                f"{dict(zip(ps, tup))}")
        if prefer:
            pairs.sort(key=lambda t: -((t[0] in prefer) + (t[1] in prefer)))
        p, r, I, J = pairs[0]
        if not I <= J:
            raise SynthesisFailure(
                f"{p} offers {sorted(I)} but {r} accepts only {sorted(J)} "
                f"at control state {dict(zip(ps, tup))}")
        frame = {"tup": tup, "var": f"t{next(fresh)}", "used": False,
                 "moved": set()}
        stack.append(frame)
        try:
            branches = []
            for label in sorted(I):
                saved = [set(f["moved"]) for f in stack]
                for f in stack:
                    f["moved"].update((p, r))
                branches.append((label, emit(advance(tup, p, r, label))))
                for f, sv in zip(stack, saved):
                    f["moved"] = sv
        finally:
            stack.pop()
        body = GBranch(p, r, tuple(branches))
        return GRec(frame["var"], body) if frame["used"] else body

    g = alpha_canonical(emit(tuple(m.initial for m in machines)))
    wf = well_formed(g)
    if not wf:
        raise SynthesisFailure(
            "synthesised type is not well-formed: " + wf.failures[0][1])
    return g


def verify_roundtrip(s: System, g: Global | None = None, max_len: int = 10,
                     bounds: tuple[int, ...] = (1, 2, 3)):
    """Check that the (synthesised) global type and the system have the same
    bounded traces; returns (ok, {k: (ok, witness)})."""
    if g is None:
        g = synthesize(s)
    results = {}
    for k in bounds:
        ok, witness = trace_equiv(g, s, max_len, k)
        results[k] = (ok, witness)
    return all(ok for ok, _ in results.values()), results
