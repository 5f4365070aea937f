"""Deterministic lock-step simulator for LOCAL, CONGEST and RADIO-CONGEST
with the sleeping model and per-vertex energy accounting.

A round has two phases. Every awake vertex first produces its outbox
(``send``), then receives what awake neighbors sent in the same round and
updates its state (``on_wake``). A vertex that is asleep neither sends nor
receives; messages addressed to it are lost.
"""
from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ._rng import priority_from_seed, vertex_seed
from .errors import BandwidthExceeded, MultiSendInRadio
from .graph import Graph

__all__ = [
    "LOCAL",
    "CONGEST",
    "RADIO",
    "HALT",
    "ModelSpec",
    "Packet",
    "payload_bits",
    "VertexContext",
    "VertexProgram",
    "SimRun",
    "EnergyReport",
    "run",
    "energy_report",
    "format_trace",
    "combine_runs",
]

LOCAL = "LOCAL"
CONGEST = "CONGEST"
RADIO = "RADIO-CONGEST"
HALT = None

_EVENT_ORDER = {"send": 0, "recv": 1, "collision": 2}


@dataclass(frozen=True)
class ModelSpec:
    kind: str = LOCAL
    bandwidth_bits: int | None = None

    def __post_init__(self):
        if self.kind not in (LOCAL, CONGEST, RADIO):
            raise ValueError(f"unknown model {self.kind!r}")
        if self.bandwidth_bits is not None and self.bandwidth_bits < 1:
            raise ValueError("bandwidth must be positive")

    def bandwidth(self, n: int) -> int | None:
        """Bit limit per payload, ``8 * ceil(log2 n)`` unless given; ``None`` for LOCAL."""
        if self.kind == LOCAL:
            return None
        need = max(1, math.ceil(math.log2(max(n, 2))))
        bw = self.bandwidth_bits if self.bandwidth_bits is not None else 8 * need
        if bw < need:
            raise ValueError(f"bandwidth {bw} cannot hold an id of {need} bits")
        return bw


class Packet:
    """Fixed-width encoding of a tuple of nonnegative integers.

    The bit length is the sum of the declared widths, so the CONGEST limit is
    checked against exactly what would go on the wire.
    """

    __slots__ = ("values", "widths")

    def __init__(self, values: Sequence[int], widths: Sequence[int]):
        values = tuple(int(v) for v in values)
        widths = tuple(int(w) for w in widths)
        if len(values) != len(widths):
            raise ValueError("one width per value")
        for v, w in zip(values, widths):
            if w < 1 or not 0 <= v < (1 << w):
                raise ValueError(f"value {v} does not fit in {w} bits")
        self.values = values
        self.widths = widths

    @property
    def nbits(self) -> int:
        return sum(self.widths)

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        return isinstance(other, Packet) and self.values == other.values and self.widths == other.widths

    def __hash__(self):
        return hash((self.values, self.widths))

    def __repr__(self):
        return f"Packet({self.values}, {self.widths})"


def payload_bits(x: Any) -> int:
    """Bit length of a payload under the kernel's encoding.

    Packets use their declared widths; integers their binary length (plus a
    sign bit when negative); booleans one bit; strings and bytes eight bits
    per element; tuples and lists the sum over their items.
    """
    if x is None:
        return 0
    if isinstance(x, Packet):
        return x.nbits
    if isinstance(x, bool):
        return 1
    if isinstance(x, (int, np.integer)):
        x = int(x)
        return max(1, x.bit_length()) + (1 if x < 0 else 0)
    if isinstance(x, (str, bytes)):
        return 8 * len(x)
    if isinstance(x, (tuple, list)):
        return sum(payload_bits(e) for e in x)
    raise TypeError(f"no bit encoding for payload of type {type(x).__name__}")


def _trace_bits(x: Any) -> int:
    try:
        return payload_bits(x)
    except TypeError:
        return -1


class VertexContext:
    """What a vertex knows about itself before the first round.

    ``ports`` are numbered ``0..degree-1``. ``index`` is the simulator's slot
    for the vertex and is meant only for compact encodings of vertex sets;
    programs that need neighbor identifiers learn them by messages.
    """

    __slots__ = ("index", "id", "degree", "n", "seed", "input", "_rng")

    def __init__(self, index: int, vid: int, degree: int, n: int, seed: int, inp=None):
        self.index = index
        self.id = vid
        self.degree = degree
        self.n = n
        self.seed = seed
        self.input = inp
        self._rng = None

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = np.random.default_rng(self.seed)
        return self._rng

    @property
    def priority(self) -> int:
        """Random 64-bit priority derived from the private seed."""
        return priority_from_seed(self.seed)

    @property
    def ports(self) -> range:
        return range(self.degree)


class VertexProgram:
    """Behavior shared by all vertices; per-vertex data lives in the state.

    ``init`` returns the initial state and the first round the vertex is
    awake (``HALT`` for never). ``send`` returns the outbox for an awake round:
    a ``{port: payload}`` dict in LOCAL and CONGEST, a single broadcast payload
    (or ``None``) in RADIO-CONGEST. ``on_wake`` receives the inbox of that
    round, ``{port: payload}`` or in RADIO the payload heard (``None`` for
    silence), and returns the new state and the next awake round, which must be
    later than the current one, or ``HALT``.
    """

    def init(self, ctx: VertexContext):
        return None, 0

    def send(self, ctx: VertexContext, state, rnd: int):
        return None

    def on_wake(self, ctx: VertexContext, state, rnd: int, inbox):
        return state, HALT

    def output(self, ctx: VertexContext, state):
        return state


@dataclass
class SimRun:
    outputs: list
    rounds_used: int
    energy: np.ndarray
    timed_out: bool = False
    messages: int = 0
    trace: list | None = None
    states: list | None = None
    awake_rounds: list | None = None

    @property
    def energy_complexity(self) -> int:
        return int(self.energy.max()) if len(self.energy) else 0


@dataclass(frozen=True)
class EnergyReport:
    per_vertex: np.ndarray
    max: int
    mean: float

    def table(self) -> list[tuple[int, int]]:
        return [(v, int(e)) for v, e in enumerate(self.per_vertex)]


def energy_report(sim: SimRun) -> EnergyReport:
    e = np.asarray(sim.energy)
    return EnergyReport(e.copy(), int(e.max()) if len(e) else 0, float(e.mean()) if len(e) else 0.0)


def make_contexts(g: Graph, seed=None, inputs=None) -> list[VertexContext]:
    return [
        VertexContext(v, g.ids[v], len(g.adj[v]), g.n, vertex_seed(seed, g.ids[v]), None if inputs is None else inputs[v])
        for v in range(g.n)
    ]


def _simulate(
    adj: Sequence[Sequence[int]],
    rev: Sequence[Sequence[int]],
    ctxs: Sequence[VertexContext],
    program: VertexProgram,
    kind: str,
    bandwidth: int | None,
    states: list,
    wake: list,
    stop: int,
    energy: np.ndarray,
    trace: list | None,
    awake_log: list | None = None,
) -> tuple[int, bool, int]:
    """Run rounds until nothing is scheduled before ``stop``.

    ``adj`` may hold ``-1`` for a neighbor outside the simulated region; what is
    sent there is dropped. ``states`` and ``wake`` are updated in place, so on
    return ``wake`` holds each vertex's pending wake round. Returns the last
    executed round, whether work remains at or after ``stop``, and the number
    of delivered messages.
    """
    n = len(adj)
    buckets: dict[int, list[int]] = defaultdict(list)
    heap: list[int] = []
    for v, w in enumerate(wake):
        if w is not None:
            if not buckets[w]:
                heapq.heappush(heap, w)
            buckets[w].append(v)
    stamp = [-1] * n
    last = -1
    delivered = 0
    radio = kind == RADIO
    send, on_wake = program.send, program.on_wake
    while heap and heap[0] < stop:
        r = heapq.heappop(heap)
        awake = sorted(buckets.pop(r))
        for v in awake:
            stamp[v] = r
        outs = []
        for v in awake:
            ob = send(ctxs[v], states[v], r)
            if ob is not None:
                outs.append((v, ob))
        if radio:
            inbox = _radio_deliver(adj, ctxs, outs, stamp, r, bandwidth, trace)
            delivered += len(inbox)
        else:
            inbox = {}
            for v, ob in outs:
                if not isinstance(ob, dict):
                    raise TypeError(f"vertex {ctxs[v].id}: outbox must be a port dict in {kind}")
                av, rv = adj[v], rev[v]
                for port, payload in ob.items():
                    if bandwidth is not None:
                        bits = payload_bits(payload)
                        if bits > bandwidth:
                            raise BandwidthExceeded(
                                f"round {r}: vertex {ctxs[v].id} sent {bits} bits on port {port}, limit {bandwidth}"
                            )
                    if trace is not None:
                        trace.append((r, ctxs[v].id, "send", _trace_bits(payload)))
                    u = av[port]
                    if u >= 0 and stamp[u] == r:
                        box = inbox.get(u)
                        if box is None:
                            box = inbox[u] = {}
                        box[rv[port]] = payload
                        delivered += 1
                        if trace is not None:
                            trace.append((r, ctxs[u].id, "recv", _trace_bits(payload)))
        empty = None if radio else {}
        for v in awake:
            box = inbox.get(v, empty)
            st, nxt = on_wake(ctxs[v], states[v], r, box if radio else (box if box is not None else {}))
            states[v] = st
            wake[v] = nxt
            energy[v] += 1
            if awake_log is not None:
                awake_log[v].append(r)
            if nxt is not None:
                if nxt <= r:
                    raise ValueError(f"vertex {ctxs[v].id} scheduled round {nxt} from round {r}")
                if not buckets[nxt]:
                    heapq.heappush(heap, nxt)
                buckets[nxt].append(v)
        last = r
    return last, bool(heap), delivered


def _radio_deliver(adj, ctxs, outs, stamp, r, bandwidth, trace) -> dict:
    transmitting = {}
    for v, ob in outs:
        if isinstance(ob, dict):
            if len(ob) > 1:
                raise MultiSendInRadio(f"round {r}: vertex {ctxs[v].id} addressed {len(ob)} ports")
            if not ob:
                continue
            (ob,) = ob.values()
        bits = payload_bits(ob)
        if bandwidth is not None and bits > bandwidth:
            raise BandwidthExceeded(f"round {r}: vertex {ctxs[v].id} broadcast {bits} bits, limit {bandwidth}")
        transmitting[v] = ob
        if trace is not None:
            trace.append((r, ctxs[v].id, "send", bits))
    heard: dict[int, int] = {}
    last_payload: dict[int, Any] = {}
    for v, ob in transmitting.items():
        for u in adj[v]:
            if u >= 0 and stamp[u] == r and u not in transmitting:
                heard[u] = heard.get(u, 0) + 1
                last_payload[u] = ob
    inbox = {}
    for u, k in heard.items():
        if k == 1:
            inbox[u] = last_payload[u]
            if trace is not None:
                trace.append((r, ctxs[u].id, "recv", payload_bits(last_payload[u])))
        elif trace is not None:
            trace.append((r, ctxs[u].id, "collision", 0))
    return inbox


def run(
    g: Graph,
    program: VertexProgram,
    model: ModelSpec | None = None,
    max_rounds: int = 10**7,
    seed=None,
    inputs: Sequence | None = None,
    trace: bool = False,
    keep_states: bool = False,
    log_awake: bool = False,
) -> SimRun:
    """Execute ``program`` on every vertex of ``g`` in lock step.

    Stops when every vertex has halted or before round ``max_rounds``; in the
    latter case ``timed_out`` is set. Per-vertex seeds are derived from
    ``(seed, id)``, so a run is a deterministic function of its arguments.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    model = model or ModelSpec()
    bandwidth = model.bandwidth(g.n)
    ctxs = make_contexts(g, seed, inputs)
    states, wake = [], []
    for ctx in ctxs:
        st, w = program.init(ctx)
        if w is not None and w < 0:
            raise ValueError("first wake round must be nonnegative")
        states.append(st)
        wake.append(w)
    energy = np.zeros(g.n, dtype=np.int64)
    log = [] if trace else None
    awake_log = [[] for _ in range(g.n)] if log_awake else None
    last, pending, delivered = _simulate(
        g.adj, g.reverse_ports(), ctxs, program, model.kind, bandwidth, states, wake, max_rounds, energy, log, awake_log
    )
    if log is not None:
        log.sort(key=lambda e: (e[0], e[1], _EVENT_ORDER[e[2]]))
    outputs = [program.output(ctx, st) for ctx, st in zip(ctxs, states)]
    return SimRun(
        outputs=outputs,
        rounds_used=last + 1,
        energy=energy,
        timed_out=pending,
        messages=delivered,
        trace=log,
        states=states if keep_states else None,
        awake_rounds=awake_log,
    )


def format_trace(sim: SimRun) -> str:
    """Trace lines ``round vertex event payload_bits``."""
    if sim.trace is None:
        return ""
    return "".join(f"{r} {v} {kind} {bits}\n" for r, v, kind, bits in sim.trace)


def combine_runs(phases: Sequence[SimRun], outputs=None) -> SimRun:
    """Sequential composition: rounds and energy add up phase by phase."""
    energy = sum((p.energy for p in phases), np.zeros_like(phases[0].energy))
    return SimRun(
        outputs=list(outputs) if outputs is not None else phases[-1].outputs,
        rounds_used=sum(p.rounds_used for p in phases),
        energy=energy,
        timed_out=any(p.timed_out for p in phases),
        messages=sum(p.messages for p in phases),
    )
