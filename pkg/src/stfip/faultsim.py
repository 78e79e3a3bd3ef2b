"""Multi-cycle fault-free and faulty logic simulation.

Patterns are bit-packed 64 per machine word, so one gate evaluation processes
all patterns at once.  The faulty machine is simulated event-driven on top of
the fault-free trace: only gates downstream of a value divergence are
re-evaluated, and detection at an observation point is a word-wise XOR.

The per-cycle fault impact probability of a fault is the fraction of patterns
under which any observed line differs between the good and faulty machines
during that cycle (the indicator is per-cycle, not cumulative), so every
value is an exact rational ``k / n_patterns``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace

import numpy as np

from stfip.netlist import Circuit, GateKind

FAULT_KINDS = ("SA0", "SA1", "STR", "STF")

_MASK64 = (1 << 64) - 1


class FaultSimError(ValueError):
    """Invalid fault, pattern or observation configuration."""


@dataclass(frozen=True)
class Fault:
    """A permanent fault on a stem line.

    SA0/SA1 force the line's value every cycle.  STR/STF (slow-to-rise /
    slow-to-fall) are a one-cycle gross delay: when the raw fault-site value
    transitions in the sensitized direction, downstream logic sees the old
    value for one more cycle.
    """

    line: int
    kind: str

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise FaultSimError(f"unknown fault kind {self.kind!r}; expected one of {FAULT_KINDS}")


@dataclass(frozen=True)
class PatternSet:
    """Counter-based random multi-cycle pattern source.

    The bit applied to PI ``i`` at cycle ``c`` under pattern ``p`` is a pure
    function of (seed, p, c, i): each (cycle, PI) stream comes from its own
    Philox counter, so any partitioning of the work sees identical patterns.
    A pattern is a fresh random PI vector at every cycle.
    """

    seed: int
    n_patterns: int
    n_cycles: int
    pi_count: int

    def __post_init__(self):
        if self.pi_count <= 0:
            raise FaultSimError("circuit has no primary inputs")
        if self.n_patterns <= 0 or self.n_cycles <= 0:
            raise FaultSimError("n_patterns and n_cycles must be positive")

    @property
    def n_words(self) -> int:
        return (self.n_patterns + 63) >> 6

    @property
    def last_mask(self) -> int:
        r = self.n_patterns & 63
        return _MASK64 if r == 0 else (1 << r) - 1

    def words(self, cycle: int) -> np.ndarray:
        """Packed bits for one cycle, shape (pi_count, n_words)."""
        out = np.empty((self.pi_count, self.n_words), dtype=np.uint64)
        for i in range(self.pi_count):
            key = np.array([self.seed & _MASK64, (cycle << 32) | i], dtype=np.uint64)
            out[i] = np.random.Philox(key=key).random_raw(self.n_words)
        out[:, -1] &= np.uint64(self.last_mask)
        return out

    def bit(self, pattern: int, cycle: int, pi: int) -> int:
        """Value applied to one PI under one pattern (test/debug helper)."""
        return int(self.words(cycle)[pi, pattern >> 6] >> np.uint64(pattern & 63)) & 1


@dataclass(frozen=True)
class ExhaustivePatterns:
    """All ``2**(pi_count * n_cycles)`` input sequences, enumerated.

    Pattern ``p`` applies bit ``(p >> (cycle * pi_count + i)) & 1`` to PI
    ``i`` at ``cycle``.
    """

    pi_count: int
    n_cycles: int

    def __post_init__(self):
        if self.pi_count <= 0:
            raise FaultSimError("circuit has no primary inputs")
        if self.pi_count * self.n_cycles > 24:
            raise FaultSimError("exhaustive pattern space larger than 2**24")

    @property
    def n_patterns(self) -> int:
        return 1 << (self.pi_count * self.n_cycles)

    @property
    def n_words(self) -> int:
        return (self.n_patterns + 63) >> 6

    @property
    def last_mask(self) -> int:
        return _MASK64

    def words(self, cycle: int) -> np.ndarray:
        n = self.n_patterns
        p = np.arange(n, dtype=np.uint64)
        out = np.empty((self.pi_count, self.n_words), dtype=np.uint64)
        shifts = np.arange(64, dtype=np.uint64)
        for i in range(self.pi_count):
            bits = (p >> np.uint64(cycle * self.pi_count + i)) & np.uint64(1)
            if n < 64:
                bits = np.pad(bits, (0, 64 - n))
            out[i] = np.bitwise_or.reduce(bits.reshape(-1, 64) << shifts, axis=1)
        return out

    def bit(self, pattern: int, cycle: int, pi: int) -> int:
        return (pattern >> (cycle * self.pi_count + pi)) & 1


@dataclass(frozen=True, eq=False)
class ExplicitPatterns:
    """Pattern source backed by a literal 0/1 array (n_patterns, n_cycles, pi_count)."""

    bits: np.ndarray

    def __post_init__(self):
        if self.bits.ndim != 3:
            raise FaultSimError(f"bits must be 3-D (patterns, cycles, pis), got shape {self.bits.shape}")

    @property
    def n_patterns(self) -> int:
        return self.bits.shape[0]

    @property
    def n_cycles(self) -> int:
        return self.bits.shape[1]

    @property
    def pi_count(self) -> int:
        return self.bits.shape[2]

    @property
    def n_words(self) -> int:
        return (self.n_patterns + 63) >> 6

    @property
    def last_mask(self) -> int:
        r = self.n_patterns & 63
        return _MASK64 if r == 0 else (1 << r) - 1

    def words(self, cycle: int) -> np.ndarray:
        n = self.n_patterns
        out = np.empty((self.pi_count, self.n_words), dtype=np.uint64)
        shifts = np.arange(64, dtype=np.uint64)
        pad = (-n) % 64
        for i in range(self.pi_count):
            bits = self.bits[:, cycle, i].astype(np.uint64)
            if pad:
                bits = np.pad(bits, (0, pad))
            out[i] = np.bitwise_or.reduce(bits.reshape(-1, 64) << shifts, axis=1)
        return out

    def bit(self, pattern: int, cycle: int, pi: int) -> int:
        return int(self.bits[pattern, cycle, pi])


def generate_patterns(seed: int, n_patterns: int, n_cycles: int, pi_count: int) -> PatternSet:
    """Reproducible random pattern source; see :class:`PatternSet`."""
    return PatternSet(seed=seed, n_patterns=n_patterns, n_cycles=n_cycles, pi_count=pi_count)


@dataclass(frozen=True)
class ObservationSet:
    """Which lines count as observation points for fault detection."""

    include_pos: bool = True
    include_ppos: bool = False
    extra_lines: tuple[int, ...] = ()

    def resolve(self, circuit: Circuit) -> tuple[int, ...]:
        ids: set[int] = set(self.extra_lines)
        if self.include_pos:
            ids.update(circuit.primary_outputs)
        if self.include_ppos:
            ids.update(circuit.gates[g].out for g in circuit.dffs)
        for lid in ids:
            if not 0 <= lid < circuit.n_lines:
                raise FaultSimError(f"observed line id {lid} out of range")
        if not ids:
            raise FaultSimError("observation set is empty")
        return tuple(sorted(ids))

    def describe(self, circuit: Circuit) -> dict:
        return {
            "include_pos": self.include_pos,
            "include_ppos": self.include_ppos,
            "extra_lines": [circuit.line_name(l) for l in self.extra_lines],
        }


@dataclass
class Trace:
    """Per-cycle packed line values; ``values[c, line]`` is a word vector."""

    n_patterns: int
    values: np.ndarray  # (n_cycles, n_lines, n_words) uint64

    @property
    def n_cycles(self) -> int:
        return self.values.shape[0]

    def bit(self, cycle: int, line: int, pattern: int) -> int:
        w = self.values[cycle, line, pattern >> 6]
        return int(w >> np.uint64(pattern & 63)) & 1


class _SimContext:
    """Precomputed per-circuit arrays for the packed simulator."""

    def __init__(self, circuit: Circuit, patterns):
        self.circuit = circuit
        self.n_words = patterns.n_words
        self.mask = np.full(self.n_words, _MASK64, dtype=np.uint64)
        self.mask[-1] = np.uint64(patterns.last_mask)
        self.kind = [g.kind for g in circuit.gates]
        self.fanin = [np.array(g.fanin, dtype=np.int64) for g in circuit.gates]
        self.out = [g.out for g in circuit.gates]
        self.sinks = [np.array(l.sinks, dtype=np.int64) for l in circuit.lines]
        self.level = circuit.gate_level
        self.order = circuit.level_order
        self.pi_lines = circuit.primary_inputs
        self.dff_gates = circuit.dffs
        self.d_lines = [circuit.dff_d_line(g) for g in circuit.dffs]
        self.q_lines = [circuit.dff_q_line(g) for g in circuit.dffs]

    def eval_gate(self, gid: int, vals: np.ndarray) -> np.ndarray:
        fan = vals[self.fanin[gid]]
        kind = self.kind[gid]
        if kind is GateKind.AND:
            return np.bitwise_and.reduce(fan, axis=0)
        if kind is GateKind.NAND:
            return np.bitwise_and.reduce(fan, axis=0) ^ self.mask
        if kind is GateKind.OR:
            return np.bitwise_or.reduce(fan, axis=0)
        if kind is GateKind.NOR:
            return np.bitwise_or.reduce(fan, axis=0) ^ self.mask
        if kind is GateKind.NOT:
            return fan[0] ^ self.mask
        if kind is GateKind.BUFF:
            return fan[0].copy()
        if kind is GateKind.XOR:
            return np.bitwise_xor.reduce(fan, axis=0)
        raise FaultSimError(f"gate kind {kind.name} is not combinational")

    def eval_from(self, gid: int, lookup) -> np.ndarray:
        fan = np.stack([lookup(l) for l in self.fanin[gid]])
        kind = self.kind[gid]
        if kind is GateKind.AND:
            return np.bitwise_and.reduce(fan, axis=0)
        if kind is GateKind.NAND:
            return np.bitwise_and.reduce(fan, axis=0) ^ self.mask
        if kind is GateKind.OR:
            return np.bitwise_or.reduce(fan, axis=0)
        if kind is GateKind.NOR:
            return np.bitwise_or.reduce(fan, axis=0) ^ self.mask
        if kind is GateKind.NOT:
            return fan[0] ^ self.mask
        if kind is GateKind.BUFF:
            return fan[0]
        return np.bitwise_xor.reduce(fan, axis=0)


def _init_words(circuit: Circuit, ctx: _SimContext, init_state, patterns) -> np.ndarray:
    """Initial DFF output words, one row per DFF in circuit.dffs order."""
    n = len(circuit.dffs)
    words = np.zeros((n, ctx.n_words), dtype=np.uint64)
    if init_state is None:
        return words
    if init_state == "random":
        seed = getattr(patterns, "seed", 0)
        for i in range(n):
            key = np.array([seed & _MASK64, (1 << 63) | i], dtype=np.uint64)
            words[i] = np.random.Philox(key=key).random_raw(ctx.n_words) & ctx.mask
        return words
    for i, gid in enumerate(circuit.dffs):
        v = init_state.get(gid, 0)
        if isinstance(v, np.ndarray):
            words[i] = v & ctx.mask
        elif v:
            words[i] = ctx.mask
    return words


def simulate_good(circuit: Circuit, patterns, init_state=None) -> Trace:
    """Fault-free multi-cycle simulation.

    Combinational logic is evaluated in levelized order from each cycle's PI
    values and the previous cycle's DFF states; DFFs latch their input at the
    cycle boundary.  ``init_state`` maps DFF gate ids to 0/1 (default all
    zero) or is the string ``"random"`` for a seeded per-pattern random init.
    """
    ctx = _SimContext(circuit, patterns)
    n_cycles = patterns.n_cycles
    vals = np.zeros((n_cycles, circuit.n_lines, ctx.n_words), dtype=np.uint64)
    state = _init_words(circuit, ctx, init_state, patterns)
    for c in range(n_cycles):
        v = vals[c]
        piw = patterns.words(c)
        for i, lid in enumerate(ctx.pi_lines):
            v[lid] = piw[i]
        for i, lid in enumerate(ctx.q_lines):
            v[lid] = state[i]
        for gid in ctx.order:
            v[ctx.out[gid]] = ctx.eval_gate(gid, v)
        state = v[ctx.d_lines].copy() if ctx.d_lines else state
    return Trace(n_patterns=patterns.n_patterns, values=vals)


def _force_sa(fault: Fault, ctx: _SimContext) -> np.ndarray:
    return ctx.mask.copy() if fault.kind == "SA1" else np.zeros(ctx.n_words, dtype=np.uint64)


def _delay_effect(kind: str, raw: np.ndarray, prev_raw: np.ndarray | None) -> np.ndarray:
    # Gross-delay transition model: a sensitized transition arrives one cycle
    # late, which collapses to AND/OR with the previous raw value.  The first
    # cycle has no predecessor and is never a transition.
    if prev_raw is None:
        return raw
    if kind == "STR":
        return raw & prev_raw
    return raw | prev_raw


def _reaching_lines(circuit: Circuit, observed: tuple[int, ...]) -> set[int]:
    """Lines whose value can influence an observed line in this or a later cycle."""
    reach: set[int] = set(observed)
    stack = list(observed)
    d_to_q = {circuit.dff_d_line(g): circuit.dff_q_line(g) for g in circuit.dffs}
    # reverse edges: fanin line -> gate -> out line, plus D -> Q across cycles
    rev: dict[int, set[int]] = {}
    for g in circuit.gates:
        for f in g.fanin:
            rev.setdefault(g.out, set()).add(f)
    for d, q in d_to_q.items():
        rev.setdefault(q, set()).add(d)
    while stack:
        lid = stack.pop()
        for src in rev.get(lid, ()):
            if src not in reach:
                reach.add(src)
                stack.append(src)
    return reach


def _run_faulty(ctx: _SimContext, good: Trace, fault: Fault, init_words: np.ndarray,
                observed: tuple[int, ...] | None, collect=None) -> np.ndarray:
    """Event-driven faulty-machine pass over the good trace.

    Returns per-cycle detection counts when ``observed`` is given; ``collect``
    receives (cycle, changed-line dict) for trace materialization.
    """
    circuit = ctx.circuit
    n_cycles = good.n_cycles
    counts = np.zeros(n_cycles, dtype=np.int64)
    site = fault.line
    is_sa = fault.kind in ("SA0", "SA1")
    forced = _force_sa(fault, ctx) if is_sa else None
    site_driver = circuit.lines[site].driver
    driver_kind = ctx.kind[site_driver]
    driver_is_comb = driver_kind not in (GateKind.INPUT, GateKind.DFF)
    dff_index = {g: i for i, g in enumerate(circuit.dffs)}

    state = init_words.copy()
    good_state_prev = init_words  # good machine shares init
    prev_raw: np.ndarray | None = None

    for c in range(n_cycles):
        gv = good.values[c]
        changed: dict[int, np.ndarray] = {}
        heap: list[tuple[int, int]] = []
        queued: set[int] = set()

        def push_sinks(lid: int):
            for gid in ctx.sinks[lid]:
                gid = int(gid)
                if ctx.kind[gid] is not GateKind.DFF and gid not in queued:
                    queued.add(gid)
                    heapq.heappush(heap, (ctx.level[gid], gid))

        def fval(lid: int) -> np.ndarray:
            got = changed.get(lid)
            return gv[lid] if got is None else got

        # Seed divergent DFF outputs carried over from the previous cycle.
        for i, q in enumerate(ctx.q_lines):
            if not np.array_equal(state[i], gv[q]):
                changed[q] = state[i]
                push_sinks(q)

        # Seed the fault site.  A comb-driven transition-fault site must be
        # re-evaluated every cycle because its effect depends on prev_raw.
        if is_sa:
            if not np.array_equal(forced, fval(site)):
                changed[site] = forced
                push_sinks(site)
            elif site in changed:
                del changed[site]  # forcing overrides a divergent DFF output
        else:
            if driver_is_comb:
                if site_driver not in queued:
                    queued.add(site_driver)
                    heapq.heappush(heap, (ctx.level[site_driver], site_driver))
            else:
                raw = fval(site)  # PI word or (possibly divergent) DFF state
                eff = _delay_effect(fault.kind, raw, prev_raw)
                prev_raw = raw
                if not np.array_equal(eff, gv[site]):
                    changed[site] = eff
                    push_sinks(site)
                elif site in changed:
                    del changed[site]
                    push_sinks(site)  # sinks may still see the reverted value

        while heap:
            _, gid = heapq.heappop(heap)
            out = ctx.out[gid]
            val = ctx.eval_from(gid, fval)
            if out == site:
                if is_sa:
                    val = forced
                else:
                    eff = _delay_effect(fault.kind, val, prev_raw)
                    prev_raw = val
                    val = eff
            if not np.array_equal(val, gv[out]):
                changed[out] = val
                push_sinks(out)
            elif out in changed:
                del changed[out]
                push_sinks(out)

        if observed is not None and changed:
            det = np.zeros(ctx.n_words, dtype=np.uint64)
            hit = False
            for lid in observed:
                d = changed.get(lid)
                if d is not None:
                    det |= d ^ gv[lid]
                    hit = True
            if hit:
                counts[c] = int(np.bitwise_count(det).sum())
        if collect is not None:
            collect(c, changed)

        if ctx.d_lines:
            state = np.stack([fval(l) for l in ctx.d_lines])
    return counts


def simulate_faulty(circuit: Circuit, fault: Fault, patterns, init_state=None) -> Trace:
    """Faulty-machine trace for one fault (same conventions as simulate_good)."""
    if not 0 <= fault.line < circuit.n_lines:
        raise FaultSimError(f"fault line id {fault.line} out of range")
    ctx = _SimContext(circuit, patterns)
    good = simulate_good(circuit, patterns, init_state)
    vals = good.values.copy()

    def collect(c, changed):
        for lid, v in changed.items():
            vals[c, lid] = v

    init = _init_words(circuit, ctx, init_state, patterns)
    _run_faulty(ctx, good, fault, init, observed=None, collect=collect)
    return Trace(n_patterns=patterns.n_patterns, values=vals)


def compute_detections(circuit: Circuit, fault: Fault, patterns,
                       observe: ObservationSet, init_state=None,
                       _good: Trace | None = None, _ctx=None, _reach=None) -> np.ndarray:
    """Per-cycle count of patterns detecting ``fault`` at any observed line."""
    observed = observe.resolve(circuit)
    ctx = _ctx if _ctx is not None else _SimContext(circuit, patterns)
    good = _good if _good is not None else simulate_good(circuit, patterns, init_state)
    reach = _reach if _reach is not None else _reaching_lines(circuit, observed)
    if fault.line not in reach:
        return np.zeros(good.n_cycles, dtype=np.int64)
    init = _init_words(circuit, ctx, init_state, patterns)
    return _run_faulty(ctx, good, fault, init, observed=observed)


def compute_fip(circuit: Circuit, fault: Fault, patterns,
                observe: ObservationSet, init_state=None) -> np.ndarray:
    """Per-cycle fault impact probability curve, each value an exact k/N."""
    counts = compute_detections(circuit, fault, patterns, observe, init_state)
    return counts / patterns.n_patterns


@dataclass
class FipMatrix:
    """Detection counts for every stem line, fault kind and cycle.

    ``counts[i, j, c]`` is the number of patterns detecting a fault of kind
    ``kinds[j]`` on line ``line_ids[i]`` during cycle ``c + 1``; FIP values
    are ``counts / n_patterns``.
    """

    line_ids: tuple[int, ...]
    kinds: tuple[str, ...]
    n_patterns: int
    n_cycles: int
    seed: int | None
    observe: ObservationSet
    counts: np.ndarray  # (n_lines, n_kinds, n_cycles) int64
    init: str = "zero"
    _index: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {l: i for i, l in enumerate(self.line_ids)}

    @property
    def values(self) -> np.ndarray:
        return self.counts / self.n_patterns

    def curve(self, line_id: int, kind: str) -> np.ndarray:
        return self.counts[self._index[line_id], self.kinds.index(kind)] / self.n_patterns

    def to_json_dict(self, circuit: Circuit) -> dict:
        return {
            "circuit": circuit.name,
            "lines": [circuit.line_name(l) for l in self.line_ids],
            "kinds": list(self.kinds),
            "n_patterns": self.n_patterns,
            "n_cycles": self.n_cycles,
            "seed": self.seed,
            "init": self.init,
            "observe": self.observe.describe(circuit),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict, circuit: Circuit) -> "FipMatrix":
        obs = doc["observe"]
        observe = ObservationSet(
            include_pos=obs["include_pos"],
            include_ppos=obs["include_ppos"],
            extra_lines=tuple(circuit.line_id(n) for n in obs["extra_lines"]),
        )
        counts = np.asarray(doc["counts"], dtype=np.int64)
        line_ids = tuple(circuit.line_id(n) for n in doc["lines"])
        if counts.shape != (len(line_ids), len(doc["kinds"]), doc["n_cycles"]):
            raise FaultSimError(f"counts shape {counts.shape} inconsistent with header")
        return cls(
            line_ids=line_ids,
            kinds=tuple(doc["kinds"]),
            n_patterns=doc["n_patterns"],
            n_cycles=doc["n_cycles"],
            seed=doc["seed"],
            observe=observe,
            counts=counts,
            init=doc.get("init", "zero"),
        )


def _fip_chunk(circuit: Circuit, kinds, patterns, observe: ObservationSet,
               init_state, line_chunk) -> np.ndarray:
    ctx = _SimContext(circuit, patterns)
    good = simulate_good(circuit, patterns, init_state)
    observed = observe.resolve(circuit)
    reach = _reaching_lines(circuit, observed)
    out = np.zeros((len(line_chunk), len(kinds), patterns.n_cycles), dtype=np.int64)
    for i, lid in enumerate(line_chunk):
        for j, kind in enumerate(kinds):
            out[i, j] = compute_detections(
                circuit, Fault(lid, kind), patterns, observe, init_state,
                _good=good, _ctx=ctx, _reach=reach,
            )
    return out


def build_fip_matrix(circuit: Circuit, patterns, observe: ObservationSet,
                     kinds=("SA0", "SA1"), init_state=None, lines=None,
                     threads: int = 1) -> FipMatrix:
    """FIP curves for faults of each kind on every stem line.

    Covers all lines by default (primary inputs included, so that every graph
    edge has a defined feature source).  Work is partitioned over line chunks;
    results are identical for any ``threads``.
    """
    if not kinds:
        raise FaultSimError("at least one fault kind is required")
    for k in kinds:
        if k not in FAULT_KINDS:
            raise FaultSimError(f"unknown fault kind {k!r}")
    line_ids = tuple(lines) if lines is not None else tuple(range(circuit.n_lines))
    init = "random" if init_state == "random" else "zero"
    if threads <= 1 or len(line_ids) < 4:
        counts = _fip_chunk(circuit, kinds, patterns, observe, init_state, line_ids)
    else:
        from concurrent.futures import ProcessPoolExecutor

        n_chunks = min(len(line_ids), threads * 4)
        chunks = [list(line_ids[i::n_chunks]) for i in range(n_chunks)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                _fip_chunk,
                [circuit] * n_chunks, [kinds] * n_chunks, [patterns] * n_chunks,
                [observe] * n_chunks, [init_state] * n_chunks, chunks,
            ))
        counts = np.zeros((len(line_ids), len(kinds), patterns.n_cycles), dtype=np.int64)
        pos = {lid: i for i, lid in enumerate(line_ids)}
        for chunk, part in zip(chunks, parts):
            for row, lid in enumerate(chunk):
                counts[pos[lid]] = part[row]
    return FipMatrix(
        line_ids=line_ids,
        kinds=tuple(kinds),
        n_patterns=patterns.n_patterns,
        n_cycles=patterns.n_cycles,
        seed=getattr(patterns, "seed", None),
        observe=observe,
        counts=counts,
        init=init,
    )
