"""Independent reference implementations used as test oracles.

Everything here deliberately avoids the production code paths: simulation is
demand-driven recursion on single-bit integers (no packing, no event queue,
no levelization), and signal probabilities come from exhaustive enumeration.
Keep it slow and obvious.
"""

from __future__ import annotations

from fractions import Fraction

from stfip.netlist import Circuit, GateKind

_EVAL = {
    GateKind.AND: lambda vs: int(all(vs)),
    GateKind.NAND: lambda vs: int(not all(vs)),
    GateKind.OR: lambda vs: int(any(vs)),
    GateKind.NOR: lambda vs: int(not any(vs)),
    GateKind.NOT: lambda vs: 1 - vs[0],
    GateKind.BUFF: lambda vs: vs[0],
    GateKind.XOR: lambda vs: sum(vs) & 1,
}


class NaiveSim:
    """Single-pattern recursive simulator with optional fault injection.

    ``pattern[c][i]`` is the bit applied to the i-th primary input (in
    ``circuit.primary_inputs`` order) at cycle index c.  Fault is a
    (line_id, kind) pair with kind in SA0/SA1/STR/STF.
    """

    def __init__(self, circuit: Circuit, pattern, init_state=None, fault=None):
        self.c = circuit
        self.pattern = pattern
        self.init = dict(init_state or {})
        self.fault = fault
        self.pi_pos = {lid: i for i, lid in enumerate(circuit.primary_inputs)}
        self.memo: dict[tuple[int, int], int] = {}
        self.raw_memo: dict[int, int] = {}

    def value(self, line: int, cycle: int) -> int:
        if cycle < 0:
            raise ValueError("cycle before time zero")
        key = (line, cycle)
        if key in self.memo:
            return self.memo[key]
        if self.fault is not None and line == self.fault[0]:
            v = self._faulty_site(line, cycle)
        else:
            v = self._raw(line, cycle)
        self.memo[key] = v
        return v

    def _raw(self, line: int, cycle: int) -> int:
        g = self.c.gates[self.c.lines[line].driver]
        if g.kind is GateKind.INPUT:
            return int(self.pattern[cycle][self.pi_pos[line]])
        if g.kind is GateKind.DFF:
            if cycle == 0:
                return int(self.init.get(g.id, 0))
            return self.value(g.fanin[0], cycle - 1)
        return _EVAL[g.kind]([self.value(f, cycle) for f in g.fanin])

    def _site_raw(self, line: int, cycle: int) -> int:
        if cycle in self.raw_memo:
            return self.raw_memo[cycle]
        v = self._raw(line, cycle)
        self.raw_memo[cycle] = v
        return v

    def _faulty_site(self, line: int, cycle: int) -> int:
        kind = self.fault[1]
        if kind == "SA0":
            return 0
        if kind == "SA1":
            return 1
        now = self._site_raw(line, cycle)
        if cycle == 0:
            return now
        prev = self._site_raw(line, cycle - 1)
        if kind == "STR":
            return now & prev
        return now | prev


def naive_detections(circuit: Circuit, fault, patterns, n_cycles: int,
                     observed, init_state=None) -> list[int]:
    """Per-cycle detection counts over an explicit list of patterns."""
    counts = [0] * n_cycles
    for pat in patterns:
        good = NaiveSim(circuit, pat, init_state)
        bad = NaiveSim(circuit, pat, init_state, fault=fault)
        for c in range(n_cycles):
            if any(good.value(l, c) != bad.value(l, c) for l in observed):
                counts[c] += 1
    return counts


def all_sequences(pi_count: int, n_cycles: int):
    """Every 0/1 input sequence, indexed like ExhaustivePatterns."""
    for p in range(1 << (pi_count * n_cycles)):
        yield [
            [(p >> (c * pi_count + i)) & 1 for i in range(pi_count)]
            for c in range(n_cycles)
        ]


def brute_force_fip(circuit: Circuit, fault, n_cycles: int, observed,
                    init_state=None) -> list[Fraction]:
    """Exact FIP by enumerating every input sequence."""
    pi_count = len(circuit.primary_inputs)
    n = 1 << (pi_count * n_cycles)
    counts = naive_detections(
        circuit, fault, all_sequences(pi_count, n_cycles), n_cycles, observed, init_state
    )
    return [Fraction(k, n) for k in counts]


def exact_signal_prob(circuit: Circuit, line: int) -> Fraction:
    """P(line = 1) over all single-cycle PI assignments (combinational only)."""
    pi_count = len(circuit.primary_inputs)
    hits = 0
    for pat in all_sequences(pi_count, 1):
        hits += NaiveSim(circuit, pat).value(line, 0)
    return Fraction(hits, 1 << pi_count)


def exact_observability(circuit: Circuit, line: int) -> Fraction:
    """P(flipping ``line`` changes some PO) over all single-cycle PI assignments."""
    pi_count = len(circuit.primary_inputs)
    hits = 0
    for pat in all_sequences(pi_count, 1):
        good = NaiveSim(circuit, pat)
        ref = good.value(line, 0)
        flip = NaiveSim(circuit, pat, fault=(line, "SA0" if ref else "SA1"))
        if any(good.value(l, 0) != flip.value(l, 0) for l in circuit.primary_outputs):
            hits += 1
    return Fraction(hits, 1 << pi_count)
