"""ISCAS'89 ``.bench`` netlist parsing, validation and levelization.

A parsed :class:`Circuit` is a flat, index-based representation: every signal
is a :class:`Line` with exactly one driving :class:`Gate`, and primary inputs
are materialized as gates of kind ``INPUT`` so that they can appear as graph
nodes later on.  Line and gate ids are canonical (assigned in sorted signal
name order), so the same set of declarations always produces the same
Circuit regardless of declaration order in the file.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from enum import IntEnum


class NetlistError(ValueError):
    """Malformed netlist: syntax error, bad reference, or combinational cycle."""


class NetlistWarning(UserWarning):
    """Non-fatal validation finding (e.g. a circuit with no outputs)."""


class GateKind(IntEnum):
    """Gate categories.  The enum value doubles as the one-hot feature index."""

    INPUT = 0
    AND = 1
    NAND = 2
    OR = 3
    NOR = 4
    NOT = 5
    BUFF = 6
    XOR = 7
    DFF = 8


N_GATE_KINDS = len(GateKind)

# Keywords accepted on the right-hand side of an assignment.  XNOR is
# rewritten to XOR + NOT at parse time to keep the kind alphabet at 9.
_KEYWORDS = {k.name: k for k in GateKind if k is not GateKind.INPUT}
_SINGLE_INPUT = {GateKind.NOT, GateKind.BUFF, GateKind.DFF}

_DECL_RE = re.compile(r"^(INPUT|OUTPUT)\s*\(\s*([^()\s,]+)\s*\)$", re.IGNORECASE)
_ASSIGN_RE = re.compile(r"^([^()\s=]+)\s*=\s*([A-Za-z]+)\s*\(([^()]*)\)$")


@dataclass(frozen=True)
class Gate:
    """One driver: a logic gate, a flip-flop, or a materialized primary input."""

    id: int
    kind: GateKind
    fanin: tuple[int, ...]  # line ids, in pin order
    out: int  # line id driven by this gate


@dataclass(frozen=True)
class Line:
    """A named signal (fanout stem).  Branches are not separate lines."""

    id: int
    name: str
    driver: int  # gate id
    sinks: tuple[int, ...]  # gate ids reading this line


@dataclass
class Circuit:
    """Validated netlist with a levelized combinational evaluation order."""

    name: str
    gates: tuple[Gate, ...]
    lines: tuple[Line, ...]
    primary_inputs: tuple[int, ...]  # line ids
    primary_outputs: tuple[int, ...]  # line ids
    dffs: tuple[int, ...]  # gate ids
    level_order: tuple[int, ...]  # combinational gate ids, fanin-first
    gate_level: tuple[int, ...]  # per gate id; INPUT/DFF gates are level 0
    validation_warnings: tuple[str, ...] = ()
    _name_to_line: dict[str, int] = field(default_factory=dict, repr=False)

    def line_id(self, name: str) -> int:
        try:
            return self._name_to_line[name]
        except KeyError:
            raise NetlistError(f"{self.name}: no signal named {name!r}") from None

    def line_name(self, line_id: int) -> str:
        return self.lines[line_id].name

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def comb_gates(self) -> tuple[int, ...]:
        return self.level_order

    def dff_d_line(self, gate_id: int) -> int:
        return self.gates[gate_id].fanin[0]

    def dff_q_line(self, gate_id: int) -> int:
        return self.gates[gate_id].out


def parse_bench(text: str, name: str = "bench") -> Circuit:
    """Parse ``.bench`` source into a validated :class:`Circuit`.

    Accepts ``INPUT(x)``, ``OUTPUT(y)``, ``y = GATE(a, b, ...)`` statements and
    ``#`` comments.  Gate keywords are case-insensitive, signal names are
    case-sensitive, and forward references are allowed.
    """
    pi_names: list[str] = []
    po_names: list[tuple[str, int]] = []
    assigns: dict[str, tuple[GateKind, list[str], int]] = {}
    declared: set[str] = set()

    def synth_name(base: str) -> str:
        cand = base + "_xn"
        while cand in declared or cand in assigns:
            cand += "_"
        return cand

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stmt = raw.split("#", 1)[0].strip()
        if not stmt:
            continue
        m = _DECL_RE.match(stmt)
        if m:
            kw, sig = m.group(1).upper(), m.group(2)
            if kw == "INPUT":
                if sig in declared:
                    raise NetlistError(f"{name}:{lineno}: duplicate driver for signal {sig!r}")
                declared.add(sig)
                pi_names.append(sig)
            else:
                po_names.append((sig, lineno))
            continue
        m = _ASSIGN_RE.match(stmt)
        if m:
            out, kw, arglist = m.group(1), m.group(2).upper(), m.group(3)
            fanin = [a.strip() for a in arglist.split(",") if a.strip()]
            if out in declared or out in assigns:
                raise NetlistError(f"{name}:{lineno}: duplicate driver for signal {out!r}")
            if kw == "XNOR":
                if len(fanin) < 1:
                    raise NetlistError(f"{name}:{lineno}: XNOR with no inputs")
                mid = synth_name(out)
                assigns[mid] = (GateKind.XOR, fanin, lineno)
                assigns[out] = (GateKind.NOT, [mid], lineno)
                continue
            kind = _KEYWORDS.get(kw)
            if kind is None:
                raise NetlistError(f"{name}:{lineno}: unknown gate keyword {kw!r}")
            if kind in _SINGLE_INPUT and len(fanin) != 1:
                raise NetlistError(
                    f"{name}:{lineno}: {kind.name} takes exactly one input, got {len(fanin)}"
                )
            if not fanin:
                raise NetlistError(f"{name}:{lineno}: {kind.name} with no inputs")
            assigns[out] = (kind, fanin, lineno)
            continue
        raise NetlistError(f"{name}:{lineno}: cannot parse statement {stmt!r}")

    # Every signal must be driven by exactly one INPUT declaration or assignment.
    for out, (_, fanin, lineno) in assigns.items():
        for sig in fanin:
            if sig not in declared and sig not in assigns:
                raise NetlistError(
                    f"{name}:{lineno}: reference to undefined signal {sig!r} in driver of {out!r}"
                )
    for sig, lineno in po_names:
        if sig not in declared and sig not in assigns:
            raise NetlistError(f"{name}:{lineno}: OUTPUT names undefined signal {sig!r}")

    vwarnings: list[str] = []
    if not po_names:
        vwarnings.append("no outputs declared")
        warnings.warn(f"{name}: no outputs declared", NetlistWarning, stacklevel=2)

    # Canonical ids: sorted signal name order, independent of declaration order.
    all_names = sorted(set(pi_names) | set(assigns))
    line_of = {n: i for i, n in enumerate(all_names)}

    gates: list[Gate] = []
    sinks: dict[int, list[int]] = {line_of[n]: [] for n in all_names}
    for gid, sig in enumerate(all_names):
        if sig in assigns:
            kind, fanin_names, _ = assigns[sig]
            fanin = tuple(line_of[f] for f in fanin_names)
        else:
            kind, fanin = GateKind.INPUT, ()
        gates.append(Gate(id=gid, kind=kind, fanin=fanin, out=line_of[sig]))
        for f in fanin:
            sinks[f].append(gid)

    lines = tuple(
        Line(id=i, name=n, driver=i, sinks=tuple(sorted(set(sinks[line_of[n]]))))
        for i, n in enumerate(all_names)
    )
    pis = tuple(sorted(line_of[n] for n in pi_names))
    pos = tuple(sorted({line_of[n] for n, _ in po_names}))
    dffs = tuple(g.id for g in gates if g.kind is GateKind.DFF)

    order, levels = levelize_gates(gates, lines, name)
    circuit = Circuit(
        name=name,
        gates=tuple(gates),
        lines=lines,
        primary_inputs=pis,
        primary_outputs=pos,
        dffs=dffs,
        level_order=order,
        gate_level=levels,
        validation_warnings=tuple(vwarnings),
        _name_to_line=dict(line_of),
    )
    return circuit


def levelize_gates(
    gates: list[Gate] | tuple[Gate, ...],
    lines: tuple[Line, ...],
    name: str = "bench",
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Topologically order combinational gates; DFF/INPUT outputs are level 0.

    Returns (level_order, per-gate levels).  Raises on a combinational cycle,
    i.e. a cycle not broken by a DFF.
    """
    level = [0] * len(gates)
    comb = [g.id for g in gates if g.kind not in (GateKind.INPUT, GateKind.DFF)]
    # Dependencies counted only through combinational drivers.
    pending = {}
    for gid in comb:
        deps = [lines[f].driver for f in gates[gid].fanin]
        deps = [d for d in deps if gates[d].kind not in (GateKind.INPUT, GateKind.DFF)]
        pending[gid] = len(deps)

    import heapq

    ready = [gid for gid in comb if pending[gid] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        gid = heapq.heappop(ready)
        g = gates[gid]
        level[gid] = 1 + max((level[lines[f].driver] for f in g.fanin), default=0)
        order.append(gid)
        for sink in lines[g.out].sinks:
            if sink in pending:
                pending[sink] -= 1
                if pending[sink] == 0:
                    heapq.heappush(ready, sink)
    if len(order) != len(comb):
        stuck = sorted(lines[gates[g].out].name for g in comb if pending[g] > 0)
        raise NetlistError(f"{name}: combinational cycle through signals {stuck}")
    return tuple(order), tuple(level)


def levelize(circuit: Circuit) -> tuple[int, ...]:
    """Recompute the fanin-first order of combinational gates from connectivity."""
    order, _ = levelize_gates(circuit.gates, circuit.lines, circuit.name)
    return order


def circuit_stats(circuit: Circuit) -> dict[str, int]:
    """Counts of combinational gates, DFFs, PIs, POs and lines."""
    n_comb = sum(
        1 for g in circuit.gates if g.kind not in (GateKind.INPUT, GateKind.DFF)
    )
    return {
        "gates": n_comb,
        "dffs": len(circuit.dffs),
        "inputs": len(circuit.primary_inputs),
        "outputs": len(circuit.primary_outputs),
        "lines": circuit.n_lines,
    }


def to_bench(circuit: Circuit) -> str:
    """Serialize back to ``.bench`` text (canonical order, XNOR stays rewritten)."""
    out = [f"# {circuit.name}"]
    for lid in circuit.primary_inputs:
        out.append(f"INPUT({circuit.line_name(lid)})")
    for lid in circuit.primary_outputs:
        out.append(f"OUTPUT({circuit.line_name(lid)})")
    for g in circuit.gates:
        if g.kind is GateKind.INPUT:
            continue
        args = ", ".join(circuit.line_name(f) for f in g.fanin)
        out.append(f"{circuit.line_name(g.out)} = {g.kind.name}({args})")
    return "\n".join(out) + "\n"
