"""Seeded synthetic sequential circuits for desk-scale experiments.

Generated netlists follow the ISCAS'89 conventions (random logic clouds with
D-flip-flop feedback) so the rest of the pipeline can be exercised end to end
at any size without shipping the full benchmark family.  Generation is a pure
function of the seed: the emitted ``.bench`` text is byte-stable.
"""

from __future__ import annotations

import numpy as np

from stfip.netlist import Circuit, parse_bench

_COMB_KINDS = ("AND", "NAND", "OR", "NOR", "NOT", "BUFF", "XOR")
_KIND_WEIGHTS = (0.22, 0.18, 0.22, 0.14, 0.12, 0.04, 0.08)


def random_bench(seed: int, n_pis: int, n_gates: int, n_dffs: int = 0,
                 name: str | None = None) -> str:
    """Random ``.bench`` source with the requested shape.

    Gate fanins are biased toward recently created signals, which yields
    deep, ISCAS-like logic cones instead of a flat two-level soup.  Every
    sink-less gate output becomes a primary output, so no logic is dead.
    """
    if n_pis < 1 or n_gates < 1:
        raise ValueError("need at least one PI and one gate")
    rng = np.random.default_rng(seed)
    name = name or f"rnd{seed}_{n_gates}"
    pis = [f"in{i}" for i in range(n_pis)]
    qs = [f"r{i}" for i in range(n_dffs)]
    pool = pis + qs  # every signal usable as a fanin
    stmts = []
    used: set[str] = set()

    def pick(k: int) -> list[str]:
        chosen: list[str] = []
        while len(chosen) < k:
            # geometric bias toward the most recent signals
            back = min(int(rng.geometric(0.12)), len(pool))
            cand = pool[len(pool) - back]
            if cand not in chosen:
                chosen.append(cand)
        return chosen

    gates = []
    for i in range(n_gates):
        kind = str(rng.choice(_COMB_KINDS, p=_KIND_WEIGHTS))
        arity = 1 if kind in ("NOT", "BUFF") else int(rng.integers(2, 4))
        fanin = pick(min(arity, len(pool)))
        out = f"g{i}"
        gates.append((out, kind, fanin))
        used.update(fanin)
        pool.append(out)
    gate_outs = [g[0] for g in gates]
    for i in range(n_dffs):
        # feedback taps come from the tail of the cloud
        cand = gate_outs[max(0, n_gates - 4 * n_dffs):] or gate_outs
        d = str(rng.choice(cand))
        stmts.append((qs[i], "DFF", [d]))
        used.add(d)
    pos = [s for s in gate_outs if s not in used]
    if not pos:
        pos = [gate_outs[-1]]

    text = [f"# {name} (synthetic, seed={seed})"]
    text += [f"INPUT({p})" for p in pis]
    text += [f"OUTPUT({p})" for p in pos]
    for out, kind, fanin in stmts + gates:
        text.append(f"{out} = {kind}({', '.join(fanin)})")
    return "\n".join(text) + "\n"


def random_circuit(seed: int, n_pis: int, n_gates: int, n_dffs: int = 0,
                   name: str | None = None) -> Circuit:
    src = random_bench(seed, n_pis, n_gates, n_dffs, name)
    return parse_bench(src, name or f"rnd{seed}_{n_gates}")


def circuit_family(base_seed: int, sizes, n_dff_frac: float = 0.15,
                   pi_count: int = 8) -> list[Circuit]:
    """A family of circuits with ascending gate counts (benchmark stand-in)."""
    out = []
    for i, n_gates in enumerate(sorted(sizes)):
        n_dffs = max(1, int(n_gates * n_dff_frac))
        out.append(random_circuit(base_seed + i, pi_count, n_gates, n_dffs,
                                  name=f"syn{n_gates}"))
    return out


def pipeline_bench(seed: int, chains, name: str | None = None) -> str:
    """Register pipelines whose fault effects surface only after several cycles.

    ``chains`` is a list of (head_gates, depth) pairs.  Each chain is a small
    input cone feeding ``depth`` back-to-back DFFs; chain tails combine
    through an XOR tree into the single PO, so every tail value propagates
    with probability one.  A fault inside a head cone cannot reach the PO
    before its chain delay has elapsed, which makes the cone's lines
    cycle-sensitive until the head register's input is observed directly.
    """
    rng = np.random.default_rng(seed)
    name = name or f"pipe{seed}"
    stmts: list[str] = []
    n_pis = max(3, 2 * len(chains))
    pis = [f"in{i}" for i in range(n_pis)]
    tails: list[str] = []
    for c, (head_gates, depth) in enumerate(chains):
        cone = [str(rng.choice(pis)) for _ in range(2)]
        for g in range(head_gates):
            kind = "OR" if g % 3 != 2 else "AND"  # bias head signals toward 1
            a = cone[int(rng.integers(0, len(cone)))]
            b = str(rng.choice(pis)) if rng.random() < 0.5 else cone[int(rng.integers(0, len(cone)))]
            if a == b:
                b = pis[int(rng.integers(0, n_pis))]
            out = f"c{c}h{g}"
            stmts.append(f"{out} = {kind}({a}, {b})")
            cone.append(out)
        head = cone[-1]
        prev = head
        for d in range(depth):
            q = f"c{c}q{d}"
            stmts.append(f"{q} = DFF({prev})")
            prev = q
        tails.append(prev)
    # XOR-combine the tails
    level = tails
    t = 0
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            out = f"x{t}"
            t += 1
            stmts.append(f"{out} = XOR({level[i]}, {level[i + 1]})")
            nxt.append(out)
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    po = level[0] if len(tails) > 1 else f"x0"
    if len(tails) == 1:
        stmts.append(f"x0 = BUFF({tails[0]})")

    text = [f"# {name} (synthetic pipeline, seed={seed})"]
    text += [f"INPUT({p})" for p in pis]
    text += [f"OUTPUT({po})"]
    text += stmts
    return "\n".join(text) + "\n"


def pipeline_circuit(seed: int, chains, name: str | None = None) -> Circuit:
    nm = name or f"pipe{seed}"
    return parse_bench(pipeline_bench(seed, chains, nm), nm)
