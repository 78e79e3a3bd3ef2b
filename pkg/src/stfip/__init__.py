"""Fault impact probability simulation and prediction for sequential circuits.

The package covers the full pipeline: parsing gate-level ``.bench`` netlists,
multi-cycle stuck-at / transition fault simulation that produces per-cycle
fault impact probability (FIP) curves, per-cycle testability metrics,
conversion of circuits into spatio-temporal graph samples, a graph network
that predicts future-cycle FIP from a short observation window, and a greedy
observation-point selector driven by those predictions.
"""

from stfip.netlist import Circuit, GateKind, NetlistError, parse_bench

__all__ = ["Circuit", "GateKind", "NetlistError", "parse_bench", "__version__"]

__version__ = "0.1.0"
