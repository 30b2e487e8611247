"""Entanglement distribution in quantum networks.

Modules: ``qstate`` (two-qubit link algebra), ``maps`` (repeater recursion
maps), ``netgraph`` (topologies and rewrites), ``perc`` (percolation engine
and protocols), ``qec`` (syndrome decoding on a torus), ``routing``
(path-based distribution) and ``cli`` (batch runner).
"""

__version__ = "0.1.0"
