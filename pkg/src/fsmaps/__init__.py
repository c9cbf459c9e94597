"""fsmaps: ordinary and fully simple map n-point functions, three ways.

Pipelines: exact Fock-space vacuum expectation values, Eynard-Orantin
topological recursion on the maps spectral curve, and the ordinary <->
fully simple duality graph sums; plus a brute-force gluing enumerator as
an independent oracle.
"""

__version__ = "0.1.0"
