"""frachardy: numerical laboratory for the fractional Dirichlet Laplacian
with a Hardy potential at and below the critical coupling.

Subpackages are imported lazily by the CLI so that thread limits from the
FRACHARDY_THREADS environment variable can take effect before the numerics
stack loads.
"""

__version__ = "0.1.0"
