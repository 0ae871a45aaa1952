"""horolab: expanding translates of horospheres in SL_n(R)/SL_n(Z) and related counts.

Submodules
----------
lie
    Cartan directions, roots, weights and the cones they define.
linalg
    Iwasawa decomposition, exterior powers, exact integer helpers, bump functions.
reduction
    LLL reduction and exact shortest vectors.
lattice
    Unimodular lattices, the compact sets ``K_eps`` and Siegel transforms.
dynamics
    Horosphere coordinates, flowed samples, escape of mass, discrepancy and growth.
horospheres
    Exact counts of horosphere lifts meeting balls.
manin
    Exact counts of rational points of bounded height on flag varieties.
experiments
    Config-driven runs with CSV, SVG and manifest outputs.
"""

__version__ = "0.1.0"

from .errors import HorolabError  # noqa: E402
from .lie import CartanVector  # noqa: E402
from .lattice import UnimodularLattice  # noqa: E402

__all__ = ["__version__", "HorolabError", "CartanVector", "UnimodularLattice"]
