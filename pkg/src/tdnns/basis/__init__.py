"""Hierarchic basis catalogs for the three fields of the mixed method.

Each catalog enumerates shape functions grouped into contiguous blocks, one
block per topological entity (vertex/edge/face/interior) of the reference
cell.  Blocks are what the DOF layer couples across elements; interior blocks
are condensable.
"""

from .catalog import Block, entity_sort_key
from .stress import StressCatalog, stress_catalog
from .displacement import DisplacementCatalog, TriTangential, displacement_catalog, tri_tangential
from .potential import PotentialCatalog, TriH1, potential_catalog, tri_h1

__all__ = [
    "Block",
    "entity_sort_key",
    "StressCatalog",
    "stress_catalog",
    "DisplacementCatalog",
    "TriTangential",
    "displacement_catalog",
    "tri_tangential",
    "PotentialCatalog",
    "TriH1",
    "potential_catalog",
    "tri_h1",
]
