"""Filling volumes of cycles in horospheres of tree products.

Exact chain algebra on weighted cell complexes, builders for grids, tree
products and their level sets, minimal fillings by linear programming,
constructive cone fillings, and the cover/nerve machinery that pushes
ambient fillings back into a level set."""

__version__ = "0.1.0"

from .chains import (Cell, CellComplex, Chain, ChainError, DomainError, GeometryError,
                     CarrierMismatch, boundary, mass, augmentation, is_cycle,
                     triangulate, barycentric_subdivide, ff_deform)
from .spaces import (CapacityError, EmptyLevelError, build_grid, build_tree,
                     build_tree_product, horosphere, hard_sphere, random_cycle,
                     apartment_loops)
from .filling import (RangeError, FillingResult, min_fill_lp, min_fill_oracle,
                      cone_fill, fit_exponent, sweep_and_fit, run_jobs)
from .building import (downward_link, direction, is_characteristic, ray_to_horosphere,
                       opposite_witness)
from .extension import (ls_cover, audit_cover, nerve, map_g, map_h0, whitney,
                        exploded_simplex, undistorted_fill, Pipeline)
