"""tridg: DG solver for 2D hyperbolic conservation laws on triangular meshes.

Modal discontinuous Galerkin discretization with an oscillation-eliminating
modal filter (component-wise and rotation-equivariant variants) and
bound-preserving limiting built on optimal convex decompositions of the cell
average for P1/P2 elements.
"""

from . import basis, bp, config, dg, harness, mesh, oe, physics, problems, quadrature, timestepping
from .dg import ModalState, SpatialOperator
from .errors import (AdmissibilityError, ConfigError, GeometryError,
                     MeshFormatError, NumericsError, TopologyError,
                     TriDGError, UnsupportedOperationError)
from .mesh import Mesh, generate_structured, load_mesh, refine_uniform
from .oe import OEFilter
from .physics import Advection, Burgers, Euler, make_model
from .timestepping import SSP_RK22, SSP_RK33, SSP_RK54, advance, run

__version__ = "0.1.0"
