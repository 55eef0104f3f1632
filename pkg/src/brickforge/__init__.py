"""brickforge: photographs of brick models in, printable meshes out."""

__version__ = "0.1.0"

from .errors import (
    AmbiguousReference,
    BrickForgeError,
    MeshContractError,
    NoModelFound,
    ParseError,
    ProfileMismatch,
    ReferenceBrickNotFound,
    StateConflict,
    ValidationError,
    VersionError,
    VisionError,
)
from .grid import (
    BrickBitmask,
    CellDimensions,
    Profile,
    Side,
    VoxelSolid,
    connected_components,
    outline_polygons,
    voxel_components,
    voxelize_extrusion,
)

__all__ = [
    "__version__",
    "AmbiguousReference",
    "BrickForgeError",
    "BrickBitmask",
    "CellDimensions",
    "MeshContractError",
    "NoModelFound",
    "ParseError",
    "Profile",
    "ProfileMismatch",
    "ReferenceBrickNotFound",
    "Side",
    "StateConflict",
    "ValidationError",
    "VersionError",
    "VisionError",
    "VoxelSolid",
    "connected_components",
    "outline_polygons",
    "voxel_components",
    "voxelize_extrusion",
]
