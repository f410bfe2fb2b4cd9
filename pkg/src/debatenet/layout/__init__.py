from ._backend import BACKENDS, DEFAULT as BACKEND
from .forceatlas import (
    LayoutEmbedding,
    LayoutError,
    LayoutParams,
    embedding_csv,
    exact_repulsion,
    layout_energy,
    read_embedding,
    repulsion_pass,
    spatialize,
    write_embedding,
)
from .quadtree import QuadTree, build_quadtree

__all__ = [
    "BACKEND",
    "BACKENDS",
    "LayoutEmbedding",
    "LayoutError",
    "LayoutParams",
    "QuadTree",
    "build_quadtree",
    "embedding_csv",
    "exact_repulsion",
    "layout_energy",
    "read_embedding",
    "repulsion_pass",
    "spatialize",
    "write_embedding",
]
