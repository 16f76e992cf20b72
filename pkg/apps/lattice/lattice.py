"""
Lattice geometry - nearest-neighbour graphs for chains and square grids
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple, Union

from ntfsim.exceptions import InvalidGeometryError


class LatticeKind(str, Enum):
    CHAIN = 'chain'
    SQUARE = 'square'


class Boundary(str, Enum):
    OPEN = 'open'
    PERIODIC = 'periodic'


# Critical transverse field in units of J
CRITICAL_FIELD = {
    LatticeKind.CHAIN: 1.0,
    LatticeKind.SQUARE: 3.04438,
}


@dataclass(frozen=True)
class Lattice:
    """Immutable nearest-neighbour graph with row-major site ordering."""
    kind: LatticeKind
    extent: Tuple[int, ...]
    boundary: Boundary
    edges: Tuple[Tuple[int, int], ...] = field(default=())

    @property
    def n_sites(self) -> int:
        n = 1
        for length in self.extent:
            n *= length
        return n

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def coordinates(self, site: int) -> Tuple[int, ...]:
        if self.kind == LatticeKind.CHAIN:
            return (site,)
        _, ly = self.extent
        return (site // ly, site % ly)

    def to_dict(self) -> Dict:
        return {
            'kind': self.kind.value,
            'extent': list(self.extent),
            'boundary': self.boundary.value,
            'n_sites': self.n_sites,
            'n_edges': self.n_edges,
        }


def _add_edge(edges: List[Tuple[int, int]], seen: set, i: int, j: int):
    if i == j:
        return
    key = (min(i, j), max(i, j))
    if key in seen:
        return
    seen.add(key)
    edges.append((i, j))


def build_lattice(
    kind: Union[str, LatticeKind],
    extent: Union[int, Sequence[int]],
    boundary: Union[str, Boundary] = Boundary.PERIODIC,
) -> Lattice:
    """
    Build a chain or square lattice.

    Square sites are numbered row-major, site = row * Ly + col. With extent 2
    and periodic boundaries the wrap-around bond coincides with the direct one
    and is kept once.
    """
    try:
        kind = LatticeKind(kind)
        boundary = Boundary(boundary)
    except ValueError as exc:
        raise InvalidGeometryError(str(exc)) from exc

    if isinstance(extent, int):
        extent = (extent,) if kind == LatticeKind.CHAIN else (extent, extent)
    extent = tuple(int(x) for x in extent)

    expected_dims = 1 if kind == LatticeKind.CHAIN else 2
    if len(extent) != expected_dims:
        raise InvalidGeometryError(
            f'{kind.value} lattice needs {expected_dims} extent(s), got {extent}'
        )
    if any(length < 2 for length in extent):
        raise InvalidGeometryError(f'every extent must be >= 2, got {extent}')

    periodic = boundary == Boundary.PERIODIC
    edges: List[Tuple[int, int]] = []
    seen: set = set()

    if kind == LatticeKind.CHAIN:
        (length,) = extent
        for i in range(length):
            if i + 1 < length:
                _add_edge(edges, seen, i, i + 1)
            elif periodic:
                _add_edge(edges, seen, i, 0)
    else:
        lx, ly = extent
        for r in range(lx):
            for c in range(ly):
                site = r * ly + c
                # right neighbour
                if c + 1 < ly:
                    _add_edge(edges, seen, site, r * ly + c + 1)
                elif periodic:
                    _add_edge(edges, seen, site, r * ly)
                # down neighbour
                if r + 1 < lx:
                    _add_edge(edges, seen, site, (r + 1) * ly + c)
                elif periodic:
                    _add_edge(edges, seen, site, c)

    return Lattice(kind=kind, extent=extent, boundary=boundary, edges=tuple(edges))


def critical_field(kind: Union[str, LatticeKind], J: float = 1.0) -> float:
    """h_c of the transverse-field Ising model on the given geometry."""
    return CRITICAL_FIELD[LatticeKind(kind)] * J
