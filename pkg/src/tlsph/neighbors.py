"""Reference-configuration neighborhoods for the total-Lagrangian solver.

Neighbor lists are built once from the initial particle positions and never
change afterwards.  Pair data (separation vector, distance, kernel gradient)
is computed once per unordered pair and mirrored with a sign flip, which
makes grad(i -> j) == -grad(j -> i) hold bitwise.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DuplicateParticlesError
from .kernels import wendland_radial_derivative


@dataclass(frozen=True)
class ReferenceNeighborhood:
    """Immutable CSR neighbor lists with precomputed kernel gradients.

    ``offsets[i]:offsets[i+1]`` indexes the slots of particle i; slot arrays
    are sorted by (owner, neighbor) so reductions have a fixed order.
    """

    h: float
    offsets: np.ndarray     # (n+1,) int64
    neighbors: np.ndarray   # (P,) int64
    owners: np.ndarray      # (P,) int64, owner i of each slot
    r0_ij: np.ndarray       # (P, 3) r0_i - r0_j
    dist0: np.ndarray       # (P,)
    grad0: np.ndarray       # (P, 3) kernel gradient seen from the owner

    @property
    def support_radius(self):
        return 2.0 * self.h

    @property
    def n(self):
        return self.offsets.shape[0] - 1

    @property
    def n_pairs(self):
        return self.neighbors.shape[0]

    def neighbor_counts(self):
        return np.diff(self.offsets)

    def neighbors_of(self, i):
        return self.neighbors[self.offsets[i]:self.offsets[i + 1]]

    def slot(self, i, j):
        """CSR slot of ordered pair (i, j); raises KeyError if absent."""
        lo, hi = self.offsets[i], self.offsets[i + 1]
        k = lo + np.searchsorted(self.neighbors[lo:hi], j)
        if k >= hi or self.neighbors[k] != j:
            raise KeyError(f"({i}, {j}) is not a neighbor pair")
        return int(k)


def _cell_index_map(positions, cell_size):
    """Group particle indices by integer grid cell."""
    lo = positions.min(axis=0)
    cells = np.floor((positions - lo) / cell_size).astype(np.int64)
    order = np.lexsort((cells[:, 2], cells[:, 1], cells[:, 0]))
    sorted_cells = cells[order]
    change = np.empty(len(order), dtype=bool)
    change[0] = True
    change[1:] = np.any(sorted_cells[1:] != sorted_cells[:-1], axis=1)
    starts = np.flatnonzero(change)
    ends = np.append(starts[1:], len(order))
    table = {}
    for s, e in zip(starts, ends):
        table[tuple(sorted_cells[s])] = order[s:e]
    return table


# half of the 26 cell offsets, lexicographically positive; together with the
# same-cell triangle this enumerates every unordered cell pair exactly once
_HALF_OFFSETS = [
    (dx, dy, dz)
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) > (0, 0, 0)
]


def build_reference_neighborhoods(ref_positions, h):
    """Find every ordered pair with 0 < |r0_ij| < 2h and precompute pair data.

    Uses a cell-linked grid with cell size equal to the support radius, so
    construction is O(N) for quasi-uniform particle distributions.  Exactly
    coincident positions are rejected with the offending indices.
    """
    pos = np.ascontiguousarray(np.asarray(ref_positions, dtype=np.float64))
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ValueError(f"expected (n, 3) positions, got shape {pos.shape}")
    if not np.isfinite(pos).all():
        raise ValueError("reference positions must be finite")
    if h <= 0.0:
        raise ValueError(f"smoothing length must be positive, got h = {h}")
    n = pos.shape[0]
    rc = 2.0 * h

    ia_parts, ja_parts = [], []
    if n > 1:
        table = _cell_index_map(pos, rc)
        for key in sorted(table):
            own = table[key]
            if len(own) > 1:
                ii, jj = np.triu_indices(len(own), k=1)
                ia_parts.append(own[ii])
                ja_parts.append(own[jj])
            for off in _HALF_OFFSETS:
                other = table.get((key[0] + off[0], key[1] + off[1], key[2] + off[2]))
                if other is None:
                    continue
                ia_parts.append(np.repeat(own, len(other)))
                ja_parts.append(np.tile(other, len(own)))

    if ia_parts:
        ia = np.concatenate(ia_parts)
        ja = np.concatenate(ja_parts)
        rij = pos[ia] - pos[ja]
        dist = np.sqrt(np.einsum("pk,pk->p", rij, rij))
        dup = dist == 0.0
        if dup.any():
            raise DuplicateParticlesError(
                sorted(zip(ia[dup].tolist(), ja[dup].tolist()))
            )
        keep = dist < rc
        ia, ja, rij, dist = ia[keep], ja[keep], rij[keep], dist[keep]
    else:
        ia = np.empty(0, dtype=np.int64)
        ja = np.empty(0, dtype=np.int64)
        rij = np.empty((0, 3), dtype=np.float64)
        dist = np.empty(0, dtype=np.float64)

    # dist is strictly positive here: zeros were rejected as duplicates
    grad = wendland_radial_derivative(dist, h)[:, None] * (rij / dist[:, None])

    # mirror the shared pair data into both orientations
    owners = np.concatenate([ia, ja])
    neigh = np.concatenate([ja, ia])
    r0_ij = np.concatenate([rij, -rij])
    dist0 = np.concatenate([dist, dist])
    grad0 = np.concatenate([grad, -grad])

    order = np.lexsort((neigh, owners))
    owners = owners[order]
    neigh = neigh[order]
    r0_ij = np.ascontiguousarray(r0_ij[order])
    dist0 = dist0[order]
    grad0 = np.ascontiguousarray(grad0[order])

    counts = np.bincount(owners, minlength=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])

    for arr in (offsets, owners, neigh, r0_ij, dist0, grad0):
        arr.setflags(write=False)
    return ReferenceNeighborhood(
        h=float(h),
        offsets=offsets,
        neighbors=neigh,
        owners=owners,
        r0_ij=r0_ij,
        dist0=dist0,
        grad0=grad0,
    )
