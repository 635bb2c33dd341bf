"""Cooling fin thermal design benchmark.

A vertical post (width 1, height 4) with four horizontal sub-fins, each made
of two arms of width 2.5 and thickness 0.25.  Steady heat conduction with
piecewise conductivity (post k0 = 5, sub-fins k1..k4 designed in [1, 10]),
unit heat inflow over the root (bottom of the post), and a Robin condition
with Biot number 0.5 on the remaining boundary.  All conductivities and the
Biot number carry additive truncated-normal perturbations.

Linear triangular elements on a structured grid; per-region stiffness and
boundary-mass blocks are pre-assembled once in symmetric banded form so each
random sample costs one banded Cholesky solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack, solveh_banded
from scipy.sparse.csgraph import reverse_cuthill_mckee

from ..stochastics import CorrelationSpec, RandomBatch, sample_batch, truncated_normal

__all__ = [
    "FinGeometry",
    "FemSystem",
    "build_fin_mesh",
    "solve_fin",
    "fin_objective",
    "CoolingFinModel",
]


@dataclass(frozen=True)
class FinGeometry:
    """Geometry constants; sub-fin attachment heights live here so they can
    be adjusted without touching the mesher or assembly."""

    post_width: float = 1.0
    post_height: float = 4.0
    arm_width: float = 2.5
    fin_thickness: float = 0.25
    # top edge of each sub-fin band, bottom to top
    fin_tops: Tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    k_post: float = 5.0
    biot: float = 0.5
    sigma_k: float = 0.1
    sigma_bi: float = 0.02
    design_lo: float = 1.0
    design_hi: float = 10.0

    @property
    def half_post(self) -> float:
        return self.post_width / 2.0

    @property
    def x_extent(self) -> float:
        return self.half_post + self.arm_width

    @property
    def post_area(self) -> float:
        return self.post_width * self.post_height

    @property
    def fin_area(self) -> float:
        # two arms per sub-fin
        return 2.0 * self.arm_width * self.fin_thickness

    def region_of(self, x: float, y: float) -> Optional[int]:
        """Region tag at a point: 0 post, 1..4 sub-fins, None outside."""
        if abs(x) <= self.half_post and 0.0 <= y <= self.post_height:
            return 0
        if self.half_post < abs(x) <= self.x_extent:
            for i, top in enumerate(self.fin_tops):
                if top - self.fin_thickness <= y <= top:
                    return i + 1
        return None


# P1 triangle stiffness: grad phi_i . grad phi_j * area
def _tri_stiffness(xy: np.ndarray) -> np.ndarray:
    x, y = xy[:, 0], xy[:, 1]
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    cc = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    area2 = x[0] * b[0] + x[1] * b[1] + x[2] * b[2]
    area = 0.5 * abs(area2)
    if area <= 0:
        raise ValueError("degenerate element")
    return (np.outer(b, b) + np.outer(cc, cc)) / (4.0 * area)


@dataclass
class FemSystem:
    """Assembled fin discretization.

    ``stiffness_blocks[r]`` is the conduction stiffness restricted to region
    r (0 = post, 1..4 = sub-fins); ``robin_mass`` the exterior boundary mass
    matrix; ``load`` the unit root inflow vector.  Banded copies of the same
    blocks drive the per-sample solves.
    """

    geometry: FinGeometry
    nodes: np.ndarray                 # (n, 2) coordinates
    elements: np.ndarray              # (ne, 3) connectivity
    element_regions: np.ndarray       # (ne,) tags 0..4
    boundary_edges: List[Tuple[int, int, str]]  # (a, b, "root" | "exterior")
    stiffness_blocks: List[sp.csr_matrix]
    robin_mass: sp.csr_matrix
    load: np.ndarray
    bandwidth: int
    banded_blocks: np.ndarray         # (6, bandwidth+1, n): 5 stiffness + robin
    root_nodes: np.ndarray
    root_weights: np.ndarray          # trapezoid weights for the root average
    # sparse map from the 6 parameters to the nonzero band slots; combining
    # through it instead of a dense 6-block sum keeps the per-sample solve
    # assembly-cheap (the band is mostly structural zeros)
    assembly: sp.csr_matrix = None    # (n * (bandwidth+1), 6)

    @property
    def dof(self) -> int:
        return self.nodes.shape[0]

    def export_text(self, path: str) -> None:
        """Plain-text mesh dump: nodes, elements with region tags, boundary edges."""
        with open(path, "w") as fh:
            fh.write(f"nodes {self.dof}\n")
            for x, y in self.nodes:
                fh.write(f"{x:.12g} {y:.12g}\n")
            fh.write(f"elements {self.elements.shape[0]}\n")
            for (a, b, c), r in zip(self.elements, self.element_regions):
                fh.write(f"{a} {b} {c} {r}\n")
            fh.write(f"boundary_edges {len(self.boundary_edges)}\n")
            for a, b, tag in self.boundary_edges:
                fh.write(f"{a} {b} {tag}\n")


def _to_banded_upper(a: sp.spmatrix, bw: int) -> np.ndarray:
    """Symmetric CSR -> LAPACK upper-banded storage ab[bw + i - j, j]."""
    n = a.shape[0]
    ab = np.zeros((bw + 1, n))
    coo = a.tocoo()
    for i, j, v in zip(coo.row, coo.col, coo.data):
        if i <= j:
            ab[bw + i - j, j] += v
    return ab


def build_fin_mesh(resolution: int = 2, geometry: Optional[FinGeometry] = None) -> FemSystem:
    """Structured triangulation; ``resolution`` = elements per 0.25 thickness."""
    if resolution < 1:
        raise ValueError("resolution must be at least 1")
    geo = geometry or FinGeometry()
    h = geo.fin_thickness / resolution

    nx = int(round(2 * geo.x_extent / h))
    ny = int(round(geo.post_height / h))
    x0 = -geo.x_extent

    # collect cells whose center lies inside the domain
    node_ids: Dict[Tuple[int, int], int] = {}
    node_list: List[Tuple[float, float]] = []

    def node(ix: int, iy: int) -> int:
        key = (iy, ix)  # y-major ordering keeps the band narrow
        if key not in node_ids:
            node_ids[key] = -1  # placeholder, renumbered after collection
            node_list.append(key)
        return node_ids[key]

    cells = []
    for iy in range(ny):
        for ix in range(nx):
            cx = x0 + (ix + 0.5) * h
            cy = (iy + 0.5) * h
            r = geo.region_of(cx, cy)
            if r is not None:
                cells.append((ix, iy, r))
                for dx in (0, 1):
                    for dy in (0, 1):
                        node(ix + dx, iy + dy)

    # renumber nodes by (y, x)
    node_list.sort()
    for idx, key in enumerate(node_list):
        node_ids[key] = idx
    nodes = np.array([[x0 + ix * h, iy * h] for iy, ix in node_list])

    elements = []
    regions = []
    for ix, iy, r in cells:
        n00 = node_ids[(iy, ix)]
        n10 = node_ids[(iy, ix + 1)]
        n01 = node_ids[(iy + 1, ix)]
        n11 = node_ids[(iy + 1, ix + 1)]
        elements.append((n00, n10, n11))
        elements.append((n00, n11, n01))
        regions.extend((r, r))
    elements = np.array(elements, dtype=int)
    regions = np.array(regions, dtype=int)
    n = nodes.shape[0]

    # reverse Cuthill-McKee renumbering keeps the band narrow for the
    # per-sample banded Cholesky solves
    adj_r, adj_c = [], []
    for tri in elements:
        for a in tri:
            for b in tri:
                adj_r.append(a)
                adj_c.append(b)
    adj = sp.csr_matrix((np.ones(len(adj_r)), (adj_r, adj_c)), shape=(n, n))
    perm = np.asarray(reverse_cuthill_mckee(adj, symmetric_mode=True))
    inv = np.empty(n, dtype=int)
    inv[perm] = np.arange(n)
    nodes = nodes[perm]
    elements = inv[elements]

    # boundary edges: triangle edges appearing exactly once
    edge_count: Dict[Tuple[int, int], int] = {}
    for tri in elements:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            edge_count[key] = edge_count.get(key, 0) + 1
    boundary_edges = []
    for (a, b), cnt in sorted(edge_count.items()):
        if cnt != 1:
            continue
        xa, ya = nodes[a]
        xb, yb = nodes[b]
        on_root = (abs(ya) < 1e-12 and abs(yb) < 1e-12
                   and abs(xa) <= geo.half_post + 1e-12
                   and abs(xb) <= geo.half_post + 1e-12)
        boundary_edges.append((a, b, "root" if on_root else "exterior"))

    # per-region stiffness blocks
    rows: List[List[int]] = [[] for _ in range(5)]
    cols: List[List[int]] = [[] for _ in range(5)]
    vals: List[List[float]] = [[] for _ in range(5)]
    for tri, r in zip(elements, regions):
        ke = _tri_stiffness(nodes[tri])
        for a in range(3):
            for b in range(3):
                rows[r].append(tri[a])
                cols[r].append(tri[b])
                vals[r].append(ke[a, b])
    blocks = [sp.csr_matrix((vals[r], (rows[r], cols[r])), shape=(n, n))
              for r in range(5)]

    # Robin boundary mass on exterior edges, unit-flux load on root edges
    br, bc, bv = [], [], []
    load = np.zeros(n)
    root_weight = np.zeros(n)
    for a, b, tag in boundary_edges:
        length = float(np.hypot(*(nodes[b] - nodes[a])))
        if tag == "exterior":
            local = length / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
            for i, gi in enumerate((a, b)):
                for j, gj in enumerate((a, b)):
                    br.append(gi)
                    bc.append(gj)
                    bv.append(local[i, j])
        else:
            # inflow density 1 / |root| so the total flux is one
            q = 1.0 / geo.post_width
            load[a] += q * length / 2.0
            load[b] += q * length / 2.0
            root_weight[a] += length / 2.0
            root_weight[b] += length / 2.0
    robin = sp.csr_matrix((bv, (br, bc)), shape=(n, n))

    bw = 0
    for tri in elements:
        bw = max(bw, int(tri.max() - tri.min()))
    banded = np.stack([_to_banded_upper(m, bw) for m in blocks + [robin]])
    # banded storage transposed to (n, bw+1) row-major per block, so that
    # assembly @ theta reshaped and transposed is Fortran-ordered for LAPACK
    assembly = sp.csr_matrix(banded.transpose(0, 2, 1).reshape(6, -1).T)

    root_nodes = np.flatnonzero(root_weight > 0)
    weights = root_weight[root_nodes] / root_weight.sum()

    return FemSystem(
        geometry=geo, nodes=nodes, elements=elements, element_regions=regions,
        boundary_edges=boundary_edges, stiffness_blocks=blocks,
        robin_mass=robin, load=load, bandwidth=bw, banded_blocks=banded,
        root_nodes=root_nodes, root_weights=weights, assembly=assembly,
    )


def solve_fin(system: FemSystem, d, z) -> Tuple[float, float]:
    """One thermal solve: returns (root-average temperature, max nodal temperature).

    ``d`` = (k1..k4) sub-fin conductivities; ``z`` = (xi0..xi4, xi_Bi)
    additive perturbations of (k0..k4, Bi).
    """
    geo = system.geometry
    d = np.asarray(d, dtype=float)
    z = np.asarray(z, dtype=float).ravel()
    theta = np.empty(6)
    theta[0] = geo.k_post + z[0]
    theta[1:5] = d + z[1:5]
    theta[5] = geo.biot + z[5]
    if np.any(theta[:5] <= 0) or theta[5] <= 0:
        raise ValueError("perturbed conductivities and Biot number must stay positive")
    bwp1, n = system.banded_blocks.shape[1:]
    ab = system.assembly.dot(theta).reshape(n, bwp1).T
    _, y, info = lapack.dpbsv(ab, system.load.copy(), lower=0,
                              overwrite_ab=1, overwrite_b=1)
    if info != 0:
        raise RuntimeError(f"banded Cholesky solve failed (info={info})")
    root_avg = float(system.root_weights @ y[system.root_nodes])
    return root_avg, float(y.max())


def fin_objective(geo: FinGeometry, d, root_avg_at_mean: float) -> float:
    """Root temperature at the mean perturbation plus normalized material cost."""
    d = np.asarray(d, dtype=float)
    a0 = geo.post_area
    ai = geo.fin_area
    cost = (geo.k_post * a0 + ai * float(np.sum(d)))
    cost /= 5.0 * a0 + 10.0 * 4.0 * ai
    return root_avg_at_mean + cost


class CoolingFinModel:
    """StochasticModel wrapper around the fin FEM.

    g = max temperature, f = deterministic objective (root temperature at
    the mean perturbation plus material cost).  The truncation range of the
    perturbations is configurable for the conservativeness study.
    """

    is_convex = False
    threshold = 0.35

    def __init__(self, resolution: int = 2, truncation_sigmas: Tuple[float, float] = (-4.0, 2.0),
                 geometry: Optional[FinGeometry] = None):
        self.geometry = geometry or FinGeometry()
        self.system = build_fin_mesh(resolution, self.geometry)
        self.design_bounds = np.array([[self.geometry.design_lo, self.geometry.design_hi]] * 4)
        self.truncation_sigmas = truncation_sigmas
        lo_s, hi_s = truncation_sigmas
        sk, sb = self.geometry.sigma_k, self.geometry.sigma_bi
        self.specs = tuple(
            [truncated_normal(0.0, sk, lo_s * sk, hi_s * sk)] * 5
            + [truncated_normal(0.0, sb, lo_s * sb, hi_s * sb)]
        )
        self._obj_cache: Dict[bytes, float] = {}

    def sample(self, m: int, seed: int, stream_id: int = 0) -> RandomBatch:
        return sample_batch(self.specs, CorrelationSpec.identity(6), m, seed, stream_id)

    def mean_z(self) -> np.ndarray:
        return np.zeros(6)

    def g_values(self, design, draws) -> np.ndarray:
        draws = np.atleast_2d(np.asarray(draws, dtype=float))
        geo, system = self.geometry, self.system
        m = draws.shape[0]
        theta = np.empty((m, 6))
        theta[:, 0] = geo.k_post + draws[:, 0]
        theta[:, 1:5] = np.asarray(design, dtype=float) + draws[:, 1:5]
        theta[:, 5] = geo.biot + draws[:, 5]
        if np.any(theta <= 0):
            raise ValueError("perturbed conductivities and Biot number must stay positive")
        bwp1, n = system.banded_blocks.shape[1:]
        asm, load = system.assembly, system.load
        out = np.empty(m)
        for i in range(m):
            ab = asm.dot(theta[i]).reshape(n, bwp1).T
            _, y, info = lapack.dpbsv(ab, load.copy(), lower=0,
                                      overwrite_ab=1, overwrite_b=1)
            if info != 0:
                raise RuntimeError(f"banded Cholesky solve failed (info={info})")
            out[i] = y.max()
        return out

    def f_values(self, design, draws) -> np.ndarray:
        n = np.atleast_2d(draws).shape[0]
        return np.full(n, self.objective_value(design))

    def objective_value(self, design) -> float:
        key = np.asarray(design, dtype=float).tobytes()
        if key not in self._obj_cache:
            root_avg, _ = solve_fin(self.system, design, self.mean_z())
            self._obj_cache[key] = fin_objective(self.geometry, design, root_avg)
        return self._obj_cache[key]

    def initial_design(self) -> np.ndarray:
        return np.full(4, 5.5)
