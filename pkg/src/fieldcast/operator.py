"""Discrete forward operator from antenna densities to control-boundary traces.

The operator maps a density on the antenna boundary to the values of its
double-layer field on every control sphere (one block per region, then
the outer sphere).  Assembly is plain Nystrom: entry (i, j) is the
double-layer kernel between control node i and antenna node j times the
antenna quadrature weight.

Norms on both sides are quadrature weighted, so discrepancy statements
are statements about the underlying function-space norms, not about raw
coefficient vectors.  The adjoint is the exact transpose in those
weighted inner products, and the cached SVD is taken of the similarity
W^(1/2) A w^(-1/2) whose singular values are the operator's with respect
to the true norms.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .geometry import QuadratureRule
from .kernels import dlp_kernel

# Control nodes must clear the antenna sphere by this relative margin.
SEPARATION_RTOL = 1e-6

_DUMP_MAGIC = 0x46434F50  # "FCOP"


@dataclass(frozen=True)
class Density:
    """Real values at the antenna rule's nodes."""

    rule: QuadratureRule
    values: np.ndarray  # (n,)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.rule.node_count,):
            raise ValueError(
                f"values shape {values.shape} does not match {self.rule.node_count} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def norm(self) -> float:
        """Quadrature-weighted L2 norm over the antenna boundary."""
        return self.rule.l2_norm(self.values)


@dataclass(frozen=True)
class ControlTrace:
    """One value block per control boundary, regions first, outer sphere last."""

    blocks: list[np.ndarray]
    rules: list[QuadratureRule]

    def __post_init__(self):
        if len(self.blocks) != len(self.rules):
            raise ValueError(
                f"{len(self.blocks)} blocks for {len(self.rules)} control rules"
            )
        blocks = []
        for b, rule in zip(self.blocks, self.rules):
            arr = np.asarray(b, dtype=float)
            if arr.shape != (rule.node_count,):
                raise ValueError(
                    f"block shape {arr.shape} does not match {rule.node_count} nodes"
                )
            arr.setflags(write=False)
            blocks.append(arr)
        object.__setattr__(self, "blocks", blocks)

    @property
    def concatenated(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    def norm(self) -> float:
        """Product-space norm: root of the summed weighted block norms."""
        return float(np.sqrt(xi_inner(self, self)))

    def __sub__(self, other: "ControlTrace") -> "ControlTrace":
        _check_same_rules(self, other)
        return ControlTrace(
            blocks=[a - b for a, b in zip(self.blocks, other.blocks)],
            rules=self.rules,
        )


def _check_same_rules(s: ControlTrace, t: ControlTrace) -> None:
    if len(s.rules) != len(t.rules):
        raise ValueError("control traces have different block counts")
    for a, b in zip(s.rules, t.rules):
        if (
            a.node_count != b.node_count
            or a.boundary.dim != b.boundary.dim
            or abs(a.boundary.radius - b.boundary.radius) > 1e-14 * a.boundary.radius
            or np.max(np.abs(a.boundary.center - b.boundary.center)) > 1e-14
        ):
            raise ValueError("control traces are defined on different boundaries")


def xi_inner(s: ControlTrace, t: ControlTrace) -> float:
    """Product-space inner product: sum of weighted surface inner products."""
    _check_same_rules(s, t)
    total = 0.0
    for a, b, rule in zip(s.blocks, t.blocks, s.rules):
        total += float(rule.weights @ (a * b))
    return total


@dataclass(frozen=True)
class WeightedSVD:
    """Thin SVD of W^(1/2) A w^(-1/2) plus the weight roots used to form it."""

    sigma: np.ndarray    # (k,) nonincreasing
    u: np.ndarray        # (m, k)
    vt: np.ndarray       # (k, n)
    sqrt_row_w: np.ndarray  # (m,)
    sqrt_col_w: np.ndarray  # (n,)


@dataclass
class ForwardOperator:
    """Dense double-layer trace operator with weighted-SVD cache.

    ``matrix`` already contains the antenna quadrature weights, so
    applying it to nodal density values yields trace values directly.
    """

    matrix: np.ndarray  # (m, n): control nodes x antenna nodes
    antenna_rule: QuadratureRule
    control_rules: list[QuadratureRule]
    _svd: WeightedSVD | None = field(default=None, repr=False)

    def __post_init__(self):
        m = sum(r.node_count for r in self.control_rules)
        n = self.antenna_rule.node_count
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (m, n):
            raise ValueError(f"matrix shape {self.matrix.shape} != ({m}, {n})")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("operator matrix contains non-finite entries")

    @property
    def row_weights(self) -> np.ndarray:
        return np.concatenate([r.weights for r in self.control_rules])

    @property
    def col_weights(self) -> np.ndarray:
        return self.antenna_rule.weights

    @property
    def block_slices(self) -> list[slice]:
        out, start = [], 0
        for r in self.control_rules:
            out.append(slice(start, start + r.node_count))
            start += r.node_count
        return out

    def split(self, concatenated: np.ndarray) -> ControlTrace:
        return ControlTrace(
            blocks=[concatenated[sl] for sl in self.block_slices],
            rules=self.control_rules,
        )


def assemble_forward(antenna: QuadratureRule, controls: list[QuadratureRule]) -> ForwardOperator:
    """Assemble the dense double-layer trace matrix.

    Entry (i, j) = dlp_kernel(x_i, y_j, nu_j) * w_j with x_i running over
    all control nodes and y_j over antenna nodes.  Control nodes inside or
    touching the antenna sphere are rejected: the kernels are analytic
    only for separated boundaries, and a violation indicates a broken
    scenario rather than something to regularize.
    """
    dim = antenna.boundary.dim
    for rule in controls:
        if rule.boundary.dim != dim:
            raise ValueError("antenna and control rules have mixed dimensions")
        rho = np.linalg.norm(rule.nodes - antenna.boundary.center, axis=-1)
        if np.any(rho < antenna.boundary.radius * (1.0 + SEPARATION_RTOL)):
            raise ValueError(
                "control boundary comes too close to the antenna boundary"
            )
    x = np.concatenate([r.nodes for r in controls])  # (m, dim)
    kernel = dlp_kernel(
        x[:, None, :], antenna.nodes[None, :, :], antenna.normals[None, :, :], dim
    )  # (m, n)
    matrix = kernel * antenna.weights[None, :]
    return ForwardOperator(matrix=matrix, antenna_rule=antenna, control_rules=list(controls))


def apply(K: ForwardOperator, h: Density) -> ControlTrace:
    """Double-layer traces of a density on every control boundary."""
    if h.values.shape[0] != K.matrix.shape[1]:
        raise ValueError(
            f"density length {h.values.shape[0]} does not match operator "
            f"columns {K.matrix.shape[1]}"
        )
    return K.split(K.matrix @ h.values)


def apply_adjoint(K: ForwardOperator, t: ControlTrace) -> Density:
    """Adjoint of :func:`apply` in the weighted inner products.

    Computed as w^(-1) A^T W applied to the concatenated trace, which is
    the exact discrete adjoint; it coincides with Nystrom quadrature of
    the adjoint kernel over the control boundaries.
    """
    if len(t.blocks) != len(K.control_rules):
        raise ValueError("trace block count does not match the operator")
    for block, rule in zip(t.blocks, K.control_rules):
        if block.shape[0] != rule.node_count:
            raise ValueError(
                f"trace block length {block.shape[0]} does not match "
                f"{rule.node_count} control nodes"
            )
    weighted = K.row_weights * t.concatenated  # (m,)
    values = (K.matrix.T @ weighted) / K.col_weights  # (n,)
    return Density(rule=K.antenna_rule, values=values)


def weighted_svd(K: ForwardOperator) -> WeightedSVD:
    """SVD of the operator with respect to the weighted norms (cached).

    Factorizes B = W^(1/2) A w^(-1/2); B's singular values are the
    operator's between the weighted spaces, and the compactness of the
    underlying integral operator shows up as their rapid decay.
    """
    if K._svd is not None:
        return K._svd
    sqrt_row = np.sqrt(K.row_weights)
    sqrt_col = np.sqrt(K.col_weights)
    b = (sqrt_row[:, None] * K.matrix) / sqrt_col[None, :]
    try:
        u, sigma, vt = np.linalg.svd(b, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"weighted SVD failed to converge: {exc}") from exc
    K._svd = WeightedSVD(sigma=sigma, u=u, vt=vt, sqrt_row_w=sqrt_row, sqrt_col_w=sqrt_col)
    return K._svd


def dump_operator(K: ForwardOperator, path) -> None:
    """Binary dump: int64 header (magic, version, rows, cols, n_sigma),
    then the matrix row-major as float64, then the singular values."""
    svd = weighted_svd(K)
    m, n = K.matrix.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<5q", _DUMP_MAGIC, 1, m, n, svd.sigma.shape[0]))
        fh.write(np.ascontiguousarray(K.matrix, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(svd.sigma, dtype="<f8").tobytes())


def load_operator_dump(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back a dump written by :func:`dump_operator`: (matrix, sigma)."""
    with open(path, "rb") as fh:
        magic, version, m, n, k = struct.unpack("<5q", fh.read(40))
        if magic != _DUMP_MAGIC or version != 1:
            raise ValueError(f"not a version-1 operator dump: {path}")
        matrix = np.frombuffer(fh.read(8 * m * n), dtype="<f8").reshape(m, n)
        sigma = np.frombuffer(fh.read(8 * k), dtype="<f8")
    return matrix.copy(), sigma.copy()
