"""
Kernel algebra on a weighted grid.

A grid is a finite set of cells with masses μ_i > 0; a kernel of order q
is a dense tensor over cell multi-indices. Symmetric kernels are the
integrands of multiple Wiener integrals; products of integrals expand
through contractions (the product formula).
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import CapExceeded, InvalidParams, OrderMismatch, RankError

SYMMETRY_ATOL = 1e-12


@dataclass(frozen=True)
class ChaosCaps:
    """Size caps for dense kernels and sampling."""

    max_cells: int = 64
    max_order: int = 6
    max_entries: int = 2 ** 22

    def check(self, n: int, q: int) -> None:
        if n > self.max_cells:
            raise CapExceeded(f"grid has {n} cells, cap is {self.max_cells}")
        if q > self.max_order:
            raise CapExceeded(f"order {q} exceeds cap {self.max_order}")
        if n ** q > self.max_entries:
            raise CapExceeded(f"dense kernel {n}^{q} = {n ** q} entries exceeds cap {self.max_entries}")

    def to_dict(self) -> Dict[str, int]:
        return {"max_cells": self.max_cells, "max_order": self.max_order, "max_entries": self.max_entries}


DEFAULT_CAPS = ChaosCaps()


@dataclass(frozen=True)
class GridMeasure:
    """Cells with positive masses; the discretized control measure."""

    masses: Tuple[float, ...]
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.masses) == 0:
            raise InvalidParams("grid needs at least one cell")
        if any(not (m > 0 and math.isfinite(m)) for m in self.masses):
            raise InvalidParams("cell masses must be positive and finite")
        if self.labels and len(self.labels) != len(self.masses):
            raise InvalidParams("labels and masses differ in length")

    @classmethod
    def uniform(cls, n: int, mass: float = 1.0) -> "GridMeasure":
        return cls(tuple([float(mass)] * n), tuple(f"c{i}" for i in range(n)))

    @property
    def dimension(self) -> int:
        return len(self.masses)

    @property
    def mu(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=float)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.mu))


def _outer_weights(mu: np.ndarray, q: int, power: float = 1.0) -> np.ndarray:
    """Π_j μ_{i_j}^power as an order-q tensor."""
    w = np.ones(())
    for _ in range(q):
        w = np.multiply.outer(w, mu ** power)
    return w


class Kernel:
    """
    Dense order-q kernel over a grid, not necessarily symmetric.

    Contractions return plain kernels; symmetrize() turns any kernel
    into a SymmetricKernel.
    """

    def __init__(self, coeffs: np.ndarray, grid: GridMeasure):
        coeffs = np.asarray(coeffs, dtype=float)
        n = grid.dimension
        if any(dim != n for dim in coeffs.shape):
            raise OrderMismatch(f"tensor shape {coeffs.shape} does not match grid of {n} cells")
        self.coeffs = coeffs
        self.grid = grid

    @property
    def order(self) -> int:
        return self.coeffs.ndim

    def norm(self) -> float:
        """‖f‖ with respect to μ^{⊗q}."""
        return math.sqrt(self.norm_sq())

    def norm_sq(self) -> float:
        return float(np.sum(self.coeffs ** 2 * _outer_weights(self.grid.mu, self.order)))

    def inner(self, other: "Kernel") -> float:
        if other.order != self.order:
            raise OrderMismatch(f"inner product of orders {self.order} and {other.order}")
        return float(np.sum(self.coeffs * other.coeffs * _outer_weights(self.grid.mu, self.order)))

    def weighted(self) -> np.ndarray:
        """f · Π √μ: coefficients in the orthonormal cell basis."""
        return self.coeffs * _outer_weights(self.grid.mu, self.order, 0.5)

    def is_symmetric(self, atol: float = SYMMETRY_ATOL) -> bool:
        return all(
            np.allclose(self.coeffs, np.transpose(self.coeffs, perm), atol=atol, rtol=0)
            for perm in itertools.permutations(range(self.order))
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(order={self.order}, cells={self.grid.dimension})"


class SymmetricKernel(Kernel):
    """Kernel invariant under index permutations."""

    def __init__(self, coeffs: np.ndarray, grid: GridMeasure, check: bool = True):
        super().__init__(coeffs, grid)
        if check and self.order > 1 and not self.is_symmetric(atol=1e-10 * (1.0 + float(np.max(np.abs(self.coeffs))))):
            raise OrderMismatch("coefficients are not symmetric; use symmetrize()")

    def scaled(self, c: float) -> "SymmetricKernel":
        return SymmetricKernel(c * self.coeffs, self.grid, check=False)

    def section(self, cell: int) -> "SymmetricKernel":
        """f(cell, ·), a symmetric kernel of order q − 1."""
        if self.order == 0:
            raise RankError("order-0 kernel has no sections")
        return SymmetricKernel(self.coeffs[cell], self.grid, check=False)

    @cached_property
    def canonical(self) -> Dict[str, np.ndarray]:
        """
        Nonzero entries over sorted multi-indices.

        Returns arrays: index (K, q) sorted tuples, value (K,),
        multiplicity factor q!/Π m_j! (K,), cells/mults (K, q) listing
        each distinct cell with its multiplicity, padded with cell n
        and multiplicity 0.
        """
        q, n = self.order, self.grid.dimension
        if q == 0:
            empty = np.zeros((1, 0), dtype=int)
            return {
                "index": empty,
                "value": np.array([float(self.coeffs)]),
                "factor": np.ones(1),
                "cells": empty,
                "mults": empty,
            }
        idx = np.array(list(itertools.combinations_with_replacement(range(n), q)), dtype=int)
        values = self.coeffs[tuple(idx.T)]
        keep = values != 0.0
        idx, values = idx[keep], values[keep]
        cells = np.full(idx.shape, n, dtype=int)
        mults = np.zeros(idx.shape, dtype=int)
        factor = np.empty(len(idx))
        q_fact = math.factorial(q)
        for row, tup in enumerate(idx):
            distinct, counts = np.unique(tup, return_counts=True)
            cells[row, : len(distinct)] = distinct
            mults[row, : len(distinct)] = counts
            factor[row] = q_fact / np.prod([math.factorial(int(c)) for c in counts])
        return {"index": idx, "value": values, "factor": factor, "cells": cells, "mults": mults}

    def to_records(self) -> List[Dict[str, Any]]:
        """Flat records (q, index, coefficient) over the canonical entries."""
        canon = self.canonical
        return [
            {"q": self.order, "index": [int(i) for i in tup], "coefficient": float(v)}
            for tup, v in zip(canon["index"], canon["value"])
        ]

    @classmethod
    def from_records(cls, records: Iterable[Dict[str, Any]], grid: GridMeasure, q: int) -> "SymmetricKernel":
        n = grid.dimension
        coeffs = np.zeros((n,) * q)
        for rec in records:
            if int(rec["q"]) != q:
                raise OrderMismatch(f"record of order {rec['q']} in kernel of order {q}")
            index = tuple(int(i) for i in rec["index"])
            for perm in set(itertools.permutations(index)):
                coeffs[perm] = float(rec["coefficient"])
        return cls(coeffs, grid, check=False)

    @classmethod
    def constant(cls, value: float, grid: GridMeasure) -> "SymmetricKernel":
        return cls(np.asarray(float(value)), grid, check=False)

    @classmethod
    def from_entries(cls, entries: Dict[Tuple[int, ...], float], grid: GridMeasure, q: int) -> "SymmetricKernel":
        """Kernel with f(σ(index)) = value for every permutation σ of each given index."""
        return cls.from_records(
            ({"q": q, "index": list(k), "coefficient": v} for k, v in entries.items()), grid, q
        )


def symmetrize(tensor, q: int, grid: Optional[GridMeasure] = None) -> SymmetricKernel:
    """
    Average a tensor over all q! index permutations.

    Args:
        tensor: Kernel or ndarray of order q
        q: Expected order
        grid: Required when tensor is a bare ndarray

    Raises:
        OrderMismatch: If the tensor order differs from q
    """
    if isinstance(tensor, Kernel):
        grid = tensor.grid
        coeffs = tensor.coeffs
    else:
        coeffs = np.asarray(tensor, dtype=float)
        if grid is None:
            raise InvalidParams("symmetrize() of a bare array needs a grid")
    if coeffs.ndim != q:
        raise OrderMismatch(f"tensor of order {coeffs.ndim} where order {q} was declared")
    if q <= 1:
        return SymmetricKernel(coeffs.copy(), grid, check=False)
    perms = list(itertools.permutations(range(q)))
    total = np.zeros_like(coeffs)
    for perm in perms:
        total += np.transpose(coeffs, perm)
    return SymmetricKernel(total / len(perms), grid, check=False)


def contract(f: Kernel, g: Kernel, r: int) -> Kernel:
    """
    f ⊗_r g: integrate out r variables of f (its last r) against r of g
    (its first r) with weights μ^{⊗r}. Result order p + q − 2r.

    Raises:
        RankError: If r is outside 0..min(p, q)
    """
    p, q = f.order, g.order
    if not 0 <= r <= min(p, q):
        raise RankError(f"contraction index r={r} outside 0..{min(p, q)}")
    if r == 0:
        return Kernel(np.multiply.outer(f.coeffs, g.coeffs), f.grid)
    weighted = f.coeffs * _outer_weights(f.grid.mu, r).reshape((1,) * (p - r) + (f.grid.dimension,) * r)
    out = np.tensordot(weighted, g.coeffs, axes=(list(range(p - r, p)), list(range(r))))
    return Kernel(out, f.grid)


def contraction_norm(f: Kernel, r: int) -> float:
    """
    ‖f ⊗_r f‖ for symmetric f via the Gram matrix of B, the weighted
    tensor reshaped to (n^{q−r}, n^r). ‖BBᵀ‖_F = ‖BᵀB‖_F, so the smaller
    of the two is formed.
    """
    q, n = f.order, f.grid.dimension
    if not 0 <= r <= q:
        raise RankError(f"contraction index r={r} outside 0..{q}")
    B = f.weighted().reshape(n ** (q - r), n ** r)
    gram = B.T @ B if B.shape[0] > B.shape[1] else B @ B.T
    return float(np.linalg.norm(gram))


def contraction_norms(f: Kernel, q: Optional[int] = None) -> Dict[int, float]:
    """{r: ‖f ⊗_r f‖ for r = 1..q−1}."""
    q = f.order if q is None else q
    if q != f.order:
        raise OrderMismatch(f"kernel order {f.order} declared as {q}")
    return {r: contraction_norm(f, r) for r in range(1, q)}


class ChaosVector:
    """Finite chaos expansion F = Σ_q I_q(f_q) on one grid."""

    def __init__(self, kernels: Dict[int, SymmetricKernel], grid: GridMeasure):
        for q, k in kernels.items():
            if k.order != q:
                raise OrderMismatch(f"kernel of order {k.order} stored under chaos {q}")
        self.kernels = dict(sorted(kernels.items()))
        self.grid = grid

    @classmethod
    def single(cls, kernel: SymmetricKernel) -> "ChaosVector":
        return cls({kernel.order: kernel}, kernel.grid)

    @property
    def orders(self) -> List[int]:
        return [q for q in self.kernels]

    @property
    def max_order(self) -> int:
        return max(self.kernels) if self.kernels else 0

    @property
    def mean(self) -> float:
        k0 = self.kernels.get(0)
        return float(k0.coeffs) if k0 is not None else 0.0

    def second_moment(self) -> float:
        """E[F²] = Σ q! ‖f_q‖²."""
        return sum(math.factorial(q) * k.norm_sq() for q, k in self.kernels.items())

    def variance(self) -> float:
        return self.second_moment() - self.mean ** 2

    def single_order(self) -> Optional[int]:
        """The chaos order when F lives in exactly one chaos, else None."""
        orders = [q for q, k in self.kernels.items() if np.any(k.coeffs != 0)]
        return orders[0] if len(orders) == 1 else None

    def map_kernels(self, fn) -> "ChaosVector":
        return ChaosVector({q: fn(q, k) for q, k in self.kernels.items()}, self.grid)

    def __add__(self, other: "ChaosVector") -> "ChaosVector":
        kernels = dict(self.kernels)
        for q, k in other.kernels.items():
            kernels[q] = SymmetricKernel(kernels[q].coeffs + k.coeffs, self.grid, check=False) if q in kernels else k
        return ChaosVector(kernels, self.grid)

    def scaled(self, c: float) -> "ChaosVector":
        return self.map_kernels(lambda q, k: k.scaled(c))

    def to_records(self) -> List[Dict[str, Any]]:
        records = []
        for k in self.kernels.values():
            records.extend(k.to_records())
        return records

    def __repr__(self) -> str:
        return f"ChaosVector(orders={self.orders}, cells={self.grid.dimension})"


def product_expand(q: int, f: SymmetricKernel, p: int, g: SymmetricKernel) -> ChaosVector:
    """
    I_q(f)·I_p(g) = Σ_{r=0}^{min(p,q)} r! C(p,r) C(q,r) I_{p+q−2r}(f ⊗̃_r g).

    Raises:
        RankError: If the declared orders do not match the kernels
    """
    if f.order != q or g.order != p:
        raise RankError(f"declared orders ({q}, {p}) differ from kernel orders ({f.order}, {g.order})")
    kernels: Dict[int, SymmetricKernel] = {}
    for r in range(min(p, q) + 1):
        coef = math.factorial(r) * math.comb(p, r) * math.comb(q, r)
        order = p + q - 2 * r
        term = symmetrize(contract(f, g, r), order)
        kernels[order] = term.scaled(coef)
    return ChaosVector(kernels, f.grid)


def random_kernel(rng: np.random.Generator, grid: GridMeasure, q: int, scale: float = 1.0) -> SymmetricKernel:
    """Symmetrized Gaussian random kernel."""
    raw = rng.normal(0.0, scale, (grid.dimension,) * q)
    return symmetrize(raw, q, grid)


def unit_cell_kernel(grid: GridMeasure, cell: int, q: int) -> SymmetricKernel:
    """e^{⊗q} for the normalized indicator e = 1_cell / √μ_cell."""
    coeffs = np.zeros((grid.dimension,) * q)
    coeffs[(cell,) * q] = grid.masses[cell] ** (-q / 2.0)
    return SymmetricKernel(coeffs, grid, check=False)


def diagonal_kernel(grid: GridMeasure, weights: Sequence[float]) -> SymmetricKernel:
    """Σ_i w_i e_i⊗e_i with e_i = 1_i/√μ_i."""
    coeffs = np.diag(np.asarray(weights, dtype=float) / grid.mu)
    return SymmetricKernel(coeffs, grid, check=False)
