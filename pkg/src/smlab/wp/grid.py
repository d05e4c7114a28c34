"""
Wiener-Poisson grids and kernels.

A LevyGrid crosses time cells with a Brownian component (mass σ²Δt) and
finitely many jump atoms x_j with intensity ν_j (mass x_j²Δtν_j). Kernels
are step functions on those cells, so the Gaussian kernel algebra applies
unchanged except for contractions that share variables: a shared
variable carries the jump size x of its cell, which vanishes on
Brownian cells.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..chaos.kernels import ChaosVector, GridMeasure, Kernel, SymmetricKernel, contraction_norm, symmetrize
from ..errors import CapExceeded, InvalidParams, RankError

LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class WPCaps:
    """Size caps for Wiener-Poisson grids and sampling."""

    max_time_cells: int = 64
    max_atoms: int = 4
    max_order: int = 4
    max_entries: int = 2 ** 22

    def check_grid(self, grid: "LevyGrid") -> None:
        if len(grid.time_cells) > self.max_time_cells:
            raise CapExceeded(f"{len(grid.time_cells)} time cells exceed cap {self.max_time_cells}")
        if len(grid.jump_atoms) > self.max_atoms:
            raise CapExceeded(f"{len(grid.jump_atoms)} jump atoms exceed cap {self.max_atoms}")

    def check_order(self, grid: "LevyGrid", q: int) -> None:
        if q > self.max_order:
            raise CapExceeded(f"order {q} exceeds cap {self.max_order}")
        if grid.dimension ** q > self.max_entries:
            raise CapExceeded(f"dense kernel {grid.dimension}^{q} exceeds cap {self.max_entries}")

    def to_dict(self) -> Dict[str, int]:
        return {
            "max_time_cells": self.max_time_cells,
            "max_atoms": self.max_atoms,
            "max_order": self.max_order,
            "max_entries": self.max_entries,
        }


DEFAULT_WP_CAPS = WPCaps()


@dataclass(frozen=True)
class LevyGrid:
    """
    Time cells × {Brownian, jump atoms}.

    Cells are ordered time-major; within a time cell the Brownian cell
    (present when σ > 0) comes first, then the atoms in the given order.
    """

    time_cells: Tuple[float, ...]
    jump_atoms: Tuple[Tuple[float, float], ...] = ()
    sigma: float = 0.0

    def __post_init__(self):
        if len(self.time_cells) == 0 or any(not (dt > 0) for dt in self.time_cells):
            raise InvalidParams("time cells must be positive and non-empty")
        if self.sigma < 0:
            raise InvalidParams("sigma must be non-negative")
        for x, nu in self.jump_atoms:
            if x == 0 or not nu > 0:
                raise InvalidParams(f"jump atom ({x}, {nu}) needs x != 0 and nu > 0")
        if self.sigma == 0 and not self.jump_atoms:
            raise InvalidParams("grid needs sigma > 0 or at least one jump atom")

    @classmethod
    def uniform(cls, n_time: int, dt: float = 1.0, sigma: float = 0.0, jump_atoms: Sequence[Tuple[float, float]] = ()):
        return cls(tuple([float(dt)] * n_time), tuple((float(x), float(nu)) for x, nu in jump_atoms), float(sigma))

    @property
    def cells(self) -> List[Dict[str, Any]]:
        """One entry per cell: time index, atom index (None for Brownian), x, mass, intensity."""
        out = []
        for t, dt in enumerate(self.time_cells):
            if self.sigma > 0:
                out.append({"t": t, "atom": None, "x": 0.0, "mass": self.sigma ** 2 * dt, "intensity": None})
            for j, (x, nu) in enumerate(self.jump_atoms):
                out.append({"t": t, "atom": j, "x": x, "mass": x * x * dt * nu, "intensity": nu * dt})
        return out

    @property
    def dimension(self) -> int:
        return len(self.time_cells) * ((1 if self.sigma > 0 else 0) + len(self.jump_atoms))

    @property
    def jumps(self) -> np.ndarray:
        """Jump size per cell (0 on Brownian cells)."""
        return np.array([c["x"] for c in self.cells])

    @property
    def brownian_mask(self) -> np.ndarray:
        return np.array([c["atom"] is None for c in self.cells])

    @property
    def intensities(self) -> np.ndarray:
        """Poisson mean νΔt per cell (NaN on Brownian cells)."""
        return np.array([np.nan if c["intensity"] is None else c["intensity"] for c in self.cells])

    @property
    def measure(self) -> GridMeasure:
        cells = self.cells
        labels = tuple(f"t{c['t']}" + ("B" if c["atom"] is None else f"J{c['atom']}") for c in cells)
        return GridMeasure(tuple(c["mass"] for c in cells), labels)

    def to_record(self) -> Dict[str, Any]:
        return {
            "time_cells": list(self.time_cells),
            "sigma": self.sigma,
            "jump_atoms": [{"x": x, "nu": nu} for x, nu in self.jump_atoms],
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "LevyGrid":
        atoms = tuple((float(a["x"]), float(a["nu"])) for a in record.get("jump_atoms", []))
        return cls(tuple(float(t) for t in record["time_cells"]), atoms, float(record.get("sigma", 0.0)))


class WPKernel(SymmetricKernel):
    """Symmetric step kernel on a LevyGrid."""

    def __init__(self, coeffs: np.ndarray, levy: LevyGrid, check: bool = True):
        super().__init__(coeffs, levy.measure, check=check)
        self.levy = levy

    @classmethod
    def wrap(cls, kernel: Kernel, levy: LevyGrid) -> "WPKernel":
        return cls(kernel.coeffs, levy, check=False)

    def scaled(self, c: float) -> "WPKernel":
        return WPKernel(c * self.coeffs, self.levy, check=False)

    def to_record(self) -> Dict[str, Any]:
        return {"grid": self.levy.to_record(), "q": self.order, "entries": self.to_records()}

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "WPKernel":
        levy = LevyGrid.from_record(record["grid"])
        base = SymmetricKernel.from_records(record["entries"], levy.measure, int(record["q"]))
        return cls(base.coeffs, levy, check=False)


def wp_symmetrize(tensor, q: int, levy: LevyGrid) -> WPKernel:
    coeffs = tensor.coeffs if isinstance(tensor, Kernel) else np.asarray(tensor, dtype=float)
    return WPKernel.wrap(symmetrize(coeffs, q, levy.measure), levy)


def contract_ws(f: SymmetricKernel, g: SymmetricKernel, r: int, s: int, levy: LevyGrid) -> Kernel:
    """
    f ⊗ᵣˢ g: integrate out r variables against μ and share s more.

    Output axes are ordered (shared z, remaining of f, remaining of g);
    each shared variable multiplies by the jump size of its cell.

    Raises:
        RankError: If r > min(q, p) or s > min(q, p) − r
    """
    q, p = f.order, g.order
    if not 0 <= r <= min(q, p) or not 0 <= s <= min(q, p) - r:
        raise RankError(f"(r, s) = ({r}, {s}) invalid for orders ({q}, {p})")
    letters = iter(LETTERS)
    a = [next(letters) for _ in range(q - r - s)]
    z = [next(letters) for _ in range(s)]
    c = [next(letters) for _ in range(r)]
    b = [next(letters) for _ in range(p - r - s)]
    mu = levy.measure.mu
    x = levy.jumps
    subscripts = ["".join(a + z + c), "".join(c + z + b)]
    operands = [f.coeffs, g.coeffs]
    for letter in c:
        subscripts.append(letter)
        operands.append(mu)
    for letter in z:
        subscripts.append(letter)
        operands.append(x)
    expr = ",".join(subscripts) + "->" + "".join(z + a + b)
    return Kernel(np.einsum(expr, *operands), levy.measure)


def product_expand_wp(q: int, f: SymmetricKernel, p: int, g: SymmetricKernel, levy: LevyGrid) -> ChaosVector:
    """
    I_q(f)·I_p(g) = Σ_{r,s} r!·s!·C(p,r)·C(q,r)·C(p−r,s)·C(q−r,s)·I_{q+p−2r−s}(f ⊗̃ᵣˢ g).

    Raises:
        RankError: If the declared orders do not match the kernels
    """
    if f.order != q or g.order != p:
        raise RankError(f"declared orders ({q}, {p}) differ from kernel orders ({f.order}, {g.order})")
    kernels: Dict[int, np.ndarray] = {}
    for r in range(min(p, q) + 1):
        for s in range(min(p, q) - r + 1):
            coef = (
                math.factorial(r) * math.factorial(s)
                * math.comb(p, r) * math.comb(q, r) * math.comb(p - r, s) * math.comb(q - r, s)
            )
            order = q + p - 2 * r - s
            term = symmetrize(contract_ws(f, g, r, s, levy), order).coeffs * coef
            kernels[order] = kernels[order] + term if order in kernels else term
    return ChaosVector({k: WPKernel(v, levy, check=False) for k, v in kernels.items()}, levy.measure)


def dx_norm_wp(f: SymmetricKernel, q: int, levy: LevyGrid) -> ChaosVector:
    """
    ‖DI_q(f)‖² = q² Σ_{r=0}^{q−1} Σ_{s=0}^{q−1−r} r!·s!·C(q−1,r)²·C(q−1−r,s)²
                 · I_{2q−2−2r−s}(f ⊗̃_{r+1}ˢ f).
    """
    kernels: Dict[int, np.ndarray] = {}
    for r in range(q):
        for s in range(q - r):
            coef = q * q * math.factorial(r) * math.factorial(s) * math.comb(q - 1, r) ** 2 * math.comb(q - 1 - r, s) ** 2
            order = 2 * q - 2 - 2 * r - s
            term = symmetrize(contract_ws(f, f, r + 1, s, levy), order).coeffs * coef
            kernels[order] = kernels[order] + term if order in kernels else term
    return ChaosVector({k: WPKernel(v, levy, check=False) for k, v in kernels.items()}, levy.measure)


def flagged_pairs(q: int) -> List[Tuple[int, int]]:
    """(r, s) with r ≤ q − 1 and exactly one of r, s nonzero."""
    return [
        (r, s)
        for r, s in itertools.product(range(q), range(q + 1))
        if r + s <= q and ((s == 0 and r != 0) or (s != 0 and r == 0))
    ]


def contraction_norm_ws(f: SymmetricKernel, r: int, s: int, levy: LevyGrid) -> float:
    """
    ‖f ⊗ᵣˢ f‖ for symmetric f.

    s = 0 is the Gaussian contraction. For r = 0, with W = f·Π√μ reshaped
    to (n^s, n^{q−s}), ‖f ⊗₀ˢ f‖² = Σ_z Π(x²/μ)_z·(Σ_u W(z, u)²)², so
    neither case forms the contraction itself.

    Raises:
        RankError: If (r, s) is invalid for the order of f
    """
    q, n = f.order, levy.dimension
    if not 0 <= r <= q or not 0 <= s <= q - r:
        raise RankError(f"(r, s) = ({r}, {s}) invalid for order {q}")
    if s == 0:
        return contraction_norm(f, r)
    if r > 0:
        return contract_ws(f, f, r, s, levy).norm()
    rows = np.sum(f.weighted().reshape(n ** s, n ** (q - s)) ** 2, axis=1)
    ratio = levy.jumps ** 2 / levy.measure.mu
    weight = ratio
    for _ in range(s - 1):
        weight = np.multiply.outer(weight, ratio)
    return math.sqrt(float(np.sum(weight.ravel() * rows ** 2)))


def contraction_norms_wp(f: SymmetricKernel, levy: LevyGrid) -> Dict[str, float]:
    """‖f ⊗ᵣˢ f‖ for every flagged (r, s)."""
    return {f"r{r}s{s}": contraction_norm_ws(f, r, s, levy) for r, s in flagged_pairs(f.order)}
