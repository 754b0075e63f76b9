"""Uniform P1 finite elements on (0, 1) with homogeneous Dirichlet data.

Nodal vectors are plain numpy arrays whose last axis runs over the interior
nodes; any leading axes are treated as a batch (e.g. Monte-Carlo samples).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import lapack


@dataclass(frozen=True)
class Grid1D:
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError(f"n_cells must be an integer >= 2, got {self.n_cells!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def n_interior(self) -> int:
        return self.n_cells - 1

    @property
    def nodes(self) -> np.ndarray:
        # i / n_cells rather than i * h: exact for every power-of-two grid
        return np.arange(1, self.n_cells) / self.n_cells


@dataclass(frozen=True, eq=False)
class TriDiag:
    """Tridiagonal matrix stored by its three diagonals."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        for name in ("sub", "diag", "sup"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.diag.shape[0]
        if self.diag.ndim != 1 or n < 1:
            raise ValueError("diag must be a non-empty 1D array")
        if self.sub.shape != (n - 1,) or self.sup.shape != (n - 1,):
            raise ValueError(
                f"off-diagonals must have length {n - 1}, got "
                f"{self.sub.shape} and {self.sup.shape}"
            )

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.sub, self.sup))

    def __add__(self, other: TriDiag) -> TriDiag:
        if not isinstance(other, TriDiag):
            return NotImplemented
        self._check_dim(other.n)
        return TriDiag(self.sub + other.sub, self.diag + other.diag, self.sup + other.sup)

    def __mul__(self, c: float) -> TriDiag:
        return TriDiag(c * self.sub, c * self.diag, c * self.sup)

    __rmul__ = __mul__

    def _check_dim(self, n: int) -> None:
        if n != self.n:
            raise ValueError(f"dimension mismatch: matrix is {self.n}x{self.n}, vector has {n}")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_dim(x.shape[-1])
        y = self.diag * x
        y[..., :-1] += self.sup * x[..., 1:]
        y[..., 1:] += self.sub * x[..., :-1]
        return y

    def quad(self, x: np.ndarray) -> np.ndarray:
        """x^T A x over the last axis."""
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,...i->...", x, self.matvec(x))

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def factor(self) -> FactoredTriDiag:
        return FactoredTriDiag(self)


_MIN_LAPACK = 3


@dataclass(frozen=True, eq=False)
class FactoredTriDiag:
    """LU factorization (partial pivoting) of a tridiagonal matrix.

    Factor once, then call :meth:`solve` as often as needed; each solve is
    O(n) per right-hand side. The object is read-only after construction so
    concurrent solves against one factorization are safe.
    """

    matrix: TriDiag
    _lu: tuple = field(init=False, repr=False)

    def __post_init__(self):
        A = self.matrix
        sub, diag, sup = A.sub, A.diag, A.sup
        pad = max(0, _MIN_LAPACK - A.n)
        if pad:
            # the LAPACK wrapper rejects n < 3; append a decoupled identity block
            sub, sup = np.r_[sub, np.zeros(pad)], np.r_[sup, np.zeros(pad)]
            diag = np.r_[diag, np.ones(pad)]
        dl, d, du, du2, ipiv, info = lapack.dgttrf(sub, diag, sup)
        if info > 0:
            raise np.linalg.LinAlgError(
                f"tridiagonal matrix is singular: zero pivot at row {info - 1}"
            )
        if info < 0:  # pragma: no cover - argument error inside LAPACK
            raise ValueError(f"dgttrf rejected argument {-info}")
        lu = (dl, d, du, du2, ipiv)
        for arr in lu:
            arr.setflags(write=False)
        object.__setattr__(self, "_lu", lu)

    @property
    def n(self) -> int:
        return self.matrix.n

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        self.matrix._check_dim(rhs.shape[-1])
        batch_shape = rhs.shape[:-1]
        # LAPACK wants one right-hand side per column
        b = rhs.reshape(-1, self.n).T
        if self.n < _MIN_LAPACK:
            b = np.vstack([b, np.zeros((_MIN_LAPACK - self.n, b.shape[1]))])
        x, info = lapack.dgttrs(*self._lu, np.asfortranarray(b))
        if info != 0:  # pragma: no cover - only on malformed arguments
            raise ValueError(f"dgttrs rejected argument {-info}")
        return x[: self.n].T.reshape(*batch_shape, self.n)


def assemble_mass(grid: Grid1D) -> TriDiag:
    """Consistent (unlumped) P1 mass matrix on the interior nodes."""
    n, h = grid.n_interior, grid.h
    off = np.full(n - 1, h / 6.0)
    return TriDiag(off, np.full(n, 4.0 * h / 6.0), off)


def assemble_stiffness(grid: Grid1D) -> TriDiag:
    n, h = grid.n_interior, grid.h
    off = np.full(n - 1, -1.0 / h)
    return TriDiag(off, np.full(n, 2.0 / h), off)


def solve_tridiag(A: TriDiag, rhs: np.ndarray) -> np.ndarray:
    return A.factor().solve(rhs)


def l2_norm(u: np.ndarray, M: TriDiag) -> np.ndarray | float:
    return np.sqrt(np.maximum(M.quad(u), 0.0))


def h1_seminorm(u: np.ndarray, K: TriDiag) -> np.ndarray | float:
    return np.sqrt(np.maximum(K.quad(u), 0.0))


def interpolate(f: Callable[[np.ndarray], np.ndarray], grid: Grid1D) -> np.ndarray:
    """Nodal interpolant of ``f`` (evaluated vectorised on the interior nodes)."""
    x = grid.nodes
    values = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(f"non-finite value {values[i]} at node {i + 1} (x={x[i]:.17g})")
    return values


def discrete_laplacian(u: np.ndarray, mass: FactoredTriDiag, K: TriDiag) -> np.ndarray:
    """-M^{-1} K u, the Galerkin Laplacian of a P1 field."""
    return -mass.solve(K.matvec(u))
