"""Sparse solvers for the block saddle-point systems produced by the stepper.

The per-step system couples displacement, the two transformed scalars and
three rigid-motion multiplier rows. The cross-coupling between the scalar
rows makes the monolithic matrix structurally unsymmetric, so the primary
path is a sparse LU factorization; CG is provided for SPD sub-solves
(mass projections, diffusion-only diagnostics) with optional deflation of
the constant kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "BlockSystem",
    "SingularSystemError",
    "IterationLimitError",
    "Factorization",
    "solve_direct",
    "factorize",
    "solve_cg",
]


class SingularSystemError(RuntimeError):
    """The assembled system is singular; carries a hint naming the likely
    missing constraint (e.g. absent rigid-motion multiplier rows)."""

    def __init__(self, message: str, hint: str | None = None):
        if hint:
            message = f"{message} ({hint})"
        super().__init__(message)
        self.hint = hint


class IterationLimitError(RuntimeError):
    """Iterative solve did not reach the tolerance; carries the residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message}: final relative residual {residual:.3e}")
        self.residual = residual


@dataclass
class BlockSystem:
    """Block linear system with named rows/columns.

    block_names orders the unknown groups; sizes gives each group's length.
    blocks maps (row_name, col_name) to a sparse matrix or dense 2D array;
    missing pairs are zero. rhs maps row names to load vectors (missing =
    zero). constraint_hint documents which constraint rows keep the system
    nonsingular, and is echoed in singularity errors.
    """

    block_names: list[str]
    sizes: dict[str, int]
    blocks: dict[tuple[str, str], object] = field(default_factory=dict)
    rhs: dict[str, np.ndarray] = field(default_factory=dict)
    constraint_hint: str | None = None

    def set_block(self, row: str, col: str, mat) -> None:
        self._check_shape(row, col, mat)
        self.blocks[(row, col)] = mat

    def set_rhs(self, row: str, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.sizes[row],):
            raise ValueError(f"rhs for row {row!r} has length {vec.shape}, expected {self.sizes[row]}")
        self.rhs[row] = vec

    def _check_shape(self, row, col, mat):
        for name in (row, col):
            if name not in self.sizes:
                raise KeyError(f"unknown block name {name!r}")
        shape = mat.shape
        if shape != (self.sizes[row], self.sizes[col]):
            raise ValueError(
                f"block ({row}, {col}) has shape {shape}, expected "
                f"({self.sizes[row]}, {self.sizes[col]})"
            )

    @property
    def ndof(self) -> int:
        return sum(self.sizes[n] for n in self.block_names)

    def matrix(self) -> sp.csr_matrix:
        grid = []
        for r in self.block_names:
            row = []
            for c in self.block_names:
                blk = self.blocks.get((r, c))
                if blk is not None and not sp.issparse(blk):
                    blk = sp.csr_matrix(np.atleast_2d(np.asarray(blk, dtype=float)))
                row.append(blk)
            grid.append(row)
        return sp.bmat(grid, format="csr")

    def rhs_vector(self) -> np.ndarray:
        parts = [self.rhs.get(n, np.zeros(self.sizes[n])) for n in self.block_names]
        return np.concatenate(parts)

    def split(self, x: np.ndarray) -> dict[str, np.ndarray]:
        out = {}
        offset = 0
        for n in self.block_names:
            out[n] = x[offset : offset + self.sizes[n]]
            offset += self.sizes[n]
        return out


class Factorization:
    """Cached sparse LU of a block system's matrix; reusable across solves."""

    def __init__(self, system: BlockSystem):
        self.system = system
        A = system.matrix().tocsc()
        self._A = A
        self.last_residual = np.nan
        try:
            self._lu = spla.splu(A)
        except RuntimeError as exc:
            raise SingularSystemError(
                f"factorization failed: {exc}", hint=system.constraint_hint
            ) from exc
        # A singular matrix can still factor: rounding turns exact zero pivots
        # into tiny ones, and a kernel component in the solution leaves no
        # residual trace. Catch it at the pivots instead.
        piv = np.abs(self._lu.U.diagonal())
        if piv.min() <= 1e-12 * piv.max():
            raise SingularSystemError(
                f"matrix is numerically singular: pivot ratio {piv.min() / piv.max():.3e}",
                hint=system.constraint_hint,
            )

    def solve(self, b: np.ndarray | None = None) -> dict[str, np.ndarray]:
        if b is None:
            b = self.system.rhs_vector()
        x = self._lu.solve(b)
        bnorm = float(np.linalg.norm(b))
        res = float(np.linalg.norm(self._A @ x - b)) / max(bnorm, 1e-300)
        self.last_residual = res
        if not np.all(np.isfinite(x)) or (bnorm > 0 and res > 1e-11):
            raise SingularSystemError(
                f"direct solve residual {res:.3e} exceeds 1e-11 or is non-finite",
                hint=self.system.constraint_hint,
            )
        return self.system.split(x)


def factorize(system: BlockSystem) -> Factorization:
    """Factor once; call .solve(b) repeatedly with new right sides."""
    return Factorization(system)


def solve_direct(system: BlockSystem) -> dict[str, np.ndarray]:
    """One-shot sparse LU solve with a relative-residual guarantee of 1e-11."""
    return Factorization(system).solve()


def solve_cg(M, b, tol: float = 1e-12, maxit: int = 5000, deflate_constants: bool = False):
    """Conjugate gradients for an SPD matrix.

    With deflate_constants=True the constant vector is treated as a known
    kernel: the right side is orthogonalized against it and the returned
    solution has zero mean (for semidefinite operators like pure-Neumann
    diffusion). Raises IterationLimitError on non-convergence.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if deflate_constants:
        ones = np.ones(n)
        b = b - ones * (b @ ones) / n
    x, info = spla.cg(M, b, rtol=tol, atol=0.0, maxiter=maxit)
    if deflate_constants:
        ones = np.ones(n)
        x = x - ones * (x @ ones) / n
    res = float(np.linalg.norm(M @ x - b)) / max(float(np.linalg.norm(b)), 1e-300)
    if info != 0 and res > tol:
        raise IterationLimitError(f"CG did not converge within {maxit} iterations", res)
    return x
