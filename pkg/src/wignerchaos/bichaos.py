"""Bi-integral expansions and the sharp product.

A BiChaosElement is a finite sum of Wigner bi-integrals I_a (x) I_b(w),
stored as a map split (a, b) -> SplitKernel, including the scalar (0, 0)
slot.  The sharp product of the algebra tensored with its opposite,
(A (x) B) # (C (x) D) = AC (x) DB, acts on kernels through the biproduct
formula

    I_{n1} (x) I_{m1}(f) # I_{n2} (x) I_{m2}(g)
      = sum_{p=0}^{n1^n2} sum_{r=0}^{m1^m2} I (x) I (f bicontract_{p,r} g),

and the bisometry makes the squared bi-norm a plain sum of squared kernel
norms over splits.  phi (x) phi of |X|^2 is always computed through that
norm; the expansion X # X* route exists in the tests as a cross-check.
phi (x) phi of |X| itself (operator absolute value) is not representable
here, which is why downstream bounds go through Cauchy-Schwarz.
"""

from __future__ import annotations

import numpy as np

from .grid_kernel import (
    GridSpec,
    Kernel,
    SplitKernel,
    adjoint_split,
    bicontract,
    constant_kernel,
    inner,
    kernel_from_json,
    kernel_to_json,
)
from .chaos import PRUNE_TOL, ChaosElement

__all__ = [
    "BiChaosElement",
    "adjoint",
    "bichaos_from_json",
    "bichaos_to_json",
    "bitrace",
    "from_split_kernel",
    "norm2",
    "one_tensor_one",
    "sharp_multiply",
    "tensor",
]


class BiChaosElement:
    """Finite sum of bi-integrals, one split kernel per leg split (a, b)."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: GridSpec, coeffs: dict[tuple[int, int], SplitKernel]):
        pruned = {}
        for split, w in sorted(coeffs.items()):
            if w.split != split:
                raise ValueError(f"kernel split {w.split} stored at {split}")
            if w.kernel.grid != grid:
                raise ValueError("all kernels must share the element's grid")
            data = w.kernel.data
            m = abs(complex(data)) if w.order == 0 else float(np.max(np.abs(data)))
            if m >= PRUNE_TOL:
                pruned[split] = w
        self.grid = grid
        self.coeffs = pruned

    def __setattr__(self, name, value):
        if hasattr(self, "coeffs"):
            raise AttributeError("BiChaosElement is immutable")
        object.__setattr__(self, name, value)

    def __repr__(self):
        return f"BiChaosElement(splits={sorted(self.coeffs)})"

    @property
    def splits(self):
        return tuple(sorted(self.coeffs))

    def __add__(self, other):
        if not isinstance(other, BiChaosElement):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        out = dict(self.coeffs)
        for split, w in other.coeffs.items():
            if split in out:
                out[split] = SplitKernel(out[split].kernel + w.kernel, split)
            else:
                out[split] = w
        return BiChaosElement(self.grid, out)

    def __sub__(self, other):
        if not isinstance(other, BiChaosElement):
            return NotImplemented
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if isinstance(scalar, BiChaosElement):
            return NotImplemented
        return BiChaosElement(
            self.grid,
            {s: SplitKernel(w.kernel * scalar, s) for s, w in self.coeffs.items()},
        )

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self


def from_split_kernel(w: SplitKernel) -> BiChaosElement:
    return BiChaosElement(w.kernel.grid, {w.split: w})


def one_tensor_one(grid: GridSpec) -> BiChaosElement:
    """The unit 1 (x) 1."""
    w = SplitKernel(constant_kernel(grid, 1.0), (0, 0))
    return BiChaosElement(grid, {(0, 0): w})


def tensor(A: ChaosElement, B: ChaosElement) -> BiChaosElement:
    """Separable element A (x) B from two chaos expansions."""
    if A.grid != B.grid:
        raise ValueError("grid mismatch")
    out: dict[tuple[int, int], SplitKernel] = {}
    for a, f in A.coeffs.items():
        for b, g in B.coeffs.items():
            prod = np.tensordot(f.data, g.data, axes=0)
            w = SplitKernel(Kernel(A.grid, a + b, prod), (a, b))
            key = (a, b)
            out[key] = SplitKernel(out[key].kernel + w.kernel, key) if key in out else w
    return BiChaosElement(A.grid, out)


def sharp_multiply(X: BiChaosElement, Y: BiChaosElement) -> BiChaosElement:
    """Bilinear extension of the biproduct formula."""
    if X.grid != Y.grid:
        raise ValueError("grid mismatch")
    out: dict[tuple[int, int], SplitKernel] = {}
    for (n1, m1), w in X.coeffs.items():
        for (n2, m2), v in Y.coeffs.items():
            for p in range(min(n1, n2) + 1):
                for r in range(min(m1, m2) + 1):
                    term = bicontract(w, v, p, r)
                    key = term.split
                    if key in out:
                        out[key] = SplitKernel(out[key].kernel + term.kernel, key)
                    else:
                        out[key] = term
    return BiChaosElement(X.grid, out)


def adjoint(X: BiChaosElement) -> BiChaosElement:
    """Kernel-wise blockwise adjoint (I_a (x) I_b(w))* = I_a (x) I_b(w*)."""
    return BiChaosElement(
        X.grid, {s: adjoint_split(w) for s, w in X.coeffs.items()}
    )


def bitrace(X: BiChaosElement) -> complex:
    """phi (x) phi (X): the (0, 0) coefficient."""
    w = X.coeffs.get((0, 0))
    return complex(w.kernel.data) if w is not None else 0.0 + 0.0j


def norm2(X: BiChaosElement) -> float:
    """Squared bi-norm phi (x) phi (X X*) via the bisometry.

    Bi-integrals of distinct splits are orthogonal and each contributes the
    squared L2 norm of its kernel, so no expansion of X X* is needed.
    """
    total = 0.0
    for w in X.coeffs.values():
        total += inner(w.kernel, w.kernel).real
    return total


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def bichaos_to_json(X: BiChaosElement) -> dict:
    return {
        f"{a},{b}": kernel_to_json(w.kernel) for (a, b), w in X.coeffs.items()
    }


def bichaos_from_json(obj: dict) -> BiChaosElement:
    coeffs = {}
    for key, rec in obj.items():
        a, b = (int(part) for part in key.split(","))
        coeffs[(a, b)] = SplitKernel(kernel_from_json(rec), (a, b))
    if not coeffs:
        raise ValueError("empty element record has no grid")
    grid = next(iter(coeffs.values())).kernel.grid
    return BiChaosElement(grid, coeffs)
