"""Dense step-function kernels on a uniform grid.

Kernels of order n are complex step functions on [0, T]^n, constant on the
cells of a uniform N-cell grid, stored as dense ndarrays of shape (N,)*n in
row-major order.  On this class of functions the whole contraction calculus
(adjoints, inner products, nested contractions, bicontractions) closes
exactly: every integral is a finite weighted sum, so algebraic identities
hold up to floating-point rounding only.

Index conventions
-----------------
All operations identify the i-th tensor axis with the i-th argument of the
kernel.  A split kernel of split (a, b) uses the leading a axes as its first
leg and the trailing b axes as its second leg (lexicographic identification
of the tensor product with the flat L2 space).

The contracted blocks are *nested*: in ``contract(f, g, p)`` the last axis
of f pairs with the first axis of g, the second-to-last with the second, and
so on.  ``bicontract`` applies the same nesting at both junctions; see the
docstrings below for the exact axis lists.  These two functions are the only
places where the reversal convention is implemented.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from itertools import permutations

import numpy as np

__all__ = [
    "MemoryCapError",
    "GridSpec",
    "Kernel",
    "SplitKernel",
    "MAX_ENTRIES",
    "RTOL",
    "ATOL",
    "adjoint",
    "adjoint_split",
    "bicontract",
    "cell_indicator",
    "constant_kernel",
    "contract",
    "inner",
    "is_mirror_symmetric",
    "is_symmetric",
    "kernel_from_bytes",
    "kernel_from_json",
    "kernel_to_bytes",
    "kernel_to_json",
    "kernels_close",
    "load_kernel",
    "max_abs_diff",
    "norm",
    "save_kernel",
    "slice_kernel",
    "symmetrize",
    "zero_kernel",
]

# Default comparison tolerances; individual calls may override.
RTOL = 1e-9
ATOL = 1e-12

#: Fail-fast cap on the entry count of any operation result (N^n blowup guard).
MAX_ENTRIES = 2**26


class MemoryCapError(ValueError):
    """An operation would allocate more than MAX_ENTRIES tensor entries."""


def _require_capacity(cells: int, order: int) -> None:
    if cells**order > MAX_ENTRIES:
        raise MemoryCapError(
            f"output of order {order} on {cells} cells has {cells**order} "
            f"entries, exceeding the cap of {MAX_ENTRIES}"
        )


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [0, total_length] with `cells` cells of width h."""

    total_length: float
    cells: int

    def __post_init__(self):
        if self.cells < 1:
            raise ValueError("cells must be >= 1")
        if not (self.total_length > 0 and math.isfinite(self.total_length)):
            raise ValueError("total_length must be positive and finite")

    @property
    def cell_width(self) -> float:
        return self.total_length / self.cells


class Kernel:
    """Order-n step-function kernel: grid, order, and dense complex data.

    Parameters
    ----------
    grid : GridSpec
    order : int
        Number of arguments n >= 0; order 0 is a scalar.
    data : array_like
        N^n complex values, flat or already shaped (N,)*n, row-major.

    The data array is copied and frozen; kernels are immutable values.
    """

    __slots__ = ("grid", "order", "data")

    def __init__(self, grid: GridSpec, order: int, data):
        if order < 0:
            raise ValueError("order must be >= 0")
        arr = np.array(data, dtype=np.complex128, order="C")
        shape = (grid.cells,) * order
        if arr.size != grid.cells**order:
            raise ValueError(
                f"data has {arr.size} entries, expected {grid.cells**order} "
                f"for order {order} on {grid.cells} cells"
            )
        arr = arr.reshape(shape)
        if not np.isfinite(arr).all():
            raise ValueError("kernel entries must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.order = order
        self.data = arr

    def __setattr__(self, name, value):
        if hasattr(self, "data"):
            raise AttributeError("Kernel is immutable")
        object.__setattr__(self, name, value)

    def __repr__(self):
        return (
            f"Kernel(order={self.order}, cells={self.grid.cells}, "
            f"T={self.grid.total_length})"
        )

    # -- value semantics helpers ------------------------------------------

    def _like(self, data) -> "Kernel":
        return Kernel(self.grid, self.order, data)

    def __add__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        _check_same_space(self, other)
        return self._like(self.data + other.data)

    def __sub__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        _check_same_space(self, other)
        return self._like(self.data - other.data)

    def __neg__(self):
        return self._like(-self.data)

    def __mul__(self, scalar):
        if isinstance(scalar, Kernel):
            return NotImplemented
        return self._like(self.data * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def norm(self) -> float:
        return norm(self)


@dataclass(frozen=True)
class SplitKernel:
    """A kernel of order a+b read as an element of the (a, b) tensor leg split."""

    kernel: Kernel
    split: tuple[int, int]

    def __post_init__(self):
        a, b = self.split
        if a < 0 or b < 0 or a + b != self.kernel.order:
            raise ValueError(
                f"split {self.split} inconsistent with kernel order "
                f"{self.kernel.order}"
            )

    @property
    def order(self) -> int:
        return self.kernel.order


def _check_same_grid(f: Kernel, g: Kernel) -> None:
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


def _check_same_space(f: Kernel, g: Kernel) -> None:
    _check_same_grid(f, g)
    if f.order != g.order:
        raise ValueError(f"order mismatch: {f.order} vs {g.order}")


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def zero_kernel(grid: GridSpec, order: int) -> Kernel:
    _require_capacity(grid.cells, order)
    return Kernel(grid, order, np.zeros((grid.cells,) * order, dtype=np.complex128))

def constant_kernel(grid: GridSpec, value: complex) -> Kernel:
    """Order-0 kernel (a scalar)."""
    return Kernel(grid, 0, np.array(value, dtype=np.complex128))

def cell_indicator(grid: GridSpec, cell: int, normalized: bool = False) -> Kernel:
    """Order-1 indicator of one grid cell; normalized=True rescales to norm 1."""
    if not 0 <= cell < grid.cells:
        raise ValueError(f"cell {cell} out of range [0, {grid.cells})")
    data = np.zeros(grid.cells, dtype=np.complex128)
    data[cell] = 1.0 / math.sqrt(grid.cell_width) if normalized else 1.0
    return Kernel(grid, 1, data)


# ---------------------------------------------------------------------------
# adjoints and symmetry predicates
# ---------------------------------------------------------------------------

def adjoint(f: Kernel) -> Kernel:
    """Adjoint kernel f*(t_1, ..., t_n) = conj f(t_n, ..., t_1)."""
    rev = tuple(reversed(range(f.order)))
    return Kernel(f.grid, f.order, np.conj(np.transpose(f.data, rev)))


def adjoint_split(w: SplitKernel) -> SplitKernel:
    """Blockwise adjoint: conjugate, reverse each leg's axes among themselves.

    This is the adjoint of the tensor-product algebra, (g (x) h)* = g* (x) h*:
    each leg is reversed on its own, the legs are not exchanged.
    """
    a, b = w.split
    perm = tuple(reversed(range(a))) + tuple(reversed(range(a, a + b)))
    data = np.conj(np.transpose(w.kernel.data, perm))
    return SplitKernel(Kernel(w.kernel.grid, w.kernel.order, data), w.split)


def max_abs_diff(f: Kernel, g: Kernel) -> float:
    _check_same_space(f, g)
    if f.order == 0:
        return abs(complex(f.data) - complex(g.data))
    return float(np.max(np.abs(f.data - g.data)))


def kernels_close(f: Kernel, g: Kernel, rtol: float = RTOL, atol: float = ATOL) -> bool:
    _check_same_space(f, g)
    return bool(np.allclose(f.data, g.data, rtol=rtol, atol=atol))


def is_mirror_symmetric(f: Kernel, tol: float = 1e-9) -> bool:
    """True iff f equals its adjoint within max-norm tol."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return max_abs_diff(f, adjoint(f)) <= tol


def _permutation_group(order: int):
    # All n! permutations for small orders; adjacent transpositions (which
    # generate the symmetric group) beyond that.
    if order <= 5:
        return list(permutations(range(order)))
    gens = []
    for i in range(order - 1):
        p = list(range(order))
        p[i], p[i + 1] = p[i + 1], p[i]
        gens.append(tuple(p))
    return gens


def is_symmetric(f: Kernel, tol: float = 1e-9) -> bool:
    """True iff f is real (within tol) and invariant under argument permutations."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if f.order == 0:
        return abs(complex(f.data).imag) <= tol
    if float(np.max(np.abs(f.data.imag))) > tol:
        return False
    for perm in _permutation_group(f.order):
        if float(np.max(np.abs(f.data - np.transpose(f.data, perm)))) > tol:
            return False
    return True


def symmetrize(f: Kernel) -> Kernel:
    """Average of f over all argument permutations (real kernels only).

    The imaginary part, if any, is dropped with a warning.  Orders above 8
    are rejected (n! transposes).
    """
    if f.order > 8:
        raise ValueError("symmetrize rejects order > 8 (factorial blowup)")
    data = f.data
    if np.any(data.imag != 0):
        warnings.warn("symmetrize: dropping nonzero imaginary part", stacklevel=2)
    data = data.real.astype(np.complex128)
    if f.order < 2:
        return Kernel(f.grid, f.order, data)
    acc = np.zeros_like(data)
    for perm in permutations(range(f.order)):
        acc += np.transpose(data, perm)
    acc /= math.factorial(f.order)
    return Kernel(f.grid, f.order, acc)


# ---------------------------------------------------------------------------
# inner products and contractions
# ---------------------------------------------------------------------------

def inner(f: Kernel, g: Kernel) -> complex:
    """L2 inner product h^n * sum f * conj(g) (linear in f, antilinear in g)."""
    _check_same_space(f, g)
    # vdot conjugates its first argument
    return f.grid.cell_width**f.order * complex(np.vdot(g.data, f.data))


def norm(f: Kernel) -> float:
    val = inner(f, f).real
    return math.sqrt(val) if val > 0 else 0.0


def contract(f: Kernel, g: Kernel, p: int) -> Kernel:
    """Nested contraction of the middle p variables, with weight h^p.

    The output has order n + m - 2p and arguments (f's leading n-p, then
    g's trailing m-p).  The contracted blocks pair *nested*: f's last axis
    with g's first, f's second-to-last with g's second, and so on, i.e.

        axes of f:  n-p, n-p+1, ..., n-1
        axes of g:  p-1, p-2,   ..., 0

    p = 0 is the plain tensor product.

    Parameters
    ----------
    f, g : Kernel
        Kernels on the same grid, orders n and m.
    p : int
        Number of contracted variables, 0 <= p <= min(n, m).

    Returns
    -------
    Kernel of order n + m - 2p.
    """
    _check_same_grid(f, g)
    n, m = f.order, g.order
    if not 0 <= p <= min(n, m):
        raise ValueError(f"p={p} out of range for orders ({n}, {m})")
    _require_capacity(f.grid.cells, n + m - 2 * p)
    if p == 0:
        out = np.tensordot(f.data, g.data, axes=0)
    else:
        f_axes = list(range(n - p, n))
        g_axes = list(range(p - 1, -1, -1))
        out = np.tensordot(f.data, g.data, axes=(f_axes, g_axes))
        out = out * f.grid.cell_width**p
    return Kernel(f.grid, n + m - 2 * p, out)


def bicontract(f: SplitKernel, g: SplitKernel, p: int, r: int) -> SplitKernel:
    """(p, r)-bicontraction of split kernels, with weight h^(p+r).

    For splits (n1, m1) and (n2, m2) the result has split
    (n1 + n2 - 2p, m1 + m2 - 2r) and its arguments are, in order:

        f's leading n1-p first-leg variables,
        g's free n2-p first-leg variables,
        g's free m2-r second-leg variables,
        f's trailing m1-r second-leg variables.

    Both junctions pair nested, exactly as in ``contract``: on the first
    legs, f's axis n1-1 pairs with g's axis 0 and so on inward; on the
    second legs, f's axis n1 pairs with g's last axis and so on inward.
    The separable case (f1 (x) f2) bicontracted with (g1 (x) g2) therefore
    reduces to (f1 contract_p g1) (x) (g2 contract_r f2).
    """
    _check_same_grid(f.kernel, g.kernel)
    n1, m1 = f.split
    n2, m2 = g.split
    if not 0 <= p <= min(n1, n2):
        raise ValueError(f"p={p} out of range for first legs ({n1}, {n2})")
    if not 0 <= r <= min(m1, m2):
        raise ValueError(f"r={r} out of range for second legs ({m1}, {m2})")
    grid = f.kernel.grid
    out_split = (n1 + n2 - 2 * p, m1 + m2 - 2 * r)
    _require_capacity(grid.cells, sum(out_split))

    f_axes = list(range(n1 - 1, n1 - p - 1, -1)) + list(range(n1, n1 + r))
    g_axes = list(range(p)) + list(range(n2 + m2 - 1, n2 + m2 - r - 1, -1))
    if f_axes:
        out = np.tensordot(f.kernel.data, g.kernel.data, axes=(f_axes, g_axes))
        out = out * grid.cell_width ** (p + r)
    else:
        out = np.tensordot(f.kernel.data, g.kernel.data, axes=0)

    # tensordot orders the free axes (f lead, f trail, g first, g second);
    # move f's trailing block to the end.
    n_lead, n_trail = n1 - p, m1 - r
    n_gfirst, n_gsecond = n2 - p, m2 - r
    src = (
        list(range(n_lead))
        + list(range(n_lead + n_trail, n_lead + n_trail + n_gfirst + n_gsecond))
        + list(range(n_lead, n_lead + n_trail))
    )
    out = np.transpose(out, src)
    return SplitKernel(Kernel(grid, sum(out_split), out), out_split)


def slice_kernel(f: Kernel, k: int, s: int) -> SplitKernel:
    """Fix the k-th argument (1-based) of f at cell s: split (k-1, n-k)."""
    if not 1 <= k <= f.order:
        raise ValueError(f"k={k} out of range [1, {f.order}]")
    if not 0 <= s < f.grid.cells:
        raise ValueError(f"cell {s} out of range [0, {f.grid.cells})")
    data = np.take(f.data, s, axis=k - 1)
    return SplitKernel(Kernel(f.grid, f.order - 1, data), (k - 1, f.order - k))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_MAGIC = b"WGKR"
_VERSION = 1
_HEADER = struct.Struct("<4sHdQQ")


def kernel_to_bytes(f: Kernel) -> bytes:
    """Self-describing binary record; round-trips bit-exactly."""
    header = _HEADER.pack(
        _MAGIC, _VERSION, f.grid.total_length, f.grid.cells, f.order
    )
    payload = np.ascontiguousarray(f.data).astype("<c16", copy=False).tobytes()
    return header + payload


def kernel_from_bytes(buf: bytes) -> Kernel:
    magic, version, total_length, cells, order = _HEADER.unpack_from(buf, 0)
    if magic != _MAGIC:
        raise ValueError("not a kernel record")
    if version != _VERSION:
        raise ValueError(f"unsupported record version {version}")
    grid = GridSpec(total_length, int(cells))
    expected = _HEADER.size + cells**order * 16
    if len(buf) != expected:
        raise ValueError(f"record length {len(buf)}, expected {expected}")
    data = np.frombuffer(buf, dtype="<c16", offset=_HEADER.size)
    return Kernel(grid, int(order), data)


def save_kernel(f: Kernel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(kernel_to_bytes(f))


def load_kernel(path) -> Kernel:
    with open(path, "rb") as fh:
        return kernel_from_bytes(fh.read())


def kernel_to_json(f: Kernel) -> dict:
    """Human-readable JSON form (re/im lists, row-major); for small kernels."""
    flat = np.ascontiguousarray(f.data).reshape(-1)
    return {
        "total_length": f.grid.total_length,
        "cells": f.grid.cells,
        "order": f.order,
        "re": flat.real.tolist(),
        "im": flat.imag.tolist(),
    }


def kernel_from_json(obj: dict) -> Kernel:
    grid = GridSpec(obj["total_length"], obj["cells"])
    data = np.array(obj["re"], dtype=np.float64) + 1j * np.array(
        obj["im"], dtype=np.float64
    )
    return Kernel(grid, obj["order"], data)
