"""Free gradient, number-operator pseudo-inverse, and the quadratic form.

The gradient of a single integral is the biprocess

    grad_s I_n(f) = sum_{k=1}^{n} I_{k-1} (x) I_{n-k} (f sliced at its k-th
    argument, fixed to cell s),

and the object of interest is the quadratic form

    Q = h * sum_s grad_s(N0^{-1} F) # (grad_s F)*,

whose distance from 1 (x) 1 in the bi-norm is the left-hand side of the
fourth-moment bound.  Everything here is computed slice-by-slice with the
general blockwise adjoint, which stays valid for kernels that are only
mirror-symmetric; the closed form over contraction norms is a second,
independent path that requires full symmetry and is used for
cross-validation and for the bound constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import bounds
from .bichaos import (
    BiChaosElement,
    adjoint as bichaos_adjoint,
    from_split_kernel,
    norm2,
    one_tensor_one,
    sharp_multiply,
)
from .chaos import ChaosElement, fourth_moment_gap
from .grid_kernel import Kernel, contract, inner, is_symmetric, norm, slice_kernel

__all__ = [
    "BoundReport",
    "GradientSlice",
    "bound_report",
    "closed_form_lhs",
    "coefficient_c",
    "gradient",
    "gradient_quadratic_form",
    "main_bound_lhs",
    "number_inverse",
    "report_csv_fields",
    "report_to_row",
]


@dataclass(frozen=True)
class GradientSlice:
    """Value of the gradient biprocess at one time cell."""

    s: int
    value: BiChaosElement


def gradient(n: int, f: Kernel, s: int) -> GradientSlice:
    """grad_s I_n(f) as a sum of bi-integrals of argument slices."""
    if n < 1 or f.order != n:
        raise ValueError("gradient needs f of order n >= 1")
    terms = {}
    for k in range(1, n + 1):
        w = slice_kernel(f, k, s)
        terms[w.split] = w
    return GradientSlice(s, BiChaosElement(f.grid, terms))


def number_inverse(X: ChaosElement) -> ChaosElement:
    """Pseudo-inverse of the number operator: order n -> 1/n, constants -> 0."""
    return ChaosElement(
        X.grid, {n: f * (1.0 / n) for n, f in X.coeffs.items() if n >= 1}
    )


def gradient_quadratic_form(
    n: int, f: Kernel, apply_number_inverse: bool
) -> BiChaosElement:
    """h * sum_s grad_s(F or N0^{-1}F) # (grad_s F)*, slice by slice."""
    if n < 1 or f.order != n:
        raise ValueError("gradient_quadratic_form needs f of order n >= 1")
    left_kernel = f * (1.0 / n) if apply_number_inverse else f
    acc: Optional[BiChaosElement] = None
    for s in range(f.grid.cells):
        left = gradient(n, left_kernel, s).value
        right = bichaos_adjoint(gradient(n, f, s).value)
        term = sharp_multiply(left, right)
        acc = term if acc is None else acc + term
    return f.grid.cell_width * acc


def main_bound_lhs(n: int, f: Kernel) -> float:
    """Squared bi-norm of the quadratic form minus 1 (x) 1."""
    Q = gradient_quadratic_form(n, f, apply_number_inverse=True)
    return norm2(Q - one_tensor_one(f.grid))


def coefficient_c(u: int, v: int, n: int) -> int:
    """Multiplicity of I_{v} (x) I_{2(n-u)-v}(f contract_u f) in the expansion.

    Counts quadruples (p, r, k, q) with p + r = u - 1, k + q = v,
    0 <= k, q <= n - 1 - p - r; closed form u(v+1) for v <= n-u and
    u(2(n-u)-v+1) above, symmetric under v -> 2(n-u) - v.
    """
    if not 1 <= u <= n - 1:
        raise ValueError(f"u={u} out of range [1, {n - 1}]")
    if not 0 <= v <= 2 * (n - u):
        raise ValueError(f"v={v} out of range [0, {2 * (n - u)}]")
    if v <= n - u:
        return u * (v + 1)
    return u * (2 * (n - u) - v + 1)


def closed_form_lhs(n: int, f: Kernel, tol: float = 1e-9) -> float:
    """(1/n^2) sum_u P_n(u) ||f contract_u f||^2, for fully symmetric unit f.

    P_n(u) = sum_v coefficient_c(u, v, n)^2.  Upper-bounds main_bound_lhs:
    the expansion of the quadratic form groups, for each contraction order
    u and each split (v, 2(n-u)-v), several axis arrangements of the same
    kernel f contract_u f, and this formula counts them as if they were
    identical tensors.  For n = 2 they are (a matrix product of symmetric
    matrices equals its transpose) and the bound is an equality; for
    n >= 3 the arrangements differ and it is strict on generic input.
    """
    if not is_symmetric(f, tol):
        raise ValueError("closed_form_lhs requires a fully symmetric kernel")
    if abs(norm(f) - 1.0) > tol:
        raise ValueError("closed_form_lhs requires unit norm")
    total = 0.0
    for u in range(1, n):
        c = contract(f, f, u)
        total += bounds.P(n, u) * inner(c, c).real
    return total / n**2


@dataclass(frozen=True)
class BoundReport:
    """All quantities of the fourth-moment bound for one kernel."""

    n: int
    gap: float
    lhs: float
    lhs_closed_form: Optional[float]
    c_n: float
    dc2_from_gap: float
    dc2_from_lhs: float
    bound_satisfied: bool


def bound_report(n: int, f: Kernel, tol: float = 1e-9) -> BoundReport:
    """Assemble gap, both lhs paths, constants and distance bounds for f.

    f must be mirror-symmetric with unit norm (the gap's precondition);
    the closed form is filled in only when f is fully symmetric, and
    bound_satisfied records lhs <= c_n * gap + 1e-9 (which is a theorem
    for fully symmetric f and can legitimately fail otherwise).
    """
    gap = fourth_moment_gap(f, tol)
    lhs = main_bound_lhs(n, f)
    closed = closed_form_lhs(n, f, tol) if is_symmetric(f, tol) else None
    c_n = bounds.C(n).c_n
    return BoundReport(
        n=n,
        gap=gap,
        lhs=lhs,
        lhs_closed_form=closed,
        c_n=c_n,
        dc2_from_gap=bounds.dc2_bound_from_gap(n, gap),
        dc2_from_lhs=bounds.dc2_bound_from_lhs(lhs),
        bound_satisfied=lhs <= c_n * gap + 1e-9,
    )


def report_csv_fields() -> list[str]:
    return [
        "n",
        "gap",
        "lhs",
        "lhs_closed_form",
        "c_n",
        "dc2_from_gap",
        "dc2_from_lhs",
        "bound_satisfied",
    ]


def report_to_row(r: BoundReport) -> dict:
    return {
        "n": r.n,
        "gap": r.gap,
        "lhs": r.lhs,
        "lhs_closed_form": "" if r.lhs_closed_form is None else r.lhs_closed_form,
        "c_n": r.c_n,
        "dc2_from_gap": r.dc2_from_gap,
        "dc2_from_lhs": r.dc2_from_lhs,
        "bound_satisfied": r.bound_satisfied,
    }
