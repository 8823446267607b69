"""Hamiltonian GL(n,C)-spaces: cyclic pairs (B, b) and T*GL(n,C).

T*GL(n,C) is kept in the right trivialization (g, B) throughout; there is
no abstract cotangent structure.  Left flows move (g, B) to (hg, hBh^-1)
and right flows move g only, with the conjugating factors built from the
leading minors of the respective moment maps B and -g^-1 B g.

The B-projection of a left flow calls the same single-index step as
:func:`gzflows.gzcore.gz_flow`, so descent to gl(n,C) is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gzcore import _as_group_element, flow_factor
from .matpoly import as_matrix, krylov_matrix, krylov_rank

__all__ = [
    "VnPoint",
    "CotangentPoint",
    "vn_validate",
    "vn_iso",
    "vn_gz_flow",
    "cotangent_validate",
    "tgl_symplectic",
    "tgl_flow",
    "tilde_a_flow",
]

# |det g| must exceed DET_RTOL * max(1, ||g||_F)^n for a valid cotangent point.
DET_RTOL = 1e-12


@dataclass(frozen=True)
class VnPoint:
    """Pair (B, b) with b a cyclic vector for B."""

    B: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.B.reshape(-1), self.b])


@dataclass(frozen=True)
class CotangentPoint:
    """Point (g, B) of T*GL(n,C) in the right trivialization."""

    g: np.ndarray
    B: np.ndarray

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.g.reshape(-1), self.B.reshape(-1)])

    def right_moment(self) -> np.ndarray:
        """-g^-1 B g, the moment map of the right action."""
        return -np.linalg.solve(self.g, self.B @ self.g)


def vn_validate(B, b) -> VnPoint:
    """Accept (B, b) iff the Krylov matrix has full rank."""
    B = as_matrix(B)
    b = np.asarray(b, dtype=complex).reshape(-1)
    rank = krylov_rank(B, b)
    if rank != B.shape[0]:
        raise ValidationError(
            f"vector is not cyclic: Krylov rank {rank} < {B.shape[0]}"
        )
    return VnPoint(B=B, b=b)


def vn_iso(p: VnPoint) -> tuple[np.ndarray, np.ndarray]:
    """Chart ((b, Bb, ..., B^(n-1) b), (tr B, ..., tr B^n))."""
    K = krylov_matrix(p.B, p.b)
    traces = np.empty(p.n, dtype=complex)
    power = np.eye(p.n, dtype=complex)
    for i in range(p.n):
        power = power @ p.B
        traces[i] = np.trace(power)
    return K, traces


def vn_gz_flow(p: VnPoint, lam) -> VnPoint:
    """(B, b) -> (hBh^-1, hb) per index; the full parameter vector acts.

    Indices with m = n scale and shear b through h = exp(z B^(i-1)) while
    fixing B exactly (h is a polynomial in B).
    """
    lam = _as_group_element(p.n, lam)
    B = p.B.copy()
    b = p.b.copy()
    for m, i, z in lam.items():
        if z == 0:
            continue
        h = flow_factor(B, m, i, z)
        if m < p.n:
            B = h @ B @ np.linalg.inv(h)
        b = h @ b
    return VnPoint(B=B, b=b)


def cotangent_validate(g, B) -> CotangentPoint:
    g = as_matrix(g)
    B = as_matrix(B)
    if g.shape != B.shape:
        raise ValidationError(f"shape mismatch: g {g.shape}, B {B.shape}")
    scale = max(1.0, float(np.linalg.norm(g))) ** g.shape[0]
    if abs(np.linalg.det(g)) <= DET_RTOL * scale:
        raise ValidationError("g is numerically singular")
    return CotangentPoint(g=g, B=B)


def tgl_symplectic(x: CotangentPoint, tangent1, tangent2) -> complex:
    """Canonical form tr(rho1 b2 - rho2 b1 - B [rho1, rho2]).

    Tangents are (rho, bdot) pairs of n-by-n matrices, rho being the
    right-invariant frame coefficient along the group direction.
    """
    rho1, b1 = (as_matrix(t) for t in tangent1)
    rho2, b2 = (as_matrix(t) for t in tangent2)
    comm = rho1 @ rho2 - rho2 @ rho1
    return complex(np.trace(rho1 @ b2 - rho2 @ b1 - x.B @ comm))


def tgl_flow(x: CotangentPoint, side: str, m: int, i: int, z: complex) -> CotangentPoint:
    """Single-index flow on T*GL(n,C).

    left:  (g, B) -> (hg, hBh^-1) with h built from the minors of B; for
           m = n the factor commutes with B, so B is returned unchanged.
    right: (g, B) -> (g exp(-z pad(minor(C, m)**(i-1))), B) with
           C = -g^-1 B g; B is never touched.
    """
    n = x.n
    if not (1 <= i <= m <= n):
        raise ValueError(f"index ({m}, {i}) invalid for n = {n}")
    if side == "left":
        h = flow_factor(x.B, m, i, z)
        if m == n:
            return CotangentPoint(g=h @ x.g, B=x.B)
        return CotangentPoint(g=h @ x.g, B=h @ x.B @ np.linalg.inv(h))
    if side == "right":
        C = x.right_moment()
        h = flow_factor(C, m, i, -z)
        return CotangentPoint(g=x.g @ h, B=x.B)
    raise ValueError(f"unknown side {side!r}")


def tilde_a_flow(x: CotangentPoint, left, right) -> CotangentPoint:
    """Compose all left flows, then all right flows, lexicographically.

    The two families commute exactly: left flows leave -g^-1 B g unchanged
    and right flows leave B unchanged, so each family's generators are
    constant along the other's orbits.
    """
    left = _as_group_element(x.n, left)
    right = _as_group_element(x.n, right)
    out = x
    for m, i, z in left.items():
        if z != 0:
            out = tgl_flow(out, "left", m, i, z)
    for m, i, z in right.items():
        if z != 0:
            out = tgl_flow(out, "right", m, i, z)
    return out
