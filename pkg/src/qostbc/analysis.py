"""Quasi-orthogonality analysis: pair checks, grouping discovery, equivalent channel.

Two dispersion matrices A_p, A_q form an orthogonal pair when their Hermitian
anticommutator vanishes, A_p^H A_q + A_q^H A_p = 0. Pairs that violate this
couple after matched filtering; the connected components of the violation
graph are the code's symbol groups, and the real matched-filter Gram H^T H is
block-diagonal along exactly that partition.

Symbol/rail indices are 1-based everywhere (rails 1..K are the real parts of
the K complex symbols, rails K+1..2K the imaginary parts), matching the
reports and JSON emitted by the CLI.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .linalg import real_expansion

if TYPE_CHECKING:  # pragma: no cover
    from .catalog import CodeDefinition

#: default tolerance on the anticommutator max-norm (catalog matrices are exact)
QO_TOL = 1e-12


def anticommutator_norm(a_p, a_q) -> float:
    """Max-norm of A_p^H A_q + A_q^H A_p (zero iff the pair is orthogonal)."""
    a_p = np.asarray(a_p, dtype=np.complex128)
    a_q = np.asarray(a_q, dtype=np.complex128)
    if a_p.shape != a_q.shape:
        raise ValueError(f"dimension mismatch: {a_p.shape} vs {a_q.shape}")
    m = a_p.conj().T @ a_q + a_q.conj().T @ a_p
    return float(np.abs(m).max())


def qo_pair_check(a_p, a_q, tol: float = QO_TOL) -> bool:
    """True when the two dispersion matrices form an orthogonal pair."""
    return anticommutator_norm(a_p, a_q) < tol


def qo_table(code: "CodeDefinition", tol: float = QO_TOL) -> np.ndarray:
    """(2K, 2K) boolean table; entry [p-1, q-1] is the pair check for rails p, q.

    The diagonal is always False (a matrix never anticommutes with itself),
    so False cells reproduce the X marks of the published fulfillment tables.
    """
    return _anticommutator_table(code.dispersion) < tol


def discover_grouping(code: "CodeDefinition", tol: float = QO_TOL):
    """Partition rails 1..2K into groups joined by anticommutator violations.

    Groups are the connected components of the non-orthogonality graph,
    each sorted ascending, listed in order of their smallest member.
    """
    return components_from_stack(code.dispersion, tol)


def _anticommutator_table(stack) -> np.ndarray:
    """(2K, 2K) matrix of anticommutator max-norms for every rail pair."""
    stack = np.asarray(stack, dtype=np.complex128)
    herm = np.einsum("pji,qjk->pqik", stack.conj(), stack)
    return np.abs(herm + herm.transpose(1, 0, 2, 3)).max(axis=(2, 3))


def components_from_stack(stack, tol: float = QO_TOL):
    """Grouping discovery on a raw (2K, T, Nt) dispersion stack."""
    n = len(stack)
    coupled = _anticommutator_table(stack) >= tol
    np.fill_diagonal(coupled, False)

    seen = np.zeros(n, dtype=bool)
    groups = []
    for start in range(n):
        if seen[start]:
            continue
        comp, frontier = [], [start]
        seen[start] = True
        while frontier:
            u = frontier.pop()
            comp.append(u)
            for v in np.nonzero(coupled[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    frontier.append(int(v))
        groups.append(tuple(sorted(i + 1 for i in comp)))
    groups.sort(key=lambda g: g[0])
    return tuple(groups)


@dataclass(frozen=True)
class SkewSymmetryReport:
    real_part_skew: bool
    imag_part_symmetric: bool


def skew_symmetry_check(a_p, a_q, tol: float = QO_TOL) -> SkewSymmetryReport:
    """For an orthogonal pair, check Re(A_p^H A_q) skew and Im(A_p^H A_q) symmetric.

    These two conditions are what force the real expansions to anticommute and
    hence the matched-filter Gram to be block-diagonal. Raises if the pair is
    not orthogonal in the first place.
    """
    if not qo_pair_check(a_p, a_q, tol):
        raise ValueError(
            "skew-symmetry check requires an orthogonal pair "
            "(the matrices belong to the same group)"
        )
    m = np.asarray(a_p, dtype=np.complex128).conj().T @ np.asarray(
        a_q, dtype=np.complex128
    )
    re, im = m.real, m.imag
    return SkewSymmetryReport(
        real_part_skew=bool(np.abs(re + re.T).max(initial=0.0) < tol),
        imag_part_symmetric=bool(np.abs(im - im.T).max(initial=0.0) < tol),
    )


def expansion_stack(code: "CodeDefinition") -> np.ndarray:
    """(2K, 2T, 2Nt) stack of the real expansions of the dispersion matrices."""
    return np.array([real_expansion(a) for a in code.dispersion])


def as_channel(h) -> np.ndarray:
    """Coerce a channel to complex (Nt, Nr); 1-D input becomes a column."""
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 1:
        h = h[:, None]
    if h.ndim != 2:
        raise ValueError(f"channel must be (Nt, Nr), got shape {h.shape}")
    return h


def channel_rails(h) -> np.ndarray:
    """Stack a complex (Nt, Nr) channel into real rails of shape (2Nt, Nr)."""
    h = as_channel(h)
    return np.vstack([h.real, h.imag])


def equivalent_channel(code: "CodeDefinition", h) -> np.ndarray:
    """Real equivalent channel H of shape (2T*Nr, 2K).

    Column p stacks, per receive antenna, the real expansion of A_p applied
    to that antenna's stacked channel rails; the received vector layout is
    (Re r_i, Im r_i) blocks of length T per antenna i.
    """
    h = as_channel(h)
    if h.shape[0] != code.nt:
        raise ValueError(
            f"channel has {h.shape[0]} transmit rows, code expects {code.nt}"
        )
    return equivalent_channel_from_stack(expansion_stack(code), h)


def equivalent_channel_from_stack(stack: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Equivalent channel from a precomputed real-expansion stack."""
    rails = channel_rails(h)  # (2Nt, Nr)
    cols = np.einsum("ptm,mi->itp", stack, rails)  # (Nr, 2T, 2K)
    nr = rails.shape[1]
    return cols.reshape(nr * stack.shape[1], stack.shape[0])


@dataclass(frozen=True)
class GramBlockReport:
    gram: np.ndarray
    max_off_group: float
    max_entry: float


def gram_block_report(code: "CodeDefinition", h) -> GramBlockReport:
    """Compute H^T H and the largest entry magnitude outside the group blocks."""
    H = equivalent_channel(code, h)
    gram = H.T @ H
    off = off_group_mask(code.grouping, gram.shape[0])
    max_off = float(np.abs(gram[off]).max()) if off.any() else 0.0
    return GramBlockReport(
        gram=gram,
        max_off_group=max_off,
        max_entry=float(np.abs(gram).max()),
    )


def off_group_mask(grouping, n: int) -> np.ndarray:
    """Boolean (n, n) mask of entries whose row/col rails lie in different groups."""
    label = np.empty(n, dtype=np.int64)
    for gi, group in enumerate(grouping):
        for rail in group:
            label[rail - 1] = gi
    return label[:, None] != label[None, :]


def joint_detection_size(code: "CodeDefinition") -> int:
    """Number of real symbols that must be detected jointly (largest group)."""
    return max(len(g) for g in code.grouping)


def stack_received(r_complex) -> np.ndarray:
    """Stack complex received samples (T, Nr) into the real layout (2T*Nr,)."""
    r = np.asarray(r_complex, dtype=np.complex128)
    if r.ndim == 1:
        r = r[:, None]
    if r.ndim != 2:
        raise ValueError("received samples must have shape (T,) or (T, Nr)")
    blocks = [np.concatenate([r[:, i].real, r[:, i].imag]) for i in range(r.shape[1])]
    return np.concatenate(blocks)


def unstack_received(r_tilde, T: int) -> np.ndarray:
    """Inverse of :func:`stack_received`; returns complex samples (T, Nr)."""
    r = np.asarray(r_tilde, dtype=np.float64)
    if r.ndim != 1 or r.size % (2 * T) != 0:
        raise ValueError(f"stacked vector length {r.size} is not a multiple of 2T")
    nr = r.size // (2 * T)
    blocks = r.reshape(nr, 2 * T)
    return (blocks[:, :T] + 1j * blocks[:, T:]).T
