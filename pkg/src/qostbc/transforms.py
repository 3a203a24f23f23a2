"""Group-constrained linear transformation (GCLT) and constellation rotation (CR).

GCLT mixes dispersion matrices with a real orthogonal matrix *within each
symbol group* and renormalises each output to the power target. Because
cross-group anticommutators are bilinear in the group members, any such
mixing preserves the quasi-orthogonal grouping while reshaping the code's
distance spectrum; picking the mixing angles well restores full diversity.

CR rotates chosen complex symbols by a fixed phase. It is implemented here
as the equivalent rotation of each symbol's (real, imaginary) pair of
dispersion matrices, so a rotated code is an ordinary CodeDefinition whose
codewords for unrotated input symbols equal those of the rotated
constellation. Rotation bridges rails of different groups, enlarging them.
"""

import math
from dataclasses import dataclass

import numpy as np

from .catalog import CodeDefinition, make_code

#: orthogonality tolerance for mixing matrices
ORTHO_TOL = 1e-12

#: natural factor order of the six-plane 4-D rotation product
GIVENS_ORDER_4D = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))


def rotation_2d(theta: float) -> np.ndarray:
    """2-D mixing matrix [[cos, sin], [-sin, cos]]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def givens_rotation(n: int, i: int, k: int, theta: float) -> np.ndarray:
    """n x n rotation by theta in the (i, k) plane, 1-based axes, i < k."""
    if not (1 <= i < k <= n):
        raise ValueError(f"invalid plane ({i}, {k}) for size {n}")
    g = np.eye(n)
    c, s = math.cos(theta), math.sin(theta)
    g[i - 1, i - 1] = g[k - 1, k - 1] = c
    g[i - 1, k - 1] = s
    g[k - 1, i - 1] = -s
    return g


def givens_product(n: int, factors) -> np.ndarray:
    """Left-to-right product of (i, k, theta) plane rotations."""
    out = np.eye(n)
    for i, k, theta in factors:
        out = out @ givens_rotation(n, i, k, theta)
    return out


def givens_4d(angles) -> np.ndarray:
    """4-D orthogonal matrix from six plane angles.

    ``angles`` is either a mapping keyed by the planes (1,2)..(3,4) or a
    sequence of six values in the order (1,2), (1,3), (1,4), (2,3), (2,4),
    (3,4); the product is taken left to right in that fixed order.
    """
    if isinstance(angles, dict):
        missing = [p for p in GIVENS_ORDER_4D if p not in angles]
        if missing:
            raise ValueError(f"missing plane angles: {missing}")
        values = [angles[p] for p in GIVENS_ORDER_4D]
    else:
        values = list(angles)
        if len(values) != 6:
            raise ValueError(f"expected six angles, got {len(values)}")
    return givens_product(
        4, [(i, k, t) for (i, k), t in zip(GIVENS_ORDER_4D, values)]
    )


@dataclass(frozen=True)
class GcltSpec:
    """Per-group real orthogonal mixing matrices.

    ``groups`` lists 1-based rail index tuples; ``matrices[i]`` mixes the
    rails of ``groups[i]`` in their listed order (row r of the matrix builds
    the new dispersion matrix of rail ``groups[i][r]``).
    """

    groups: tuple
    matrices: tuple

    def __post_init__(self):
        if len(self.groups) != len(self.matrices):
            raise ValueError("one mixing matrix per group is required")
        for group, mat in zip(self.groups, self.matrices):
            mat = np.asarray(mat)
            n = len(group)
            if mat.shape != (n, n):
                raise ValueError(
                    f"group {group} needs a {n}x{n} mixing matrix, "
                    f"got {mat.shape}"
                )
            if np.abs(mat.T @ mat - np.eye(n)).max() > ORTHO_TOL:
                raise ValueError(f"mixing matrix for group {group} is not orthogonal")

    @classmethod
    def rotations_2d(cls, grouping, theta) -> "GcltSpec":
        """One plane rotation per two-rail group; ``theta`` is a scalar or
        one value per group."""
        thetas = np.broadcast_to(np.asarray(theta, dtype=float), (len(grouping),))
        mats = []
        for group, t in zip(grouping, thetas):
            if len(group) != 2:
                raise ValueError(
                    f"2-D rotation spec requires two-rail groups, got {group}"
                )
            mats.append(rotation_2d(float(t)))
        return cls(tuple(tuple(g) for g in grouping), tuple(mats))

    @classmethod
    def givens_4d_spec(cls, grouping, angles) -> "GcltSpec":
        """The same six-angle 4-D rotation applied to every four-rail group."""
        mat = givens_4d(angles)
        for group in grouping:
            if len(group) != 4:
                raise ValueError(
                    f"4-D rotation spec requires four-rail groups, got {group}"
                )
        return cls(tuple(tuple(g) for g in grouping),
                   tuple(mat for _ in grouping))

    @classmethod
    def from_matrices(cls, grouping, matrices) -> "GcltSpec":
        """Raw interface: any orthogonal mixing matrix per group."""
        return cls(
            tuple(tuple(g) for g in grouping),
            tuple(np.array(m, dtype=float) for m in matrices),
        )


def apply_gclt(code: CodeDefinition, spec: GcltSpec, name: str = None) -> CodeDefinition:
    """Mix dispersion matrices within groups and renormalise to the power target.

    The spec's groups must partition the rails exactly as the code's own
    grouping does (listed order within a group is the spec's choice). Each
    output matrix is scaled so its power trace equals T*Nt/K again.
    """
    code_sets = {frozenset(g) for g in code.grouping}
    spec_sets = {frozenset(g) for g in spec.groups}
    if code_sets != spec_sets:
        raise ValueError(
            f"spec groups {sorted(map(sorted, spec_sets))} do not match "
            f"code grouping {sorted(map(sorted, code_sets))}"
        )
    new = np.array(code.dispersion, dtype=np.complex128)
    target = code.power_target
    for group, mat in zip(spec.groups, spec.matrices):
        base = code.dispersion[[p - 1 for p in group]]
        mixed = np.einsum("rv,vtn->rtn", mat, base)
        for row, rail in enumerate(group):
            m = mixed[row]
            trace = float(np.einsum("ti,ti->", m.conj(), m).real)
            if trace <= ORTHO_TOL:
                raise ValueError(
                    f"degenerate mixing row for rail {rail} in group {group}: "
                    f"zero power trace"
                )
            new[rail - 1] = m * math.sqrt(target / trace)
    return make_code(name or f"{code.name}+GCLT", code.T, code.nt, code.K, new)


@dataclass(frozen=True)
class CrSpec:
    """Rotation angles per complex symbol, as sorted (symbol, angle) pairs.

    Symbols are 1-based indices into x_1..x_K; angles live in [0, pi/2).
    """

    angles: tuple

    def __post_init__(self):
        symbols = [s for s, _ in self.angles]
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbol index in rotation spec")
        for sym, angle in self.angles:
            if not 0.0 <= angle < math.pi / 2:
                raise ValueError(
                    f"rotation angle {angle!r} for symbol {sym} outside [0, pi/2)"
                )

    @classmethod
    def uniform(cls, symbols, angle: float) -> "CrSpec":
        return cls(tuple((int(s), float(angle)) for s in sorted(symbols)))


def apply_cr(code: CodeDefinition, spec: CrSpec, name: str = None) -> CodeDefinition:
    """Rotate the chosen complex symbols by their angles.

    For symbol x_q at angle phi the (real, imaginary) dispersion pair
    (A_q, A_{K+q}) becomes (cos*A_q + sin*A_{K+q}, -sin*A_q + cos*A_{K+q});
    encoding unrotated rail values through the new matrices reproduces the
    codeword of the rotated constellation.
    """
    K = code.K
    new = np.array(code.dispersion, dtype=np.complex128)
    for sym, phi in spec.angles:
        if not 1 <= sym <= K:
            raise ValueError(f"symbol index {sym} outside 1..{K}")
        c, s = math.cos(phi), math.sin(phi)
        a_re = code.dispersion[sym - 1]
        a_im = code.dispersion[K + sym - 1]
        new[sym - 1] = c * a_re + s * a_im
        new[K + sym - 1] = -s * a_re + c * a_im
    return make_code(name or f"{code.name}+CR", code.T, code.nt, code.K, new)
