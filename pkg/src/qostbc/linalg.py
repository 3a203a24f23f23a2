"""Small dense matrix kernel used by the code-construction and analysis layers.

Everything operates on plain numpy arrays (complex128 / float64). Matrices in
this package are tiny (at most 16x16), so the kernel favours clarity and
strict validation over throughput; hot loops elsewhere use numpy batching
directly and are cross-checked against these reference routines in the tests.

All functions are pure and never mutate their inputs.
"""

import numpy as np

#: largest matrix the determinant routine accepts
MAX_DET_SIZE = 16


def as_complex_matrix(entries) -> np.ndarray:
    """Validate and return a 2-D complex128 array (all entries finite)."""
    m = np.asarray(entries, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix entries must be finite")
    return m


def as_real_matrix(entries) -> np.ndarray:
    """Validate and return a 2-D float64 array (all entries finite)."""
    m = np.asarray(entries)
    if np.iscomplexobj(m):
        if np.abs(m.imag).max(initial=0.0) != 0.0:
            raise ValueError("expected a real matrix, got nonzero imaginary part")
        m = m.real
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def hermitian_product(a, b) -> np.ndarray:
    """Return ``a^H b``.

    Both operands must have the same number of rows; the result has shape
    (a.cols, b.cols).
    """
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"row mismatch in hermitian product: {a.shape[0]}x{a.shape[1]} "
            f"vs {b.shape[0]}x{b.shape[1]}"
        )
    return a.conj().T @ b


def determinant(m) -> complex:
    """Determinant of a square matrix via LU factorisation with partial pivoting.

    Accepts real or complex input up to ``MAX_DET_SIZE``; always returns a
    complex scalar. For rank-deficient integer-valued inputs the result is
    zero to within 1e-12 absolute.
    """
    a = as_complex_matrix(m).copy()
    n, cols = a.shape
    if n != cols:
        raise ValueError(f"determinant requires a square matrix, got {n}x{cols}")
    if n > MAX_DET_SIZE:
        raise ValueError(f"matrix size {n} exceeds kernel limit {MAX_DET_SIZE}")
    det = 1.0 + 0.0j
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if a[piv, col] == 0:
            return 0.0 + 0.0j
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            det = -det
        det *= a[col, col]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(factors, a[col, col:])
    return complex(det)


def real_expansion(a) -> np.ndarray:
    """Return the real block form [[Re, -Im], [Im, Re]] of a complex matrix.

    The map is a ring homomorphism: the expansion of a product equals the
    product of the expansions, and det(expansion) == |det|^2.
    """
    a = as_complex_matrix(a)
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def kronecker(a, b) -> np.ndarray:
    """Kronecker product of two real matrices."""
    return np.kron(as_real_matrix(a), as_real_matrix(b))
