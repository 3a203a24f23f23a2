"""Coding-gain machinery: distance determinants, minimum-determinant search,
diversity products, and the angle searches for the transformed codes.

The figure of merit is the determinant of the codeword distance Gram
(DC)^H (DC) over nonzero error patterns DC = sum_p delta_p A_p, where each
delta_p is an integer multiple of the constellation's PAM minimum distance.
A code has full transmit diversity iff the minimum determinant over error
patterns is nonzero; the diversity product normalises that minimum:

    zeta = (1 / (2 sqrt(Nt))) * min_det ** (1 / (2 T))

Searches enumerate integer multiplier patterns and scale by d_min at report
time (the determinant is homogeneous of degree 2*Nt in the deltas).
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import transforms
from .catalog import CodeDefinition, build
from .linalg import determinant
from .modem import Constellation, make_qam

#: a minimum determinant below this is treated as rank-deficient (no diversity)
FULL_DIVERSITY_TOL = 1e-9

#: largest pattern count the exhaustive scopes will enumerate
PATTERN_BUDGET = 10_000_000

#: the two-rail groups of the four-antenna family, in closed-form pair order
PAIRS_4ANT = ((1, 4), (2, 3), (5, 8), (6, 7))


class PatternBudgetError(ValueError):
    """Raised when an enumeration would exceed the pattern budget."""

    def __init__(self, count: int, budget: int = PATTERN_BUDGET):
        super().__init__(
            f"enumeration of {count} error patterns exceeds budget {budget}"
        )
        self.count = count
        self.budget = budget


def distance_det(code: CodeDefinition, deltas) -> float:
    """det((DC)^H DC) for the error pattern DC = sum_p deltas[p] A_p."""
    d = np.asarray(deltas, dtype=np.float64)
    if d.shape != (2 * code.K,):
        raise ValueError(
            f"error pattern has shape {d.shape}, expected ({2 * code.K},)"
        )
    dc = np.einsum("p,ptn->tn", d, code.dispersion)
    value = determinant(dc.conj().T @ dc)
    return float(value.real)


def q4lt_det_closed_form(deltas, theta: float) -> float:
    """Closed-form distance determinant of the mixed four-antenna code.

    Rotates each rail pair of PAIRS_4ANT by ``theta`` into the base-code
    coordinates and evaluates the known determinant of the base code:
    [(sum of four paired squares) * (sum of the mirrored squares)]^2.
    """
    d = np.asarray(deltas, dtype=np.float64)
    if d.shape != (8,):
        raise ValueError(f"expected 8 deltas, got shape {d.shape}")
    c, s = math.cos(theta), math.sin(theta)
    t = np.empty(8)
    for q, v in PAIRS_4ANT:
        t[q - 1] = d[q - 1] * c - d[v - 1] * s
        t[v - 1] = d[q - 1] * s + d[v - 1] * c
    s1 = ((t[0] + t[3]) ** 2 + (t[1] - t[2]) ** 2
          + (t[4] + t[7]) ** 2 + (t[5] - t[6]) ** 2)
    s2 = ((t[0] - t[3]) ** 2 + (t[1] + t[2]) ** 2
          + (t[4] - t[7]) ** 2 + (t[5] + t[6]) ** 2)
    return float((s1 * s2) ** 2)


def case_dets(m: int, n: int, theta: float):
    """The four error-case determinants for a rotated rail pair, over d_min^8.

    Cases: (0, n*d), (m*d, 0), (m*d, n*d), (m*d, -n*d) with integer
    multipliers 1 <= m, n <= sqrt(M) - 1.
    """
    if m < 1 or n < 1:
        raise ValueError("multipliers must be positive integers")
    c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
    return (
        (n * n * c2) ** 4,
        (m * m * c2) ** 4,
        ((m * m - n * n) * c2 - 2 * m * n * s2) ** 4,
        ((m * m - n * n) * c2 + 2 * m * n * s2) ** 4,
    )


def optimal_theta_2d() -> float:
    """Analytic optimum of the pairwise mixing angle: 0.5 * atan(1/2)."""
    return 0.5 * math.atan(0.5)


# --------------------------------------------------------------------------
# pattern enumeration

def _multipliers(constellation: Constellation) -> np.ndarray:
    """PAM difference multipliers 0, +-1, ..., +-(levels - 1), ascending."""
    top = constellation.levels_per_rail - 1
    return np.arange(-top, top + 1)


def _group_patterns(n_rails: int, group, mult) -> np.ndarray:
    """All nonzero integer patterns supported on one group, lexicographic."""
    pats = np.array(
        [p for p in itertools.product(mult, repeat=len(group))
         if any(v != 0 for v in p)],
        dtype=np.float64,
    )
    full = np.zeros((len(pats), n_rails))
    full[:, [r - 1 for r in group]] = pats
    return full


def _batched_dets(stack: np.ndarray, coeffs: np.ndarray,
                  chunk: int = 65536) -> np.ndarray:
    """Gram determinants of sum_p coeffs[r, p] * A_p for every row r."""
    out = np.empty(len(coeffs))
    for lo in range(0, len(coeffs), chunk):
        c = coeffs[lo:lo + chunk]
        dc = np.einsum("rp,ptn->rtn", c, stack)
        gram = np.einsum("rtm,rtn->rmn", dc.conj(), dc)
        out[lo:lo + chunk] = np.linalg.det(gram).real
    return out


@dataclass(frozen=True)
class GroupMinimum:
    group: tuple
    min_det: float
    argmin: np.ndarray  # deltas, length 2K


@dataclass(frozen=True)
class MinDetReport:
    scope: str
    min_det: float
    argmin: np.ndarray  # deltas, length 2K
    per_group: tuple    # GroupMinimum per group (within-group scope only)


def min_det_search(code: CodeDefinition, constellation: Constellation,
                   scope: str = "within_group",
                   budget: int = PATTERN_BUDGET) -> MinDetReport:
    """Minimum distance determinant over PAM error patterns.

    ``within_group`` enumerates nonzero patterns supported on one symbol
    group at a time (the cross-group terms cancel after matched filtering,
    so this is the operative minimum for grouped detection). ``full``
    enumerates patterns over all 2K rails, guarded by the pattern budget.
    Ties break toward the lexicographically smallest multiplier pattern.
    """
    mult = _multipliers(constellation)
    n = 2 * code.K
    scale = constellation.d_min ** (2 * code.nt)

    if scope == "full":
        count = len(mult) ** n - 1
        if count > budget:
            raise PatternBudgetError(count, budget)
        best_val, best_pat = math.inf, None
        stack = code.dispersion
        buf = []
        for pat in itertools.product(mult, repeat=n):
            if any(v != 0 for v in pat):
                buf.append(pat)
            if len(buf) == 65536:
                best_val, best_pat = _scan(stack, np.array(buf, float),
                                           best_val, best_pat)
                buf = []
        if buf:
            best_val, best_pat = _scan(stack, np.array(buf, float),
                                       best_val, best_pat)
        return MinDetReport(
            scope="full",
            min_det=best_val * scale,
            argmin=best_pat * constellation.d_min,
            per_group=(),
        )

    if scope != "within_group":
        raise ValueError(f"unknown search scope {scope!r}")

    per_group = []
    for group in code.grouping:
        coeffs = _group_patterns(n, group, mult)
        dets = _batched_dets(code.dispersion, coeffs)
        k = int(np.argmin(dets))
        per_group.append(GroupMinimum(
            group=tuple(group),
            min_det=float(dets[k]) * scale,
            argmin=coeffs[k] * constellation.d_min,
        ))
    best = min(per_group, key=lambda g: (g.min_det, tuple(g.argmin)))
    return MinDetReport(
        scope="within_group",
        min_det=best.min_det,
        argmin=best.argmin,
        per_group=tuple(per_group),
    )


def _scan(stack, coeffs, best_val, best_pat):
    dets = _batched_dets(stack, coeffs)
    k = int(np.argmin(dets))
    if dets[k] < best_val or (
        dets[k] == best_val
        and best_pat is not None
        and tuple(coeffs[k]) < tuple(best_pat)
    ):
        return float(dets[k]), coeffs[k]
    return best_val, best_pat


@dataclass(frozen=True)
class DiversityReport:
    zeta: float
    full_diversity: bool
    min_det: float
    report: MinDetReport


def diversity_product(code: CodeDefinition,
                      constellation: Constellation) -> DiversityReport:
    """Within-group minimum determinant mapped through the zeta normalisation."""
    rep = min_det_search(code, constellation, scope="within_group")
    full = rep.min_det > FULL_DIVERSITY_TOL
    zeta = _zeta(rep.min_det, code.nt, code.T) if full else 0.0
    return DiversityReport(
        zeta=zeta, full_diversity=full, min_det=rep.min_det, report=rep
    )


def _zeta(min_det: float, nt: int, T: int) -> float:
    return (1.0 / (2.0 * math.sqrt(nt))) * min_det ** (1.0 / (2.0 * T))


# --------------------------------------------------------------------------
# mixing-angle grid search for the pairwise-grouped four-antenna code

@dataclass(frozen=True)
class ThetaSweep:
    thetas_deg: np.ndarray
    min_dets: np.ndarray
    best_theta_deg: float


def theta_grid_search(constellation: Constellation, step_deg: float = 0.01,
                      lo_deg: float = 0.0, hi_deg: float = 45.0) -> ThetaSweep:
    """Sweep the pair-mixing angle for the four-antenna code.

    For each angle the within-group minimum determinant of the mixed code is
    evaluated numerically (batched Gram determinants on the base dispersion
    stack; the pair mixing only rotates the error coefficients).
    """
    base = build("Q4")
    mult = _multipliers(constellation)
    coeffs = np.vstack([
        _group_patterns(8, group, mult) for group in PAIRS_4ANT
    ])
    scale = constellation.d_min ** 8
    thetas = np.arange(lo_deg, hi_deg + step_deg / 2, step_deg)
    mins = np.empty(len(thetas))
    for i, deg in enumerate(thetas):
        c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
        rot = coeffs.copy()
        for q, v in PAIRS_4ANT:
            rot[:, q - 1] = coeffs[:, q - 1] * c - coeffs[:, v - 1] * s
            rot[:, v - 1] = coeffs[:, q - 1] * s + coeffs[:, v - 1] * c
        mins[i] = _batched_dets(base.dispersion, rot).min() * scale
    best = int(np.argmax(mins))
    return ThetaSweep(
        thetas_deg=thetas, min_dets=mins, best_theta_deg=float(thetas[best])
    )


def case_sweep_rows(constellation: Constellation, step_deg: float = 0.05,
                    lo_deg: float = 0.0, hi_deg: float = 45.0):
    """Rows for the per-(m, n) determinant-vs-angle curves.

    Yields (theta_deg, overall_min, {(m, n): case_min}) with determinants in
    absolute units (scaled by d_min^8).
    """
    top = constellation.levels_per_rail - 1
    pairs = [(m, n) for m in range(1, top + 1) for n in range(1, top + 1)]
    scale = constellation.d_min ** 8
    sweep = theta_grid_search(constellation, step_deg, lo_deg, hi_deg)
    for deg, overall in zip(sweep.thetas_deg, sweep.min_dets):
        theta = math.radians(deg)
        cases = {
            (m, n): min(case_dets(m, n, theta)) * scale for (m, n) in pairs
        }
        yield float(deg), float(overall), cases


# --------------------------------------------------------------------------
# searched angles for the eight-antenna codes

def _det_factor_forms(sub_stack: np.ndarray):
    """Quadratic factor forms of a rail subset's distance determinant.

    For the catalog eight-antenna codes the Grams of every real combination
    of a group's dispersion matrices commute, so the determinant factors as
    det = prod_k (c^T M_k c)^2 over Nt/2 fixed symmetric forms M_k in the
    combination coefficients c. Returns the (Nt/2, m, m) form stack, or
    None when the structure does not hold (validated on random draws).
    """
    sub = np.asarray(sub_stack)
    m, _, nt = sub.shape
    if nt % 2:
        return None
    gen = np.einsum("ati,btk->abik", sub.conj(), sub).real
    rng = np.random.default_rng(np.random.SeedSequence([2024, m, nt]))
    c0 = rng.standard_normal(m)
    g0 = np.einsum("a,b,abik->ik", c0, c0, gen)
    _, vecs = np.linalg.eigh(g0)
    reps = vecs[:, 0::2]  # one eigenvector per doubled eigenvalue
    forms = np.einsum("if,abik,kf->fab", reps, gen, reps)
    forms = 0.5 * (forms + forms.transpose(0, 2, 1))
    for _ in range(4):  # validate against the direct determinant
        c = rng.standard_normal(m)
        dc = np.einsum("a,ati->ti", c, sub)
        direct = float(np.linalg.det(dc.conj().T @ dc).real)
        fac = float(np.prod(np.einsum("a,fab,b->f", c, forms, c)) ** 2)
        if abs(direct - fac) > 1e-9 * max(abs(direct), 1.0):
            return None
    return forms


def _form_min_dets(forms: np.ndarray, coeffs: np.ndarray) -> float:
    """Minimum factored determinant over coefficient rows."""
    q = np.einsum("ra,fab,rb->rf", coeffs, forms, coeffs)
    return float((np.prod(q, axis=1) ** 2).min())


def _t8_objective(constellation: Constellation):
    """Fast diversity-product objective for the rate-1 eight-antenna code.

    Mixing a group with an orthogonal matrix only rotates the error
    coefficients (the within-group power cross-traces vanish, so the output
    normalisation is unity). Every group's determinant is evaluated through
    its precomputed factor forms, falling back to batched determinants if
    the factor structure were ever absent.
    """
    base = build("T8")
    mult = _multipliers(constellation)
    scale = constellation.d_min ** (2 * base.nt)
    stack = base.dispersion
    groups = []
    for group in base.grouping:
        idx = np.array([r - 1 for r in group])
        pats = np.array(
            [p for p in itertools.product(mult, repeat=len(group))
             if any(v != 0 for v in p)],
            dtype=np.float64,
        )
        forms = _det_factor_forms(stack[idx])
        groups.append((idx, pats, forms))

    def objective(angles) -> float:
        mix = transforms.givens_4d(list(angles))
        worst = math.inf
        for idx, pats, forms in groups:
            rot = pats @ mix
            if forms is not None:
                worst = min(worst, _form_min_dets(forms, rot))
            else:
                full = np.zeros((len(rot), 2 * base.K))
                full[:, idx] = rot
                worst = min(worst, _batched_dets(stack, full).min())
        worst *= scale
        if worst <= FULL_DIVERSITY_TOL:
            return 0.0
        return _zeta(worst, base.nt, base.T)

    return objective


def _golden_max(fun, lo: float, hi: float, iters: int = 25):
    """Golden-section maximisation on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = (a + b) / 2.0
    return x, fun(x)


@dataclass(frozen=True)
class AngleSearchResult:
    angles: tuple
    zeta: float


def search_t8_angles(starts: int = 64, seed: int = 0, sweeps: int = 3,
                     workers: int = 1) -> AngleSearchResult:
    """Multi-start coordinate descent over the six 4-D mixing angles.

    Maximises the 4-QAM diversity product of the mixed rate-1 eight-antenna
    code. Each start draws its initial angles from the substream
    (seed, start index) and runs golden-section line searches coordinate by
    coordinate; the result is deterministic for a given seed regardless of
    the worker count, with ties broken toward the lexicographically
    smallest angle vector.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    objective = _t8_objective(make_qam(4))
    half_pi = math.pi / 2

    def run_start(index: int):
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        angles = rng.uniform(-half_pi, half_pi, size=6)
        for _ in range(sweeps):
            for j in range(6):
                def slice_fun(t, j=j):
                    trial = angles.copy()
                    trial[j] = t
                    return objective(trial)
                angles[j], _ = _golden_max(slice_fun, -half_pi, half_pi)
        z = objective(angles)
        return (-z, tuple(float(a) for a in angles))

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_start, range(starts)))
    else:
        results = [run_start(i) for i in range(starts)]
    neg_zeta, angles = min(results)
    return AngleSearchResult(angles=angles, zeta=-neg_zeta)


def search_q8_cr_angle(step_deg: float = 0.25) -> AngleSearchResult:
    """1-D grid search of the common rotation angle for the eight-antenna
    rate-3/4 code (symbols 4..6 rotated)."""
    base = build("Q8")
    qam = make_qam(4)
    best = None
    for deg in np.arange(step_deg, 90.0, step_deg):
        phi = math.radians(deg)
        code = transforms.apply_cr(base, transforms.CrSpec.uniform((4, 5, 6), phi))
        z = diversity_product(code, qam).zeta
        if best is None or z > best.zeta:
            best = AngleSearchResult(angles=(phi,), zeta=z)
    return best


def search_t8_cr_steps(coarse_deg: float = 2.5,
                       fine_deg: float = 0.25) -> AngleSearchResult:
    """Small-grid search of the two rotation-progression steps for T8_CR.

    Each coupled symbol family gets per-symbol angles (0, d, 2d, 3d) with
    the family step d below 30 degrees (so every angle stays inside the
    rotation range); the grid runs over the two family steps, coarse pass
    then local refinement. Returns the eight per-symbol angles of the best
    pair found.
    """
    base = build("T8")
    qam = make_qam(4)
    families = ((1, 4, 6, 7), (2, 3, 5, 8))
    top_deg = 30.0 - fine_deg  # keep 3d strictly inside [0, 90) degrees

    # rotating a family's symbols merges its real and imaginary rail groups;
    # precompute each merged group's factor forms and pattern set
    merged = []
    mult = _multipliers(qam)
    for family in families:
        rails = tuple(sorted(family + tuple(8 + q for q in family)))
        idx = np.array([r - 1 for r in rails])
        pats = np.array(
            [p for p in itertools.product(mult, repeat=8)
             if any(v != 0 for v in p)],
            dtype=np.float64,
        )
        forms = _det_factor_forms(base.dispersion[idx])
        pos = {r: i for i, r in enumerate(rails)}
        merged.append((family, rails, idx, pats, forms, pos))
    scale = qam.d_min ** (2 * base.nt)

    def evaluate(d1: float, d2: float):
        angles = {}
        worst = math.inf
        for (family, rails, idx, pats, forms, pos), step in zip(merged, (d1, d2)):
            rot_map = np.eye(8)
            for k, sym in enumerate(family):
                angles[sym] = k * step
                i, j = pos[sym], pos[8 + sym]
                c, s = math.cos(k * step), math.sin(k * step)
                rot_map[i, i] = rot_map[j, j] = c
                rot_map[i, j] = s
                rot_map[j, i] = -s
            coeffs = pats @ rot_map
            if forms is not None:
                worst = min(worst, _form_min_dets(forms, coeffs))
            else:
                full = np.zeros((len(coeffs), 2 * base.K))
                full[:, idx] = coeffs
                worst = min(worst, _batched_dets(base.dispersion, full).min())
        worst *= scale
        zeta = 0.0 if worst <= FULL_DIVERSITY_TOL else _zeta(worst, base.nt, base.T)
        return zeta, tuple(angles[s] for s in range(1, 9))

    def grid(d1_values, d2_values, best):
        for d1 in d1_values:
            for d2 in d2_values:
                z, angles = evaluate(math.radians(d1), math.radians(d2))
                if best is None or z > best[0]:
                    best = (z, angles, (d1, d2))
        return best

    steps = np.arange(coarse_deg, top_deg, coarse_deg)
    best = grid(steps, steps, None)
    d1c, d2c = best[2]
    fine1 = np.arange(max(fine_deg, d1c - coarse_deg),
                      min(top_deg, d1c + coarse_deg) + fine_deg / 2, fine_deg)
    fine2 = np.arange(max(fine_deg, d2c - coarse_deg),
                      min(top_deg, d2c + coarse_deg) + fine_deg / 2, fine_deg)
    best = grid(fine1, fine2, best)
    return AngleSearchResult(angles=best[1], zeta=best[0])
