"""Counting negative modes of the reduced boundary operator.

The model operator at semiclassical parameter h = 1/r acts in the
Laplace-Beltrami eigenbasis as D - G, with D = diag(sqrt(1 + h^2 lambda_j))
and G the Gram matrix of the effective damping gamma0 under the surface mass
inner product.  Its negative eigenvalues predict the eigenvalue count N(r),
which the Weyl law pegs at (r^2 / 4 pi) * integral of (gamma0^2 - 1).

Three interchangeable matrix representations keep scans cheap:

* ``diagonal``  -- constant damping; G = gamma0 I exactly, no matrices.
* ``blocks``    -- damping affine along the sphere's polar axis; the operator
                   splits into small per-order blocks over Legendre degrees.
* ``dense``     -- anything else, through tabulated mode values.
"""

import json
from collections import namedtuple
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, InsufficientSpectrumError, UsageError
from .lb_spectrum import SpectralBasis, axis_moment_blocks, _tabulate_sphere_modes

ZERO_TOL = 1e-12
CUT_FACTOR = 2.0
STABILITY_FACTOR = 1.5
TRACK_OVERLAP = 0.8

NegativeCount = namedtuple("NegativeCount", ["negative", "borderline"])


@dataclass(frozen=True)
class DampingConstants:
    """Derived constants of an effective damping range [c0, c1], both > 1.

    C = 1/c1^2 and eps = (C/2)(c0-1)^2 control the per-mode inequality;
    delta = (c0-1)/2 is the half-width of the monotonicity probe band.
    eps < 1/2 always, since (c0-1)/c1 < 1.
    """

    c0: float
    c1: float

    def __post_init__(self):
        if not 1.0 < self.c0 <= self.c1:
            raise DomainError(
                f"damping range [{self.c0}, {self.c1}] must satisfy 1 < c0 <= c1")

    @property
    def big_c(self):
        return 1.0 / (self.c1 * self.c1)

    @property
    def eps(self):
        return 0.5 * self.big_c * (self.c0 - 1.0) ** 2

    @property
    def delta(self):
        return 0.5 * (self.c0 - 1.0)

    def ellipticity_threshold(self, h):
        """lambda* = (c1^2 - 1)/h^2: modes above it have positive symbol."""
        return (self.c1 * self.c1 - 1.0) / (h * h)


def constants_for(field, surface):
    lo, hi = field.effective_range(surface)
    return DampingConstants(lo, hi)


def inequality_margin(constants, s, gamma0):
    """(1 + C - eps) s^2 - 2 C gamma0 s + (C gamma0^2 - 1), the per-mode form.

    Nonnegative for every s >= 1 and gamma0 in [c0, c1]; equals eps exactly
    at s = 1, gamma0 = c0.
    """
    s = np.asarray(s, dtype=float)
    gamma0 = np.asarray(gamma0, dtype=float)
    c = constants.big_c
    return ((1.0 + c - constants.eps) * s * s
            - 2.0 * c * gamma0 * s + (c * gamma0 * gamma0 - 1.0))


def inequality_check(constants, count=10000, seed=0, h_max=1.0,
                     lambda_max=None):
    """Sample (lambda, h, gamma0) triples and report the worst margin.

    Returns {"min_margin", "margin_at_s1_c0", "samples", "violations"}.
    """
    rng = np.random.default_rng(seed)
    if lambda_max is None:
        lambda_max = 4.0 * constants.ellipticity_threshold(h_max)
    lam = rng.uniform(0.0, lambda_max, size=count)
    h = rng.uniform(1e-3, h_max, size=count)
    gamma0 = rng.uniform(constants.c0, constants.c1, size=count)
    s = np.sqrt(1.0 + h * h * lam)
    margins = inequality_margin(constants, s, gamma0)
    return {
        "min_margin": float(np.min(margins)),
        "margin_at_s1_c0": float(inequality_margin(constants, 1.0, constants.c0)),
        "samples": int(count),
        "violations": int(np.sum(margins < 0.0)),
    }


# ----------------------------------------------------------------------
# the Galerkin operator
# ----------------------------------------------------------------------

@dataclass
class GalerkinOperator:
    """Finite section D - G of the model operator at fixed h.

    ``kind`` selects the stored representation: "diagonal" keeps the diagonal
    of D - gamma0 I, "blocks" a list of (order, matrix, multiplicity), and
    "dense" one symmetric matrix.  ``mode_cut`` counts retained basis modes.
    """

    h: float
    basis: SpectralBasis
    mode_cut: int
    kind: str
    payload: object
    gamma_label: str = ""

    def eigenvalues(self):
        """All retained model eigenvalues, ascending, with multiplicity."""
        if self.kind == "diagonal":
            return np.sort(self.payload)
        if self.kind == "blocks":
            parts = []
            for _, matrix, multiplicity in self.payload:
                values = np.linalg.eigvalsh(matrix)
                parts.extend([values] * multiplicity)
            return np.sort(np.concatenate(parts))
        return np.linalg.eigvalsh(self.payload)

    def matrix(self):
        """Dense realization (for inspection; block order for "blocks")."""
        if self.kind == "diagonal":
            return np.diag(self.payload)
        if self.kind == "blocks":
            size = sum(len(m) * mult for _, m, mult in self.payload)
            out = np.zeros((size, size))
            at = 0
            for _, m, mult in self.payload:
                for _ in range(mult):
                    out[at:at + len(m), at:at + len(m)] = m
                    at += len(m)
            return out
        return self.payload

    def gamma_moments(self):
        """The Gram matrix G in the same layout as ``matrix()``."""
        lam = self.basis.eigenvalues[:self.mode_cut]
        d = np.sqrt(1.0 + self.h * self.h * lam)
        if self.kind == "diagonal":
            return np.diag(d - self.payload)
        if self.kind == "blocks":
            out = np.zeros((self.mode_cut, self.mode_cut))
            at = 0
            for m, matrix, mult in self.payload:
                size = len(matrix)
                degrees = np.arange(m, m + size)
                d_block = np.sqrt(1.0 + self.h * self.h
                                  * degrees * (degrees + 1.0))
                gram = np.diag(d_block) - matrix
                for _ in range(mult):
                    out[at:at + size, at:at + size] = gram
                    at += size
            return out
        return np.diag(d) - self.payload


def count_negative(operator, zero_tol=ZERO_TOL):
    """Count eigenvalues < -zero_tol; |eigenvalue| <= zero_tol is borderline."""
    values = operator.eigenvalues()
    negative = int(np.sum(values < -zero_tol))
    borderline = int(np.sum(np.abs(values) <= zero_tol))
    return NegativeCount(negative, borderline)


def _mode_cut_index(eigenvalues, threshold):
    """First section boundary whose last retained eigenvalue >= threshold,
    extended so a degenerate cluster is never split."""
    cut = int(np.searchsorted(eigenvalues, threshold, side="left")) + 1
    if cut > len(eigenvalues):
        raise InsufficientSpectrumError(
            f"basis top {eigenvalues[-1]:.6g} below mode-cut threshold "
            f"{threshold:.6g}")
    while cut < len(eigenvalues) and eigenvalues[cut] == eigenvalues[cut - 1]:
        cut += 1
    return cut


def build_operator(basis, field, h, surface=None, cut_factor=CUT_FACTOR):
    """Assemble the finite model of the counting operator at h.

    Constant damping yields the exact diagonal; damping affine along the
    z-axis on the exact sphere splits into per-order blocks; anything else
    goes through tabulated mode values.  The retained section extends to
    ``cut_factor`` times the ellipticity threshold (constant damping needs
    no tail at all, so there only the threshold itself must be resolved).
    """
    if h <= 0.0:
        raise UsageError(f"semiclassical parameter must be positive, got {h}")
    if field.kind != "constant" and surface is None:
        raise UsageError("variable damping needs the surface for its range")
    constants = constants_for(field, surface)
    lam_star = constants.ellipticity_threshold(h)
    lam = basis.eigenvalues

    if field.kind == "constant":
        gamma0 = max(field.value, 1.0 / field.value)
        basis.require_top(lam_star, context=f"counting at h = {h:g}")
        if lam_star > basis.trusted_horizon:
            raise InsufficientSpectrumError(
                f"threshold {lam_star:.6g} beyond the trusted horizon "
                f"{basis.trusted_horizon:.6g}")
        cut = _mode_cut_index(lam, min(cut_factor * lam_star, lam[-1]))
        diag = np.sqrt(1.0 + h * h * lam[:cut]) - gamma0
        return GalerkinOperator(h, basis, cut, "diagonal", diag,
                                gamma_label=f"constant {gamma0:g}")

    need = cut_factor * lam_star
    basis.require_top(need, context=f"counting at h = {h:g}")
    if lam_star > basis.trusted_horizon:
        raise InsufficientSpectrumError(
            f"threshold {lam_star:.6g} beyond the trusted horizon "
            f"{basis.trusted_horizon:.6g}")
    cut = _mode_cut_index(lam, need)

    affine = field.effective_affine(surface) if surface is not None else None
    if (affine is not None and basis.source == "exact-sphere"
            and abs(abs(affine[2][2]) - 1.0) < 1e-14):
        offset, slope, axis = affine
        signed_slope = slope * axis[2]
        max_degree = int(basis.degrees[cut - 1])

        def profile(t):
            base = offset + signed_slope * t
            return np.maximum(base, 1.0 / base)

        moment_blocks = axis_moment_blocks(max_degree, profile)
        blocks = []
        degrees = np.arange(max_degree + 1)
        d_full = np.sqrt(1.0 + h * h * degrees * (degrees + 1.0))
        for m in range(max_degree + 1):
            gram = moment_blocks[m]
            gram = 0.5 * (gram + gram.T)
            block = np.diag(d_full[m:]) - gram
            blocks.append((m, block, 1 if m == 0 else 2))
        return GalerkinOperator(h, basis, (max_degree + 1) ** 2, "blocks",
                                blocks, gamma_label="axis-affine")

    if basis.modes is None:
        if basis.source == "exact-sphere":
            _tabulate_sphere_modes(basis)
        else:
            raise UsageError(
                "dense assembly needs tabulated modes on the basis")
    gamma_values = field.effective(basis.nodes)
    modes = basis.modes[:, :cut]
    gram = (modes * (basis.mass * gamma_values)[:, None]).T @ modes
    gram = 0.5 * (gram + gram.T)
    matrix = np.diag(np.sqrt(1.0 + h * h * lam[:cut])) - gram
    return GalerkinOperator(h, basis, cut, "dense", matrix,
                            gamma_label=field.kind)


# ----------------------------------------------------------------------
# Weyl prediction
# ----------------------------------------------------------------------

def weyl_coefficient(surface, field):
    """(1/4 pi) * integral over the surface of (gamma0^2 - 1)."""
    def integrand(points):
        gamma0 = field.effective(points)
        return gamma0 * gamma0 - 1.0

    if hasattr(surface, "integrate") and hasattr(surface, "charts"):
        total = surface.integrate(integrand)
    else:
        total = surface.integrate(integrand(surface.vertices))
    return float(total) / (4.0 * np.pi)


def weyl_prediction(surface, field, r):
    """The leading Weyl count coefficient * r^2."""
    if np.any(np.asarray(r) <= 0.0):
        raise UsageError("radius must be positive")
    return weyl_coefficient(surface, field) * np.asarray(r, dtype=float) ** 2


# ----------------------------------------------------------------------
# scans and reports
# ----------------------------------------------------------------------

@dataclass
class CountReport:
    """Counts, predictions and fit diagnostics over an r grid."""

    r_grid: np.ndarray
    n_scalar: np.ndarray
    n_system: np.ndarray
    borderline: np.ndarray
    coefficient: float
    mode_cuts: np.ndarray
    fitted_coefficient: float = None
    fitted_exponent: float = None
    stability_delta: int = None
    gamma_label: str = ""
    basis_source: str = ""

    def weyl(self):
        return self.coefficient * self.r_grid ** 2

    @property
    def truncation_stable(self):
        return None if self.stability_delta is None \
            else self.stability_delta == 0

    def gates(self):
        """Pass/fail map for the scan invariants; None = not applicable."""
        exponent_gate = None
        if self.fitted_exponent is not None:
            exponent_gate = bool(1.9 <= self.fitted_exponent <= 2.1)
        return {
            "monotone": bool(np.all(np.diff(self.n_scalar) >= 0)),
            "truncation_stable": self.truncation_stable,
            "exponent_in_window": exponent_gate,
        }

    def passed(self):
        return all(value is not False for value in self.gates().values())

    def to_csv(self):
        lines = ["r,N_scalar,N_system,W,borderline"]
        weyl = self.weyl()
        for i, r in enumerate(self.r_grid):
            lines.append("%.17g,%d,%d,%.17g,%d" % (
                r, self.n_scalar[i], self.n_system[i], weyl[i],
                self.borderline[i]))
        return "\n".join(lines) + "\n"

    def to_json(self, config=None, version=""):
        payload = {
            "r": [float(r) for r in self.r_grid],
            "N_scalar": [int(n) for n in self.n_scalar],
            "N_system": [int(n) for n in self.n_system],
            "W": [float(w) for w in self.weyl()],
            "borderline": [int(b) for b in self.borderline],
            "coefficient": float(self.coefficient),
            "fit": {
                "coefficient": None if self.fitted_coefficient is None
                else float(self.fitted_coefficient),
                "exponent": None if self.fitted_exponent is None
                else float(self.fitted_exponent),
            },
            "truncation": {
                "mode_cuts": [int(c) for c in self.mode_cuts],
                "stability_delta": None if self.stability_delta is None
                else int(self.stability_delta),
                "stable": self.truncation_stable,
            },
            "gates": self.gates(),
            "gamma": self.gamma_label,
            "basis_source": self.basis_source,
            "config": config or {},
            "version": version,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _fit_powers(r_grid, counts):
    """Least-squares diagnostics: N ~ c r^2 on the whole grid, log-log slope
    on the top half (slope only when the grid spans a factor >= 3 in r)."""
    r = np.asarray(r_grid, dtype=float)
    n = np.asarray(counts, dtype=float)
    coefficient = None
    if np.any(n > 0):
        coefficient = float(np.sum(n * r * r) / np.sum(r ** 4))
    exponent = None
    if len(r) >= 2 and r[-1] / r[0] >= 3.0:
        half = len(r) // 2
        rr, nn = r[half:], n[half:]
        keep = nn > 0
        if np.sum(keep) >= 2:
            slope = np.polyfit(np.log(rr[keep]), np.log(nn[keep]), 1)[0]
            exponent = float(slope)
    return coefficient, exponent


def scan(surface, field, r_grid, basis, cut_factor=CUT_FACTOR,
         zero_tol=ZERO_TOL):
    """Count negative modes over an ascending r grid and fit the growth.

    The truncation-stability recount enlarges the mode cut by 50%; if the
    basis cannot support the recount the stability delta is left undefined
    rather than failing the scan.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or len(r_grid) == 0:
        raise UsageError("r grid must be a nonempty 1-d array")
    if np.any(np.diff(r_grid) <= 0.0):
        raise UsageError("r grid must be strictly ascending")

    n_scalar, borderline, cuts = [], [], []
    for r in r_grid:
        operator = build_operator(basis, field, 1.0 / r, surface=surface,
                                  cut_factor=cut_factor)
        outcome = count_negative(operator, zero_tol=zero_tol)
        n_scalar.append(outcome.negative)
        borderline.append(outcome.borderline)
        cuts.append(operator.mode_cut)

    stability_delta = None
    try:
        deltas = []
        for i, r in enumerate(r_grid):
            operator = build_operator(basis, field, 1.0 / r, surface=surface,
                                      cut_factor=cut_factor * STABILITY_FACTOR)
            deltas.append(abs(count_negative(operator, zero_tol=zero_tol).negative
                              - n_scalar[i]))
        stability_delta = int(max(deltas))
    except InsufficientSpectrumError:
        pass

    n_scalar = np.asarray(n_scalar, dtype=np.int64)
    coefficient, exponent = _fit_powers(r_grid, n_scalar)
    return CountReport(
        r_grid=r_grid,
        n_scalar=n_scalar,
        n_system=2 * n_scalar,
        borderline=np.asarray(borderline, dtype=np.int64),
        coefficient=weyl_coefficient(surface, field),
        mode_cuts=np.asarray(cuts, dtype=np.int64),
        fitted_coefficient=coefficient,
        fitted_exponent=exponent,
        stability_delta=stability_delta,
        gamma_label=getattr(field, "kind", ""),
        basis_source=basis.source,
    )


# ----------------------------------------------------------------------
# monotonicity probe
# ----------------------------------------------------------------------

@dataclass
class BranchEvent:
    """One in-band finite-difference slope along a tracked branch."""

    block: int
    branch: int
    h: float
    mu: float
    slope: float


@dataclass
class ProbeReport:
    h_grid: np.ndarray
    delta: float
    eps: float
    events: list
    skipped: int
    violations: list = dataclass_field(default_factory=list)

    @property
    def min_slope(self):
        return min((e.slope for e in self.events), default=None)

    @property
    def max_slope(self):
        return max((e.slope for e in self.events), default=None)

    def passed(self):
        return not self.violations


def _operator_spectra(basis, field, h_values, surface, cut_factor):
    """Eigenvalues and eigenvectors per h, in fixed-size per-block layout."""
    operators = [build_operator(basis, field, h, surface=surface,
                                cut_factor=cut_factor) for h in h_values]
    kinds = {op.kind for op in operators}
    if len(kinds) != 1:
        raise UsageError("operator representation changed across the window")
    kind = kinds.pop()
    sizes = {op.mode_cut for op in operators}
    if len(sizes) != 1:
        # keep the smallest common section so branches stay comparable
        cut = min(sizes)
    else:
        cut = sizes.pop()

    spectra = []
    if kind == "diagonal":
        for op in operators:
            values = op.payload[:cut]
            spectra.append([(np.asarray(values), np.eye(len(values)))])
        return spectra
    if kind == "blocks":
        common = min(len(op.payload) for op in operators)
        # sections may grow with 1/h; compare equal-size leading blocks
        block_sizes = [min(len(op.payload[b][1]) for op in operators)
                       for b in range(common)]
        for op in operators:
            per_block = []
            for b in range(common):
                size = block_sizes[b]
                values, vectors = eigh(op.payload[b][1][:size, :size])
                per_block.append((values, vectors))
            spectra.append(per_block)
        return spectra
    for op in operators:
        values, vectors = eigh(op.payload[:cut, :cut])
        spectra.append([(values, vectors)])
    return spectra


def monotonicity_probe(basis, field, h_window, surface=None, steps=7,
                       cut_factor=CUT_FACTOR, overlap=TRACK_OVERLAP):
    """Check h * dmu/dh > 0 for all branches inside the band [-delta, delta].

    Branches are tracked across the h grid by maximal eigenvector overlap
    (assignment problem on |V_a^T V_b|); pairs with best overlap below the
    threshold are skipped and counted.  Central differences at interior grid
    points give the slopes; a slope below eps/4 (or above four times the
    empirical maximum) is recorded as a violation.
    """
    h_lo, h_hi = float(h_window[0]), float(h_window[1])
    if not 0.0 < h_lo < h_hi:
        raise UsageError("h window must satisfy 0 < h_lo < h_hi")
    constants = constants_for(field, surface)
    h_grid = np.linspace(h_lo, h_hi, int(steps))

    spectra = _operator_spectra(basis, field, h_grid, surface, cut_factor)
    blocks = len(spectra[0])
    events = []
    skipped = 0

    for block in range(blocks):
        size = len(spectra[0][block][0])
        # permutation[i] maps branch id -> eigen index at grid point i
        permutations = [np.arange(size)]
        for i in range(1, len(h_grid)):
            _, prev_vectors = spectra[i - 1][block]
            _, next_vectors = spectra[i][block]
            overlap_matrix = np.abs(prev_vectors.T @ next_vectors)
            rows, cols = linear_sum_assignment(-overlap_matrix)
            mapping = np.empty(size, dtype=np.int64)
            good = np.ones(size, dtype=bool)
            for row, col in zip(rows, cols):
                mapping[row] = col
                if overlap_matrix[row, col] <= overlap:
                    good[row] = False
            previous = permutations[-1]
            current = mapping[previous]
            lost = ~good[previous]
            skipped += int(np.sum(lost))
            current = np.where(lost, -1, current)
            current = np.where(previous < 0, -1, current)
            permutations.append(current)

        for i in range(1, len(h_grid) - 1):
            before, here, after = (permutations[i - 1], permutations[i],
                                   permutations[i + 1])
            mu_prev = spectra[i - 1][block][0]
            mu_here = spectra[i][block][0]
            mu_next = spectra[i + 1][block][0]
            for branch in range(size):
                if before[branch] < 0 or here[branch] < 0 or after[branch] < 0:
                    continue
                mu = mu_here[here[branch]]
                if abs(mu) > constants.delta:
                    continue
                dh = h_grid[i + 1] - h_grid[i - 1]
                slope = (h_grid[i] * (mu_next[after[branch]]
                                      - mu_prev[before[branch]]) / dh)
                events.append(BranchEvent(block, branch, float(h_grid[i]),
                                          float(mu), float(slope)))

    report = ProbeReport(h_grid=h_grid, delta=constants.delta,
                         eps=constants.eps, events=events, skipped=skipped)
    if events:
        top = 4.0 * max(e.slope for e in events)
        floor = constants.eps / 4.0
        report.violations = [e for e in events
                             if e.slope < floor or e.slope > top]
    return report
