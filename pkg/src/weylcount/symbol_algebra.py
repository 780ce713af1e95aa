"""Pointwise symbol calculus on the cotangent bundle of a closed surface.

Everything here is a plain function of a chart point and a cotangent vector:
the tangential covector realization ``beta`` with its squared length ``r0``,
the elliptic root ``rho`` (the branch of sqrt(z^2 - r0) in the upper half
plane), the rank-one matrix B = beta beta^T, the boundary symbol
m = (rho I + B/rho)/z and its partner m1 = -m, the orthogonal frame U that
diagonalizes B, the dispersion matrix sqrt(1+h^2 r0)(I - h^2 B/(1+h^2 r0))
- gamma0 I, and the leading-order transport solutions on the electric and
magnetic sides.

``identity_suite`` drives all of the algebraic identities over a seeded batch
of random samples and reports the worst residual per identity; the CLI
exposes it as ``verify-symbols``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BranchError, ChartDegeneracyError, UsageError

SAMPLE_SEED = 42
DEFAULT_SAMPLES = 1000
TRANSITION_FD_STEP = 1e-3
MIN_XI_NORM = 1e-6


@dataclass
class CotangentSample:
    """A chart point together with a cotangent vector and derived frames.

    ``beta`` is the ambient realization of the covector (tangential, chart
    independent); ``r0 = <beta, beta>`` is the inverse-metric quadratic form.
    """

    surface: object
    chart_index: int
    x: np.ndarray
    xi: np.ndarray
    point: np.ndarray = field(init=False)
    nu: np.ndarray = field(init=False)
    tangent_u: np.ndarray = field(init=False)
    tangent_v: np.ndarray = field(init=False)
    beta: np.ndarray = field(init=False)
    r0: float = field(init=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(2)
        self.xi = np.asarray(self.xi, dtype=float).reshape(2)
        chart = self.surface.charts[self.chart_index]
        u, v = self.x
        self.point = chart.point(u, v)
        self.nu = chart.normal(u, v)
        self.tangent_u, self.tangent_v = chart.tangents(u, v)
        dual_u, dual_v = chart.dual_frame(u, v)
        self.beta = self.xi[0] * dual_u + self.xi[1] * dual_v
        self.r0 = float(self.beta @ self.beta)

    @property
    def chart(self):
        return self.surface.charts[self.chart_index]

    @property
    def xi_norm(self):
        return float(np.sqrt(self.r0))

    def inverse_metric_form(self):
        """xi^T g^{-1} xi from the 2x2 chart metric (cross-check for r0)."""
        gram = self.chart.metric(*self.x)
        return float(self.xi @ np.linalg.solve(gram, self.xi))


def sample_at(surface, chart_index, x, xi):
    return CotangentSample(surface, int(chart_index), x, xi)


def random_samples(surface, count, seed=SAMPLE_SEED, margin=0.05):
    """Seeded batch of nondegenerate cotangent samples, one chart each.

    Points are drawn uniformly in the chart parameter rectangle (shrunk by
    ``margin`` of its width on both ends), covectors from a unit normal.
    """
    count = int(count)
    if count < 1:
        raise UsageError("sample count must be positive")
    rng = np.random.default_rng(seed)
    samples = []
    while len(samples) < count:
        index = int(rng.integers(len(surface.charts)))
        chart = surface.charts[index]
        (ulo, uhi), (vlo, vhi) = chart.domain
        du, dv = uhi - ulo, vhi - vlo
        u = rng.uniform(ulo + margin * du, uhi - margin * du)
        v = rng.uniform(vlo + margin * dv, vhi - margin * dv)
        xi = rng.standard_normal(2)
        if np.linalg.norm(xi) < MIN_XI_NORM:
            continue
        samples.append(sample_at(surface, index, (u, v), xi))
    return samples


# ----------------------------------------------------------------------
# scalar and matrix symbols
# ----------------------------------------------------------------------

def elliptic_root(z, r0):
    """The root rho of rho^2 = z^2 - r0 with Im rho > 0."""
    rho = np.sqrt(complex(z) ** 2 - float(r0) + 0j)
    if rho.imag < 0.0:
        rho = -rho
    if rho.imag <= 0.0:
        raise BranchError(
            f"branch undefined: z^2 - r0 = {complex(z)**2 - r0} is nonnegative real")
    return rho


def rank_one(sample):
    """B = beta beta^T, the rank-one symmetric PSD matrix of the sample."""
    return np.outer(sample.beta, sample.beta)


def eigenstructure(sample):
    """The three eigenpairs of B: (0, nu), (0, nu x b), (r0, b), b = beta/|beta|."""
    if sample.r0 <= MIN_XI_NORM ** 2:
        raise UsageError("eigenstructure undefined for a vanishing covector")
    b = sample.beta / np.sqrt(sample.r0)
    return [
        (0.0, sample.nu),
        (0.0, np.cross(sample.nu, b)),
        (sample.r0, b),
    ]


def diagonalizing_frame(sample):
    """Orthogonal U with columns [nu | nu x b | b]; U^T B U = diag(0, 0, r0)."""
    if sample.r0 <= MIN_XI_NORM ** 2:
        raise UsageError("frame undefined for a vanishing covector")
    b = sample.beta / np.sqrt(sample.r0)
    return np.stack([sample.nu, np.cross(sample.nu, b), b], axis=-1)


def principal_m(sample, z):
    """Boundary symbol m = (rho I + B/rho)/z; complex symmetric 3x3."""
    rho = elliptic_root(z, sample.r0)
    return (rho * np.eye(3) + rank_one(sample) / rho) / complex(z)


def principal_m1(sample, z):
    """Symbol of the swapped-side reduction; equals -m throughout the range."""
    return -principal_m(sample, z)


def m_reference_at_minus_i(sample):
    """Closed form of -m at z = -i: sqrt(1+r0) I - B / sqrt(1+r0)."""
    root = np.sqrt(1.0 + sample.r0)
    return root * np.eye(3) - rank_one(sample) / root


def dispersion_matrix(sample, h, gamma0):
    """sqrt(1+h^2 r0) (I - h^2 B / (1+h^2 r0)) - gamma0 I."""
    s = np.sqrt(1.0 + h * h * sample.r0)
    return s * np.eye(3) - (h * h) * rank_one(sample) / s - gamma0 * np.eye(3)


def dispersion_diagonal(sample, h, gamma0):
    """Eigenvalues of the dispersion matrix in the frame U."""
    s = np.sqrt(1.0 + h * h * sample.r0)
    return np.array([s - gamma0, s - gamma0, 1.0 / s - gamma0])


# ----------------------------------------------------------------------
# leading-order transport solutions
# ----------------------------------------------------------------------

@dataclass
class TransportPrincipal:
    """Leading-order transport solution for tangential boundary data g.

    ``side`` is "electric" (data nu x a00 = g) or "magnetic" (nu x b00 = g).
    """

    sample: CotangentSample
    z: complex
    g: np.ndarray
    side: str
    a00: np.ndarray
    b00: np.ndarray

    @property
    def rho(self):
        return elliptic_root(self.z, self.sample.r0)

    @property
    def psi0(self):
        """The phase gradient rho nu - beta."""
        return self.rho * self.sample.nu - self.sample.beta

    def residuals(self):
        """Max-norm residuals of the first-order system and its data row."""
        nu = self.sample.nu
        psi0 = self.psi0
        res_a = np.cross(psi0, self.a00) - self.z * self.b00
        res_b = np.cross(psi0, self.b00) + self.z * self.a00
        driven = self.a00 if self.side == "electric" else self.b00
        res_data = np.cross(nu, driven) - self.g
        return {
            "transport-a": float(np.max(np.abs(res_a))),
            "transport-b": float(np.max(np.abs(res_b))),
            "boundary-data": float(np.max(np.abs(res_data))),
        }


def transport_principal(sample, z, g, side="electric"):
    """Solve the leading-order transport system for tangential data g.

    The two sides share the same pair of cross-product equations; they differ
    only in which field carries the boundary data, and the closed forms swap
    roles under z -> -z (rho is even in z).
    """
    g = np.asarray(g, dtype=complex).reshape(3)
    nu = sample.nu.astype(complex)
    if np.abs(nu @ g) > 1e-10 * max(1.0, np.linalg.norm(g)):
        raise UsageError("transport data must be tangential: <nu, g> != 0")
    if side not in ("electric", "magnetic"):
        raise UsageError(f"unknown transport side {side!r}")
    z = complex(z)
    rho = elliptic_root(z, sample.r0)
    beta = sample.beta.astype(complex)
    psi0 = rho * nu - beta

    nu_cross_g = np.cross(nu, g)
    driven = -nu_cross_g + (nu @ np.cross(beta, g)) / rho * nu
    if side == "electric":
        a00 = driven
        b00 = np.cross(psi0, a00) / z
    else:
        b00 = driven
        a00 = -np.cross(psi0, b00) / z
    return TransportPrincipal(sample, z, g, side, a00, b00)


# ----------------------------------------------------------------------
# chart invariance
# ----------------------------------------------------------------------

def transfer_sample(sample, other_index, fd_step=TRANSITION_FD_STEP):
    """Re-express a sample in another chart, transforming xi covariantly.

    The transition Jacobian is taken by a fourth-order central difference of
    the chart transition map; covector components transform with its inverse
    transpose.  The result's beta and r0 must match the original's (global
    invariance), which the identity suite checks.
    """
    surface = sample.surface
    source = sample.chart
    target = surface.charts[other_index]
    if target.inverse is None or source.inverse is None:
        raise UsageError("both charts need inverses for a transition")

    def transition(x):
        u, v = x
        return np.asarray(target.inverse(source.point(u, v)), dtype=float)

    x_target = transition(sample.x)
    # require the image to sit well inside the target rectangle: close to its
    # polar edge the inverse map is ill-conditioned and the comparison would
    # measure roundoff amplification, not invariance
    (ulo, uhi), _ = target.domain
    interior = 0.1 * (uhi - ulo)
    if not target.contains(*x_target, tol=-interior):
        raise ChartDegeneracyError(
            f"point not interior to chart {target.name!r}")

    def near(x):
        # undo 2 pi jumps of the angular coordinate across the seam
        value = transition(x)
        return value - 2.0 * np.pi * np.round((value - x_target) / (2.0 * np.pi))

    jac = np.empty((2, 2))
    for j in range(2):
        step = np.zeros(2)
        step[j] = fd_step
        jac[:, j] = (-near(sample.x + 2 * step) + 8.0 * near(sample.x + step)
                     - 8.0 * near(sample.x - step)
                     + near(sample.x - 2 * step)) / (12.0 * fd_step)
    xi_target = np.linalg.solve(jac.T, sample.xi)
    return sample_at(surface, other_index, x_target, xi_target)


# ----------------------------------------------------------------------
# the identity suite
# ----------------------------------------------------------------------

def identity_suite(surface, samples=DEFAULT_SAMPLES, seed=SAMPLE_SEED):
    """Exercise every symbol identity over a seeded sample batch.

    Returns {"surface", "samples", "seed", "residuals": {name: max residual}}.
    The spectral parameter is drawn per sample as z = -i/(1 + i t) with
    |t| <= h^2 and h uniform in (0, 1]; gamma0 is uniform in (1.1, 5).
    """
    batch = random_samples(surface, samples, seed=seed)
    rng = np.random.default_rng(seed + 1)
    worst = {}

    def record(name, value):
        worst[name] = max(worst.get(name, 0.0), float(value))

    for sample in batch:
        h = rng.uniform(0.05, 1.0)
        t = rng.uniform(-h * h, h * h)
        z = -1j / (1.0 + 1j * t)
        gamma0 = rng.uniform(1.1, 5.0)

        record("nu-beta-orthogonal", abs(sample.nu @ sample.beta))
        record("r0-inverse-metric",
               abs(sample.r0 - sample.inverse_metric_form()))
        doubled = sample_at(surface, sample.chart_index, sample.x,
                            2.0 * sample.xi)
        record("beta-homogeneous",
               np.max(np.abs(doubled.beta - 2.0 * sample.beta)))

        matrix = rank_one(sample)
        record("B-symmetric-psd",
               max(np.max(np.abs(matrix - matrix.T)),
                   max(0.0, -np.min(np.linalg.eigvalsh(matrix))),
                   abs(np.trace(matrix) - sample.r0)))
        for value, vector in eigenstructure(sample):
            record("B-eigenstructure",
                   np.max(np.abs(matrix @ vector - value * vector)))

        frame = diagonalizing_frame(sample)
        record("U-orthogonal",
               np.linalg.norm(frame.T @ frame - np.eye(3)))
        record("U-diagonalizes-B",
               np.max(np.abs(frame.T @ matrix @ frame
                             - np.diag([0.0, 0.0, sample.r0]))))
        record("dispersion-diagonalization",
               np.max(np.abs(frame.T @ dispersion_matrix(sample, h, gamma0) @ frame
                             - np.diag(dispersion_diagonal(sample, h, gamma0)))))

        rho = elliptic_root(z, sample.r0)
        record("rho-square", abs(rho * rho - (z * z - sample.r0)))
        record("rho-branch-lower-bound",
               max(0.0, min(1.0, 0.5 * np.sqrt(1.0 + sample.r0)) - rho.imag))

        m = principal_m(sample, z)
        record("m-symmetric", np.max(np.abs(m - m.T)))
        m_at_i = principal_m(sample, -1j)
        record("m-at-minus-i",
               np.max(np.abs(-m_at_i - m_reference_at_minus_i(sample))))
        record("m1-equals-minus-m",
               np.max(np.abs(principal_m1(sample, -1j) + m_at_i)))

        g = (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        g = np.cross(sample.nu, np.cross(g, sample.nu))  # project tangential
        for side in ("electric", "magnetic"):
            solution = transport_principal(sample, z, g, side=side)
            record(f"transport-{side}",
                   max(solution.residuals().values()))

        other = 1 - sample.chart_index
        try:
            moved = transfer_sample(sample, other)
        except ChartDegeneracyError:
            pass
        else:
            record("chart-invariance",
                   max(np.max(np.abs(moved.beta - sample.beta)),
                       abs(moved.r0 - sample.r0)))

    return {
        "surface": surface.name,
        "samples": int(samples),
        "seed": int(seed),
        "residuals": {name: worst[name] for name in sorted(worst)},
    }
