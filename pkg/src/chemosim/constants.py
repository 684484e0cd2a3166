"""Explicit constants of the boundedness/convergence theory and the regime
classifier.

For growth a, damping b u^sigma (a, b > 0, sigma > 1) and motility gamma the
harness computes:

    u_star = (a/b)^(1/(sigma-1))                 positive equilibrium
    Q      = ||(I-Lap)^-1 u0||_inf
             + (sigma-1)/(gamma(0) b^(1/(sigma-1)))
               * ((a + 2 gamma(0))/sigma)^(sigma/(sigma-1))
                                                 ceiling for v along the flow
    q      = 2/(3-sigma) on sigma in (1,2), else 2
    K1     = 1 for sigma >= 2, else
             (2|O|)^((sigma+1)/(3-sigma)) 2^(2-sigma)/(sigma-1)
             + 2^(4/(3-sigma)) (2|O|)^(2-sigma) / (1 - 2^-(sigma-1))
    K2     = xi^2 for sigma < 2, else 1
    b2     = (K1 K2 / 4)^((sigma-1)/2) a^(-(sigma-3)/2)
             * (sup_{v>=0} |gamma'|^2/gamma)^((sigma-1)/2)
    kappa(p, b, sigma) = (G(p)^(2(p+1)) R(p)^(p+1) Q(b,sigma)^(p+1) + 1)
                         * sup_{0<=v<=Q} |gamma'|^2/gamma
    b1     = floor(n/2) * kappa(floor(n/2)+1, 1, 2) / 2 + 1

xi is the Poincare-Sobolev constant in ||v - vbar||_{L^d} <= xi ||grad v||_{L^2}
with d = q/(q-1); G(p) and R(p) are abstract interpolation / elliptic
regularity constants with no closed form, so they are estimated by numerical
maximization of their defining Rayleigh quotients over grid fields. Every
quantity downstream of a numerical maximization is a LOWER estimate of the
true constant and is flagged as such; regime comparisons against b1 are
therefore provisional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .fields import (Grid, ScalarField, integrate_values, laplacian_values,
                     linf_norm, quadrature_weights)
from .helmholtz import solve_helmholtz, solve_helmholtz_values, stencil_eigenvalues
from .motility import Motility


# ---------------------------------------------------------------------------
# closed-form constants
# ---------------------------------------------------------------------------

def equilibrium(a: float, b: float, sigma: float) -> float:
    """u_star = (a/b)^(1/(sigma-1))."""
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    return (a / b) ** (1.0 / (sigma - 1.0))


def compute_Q(u0: ScalarField, params) -> float:
    """Ceiling for the signal concentration along the flow (depends on u0)."""
    if u0.values.min() < 0:
        raise ValueError("u0 must be nonnegative")
    a, b, sigma = params.a, params.b, params.sigma
    gamma0 = float(params.motility.gamma(0.0))
    first = linf_norm(solve_helmholtz(u0))
    second = (sigma - 1.0) / (gamma0 * b ** (1.0 / (sigma - 1.0))) \
        * ((a + 2.0 * gamma0) / sigma) ** (sigma / (sigma - 1.0))
    return first + second


def compute_q(sigma: float) -> float:
    """Interpolation exponent: 2/(3-sigma) for sigma in (1,2), else 2."""
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    if sigma < 2:
        return 2.0 / (3.0 - sigma)
    return 2.0


def compute_K1(sigma: float, omega_measure: float) -> float:
    if omega_measure <= 0:
        raise ValueError("domain measure must be positive")
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    if sigma >= 2:
        return 1.0
    two_omega = 2.0 * omega_measure
    first = two_omega ** ((sigma + 1.0) / (3.0 - sigma)) * 2.0 ** (2.0 - sigma) / (sigma - 1.0)
    second = 2.0 ** (4.0 / (3.0 - sigma)) * two_omega ** (2.0 - sigma) \
        / (1.0 - 2.0 ** (-(sigma - 1.0)))
    return first + second


def compute_K2(sigma: float, xi: float) -> float:
    if xi <= 0:
        raise ValueError("xi must be positive")
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    return xi * xi if sigma < 2 else 1.0


def compute_b2(a: float, sigma: float, motility: Motility, K1: float, K2: float) -> float:
    """Damping threshold for monotone energy decay."""
    if a <= 0 or K1 <= 0 or K2 <= 0:
        raise ValueError("inputs must be positive")
    sup_inf = motility.sup_ratio(0.0, math.inf)
    half = 0.5 * (sigma - 1.0)
    return (K1 * K2 / 4.0) ** half * a ** (-(sigma - 3.0) / 2.0) * sup_inf ** half


# ---------------------------------------------------------------------------
# discrete Sobolev machinery (same stencils as the solver)
# ---------------------------------------------------------------------------

def _axis_central_diff(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Central first difference with mirror ghosts (boundary derivative 0)."""
    h = grid.spacing[axis]
    v = np.moveaxis(values, axis, 0)
    out = np.zeros_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def gradient_magnitude(values: np.ndarray, grid: Grid) -> np.ndarray:
    parts = [_axis_central_diff(values, grid, ax) for ax in range(grid.dim)]
    if grid.dim == 1:
        return np.abs(parts[0])
    return np.sqrt(parts[0] ** 2 + parts[1] ** 2)


def _axis_second_diff(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    h = grid.spacing[axis]
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    d = np.diff(v, axis=0)
    inv_h2 = 1.0 / (h * h)
    out[1:-1] = (d[1:] - d[:-1]) * inv_h2
    out[0] = 2.0 * d[0] * inv_h2
    out[-1] = -2.0 * d[-1] * inv_h2
    return np.moveaxis(out, 0, axis)


def hessian_magnitude(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Frobenius norm of the stencil Hessian (mixed term doubled in 2D)."""
    if grid.dim == 1:
        return np.abs(_axis_second_diff(values, grid, 0))
    fxx = _axis_second_diff(values, grid, 0)
    fyy = _axis_second_diff(values, grid, 1)
    fxy = _axis_central_diff(_axis_central_diff(values, grid, 0), grid, 1)
    return np.sqrt(fxx ** 2 + fyy ** 2 + 2.0 * fxy ** 2)


def _lp_values(values: np.ndarray, grid: Grid, p: float) -> float:
    return integrate_values(np.abs(values) ** p, grid) ** (1.0 / p)


def sobolev_w2p_norm(values: np.ndarray, grid: Grid, p: float) -> float:
    """(||f||_p^p + ||grad f||_p^p + ||D2 f||_p^p)^(1/p) from stencil operators."""
    total = integrate_values(np.abs(values) ** p, grid)
    total += integrate_values(gradient_magnitude(values, grid) ** p, grid)
    total += integrate_values(hessian_magnitude(values, grid) ** p, grid)
    return float(total ** (1.0 / p))


# ---------------------------------------------------------------------------
# Poincare constant: Rayleigh maximization + eigenvalue cross-check
# ---------------------------------------------------------------------------

def discrete_neumann_lambda1(grid: Grid) -> float:
    """Smallest nonzero eigenvalue of the mirror-ghost Neumann Laplacian."""
    lam = stencil_eigenvalues(grid) - 1.0
    flat = np.sort(lam.ravel())
    return float(flat[1])


@dataclass
class ExtremalEstimate:
    value: float
    best_field: ScalarField
    n_starts: int
    estimated: bool = True


def _structured_starts(grid: Grid) -> list[np.ndarray]:
    axes = grid.meshgrid()
    starts = []
    for ax in range(grid.dim):
        starts.append(np.cos(np.pi * axes[ax] / grid.lengths[ax]))
    if grid.dim == 2:
        starts.append(np.cos(np.pi * axes[0] / grid.lengths[0])
                      * np.cos(np.pi * axes[1] / grid.lengths[1]))
    return starts


def poincare_search(grid: Grid, q: float, n_starts: int = 8, seed: int = 0) -> ExtremalEstimate:
    """Maximize ||f - mean f||_{L^d} / ||grad f||_{L^2}, d = q/(q-1), over
    mean-zero grid fields (projected L-BFGS ascent, multi-start).

    The returned value is a lower estimate of the true constant; for d = 2 the
    maximizer is the first nonzero Neumann eigenvector, so the result matches
    1/sqrt(lambda_1) to optimizer precision.
    """
    if not 1 < q <= 2:
        raise ValueError("q must lie in (1, 2]")
    d = q / (q - 1.0)
    n = grid.dim
    d_limit = math.inf if n <= 2 else 2.0 * n / (n - 2.0)
    if not 1 <= d < d_limit:
        raise ValueError(f"dual exponent d={d:.6g} outside admissible [1, {d_limit:.6g})")

    w = quadrature_weights(grid)
    wsum = float(w.sum())

    def split(x):
        f = x - (w * x).sum() / wsum
        ld = integrate_values(np.abs(f) ** d, grid) ** (1.0 / d)
        neg_lap = -laplacian_values(f, grid)
        dirichlet = float((w * f * neg_lap).sum())
        return f, ld, neg_lap, dirichlet

    def objective(x):
        f, ld, neg_lap, dirichlet = split(x)
        if ld <= 0 or dirichlet <= 0:
            return 1e6, np.zeros(x.size)
        val = -(math.log(ld) - 0.5 * math.log(dirichlet))
        g_f = w * np.abs(f) ** (d - 1.0) * np.sign(f) / ld ** d - w * neg_lap / dirichlet
        g_x = g_f - w * g_f.sum() / wsum
        return val, -g_x.ravel()

    rng = np.random.default_rng(seed)
    starts = [rng.standard_normal(grid.shape) for _ in range(n_starts)]
    starts += _structured_starts(grid)

    best_val = -math.inf
    best_field = None
    for x0 in starts:
        res = minimize(lambda x: objective(x.reshape(grid.shape)),
                       x0.ravel(), jac=True, method="L-BFGS-B",
                       options={"maxiter": 2000, "ftol": 1e-16, "gtol": 1e-12})
        # rate both the polished point and the raw start; keep the best seen
        for candidate in (res.x.reshape(grid.shape), x0):
            f, ld, _, dirichlet = split(candidate)
            if dirichlet <= 0 or ld <= 0:
                continue
            val = ld / math.sqrt(dirichlet)
            if val > best_val:
                best_val = val
                best_field = f / math.sqrt(dirichlet)
    if best_field is None:
        raise RuntimeError("poincare search failed to produce a nondegenerate field")
    return ExtremalEstimate(best_val, ScalarField(grid, best_field), len(starts))


def estimate_poincare(grid: Grid, q: float, n_starts: int = 8, seed: int = 0) -> float:
    return poincare_search(grid, q, n_starts, seed).value


# ---------------------------------------------------------------------------
# interpolation / elliptic-regularity constants (numerical lower estimates)
# ---------------------------------------------------------------------------

def _probe_fields(grid: Grid, rng: np.ndarray, n_random: int) -> list[np.ndarray]:
    """Random rough, random smoothed, and cosine-mode probe fields."""
    fields = list(_structured_starts(grid))
    for _ in range(n_random):
        rough = rng.standard_normal(grid.shape)
        fields.append(rough)
        fields.append(solve_helmholtz_values(rough, grid))
        fields.append(np.abs(rough) + 0.1)
    return fields


def estimate_interpolation_constant(grid: Grid, p: int, n_random: int = 12,
                                    seed: int = 0) -> ExtremalEstimate:
    """Largest observed ||grad f||_{2(p+1)} / (||f||_{W^{2,p+1}}^(1/2) ||f||_inf^(1/2))."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = np.random.default_rng(seed)
    r = 2.0 * (p + 1.0)
    best, best_field = -math.inf, None
    n = 0
    for f in _probe_fields(grid, rng, n_random):
        gmag = gradient_magnitude(f, grid)
        if not gmag.any():
            continue  # constants have zero gradient and never attain the sup
        n += 1
        num = _lp_values(gmag, grid, r)
        den = math.sqrt(sobolev_w2p_norm(f, grid, p + 1.0)) * math.sqrt(np.abs(f).max())
        val = num / den
        if val > best:
            best, best_field = val, f
    return ExtremalEstimate(best, ScalarField(grid, best_field), n)


def estimate_regularity_constant(grid: Grid, p: int, n_random: int = 12,
                                 seed: int = 0) -> ExtremalEstimate:
    """Largest observed ||(I-Lap)^-1 g||_{W^{2,p}} / ||g||_{L^p}."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = np.random.default_rng(seed)
    best, best_field = -math.inf, None
    n = 0
    for g in _probe_fields(grid, rng, n_random):
        den = _lp_values(g, grid, float(p))
        if den == 0:
            continue
        n += 1
        v = solve_helmholtz_values(g, grid)
        val = sobolev_w2p_norm(v, grid, float(p)) / den
        if val > best:
            best, best_field = val, g
    return ExtremalEstimate(best, ScalarField(grid, best_field), n)


def _kappa(p: int, b: float, sigma: float, u0: ScalarField, params, G: float, R: float) -> float:
    from .stepper import Parameters  # local import to avoid a cycle at module load
    sub = Parameters(params.a, b, sigma, params.motility)
    Q = compute_Q(u0, sub)
    return (G ** (2.0 * (p + 1.0)) * R ** (p + 1.0) * Q ** (p + 1.0) + 1.0) \
        * params.motility.sup_ratio(0.0, Q)


def estimate_kappa_b1(u0: ScalarField, params, seed: int = 0) -> tuple[float, float]:
    """Numerical (lower) estimates of kappa at p = floor(n/2)+1 with the actual
    (b, sigma), and of b1 = floor(n/2) kappa(floor(n/2)+1, 1, 2)/2 + 1."""
    grid = u0.grid
    n = grid.dim
    p = n // 2 + 1
    G = estimate_interpolation_constant(grid, p, seed=seed).value
    R = estimate_regularity_constant(grid, p, seed=seed).value
    kappa_actual = _kappa(p, params.b, params.sigma, u0, params, G, R)
    kappa_12 = _kappa(p, 1.0, 2.0, u0, params, G, R)
    b1 = (n // 2) * kappa_12 / 2.0 + 1.0
    return kappa_actual, b1


# ---------------------------------------------------------------------------
# report assembly and regime classification
# ---------------------------------------------------------------------------

@dataclass
class ConstantsReport:
    u_star: float
    Q: float
    q_exponent: float
    K1: float
    K2: float
    xi: float
    b2: float
    kappa_est: float
    b1_est: float
    sup_ratio_Q: float
    sup_ratio_inf: float
    convexity_inf: float
    estimated_flags: dict[str, bool] = field(default_factory=dict)


def build_report(u0: ScalarField, params, poincare_starts: int = 8, seed: int = 0) -> ConstantsReport:
    """All explicit constants for one configuration.

    xi for sigma >= 2 is the exact discrete eigenvalue route 1/sqrt(lambda_1)
    (d = 2); for sigma < 2 it is the multi-start Rayleigh estimate at
    d = q/(q-1) and is flagged estimated.
    """
    grid = u0.grid
    a, b, sigma = params.a, params.b, params.sigma
    motility = params.motility
    u_star = equilibrium(a, b, sigma)
    Q = compute_Q(u0, params)
    q = compute_q(sigma)
    K1 = compute_K1(sigma, grid.measure)
    if sigma >= 2:
        xi = 1.0 / math.sqrt(discrete_neumann_lambda1(grid))
        xi_estimated = False
    else:
        xi = estimate_poincare(grid, q, n_starts=poincare_starts, seed=seed)
        xi_estimated = True
    K2 = compute_K2(sigma, xi)
    kappa_est, b1_est = estimate_kappa_b1(u0, params, seed=seed)
    return ConstantsReport(
        u_star=u_star,
        Q=Q,
        q_exponent=q,
        K1=K1,
        K2=K2,
        xi=xi,
        b2=compute_b2(a, sigma, motility, K1, K2),
        kappa_est=kappa_est,
        b1_est=b1_est,
        sup_ratio_Q=motility.sup_ratio(0.0, Q),
        sup_ratio_inf=motility.sup_ratio(0.0, math.inf),
        convexity_inf=motility.inf_convexity_ratio(),
        estimated_flags={"xi": xi_estimated, "kappa_est": True, "b1_est": True},
    )


_REPORT_FIELDS = ("u_star", "Q", "q_exponent", "K1", "K2", "xi", "b2", "kappa_est",
                  "b1_est", "sup_ratio_Q", "sup_ratio_inf", "convexity_inf")


def report_lines(report: ConstantsReport) -> list[str]:
    """Flat key=value block, estimated constants suffixed with _estimated=true."""
    lines = [f"{name}={getattr(report, name):.17g}" for name in _REPORT_FIELDS]
    lines += [f"{name}_estimated=true" for name in _REPORT_FIELDS
              if report.estimated_flags.get(name)]
    return lines


@dataclass
class RegimeResult:
    kind: str  # "converges" | "bounded" | "unclassified"
    theorem: str | None
    case: int | None
    detail: str
    provisional: bool = False

    @property
    def label(self) -> str:
        if self.kind == "unclassified":
            return "Unclassified"
        return f"Theorem {self.theorem} case ({self.case})"


def classify_regime(n: int, params, motility: Motility, report: ConstantsReport) -> RegimeResult:
    """Match (n, a, b, sigma, gamma) against the boundedness theorem
    (Theorem 1.1, cases 1-3) and the convergence theorem (Theorem 1.2,
    cases 1-4). Comparisons against b1 use the numerical lower estimate and
    are marked provisional.
    """
    if n < 1:
        raise ValueError("n must be a positive dimension")
    b, sigma = params.b, params.sigma
    b1, b2 = report.b1_est, report.b2
    conv = report.convexity_inf

    if n <= 2 and sigma > 1 and b > b2:
        return RegimeResult("converges", "1.2", 1, f"b={b:.6g} > b2={b2:.6g}")
    if n >= 3 and sigma > 2 and b > b2:
        return RegimeResult("converges", "1.2", 2, f"b={b:.6g} > b2={b2:.6g}")
    if n >= 3 and sigma == 2 and b > max(b1, b2):
        return RegimeResult("converges", "1.2", 3,
                            f"b={b:.6g} > max(b1={b1:.6g} [estimated], b2={b2:.6g})",
                            provisional=True)
    if n >= 3 and 2.0 - 2.0 / n < sigma < 2 and b > b2 and conv > n / 2.0:
        return RegimeResult("converges", "1.2", 4,
                            f"b={b:.6g} > b2={b2:.6g}, convexity inf {conv:.6g} > n/2={n / 2:.3g}")
    if n <= 2 and sigma > 1:
        return RegimeResult("bounded", "1.1", 1, f"n={n} <= 2, sigma={sigma:.6g} > 1")
    if n >= 3 and sigma > 2:
        return RegimeResult("bounded", "1.1", 2, f"n={n} >= 3, sigma={sigma:.6g} > 2")
    if n >= 3 and sigma == 2 and b > b1:
        return RegimeResult("bounded", "1.1", 3,
                            f"b={b:.6g} > b1={b1:.6g} [estimated]", provisional=True)
    return RegimeResult("unclassified", None, None,
                        "no boundedness or convergence case applies")
