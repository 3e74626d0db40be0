"""Asymptotic secure-key-rate engine for Gaussian-modulated CV-QKD.

Coherent states with Gaussian modulation, homodyne measurement, reverse
reconciliation, and an untrusted receiver: all detection loss and receiver
noise are folded into the channel and credited to the eavesdropper.  Rates
come from the standard two-mode Gaussian closed forms; an independent
brute-force route through the explicit covariance matrix (symplectic
spectrum of i Omega sigma, homodyne conditioning by Schur complement) is
provided for cross-checking.

All variances are in shot-noise units (SNU).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "LinkParams",
    "KeyRateResult",
    "CovarianceError",
    "InfeasibleError",
    "effective_transmittance",
    "channel_transmittance",
    "total_excess_noise_at_channel_input",
    "key_rate",
    "optimize_modulation_variance",
    "skr_vs_distance",
    "max_reach",
    "entropy_g",
    "covariance_matrix",
    "symplectic_eigenvalues",
    "conditional_covariance_after_homodyne",
]

NU_TOLERANCE = 1e-9


class CovarianceError(ValueError):
    """The implied Gaussian state is unphysical (symplectic eigenvalue < 1)."""


class InfeasibleError(RuntimeError):
    """No positive key rate exists under the requested constraint."""


@dataclass(frozen=True)
class LinkParams:
    """Channel and receiver parameters of the CV-QKD link."""

    distance_km: float = 10.0
    fiber_loss_db_per_km: float = 0.23
    detection_loss_db: float = 1.2
    channel_excess_noise: float = 0.0     # SNU, referred to the receiver input
    receiver_excess_noise: float = 0.00336  # SNU, referred to the receiver input
    beta: float = 0.97                    # reconciliation efficiency
    symbol_rate: float = 250e6            # symbols/s
    # where input-referred noises are divided back to the channel input:
    # "fiber" uses the fiber-only transmittance, "total" includes the
    # detection loss as well
    noise_reference: str = "fiber"

    def __post_init__(self) -> None:
        if self.distance_km < 0:
            raise ValueError(f"distance must be >= 0, got {self.distance_km}")
        if self.fiber_loss_db_per_km < 0 or self.detection_loss_db < 0:
            raise ValueError("losses must be >= 0")
        if self.channel_excess_noise < 0 or self.receiver_excess_noise < 0:
            raise ValueError("excess noises must be >= 0")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if self.symbol_rate <= 0:
            raise ValueError("symbol_rate must be > 0")
        if self.noise_reference not in ("fiber", "total"):
            raise ValueError(f"noise_reference must be 'fiber' or 'total', got {self.noise_reference!r}")


@dataclass(frozen=True)
class KeyRateResult:
    v_a: float        # modulation variance, SNU
    i_ab: float       # bits/symbol
    chi_be: float     # bits/symbol
    rate: float       # bits/symbol, beta * i_ab - chi_be
    skr: float        # bits/s
    feasible: bool = True


def channel_transmittance(link: LinkParams) -> float:
    """Fiber-only power transmittance."""
    return 10.0 ** (-link.fiber_loss_db_per_km * link.distance_km / 10.0)


def effective_transmittance(link: LinkParams) -> float:
    """Transmittance seen by the security analysis: fiber plus detection loss."""
    total_db = link.fiber_loss_db_per_km * link.distance_km + link.detection_loss_db
    return 10.0 ** (-total_db / 10.0)


def total_excess_noise_at_channel_input(link: LinkParams) -> float:
    """Excess noise referred back to the channel input, SNU.

    Channel noise and receiver excess noise are both stated at the receiver
    input; the standard rate formulas want them at the channel input, so
    they are divided by the transmittance up to the chosen reference plane.
    """
    t_ref = (
        channel_transmittance(link)
        if link.noise_reference == "fiber"
        else effective_transmittance(link)
    )
    if t_ref <= 0:
        raise ValueError("transmittance must be > 0 to refer noise back")
    return (link.channel_excess_noise + link.receiver_excess_noise) / t_ref


def entropy_g(x) -> np.ndarray | float:
    """Bosonic entropy term g(x) = (x+1) log2(x+1) - x log2(x), g(0) = 0.

    Accepts scalars or arrays; tiny negative arguments from rounding are
    clipped to zero.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (x + 1) * np.log2(x + 1) - np.where(x > 0, x * np.log2(np.where(x > 0, x, 1.0)), 0.0)
    return out if out.ndim else float(out)


def _symplectic_closed_form(v: np.ndarray, t: float, xi: float):
    """Closed-form symplectic eigenvalues (nu1, nu2, nu3, nu4).

    v is the EPR variance V = v_a + 1; vectorized over v.
    """
    chi = 1.0 / t - 1.0 + xi
    w = t * (v + chi)
    a = v * v * (1 - 2 * t) + 2 * t + w * w
    b = (t * (v * chi + 1.0)) ** 2
    disc = a * a - 4.0 * b
    disc = np.where(disc < -NU_TOLERANCE * np.maximum(a * a, 1.0), np.nan, np.clip(disc, 0.0, None))
    root = np.sqrt(disc)
    nu1 = np.sqrt(np.clip((a + root) / 2.0, 0.0, None))
    nu2 = np.sqrt(np.clip((a - root) / 2.0, 0.0, None))
    sqrt_b = np.sqrt(b)
    c = (v * sqrt_b + w) / w
    d = sqrt_b * v / w
    disc2 = c * c - 4.0 * d
    disc2 = np.where(disc2 < -NU_TOLERANCE * np.maximum(c * c, 1.0), np.nan, np.clip(disc2, 0.0, None))
    root2 = np.sqrt(disc2)
    nu3 = np.sqrt(np.clip((c + root2) / 2.0, 0.0, None))
    nu4 = np.sqrt(np.clip((c - root2) / 2.0, 0.0, None))
    return nu1, nu2, nu3, nu4, chi


def _rate_terms(v_a: np.ndarray, link: LinkParams):
    """Vectorized (i_ab, chi_be, rate) over a modulation-variance grid."""
    v = np.asarray(v_a, dtype=float) + 1.0
    t = effective_transmittance(link)
    xi = total_excess_noise_at_channel_input(link)
    chi = 1.0 / t - 1.0 + xi
    i_ab = 0.5 * np.log2((v + chi) / (1.0 + chi))
    nu1, nu2, nu3, nu4, _ = _symplectic_closed_form(v, t, xi)
    chi_be = (
        entropy_g((nu1 - 1) / 2) + entropy_g((nu2 - 1) / 2)
        - entropy_g((nu3 - 1) / 2) - entropy_g((nu4 - 1) / 2)
    )
    rate = link.beta * i_ab - chi_be
    return i_ab, chi_be, rate


def key_rate(v_a: float, link: LinkParams) -> KeyRateResult:
    """Asymptotic secure key rate at a fixed modulation variance."""
    if v_a <= 0:
        raise ValueError(f"modulation variance must be > 0 SNU, got {v_a}")
    v = v_a + 1.0
    t = effective_transmittance(link)
    xi = total_excess_noise_at_channel_input(link)
    nu1, nu2, nu3, nu4, chi = _symplectic_closed_form(np.array(v), t, xi)
    nus = np.array([nu1, nu2, nu3, nu4], dtype=float)
    if np.any(~np.isfinite(nus)):
        raise CovarianceError(
            f"complex symplectic spectrum for v_a={v_a}, T={t}, xi={xi}"
        )
    if np.any(nus < 1.0 - NU_TOLERANCE):
        raise CovarianceError(
            f"symplectic eigenvalue below 1 ({nus.min()}) for v_a={v_a}, T={t}, xi={xi}"
        )
    i_ab = 0.5 * np.log2((v + chi) / (1.0 + chi))
    chi_be = float(
        entropy_g((nu1 - 1) / 2) + entropy_g((nu2 - 1) / 2)
        - entropy_g((nu3 - 1) / 2) - entropy_g((nu4 - 1) / 2)
    )
    rate = link.beta * float(i_ab) - chi_be
    return KeyRateResult(
        v_a=float(v_a),
        i_ab=float(i_ab),
        chi_be=chi_be,
        rate=rate,
        skr=rate * link.symbol_rate,
        feasible=rate > 0,
    )


def optimize_modulation_variance(
    link: LinkParams,
    v_a_bounds: tuple[float, float] = (0.01, 1e3),
    coarse_points: int = 200,
    rel_tol: float = 1e-4,
) -> KeyRateResult:
    """Key rate maximized over the modulation variance.

    Logarithmic coarse grid followed by golden-section refinement of the
    bracketing interval down to the requested relative width.  When every
    rate is negative the result is a zero-rate record flagged infeasible.
    """
    grid = np.logspace(np.log10(v_a_bounds[0]), np.log10(v_a_bounds[1]), coarse_points)
    _, _, rates = _rate_terms(grid, link)
    rates = np.where(np.isfinite(rates), rates, -np.inf)
    best = int(np.argmax(rates))
    if rates[best] <= 0:
        res = key_rate(float(grid[best]), link)
        return KeyRateResult(res.v_a, res.i_ab, res.chi_be, 0.0, 0.0, feasible=False)
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    # golden-section maximization on log(v_a)
    a, b = np.log(lo), np.log(hi)
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = _rate_terms(np.exp(c), link)[2]
    fd = _rate_terms(np.exp(d), link)[2]
    while (b - a) > rel_tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _rate_terms(np.exp(c), link)[2]
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _rate_terms(np.exp(d), link)[2]
    return key_rate(float(np.exp((a + b) / 2.0)), link)


def skr_vs_distance(
    link: LinkParams, distances_km: np.ndarray
) -> list[tuple[float, KeyRateResult]]:
    """Optimized key rate at each distance of an ascending grid."""
    d = np.asarray(distances_km, dtype=float)
    if d.size and np.any(np.diff(d) <= 0):
        raise ValueError("distances must be ascending")
    return [
        (float(dist), optimize_modulation_variance(replace(link, distance_km=float(dist))))
        for dist in d
    ]


def max_reach(
    link: LinkParams,
    skr_floor_bps: float,
    d_max_km: float = 500.0,
    tol_km: float = 0.05,
) -> float:
    """Largest distance whose optimized SKR still meets the floor."""
    if skr_floor_bps <= 0:
        raise ValueError(f"skr floor must be > 0, got {skr_floor_bps}")

    def skr_at(dist: float) -> float:
        return optimize_modulation_variance(replace(link, distance_km=dist)).skr

    if skr_at(0.0) < skr_floor_bps:
        raise InfeasibleError(
            f"floor {skr_floor_bps} bit/s exceeds the zero-distance rate"
        )
    lo, hi = 0.0, 1.0
    while skr_at(hi) >= skr_floor_bps:
        lo, hi = hi, hi * 2.0
        if hi > d_max_km:
            raise InfeasibleError(f"rate still above the floor at {d_max_km} km")
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if skr_at(mid) >= skr_floor_bps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# brute-force route through the explicit covariance matrix
# ---------------------------------------------------------------------------

_OMEGA = np.array([
    [0, 1, 0, 0],
    [-1, 0, 0, 0],
    [0, 0, 0, 1],
    [0, 0, -1, 0],
], dtype=float)

_SIGMA_Z = np.diag([1.0, -1.0])


def covariance_matrix(v: float, t: float, xi: float) -> np.ndarray:
    """4x4 covariance of the EPR state after the noisy lossy channel.

    Blocks: A = V I2, B = T (V + chi_line) I2, C = sqrt(T (V^2 - 1)) sigma_z.
    """
    chi = 1.0 / t - 1.0 + xi
    c = np.sqrt(t * (v * v - 1.0))
    sigma = np.zeros((4, 4))
    sigma[:2, :2] = v * np.eye(2)
    sigma[2:, 2:] = t * (v + chi) * np.eye(2)
    sigma[:2, 2:] = c * _SIGMA_Z
    sigma[2:, :2] = c * _SIGMA_Z
    return sigma


def symplectic_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    """Positive eigenvalues of i Omega sigma, one per mode, sorted descending.

    The spectrum of i Omega sigma comes in +/- pairs; the symplectic
    eigenvalues are the moduli, taken once per pair.
    """
    n = sigma.shape[0] // 2
    omega = _OMEGA[: 2 * n, : 2 * n]
    ev = np.linalg.eigvals(1j * omega @ sigma)
    return np.sort(np.abs(ev))[::-1][::2]


def conditional_covariance_after_homodyne(sigma: np.ndarray) -> np.ndarray:
    """Mode-A covariance after an x-quadrature homodyne on mode B.

    Schur complement with the pseudo-inverse of the projected B block:
    sigma_A - sigma_C (Pi sigma_B Pi)^+ sigma_C^T, Pi = diag(1, 0).
    """
    a = sigma[:2, :2]
    b = sigma[2:, 2:]
    c = sigma[:2, 2:]
    pi = np.diag([1.0, 0.0])
    return a - c @ np.linalg.pinv(pi @ b @ pi) @ c.T
