"""Fourier-space (Howland) analysis of the periodic effective generator.

On the truncated mode space k in [-N, N] the autonomous generator of the
T-periodic dynamics is block tridiagonal,

    (F x)_k = (i omega k + B) x_k + (eta/2) C (x_{k-1} + x_{k+1}),

because the cos(omega t) drive splits into the two mode shifts with weight
1/2.  Three pictures of the same operator are built and must agree
spectrally:

  state       B = L_at + lambda^2 L_R,          C = L_p;
  heisenberg  B, C replaced by their HS-adjoints (same +i omega k shift);
  conjugated  heisenberg blocks similarity-transformed by
              Z: A -> A rho_ref^{1/2}  (a reference-state weighting).

On the heisenberg side the vectors delta_{k,p} (x) vec(1) are *exact*
eigenvectors with eigenvalue i p omega (the adjoint blocks annihilate the
identity), which pins the resonance structure; everything else hangs off
those points with a spectral gap of order lambda^2.

The remaining tools are standard spectral calculus made concrete: Riesz
projections by contour quadrature of the resolvent, first-order
perturbation blocks, the pair-of-projections similarity, the monodromy
cross-check against the propagator, and a Bromwich-line evaluation of the
semigroup with analytic tail corrections.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, sqrtm
from scipy.optimize import linear_sum_assignment
from scipy.special import binom

from .errors import (
    AbscissaTooLowError,
    ContourHitsSpectrumError,
    DimensionMismatchError,
    DisagreementBetweenRulesError,
    EigensolverFailureError,
    IdempotencyFailureError,
    NearSingularPairError,
    ProjectionPairTooFarError,
)
from .evolution import monodromy_interval
from .operator_core import Superoperator, vec

__all__ = [
    "BromwichResult",
    "FloquetOperator",
    "FloquetSpectrum",
    "KatoBlock",
    "MonodromyReport",
    "RieszProjection",
    "bromwich_expm",
    "build_howland",
    "eigenprojection_direct",
    "floquet_spectrum",
    "kato_block",
    "monodromy",
    "pair_transform",
    "resonance_report",
    "riesz_projection",
]


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FloquetOperator:
    matrix: np.ndarray
    n_modes: int
    omega: float
    picture: str
    dim: int                  # atomic dimension d
    lam: float
    eta: float

    @property
    def block_size(self):
        return self.dim * self.dim

    def mode_range(self):
        return range(-self.n_modes, self.n_modes + 1)


def build_howland(bundle, n_modes, picture="state", rho_ref=None):
    """Assemble the truncated block-tridiagonal Howland operator."""
    if n_modes < 2:
        raise DimensionMismatchError(f"need n_modes >= 2, got {n_modes}")
    d = bundle.l_at.dim
    b = bundle.l_at.matrix + bundle.lam**2 * bundle.l_r.matrix
    c = bundle.l_p.matrix
    if picture == "state":
        pass
    elif picture == "heisenberg":
        b = b.conj().T
        c = c.conj().T
    elif picture == "conjugated":
        if rho_ref is None:
            raise DimensionMismatchError("conjugated picture needs a reference state")
        b = b.conj().T
        c = c.conj().T
        root = sqrtm(np.asarray(rho_ref, dtype=complex))
        z = np.kron(root.T, np.eye(d, dtype=complex))   # A -> A root, vectorized
        z_inv = np.linalg.inv(z)
        b = z @ b @ z_inv
        c = z @ c @ z_inv
    else:
        raise DimensionMismatchError(f"unknown picture {picture!r}")

    n = 2 * n_modes + 1
    d2 = d * d
    eye = np.eye(d2, dtype=complex)
    m = np.zeros((n * d2, n * d2), dtype=complex)
    half_pump = 0.5 * bundle.eta * c
    for idx, k in enumerate(range(-n_modes, n_modes + 1)):
        sl = slice(idx * d2, (idx + 1) * d2)
        m[sl, sl] = 1j * bundle.omega * k * eye + b
        if idx + 1 < n:
            sr = slice((idx + 1) * d2, (idx + 2) * d2)
            m[sl, sr] = half_pump
            m[sr, sl] = half_pump
    return FloquetOperator(matrix=m, n_modes=n_modes, omega=bundle.omega,
                           picture=picture, dim=d, lam=bundle.lam, eta=bundle.eta)


# --------------------------------------------------------------------------
# spectrum and resonance structure
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FloquetSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dominant_mode: np.ndarray   # mode index k of the largest block per eigenvector
    interior: np.ndarray        # |k| <= N-2 mask
    gap: float
    gap_over_lambda2: float
    degenerate: bool
    meta: dict = field(default_factory=dict, compare=False)


def floquet_spectrum(f_op, resonance_tol=1e-8):
    """Dense eigensolve with interior-mode bookkeeping and gap report.

    The gap is min |Re mu| over eigenvalues whose eigenvector lives on
    interior modes (|k| <= N-2; shift truncation pollutes the outer two)
    and which are not resonance copies (within `resonance_tol` of i omega Z).
    """
    try:
        w, v = np.linalg.eig(f_op.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailureError(str(exc)) from None
    order = np.lexsort((w.real, w.imag))
    w, v = w[order], v[:, order]

    n, d2 = f_op.n_modes, f_op.block_size
    weights = np.abs(v.reshape(2 * n + 1, d2, -1)) ** 2
    block_mass = weights.sum(axis=1)                  # (modes, n_eigs)
    dominant = block_mass.argmax(axis=0) - n
    interior = np.abs(dominant) <= n - 2

    omega = f_op.omega
    nearest = np.round(w.imag / omega)
    on_resonance = np.abs(w - 1j * omega * nearest) <= resonance_tol
    candidates = interior & ~on_resonance
    if np.any(candidates):
        gap = float(np.min(np.abs(w.real[candidates])))
    else:
        gap = 0.0
    degenerate = gap < 1e-12
    lam2 = f_op.lam**2
    return FloquetSpectrum(
        eigenvalues=w, eigenvectors=v, dominant_mode=dominant,
        interior=interior, gap=gap,
        gap_over_lambda2=gap / lam2 if lam2 > 0 else np.inf,
        degenerate=degenerate,
        meta={"picture": f_op.picture, "n_modes": n, "resonance_tol": resonance_tol},
    )


def resonance_report(f_op, disc_radius=1e-8):
    """Exact-resonance diagnostics on the heisenberg-side operator.

    For each mode p the candidate eigenvector delta_{k,p} (x) vec(1) is
    applied directly (residual of the i p omega eigenvalue claim,
    |p| <= N-1), and the eigenvalue count inside the `disc_radius` disc
    around i p omega is taken from the dense solver (interior p only).
    """
    if f_op.picture != "heisenberg":
        raise DimensionMismatchError("resonance candidates live on the heisenberg side")
    n, d2 = f_op.n_modes, f_op.block_size
    d = f_op.dim
    one = vec(np.eye(d, dtype=complex))
    one = one / np.linalg.norm(one)
    residuals = {}
    for p in range(-(n - 1), n):
        x = np.zeros((2 * n + 1) * d2, dtype=complex)
        x[(p + n) * d2:(p + n + 1) * d2] = one
        residuals[p] = float(np.linalg.norm(f_op.matrix @ x - 1j * f_op.omega * p * x))
    w = np.linalg.eigvals(f_op.matrix)
    counts = {}
    for p in range(-(n - 2), n - 1):
        counts[p] = int(np.sum(np.abs(w - 1j * f_op.omega * p) <= disc_radius))
    return {"residuals": residuals, "disc_counts": counts,
            "max_residual": max(residuals.values()),
            "disc_radius": disc_radius}


# --------------------------------------------------------------------------
# Riesz projections
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RieszProjection:
    matrix: np.ndarray
    center: complex
    radius: float
    m_points: int
    idempotency_defect: float
    rank: int


def riesz_projection(f_op, center, radius=None, m_points=64, eigenvalues=None):
    """Contour-quadrature Riesz projection of `f_op` around `center`.

    Trapezoid rule on the circle of the given radius (default: 0.45 times
    the isolation distance of the enclosed cluster, capped at 0.45).  An
    eigenvalue inside the annulus [0.5 r, 1.5 r] aborts with
    ContourHitsSpectrum; an idempotency defect above 1e-6 aborts with
    IdempotencyFailure.
    """
    m = f_op.matrix if isinstance(f_op, FloquetOperator) else np.asarray(f_op)
    if eigenvalues is None:
        eigenvalues = np.linalg.eigvals(m)
    dist = np.abs(eigenvalues - center)
    if radius is None:
        outside = dist[dist > 1e-6]
        isolation = float(np.min(outside)) if outside.size else np.inf
        radius = min(0.45 * isolation, 0.45)
        if not radius > 0:
            raise ContourHitsSpectrumError("no isolated cluster at the requested center")
    in_annulus = np.sum((dist >= 0.5 * radius) & (dist <= 1.5 * radius))
    if in_annulus:
        raise ContourHitsSpectrumError(
            f"{in_annulus} eigenvalue(s) inside the [0.5r, 1.5r] annulus at r={radius:.3g}"
        )
    size = m.shape[0]
    eye = np.eye(size, dtype=complex)
    acc = np.zeros_like(m, dtype=complex)
    for j in range(m_points):
        phase = np.exp(2j * np.pi * (j + 0.5) / m_points)
        z = center + radius * phase
        acc += radius * phase * np.linalg.solve(z * eye - m, eye)
    p = acc / m_points
    defect = float(np.linalg.norm(p @ p - p, 2))
    if defect > 1e-6:
        raise IdempotencyFailureError(f"projection defect {defect:.3e} at M={m_points}")
    rank = int(round(np.trace(p).real))
    return RieszProjection(matrix=p, center=complex(center), radius=float(radius),
                           m_points=int(m_points), idempotency_defect=defect, rank=rank)


def eigenprojection_direct(f_op, center, radius):
    """Spectral projection from the dense eigensolver (independent route)."""
    m = f_op.matrix if isinstance(f_op, FloquetOperator) else np.asarray(f_op)
    try:
        w, v = np.linalg.eig(m)
        v_inv = np.linalg.inv(v)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailureError(str(exc)) from None
    idx = np.abs(w - center) <= radius
    return v[:, idx] @ v_inv[idx, :]


# --------------------------------------------------------------------------
# perturbation block
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KatoBlock:
    block: np.ndarray         # P F P
    first_order: np.ndarray   # P0 (F - F0) P0
    residual: float
    center: complex
    radius: float


def kato_block(f_op, f0_op, center, radius=None, m_points=64):
    """Compression P F P against its first-order model around one resonance.

    P and P0 are the Riesz projections of the perturbed and unperturbed
    operators around `center` (same contour).  Returns the blocks and

        residual = || P F P - center P0 - P0 (F - F0) P0 ||_2 ,

    the defect of the first-order expansion of the compressed generator.
    """
    p0 = riesz_projection(f0_op, center, radius=radius, m_points=m_points)
    p = riesz_projection(f_op, center, radius=p0.radius, m_points=m_points)
    diff = p.matrix - p0.matrix
    sep = np.linalg.norm(diff @ diff, 2)
    if sep >= 1.0:
        raise ProjectionPairTooFarError(f"||(P - P0)^2|| = {sep:.3f} >= 1")
    mf = f_op.matrix if isinstance(f_op, FloquetOperator) else np.asarray(f_op)
    mf0 = f0_op.matrix if isinstance(f0_op, FloquetOperator) else np.asarray(f0_op)
    block = p.matrix @ mf @ p.matrix
    first = p0.matrix @ (mf - mf0) @ p0.matrix
    residual = float(np.linalg.norm(block - center * p0.matrix - first, 2))
    return KatoBlock(block=block, first_order=first, residual=residual,
                     center=complex(center), radius=p0.radius)


# --------------------------------------------------------------------------
# pairs of projections
# --------------------------------------------------------------------------

def _inv_sqrt_eig(a):
    w, v = np.linalg.eig(a)
    if np.any(np.abs(w) <= 1e-12):
        raise NearSingularPairError("1 - (P-Q)^2 has a near-zero eigenvalue")
    return v @ np.diag(w ** -0.5) @ np.linalg.inv(v)


def _inv_sqrt_series(r, terms=60):
    """(1 - R)^{-1/2} by the binomial series; valid for ||R|| < 1."""
    acc = np.eye(r.shape[0], dtype=complex)
    power = np.eye(r.shape[0], dtype=complex)
    for n in range(1, terms):
        power = power @ (-r)
        acc = acc + binom(-0.5, n) * power
    return acc


def pair_transform(p, q):
    """Similarity (U, V) with U V = V U = 1 and Q = U P V for near projections.

    R = (P - Q)^2 must satisfy min singular value of (1 - R) > 1e-6.  The
    inverse square root is computed by eigendecomposition and, whenever
    ||R|| < 0.5, cross-checked against the absolutely convergent binomial
    series.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    eye = np.eye(p.shape[0], dtype=complex)
    r = (p - q) @ (p - q)
    one_minus = eye - r
    smin = np.linalg.svd(one_minus, compute_uv=False)[-1]
    if smin <= 1e-6:
        raise NearSingularPairError(f"min singular value of 1-R is {smin:.3e}")
    inv_sqrt = _inv_sqrt_eig(one_minus)
    r_norm = np.linalg.norm(r, 2)
    if r_norm < 0.5:
        alt = _inv_sqrt_series(r)
        mismatch = np.linalg.norm(alt - inv_sqrt, 2)
        if mismatch > 1e-9 * max(1.0, np.linalg.norm(inv_sqrt, 2)):
            raise DisagreementBetweenRulesError(
                f"series and eigendecomposition roots differ by {mismatch:.3e}"
            )
    u = (q @ p + (eye - q) @ (eye - p)) @ inv_sqrt
    v = (p @ q + (eye - p) @ (eye - q)) @ inv_sqrt
    return u, v


# --------------------------------------------------------------------------
# monodromy cross-check
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MonodromyReport:
    superop: Superoperator
    eigenvalues: np.ndarray           # of the one-period propagator
    matched_exponents: np.ndarray     # e^{T mu} assigned by the matching
    max_match_error: float
    n_modes: int


def monodromy(bundle, n_modes=32, rtol=1e-10):
    """One-period propagator vs Floquet exponents of the Howland operator.

    Each eigenvalue of tau(T, 0) must coincide with e^{T mu} for some
    truncated-Howland eigenvalue mu (the mode shift +i omega k drops out of
    the exponential).  The assignment minimizing the total distance is
    computed by the Hungarian method on the rectangular cost matrix.
    """
    tau = monodromy_interval(bundle, rtol=rtol)
    mono_eigs = np.linalg.eigvals(tau.matrix)
    order = np.lexsort((mono_eigs.real, mono_eigs.imag))
    mono_eigs = mono_eigs[order]

    f_op = build_howland(bundle, n_modes, picture="state")
    mu = np.linalg.eigvals(f_op.matrix)
    candidates = np.exp(bundle.period * mu)
    cost = np.abs(mono_eigs[:, None] - candidates[None, :])
    rows, cols = linear_sum_assignment(cost)
    matched = candidates[cols]
    return MonodromyReport(
        superop=tau, eigenvalues=mono_eigs, matched_exponents=matched,
        max_match_error=float(cost[rows, cols].max()), n_modes=n_modes,
    )


# --------------------------------------------------------------------------
# Bromwich-line semigroup evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BromwichResult:
    matrix: np.ndarray
    abscissa: float
    half_height: float
    n_points: int
    correction_order: int
    error_vs_expm: float


def bromwich_expm(a, sigma, w, n_points=3200, half_height=200.0,
                  correction_order=3):
    """e^{sigma A} from a truncated Bromwich line integral at Re zeta = w.

    The resolvent is expanded around c0 = tr(A)/dim:

        (zeta - A)^{-1} = sum_{j<J} (A-c0)^j/(zeta-c0)^{j+1}
                          + (zeta-c0)^{-J} (A-c0)^J (zeta-A)^{-1};

    the powers integrate exactly to sum_{j<J} sigma^j/j! e^{sigma c0}
    (A - c0)^j, and only the remainder — decaying like |y|^{-(J+1)} along
    the line — is quadratured.  correction_order=0 is the plain truncated
    integral.  Requires w above the spectral abscissa (AbscissaTooLow).
    """
    m = a.matrix if isinstance(a, Superoperator) else np.asarray(a, dtype=complex)
    if n_points % 2:
        raise DimensionMismatchError("n_points must be even")
    eigs = np.linalg.eigvals(m)
    if w <= eigs.real.max():
        raise AbscissaTooLowError(
            f"abscissa {w} below spectral bound {eigs.real.max():.6g}"
        )
    size = m.shape[0]
    eye = np.eye(size, dtype=complex)
    c0 = np.trace(m) / size
    shifted = m - c0 * eye
    j_max = int(correction_order)

    head = np.zeros_like(m)
    power = eye.copy()
    for j in range(j_max):
        head = head + (sigma**j / math.factorial(j)) * power
        power = power @ shifted
    head = np.exp(sigma * c0) * head
    # after the loop `power` holds (A - c0)^J

    ys = (np.arange(n_points) + 0.5) / n_points * 2.0 * half_height - half_height
    dy = 2.0 * half_height / n_points
    tail = np.zeros_like(m)
    for y in ys:
        zeta = w + 1j * y
        resolvent = np.linalg.solve(zeta * eye - m, eye)
        tail = tail + np.exp(sigma * zeta) * (zeta - c0) ** (-j_max) * resolvent
    tail = power @ tail * dy / (2.0 * np.pi)

    result = head + tail
    reference = expm(sigma * m)
    err = float(np.linalg.norm(result - reference, 2))
    return BromwichResult(matrix=result, abscissa=float(w),
                          half_height=float(half_height), n_points=int(n_points),
                          correction_order=j_max, error_vs_expm=err)
