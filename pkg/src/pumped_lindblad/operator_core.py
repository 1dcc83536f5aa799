"""Atomic model: spectral decomposition, superoperators, Bohr structure.

The impurity is a finite d-dimensional system with Hermitian Hamiltonian
H_at whose spectrum is grouped into N >= 2 levels

    H_at = sum_k E_k P_k ,   E_1 < E_2 < ... < E_N,   rank P_k = n_k,

and everything downstream is phrased on the d^2-dimensional space of d x d
matrices with the Hilbert-Schmidt inner product <A, B> = Tr(A^* B).  We fix
the *column-stacking* vectorization once and for all,

    vec(A X B) = (B^T (x) A) vec(X),

so a superoperator is concretely a d^2 x d^2 matrix and its HS-adjoint is
the conjugate transpose of that matrix.

The free evolution enters through the Lindbladian L_at = -i[H_at, .], whose
spectrum is i * {Bohr frequencies}.  For each Bohr frequency eps the pair
set

    t_eps = {(j, k) : E_j - E_k = eps}

indexes the eigenprojection P_at^(eps)(A) = sum_{(j,k) in t_eps} P_j A P_k.
The zero-frequency projection P_D = P_at^(0) keeps the block-diagonal
("populations") part of a state and is where the slow dynamics lives.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClusterAmbiguityError,
    DimensionMismatchError,
    InvalidDensityMatrixError,
    NonHermitianError,
    NotABohrFrequencyError,
    PumpSupportViolationError,
    ScalarHamiltonianError,
)

__all__ = [
    "AtomSpec",
    "BohrIndex",
    "PumpOperator",
    "Superoperator",
    "atomic_lindbladian",
    "block_diag_projection",
    "bohr_spectrum",
    "decompose_atom",
    "gibbs_state",
    "hs_inner",
    "multiplication_superops",
    "spectral_projection",
    "unvec",
    "validate_pump",
    "validate_state",
    "vec",
]


# --------------------------------------------------------------------------
# vectorization helpers (column-stacking convention)
# --------------------------------------------------------------------------

def vec(a):
    """Column-stack a d x d matrix into a d^2 vector."""
    a = np.asarray(a)
    return a.reshape(-1, order="F")


def unvec(v, d=None):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionMismatchError(f"vector of size {v.size} is not d^2")
    return v.reshape(d, d, order="F")


def hs_inner(a, b):
    """Hilbert-Schmidt inner product Tr(a^* b), antilinear in `a`."""
    return np.trace(np.conj(a.T) @ b)


# --------------------------------------------------------------------------
# Superoperator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Superoperator:
    """A linear map on d x d matrices, stored as a d^2 x d^2 matrix.

    Column-stacking is assumed throughout: the matrix of A |-> X A Y is
    kron(Y^T, X).  The HS-adjoint is then the conjugate transpose.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"superoperator matrix has shape {m.shape}")
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0]:
            raise DimensionMismatchError(
                f"superoperator side {m.shape[0]} is not a perfect square"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        """Dimension d of the underlying matrix space."""
        return int(round(np.sqrt(self.matrix.shape[0])))

    def __call__(self, a):
        a = np.asarray(a, dtype=complex)
        d = self.dim
        if a.shape != (d, d):
            raise DimensionMismatchError(f"operand shape {a.shape}, expected {(d, d)}")
        return unvec(self.matrix @ vec(a), d)

    def adjoint(self):
        """HS-adjoint (conjugate transpose of the matrix)."""
        return Superoperator(self.matrix.conj().T)

    def __add__(self, other):
        return Superoperator(self.matrix + other.matrix)

    def __sub__(self, other):
        return Superoperator(self.matrix - other.matrix)

    def __mul__(self, scalar):
        return Superoperator(self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Superoperator(-self.matrix)

    def __matmul__(self, other):
        """Composition (self after other)."""
        return Superoperator(self.matrix @ other.matrix)

    @staticmethod
    def identity(d):
        return Superoperator(np.eye(d * d, dtype=complex))

    @staticmethod
    def zero(d):
        return Superoperator(np.zeros((d * d, d * d), dtype=complex))


def multiplication_superops(a, lindblad_form=False):
    """Left/right multiplication and commutator superoperators of `a`.

    Returns (left, right, comm) with left(B) = a B, right(B) = B a and,
    by default, comm(B) = [a, B].  With ``lindblad_form=True`` the third
    element is instead -i[a, .], the Hamiltonian Lindbladian of `a`.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected square matrix, got shape {a.shape}")
    d = a.shape[0]
    eye = np.eye(d, dtype=complex)
    left = Superoperator(np.kron(eye, a))
    right = Superoperator(np.kron(a.T, eye))
    comm = left - right
    if lindblad_form:
        comm = (-1j) * comm
    return left, right, comm


# --------------------------------------------------------------------------
# density matrix validation
# --------------------------------------------------------------------------

def validate_state(rho, herm_tol=1e-12, trace_tol=1e-12, eig_floor=-1e-9):
    """Validate a density matrix: Hermitian, unit trace, eigenvalues >= floor.

    Returns the matrix as a complex ndarray.  Violations raise
    InvalidDensityMatrixError; nothing is silently projected or rescaled.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDensityMatrixError(f"state has shape {rho.shape}")
    scale = max(1.0, np.linalg.norm(rho, "fro"))
    herm = np.linalg.norm(rho - rho.conj().T, "fro")
    if herm > herm_tol * scale:
        raise InvalidDensityMatrixError(f"not Hermitian: ||rho - rho^*|| = {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise InvalidDensityMatrixError(f"trace {tr} differs from 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < eig_floor:
        raise InvalidDensityMatrixError(f"minimum eigenvalue {w.min():.3e} < {eig_floor}")
    return rho


# --------------------------------------------------------------------------
# AtomSpec and spectral decomposition
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomSpec:
    """Hermitian Hamiltonian together with its clustered level structure."""

    dim: int
    h_at: np.ndarray
    energies: tuple          # (E_1, ..., E_N), strictly increasing
    multiplicities: tuple    # (n_1, ..., n_N), sum = dim
    projections: tuple       # (P_1, ..., P_N), orthogonal projections
    cluster_tol: float

    @property
    def n_levels(self):
        return len(self.energies)

    @property
    def pump_freq(self):
        """omega = E_N - E_1, the level spread driven by the pump."""
        return self.energies[-1] - self.energies[0]


def _cluster_sorted(values, gap_tol):
    """Split ascending `values` into groups separated by gaps > gap_tol.

    Returns a tuple of slices' end indices (the clustering signature).
    """
    bounds = []
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > gap_tol:
            bounds.append(i)
    bounds.append(len(values))
    return tuple(bounds)


def decompose_atom(h_at, cluster_tol=None):
    """Diagonalize ``h_at`` and cluster its eigenvalues into levels.

    Eigenvalues are grouped agglomeratively: consecutive (sorted)
    eigenvalues closer than ``cluster_tol`` belong to the same level.  The
    default tolerance is 1e-8 * ||h_at||.  If halving or doubling the
    tolerance changes the grouping, the clustering is deemed ambiguous and
    ClusterAmbiguityError is raised rather than guessing.
    """
    h = np.asarray(h_at, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(f"Hamiltonian has shape {h.shape}")
    d = h.shape[0]
    scale = max(1.0, np.linalg.norm(h, "fro"))
    herm = np.linalg.norm(h - h.conj().T, "fro")
    if herm > 1e-12 * scale:
        raise NonHermitianError(f"||h - h^*|| = {herm:.3e} exceeds Hermiticity tolerance")
    h = 0.5 * (h + h.conj().T)

    w, u = np.linalg.eigh(h)
    spread = w[-1] - w[0]
    norm = max(abs(w[0]), abs(w[-1]))
    if cluster_tol is None:
        cluster_tol = 1e-8 * max(norm, 1e-300)
    if spread <= cluster_tol:
        raise ScalarHamiltonianError(
            "all eigenvalues within one cluster: H_at is a scalar plus noise"
        )

    sig = _cluster_sorted(w, cluster_tol)
    if (_cluster_sorted(w, 0.5 * cluster_tol) != sig
            or _cluster_sorted(w, 2.0 * cluster_tol) != sig):
        raise ClusterAmbiguityError(
            f"eigenvalue grouping changes under perturbation of cluster_tol={cluster_tol:.3e}"
        )

    energies, mults, projs = [], [], []
    start = 0
    for end in sig:
        block = u[:, start:end]
        energies.append(float(np.mean(w[start:end])))
        mults.append(end - start)
        projs.append(block @ block.conj().T)
        start = end
    if len(energies) < 2:
        raise ScalarHamiltonianError("spectrum clusters into a single level")

    recon = sum(e * p for e, p in zip(energies, projs))
    err = np.linalg.norm(h - recon, "fro")
    if err > cluster_tol * max(1.0, np.sqrt(d)):
        raise ClusterAmbiguityError(
            f"reconstruction error {err:.3e} exceeds cluster tolerance (chained cluster?)"
        )

    return AtomSpec(
        dim=d,
        h_at=h,
        energies=tuple(energies),
        multiplicities=tuple(mults),
        projections=tuple(projs),
        cluster_tol=float(cluster_tol),
    )


# --------------------------------------------------------------------------
# Bohr frequencies
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BohrIndex:
    """Bohr frequencies eps with their pair sets t_eps = {(j,k): E_j - E_k = eps}.

    Levels are labelled 1..N.  `frequencies` is sorted ascending and always
    contains 0 (the diagonal pairs (k,k)).
    """

    frequencies: tuple
    pairs: dict = field(compare=False)   # eps -> tuple of (j, k)
    tol: float = 0.0

    def lookup(self, eps):
        """Return the stored frequency matching `eps` within tolerance."""
        for known in self.frequencies:
            if abs(known - eps) <= max(self.tol, 1e-12):
                return known
        raise NotABohrFrequencyError(f"{eps} is not a Bohr frequency of this atom")

    def pair_set(self, eps):
        return self.pairs[self.lookup(eps)]


def bohr_spectrum(atom, merge_tol=None):
    """All level differences E_j - E_k of `atom`, indexed by pair sets.

    Differences closer than ``merge_tol`` (default 1e-9 * max|E|) are
    identified; near-coincidences that flip under halving/doubling the
    tolerance raise ClusterAmbiguityError, since the pair sets t_eps change
    discontinuously when two differences merge.
    """
    energies = atom.energies
    n = len(energies)
    if merge_tol is None:
        merge_tol = 1e-9 * max(max(abs(e) for e in energies), 1e-300)

    diffs = []
    for j in range(n):
        for k in range(n):
            diffs.append((energies[j] - energies[k], (j + 1, k + 1)))
    diffs.sort(key=lambda t: t[0])
    values = [t[0] for t in diffs]

    sig = _cluster_sorted(values, merge_tol)
    if (_cluster_sorted(values, 0.5 * merge_tol) != sig
            or _cluster_sorted(values, 2.0 * merge_tol) != sig):
        raise ClusterAmbiguityError(
            "near-degenerate Bohr frequencies: pair sets are tolerance-sensitive"
        )

    freqs, pairs = [], {}
    start = 0
    for end in sig:
        group = diffs[start:end]
        eps = float(np.mean([g[0] for g in group]))
        if abs(eps) <= merge_tol:
            eps = 0.0
        freqs.append(eps)
        pairs[eps] = tuple(sorted(g[1] for g in group))
        start = end
    return BohrIndex(frequencies=tuple(freqs), pairs=pairs, tol=float(merge_tol))


# --------------------------------------------------------------------------
# atomic Lindbladian and spectral projections
# --------------------------------------------------------------------------

def atomic_lindbladian(atom):
    """L_at = -i[H_at, .]; anti-self-adjoint in the HS product."""
    _, _, comm = multiplication_superops(atom.h_at, lindblad_form=True)
    return comm


def spectral_projection(atom, eps, bohr=None):
    """Eigenprojection P_at^(eps) of L_at onto eigenvalue -i*eps.

    P_at^(eps)(A) = sum over (j,k) with E_j - E_k = eps of P_j A P_k.
    Raises NotABohrFrequency if eps is not a level difference.
    """
    if bohr is None:
        bohr = bohr_spectrum(atom)
    pairs = bohr.pair_set(eps)
    d = atom.dim
    m = np.zeros((d * d, d * d), dtype=complex)
    for (j, k) in pairs:
        pj = atom.projections[j - 1]
        pk = atom.projections[k - 1]
        m += np.kron(pk.T, pj)
    return Superoperator(m)


def block_diag_projection(atom):
    """P_D = P_at^(0): keep only the within-level blocks of a matrix."""
    return spectral_projection(atom, 0.0)


# --------------------------------------------------------------------------
# Gibbs state
# --------------------------------------------------------------------------

def gibbs_state(atom, beta):
    """Gibbs state exp(-beta H_at) / Tr exp(-beta H_at), beta in [0, inf).

    Built levelwise with the ground energy subtracted, so large beta never
    overflows: rho_g = sum_k e^{-beta(E_k - E_1)} P_k / Z.
    """
    if beta < 0:
        raise InvalidDensityMatrixError(f"negative inverse temperature {beta}")
    e0 = atom.energies[0]
    weights = [np.exp(-beta * (e - e0)) for e in atom.energies]
    z = sum(w * n for w, n in zip(weights, atom.multiplicities))
    rho = sum(w * p for w, p in zip(weights, atom.projections)) / z
    return validate_state(rho)


# --------------------------------------------------------------------------
# pump operator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PumpOperator:
    """Validated pump: raising part h_p, Hermitian H_p, and L_p = -i[H_p, .]."""

    h_p: np.ndarray
    h_pump: np.ndarray
    lindbladian: Superoperator


def validate_pump(atom, h_p, tol=1e-10):
    """Check that h_p raises the ground sector into the top sector.

    Accepts iff ker(h_p)^perp  is contained in the ground eigenspace and
    ran(h_p) in the top eigenspace, i.e. ||(1 - P_1) h_p^*|| <= tol and
    ||(1 - P_N) h_p|| <= tol.  Returns the pump H_p = h_p + h_p^* with its
    Hamiltonian Lindbladian.
    """
    h_p = np.asarray(h_p, dtype=complex)
    d = atom.dim
    if h_p.shape != (d, d):
        raise DimensionMismatchError(f"pump shape {h_p.shape}, atom dimension {d}")
    eye = np.eye(d)
    p1 = atom.projections[0]
    pn = atom.projections[-1]
    src = np.linalg.norm((eye - p1) @ h_p.conj().T, "fro")
    dst = np.linalg.norm((eye - pn) @ h_p, "fro")
    if src > tol:
        raise PumpSupportViolationError(
            f"h_p does not act from the ground sector: ||(1-P_1) h_p^*|| = {src:.3e}"
        )
    if dst > tol:
        raise PumpSupportViolationError(
            f"h_p does not map into the top sector: ||(1-P_N) h_p|| = {dst:.3e}"
        )
    h_pump = h_p + h_p.conj().T
    _, _, lp = multiplication_superops(h_pump, lindblad_form=True)
    return PumpOperator(h_p=h_p, h_pump=h_pump, lindbladian=lp)
