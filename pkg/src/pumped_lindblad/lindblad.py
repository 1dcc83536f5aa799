"""Effective reservoir generator: jumps, rates, Lamb shift, and checks.

For each level pair (j, k) and coupling channel l the jump operator is the
block

    V_{j,k}^(l) = P_j Q_l P_k ,

carrying the rate c_{j,k}^(l) = pi f_l^(beta)(E_k - E_j) >= 0 and the
principal-value coefficient d_{j,k}^(l) = PV int f_l^(beta)(x + E_k - E_j)/x dx.
The assembled generator is

    L_R = -i [H_Lamb, . ] + L_d,
    H_Lamb = -(1/2) sum_{pairs with E_j != E_k} sum_l d_{j,k}^(l) V* V,
    L_d    = (1/2) sum_{all pairs} sum_l c_{j,k}^(l) (2 V rho V* - V*V rho - rho V*V),

with H_Lamb commuting with H_at by block structure.

An independent route ("resolvent oracle") rebuilds L_R^(rho_reg) from the
regularized scalar integrals

    w(eps') = int f^(beta)(p) / (rho_reg + i(eps' + p)) dp ,

one per Bohr frequency eps' = E_j - E_k and channel.  Writing
Gamma = w/2, each pair contributes

    Gamma (V rho V* - V*V rho) + conj(Gamma) (V rho V* - rho V*V),

because as rho_reg -> 0 one has Re w -> pi f^(beta)(E_k - E_j) = c and
Im w -> -d (Poisson / conjugate-Poisson limits), which reproduces exactly
the c- and d-terms above.  For pairs with E_j = E_k only Re w is kept,
matching the closed form's exclusion of zero frequencies from the Lamb
sum.  Convergence is first order in rho_reg.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import QuadratureNonConvergenceError
from .operator_core import Superoperator, multiplication_superops, validate_pump
from .reservoir import (
    check_strip_analyticity,
    pv_coefficient,
    rate_coefficient,
    spectral_density,
)

__all__ = [
    "AssumptionReport",
    "LindbladData",
    "algebra_dimension",
    "check_assumptions",
    "choi_matrix",
    "commutant_dimension",
    "dissipator",
    "jump_operators",
    "lamb_shift",
    "reservoir_lindbladian",
    "resolvent_oracle",
]

_RATE_FLOOR = 1e-14


# --------------------------------------------------------------------------
# jump operators and closed-form coefficients
# --------------------------------------------------------------------------

def jump_operators(atom, q):
    """All nonzero blocks V_{j,k} = P_j q P_k, labelled by 1-based (j, k)."""
    q = np.asarray(q, dtype=complex)
    out = []
    for j, pj in enumerate(atom.projections, start=1):
        for k, pk in enumerate(atom.projections, start=1):
            v = pj @ q @ pk
            if np.linalg.norm(v, "fro") > _RATE_FLOOR:
                out.append((v, (j, k)))
    return out


def _pair_coefficients(atom, res, want_pv):
    """Iterate (V, c, d, (j,k,l)) over channels and level pairs.

    d is None for within-level pairs (E_j == E_k) or when not requested;
    PV integrals are cached per (channel, energy difference).
    """
    energies = atom.energies
    cache = {}
    for l, (ff, q) in enumerate(zip(res.form_factors, res.couplings), start=1):
        for v, (j, k) in jump_operators(atom, q):
            ekj = energies[k - 1] - energies[j - 1]
            c = rate_coefficient(ff, res.beta, ekj)
            if c < _RATE_FLOOR:
                c = 0.0
            d = None
            if want_pv and j != k:
                key = (l, round(ekj, 12))
                if key not in cache:
                    cache[key] = pv_coefficient(ff, res.beta, ekj)
                d = cache[key]
            yield v, c, d, (j, k, l)


def lamb_shift(atom, res):
    """H_Lamb = -(1/2) sum over cross-level pairs and channels of d * V*V."""
    res.require_orthogonal()
    d_mat = np.zeros((atom.dim, atom.dim), dtype=complex)
    for v, _c, d, (j, k, _l) in _pair_coefficients(atom, res, want_pv=True):
        if j == k:
            continue
        d_mat -= 0.5 * d * (v.conj().T @ v)
    return 0.5 * (d_mat + d_mat.conj().T)


def _dissipator_term(v, c):
    """Superoperator matrix of (c/2)(2 V rho V* - V*V rho - rho V*V)."""
    d = v.shape[0]
    eye = np.eye(d, dtype=complex)
    vv = v.conj().T @ v
    return c * (np.kron(np.conj(v), v)
                - 0.5 * np.kron(eye, vv)
                - 0.5 * np.kron(vv.T, eye))


def dissipator(atom, res):
    """GKS dissipator L_d summed over all level pairs and channels."""
    res.require_orthogonal()
    d = atom.dim
    m = np.zeros((d * d, d * d), dtype=complex)
    for v, c, _d, _label in _pair_coefficients(atom, res, want_pv=False):
        if c == 0.0:
            continue
        m += _dissipator_term(v, c)
    return Superoperator(m)


@dataclass(frozen=True)
class LindbladData:
    """Assembled reservoir generator with its ingredients."""

    jumps: tuple          # of (V, rate, (j, k, l))
    lamb: np.ndarray      # H_Lamb
    l_d: Superoperator
    l_r: Superoperator
    from_gks: bool = False

    def __post_init__(self):
        d = self.l_r.dim
        eye = np.eye(d, dtype=complex)
        h = np.asarray(self.lamb)
        if np.linalg.norm(h - h.conj().T, "fro") > 1e-12 * max(1.0, np.linalg.norm(h, "fro")):
            raise ValueError("Lamb shift not Hermitian")
        unital = np.linalg.norm(self.l_r.adjoint()(eye), "fro")
        if unital > 1e-12 * max(1.0, np.linalg.norm(self.l_r.matrix, 2)):
            raise ValueError(f"adjoint generator does not annihilate identity: {unital:.3e}")


def reservoir_lindbladian(atom, res):
    """Assemble L_R = -i[H_Lamb, .] + L_d (or from user-supplied GKS jumps).

    Validates on construction: Hermitian Lamb shift commuting with H_at,
    nonnegative rates, and unitality of the adjoint.
    """
    d = atom.dim
    if res.gks_jumps is not None:
        m = np.zeros((d * d, d * d), dtype=complex)
        jumps = []
        for a, v in enumerate(res.gks_jumps, start=1):
            v = np.asarray(v, dtype=complex)
            m += _dissipator_term(v, 1.0)
            jumps.append((v, 1.0, (0, 0, a)))
        l_d = Superoperator(m)
        lamb = np.zeros((d, d), dtype=complex)
        return LindbladData(jumps=tuple(jumps), lamb=lamb, l_d=l_d,
                            l_r=l_d, from_gks=True)

    lamb = lamb_shift(atom, res)
    comm_norm = np.linalg.norm(lamb @ atom.h_at - atom.h_at @ lamb, "fro")
    if comm_norm > 1e-10 * max(1.0, np.linalg.norm(lamb, "fro")):
        raise ValueError(f"[H_Lamb, H_at] = {comm_norm:.3e} — block structure broken")
    l_d = dissipator(atom, res)
    jumps = tuple(
        (v, c, label)
        for v, c, _d, label in _pair_coefficients(atom, res, want_pv=False)
        if c > 0.0
    )
    _, _, lamb_comm = multiplication_superops(lamb, lindblad_form=True)
    l_r = lamb_comm + l_d
    return LindbladData(jumps=jumps, lamb=lamb, l_d=l_d, l_r=l_r)


# --------------------------------------------------------------------------
# regularized-resolvent oracle
# --------------------------------------------------------------------------

def _scalar_resolvent(ff, beta, eps_p, eps_reg):
    """w = int f^(beta)(p) / (eps_reg + i(eps_p + p)) dp for eps_reg > 0.

    Real part: Poisson kernel against f^(beta), evaluated by adaptive
    quadrature with the kernel center flagged as a difficult point.
    Imaginary part: conjugate-Poisson, folded to t > 0 by symmetric
    subtraction so the near-singular factor t/(eps_reg^2 + t^2) is tamed.
    """
    from .reservoir import _effective_beta, _gauss_cutoff

    beta = _effective_beta(beta)
    x_max = _gauss_cutoff(ff.min_decay) + beta / (2.0 * ff.min_decay) + abs(eps_p)

    def f(p):
        return spectral_density(ff, beta, p)

    def re_kernel(p):
        return f(p) * eps_reg / (eps_reg**2 + (eps_p + p) ** 2)

    re_val, re_err = integrate.quad(
        re_kernel, -x_max, x_max, points=[-eps_p], limit=800,
        epsabs=1e-12, epsrel=1e-11,
    )

    def im_kernel(t):
        return (f(t - eps_p) - f(-t - eps_p)) * t / (eps_reg**2 + t**2)

    im_val, im_err = integrate.quad(
        im_kernel, 0.0, x_max, points=[eps_reg, 10 * eps_reg], limit=800,
        epsabs=1e-12, epsrel=1e-11,
    )
    for val, err, name in ((re_val, re_err, "Poisson"), (im_val, im_err, "conjugate")):
        if err > max(1e-9 * abs(val), 1e-9):
            raise QuadratureNonConvergenceError(
                f"{name} integral error {err:.3e} at eps'={eps_p}, reg={eps_reg}"
            )
    return re_val - 1j * im_val


def resolvent_oracle(atom, res, eps_reg):
    """Rebuild the reservoir generator from regularized scalar resolvents.

    Independent of the closed forms: no rate or PV routine is called.  The
    diagonal (E_j = E_k) pairs keep only the real part of w, since the
    closed form's Lamb sum excludes zero frequencies.
    """
    if not eps_reg > 0:
        raise QuadratureNonConvergenceError(f"regularization {eps_reg} must be > 0")
    res.require_orthogonal()
    d = atom.dim
    eye = np.eye(d, dtype=complex)
    energies = atom.energies
    m = np.zeros((d * d, d * d), dtype=complex)
    cache = {}
    for l, (ff, q) in enumerate(zip(res.form_factors, res.couplings), start=1):
        for v, (j, k) in jump_operators(atom, q):
            eps_p = energies[j - 1] - energies[k - 1]
            key = (l, round(eps_p, 12))
            if key not in cache:
                cache[key] = _scalar_resolvent(ff, res.beta, eps_p, eps_reg)
            w = cache[key]
            if j == k:
                w = w.real + 0.0j
            gamma = 0.5 * w
            vv = v.conj().T @ v
            sandwich = np.kron(np.conj(v), v)
            m += gamma * (sandwich - np.kron(eye, vv))
            m += np.conj(gamma) * (sandwich - np.kron(vv.T, eye))
    return Superoperator(m)


# --------------------------------------------------------------------------
# commutant / irreducibility
# --------------------------------------------------------------------------

def commutant_dimension(jumps, tol=1e-10):
    """Dimension of {X : X V = V X for all V in jumps} and a basis.

    Solved as the joint nullspace of the stacked Sylvester maps
    X |-> V X - X V in vectorized form.
    """
    vs = [np.asarray(v, dtype=complex) for v in jumps]
    d = vs[0].shape[0]
    eye = np.eye(d, dtype=complex)
    rows = [np.kron(eye, v) - np.kron(v.T, eye) for v in vs]
    stack = np.vstack(rows)
    _u, s, vh = np.linalg.svd(stack)
    cutoff = tol * max(1.0, s[0] if s.size else 1.0)
    null_mask = np.ones(d * d, dtype=bool)
    null_mask[: s.size] = s <= cutoff
    # columns of vh^H spanning the nullspace
    basis = [vh.conj().T[:, i].reshape(d, d, order="F")
             for i in range(d * d) if null_mask[i]]
    return len(basis), basis


def algebra_dimension(jumps, max_rounds=None):
    """Dimension of the unital *-algebra generated by the jump set.

    Grown by word spanning: repeatedly right-multiply an orthonormal basis
    by the generators (and their adjoints) until the rank stabilizes.
    Irreducibility is equivalent to this reaching d^2 for *-closed sets.
    """
    vs = [np.asarray(v, dtype=complex) for v in jumps]
    d = vs[0].shape[0]
    gens = [np.eye(d, dtype=complex)] + vs + [v.conj().T for v in vs]
    basis = _orthonormalize([g.reshape(-1) for g in gens])
    rounds = max_rounds or d * d
    for _ in range(rounds):
        words = list(basis)
        for b in basis:
            bm = b.reshape(d, d)
            for g in gens[1:]:
                words.append((bm @ g).reshape(-1))
        new_basis = _orthonormalize(words)
        if len(new_basis) == len(basis):
            break
        basis = new_basis
    return len(basis)


def _orthonormalize(vectors, tol=1e-10):
    a = np.array(vectors).T
    _u, s, _vh = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return [_u[:, i] for i in range(rank)]


def _block_structure_check(jumps, basis, seed=0):
    """Second look at reducibility: random self-adjoint commutant element.

    Draw S = sum g_i B_i over the commutant basis, Hermitize, and verify S
    stays in the commutant; its eigenvalue clusters define the invariant
    blocks.  A one-dimensional commutant forces S to be scalar (single
    cluster); otherwise the eigenspaces of S are invariant under every
    jump, which is verified directly.
    """
    rng = np.random.default_rng(seed)
    d = basis[0].shape[0]
    coeff = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    s_raw = sum(c * b for c, b in zip(coeff, basis))
    s = 0.5 * (s_raw + s_raw.conj().T)
    in_comm = max(
        np.linalg.norm(s @ np.asarray(v) - np.asarray(v) @ s, "fro") for v in jumps
    )
    if in_comm > 1e-8 * max(1.0, np.linalg.norm(s, "fro")):
        return {"applicable": False, "notes": "commutant not *-closed"}
    w, u = np.linalg.eigh(s)
    scale = max(1.0, float(np.max(np.abs(w))))
    clusters = 1 + int(np.sum(np.diff(w) > 1e-8 * scale))
    # eigenspace invariance under the jumps (only meaningful when > 1 block)
    defect = 0.0
    start = 0
    bounds = [i + 1 for i in range(len(w) - 1) if w[i + 1] - w[i] > 1e-8 * scale]
    for end in bounds + [len(w)]:
        block = u[:, start:end]
        proj = block @ block.conj().T
        comp = np.eye(d) - proj
        for v in jumps:
            defect = max(defect, np.linalg.norm(comp @ np.asarray(v) @ proj, "fro"))
        start = end
    return {
        "applicable": True,
        "n_blocks": clusters,
        "invariance_defect": float(defect),
    }


# --------------------------------------------------------------------------
# completely-positive structure
# --------------------------------------------------------------------------

def choi_matrix(superop):
    """Choi matrix C = sum_{ij} E_ij (x) Phi(E_ij) of a superoperator."""
    d = superop.dim
    c = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            c += np.kron(e, superop(e))
    return c


# --------------------------------------------------------------------------
# standing assumptions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    """One record per standing assumption: name, verdict, evidence, notes."""

    records: tuple

    @property
    def hard_pass(self):
        return all(r["verdict"] != "fail" for r in self.records)

    @property
    def clean_pass(self):
        return all(r["verdict"] == "pass" for r in self.records)

    def to_dict(self):
        return {"assumptions": list(self.records), "all_pass": self.hard_pass}

    def __getitem__(self, name):
        for r in self.records:
            if r["name"] == name:
                return r
        raise KeyError(name)


def check_assumptions(atom, res, h_p, eta, gap_floor=1e-3,
                      moderate_const=1.0, zero_tol=1e-10, seed=0):
    """Verify the standing assumptions; report-only (never raises on fail).

    Records, in order:
      reservoir-analyticity : strip integrability of the glued functions,
                              largest passing half-width on a ladder;
      moderate-pump         : |eta| <= moderate_const * lambda^2;
      spectral-gap          : spec((eta/2) L_p + lambda^2 L_R) has simple 0
                              and the rest in Re <= -lambda^2 * gap_floor;
      jump-irreducibility   : commutant of the jump set is trivial
                              (cross-checked two independent ways);
      no-first-order-coupling : odd single-fermion coupling, by construction
                              for the built-in family ("attested" for raw
                              GKS input, which carries no microscopic model).
    """
    records = []
    lam = res.lam

    # --- reservoir analyticity --------------------------------------------
    if res.gks_jumps is not None:
        records.append({
            "name": "reservoir-analyticity", "verdict": "attested",
            "evidence": {}, "notes": "raw GKS jumps carry no form factors",
        })
    else:
        from .reservoir import _effective_beta
        beta = _effective_beta(res.beta)
        ladder = [r for r in (0.05, 0.1, 0.2, 0.4, 0.5) if r < 0.98 * np.pi / beta]
        best_r, best_val = 0.0, 0.0
        for r in ladder:
            reports = [check_strip_analyticity(ff, res.beta, r, n_lines=5)
                       for ff in res.form_factors]
            if all(rep.verdict == "finite" for rep in reports):
                best_r = r
                best_val = max(rep.max_line_value for rep in reports)
            else:
                break
        records.append({
            "name": "reservoir-analyticity",
            "verdict": "pass" if best_r > 0 else "fail",
            "evidence": {"largest_passing_half_width": best_r,
                         "max_line_integral": best_val,
                         "ladder": ladder},
            "notes": "sup over sampled lines of the squared L2 bound",
        })

    # --- moderate pump -----------------------------------------------------
    if lam != 0:
        ratio = abs(eta) / lam**2
    else:
        ratio = 0.0 if eta == 0 else np.inf
    records.append({
        "name": "moderate-pump",
        "verdict": "pass" if ratio <= moderate_const else "fail",
        "evidence": {"eta": eta, "lambda": lam, "ratio": ratio,
                     "bound": moderate_const},
        "notes": "|eta| <= C * lambda^2",
    })

    # --- spectral gap of the averaged generator ----------------------------
    data = reservoir_lindbladian(atom, res)
    pump = validate_pump(atom, h_p)
    if lam == 0:
        records.append({
            "name": "spectral-gap", "verdict": "attested",
            "evidence": {"gap": None},
            "notes": "lambda = 0: the gap statement is vacuous",
        })
    else:
        avg = (0.5 * eta) * pump.lindbladian + lam**2 * data.l_r
        mu = np.linalg.eigvals(avg.matrix)
        zero_mask = np.abs(mu) <= zero_tol
        n_zero = int(np.sum(zero_mask))
        rest = mu[~zero_mask]
        gap = float(-np.max(rest.real)) if rest.size else np.inf
        gap_ok = n_zero == 1 and gap >= lam**2 * gap_floor
        records.append({
            "name": "spectral-gap",
            "verdict": "pass" if gap_ok else "fail",
            "evidence": {"zero_multiplicity": n_zero, "gap": gap,
                         "gap_over_lambda2": gap / lam**2,
                         "gap_floor": gap_floor},
            "notes": "spectrum of (eta/2) L_p + lambda^2 L_R",
        })

    # --- irreducibility of the jump set ------------------------------------
    jumps = [v for (v, _c, _label) in data.jumps]
    if jumps:
        dim_c, basis = commutant_dimension(jumps)
        dim_a = algebra_dimension(jumps)
        cross = _block_structure_check(jumps, basis, seed=seed)
        agree = (dim_c == 1) == (dim_a == atom.dim**2)
        if cross.get("applicable"):
            agree = agree and ((dim_c == 1) == (cross["n_blocks"] == 1))
        verdict = "pass" if (dim_c == 1 and agree) else "fail"
        evidence = {"commutant_dim": dim_c, "algebra_dim": dim_a,
                    "algebra_dim_full": atom.dim**2,
                    "methods_agree": bool(agree), "block_check": cross}
    else:
        verdict, evidence = "fail", {"commutant_dim": None,
                                     "notes": "empty jump set"}
    records.append({
        "name": "jump-irreducibility", "verdict": verdict,
        "evidence": evidence,
        "notes": "trivial commutant of the jump operators",
    })

    # --- no first-order coupling -------------------------------------------
    if res.gks_jumps is not None:
        records.append({
            "name": "no-first-order-coupling", "verdict": "attested",
            "evidence": {},
            "notes": "cannot be derived from raw GKS jumps; user-attested",
        })
    else:
        records.append({
            "name": "no-first-order-coupling", "verdict": "pass",
            "evidence": {"interaction_monomials": 1},
            "notes": "linear-in-field coupling leaves no level-diagonal "
                     "first-order term by construction",
        })

    return AssumptionReport(records=tuple(records))
