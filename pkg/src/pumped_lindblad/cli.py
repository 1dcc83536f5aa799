"""Command-line front end: config ingestion and deterministic artifacts.

Subcommands:

  check    validate the standing assumptions, write report.json
  evolve   integrate the master equation, write trajectory.csv + summary.json
  floquet  spectrum/gap/monodromy report, write floquet.json
  oracle   resolvent-oracle convergence + PV coefficients, write oracle.json

Exit codes: 0 success, 1 usage/config error, 2 assumption failure,
3 numerical failure.  All outputs are deterministic for a fixed config and
seed: summation orders are fixed, JSON keys are sorted, CSV floats are
written with 17 significant digits and LF endings, and no timestamps ever
enter file contents.
"""

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from .errors import (
    ConfigError,
    PumpedLindbladError,
    PumpSupportViolationError,
)
from .evolution import GeneratorBundle, evolve, populations, trajectory_to_csv
from .floquet import build_howland, floquet_spectrum, kato_block, monodromy, resonance_report
from .lindblad import check_assumptions, reservoir_lindbladian, resolvent_oracle
from .operator_core import (
    atomic_lindbladian,
    decompose_atom,
    validate_pump,
)
from .reservoir import FormFactor, ReservoirSpec

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ASSUMPTION = 2
EXIT_NUMERICAL = 3

SCHEMA_VERSION = "1"


# --------------------------------------------------------------------------
# config parsing
# --------------------------------------------------------------------------

def _as_complex(value, what):
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(x, (int, float)) for x in value)):
        return complex(value[0], value[1])
    raise ConfigError(f"{what}: expected number or [re, im], got {value!r}")


def _as_matrix(rows, what):
    try:
        mat = np.array([[_as_complex(x, what) for x in row] for row in rows])
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"{what}: {exc}") from None
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ConfigError(f"{what}: expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat.view(float))):
        raise ConfigError(f"{what}: non-finite entries")
    return mat


def _matrix_rows(mat):
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(mat)]


def _complex_pairs(values):
    vals = np.asarray(values)
    order = np.lexsort((vals.real, vals.imag))
    return [[float(v.real), float(v.imag)] for v in vals[order]]


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _require_finite(value, what):
    if not isinstance(value, (int, float)) or not np.isfinite(value):
        raise ConfigError(f"{what}: expected a finite number, got {value!r}")
    return float(value)


class RunSetup:
    """Parsed and constructed model objects for one run."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.warnings = []

        atom_cfg = cfg.get("atom")
        if not isinstance(atom_cfg, dict):
            raise ConfigError("missing 'atom' section")
        has_levels = "energies" in atom_cfg
        has_matrix = "matrix" in atom_cfg
        if has_levels == has_matrix:
            raise ConfigError("atom: give exactly one of 'energies' or 'matrix'")
        if has_levels:
            energies = [_require_finite(e, "atom.energies") for e in atom_cfg["energies"]]
            degs = atom_cfg.get("degeneracies", [1] * len(energies))
            if len(degs) != len(energies):
                raise ConfigError("atom: degeneracies length mismatch")
            diag = np.concatenate([[e] * int(n) for e, n in zip(energies, degs)])
            h_at = np.diag(diag.astype(complex))
        else:
            h_at = _as_matrix(atom_cfg["matrix"], "atom.matrix")
        self.atom = decompose_atom(h_at)

        res_cfg = cfg.get("reservoir")
        if not isinstance(res_cfg, dict):
            raise ConfigError("missing 'reservoir' section")
        beta = _require_finite(res_cfg.get("beta", -1), "reservoir.beta")
        lam = _require_finite(res_cfg.get("lambda", 0.0), "reservoir.lambda")
        has_closed = "couplings_Q" in res_cfg or "form_factors" in res_cfg
        has_gks = "gks_jumps" in res_cfg
        if has_closed == has_gks:
            raise ConfigError(
                "reservoir: give exactly one of (form_factors + couplings_Q) or gks_jumps"
            )
        if has_gks:
            jumps = [_as_matrix(v, "reservoir.gks_jumps") for v in res_cfg["gks_jumps"]]
            self.res = ReservoirSpec(beta=beta, lam=lam, form_factors=(),
                                     couplings=(), gks_jumps=tuple(jumps))
        else:
            ff_cfg = res_cfg.get("form_factors", [])
            q_cfg = res_cfg.get("couplings_Q", [])
            if not ff_cfg or len(ff_cfg) != len(q_cfg):
                raise ConfigError("reservoir: need matching form_factors and couplings_Q")
            ffs = []
            for i, item in enumerate(ff_cfg):
                terms = item if isinstance(item, list) else [item]
                parsed = []
                for term in terms:
                    parsed.append((
                        _as_complex(term.get("weight"), f"form_factors[{i}].weight"),
                        int(term.get("exponent_p", 1)),
                        _require_finite(term.get("decay_c"), f"form_factors[{i}].decay_c"),
                    ))
                ffs.append(FormFactor(tuple(parsed)))
            qs = [_as_matrix(q, "reservoir.couplings_Q") for q in q_cfg]
            for q in qs:
                if q.shape[0] != self.atom.dim:
                    raise ConfigError("couplings_Q dimension differs from atom")
            self.res = ReservoirSpec(beta=beta, lam=lam, form_factors=tuple(ffs),
                                     couplings=tuple(qs))

        pump_cfg = cfg.get("pump")
        if not isinstance(pump_cfg, dict):
            raise ConfigError("missing 'pump' section")
        self.h_p = _as_matrix(pump_cfg.get("h_p"), "pump.h_p")
        self.eta = _require_finite(pump_cfg.get("eta", 0.0), "pump.eta")
        omega = pump_cfg.get("omega")
        natural = self.atom.pump_freq
        if omega is None:
            self.omega = natural
        else:
            self.omega = _require_finite(omega, "pump.omega")
            if abs(self.omega - natural) > 1e-9 * max(1.0, abs(natural)):
                self.warnings.append(
                    f"pump frequency {self.omega} detuned from level spread {natural}"
                )

        sim = cfg.get("sim", {})
        self.t_end = sim.get("t_end")
        self.n_out = int(sim.get("n_out", 201))
        self.rtol = float(sim.get("rtol", 1e-8))
        self.atol = float(sim.get("atol", 1e-10))
        flo = cfg.get("floquet", {})
        self.n_modes = int(flo.get("n_modes", 32))
        self.contour_points = int(flo.get("contour_points", 64))
        self.seed = int(cfg.get("seed", 0))

        self._data = None
        self._pump = None

    @property
    def data(self):
        if self._data is None:
            self._data = reservoir_lindbladian(self.atom, self.res)
        return self._data

    @property
    def pump(self):
        if self._pump is None:
            self._pump = validate_pump(self.atom, self.h_p)
        return self._pump

    def bundle(self, lam=None, eta=None):
        lam = self.res.lam if lam is None else lam
        eta = self.eta if eta is None else eta
        return GeneratorBundle(
            l_at=atomic_lindbladian(self.atom),
            l_p=self.pump.lindbladian,
            l_r=self.data.l_r,
            lam=lam, eta=eta, omega=self.omega,
        )

    def initial_state(self):
        rho0_cfg = self.cfg.get("sim", {}).get("rho0")
        if rho0_cfg is None:
            p1 = self.atom.projections[0]
            return p1 / np.trace(p1)
        return _as_matrix(rho0_cfg, "sim.rho0")


def _sanitize(obj):
    """Make a payload JSON-clean: non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _write_json(path, payload):
    payload = _sanitize(dict(payload))
    payload["schema_version"] = SCHEMA_VERSION
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def _run_check(setup, out_dir):
    report = check_assumptions(setup.atom, setup.res, setup.h_p, setup.eta,
                               seed=setup.seed)
    payload = report.to_dict()
    payload["warnings"] = setup.warnings
    _write_json(out_dir / "report.json", payload)
    for rec in report.records:
        if rec["verdict"] == "attested":
            click.echo(f"warning: assumption '{rec['name']}' attested, not proven",
                       err=True)
    for w in setup.warnings:
        click.echo(f"warning: {w}", err=True)
    return report


def _guard_assumptions(setup, out_dir, force):
    report = _run_check(setup, out_dir)
    if not report.hard_pass and not force:
        click.echo("assumption check failed (use --force to run anyway)", err=True)
        return False
    return True


# --------------------------------------------------------------------------
# subcommand bodies (shared by direct invocation and sweeps)
# --------------------------------------------------------------------------

def _do_check(cfg, out_dir, **_kw):
    setup = RunSetup(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _run_check(setup, out_dir)
    return EXIT_OK if report.hard_pass else EXIT_ASSUMPTION


def _do_evolve(cfg, out_dir, force=False, **_kw):
    setup = RunSetup(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not _guard_assumptions(setup, out_dir, force):
        return EXIT_ASSUMPTION
    if setup.t_end is None:
        raise ConfigError("sim.t_end is required for evolve")
    grid = np.linspace(0.0, float(setup.t_end), setup.n_out)
    traj = evolve(setup.bundle(), setup.initial_state(), float(setup.t_end),
                  output_grid=grid, rtol=setup.rtol, atol=setup.atol)
    trajectory_to_csv(setup.atom, traj, out_dir / "trajectory.csv")
    pops = populations(setup.atom, traj)
    summary = {
        "final_populations": [float(x) for x in pops[-1]],
        "max_trace_drift": float(np.max(traj.trace_error)),
        "min_eigenvalue": float(np.min(traj.min_eig)),
        "t_end": float(setup.t_end),
        "n_out": setup.n_out,
        "rtol": setup.rtol,
        "atol": setup.atol,
        "method": traj.meta["method"],
    }
    _write_json(out_dir / "summary.json", summary)
    return EXIT_OK


def _do_floquet(cfg, out_dir, force=False, order_check=False, **_kw):
    setup = RunSetup(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not _guard_assumptions(setup, out_dir, force):
        return EXIT_ASSUMPTION
    bundle = setup.bundle()
    f_state = build_howland(bundle, setup.n_modes, picture="state")
    spec_state = floquet_spectrum(f_state)
    f_heis = build_howland(bundle, setup.n_modes, picture="heisenberg")
    resonances = resonance_report(f_heis)
    mono = monodromy(bundle, n_modes=setup.n_modes, rtol=min(setup.rtol, 1e-10))

    interior_eigs = spec_state.eigenvalues[spec_state.interior]
    payload = {
        "n_modes": setup.n_modes,
        "omega": setup.omega,
        "gap": spec_state.gap,
        "gap_over_lambda2": spec_state.gap_over_lambda2,
        "degenerate": bool(spec_state.degenerate),
        "interior_eigenvalues": _complex_pairs(interior_eigs),
        "resonance_max_residual": resonances["max_residual"],
        "resonance_disc_counts": {str(p): c for p, c in resonances["disc_counts"].items()},
        "monodromy_max_match_error": mono.max_match_error,
    }
    if spec_state.degenerate:
        click.echo("warning: zero spectral gap (degenerate case)", err=True)
    if order_check:
        lam = setup.res.lam
        residuals = {}
        for scale in (1.0, 0.5):
            b = setup.bundle(lam=lam * scale, eta=setup.eta * scale**2)
            f1 = build_howland(b, setup.n_modes, picture="state")
            f0 = build_howland(
                GeneratorBundle(l_at=b.l_at, l_p=b.l_p, l_r=b.l_r,
                                lam=0.0, eta=0.0, omega=b.omega),
                setup.n_modes, picture="state")
            kb = kato_block(f1, f0, 0.0, m_points=setup.contour_points)
            residuals[scale] = kb.residual
        payload["order_check"] = {
            "residual_at_lambda": residuals[1.0],
            "residual_at_half_lambda": residuals[0.5],
            "ratio": residuals[0.5] / residuals[1.0] if residuals[1.0] else None,
        }
    _write_json(out_dir / "floquet.json", payload)
    return EXIT_OK


def _do_oracle(cfg, out_dir, force=False, **_kw):
    setup = RunSetup(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not _guard_assumptions(setup, out_dir, force):
        return EXIT_ASSUMPTION
    if setup.res.gks_jumps is not None:
        raise ConfigError("oracle needs the form-factor route, not raw GKS jumps")
    data = setup.data
    ladder = [1e-2, 5e-3, 2.5e-3]
    mats = []
    errors = []
    for reg in ladder:
        op = resolvent_oracle(setup.atom, setup.res, reg)
        mats.append(op.matrix)
        errors.append(float(np.linalg.norm(op.matrix - data.l_r.matrix, 2)))
    orders = [float(np.log2(errors[i] / errors[i + 1])) for i in range(len(errors) - 1)]
    # quadratic Richardson step on the geometric ladder (4h, 2h, h)
    extrap = (8.0 * mats[2] - 6.0 * mats[1] + mats[0]) / 3.0
    extrap_err = float(np.linalg.norm(extrap - data.l_r.matrix, 2))

    from .reservoir import pv_coefficient
    from .operator_core import bohr_spectrum
    bohr = bohr_spectrum(setup.atom)
    pv_records = []
    for l, ff in enumerate(setup.res.form_factors, start=1):
        for eps in bohr.frequencies:
            if eps == 0.0:
                continue
            pv_records.append({
                "channel": l,
                "eps": float(eps),
                "value": pv_coefficient(ff, setup.res.beta, eps),
            })
    payload = {
        "eps_reg": ladder,
        "errors": errors,
        "observed_orders": orders,
        "extrapolated_error": extrap_err,
        "pv_coefficients": pv_records,
        "pv_rule_agreement": "two independent rules agree to 1e-7 relative (enforced)",
    }
    _write_json(out_dir / "oracle.json", payload)
    return EXIT_OK


_COMMANDS = {
    "check": _do_check,
    "evolve": _do_evolve,
    "floquet": _do_floquet,
    "oracle": _do_oracle,
}

_SWEEP_PATHS = {
    "lambda": ("reservoir", "lambda"),
    "beta": ("reservoir", "beta"),
    "eta": ("pump", "eta"),
    "t_end": ("sim", "t_end"),
}


def _apply_sweep_value(cfg, key, raw):
    import copy
    new = copy.deepcopy(cfg)
    if key in _SWEEP_PATHS:
        section, field = _SWEEP_PATHS[key]
    elif "." in key:
        section, field = key.split(".", 1)
    else:
        raise ConfigError(f"unknown sweep key {key!r}")
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"sweep value {raw!r} is not a number") from None
    new.setdefault(section, {})[field] = value
    return new


def _dispatch(command, config_path, out, force, order_check, sweep):
    try:
        cfg = load_config(config_path)
        out_dir = Path(out)
        body = _COMMANDS[command]
        if sweep:
            if "=" not in sweep:
                raise ConfigError("--sweep expects key=v1,v2,...")
            key, _, values = sweep.partition("=")
            tokens = [v for v in values.split(",") if v]
            if not tokens:
                raise ConfigError("--sweep got an empty value list")
            jobs = []
            with ThreadPoolExecutor(max_workers=min(4, len(tokens))) as pool:
                for tok in tokens:
                    sub_cfg = _apply_sweep_value(cfg, key, tok)
                    sub_dir = out_dir / f"sweep-{key}-{tok}"
                    jobs.append(pool.submit(body, sub_cfg, sub_dir,
                                            force=force, order_check=order_check))
                codes = [j.result() for j in jobs]
            return max(codes)
        return body(cfg, out_dir, force=force, order_check=order_check)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except PumpSupportViolationError as exc:
        click.echo(f"invalid pump operator: {exc}", err=True)
        return EXIT_CONFIG
    except PumpedLindbladError as exc:
        click.echo(f"numerical failure: {type(exc).__name__}: {exc}", err=True)
        return EXIT_NUMERICAL


def _common_options(fn):
    fn = click.argument("config_path", metavar="CONFIG.JSON")(fn)
    fn = click.option("--out", default="out", show_default=True,
                      help="output directory")(fn)
    fn = click.option("--force", is_flag=True,
                      help="run even if assumption checks fail")(fn)
    fn = click.option("--sweep", default=None, metavar="KEY=V1,V2,...",
                      help="fan out over a parameter (lambda, eta, beta, t_end)")(fn)
    return fn


@click.group()
def main():
    """Effective Lindbladian of a pumped impurity: build, evolve, verify."""


@main.command()
@_common_options
def check(config_path, out, force, sweep):
    """Verify the standing assumptions and write report.json."""
    sys.exit(_dispatch("check", config_path, out, force, False, sweep))


@main.command(name="evolve")
@_common_options
def evolve_cmd(config_path, out, force, sweep):
    """Integrate the master equation; write trajectory.csv and summary.json."""
    sys.exit(_dispatch("evolve", config_path, out, force, False, sweep))


@main.command(name="floquet")
@_common_options
@click.option("--order-check", is_flag=True,
              help="also record the perturbation-block residual at two couplings")
def floquet_cmd(config_path, out, force, sweep, order_check):
    """Spectrum, gap, resonances, monodromy; write floquet.json."""
    sys.exit(_dispatch("floquet", config_path, out, force, order_check, sweep))


@main.command()
@_common_options
def oracle(config_path, out, force, sweep):
    """Resolvent-oracle convergence and PV coefficients; write oracle.json."""
    sys.exit(_dispatch("oracle", config_path, out, force, False, sweep))


if __name__ == "__main__":
    main()
