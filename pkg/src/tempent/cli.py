"""Command-line front end: experiment orchestration and result files.

Seven subcommands: `simulate` (single-trajectory debug dump), `barrier`
(ensemble barrier curves), `profile` (per-cut curves), `predict`
(closed-form predictor tables), `spectrum` (transfer-operator spectra),
`hopping` (momentum solutions and transitions), and `compare` (Monte
Carlo against exact contraction and predictors; exits nonzero on any
breach, so it doubles as a CI gate).

Conventions shared by every subcommand:

* data goes to CSV/JSON files under --out (UTF-8, header row, '.'
  decimal) plus one JSON summary line on stdout; progress and logging
  go to stderr only;
* every data file starts with a `# manifest: <hash>` line tying it to
  the run manifest written next to it; the hash covers the subcommand,
  its parameters, and the master seed, so reruns with an equal manifest
  core produce byte-identical data files;
* --seed omitted draws a fresh master seed from OS entropy and records
  it in the manifest;
* --config FILE (TOML or JSON) supplies defaults for any flag not
  given on the command line;
* validation failures print a machine-readable error JSON on stdout
  and exit with status 2.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import math
import secrets
import subprocess
import sys
from datetime import datetime, timezone
from pathlib import Path
from time import perf_counter

import click
import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import __version__, analytics, hopping as hopping_mod, sim, transfer

SCHEMA_VERSION = 1
SIM_CSV_HEADER = ("family", "T", "p", "L", "t_i", "mode",
                  "mean", "stderr", "n_traj", "seed")

log = logging.getLogger("tempent.cli")

_REPS = {"occupation": transfer.OCCUPATION, "reduced": transfer.REDUCED_Q3}


class CliError(Exception):
    """Validation failure destined for the machine-readable error JSON."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _fail(kind: str, message: str):
    click.echo(json.dumps({"error": {"type": kind, "message": message}}))
    sys.exit(2)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CliError as exc:
            _fail(exc.kind, str(exc))
        except (ValueError, ArithmeticError) as exc:
            _fail("validation", str(exc))
        except OSError as exc:
            _fail("io", str(exc))

    return wrapper


# -- config file and parameter plumbing -----------------------------------------


def _read_config(path: str) -> dict:
    text = Path(path).read_bytes()
    if path.endswith(".toml"):
        return tomllib.loads(text.decode("utf-8"))
    if path.endswith(".json"):
        return json.loads(text.decode("utf-8"))
    # no extension hint: try JSON first, then TOML
    try:
        return json.loads(text.decode("utf-8"))
    except json.JSONDecodeError:
        try:
            return tomllib.loads(text.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise CliError("config", f"{path}: neither JSON nor TOML: {exc}")


_CONFIG_ALIASES = {"out": "out_dir", "traj": "traj_index"}


def _merge_config(ctx: click.Context, values: dict) -> dict:
    """Fill defaulted flags from --config; explicit flags win."""
    path = values.pop("config_path", None)
    if not path:
        return values
    raw = _read_config(path)
    if not isinstance(raw, dict):
        raise CliError("config", f"{path}: top level must be a table/object")
    for key, val in raw.items():
        name = key.replace("-", "_")
        name = _CONFIG_ALIASES.get(name, name)
        if name not in values:
            raise CliError("config", f"{path}: unknown key {key!r} "
                                     f"for subcommand {ctx.command.name}")
        src = ctx.get_parameter_source(name)
        if src is None or src.name == "DEFAULT":
            values[name] = val
    return values


def _require(values: dict, *names: str):
    for name in names:
        if values.get(name) is None:
            flag = "--" + name.replace("_", "-")
            raise CliError("missing-parameter",
                           f"{flag} is required (flag or config file)")


def _parse_grid(p: float | None, p_grid: str | None) -> np.ndarray:
    """One rate or a grid; grids are 'start:stop:step' or comma lists."""
    if (p is None) == (p_grid is None):
        raise CliError("validation", "give exactly one of --p and --p-grid")
    if p is not None:
        return np.array([float(p)])
    if ":" in p_grid:
        parts = p_grid.split(":")
        if len(parts) != 3:
            raise CliError("validation",
                           f"grid {p_grid!r} is not start:stop:step")
        start, stop, step = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise CliError("validation", f"empty grid {p_grid!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = start + step * np.arange(n)
    else:
        values = np.array([float(x) for x in p_grid.split(",") if x.strip()])
    if values.size == 0:
        raise CliError("validation", f"empty grid {p_grid!r}")
    if np.any((values < 0) | (values > 1)):
        raise CliError("validation", "measurement rates must lie in [0, 1]")
    return values


def _resolve_seed(seed: int | None) -> tuple[int, bool]:
    if seed is not None:
        return int(seed), True
    fresh = secrets.randbits(63)
    log.info("no --seed given; drew master seed %d from OS entropy", fresh)
    return fresh, False


def _resolve_threads(threads: int | None) -> int:
    return sim.default_threads() if threads is None else max(1, threads)


# -- manifest and file output ----------------------------------------------------


def _build_identifier() -> dict:
    ident = {"package": f"tempent {__version__}"}
    try:
        head = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
        ident["git"] = head.stdout.strip() if head.returncode == 0 else "unknown"
    except OSError:
        ident["git"] = "unknown"
    return ident


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class RunManifest:
    """Deterministic core (hashed) plus run bookkeeping (not hashed)."""

    def __init__(self, subcommand: str, parameters: dict, master_seed: int):
        self.core = {
            "schema_version": SCHEMA_VERSION,
            "subcommand": subcommand,
            "parameters": parameters,
            "master_seed": master_seed,
        }
        self.hash = hashlib.sha256(
            _canonical_json(self.core).encode("utf-8")).hexdigest()[:16]
        self.outputs: list[str] = []
        self._t0 = perf_counter()

    def write(self, out_dir: Path) -> Path:
        doc = dict(self.core)
        doc["manifest_hash"] = self.hash
        doc["build"] = _build_identifier()
        doc["wall_clock_utc"] = datetime.now(timezone.utc).isoformat()
        doc["elapsed_seconds"] = round(perf_counter() - self._t0, 3)
        doc["outputs"] = self.outputs
        path = out_dir / f"{self.core['subcommand']}_manifest.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        log.info("wrote %s", path)
        return path


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_csv(manifest: RunManifest, out_dir: Path, name: str,
               header: tuple, rows) -> Path:
    path = out_dir / name
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# manifest: {manifest.hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    manifest.outputs.append(name)
    log.info("wrote %s (%d rows)", path, len(rows))
    return path


def _write_json(manifest: RunManifest, out_dir: Path, name: str,
                payload: dict) -> Path:
    path = out_dir / name
    doc = {"manifest": manifest.hash, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    manifest.outputs.append(name)
    log.info("wrote %s", path)
    return path


def _emit(manifest: RunManifest, out_dir: Path, summary: dict):
    manifest.write(out_dir)
    line = {"manifest_hash": manifest.hash, "outputs": manifest.outputs}
    line.update(summary)
    click.echo(_canonical_json(line))


def _out_dir(values: dict) -> Path:
    out = Path(values.get("out_dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- shared option stacks --------------------------------------------------------


def _io_options(f):
    f = click.option("--config", "config_path",
                     type=click.Path(exists=True, dir_okay=False),
                     default=None, help="TOML/JSON file with flag defaults.")(f)
    f = click.option("--out", "out_dir", default=".", show_default=True,
                     type=click.Path(file_okay=False),
                     help="Directory for output files.")(f)
    return f


def _geometry_options(f):
    f = click.option("--L-max", "L_max", type=int, default=None,
                     help="Largest bath size (spatial steps).")(f)
    f = click.option("--T", "T", type=int, default=None,
                     help="Temporal extent of the chain (even).")(f)
    f = click.option("--family", default="sdki-f", show_default=True,
                     help="Gate family (swap, iswap, sdki-f, sdki-s, "
                          "sdki-h, sdki-r, random-du, identity).")(f)
    return f


def _ensemble_options(f):
    f = click.option("--threads", type=int, default=None,
                     help="Worker processes (default: TEMPENT_THREADS "
                          "or single-threaded).")(f)
    f = click.option("--seed", type=int, default=None,
                     help="Master seed; omitted = fresh OS entropy.")(f)
    f = click.option("--n-traj", "n_traj", type=int, default=100,
                     show_default=True, help="Trajectories per point.")(f)
    f = click.option("--cuts", type=click.Choice(["odd", "all"]),
                     default="odd", show_default=True,
                     help="Cut positions entering the barrier maximum.")(f)
    return f


def _rate_options(f):
    f = click.option("--p-grid", "p_grid", default=None,
                     help="Measurement-rate grid start:stop:step or "
                          "comma list (alternative to --p).")(f)
    f = click.option("--p", type=float, default=None,
                     help="Measurement rate in [0, 1].")(f)
    return f


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__, prog_name="tempent")
def main():
    """Temporal-entanglement barriers: sampling, exact spectra, predictors."""
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


# -- simulate --------------------------------------------------------------------


@main.command()
@_geometry_options
@click.option("--p", type=float, default=0.0, show_default=True,
              help="Measurement rate in [0, 1].")
@click.option("--traj", "traj_index", type=int, default=0, show_default=True,
              help="Trajectory index within the seeded ensemble.")
@click.option("--seed", type=int, default=None,
              help="Master seed; omitted = fresh OS entropy.")
@click.option("--cuts", type=click.Choice(["odd", "all"]), default="odd",
              show_default=True)
@_io_options
@click.pass_context
@_guarded
def simulate(ctx, **kwargs):
    """Debug dump of a single trajectory: per-cut entropies at every step."""
    v = _merge_config(ctx, kwargs)
    _require(v, "T", "L_max")
    seed, _ = _resolve_seed(v["seed"])
    out = _out_dir(v)
    params = {k: v[k] for k in ("family", "T", "L_max", "p", "traj_index",
                                "cuts")}
    manifest = RunManifest("simulate", params, seed)

    cfg = sim.ExperimentConfig(T=v["T"], L_max=v["L_max"], p=v["p"],
                               family=v["family"], n_traj=v["traj_index"] + 1,
                               master_seed=seed, cut_parity=v["cuts"])
    prof = sim.run_trajectory(cfg, v["traj_index"])
    cut_ids = cfg.admissible_cuts()
    rows = []
    for i, L in enumerate(prof.steps):
        rows.append((v["family"], v["T"], v["p"], L, 0, "trajectory",
                     prof.barrier[i], 0.0, 1, seed))
        for c in cut_ids:
            rows.append((v["family"], v["T"], v["p"], L, c, "trajectory",
                         prof.per_cut[i, c - 1], 0.0, 1, seed))
    _write_csv(manifest, out, "simulate.csv", SIM_CSV_HEADER, rows)
    _emit(manifest, out, {"peak": {"S_T": prof.peak[0], "L_c": prof.peak[1]},
                          "master_seed": seed})


# -- barrier and profile ---------------------------------------------------------


def _modes_for(mode_flag: str, per_cut: bool) -> tuple[str, ...]:
    if mode_flag == "all":
        return ("q-af", "a-af") if per_cut else sim.MODES
    if per_cut and mode_flag in ("q-ef", "a-ef"):
        raise CliError("validation",
                       f"mode {mode_flag} maximizes before averaging; "
                       "per-cut curves exist only for q-af and a-af")
    return (mode_flag,)


def _grid_ensembles(v, seed, threads):
    """Yield (p, EnsembleResult) over the requested rate grid."""
    for p in _parse_grid(v["p"], v["p_grid"]):
        cfg = sim.ExperimentConfig(T=v["T"], L_max=v["L_max"], p=float(p),
                                   family=v["family"], n_traj=v["n_traj"],
                                   master_seed=seed, cut_parity=v["cuts"])
        log.info("ensemble: family=%s T=%d L_max=%d p=%g n_traj=%d",
                 v["family"], v["T"], v["L_max"], p, v["n_traj"])
        yield float(p), sim.run_ensemble(cfg, threads=threads)


@main.command()
@_geometry_options
@_rate_options
@_ensemble_options
@click.option("--mode", default="all", show_default=True,
              type=click.Choice(["q-af", "q-ef", "a-af", "a-ef", "all"]),
              help="Averaging order(s) to report.")
@_io_options
@click.pass_context
@_guarded
def barrier(ctx, **kwargs):
    """Ensemble-averaged barrier curves S_T(L); t_i=0 marks the maximum."""
    v = _merge_config(ctx, kwargs)
    _require(v, "T", "L_max")
    modes = _modes_for(v["mode"], per_cut=False)
    seed, _ = _resolve_seed(v["seed"])
    threads = _resolve_threads(v["threads"])
    out = _out_dir(v)
    params = {k: v[k] for k in ("family", "T", "L_max", "p", "p_grid",
                                "n_traj", "cuts", "mode")}
    manifest = RunManifest("barrier", params, seed)

    rows, peaks = [], {}
    for p, res in _grid_ensembles(v, seed, threads):
        for mode in modes:
            mean, err = res.barrier[mode]
            for i, L in enumerate(res.steps):
                rows.append((v["family"], v["T"], p, L, 0, mode,
                             mean[i], err[i], v["n_traj"], seed))
            s_pk, l_c = res.peaks[mode]
            peaks.setdefault(f"{p:.6g}", {})[mode] = {"S_T": s_pk, "L_c": l_c}
    _write_csv(manifest, out, "barrier.csv", SIM_CSV_HEADER, rows)
    _write_json(manifest, out, "barrier_summary.json", {"peaks": peaks})
    _emit(manifest, out, {"peaks": peaks, "master_seed": seed})


@main.command()
@_geometry_options
@_rate_options
@_ensemble_options
@click.option("--mode", default="all", show_default=True,
              type=click.Choice(["q-af", "a-af", "q-ef", "a-ef", "all"]),
              help="Averaging order(s); per-cut data admits q-af and a-af.")
@_io_options
@click.pass_context
@_guarded
def profile(ctx, **kwargs):
    """Per-cut entropy curves over (L, t_i)."""
    v = _merge_config(ctx, kwargs)
    _require(v, "T", "L_max")
    modes = _modes_for(v["mode"], per_cut=True)
    seed, _ = _resolve_seed(v["seed"])
    threads = _resolve_threads(v["threads"])
    out = _out_dir(v)
    params = {k: v[k] for k in ("family", "T", "L_max", "p", "p_grid",
                                "n_traj", "cuts", "mode")}
    manifest = RunManifest("profile", params, seed)

    rows = []
    ln2 = math.log(2.0)
    for p, res in _grid_ensembles(v, seed, threads):
        cut_ids = res.config.admissible_cuts()
        for mode in modes:
            if mode == "q-af":
                mean = res.per_cut_mean
                err = res.per_cut_stderr
            else:
                with np.errstate(divide="ignore"):
                    mean = -np.log2(res.per_cut_purity_mean)
                    err = res.per_cut_purity_stderr / (
                        res.per_cut_purity_mean * ln2)
            for i, L in enumerate(res.steps):
                for c in cut_ids:
                    rows.append((v["family"], v["T"], p, L, c, mode,
                                 mean[i, c - 1], err[i, c - 1],
                                 v["n_traj"], seed))
    _write_csv(manifest, out, "profile.csv", SIM_CSV_HEADER, rows)
    _emit(manifest, out, {"master_seed": seed})


# -- predict ---------------------------------------------------------------------


@main.command()
@_geometry_options
@_rate_options
@click.option("--kappa", type=float, default=analytics.DEFAULT_KAPPA,
              show_default=True, help="Packing factor of the diffusive law.")
@_io_options
@click.pass_context
@_guarded
def predict(ctx, **kwargs):
    """Closed-form predictor tables over the (T, L, p) grid."""
    v = _merge_config(ctx, kwargs)
    _require(v, "T", "L_max")
    if v["family"] == "identity":
        raise CliError("validation", "identity wires have no barrier to predict")
    out = _out_dir(v)
    params = {k: v[k] for k in ("family", "T", "L_max", "p", "p_grid",
                                "kappa")}
    manifest = RunManifest("predict", params, 0)

    kind = analytics.scrambler_kind(v["family"])
    T, kappa = v["T"], v["kappa"]
    rows, summary = [], {}
    for p in _parse_grid(v["p"], v["p_grid"]):
        p = float(p)
        for L in range(1, v["L_max"] + 1):
            diffusive = ""
            if 0.0 < p < 1.0 and kind == "poor":
                diffusive = analytics.st_diffusive(p, (L - 1) / 2.0, kappa)
            rows.append((v["family"], kind, T, p, L,
                         analytics.barrier_no_meas(T, L),
                         analytics.barrier_lattice(T, L), diffusive))
        peak_s, l_c = analytics.peak_prediction(
            T, p, kind if p > 0 else "none")
        entry = {"peak_S_T": peak_s, "L_c": l_c}
        if 0.0 < p < 1.0:
            v_b = analytics.butterfly_velocity(p)
            entry["v_B"] = v_b
            entry["v_E"] = analytics.entanglement_velocity(v_b)
            entry["D"] = analytics.diffusion_constant(p)
        summary[f"{p:.6g}"] = entry
    _write_csv(manifest, out, "predict.csv",
               ("family", "kind", "T", "p", "L", "barrier_continuum",
                "barrier_lattice", "s_diffusive"), rows)
    _write_json(manifest, out, "predict_summary.json", {"predictions": summary})
    _emit(manifest, out, {"predictions": summary})


# -- spectrum --------------------------------------------------------------------


@main.command()
@click.option("--T", "T", type=int, default=None,
              help="Temporal extent of the chain (even).")
@_rate_options
@click.option("--sector", type=int, default=2, show_default=True,
              help="Conserved particle number of the diagonal block.")
@click.option("--top-k", "top_k", type=int, default=6, show_default=True,
              help="Eigenvalues per (p, sector), largest modulus first.")
@click.option("--rep", type=click.Choice(sorted(_REPS)), default="occupation",
              show_default=True,
              help="Averaged operator: hard-projected single-flavor "
                   "occupation chain, or the reduced three-state chain "
                   "whose boundary matches the sampled ensemble.")
@_io_options
@click.pass_context
@_guarded
def spectrum(ctx, **kwargs):
    """Leading spectra of the measurement-averaged transfer operator."""
    v = _merge_config(ctx, kwargs)
    _require(v, "T")
    out = _out_dir(v)
    params = {k: v[k] for k in ("T", "p", "p_grid", "sector", "top_k", "rep")}
    manifest = RunManifest("spectrum", params, 0)

    grid = _parse_grid(v["p"], v["p_grid"])
    rows, xi = [], {}
    for p in grid:
        op = transfer.build_mixed_transfer(v["T"], float(p), rep=_REPS[v["rep"]])
        block = transfer.sector_matrix(op, v["sector"])
        vals = transfer.leading_spectrum(block, k=min(v["top_k"], block.shape[0]))
        for idx, lam in enumerate(vals):
            rows.append((float(p), v["sector"], idx, lam.real, lam.imag))
        try:
            xi[f"{p:.6g}"] = transfer.decay_scale(op)
        except ValueError:
            xi[f"{p:.6g}"] = None
    p_c = None
    if grid.size >= 2:
        _, p_c = transfer.pt_scan(v["T"], v["sector"], grid, rep=_REPS[v["rep"]])
    _write_csv(manifest, out, "spectrum.csv",
               ("p", "sector", "index", "re_lambda", "im_lambda"), rows)
    summary = {"xi": xi, "p_c": p_c, "rep": v["rep"], "T": v["T"],
               "sector": v["sector"]}
    _write_json(manifest, out, "spectrum_summary.json", summary)
    _emit(manifest, out, summary)


# -- hopping ---------------------------------------------------------------------


@main.command()
@click.option("--T", "T", type=int, default=None,
              help="Temporal extent of the chain (even).")
@_rate_options
@_io_options
@click.pass_context
@_guarded
def hopping(ctx, **kwargs):
    """Single-particle momentum solutions and both spectral transitions."""
    v = _merge_config(ctx, kwargs)
    _require(v, "T")
    out = _out_dir(v)
    params = {k: v[k] for k in ("T", "p", "p_grid")}
    manifest = RunManifest("hopping", params, 0)

    grid = _parse_grid(v["p"], v["p_grid"])
    rows = []
    for p in grid:
        for sol in hopping_mod.solve_momenta(v["T"], float(p)):
            rows.append((float(p), sol.k.real, sol.k.imag,
                         sol.lam.real, sol.lam.imag, sol.residual))
    p_c = hopping_mod.pt_transition_hopping(v["T"], grid) if grid.size >= 2 \
        else None
    p_star = hopping_mod.leading_transition(v["T"])
    _write_csv(manifest, out, "hopping.csv",
               ("p", "re_k", "im_k", "re_lambda", "im_lambda", "residual"),
               rows)
    summary = {"p_c": p_c, "p_star": p_star,
               "p_star_predicted": 1.0 / (2.0 * v["T"]), "T": v["T"]}
    _write_json(manifest, out, "hopping_summary.json", summary)
    _emit(manifest, out, summary)


# -- compare ---------------------------------------------------------------------


COMPARE_CSV_HEADER = ("check", "family", "T", "p", "L", "t_i", "mode",
                      "measured", "expected", "tolerance", "ok")


def _compare_free(v, seed, rows) -> int:
    """p=0: the sampled profile must equal the lattice staircase exactly."""
    T = v["T"]
    cfg = sim.ExperimentConfig(T=T, L_max=v["L_max"], p=0.0,
                               family=v["family"], n_traj=1,
                               master_seed=seed, cut_parity="all")
    prof = sim.run_trajectory(cfg, 0)
    failures = 0
    for i, L in enumerate(prof.steps):
        expect = analytics.barrier_lattice(T, int(L))
        ok = int(prof.barrier[i]) == expect
        failures += not ok
        rows.append(("free-barrier", v["family"], T, 0.0, L, 0, "exact",
                     prof.barrier[i], expect, 0.0, ok))
        for t_i in range(1, T):
            expect = analytics.percut_lattice(T, int(L), t_i)
            ok = int(prof.per_cut[i, t_i - 1]) == expect
            failures += not ok
            rows.append(("free-percut", v["family"], T, 0.0, L, t_i, "exact",
                         prof.per_cut[i, t_i - 1], expect, 0.0, ok))
    return failures


def _compare_monitored(v, seed, threads, rows) -> int:
    """p>0: MC against the exact contraction and the operator decay scale."""
    T, p, n = v["T"], float(v["p"]), v["n_traj"]
    if T > 10:
        raise CliError("validation",
                       "exact cross-checks need T <= 10 (dense contraction)")
    steps = tuple(range(1, v["L_max"] + 1, 2))
    cfg = sim.ExperimentConfig(T=T, L_max=v["L_max"], p=p, family=v["family"],
                               n_traj=n, master_seed=seed, cut_parity="odd",
                               record_steps=steps)
    res = sim.run_ensemble(cfg, threads=threads)
    cut_ids = cfg.admissible_cuts()
    failures = 0

    # exact averaged entropies, both conventions, at the recorded steps <= 64
    small = [int(L) for L in res.steps if L <= 64]
    exact_q = transfer.q3_entropy_curve(T, p, small, mode="quenched",
                                        cuts="odd")
    exact_a = transfer.q3_entropy_curve(T, p, small, mode="annealed",
                                        cuts="odd")
    for i, L in enumerate(res.steps):
        if L > 64:
            continue
        for j, t_i in enumerate(cut_ids):
            got = res.per_cut_mean[i, t_i - 1]
            want = exact_q[int(L)][j]
            tol = 3.0 * res.per_cut_stderr[i, t_i - 1] + T / n
            ok = abs(got - want) <= tol
            failures += not ok
            rows.append(("quenched-percut", v["family"], T, p, L, t_i, "q-af",
                         got, want, tol, ok))
            got = res.per_cut_purity_mean[i, t_i - 1]
            want = 2.0 ** (-exact_a[int(L)][j])
            tol = 3.0 * res.per_cut_purity_stderr[i, t_i - 1] + 1.0 / n
            ok = abs(got - want) <= tol
            failures += not ok
            rows.append(("annealed-purity", v["family"], T, p, L, t_i, "a-af",
                         got, want, tol, ok))

    # decay scale of the barrier tail against the averaged operator
    xi_exact = transfer.decay_scale(
        transfer.build_mixed_transfer(T, p, rep=transfer.REDUCED_Q3))
    curve, _ = res.barrier["q-af"]
    try:
        fit = analytics.tail_window_fit(res.steps, curve, lo=0.03, hi=0.6)
    except ValueError:
        fit = analytics.tail_window_fit(res.steps, curve, lo=0.05, hi=1.0)
    tol = 0.15 * xi_exact
    ok = abs(fit.xi - xi_exact) <= tol
    failures += not ok
    rows.append(("decay-scale", v["family"], T, p, 0, 0, "q-af",
                 fit.xi, xi_exact, tol, ok))
    return failures


@main.command()
@_geometry_options
@click.option("--p", type=float, default=0.0, show_default=True,
              help="Measurement rate in [0, 1].")
@_ensemble_options
@_io_options
@click.pass_context
@_guarded
def compare(ctx, **kwargs):
    """Cross-check MC against exact references; nonzero exit on breach."""
    v = _merge_config(ctx, kwargs)
    _require(v, "T")
    if v["L_max"] is None:
        v["L_max"] = v["T"] + 4 if v["p"] == 0.0 else 481
    if v["family"] == "identity":
        raise CliError("validation", "identity wires have nothing to check")
    seed, _ = _resolve_seed(v["seed"])
    threads = _resolve_threads(v["threads"])
    out = _out_dir(v)
    params = {k: v[k] for k in ("family", "T", "L_max", "p", "n_traj",
                                "cuts")}
    manifest = RunManifest("compare", params, seed)

    rows: list[tuple] = []
    if v["p"] == 0.0:
        failures = _compare_free(v, seed, rows)
    else:
        failures = _compare_monitored(v, seed, threads, rows)
    _write_csv(manifest, out, "compare.csv", COMPARE_CSV_HEADER, rows)
    summary = {"n_checks": len(rows), "n_failures": failures,
               "breached": failures > 0, "master_seed": seed}
    _write_json(manifest, out, "compare_summary.json", summary)
    _emit(manifest, out, summary)
    if failures:
        log.error("%d of %d checks breached tolerance", failures, len(rows))
        sys.exit(1)


if __name__ == "__main__":
    main()
