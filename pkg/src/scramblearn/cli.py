"""Command-line entry point: parse config, dispatch experiments, write outputs.

Subcommands: landscape, sweep, mean-grad, thm1, thm3, haar-check, otoc,
design, selftest.  Each run writes a CSV of rows plus a JSON manifest
(config echo, seed, version, timestamps, output file list; written
atomically after the run).  Values are formatted at 15 significant digits
with LF line endings, so the same config and seed produce byte-identical
CSV output.

CSV schemas:
  sweep:      experiment,n,g,t,axis,k_param,cost,samples,value,std_error,seed
  landscape:  epsilon,cost_value,n,g,t,seed
  mean-grad:  experiment,n,cost,k_param,samples,mean,std_error,seed,passed
  thm1:       n,instance,samples,mc_variance,std_error,analytic_variance,passed
  thm3:       n_s,n_d,samples,mc_variance,std_error,analytic_variance,bound,passed
  haar-check: identity,dim,samples,max_abs_delta,std_error,passed
  otoc:       t,g,n,mean_otoc_real,std_error,haar_floor,haar_floor_std_error,samples,seed
  design:     g,t,n,frame_potential,frame_potential_std_error,f_minus_2,variance_ratio,ratio_std_error,samples,seed

Exit codes: 0 success, 1 configuration/IO error, 2 oracle-check failure
(a math regression, distinct from user error so CI can tell them apart).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from . import experiments as xp
from .experiments import ExperimentConfig

__all__ = ["ConfigError", "RunManifest", "load_config", "default_config", "main"]

ENV_OUTPUT_DIR = "SCRAMBLEARN_OUTDIR"

_SUBCOMMANDS = {
    "landscape": "landscape_cut",
    "sweep": "variance_sweep",
    "mean-grad": "mean_gradient",
    "thm1": "thm1_oracle",
    "thm3": "thm3_oracle",
    "haar-check": "haar_identity",
    "otoc": "otoc_decay",
    "design": "design_proximity",
}

class ConfigError(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Run provenance written next to every CSV, atomically, after the run."""

    config: dict
    master_seed: int
    version: str
    started: str
    finished: str
    outputs: list[str]
    fixtures: dict
    passed: bool | None


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def default_config(experiment: str) -> ExperimentConfig:
    """Built-in per-experiment defaults; every subcommand runs without a file."""
    if experiment == "landscape_cut":
        return ExperimentConfig(
            experiment,
            n_list=(6,),
            g_list=(5.0,),
            t_list=(15,),
            cost="lhst",
            epsilon_grid=tuple(np.round(np.linspace(0.0, np.pi, 22), 12)),
        )
    if experiment == "variance_sweep":
        return ExperimentConfig(
            experiment, n_list=(2, 3, 4, 5, 6, 7), g_list=(1.0,), t_list=(20,), samples=500
        )
    if experiment == "mean_gradient":
        return ExperimentConfig(
            experiment, n_list=(3,), g_list=(1.0,), t_list=(1,), samples=2000,
            cost="generic", k_param=2,
        )
    if experiment == "thm1_oracle":
        return ExperimentConfig(
            experiment, n_list=(2, 3), g_list=(1.0,), t_list=(1,), samples=20000,
            cost="generic",
        )
    if experiment == "thm3_oracle":
        return ExperimentConfig(
            experiment, n_list=(2,), g_list=(1.0,), t_list=(1,), samples=20000, cost="gen"
        )
    if experiment == "haar_identity":
        return ExperimentConfig(experiment, n_list=(2,), samples=50000)
    if experiment == "otoc_decay":
        return ExperimentConfig(
            experiment, n_list=(4,), g_list=(1.0,), t_list=(0, 1, 2, 4, 8, 20), samples=1000
        )
    if experiment == "design_proximity":
        return ExperimentConfig(
            experiment, n_list=(3,), g_list=(1.0,), t_list=(20,), samples=20000,
            cost="generic", k_param=2,
        )
    raise ConfigError(f"no defaults for experiment {experiment!r}")


def load_config(path: str | os.PathLike, experiment: str | None = None) -> ExperimentConfig:
    """Parse and validate a JSON config; unknown keys are rejected."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top-level value must be an object")
    unknown = sorted(set(raw) - _CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {', '.join(unknown)}")
    if experiment is not None:
        declared = raw.get("experiment", experiment)
        if declared != experiment:
            raise ConfigError(
                f"{path}: field 'experiment' is {declared!r} but the subcommand runs {experiment!r}"
            )
        raw["experiment"] = experiment
    elif "experiment" not in raw:
        raise ConfigError(f"{path}: missing required field 'experiment'")
    base = default_config(raw["experiment"])
    merged = {**dataclasses.asdict(base), **raw}
    for key in ("n_list", "g_list", "t_list", "epsilon_grid"):
        if merged.get(key) is not None and not isinstance(merged[key], (list, tuple)):
            raise ConfigError(f"{path}: field {key!r} must be an array")
    try:
        return ExperimentConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.15g}"
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_manifest(path: Path, payload: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows_and_pass(experiment: str, cfg: ExperimentConfig):
    """Run the experiment; return (header, rows, extras, passed-or-None)."""
    if experiment == "landscape_cut":
        rows, extras = xp.landscape_cut(cfg)
        header = ["epsilon", "cost_value", "n", "g", "t", "seed"]
        data = [[r.epsilon, r.cost_value, r.n, r.g, r.t, r.seed] for r in rows]
        return header, data, extras, None
    if experiment == "variance_sweep":
        rows, extras = xp.variance_sweep(cfg)
        header = [
            "experiment", "n", "g", "t", "axis", "k_param", "cost", "samples",
            "value", "std_error", "seed",
        ]
        data = [
            [r.experiment, r.n, r.g, r.t, r.axis, r.k_param, r.cost, r.samples,
             r.value, r.std_error, r.seed]
            for r in rows
        ]
        return header, data, extras, None
    if experiment == "mean_gradient":
        report, extras = xp.mean_gradient(cfg)
        header = ["experiment", "n", "cost", "k_param", "samples", "mean", "std_error", "seed", "passed"]
        data = [[cfg.experiment, report.n, report.cost, report.k_param, report.samples,
                 report.summary.mean, report.summary.std_error_of_mean,
                 report.summary.seed, report.passed]]
        return header, data, extras, report.passed
    if experiment == "thm1_oracle":
        reports, extras = xp.thm1_oracle(cfg)
        header = ["n", "instance", "samples", "mc_variance", "std_error", "analytic_variance", "passed"]
        data = [[r.n, r.instance, r.samples, r.mc_variance, r.std_error,
                 r.analytic_variance, r.passed] for r in reports]
        return header, data, extras, all(r.passed for r in reports)
    if experiment == "thm3_oracle":
        report, extras = xp.thm3_oracle(cfg)
        header = ["n_s", "n_d", "samples", "mc_variance", "std_error", "analytic_variance", "bound", "passed"]
        data = [[r.n_s, r.n_d, r.samples, r.mc_variance, r.std_error,
                 r.analytic_variance, r.bound, r.passed] for r in report.instances]
        extras = {
            **extras,
            "single_term_reduction_error": report.single_term_reduction_error,
            "zero_weight_variance": report.zero_weight_variance,
        }
        return header, data, extras, report.passed
    if experiment == "haar_identity":
        reports, extras = xp.run_haar_identities(cfg)
        header = ["identity", "dim", "samples", "max_abs_delta", "std_error", "passed"]
        data = [[r.which, r.dim, r.samples, r.max_abs_delta, r.std_error, r.passed]
                for r in reports]
        return header, data, extras, all(r.passed for r in reports)
    if experiment == "otoc_decay":
        rows, extras = xp.otoc_decay(cfg)
        header = ["t", "g", "n", "mean_otoc_real", "std_error", "haar_floor",
                  "haar_floor_std_error", "samples", "seed"]
        data = [[r.t, r.g, r.n, r.mean_otoc_real, r.std_error, r.haar_floor,
                 r.haar_floor_std_error, r.samples, r.seed] for r in rows]
        return header, data, extras, None
    if experiment == "design_proximity":
        rows, extras = xp.design_proximity(cfg)
        header = ["g", "t", "n", "frame_potential", "frame_potential_std_error",
                  "f_minus_2", "variance_ratio", "ratio_std_error", "samples", "seed"]
        data = [[r.g, r.t, r.n, r.frame_potential, r.frame_potential_std_error,
                 r.f_minus_2, r.variance_ratio, r.ratio_std_error, r.samples, r.seed]
                for r in rows]
        return header, data, extras, None
    raise ConfigError(f"unknown experiment {experiment!r}")


def _resolve_output(cfg: ExperimentConfig, out_flag: str | None, experiment: str) -> Path:
    if out_flag:
        return Path(out_flag)
    if cfg.output_path:
        return Path(cfg.output_path)
    base = Path(os.environ.get(ENV_OUTPUT_DIR, "."))
    return base / f"{experiment}.csv"


def run_selftest() -> int:
    """Quick direct-assertion suite over the cheap, exact examples."""
    from .costs import GenericCostSpec, generic_cost, hst_cost, lhst_cost, lhst_local_cost
    from .ensembles import ScramblerSpec, otoc, scrambler_unitary
    from .gradients import scrambler_ansatz, shift_rule_gradient, ansatz_unitary
    from .qcore import (
        Operator, apply_local_gate, apply_unitary, basis_state, choi_vector,
        expectation, hadamard_gate, identity, max_entangled_state, partial_trace,
        pauli, pauli_on, plus_state, rotation_gate, tensor_product,
    )

    checks: list[tuple[str, bool]] = []

    def check(name: str, ok: bool) -> None:
        checks.append((name, bool(ok)))
        print(f"{'PASS' if ok else 'FAIL'}  {name}")

    eye4 = tensor_product(identity(2), identity(2))
    check("I(2) x I(2) = I(4)", np.allclose(eye4.entries, np.eye(4)))
    zz = tensor_product(pauli("z"), pauli("z"))
    check("Z x Z diagonal = (1,-1,-1,1)", np.allclose(np.diag(zz.entries), [1, -1, -1, 1]))
    xz = tensor_product(pauli("x"), pauli("z"))
    check("X x Z entry (0,2) = 1", xz.entries[0, 2] == 1)
    flipped = apply_unitary(basis_state(1), pauli("x"))
    check("X|0> = |1>", np.allclose(flipped.amplitudes, [0, 1]))
    h2 = apply_unitary(apply_unitary(basis_state(1), hadamard_gate()), hadamard_gate())
    check("H H |0> = |0>", np.max(np.abs(h2.amplitudes - [1, 0])) < 1e-12)
    local = apply_local_gate(basis_state(2), pauli("x"), 0)
    check("X on qubit 0 of |00> = |10>", np.allclose(local.amplitudes, [0, 0, 1, 0]))
    check("R_x(0) = I", np.allclose(rotation_gate("x", 0).entries, np.eye(2)))
    check("R_z(2pi) = -I", np.allclose(rotation_gate("z", 2 * np.pi).entries, -np.eye(2)))
    bell = max_entangled_state(1)
    check("|Phi+> (1 qubit) = (|00>+|11>)/sqrt2",
          np.allclose(bell.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2)))
    rho = partial_trace(Operator(np.outer(bell.amplitudes, bell.amplitudes.conj())), [0])
    check("Tr_R |Phi+><Phi+| = I/2", np.allclose(rho.entries, np.eye(2) / 2))
    check("choi(I) = |Phi+>", np.allclose(choi_vector(identity(2)).amplitudes, bell.amplitudes))
    check("<0|Z|0> = 1", expectation(pauli("z"), basis_state(1)) == 1.0)
    check("<+|Z|+> = 0", abs(expectation(pauli("z"), plus_state(1))) < 1e-12)
    check("scrambler t=0 is identity",
          np.allclose(scrambler_unitary(ScramblerSpec(2, 1.0, 0, np.zeros(6))).entries, np.eye(4)))
    check("OTOC at V=I is 1",
          abs(otoc(identity(4), pauli_on("x", 0, 2), pauli_on("z", 1, 2)) - 1) < 1e-12)
    u = identity(2)
    check("hst(U, U) = 0", hst_cost(u, u) == 0.0)
    check("hst(I, X) = 1", hst_cost(identity(2), Operator(pauli("x").entries, "unitary")) == 1.0)
    vx = Operator(tensor_product(pauli("x"), identity(2)).entries, "unitary")
    check("lhst locals of (I, X x I) are (1, 0)",
          abs(lhst_local_cost(identity(4), vx, 0) - 1) < 1e-12
          and abs(lhst_local_cost(identity(4), vx, 1)) < 1e-12)
    check("lhst mean = 1/2", abs(lhst_cost(identity(4), vx) - 0.5) < 1e-12)
    spec1 = ScramblerSpec(1, 0.0, 1, np.array([np.pi / 2, 0.0, 0.0]))
    a = scrambler_ansatz(spec1)
    cost_spec = GenericCostSpec(pauli("z"), basis_state(1))
    grad = shift_rule_gradient(a, 2, lambda U: generic_cost(U, identity(2), cost_spec))
    check("shift rule on cos(theta) at pi/2 = -1", abs(grad.value + 1.0) < 1e-12)
    check("empty ansatz unitary = I",
          np.allclose(ansatz_unitary(scrambler_ansatz(ScramblerSpec(2, 1.0, 0, np.zeros(6)))).entries,
                      np.eye(4)))
    failed = [name for name, ok in checks if not ok]
    print(f"selftest: {len(checks) - len(failed)}/{len(checks)} checks passed")
    return 0 if not failed else 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; config errors are exit 1
        raise ConfigError(message)


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="scramblearn", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(_SUBCOMMANDS) + ["selftest"]:
        p = sub.add_parser(name)
        if name != "selftest":
            p.add_argument("--config", help="JSON config file")
            p.add_argument("--seed", type=int, help="override master_seed")
            p.add_argument("--samples", type=int, help="override sample count")
            p.add_argument("--out", help="override output CSV path")
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "selftest":
        return run_selftest()

    experiment = _SUBCOMMANDS[args.command]
    started = datetime.now(timezone.utc)
    try:
        if args.config:
            cfg = load_config(args.config, experiment)
        else:
            cfg = default_config(experiment)
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.samples is not None:
            overrides["samples"] = args.samples
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        header, rows, extras, passed = _rows_and_pass(experiment, cfg)
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_path = _resolve_output(cfg, args.out, experiment)
    manifest_path = out_path.with_name(out_path.stem + "_manifest.json")
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        _write_csv(out_path, header, rows)
        manifest = RunManifest(
            config=dataclasses.asdict(cfg),
            master_seed=cfg.master_seed,
            version=__version__,
            started=started.isoformat(),
            finished=datetime.now(timezone.utc).isoformat(),
            outputs=[str(out_path)],
            fixtures=extras,
            passed=passed,
        )
        _write_manifest(manifest_path, dataclasses.asdict(manifest))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1

    for line in [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows[:12]]:
        print(line)
    if len(rows) > 12:
        print(f"... {len(rows)} rows total")
    print(f"wrote {out_path} and {manifest_path}")
    if passed is False:
        print("oracle check FAILED", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
