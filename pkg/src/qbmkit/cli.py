"""Config-driven experiment runner.

Every subcommand reads an INI file (``--config``), writes plain-text
artifacts into an output directory and echoes the fully resolved
configuration next to them. Re-running a command with the same inputs
reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import beta_sweep, effective_beta, prune_sweep, tpq_accuracy_grid
from .hamiltonian import build_terms, dump_parameters, load_parameters
from .io import fmt, format_table, json_record
from .krylov import approx_gibbs_diag
from .metrics import cmi_profile, kl_divergence
from .pauli import DenseLimitError, PauliError
from .targets import (
    TargetDistribution, boltzmann_target, embed, histogram_target, next_nn_target, read_events,
    split_events,
)
from .thermal import gibbs_state, model_distribution
from .topology import make_graph
from .training import TrainConfig, evaluate_exact, train

log = logging.getLogger("qbmkit")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(" ", "").split(",") if t)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(" ", "").split(",") if t)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _bounds(text: str):
    if not text.strip():
        return None
    out = []
    for part in text.split(","):
        lo, hi = part.split(":")
        out.append((float(lo), float(hi)))
    return out


def _text(text: str) -> str:
    return text.strip()


def _opt_int(text: str):
    return int(text) if text.strip() else None


# section -> key -> (parser, default as written in the INI file)
SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {
        "family": (_text, "generic"),
        "connectivity": (_text, "all_to_all"),
        "n": (int, "8"),
        "m": (_opt_int, ""),
        "q": (_opt_int, ""),
        "edges": (_text, ""),
    },
    "target": {
        "kind": (_text, "next_nn"),
        "n": (_opt_int, ""),
        "norms": (_floats, "1,5,5"),
        "beta": (float, "1.0"),
        "seed": (int, "0"),
        "path": (_text, ""),
        "events": (_text, ""),
        "columns": (_text, ""),
        "delimiter": (_text, ","),
        "bits": (_ints, "2"),
        "bounds": (_bounds, ""),
        "sort_descending": (_bool, "false"),
        "split": (_text, "all"),
        "split_ratios": (_floats, "0.7,0.15,0.15"),
        "split_seed": (int, "0"),
        "embedding": (_text, "pure"),
    },
    "train": {
        "backend": (_text, "exact"),
        "steps": (int, "1000"),
        "lr": (float, "0.1"),
        "beta1": (float, "0.9"),
        "beta2": (float, "0.99"),
        "eps": (float, "1e-8"),
        "eval_every": (int, "10"),
        "seed": (int, "0"),
        "n_states": (int, "100"),
        "krylov_dim": (int, "20"),
        "beta": (float, "1.0"),
        "optimizer": (_text, "amsgrad"),
        "bias_correction": (_bool, "false"),
        "freeze_bases": (_bool, "false"),
        "eval_method": (_text, "auto"),
        "eval_probes": (int, "1"),
    },
    "analysis": {
        "thresholds": (_floats, "0,1e-3,5e-3,1e-2,5e-2,1e-1,5e-1,1"),
        "factors": (_floats, "0.25,0.5,1,2,4"),
        "grid_states": (_ints, "1,10,100"),
        "grid_dims": (_ints, "2,5,20"),
        "anchor": (int, "0"),
        "cmi_sites": (_ints, "1,2,3,4"),
    },
    "output": {
        "directory": (_text, "out"),
        "formats": (_text, "jsonl,csv"),
    },
}

FORMATS = ("jsonl", "csv")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Parsed sections plus the raw strings used, for the resolved echo."""

    values: dict[str, dict]
    raw: dict[str, dict[str, str]]

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def echo(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for section, keys in self.raw.items():
            cp[section] = keys
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in cp[section].items())
            lines.append("")
        return "\n".join(lines)


def _canonical(parser, text: str) -> str:
    """Normalize a raw value so the echo shows what was actually used."""
    value = parser(text)
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, tuple):
        return ",".join(fmt(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if parser is _bounds:
        return text.strip()
    return str(value)


def load_config(path: str | None, seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file {path} not found")
        cp.read(path)
    unknown = [s for s in cp.sections() if s not in SCHEMA]
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}; allowed {list(SCHEMA)}")
    values, raw = {}, {}
    for section, keys in SCHEMA.items():
        given = dict(cp[section]) if cp.has_section(section) else {}
        bad = sorted(set(given) - set(keys))
        if bad:
            raise ConfigError(f"unknown keys {bad} in [{section}]; allowed {sorted(keys)}")
        values[section], raw[section] = {}, {}
        for key, (parser, default) in keys.items():
            text = given.get(key, default)
            try:
                values[section][key] = parser(text)
                raw[section][key] = _canonical(parser, text)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {text!r}: {exc}") from None
    if seed is not None:
        for section in ("target", "train"):
            values[section]["seed"] = seed
            raw[section]["seed"] = str(seed)
    model = values["model"]
    if model["connectivity"] == "nn_particle" and model["m"] and model["q"]:
        model["n"] = model["m"] * model["q"]
        raw["model"]["n"] = str(model["n"])
    if values["target"]["n"] is None:
        values["target"]["n"] = model["n"]
        raw["target"]["n"] = str(model["n"])
    if out is not None:
        values["output"]["directory"] = out
        raw["output"]["directory"] = out
    formats = [f.strip() for f in values["output"]["formats"].split(",") if f.strip()]
    if any(f not in FORMATS for f in formats):
        raise ConfigError(f"unknown output formats {formats}; allowed {FORMATS}")
    values["output"]["formats"] = formats
    return ExperimentConfig(values, raw)


def model_spec(cfg: ExperimentConfig):
    m = cfg["model"]
    edges = None
    if m["edges"]:
        edges = [tuple(int(t) for t in pair.split("-")) for pair in m["edges"].split(",")]
    n = m["n"]
    if m["connectivity"] == "nn_particle":
        if m["m"] is None or m["q"] is None:
            raise ConfigError("nn_particle connectivity needs m and q")
        n = m["m"] * m["q"]
    graph = make_graph(m["connectivity"], n, m["m"], m["q"], edges)
    return build_terms(m["family"], graph)


def make_target(cfg: ExperimentConfig) -> TargetDistribution:
    t = cfg["target"]
    n = t["n"]
    kind = t["kind"]
    if kind == "next_nn":
        return next_nn_target(n)
    if kind == "boltzmann":
        return boltzmann_target(n, t["norms"], t["beta"], t["seed"])
    if kind == "file":
        if not t["path"]:
            raise ConfigError("target kind 'file' needs a path")
        return read_target(t["path"])
    if kind == "histogram":
        if not t["events"]:
            raise ConfigError("histogram target needs an events file")
        if not Path(t["events"]).is_file():
            raise FileNotFoundError(f"event file {t['events']} not found")
        columns = [c.strip() for c in t["columns"].split(",") if c.strip()] or None
        delim = {"tab": "\t", "space": " "}.get(t["delimiter"], t["delimiter"])
        events = read_events(t["events"], columns, delim, t["bounds"], t["sort_descending"])
        if t["split"] != "all":
            parts = dict(zip(("train", "test", "validation"),
                             split_events(events, t["split_ratios"], t["split_seed"])))
            if t["split"] not in parts:
                raise ConfigError(f"split must be all, train, test or validation, not {t['split']!r}")
            events = parts[t["split"]]
        bits = t["bits"][0] if len(t["bits"]) == 1 else t["bits"]
        target = histogram_target(events, bits)
        target.provenance["split"] = t["split"]
        return target
    raise ConfigError(f"unknown target kind {kind!r}")


def read_target(path) -> TargetDistribution:
    with open(path) as fh:
        return TargetDistribution.from_lines(fh.readlines(), {"kind": "file", "path": str(path)})


def read_distribution(path) -> np.ndarray:
    return read_target(path).p


def distribution_text(p: np.ndarray, n: int) -> str:
    return "".join(f"{s:0{n}b} {fmt(v)}\n" for s, v in enumerate(p))


def train_config(cfg: ExperimentConfig, spec) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        spec, embedding=cfg["target"]["embedding"], backend=t["backend"], n_states=t["n_states"],
        krylov_dim=t["krylov_dim"], steps=t["steps"], lr=t["lr"], beta1=t["beta1"],
        beta2=t["beta2"], eps=t["eps"], eval_every=t["eval_every"], seed=t["seed"],
        beta=t["beta"], optimizer=t["optimizer"], bias_correction=t["bias_correction"],
        freeze_bases=t["freeze_bases"], eval_method=t["eval_method"], eval_probes=t["eval_probes"],
    )


class Run:
    """Output directory guard: refuses to clobber artifacts unless told to."""

    def __init__(self, cfg: ExperimentConfig, command: str, overwrite: bool):
        self.dir = Path(cfg["output"]["directory"])
        self.cfg = cfg
        self.command = command
        self.overwrite = overwrite
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        if p.exists() and not self.overwrite:
            raise FileExistsError(f"{p} exists; pick a fresh --out directory or pass --overwrite")
        return p

    def write(self, name: str, text: str) -> Path:
        p = self.path(name)
        self.dir.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        self.written.append(p)
        return p

    def start(self, *names: str) -> None:
        # check up front so a refused run writes nothing
        for name in (f"{self.command}.config.ini", *names):
            self.path(name)

    def finish(self) -> None:
        self.write(f"{self.command}.config.ini", self.cfg.echo())
        for p in self.written:
            print(p)


def _require(path: str | None, what: str) -> str:
    if not path:
        raise ConfigError(f"--{what} is required")
    if not Path(path).is_file():
        raise FileNotFoundError(f"{what} file {path} not found")
    return path


def _target_from_args(args, cfg) -> TargetDistribution:
    if getattr(args, "target", None):
        return read_target(_require(args.target, "target"))
    return make_target(cfg)


def _params_from_args(args, spec) -> np.ndarray:
    with open(_require(args.params, "params")) as fh:
        return load_parameters(spec, fh.read())


def cmd_generate_target(args, cfg: ExperimentConfig) -> None:
    run = Run(cfg, "generate-target", args.overwrite)
    run.start("target.txt")
    target = make_target(cfg)
    run.write("target.txt", "\n".join(target.to_lines()) + "\n")
    run.write("target.provenance.json", json_record(target.provenance) + "\n")
    run.finish()


def cmd_train(args, cfg: ExperimentConfig) -> None:
    spec = model_spec(cfg)
    config = train_config(cfg, spec)
    if config.backend == "exact" and spec.n_sites > config.dense_limit:
        raise DenseLimitError(
            f"exact backend needs n <= {config.dense_limit} ({spec.n_sites} sites requested, "
            f"a {1 << spec.n_sites}x{1 << spec.n_sites} density matrix); set backend = tpq"
        )
    run = Run(cfg, "train", args.overwrite)
    run.start("params.txt", "model.txt")
    target = _target_from_args(args, cfg)
    if target.n_sites != spec.n_sites:
        raise ConfigError(f"target has {target.n_sites} sites, model has {spec.n_sites}")
    trace = train(config, target)
    formats = cfg["output"]["formats"]
    if "jsonl" in formats:
        run.write("trace.jsonl", "".join(json_record(r) + "\n" for r in trace.records))
    if "csv" in formats:
        keys = list(trace.records[0])
        run.write("trace.csv", format_table(keys, [[r.get(k, "") for k in keys] for r in trace.records]))
    run.write("params.txt", dump_parameters(spec, trace.theta))
    n = spec.n_sites
    if n <= config.dense_limit:
        q = model_distribution(gibbs_state(spec, trace.theta, config.beta))
    else:
        q = approx_gibbs_diag(spec, trace.theta, config.beta, config.krylov_dim,
                              config.eval_probes, config.seed)
    run.write("model.txt", distribution_text(q, n))
    if not getattr(args, "target", None):
        run.write("target.txt", "\n".join(target.to_lines()) + "\n")
    run.write("train.echo.jsonl", json_record(trace.config) + "\n")
    run.finish()


def cmd_evaluate(args, cfg: ExperimentConfig) -> None:
    run = Run(cfg, "evaluate", args.overwrite)
    run.start("evaluate.csv")
    target = _target_from_args(args, cfg)
    rows = []
    if args.model:
        q = read_distribution(_require(args.model, "model"))
        name = "dkl_table" if args.params else "dkl"
        rows.append((name, kl_divergence(target.p, q)))
    if args.params:
        spec = model_spec(cfg)
        theta = _params_from_args(args, spec)
        beta = cfg["train"]["beta"]
        metrics = evaluate_exact(spec, theta, embed(target, cfg["target"]["embedding"]), beta)
        rows.extend(sorted(metrics.items()))
        rows.append(("effective_beta", effective_beta(theta)))
    if not rows:
        raise ConfigError("evaluate needs --model and/or --params")
    run.write("evaluate.csv", format_table(["metric", "value"], rows))
    run.finish()


def cmd_cmi(args, cfg: ExperimentConfig) -> None:
    run = Run(cfg, "cmi", args.overwrite)
    run.start("cmi.csv")
    if args.dist:
        p = read_distribution(_require(args.dist, "dist"))
    else:
        p = _target_from_args(args, cfg).p
    a = cfg["analysis"]
    run.write("cmi.csv", cmi_profile(p, a["anchor"], a["cmi_sites"]).to_table())
    run.finish()


def cmd_prune(args, cfg: ExperimentConfig) -> None:
    run = Run(cfg, "prune", args.overwrite)
    run.start("prune.csv")
    spec = model_spec(cfg)
    theta = _params_from_args(args, spec)
    target = _target_from_args(args, cfg)
    report = prune_sweep(spec, theta, target, cfg["analysis"]["thresholds"])
    run.write("prune.csv", report.to_table())
    run.finish()


def cmd_beta_sweep(args, cfg: ExperimentConfig) -> None:
    run = Run(cfg, "beta-sweep", args.overwrite)
    run.start("beta_sweep.csv")
    spec = model_spec(cfg)
    theta = _params_from_args(args, spec)
    target = _target_from_args(args, cfg)
    run.write("beta_sweep.csv", beta_sweep(spec, theta, target, cfg["analysis"]["factors"]).to_table())
    run.finish()


def cmd_tpq_grid(args, cfg: ExperimentConfig) -> None:
    run = Run(cfg, "tpq-grid", args.overwrite)
    run.start("tpq_grid.csv")
    spec = model_spec(cfg)
    target = _target_from_args(args, cfg)
    base = train_config(cfg, spec)
    a = cfg["analysis"]
    grid = tpq_accuracy_grid(spec, embed(target, base.embedding), a["grid_states"], a["grid_dims"],
                             base.seed, base.steps, base)
    run.write("tpq_grid.csv", grid.to_table())
    run.finish()


COMMANDS = {
    "generate-target": (cmd_generate_target, "write a target distribution table"),
    "train": (cmd_train, "train a model; writes trace, parameters and model distribution"),
    "evaluate": (cmd_evaluate, "score a model table or parameter file against a target"),
    "cmi": (cmd_cmi, "conditional mutual information profile of a distribution"),
    "prune": (cmd_prune, "D_KL after zeroing small parameters"),
    "beta-sweep": (cmd_beta_sweep, "D_KL under uniform rescaling of the parameters"),
    "tpq-grid": (cmd_tpq_grid, "TPQ training accuracy over ensemble size and Krylov dimension"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbmkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="INI experiment config")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides [output] directory)")
        p.add_argument("--seed", type=int, metavar="N", help="overrides [target] and [train] seeds")
        p.add_argument("--overwrite", action="store_true", help="replace existing artifacts")
        p.add_argument("-v", "--verbose", action="store_true")
        if name != "generate-target":
            p.add_argument("--target", metavar="PATH", help="target table instead of [target]")
        if name in ("evaluate", "prune", "beta-sweep"):
            p.add_argument("--params", metavar="PATH", help="parameter file written by train")
        if name == "evaluate":
            p.add_argument("--model", metavar="PATH", help="model distribution table")
        if name == "cmi":
            p.add_argument("--dist", metavar="PATH", help="distribution table to profile")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed, args.out)
        COMMANDS[args.command][0](args, cfg)
    except DenseLimitError as exc:
        print(f"qbmkit {args.command}: size error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, PauliError, ValueError, FileNotFoundError, FileExistsError) as exc:
        print(f"qbmkit {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
