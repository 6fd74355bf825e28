"""Command-line driver: ``hopfnet {build,classify,sweep,verify,demo}``.

Experiments are described by a strict JSON config. Output files are written
to a temporary directory and moved into ``output_dir`` only on success.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

import numpy as np

from .dynamics import (
    DynamicsSettings,
    OscillatorNetwork,
    Protocol,
    amplitude_sweep,
    bistability_probe,
    classify_numeric,
)
from .errors import ConfigError, HopfNetError, MissingRequired, ParseError, UnknownKey
from .lyapunov import DEGENERACY_TOL, classify_analytic, gamma_threshold
from .network import (
    BulkDistribution,
    BulkSpec,
    CouplingMatrix,
    build_spectral,
    build_wigner_deflated,
    format_matrix_csv,
    read_matrix_csv,
    validate_coupling,
)
from .recognition import (
    InputNetworkSpec,
    assemble_input_network,
    perron_check,
    random_input_spec,
    tune_input_to_criticality,
    type_demo,
)
from .spectral import eigendecompose, gamma_set

log = logging.getLogger("hopfnet")

COMMANDS = ("build", "classify", "sweep", "verify", "demo")
CONSTRUCTIONS = ("spectral", "wigner", "input")
PROTOCOLS = {"fresh": Protocol.FRESH, "up": Protocol.UP, "down": Protocol.DOWN}
EXCLUSION_FRAC = 0.2
U64_MAX = 2**64 - 1


@dataclass
class BulkConfig:
    d_min: float = 0.5
    d_max: float = 3.0
    distribution: str = "uniform"


@dataclass
class ExperimentConfig:
    command: str
    n: int
    a: float = 0.0
    a_over_gamma: Optional[float] = None
    b: float = -1.0
    construction: str = "spectral"
    bulk: BulkConfig = field(default_factory=BulkConfig)
    leading: float = 0.0
    entry_std: float = 1.0
    shift: float = 3.0
    lambda_grid: Optional[list] = None
    protocol: str = "fresh"
    lambda_on: float = 0.02
    matrix_file: Optional[str] = None
    input_spec: Any = None
    dynamics: DynamicsSettings = field(default_factory=DynamicsSettings)
    degeneracy_tol: float = DEGENERACY_TOL
    seed: list = field(default_factory=lambda: [0])
    output_dir: str = "out"
    threads: int = 0

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["bulk"] = asdict(self.bulk)
        d["dynamics"] = self.dynamics.to_dict()
        return d


def _check_keys(obj: dict, allowed, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise UnknownKey(f"unknown key(s) in {where}: {', '.join(unknown)}")


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    top = {f.name for f in fields(ExperimentConfig)}
    _check_keys(doc, top, "config")
    for key in ("command", "n"):
        if key not in doc:
            raise MissingRequired(f"missing required key {key!r}")
    doc = dict(doc)
    command = doc["command"]
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
    if not isinstance(doc["n"], int) or isinstance(doc["n"], bool) or doc["n"] < 2:
        raise ConfigError("n must be an integer >= 2")
    if command in ("sweep", "verify") and not doc.get("lambda_grid"):
        raise MissingRequired(f"command {command!r} requires a nonempty lambda_grid")

    bulk = doc.pop("bulk", {})
    _check_keys(bulk, {f.name for f in fields(BulkConfig)}, "bulk")
    dyn = doc.pop("dynamics", {})
    _check_keys(dyn, DynamicsSettings.__dataclass_fields__, "dynamics")
    seeds = doc.pop("seed", [0])
    seeds = [seeds] if isinstance(seeds, int) else list(seeds)
    if not seeds or any(not isinstance(s, int) or not 0 <= s <= U64_MAX for s in seeds):
        raise ConfigError("seed must be a nonempty list of unsigned 64-bit integers")
    try:
        settings = DynamicsSettings(**{k: (int(v) if k == "stride" else float(v)) for k, v in dyn.items()})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    cfg = ExperimentConfig(bulk=BulkConfig(**bulk), dynamics=settings, seed=seeds, **doc)
    if cfg.construction not in CONSTRUCTIONS:
        raise ConfigError(f"construction must be one of {CONSTRUCTIONS}")
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"protocol must be one of {tuple(PROTOCOLS)}")
    if cfg.bulk.distribution not in ("uniform", "semicircle"):
        raise ConfigError("bulk.distribution must be 'uniform' or 'semicircle'")
    if cfg.lambda_grid is not None:
        cfg.lambda_grid = sorted(float(v) for v in cfg.lambda_grid)
    if not cfg.degeneracy_tol > 0:
        raise ConfigError("degeneracy_tol must be positive")
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# execution


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _suffix(seeds: list, seed: int) -> str:
    return "" if len(seeds) == 1 else f"_seed{seed}"


def _coupling(cfg: ExperimentConfig, seed: int) -> CouplingMatrix:
    if cfg.matrix_file:
        entries = read_matrix_csv(cfg.matrix_file)
        if entries.shape[0] != cfg.n:
            raise ConfigError(f"matrix file has n={entries.shape[0]}, config says n={cfg.n}")
        return CouplingMatrix(entries, float(np.linalg.eigvalsh(0.5 * (entries + entries.T))[-1]))
    if cfg.construction == "spectral":
        dist = BulkDistribution.UNIFORM if cfg.bulk.distribution == "uniform" else BulkDistribution.SEMICIRCLE
        return build_spectral(cfg.n, BulkSpec(cfg.bulk.d_min, cfg.bulk.d_max, dist), cfg.leading, seed)
    if cfg.construction == "wigner":
        return build_wigner_deflated(cfg.n, cfg.entry_std, cfg.shift, cfg.leading, seed)
    tuned = tune_input_to_criticality(_input_spec(cfg, seed), cfg.leading)
    return CouplingMatrix(tuned.matrix(), cfg.leading, "InputPlusConnectivity", seed=seed)


def _input_spec(cfg: ExperimentConfig, seed: int) -> InputNetworkSpec:
    if cfg.input_spec is None:
        return random_input_spec(cfg.n, seed)
    if isinstance(cfg.input_spec, str):
        with open(cfg.input_spec) as fh:
            return InputNetworkSpec.from_json(fh.read())
    return InputNetworkSpec(np.array(cfg.input_spec["r"]), np.array(cfg.input_spec["c"]))


def _coupling_a(cfg: ExperimentConfig, gamma: Optional[float]) -> float:
    if cfg.a_over_gamma is None:
        return cfg.a
    if gamma is None:
        raise ConfigError("a_over_gamma given but the network has no finite gamma")
    return cfg.a_over_gamma * gamma * math.sqrt(-cfg.b) if cfg.b < 0 else cfg.a_over_gamma * gamma


def _analytic(cfg: ExperimentConfig, m: CouplingMatrix):
    s = eigendecompose(m)
    g = gamma_set(s)
    try:
        gamma = gamma_threshold(g)
    except HopfNetError:
        gamma = None
    a = _coupling_a(cfg, gamma)
    return a, g, classify_analytic(a, cfg.b, m.n, g, cfg.degeneracy_tol)


def _threads(cfg: ExperimentConfig) -> int:
    return cfg.threads if cfg.threads > 0 else (os.cpu_count() or 1)


def _run_seed(cfg: ExperimentConfig, seed: int, files: dict) -> tuple[dict, bool]:
    """Returns (run report, agreement flag) for one seed."""
    sfx = _suffix(cfg.seed, seed)
    run: dict = {"seed": seed}
    agree = True
    if cfg.command == "demo":
        spec = _input_spec(cfg, seed)
        tuned = assemble_input_network(tune_input_to_criticality(spec, cfg.lambda_on), 0.0, cfg.b)
        _, _, rep = _analytic(cfg, tuned.m)
        demo = type_demo(spec, rep.a, cfg.b, cfg.lambda_on, seed, cfg.dynamics)
        run["perron"] = perron_check(tuned.m).to_dict()
        run["analytic"] = rep.to_dict()
        run["demo"] = demo.to_dict()
        return run, agree

    m = _coupling(cfg, seed)
    files[f"matrix{sfx}.csv"] = format_matrix_csv(m.entries)
    run["validation"] = validate_coupling(m).to_dict()
    if cfg.command == "build":
        return run, agree

    a, g, rep = _analytic(cfg, m)
    run["gamma_set"] = g.to_dict()
    run["analytic"] = rep.to_dict()
    if cfg.command == "classify":
        return run, agree

    net = OscillatorNetwork(a, cfg.b, m)
    grid = cfg.lambda_grid
    if cfg.command == "sweep":
        sweep = amplitude_sweep(net, grid, PROTOCOLS[cfg.protocol], cfg.dynamics, _threads(cfg))
        files[f"sweep{sfx}.csv"] = sweep.to_csv()
        files[f"fit{sfx}.json"] = json.dumps(_jsonable(sweep.fit), indent=2, sort_keys=True) + "\n"
        run["sweep"] = sweep.to_dict()
        return run, agree

    # verify
    if rep.threshold is not None and abs(abs(a) - rep.threshold) <= EXCLUSION_FRAC * rep.threshold:
        run["numeric"] = None
        run["agreement"] = None
        run["skipped"] = "coupling inside the near-threshold exclusion band"
        return run, agree
    fresh = amplitude_sweep(net, grid, Protocol.FRESH, cfg.dynamics, _threads(cfg))
    up = amplitude_sweep(net, grid, Protocol.UP, cfg.dynamics)
    down = amplitude_sweep(net, grid, Protocol.DOWN, cfg.dynamics)
    probes = [bistability_probe(net, lam, cfg.dynamics) for lam in grid if lam < 0]
    numeric = classify_numeric(up, down, fresh, probes, cfg.dynamics)
    files[f"sweep{sfx}.csv"] = fresh.to_csv()
    run["numeric"] = {"classification": numeric.label, "evidence": numeric.evidence}
    agree = numeric.classification is rep.classification
    run["agreement"] = agree
    return run, agree


def execute(cfg: ExperimentConfig) -> int:
    """Run an experiment. Exit status: 0 ok, 1 error, 2 analytic/numeric disagreement."""
    files: dict[str, str] = {}
    try:
        runs = []
        agree_all = True
        for seed in sorted(cfg.seed):
            run, agree = _run_seed(cfg, seed, files)
            runs.append(run)
            agree_all = agree_all and agree
        report = {"command": cfg.command, "config": cfg.to_dict(), "runs": runs}
        if cfg.command == "verify":
            report["agreement"] = agree_all
        files["report.json"] = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    except (HopfNetError, OSError, ValueError) as exc:
        print(f"hopfnet: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _publish(cfg.output_dir, files)
    return 0 if agree_all else 2


def _publish(output_dir: str, files: dict) -> None:
    parent = os.path.dirname(os.path.abspath(output_dir))
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".hopfnet-", dir=parent)
    try:
        for name, text in files.items():
            with open(os.path.join(tmp, name), "w", newline="") as fh:
                fh.write(text)
        os.makedirs(output_dir, exist_ok=True)
        for name in files:
            os.replace(os.path.join(tmp, name), os.path.join(output_dir, name))
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hopfnet", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="path to a JSON experiment config")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, action="append", help="seed; repeatable, overrides config")
    parser.add_argument("--threads", type=int, help="worker threads, 0 = auto")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = "{}"
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno, exc.colno) from None
        if isinstance(doc, dict):
            if doc.setdefault("command", args.command) != args.command:
                raise ConfigError(f"config command {doc['command']!r} does not match {args.command!r}")
            if args.seed:
                doc["seed"] = args.seed
            if args.out:
                doc["output_dir"] = args.out
            if args.threads is not None:
                doc["threads"] = args.threads
            text = json.dumps(doc)
        cfg = parse_config(text)
    except (ConfigError, OSError) as exc:
        print(f"hopfnet: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
