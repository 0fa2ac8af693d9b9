"""Configuration-driven experiment runner.

``qrelay <command> --config <path> [--seed N] [--out DIR]`` reads a JSON
config, runs one experiment, writes CSV outputs plus a manifest with
content digests, and prints a plain-text summary. Exit codes: 0 success,
2 config error, 3 runtime error. Identical config and seed reproduce
byte-identical CSV payloads at any parallelism (env var QRELAY_THREADS).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .codeword_sets import (build_partition, eve_capacity, from_polarizations,
                            partition_rows, rate_report)
from .density_ops import (KrausChannel, bit_flip_channel, compose_channels,
                          dephasing_channel, depolarizing_channel,
                          erasure_channel, identity_channel)
from .polar_core import BDMC, polarization_rows, polarize, select_sets
from .relay import (RelayChannelSpec, relay_capacity_min,
                    relay_private_capacity, simulate_relay, simulation_rows)
from .superactivation import (build_switch_channel, compare_assisted,
                              joint_coherent_info, make_rho_ac, sweep_rows)

COMMANDS = ("polarize", "sets", "capacity", "relay-sim", "superactivate",
            "sweep")

SIGNIFICANT_DIGITS = 12


class ConfigError(Exception):
    """Invalid experiment configuration; carries every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class ExperimentConfig:
    command: str
    seed: int = 0
    output_dir: str = "."
    k: Optional[int] = None
    beta: Optional[float] = None
    p_e2: Optional[float] = None
    p: Optional[float] = None
    trials: int = 10000
    channel: Optional[dict] = None
    amp_channel: Optional[dict] = None
    phase_channel: Optional[dict] = None
    main_channel: Optional[dict] = None
    relay_channels: Optional[dict] = None
    input_state: Optional[dict] = None
    raw: dict = field(default_factory=dict)


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str
    duration_seconds: float
    outputs: list
    output_dir: str


# ---------------------------------------------------------------------------
# Channel spec parsing
# ---------------------------------------------------------------------------

def build_classical_channel(spec: dict) -> BDMC:
    kind = spec.get("kind")
    if kind == "bec":
        return BDMC.bec(float(spec["epsilon"]))
    if kind == "bsc":
        return BDMC.bsc(float(spec["p"]))
    if kind == "table":
        return BDMC(spec["w"])
    raise ValueError(f"unknown classical channel kind {kind!r}")


def build_quantum_channel(spec: dict) -> KrausChannel:
    kind = spec.get("kind")
    if kind == "identity":
        return identity_channel(int(spec.get("dim", 2)))
    if kind == "dephasing":
        return dephasing_channel(float(spec["q"]))
    if kind == "bit_flip":
        return bit_flip_channel(float(spec["q"]))
    if kind == "depolarizing":
        return depolarizing_channel(float(spec["q"]))
    if kind == "erasure":
        return erasure_channel(float(spec["epsilon"]),
                               int(spec.get("in_dim", 2)))
    if kind == "compose":
        stages = [build_quantum_channel(s) for s in spec["stages"]]
        if not stages:
            raise ValueError("compose needs at least one stage")
        out = stages[0]
        for stage in stages[1:]:
            out = compose_channels(out, stage)
        return out
    raise ValueError(f"unknown quantum channel kind {kind!r}")


# ---------------------------------------------------------------------------
# Config loading and validation
# ---------------------------------------------------------------------------

_REQUIRED = {
    "polarize": ("channel", "k", "beta"),
    "sets": ("amp_channel", "phase_channel", "k", "beta"),
    "capacity": ("amp_channel", "phase_channel", "k", "beta"),
    "relay-sim": ("amp_channel", "phase_channel", "k", "beta", "p_e2",
                  "trials"),
    "superactivate": ("main_channel", "amp_channel", "phase_channel", "k",
                      "beta", "p"),
    "sweep": ("main_channel", "amp_channel", "phase_channel", "k", "beta"),
}


def load_config(path, command: Optional[str] = None,
                seed: Optional[int] = None,
                output_dir: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    CLI-level overrides (command, seed, output dir) take precedence over
    file values. Raises ConfigError listing every violated constraint.
    """
    violations = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])

    file_command = raw.get("command")
    if command is not None and file_command is not None and command != file_command:
        violations.append(
            f"command {command!r} conflicts with config command {file_command!r}")
    cmd = command or file_command
    if cmd not in COMMANDS:
        violations.append(f"command must be one of {COMMANDS}, got {cmd!r}")
        raise ConfigError(violations)

    cfg = ExperimentConfig(
        command=cmd,
        seed=seed if seed is not None else raw.get("seed", 0),
        output_dir=output_dir if output_dir is not None
        else raw.get("output_dir", "."),
        k=raw.get("k"),
        beta=raw.get("beta"),
        p_e2=raw.get("p_e2"),
        p=raw.get("p"),
        trials=raw.get("trials", 10000),
        channel=raw.get("channel"),
        amp_channel=raw.get("amp_channel"),
        phase_channel=raw.get("phase_channel"),
        main_channel=raw.get("main_channel"),
        relay_channels=raw.get("relay_channels"),
        input_state=raw.get("input_state"),
        raw=raw,
    )

    for name in _REQUIRED[cmd]:
        if getattr(cfg, name) is None:
            violations.append(f"{cmd} requires field {name!r}")

    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2 ** 64:
        violations.append(f"seed must be a 64-bit unsigned integer, got {cfg.seed!r}")
    if cfg.k is not None and (not isinstance(cfg.k, int) or not 1 <= cfg.k <= 20):
        violations.append(f"k must be an integer in [1, 20], got {cfg.k!r}")
    if cfg.beta is not None and not 0.0 < cfg.beta < 0.5:
        violations.append(
            f"beta must lie strictly inside (0, 0.5), got {cfg.beta}")
    if not isinstance(cfg.trials, int) or cfg.trials < 1:
        violations.append(f"trials must be >= 1, got {cfg.trials!r}")
    if cfg.p_e2 is not None and not 0.0 < cfg.p_e2 < 1.0:
        violations.append(f"p_e2 must lie strictly inside (0, 1), got {cfg.p_e2}")
    if cfg.p is not None and not 0.0 < cfg.p < 1.0:
        violations.append(f"p must lie strictly inside (0, 1), got {cfg.p}")

    for name, builder in (("channel", build_classical_channel),
                          ("amp_channel", build_classical_channel),
                          ("phase_channel", build_classical_channel),
                          ("main_channel", build_quantum_channel)):
        spec = getattr(cfg, name)
        if spec is not None:
            try:
                builder(spec)
            except Exception as exc:
                violations.append(f"{name} invalid: {exc}")

    if violations:
        raise ConfigError(violations)
    return cfg


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.{SIGNIFICANT_DIGITS}g}"
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_format_value(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _partition_from_config(cfg: ExperimentConfig):
    pr_amp = polarize(build_classical_channel(cfg.amp_channel), cfg.k)
    pr_phase = polarize(build_classical_channel(cfg.phase_channel), cfg.k)
    return build_partition(from_polarizations(pr_amp, pr_phase, cfg.beta))


def _cmd_polarize(cfg: ExperimentConfig):
    pr = polarize(build_classical_channel(cfg.channel), cfg.k)
    sets = select_sets(pr, cfg.beta)
    return [("polarization.csv", ("index", "z", "set"),
             polarization_rows(pr, sets))]


def _cmd_sets(cfg: ExperimentConfig):
    part = _partition_from_config(cfg)
    return [("partition.csv", ("index", "set"), partition_rows(part))]


def _cmd_capacity(cfg: ExperimentConfig):
    part = _partition_from_config(cfg)
    rates = rate_report(part)
    eve = eve_capacity(part)
    n = part.n
    c_12 = len(part.good_phase) / n
    c_1d = len(part.p2) / n
    c_2d = relay_private_capacity(part)
    header = ("n", "size_s_in", "size_p1", "size_p2", "size_b",
              "p_sym_degraded", "p_sym_nondegraded", "r_sym", "c_bob",
              "c_eve_total", "c_eve_p1", "eve_section_e1e2",
              "eve_section_e2d", "relay_private_capacity",
              "relay_capacity_min")
    row = (n, len(part.s_in), len(part.p1), len(part.p2), len(part.b),
           rates.p_sym_degraded, rates.p_sym_nondegraded, rates.r_sym,
           rates.c_bob, eve.c_eve_total, eve.c_eve_p1,
           eve.eve_section_e1e2, eve.eve_section_e2d,
           relay_private_capacity(part),
           relay_capacity_min(c_12, c_1d, c_2d))
    return [("capacity.csv", header, [row])]


def _relay_spec(cfg: ExperimentConfig, part) -> RelayChannelSpec:
    amp = build_classical_channel(cfg.amp_channel)
    phase = build_classical_channel(cfg.phase_channel)
    trio = cfg.relay_channels or {}
    return RelayChannelSpec(
        n_e1e2=build_classical_channel(trio["e1e2"]) if "e1e2" in trio else phase,
        n_e2d=build_classical_channel(trio["e2d"]) if "e2d" in trio else amp,
        n_e1d=build_classical_channel(trio["e1d"]) if "e1d" in trio else amp,
        p_e2=cfg.p_e2,
        partition=part,
    )


def _cmd_relay_sim(cfg: ExperimentConfig):
    part = _partition_from_config(cfg)
    spec = _relay_spec(cfg, part)
    result = simulate_relay(spec, cfg.trials, cfg.seed)
    header = ("p_e2", "trials", "successes", "rate", "expected_throughput",
              "b_star_throughput")
    return [("relay_sim.csv", header, simulation_rows(spec, result))]


SWEEP_HEADER = ("p", "i_coh_joint", "term_mm", "term_me", "term_em",
                "term_ee", "bound_2p1p", "b", "b_star", "advantage")


def _switch_sweep(cfg: ExperimentConfig, p_values):
    main = build_quantum_channel(cfg.main_channel)
    part = _partition_from_config(cfg)
    state_spec = cfg.input_state or {}
    mode = state_spec.get("mode", "bell" if main.in_dim == 2
                          else "entangled_flagged")
    state = make_rho_ac(mode, variant=state_spec.get("variant", "alternating"))
    reports = [joint_coherent_info(build_switch_channel(p, main), state)
               for p in p_values]
    comparisons = [compare_assisted(p, part) for p in p_values]
    return sweep_rows(reports, comparisons)


def _cmd_superactivate(cfg: ExperimentConfig):
    return [("superactivate.csv", SWEEP_HEADER, _switch_sweep(cfg, [cfg.p]))]


def _cmd_sweep(cfg: ExperimentConfig):
    grid = [i / 100.0 for i in range(1, 100)]
    return [("sweep.csv", SWEEP_HEADER, _switch_sweep(cfg, grid))]


_DISPATCH = {
    "polarize": _cmd_polarize,
    "sets": _cmd_sets,
    "capacity": _cmd_capacity,
    "relay-sim": _cmd_relay_sim,
    "superactivate": _cmd_superactivate,
    "sweep": _cmd_sweep,
}


def run(cfg: ExperimentConfig) -> RunManifest:
    """Run one experiment: write its CSV outputs and manifest.json."""
    start = time.perf_counter()
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name, header, rows in _DISPATCH[cfg.command](cfg):
        path = outdir / name
        _write_csv(path, header, rows)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        outputs.append({"path": str(path), "sha256": digest})
    manifest = RunManifest(
        command=cfg.command,
        config=cfg.raw | {"command": cfg.command, "seed": cfg.seed},
        version=__version__,
        duration_seconds=time.perf_counter() - start,
        outputs=outputs,
        output_dir=str(outdir),
    )
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest.__dict__, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def _read_csv(path: Path):
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def render_report(manifest: RunManifest) -> str:
    """Plain-text summary of a finished run."""
    lines = [f"qrelay {manifest.command} (v{manifest.version}, "
             f"{manifest.duration_seconds:.3f}s)"]
    if not manifest.outputs:
        lines.append("no outputs were produced")
        return "\n".join(lines)
    for entry in manifest.outputs:
        path = Path(entry["path"])
        if not path.exists():
            raise ValueError(f"missing output file {path}")
    first = Path(manifest.outputs[0]["path"])
    header, rows = _read_csv(first)
    if manifest.command == "polarize":
        labels = [r[2] for r in rows]
        n = len(rows)
        good = labels.count("good")
        lines.append(f"  n = {n}, |good| = {good}, |bad| = {n - good}, "
                     f"capacity estimate = {good / n:.6g}")
    elif manifest.command in ("sets", "capacity"):
        if manifest.command == "sets":
            counts = {}
            for r in rows:
                counts[r[1]] = counts.get(r[1], 0) + 1
            lines.append("  " + ", ".join(
                f"|{k}| = {counts.get(k, 0)}" for k in ("S_in", "P1", "P2", "B")))
        else:
            for key, val in zip(header, rows[0]):
                lines.append(f"  {key} = {val}")
    elif manifest.command == "relay-sim":
        for key, val in zip(header, rows[0]):
            lines.append(f"  {key} = {val}")
    elif manifest.command in ("superactivate", "sweep"):
        mid = None
        for r in rows:
            if abs(float(r[0]) - 0.5) < 1e-12:
                mid = r
        if mid is not None:
            lines.append(f"  at p = 0.5: bound_2p1p = {mid[6]} "
                         f"(half the main coherent information)")
        flips = [r[0] for i, r in enumerate(rows[1:], start=1)
                 if rows[i - 1][9] != r[9]]
        if flips:
            lines.append(f"  advantage flips at p = {flips[0]}")
        lines.append(f"  rows = {len(rows)}")
    lines.append("data files:")
    for entry in manifest.outputs:
        lines.append(f"  {entry['path']}  sha256 {entry['sha256'][:12]}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qrelay",
        description="Polar coding experiments over relay channels")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, command=args.command, seed=args.seed,
                          output_dir=args.out)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 2
    try:
        manifest = run(cfg)
    except Exception as exc:  # runtime failure after a valid config
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    print(render_report(manifest))
    return 0
