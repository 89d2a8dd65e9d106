"""File formats: MDP specs, policies, fields, traces, sweeps and reports.

Everything structured is JSON (schemas in SCHEMAS.md at the repository
root); per-iteration traces and eps sweeps are CSV.  Atomic field round
trips are bit exact through 17-significant-digit decimal strings.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields as dataclass_fields
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bellman import EvaluationResult, IterationRecord
from .distributions import (
    AtomicDistribution,
    dist_from_jsonable,
    dist_to_jsonable,
    make_atomic,
)
from .mdp import FiniteMdp, Policy, ReturnField
from .spectral import SweepPoint
from .verify import CheckReport

__all__ = [
    "ExperimentConfig",
    "load_mdp",
    "load_policy",
    "save_field",
    "load_field",
    "write_trace_csv",
    "write_sweep_csv",
    "write_report_json",
    "write_summary_json",
    "load_bundled_mdp",
    "bundled_mdp_names",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully explicit run configuration; unknown keys are rejected on parse."""

    mdp: str
    policy: str = "uniform"
    gamma: Optional[float] = None
    backend: str = "atomic"
    merge_delta: float = 0.0
    stop_tol: float = 1e-8
    max_iter: int = 1000
    eps_list: tuple = tuple()
    seed: int = 0
    out_dir: str = "."

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclass_fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = dict(raw)
        if "eps_list" in cfg:
            cfg["eps_list"] = tuple(float(e) for e in cfg["eps_list"])
        return cls(**cfg)

    def to_jsonable(self) -> dict:
        return {
            "mdp": self.mdp,
            "policy": self.policy,
            "gamma": self.gamma,
            "backend": self.backend,
            "merge_delta": self.merge_delta,
            "stop_tol": self.stop_tol,
            "max_iter": self.max_iter,
            "eps_list": list(self.eps_list),
            "seed": self.seed,
            "out_dir": self.out_dir,
        }


# ---------------------------------------------------------------------------
# MDP and policy files

def _reward_from_json(entry, where: str) -> AtomicDistribution:
    try:
        return make_atomic([(float(x), float(w)) for x, w in entry])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad reward atom list at {where}: {exc}") from exc


def _parse_mdp(obj: dict, path: str, gamma_override: Optional[float] = None) -> FiniteMdp:
    for key in ("n_states", "n_actions", "gamma", "transition", "reward"):
        if key not in obj:
            raise ValueError(f"{path}: missing key {key!r}")
    n_s, n_a = int(obj["n_states"]), int(obj["n_actions"])
    transition = np.asarray(obj["transition"], dtype=np.float64)
    if transition.shape != (n_s, n_a, n_s):
        raise ValueError(
            f"{path}: transition shape {transition.shape} does not match (S, A, S)=({n_s}, {n_a}, {n_s})"
        )
    raw_rewards = obj["reward"]
    rewards = tuple(
        tuple(
            tuple(
                _reward_from_json(raw_rewards[s][a][s2], f"(s={s}, a={a}, s'={s2})")
                for s2 in range(n_s)
            )
            for a in range(n_a)
        )
        for s in range(n_s)
    )
    gamma = float(gamma_override if gamma_override is not None else obj["gamma"])
    if "r_max" in obj:
        r_max = float(obj["r_max"])
    else:
        r_max = max(
            max(abs(d.support[0]), abs(d.support[1]))
            for per_a in rewards for row in per_a for d in row
        )
    return FiniteMdp(transition, rewards, gamma, r_max)


def load_mdp(path, gamma_override: Optional[float] = None) -> FiniteMdp:
    """Load and fully validate an MDP spec file."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from exc
    return _parse_mdp(obj, str(path), gamma_override)


def load_policy(spec: str, mdp: FiniteMdp) -> Policy:
    """Resolve a policy: the literal 'uniform', or a JSON file path.

    Policy files hold either a bare (S, A) nested array or an object with a
    'policy' key (an MDP spec file with an embedded policy also works).
    """
    if spec == "uniform":
        return Policy.uniform(mdp.n_states, mdp.n_actions)
    obj = json.loads(Path(spec).read_text())
    table = obj["policy"] if isinstance(obj, dict) else obj
    probs = np.asarray(table, dtype=np.float64)
    if probs.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(
            f"{spec}: policy shape {probs.shape} does not match MDP ({mdp.n_states}, {mdp.n_actions})"
        )
    return Policy(probs)


# ---------------------------------------------------------------------------
# fields

def save_field(field: ReturnField, path) -> None:
    obj = {
        "backend": field.backend,
        "n_states": field.n_states,
        "n_actions": field.n_actions,
        "interval": [format(field.interval[0], ".17g"), format(field.interval[1], ".17g")],
        "entries": [
            [dist_to_jsonable(field.entry(s, a)) for a in range(field.n_actions)]
            for s in range(field.n_states)
        ],
    }
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def load_field(path, backend: Optional[str] = None) -> ReturnField:
    obj = json.loads(Path(path).read_text())
    for key in ("backend", "n_states", "n_actions", "interval", "entries"):
        if key not in obj:
            raise ValueError(f"{path}: missing key {key!r}")
    if backend is not None and obj["backend"] != backend:
        raise ValueError(f"{path}: field backend {obj['backend']!r}, expected {backend!r}")
    entries = obj["entries"]
    if len(entries) != obj["n_states"] or any(len(row) != obj["n_actions"] for row in entries):
        raise ValueError(f"{path}: entry table does not match the declared shape")
    rows = tuple(tuple(dist_from_jsonable(cell) for cell in row) for row in entries)
    interval = (float(obj["interval"][0]), float(obj["interval"][1]))
    field = ReturnField(rows, interval)
    if field.backend != obj["backend"]:
        raise ValueError(f"{path}: entries do not match the declared backend {obj['backend']!r}")
    return field


# ---------------------------------------------------------------------------
# traces, sweeps, reports

def write_trace_csv(trace: Sequence[IterationRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "successive_distance", "banach_bound", "atom_count_max"])
        for rec in trace:
            writer.writerow([rec.iteration, repr(rec.successive_distance),
                             repr(rec.banach_bound), rec.atom_count_max])


def write_sweep_csv(rows: Sequence[SweepPoint], path, labels: Optional[Sequence[str]] = None) -> None:
    """Sweep CSV with a per-row monotonicity flag (nondecreasing so far)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "epsilon", "reg_distance", "cdf_side_distance", "gap", "monotone"])
        labels = list(labels) if labels is not None else [""] * len(rows)
        best_by_label: dict[str, float] = {}
        for label, row in zip(labels, rows):
            prev = best_by_label.get(label, -1.0)
            monotone = row.reg_distance >= prev - 1e-15
            best_by_label[label] = max(prev, row.reg_distance)
            writer.writerow([label, repr(row.epsilon), repr(row.reg_distance),
                             repr(row.cdf_distance), repr(row.gap), int(monotone)])


def write_report_json(reports: Sequence[CheckReport], path) -> None:
    Path(path).write_text(json.dumps([r.to_jsonable() for r in reports], indent=1) + "\n")


def write_summary_json(result: EvaluationResult, config: ExperimentConfig, path) -> None:
    field = result.field
    means = [
        [field.entry(s, a).mean() for a in range(field.n_actions)]
        for s in range(field.n_states)
    ]
    summary = {
        "converged": result.converged,
        "iterations": result.iterations,
        "banach_bound": result.banach_bound,
        "max_atom_count": field.max_atom_count(),
        "means": means,
        "config": config.to_jsonable(),
    }
    Path(path).write_text(json.dumps(summary, indent=1) + "\n")


# ---------------------------------------------------------------------------
# bundled example models

def bundled_mdp_names() -> list[str]:
    root = resources.files("cramerdp").joinpath("data")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled_mdp(name: str) -> tuple[FiniteMdp, Policy]:
    """Load a packaged example MDP together with its embedded policy."""
    res = resources.files("cramerdp").joinpath("data").joinpath(f"{name}.json")
    try:
        obj = json.loads(res.read_text())
    except FileNotFoundError as exc:
        raise ValueError(f"no bundled MDP named {name!r}; try one of {bundled_mdp_names()}") from exc
    mdp = _parse_mdp(obj, f"bundled:{name}")
    if "policy" in obj:
        policy = Policy(np.asarray(obj["policy"], dtype=np.float64))
    else:
        policy = Policy.uniform(mdp.n_states, mdp.n_actions)
    return mdp, policy
