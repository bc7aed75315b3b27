"""Resumable Monte Carlo sweeps over (family, n, gamma, trial) cells.

Seeds
-----
Each cell's seed is ``derive_seed(base_seed, family_label, n, gamma, trial)``
(BLAKE2b, see :func:`tpgraph.rng.derive_seed`). From it the model seed
(random family only), the sampling seed and the learner seed are derived
with the suffixes ``"model"``, ``"sample"`` and ``"learn"``, so a single
cell can be reproduced without running the rest of the sweep.

Output
------
One ``data`` row per cell, then one ``summary`` row per
(family, n, gamma) holding means (with ``*_std`` population standard
deviations) over that group's defined values. Failed cells become
``error`` rows and are retried on the next run; completed ``data`` rows
are reused verbatim.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .graph import graph_from_precision
from .learner import LearnerConfig, learn_structure
from .metrics import MetricsReport
from .rng import check_seed, derive_seed
from .stats import sample_gaussian
from .synth import GeneratorSpec

log = logging.getLogger(__name__)

COLUMNS = (
    "kind", "family", "trial", "seed",
    "gamma", "n", "p", "tp", "tn", "fp", "fn", "mcc", "tpr", "fpr",
    "tests_run", "singular_skips", "wall_ms",
    "mcc_std", "tpr_std", "fpr_std", "error",
)
AVERAGED = ("tp", "tn", "fp", "fn", "mcc", "tpr", "fpr", "tests_run", "singular_skips", "wall_ms")


@dataclass(frozen=True)
class ExperimentConfig:
    families: tuple
    n_values: tuple
    gammas: tuple = (7.0 / 9.0,)
    trials: int = 20
    base_seed: int = 0
    output_path: Optional[str] = None
    parallelism: Optional[int] = None
    centered: bool = False
    max_level: Optional[int] = None
    timing: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.n_values:
            raise ValueError("n_values must be nonempty")
        if not self.families:
            raise ValueError("families must be nonempty")
        if not self.gammas:
            raise ValueError("gammas must be nonempty")
        check_seed(self.base_seed)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        unknown = set(raw) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        families = tuple(GeneratorSpec(**f) for f in raw.pop("families", ()))
        return cls(
            families=families,
            n_values=tuple(int(n) for n in raw.pop("n_values", ())),
            gammas=tuple(float(g) for g in raw.pop("gammas", (7.0 / 9.0,))),
            **raw,
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def cells(self) -> list:
        return [
            (spec, n, g, t)
            for spec in self.families
            for n in self.n_values
            for g in self.gammas
            for t in range(self.trials)
        ]


def cell_seed(base_seed: int, spec: GeneratorSpec, n: int, gamma: float, trial: int) -> int:
    return derive_seed(base_seed, spec.label, int(n), float(gamma), int(trial))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _key(family: str, n, gamma, trial) -> tuple:
    return (family, str(int(n)), repr(float(gamma)), str(int(trial)))


def run_cell(spec: GeneratorSpec, n: int, gamma: float, trial: int, base_seed: int,
             centered: bool = False, max_level: Optional[int] = None, timing: bool = True) -> dict:
    """Generate, sample, learn and score one cell; returns a CSV row dict."""
    seed = cell_seed(base_seed, spec, n, gamma, trial)
    row = {c: "" for c in COLUMNS}
    row.update(kind="data", family=spec.label, trial=str(trial), seed=str(seed),
               gamma=repr(float(gamma)), n=str(n), p=str(spec.p))
    try:
        if spec.family == "random":
            spec = GeneratorSpec("random", spec.p, density=spec.density, seed=derive_seed(seed, "model"))
        model = spec.build()
        truth = graph_from_precision(model)
        data = sample_gaussian(model, n, derive_seed(seed, "sample"))
        config = LearnerConfig(gamma=gamma, seed=derive_seed(seed, "learn"),
                               centered=centered, max_level=max_level)
        start = time.perf_counter()
        estimate, record = learn_structure(data, config)
        wall_ms = (time.perf_counter() - start) * 1000.0
    except Exception as exc:  # recorded as an error row; the sweep continues
        row["kind"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    report = MetricsReport.compare(estimate, truth)
    for name, value in report.to_dict().items():
        row[name] = _fmt(value)
    row["tests_run"] = str(record.tests_run)
    row["singular_skips"] = str(record.singular_skips)
    row["wall_ms"] = _fmt(wall_ms) if timing else ""
    return row


def summarize(rows: list, family: str, n: int, gamma: float) -> dict:
    out = {c: "" for c in COLUMNS}
    out.update(kind="summary", family=family, n=str(n), gamma=repr(float(gamma)),
               p=rows[0]["p"] if rows else "", trial=str(len(rows)))
    for col in AVERAGED:
        values = [float(r[col]) for r in rows if r.get(col, "") != ""]
        if not values:
            continue
        mean = math.fsum(values) / len(values)
        out[col] = repr(mean)
        if col in ("mcc", "tpr", "fpr"):
            var = math.fsum((v - mean) ** 2 for v in values) / len(values)
            out[f"{col}_std"] = repr(math.sqrt(var))
    return out


def read_rows(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if tuple(reader.fieldnames) != COLUMNS:
            raise ValueError(f"{path}: unexpected header, not a sweep output file")
        return list(reader)


def _append(path: Path, row: dict) -> None:
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        if new:
            writer.writeheader()
        writer.writerow(row)
        fh.flush()


def run_sweep(config: ExperimentConfig, output_path=None, parallelism: Optional[int] = None) -> dict:
    """Run all missing cells and rewrite ``output_path`` in canonical order.

    Returns counts ``{"computed", "reused", "failed"}``.
    """
    path = Path(output_path or config.output_path or "sweep.csv")
    workers = parallelism if parallelism is not None else config.parallelism
    done = {}
    if path.exists() and path.stat().st_size:
        for row in read_rows(path):
            if row["kind"] == "data":
                done[_key(row["family"], row["n"], row["gamma"], row["trial"])] = row
    cells = config.cells()
    todo = [c for c in cells if _key(c[0].label, c[1], c[2], c[3]) not in done]
    log.info("sweep: %d cells, %d reused, %d to run", len(cells), len(cells) - len(todo), len(todo))
    results = {}
    args = [(spec, n, g, t, config.base_seed, config.centered, config.max_level, config.timing)
            for spec, n, g, t in todo]
    if workers and workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_cell, *a): a for a in args}
            for fut in as_completed(futures):
                row = fut.result()
                results[_key(row["family"], row["n"], row["gamma"], row["trial"])] = row
                _append(path, row)
    else:
        for a in args:
            row = run_cell(*a)
            results[_key(row["family"], row["n"], row["gamma"], row["trial"])] = row
            _append(path, row)

    final = []
    failed = 0
    for spec in config.families:
        for n in config.n_values:
            for g in config.gammas:
                group = []
                for t in range(config.trials):
                    key = _key(spec.label, n, g, t)
                    row = done.get(key) or results[key]
                    final.append(row)
                    if row["kind"] == "data":
                        group.append(row)
                    else:
                        failed += 1
                final.append(summarize(group, spec.label, n, g))
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(final)
    os.replace(tmp, path)
    return {"computed": len(todo), "reused": len(cells) - len(todo), "failed": failed}
