"""
Benchmark Harness

Runs suites of generated market choice instances through the
reduce -> solve -> translate pipeline and records, per instance:
- the exact optimum (or "n/a" beyond the enumeration limit)
- the heuristic value on the reduced instance and the translated value
- the observed ratio and the translation dominance checks

Reports are a JSON-lines file, a rendered text table and a summary JSON.
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator
from tqdm import tqdm

from marketchoice.config import CONFIGS_DIR, ORACLE_LIMIT
from marketchoice.formats import load_json, save_instance, save_json
from marketchoice.generators import GenParams, generate_instance
from marketchoice.model import (
    EnumerationLimitError,
    Instance,
    MarketChoiceError,
    ProblemKind,
    verify,
)
from marketchoice.reductions import Mode, translate_solution
from marketchoice.rng import MASK64
from marketchoice.sampling import sample_feasible_solution
from marketchoice.solvers import SolverParams, exact_solve, run_pipeline

logger = logging.getLogger(__name__)

BENCH_KINDS = (ProblemKind.TMC, ProblemKind.UTMC, ProblemKind.CFLMC)

COLUMNS = ["instance_id", "seed", "kind", "mode", "m", "n", "oracle",
           "heuristic", "translated", "ratio", "samples", "ok", "failure"]


class BenchInvariantError(MarketChoiceError):
    """One or more bench instances broke a pipeline invariant."""

    def __init__(self, message: str, instances: Dict[str, Instance]):
        super().__init__(message)
        self.instances = instances


class BenchSuite(BaseModel):
    """``count`` instances generated from ``instance`` with seeds seed, seed+1, ..."""

    model_config = ConfigDict(extra="forbid")

    name: str = "suite"
    mode: Mode = Mode.METRIC
    count: int = Field(10, ge=0)
    instance: GenParams = GenParams()

    @field_validator("instance")
    @classmethod
    def _bench_kind(cls, params: GenParams) -> GenParams:
        if params.kind not in BENCH_KINDS:
            raise ValueError(f"bench suites run {'/'.join(k.value for k in BENCH_KINDS)} instances, "
                             f"got {params.kind.value}")
        return params


class BenchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "bench"
    suites: List[BenchSuite] = []
    solver: SolverParams = SolverParams()
    oracle_limit: int = Field(ORACLE_LIMIT, ge=0)
    dominance_samples: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    include_timings: bool = False


def load_bench_config(path: Union[str, Path]) -> BenchConfig:
    """Load a bench config; bare names are looked up in the configs directory."""
    path = Path(path)
    if not path.exists() and (CONFIGS_DIR / path).exists():
        path = CONFIGS_DIR / path
    return BenchConfig.model_validate(load_json(path))


@dataclass
class BenchTask:
    instance_id: str
    mode: Mode
    params: GenParams


@dataclass
class BenchRow:
    instance_id: str
    seed: int
    kind: str
    mode: str
    m: int
    n: int
    oracle: Union[int, str] = "n/a"
    heuristic: Optional[int] = None
    translated: Optional[int] = None
    ratio: Optional[float] = None
    samples: int = 0
    ok: bool = True
    failure: str = ""
    wall_time: Optional[float] = None

    @property
    def suite(self) -> str:
        return self.instance_id.rsplit("-", 2)[0]

    def to_dict(self, include_timings: bool = False) -> Dict[str, Any]:
        row = {name: getattr(self, name) for name in COLUMNS}
        if include_timings:
            row["wall_time"] = self.wall_time
        return row


def _ratio_stats(rows: List[BenchRow]) -> Dict[str, Optional[float]]:
    ratios = [row.ratio for row in rows if row.ratio is not None]
    return {
        "max_ratio": max(ratios) if ratios else None,
        "mean_ratio": round(sum(ratios) / len(ratios), 6) if ratios else None,
    }


@dataclass
class BenchReport:
    name: str
    rows: List[BenchRow] = field(default_factory=list)
    include_timings: bool = False

    @property
    def failures(self) -> List[BenchRow]:
        return [row for row in self.rows if not row.ok]

    def aggregate(self) -> Dict[str, Any]:
        """Whole-report figures plus max and mean ratio per suite."""
        suites: Dict[str, List[BenchRow]] = {}
        for row in self.rows:
            suites.setdefault(row.suite, []).append(row)
        return {
            "instances": len(self.rows),
            "with_oracle": sum(1 for row in self.rows if row.oracle != "n/a"),
            **_ratio_stats(self.rows),
            "failures": len(self.failures),
            "suites": {name: {"instances": len(rows), **_ratio_stats(rows)} for name, rows in suites.items()},
        }

    def to_dataframe(self) -> pd.DataFrame:
        columns = COLUMNS + (["wall_time"] if self.include_timings else [])
        return pd.DataFrame([row.to_dict(self.include_timings) for row in self.rows], columns=columns)

    def render_table(self) -> str:
        lines = [f"Bench report: {self.name}", ""]
        if self.rows:
            lines.append(self.to_dataframe().to_string(index=False))
        else:
            lines.append("(no instances)")
        lines.append("")
        summary = self.aggregate()
        suites = summary.pop("suites")
        for key, value in summary.items():
            lines.append(f"{key:12s}: {value}")
        for name, stats in suites.items():
            lines.append(f"{name:12s}: max ratio {stats['max_ratio']}, mean ratio {stats['mean_ratio']}")
        return "\n".join(lines) + "\n"

    def save(self, output_dir: Union[str, Path]) -> Dict[str, Path]:
        """Write <name>.jsonl, <name>_table.txt and <name>_summary.json."""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "rows": output_dir / f"{self.name}.jsonl",
            "table": output_dir / f"{self.name}_table.txt",
            "summary": output_dir / f"{self.name}_summary.json",
        }
        with open(paths["rows"], 'w', encoding='utf-8') as f:
            for row in self.rows:
                f.write(json.dumps(row.to_dict(self.include_timings), ensure_ascii=False) + "\n")
        with open(paths["table"], 'w', encoding='utf-8') as f:
            f.write(self.render_table())
        save_json({"name": self.name, **self.aggregate()}, paths["summary"])
        logger.info(f"📄 Bench report saved to {output_dir}")
        return paths


def expand_tasks(config: BenchConfig) -> List[BenchTask]:
    tasks = []
    for s, suite in enumerate(config.suites):
        for k in range(suite.count):
            seed = (suite.instance.seed + k) & MASK64
            tasks.append(BenchTask(
                instance_id=f"{suite.name}-{s}-{k:04d}",
                mode=suite.mode,
                params=suite.instance.model_copy(update={"seed": seed}),
            ))
    return tasks


def run_instance(task: BenchTask, config: BenchConfig) -> BenchRow:
    """Pipeline, oracle and dominance checks for one generated instance."""
    inst = generate_instance(task.params, task.mode.value)
    row = BenchRow(task.instance_id, task.params.seed, inst.kind.value, task.mode.value, inst.m, inst.n)
    failures = []
    start = time.perf_counter()
    try:
        result = run_pipeline(inst, task.mode, config.solver)
        row.heuristic = result.heuristic.objective
        row.translated = result.translated.objective

        report = verify(inst, result.translated)
        if not report.ok:
            failures.append(f"pipeline output infeasible: {report.summary()}")
        if row.translated > row.heuristic:
            failures.append(f"translated {row.translated} exceeds heuristic {row.heuristic}")

        try:
            row.oracle = exact_solve(inst, config.oracle_limit).objective
        except EnumerationLimitError:
            row.oracle = "n/a"
        if row.oracle != "n/a":
            if row.oracle > row.translated:
                failures.append(f"oracle {row.oracle} exceeds pipeline value {row.translated}")
            elif row.oracle > 0:
                row.ratio = round(row.translated / row.oracle, 6)
            elif row.translated == 0:
                row.ratio = 1.0

        for k in range(config.dominance_samples):
            sample = sample_feasible_solution(result.reduced, ((task.params.seed << 16) | k) & MASK64)
            back = translate_solution(result.certificate, result.reduced, sample)
            if not verify(inst, back).ok or back.objective > sample.objective:
                failures.append(f"dominance sample {k}: {back.objective} vs reduced {sample.objective}")
            row.samples += 1
    except (MarketChoiceError, RuntimeError) as e:
        logger.error(f"❌ {task.instance_id} raised {type(e).__name__}", exc_info=True)
        failures.append(f"{type(e).__name__}: {e}")

    row.wall_time = round(time.perf_counter() - start, 6)
    row.ok = not failures
    row.failure = "; ".join(failures)
    return row


def bench_run(config: BenchConfig, output_dir: Union[str, Path, None] = None,
              show_progress: bool = True) -> BenchReport:
    """
    Run every suite of a bench config.

    Rows are computed independently (in parallel when ``workers`` > 1) and
    assembled in task order. The report is written before any failure is
    raised, together with one repro instance file per failing row.

    Raises:
        BenchInvariantError: if any instance broke an invariant
    """
    tasks = expand_tasks(config)
    logger.info("=" * 60)
    logger.info(f"BENCH: {config.name} ({len(tasks)} instances, {len(config.suites)} suites)")
    logger.info("=" * 60)

    progress = tqdm(total=len(tasks), desc=config.name, disable=not show_progress)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        rows = []
        for row in pool.map(lambda task: run_instance(task, config), tasks):
            rows.append(row)
            progress.update(1)
    progress.close()

    report = BenchReport(config.name, rows, config.include_timings)
    summary = report.aggregate()
    logger.info(f"Instances: {summary['instances']}, max ratio: {summary['max_ratio']}, "
                f"mean ratio: {summary['mean_ratio']}, failures: {summary['failures']}")
    if output_dir is not None:
        report.save(output_dir)

    failing = report.failures
    if failing:
        instances = {}
        by_id = {task.instance_id: task for task in tasks}
        for row in failing:
            task = by_id[row.instance_id]
            instances[row.instance_id] = generate_instance(task.params, task.mode.value)
            if output_dir is not None:
                save_instance(instances[row.instance_id], Path(output_dir) / f"repro_{row.instance_id}.json")
            logger.error(f"❌ {row.instance_id}: {row.failure}")
        raise BenchInvariantError(f"{len(failing)} bench instances broke an invariant", instances)

    logger.info("✅ All bench invariants hold")
    return report
