"""
QSS Collusion Lab - Batch Service
Seeded trial batches, aggregate statistics and report files
"""
import concurrent.futures
import csv
import logging
from pathlib import Path
from typing import List, Optional, Tuple

from qss import __version__
from qss.config import get_settings
from qss.schemas.config import ProtocolConfig, ScenarioSpec
from qss.schemas.report import AggregateReport, Aggregates, TrialRecord
from qss.services.adversary import build_strategy
from qss.services.protocol import protocol_engine
from qss.services.randomness import derive_trial_seed

settings = get_settings()
logger = logging.getLogger(__name__)

CSV_HEADER = [
    "scenario", "k", "k1", "m", "trials", "seed",
    "detection_rate", "mean_mismatch", "adversary_accuracy",
]

TrialJob = Tuple[int, str, ProtocolConfig, bool]


def _run_trial(job: TrialJob) -> TrialRecord:
    """Top-level so process pools can pickle it."""
    trial, scenario, config, zach_returns_genuine = job
    strategy = build_strategy(scenario, zach_returns_genuine=zach_returns_genuine)
    report = protocol_engine.run_scenario(config, strategy)
    return TrialRecord.from_report(trial, report)


def _mean(values: List[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def _ratio(hits: int, total: int) -> Optional[float]:
    return hits / total if total else None


class BatchRunner:
    """Runs many independent trials of one scenario."""

    def run_batch(self, spec: ScenarioSpec) -> AggregateReport:
        master_seed = spec.config.seed
        jobs: List[TrialJob] = [
            (
                trial,
                spec.scenario.value,
                spec.config.model_copy(update={"seed": derive_trial_seed(master_seed, trial)}),
                spec.zach_returns_genuine,
            )
            for trial in range(spec.trials)
        ]
        logger.info(
            f"Starting {spec.trials} trials of {spec.scenario.value} "
            f"(k={spec.config.k}, k1={spec.config.k1}, m={spec.config.m}, seed={master_seed}, workers={spec.workers})"
        )

        if spec.workers > 1:
            records = self._run_parallel(jobs, spec.workers)
        else:
            records = [_run_trial(job) for job in jobs]

        aggregates = self.aggregate(records)
        if aggregates.aborted_precheck or aggregates.aborted_verify:
            logger.warning(
                f"{aggregates.aborted_precheck + aggregates.aborted_verify}/{spec.trials} runs aborted "
                f"(precheck={aggregates.aborted_precheck}, verify={aggregates.aborted_verify})"
            )
        logger.info(f"Finished {spec.scenario.value}: detection_rate={aggregates.detection_rate:.6f}")

        return AggregateReport(
            tool_version=__version__,
            scenario=spec.scenario,
            config=spec.config,
            seed=master_seed,
            trials=spec.trials,
            zach_returns_genuine=spec.zach_returns_genuine,
            aggregates=aggregates,
            records=records,
        )

    def _run_parallel(self, jobs: List[TrialJob], workers: int) -> List[TrialRecord]:
        """Completion order is arbitrary; records are re-ordered by trial index."""
        records = {}
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(_run_trial, job): job[0] for job in jobs}
            for future in concurrent.futures.as_completed(futures):
                records[futures[future]] = future.result()
        return [records[trial] for trial in sorted(records)]

    def aggregate(self, records: List[TrialRecord]) -> Aggregates:
        trials = len(records)
        return Aggregates(
            detection_rate=sum(1 for r in records if r.detected) / trials,
            mean_mismatch=sum(r.mismatch_count for r in records) / trials,
            mean_recovery_accuracy=_mean(
                [r.recovery_accuracy for r in records if r.recovery_accuracy is not None]
            ),
            mean_adversary_accuracy=_mean(
                [r.adversary_accuracy for r in records if r.adversary_accuracy is not None]
            ),
            precheck_match_rate=_ratio(
                sum(r.precheck_matches for r in records), sum(r.precheck_total for r in records)
            ),
            check_mismatch_rate=_ratio(
                sum(r.check_mismatches for r in records), sum(r.check_total for r in records)
            ),
            aborted_precheck=sum(1 for r in records if r.detection_stage == "precheck"),
            aborted_verify=sum(1 for r in records if r.detection_stage == "verify"),
        )

    def summary_row(self, report: AggregateReport) -> List[str]:
        decimals = settings.float_decimals
        adversary = report.aggregates.mean_adversary_accuracy
        return [
            report.scenario.value,
            str(report.config.k),
            str(report.config.k1),
            str(report.config.m),
            str(report.trials),
            str(report.seed),
            f"{report.aggregates.detection_rate:.{decimals}f}",
            f"{report.aggregates.mean_mismatch:.{decimals}f}",
            "" if adversary is None else f"{adversary:.{decimals}f}",
        ]

    def write_reports(
        self,
        report: AggregateReport,
        out: Optional[Path] = None,
        csv_path: Optional[Path] = None
    ) -> None:
        """Write the JSON report and/or the one-row CSV summary; OSError propagates."""
        if out is not None:
            Path(out).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
            logger.info(f"Wrote report to {out}")
        if csv_path is not None:
            with open(csv_path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(CSV_HEADER)
                writer.writerow(self.summary_row(report))
            logger.info(f"Wrote summary to {csv_path}")


# Singleton instance
batch_runner = BatchRunner()
