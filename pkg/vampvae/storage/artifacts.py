import csv
import logging
from pathlib import Path

from vampvae.errors import FormatError
from vampvae.models.evaluation import EvalReport, Histogram
from vampvae.models.training import EpochRecord, TrainLog

logger = logging.getLogger(__name__)

TRAINLOG_FILE = "trainlog.jsonl"
BEST_CHECKPOINT = "best.ckpt"
FINAL_CHECKPOINT = "final.ckpt"
REPORT_FILE = "report.json"
HISTOGRAM_FILE = "histogram.csv"


def write_trainlog(log: TrainLog, path: str | Path) -> Path:
    """One JSON object per epoch."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record in log.epochs:
            handle.write(record.model_dump_json() + "\n")
    return path


def read_trainlog(path: str | Path) -> list[EpochRecord]:
    records = []
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(EpochRecord.model_validate_json(line))
        except ValueError as exc:
            raise FormatError(f"{path}: line {number} is not an epoch record: {exc}")
    return records


def write_report(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def read_report(path: str | Path) -> EvalReport:
    return EvalReport.model_validate_json(Path(path).read_text(encoding="utf-8"))


def write_histogram_csv(histogram: Histogram, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "count"])
        for left, right, count in zip(histogram.edges[:-1], histogram.edges[1:], histogram.counts):
            writer.writerow([repr(left), repr(right), count])
    return path
