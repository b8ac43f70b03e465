"""Parameter sweeps over the modulus, run on a thread pool and merged by k."""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

from wave_stability.core.data_conversion import write_csv
from wave_stability.core.errors import DomainError, WaveStabilityError
from wave_stability.core.greens import index_closed_form, stability_index
from wave_stability.core.logger import logger
from wave_stability.core.schemas import RecordStatus, SweepRecord, Tolerances, WaveModel

WORKERS_ENV = "WAVE_STABILITY_WORKERS"


def worker_count(workers: Optional[int] = None) -> int:
    """Explicit count, else WAVE_STABILITY_WORKERS, else the CPU count; at least 1."""
    if workers is not None:
        return max(1, int(workers))
    raw = os.getenv(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning(f"⚠️ Ignoring {WORKERS_ENV}={raw!r}, not an integer")
    return max(1, os.cpu_count() or 1)


def _guarded(task: Callable[[float], SweepRecord], k: float) -> SweepRecord:
    logger.debug(f"🔹 Sweep point k={k}")
    try:
        return task(k)
    except WaveStabilityError as e:
        logger.error(f"❌ k={k}: {type(e).__name__}: {e.message}")
        return SweepRecord(k=k, status=RecordStatus.FAIL, message=f"{type(e).__name__}: {e.message}")


def run_sweep(
    task: Callable[[float], SweepRecord],
    moduli: Sequence[float],
    workers: Optional[int] = None,
) -> List[SweepRecord]:
    """
    Evaluate `task` at every modulus concurrently.

    Failures become `fail` rows, never dropped; rows are returned sorted by k
    regardless of completion order.
    """
    moduli = [float(k) for k in moduli]
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        records = list(pool.map(lambda k: _guarded(task, k), moduli))
    return sorted(records, key=lambda record: record.k)


def index_record(
    model: WaveModel, k: float, n_quad: int = 256, tolerances: Tolerances = Tolerances()
) -> SweepRecord:
    index = stability_index(model, k, n_quad, tolerances)
    values = {
        "index": index.value_greens,
        "value_greens": index.value_greens,
        "value_spectral": index.value_spectral,
        "discrepancy": index.discrepancy,
        "closed_form": index_closed_form(model, k),
    }
    if "half_normalized" in index.components:
        values["half_normalized"] = index.components["half_normalized"]
    status, message = RecordStatus.OK, ""
    if index.flagged:
        status, message = RecordStatus.WARN, "small modulus: doubled grid, relaxed tolerance"
    if not index.value_greens < 0.0:
        status, message = RecordStatus.FAIL, "index is not negative"
    return SweepRecord(k=k, values=values, status=status, message=message)


def index_sweep(
    model: WaveModel,
    moduli: Sequence[float],
    n_quad: int = 256,
    tolerances: Tolerances = Tolerances(),
    workers: Optional[int] = None,
) -> List[SweepRecord]:
    model = WaveModel(model)
    records = run_sweep(lambda k: index_record(model, k, n_quad, tolerances), moduli, workers)
    failed = sum(1 for record in records if record.status == RecordStatus.FAIL)
    if failed:
        logger.warning(f"⚠️ {model.value} index sweep: {failed}/{len(records)} rows failed")
    else:
        logger.info(f"✅ {model.value} index sweep: {len(records)} rows")
    return records


def record_columns(records: Sequence[SweepRecord]) -> List[str]:
    columns: List[str] = []
    for record in records:
        for key in record.values:
            if key not in columns:
                columns.append(key)
    return columns


def write_records(path: str, records: Sequence[SweepRecord]) -> None:
    """
    One CSV row per record: k, its values, status and message.

    Missing values of fail rows are written as nan.

    Raises:
        DomainError: If there are no records.
    """
    if not records:
        raise DomainError("Refusing to write an empty record set.", {"path": path})
    columns = record_columns(records)
    rows = [
        [record.k]
        + [record.values.get(key, float("nan")) for key in columns]
        + [record.status.value, record.message]
        for record in records
    ]
    write_csv(path, ["k"] + columns + ["status", "message"], rows)
