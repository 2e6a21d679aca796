"""Monte Carlo engine: per-SNR error-rate points, CSV/manifest persistence,
and the rate-versus-minimum-SNR sweep.

Determinism contract: every trial owns an RNG substream seeded by
(master seed, SNR value bit pattern, trial index), and early stopping is a
pure function of the per-trial outcome sequence in trial order.  Batch
size, thread count, and SNR-grid ordering therefore cannot change any
reported number.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from functools import lru_cache

import numpy as np

from . import __version__
from .bounds import db_to_linear, linear_to_db, min_snr_for_rate, tbm_rate
from .channels import awgn, simo_mac
from .decoders import SINGLE_USER_DECODERS, multiuser_decode
from .modulation import encode_case1, encode_case2, encode_case3, transmit_signal
from .ring_code import CASES, TensorShape, case_matrix

SCENARIOS = ("awgn", "simo-mac")
CSV_COLUMNS = (
    "scenario", "shape", "M", "case", "decoder", "snr_db",
    "trials", "errors", "metric", "stderr", "seed",
)
SWEEP_COLUMNS = (
    "shape", "M", "case", "rate", "target_per",
    "min_snr_db", "bound_snr_db", "trials", "seed",
)


@dataclass(frozen=True)
class SimConfig:
    """One simulation campaign; hashable and picklable so worker processes
    can receive it whole."""

    dims: tuple[int, ...]
    modulation_order: int
    snrs_db: tuple[float, ...]
    trials: int
    seed: int
    case: int = 1
    scenario: str = "awgn"
    decoder: str = "bp"
    num_users: int = 1
    num_antennas: int = 1
    stop_errors: int = 100
    max_iters: int = 50
    damping: float = 0.0
    threads: int = 1
    batch_size: int = 32

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(t) for t in self.dims))
        object.__setattr__(self, "snrs_db", tuple(float(s) for s in self.snrs_db))
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.case not in CASES:
            raise ValueError(f"case must be one of {CASES}, got {self.case}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.stop_errors < 0:
            raise ValueError(f"stop_errors must be >= 0, got {self.stop_errors}")
        if self.threads < 1 or self.batch_size < 1:
            raise ValueError("threads and batch_size must be >= 1")
        if self.scenario == "awgn":
            if self.decoder not in SINGLE_USER_DECODERS:
                raise ValueError(
                    f"unknown decoder {self.decoder!r}; available: "
                    f"{sorted(SINGLE_USER_DECODERS)}"
                )
            if self.decoder == "bp" and self.case == 2:
                raise ValueError("case 2 has no factor graph; use the ml decoder")
        else:
            if self.case != 1:
                raise ValueError("the non-coherent multi-user scenario requires case 1")
            if self.num_users < 1 or self.num_antennas < 1:
                raise ValueError("num_users and num_antennas must be >= 1")

    @property
    def shape(self) -> TensorShape:
        return TensorShape(self.dims, self.modulation_order)

    @property
    def units_per_trial(self) -> int:
        """Error-countable units: one block for AWGN, one per user for PUPE."""
        return 1 if self.scenario == "awgn" else self.num_users

    @property
    def decoder_label(self) -> str:
        return self.decoder if self.scenario == "awgn" else "cp-bp"


@dataclass(frozen=True)
class PointRecord:
    """One SNR point: raw counts plus the derived rate estimate."""

    snr_db: float
    trials: int
    errors: int
    value: float
    stderr: float


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    points: tuple[PointRecord, ...]
    wall_seconds: float


_case_matrix = lru_cache(maxsize=16)(case_matrix)


def _snr_key(snr_db: float) -> int:
    """Bit pattern of the SNR value, used as a substream key; works for any
    float, not just members of some fixed grid."""
    return int(np.float64(snr_db).view(np.uint64))


def trial_rng(seed: int, snr_db: float, trial: int) -> np.random.Generator:
    """The trial's private generator; the sole source of randomness for its
    info bits, channel draws, and decomposition restarts."""
    return np.random.default_rng(np.random.SeedSequence([seed, _snr_key(snr_db), trial]))


def _encode_batch(info: np.ndarray, shape: TensorShape, case: int) -> np.ndarray:
    g = _case_matrix(shape, case)
    if case == 1:
        return encode_case1(info, g)
    if case == 3:
        return encode_case3(info, g)
    return encode_case2(info, g)


def _trial_outcomes(config: SimConfig, snr_db: float, start: int, stop: int) -> np.ndarray:
    """Per-trial error counts for trials [start, stop), in trial order."""
    shape = config.shape
    m = shape.modulation_order
    k = shape.info_length(config.case)
    noise_var = 1.0 / db_to_linear(snr_db)
    if config.scenario == "awgn":
        rngs = [trial_rng(config.seed, snr_db, t) for t in range(start, stop)]
        info = np.stack([rng.integers(0, m, k) for rng in rngs])
        signal = transmit_signal(_encode_batch(info, shape, config.case), m)
        received = np.stack([awgn(signal[i], noise_var, rng) for i, rng in enumerate(rngs)])
        decode = SINGLE_USER_DECODERS[config.decoder]
        decided = decode(received, noise_var, shape, config.case,
                         config.max_iters, config.damping)
        return (decided != info).any(axis=1).astype(np.int64)
    out = np.zeros(stop - start, dtype=np.int64)
    for i, t in enumerate(range(start, stop)):
        rng = trial_rng(config.seed, snr_db, t)
        info = rng.integers(0, m, (config.num_users, k))
        signal = transmit_signal(_encode_batch(info, shape, 1), m)
        tensor, _ = simo_mac(signal, shape, config.num_antennas, noise_var, rng)
        decoded = multiuser_decode(
            tensor, config.num_users, noise_var, shape, rng,
            max_bp_iters=config.max_iters, damping=config.damping,
        )
        out[i] = missed_users(info, decoded)
    return out


def missed_users(sent: np.ndarray, decoded: list[np.ndarray | None]) -> int:
    """Unmatched transmitted words under multiset matching (user identities
    are not recovered by an unsourced receiver; duplicates count once each)."""
    want = Counter(tuple(int(v) for v in row) for row in np.atleast_2d(sent))
    got = Counter(tuple(int(v) for v in d) for d in decoded if d is not None)
    matched = sum(min(c, got[w]) for w, c in want.items())
    return int(sum(want.values()) - matched)


def _stop_index(outcomes: np.ndarray, stop_errors: int) -> int | None:
    """First trial index at which cumulative errors reach the stop budget;
    None when the budget is never reached (or stopping is disabled)."""
    if stop_errors <= 0:
        return None
    hits = np.nonzero(np.cumsum(outcomes) >= stop_errors)[0]
    return int(hits[0]) if hits.size else None


def _collect_outcomes(config: SimConfig, snr_db: float) -> np.ndarray:
    ranges = [
        (a, min(a + config.batch_size, config.trials))
        for a in range(0, config.trials, config.batch_size)
    ]
    collected: list[np.ndarray] = []

    def scan() -> np.ndarray | None:
        arr = np.concatenate(collected) if collected else np.zeros(0, dtype=np.int64)
        idx = _stop_index(arr, config.stop_errors)
        return arr[: idx + 1] if idx is not None else None

    if config.threads == 1:
        for a, b in ranges:
            collected.append(_trial_outcomes(config, snr_db, a, b))
            stopped = scan()
            if stopped is not None:
                return stopped
    else:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            for wave in range(0, len(ranges), config.threads):
                futures = [
                    pool.submit(_trial_outcomes, config, snr_db, a, b)
                    for a, b in ranges[wave : wave + config.threads]
                ]
                for fut in futures:
                    collected.append(fut.result())
                stopped = scan()
                if stopped is not None:
                    return stopped
    return np.concatenate(collected)


def run_point(config: SimConfig, snr_db: float) -> PointRecord:
    """Estimate the configured scenario's error metric at one SNR."""
    outcomes = _collect_outcomes(config, snr_db)
    trials = int(outcomes.size)
    errors = int(outcomes.sum())
    units = trials * config.units_per_trial
    value = errors / units
    stderr = float(np.sqrt(value * (1.0 - value) / units))
    return PointRecord(float(snr_db), trials, errors, value, stderr)


def run(config: SimConfig) -> SimResult:
    t0 = time.perf_counter()
    points = tuple(run_point(config, s) for s in config.snrs_db)
    return SimResult(config, points, time.perf_counter() - t0)


# --- sweep -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    dims: tuple[int, ...]
    modulation_order: int
    case: int
    rate: float
    target_error: float
    min_snr_db: float | None
    bound_snr_db: float
    trials: int
    seed: int


def min_snr_sweep(
    config: SimConfig,
    target_error: float,
    lo_db: float,
    hi_db: float,
    resolution_db: float = 0.25,
) -> float | None:
    """Smallest grid SNR whose measured error rate meets the target.

    Bisects the [lo_db, hi_db] grid at ``resolution_db`` spacing, assuming
    the error rate is non-increasing in SNR.  Returns None when even the
    top of the bracket misses the target.
    """
    if hi_db <= lo_db:
        raise ValueError("need lo_db < hi_db")
    if resolution_db <= 0:
        raise ValueError("resolution must be positive")
    steps = int(np.ceil((hi_db - lo_db) / resolution_db))
    grid = [lo_db + i * resolution_db for i in range(steps + 1)]
    grid[-1] = min(grid[-1], hi_db)

    measured: dict[int, float] = {}

    def per(i: int) -> float:
        if i not in measured:
            measured[i] = run_point(config, grid[i]).value
        return measured[i]

    top = len(grid) - 1
    if per(top) > target_error:
        return None
    if per(0) <= target_error:
        return float(grid[0])
    lo_i, hi_i = 0, top
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if per(mid) <= target_error:
            hi_i = mid
        else:
            lo_i = mid
    return float(grid[hi_i])


def sweep_table(
    configs: list[SimConfig],
    target_error: float,
    lo_db: float,
    hi_db: float,
    resolution_db: float = 0.25,
) -> list[SweepRow]:
    """Rate versus measured minimum SNR for each configuration, with the
    normal-approximation benchmark SNR at the same blocklength and target."""
    rows = []
    for cfg in configs:
        shape = cfg.shape
        rate = tbm_rate(shape, cfg.case)
        bound = linear_to_db(
            min_snr_for_rate(shape.blocklength, target_error, rate)
        )
        found = min_snr_sweep(cfg, target_error, lo_db, hi_db, resolution_db)
        rows.append(
            SweepRow(
                dims=shape.dims,
                modulation_order=shape.modulation_order,
                case=cfg.case,
                rate=rate,
                target_error=target_error,
                min_snr_db=found,
                bound_snr_db=bound,
                trials=cfg.trials,
                seed=cfg.seed,
            )
        )
    return rows


# --- persistence -------------------------------------------------------------


def _fmt(value) -> str:
    # plain-float repr (numpy scalars repr differently and are not stable text)
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def shape_label(dims: tuple[int, ...]) -> str:
    return "x".join(str(t) for t in dims)


def result_csv(result: SimResult) -> str:
    """CSV text for a simulation run; float cells use repr so a rerun is
    byte-comparable."""
    cfg = result.config
    lines = [",".join(CSV_COLUMNS)]
    for p in result.points:
        row = (
            cfg.scenario, shape_label(cfg.shape.dims), cfg.modulation_order,
            cfg.case, cfg.decoder_label, p.snr_db, p.trials, p.errors,
            p.value, p.stderr, cfg.seed,
        )
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def sweep_csv(rows: list[SweepRow]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        cells = (
            shape_label(r.dims), r.modulation_order, r.case, r.rate,
            r.target_error,
            "" if r.min_snr_db is None else r.min_snr_db,
            r.bound_snr_db, r.trials, r.seed,
        )
        lines.append(",".join(_fmt(v) for v in cells))
    return "\n".join(lines) + "\n"


def config_to_dict(config: SimConfig) -> dict:
    return asdict(config)


def config_from_dict(doc: dict) -> SimConfig:
    doc = dict(doc)
    doc["dims"] = tuple(doc["dims"])
    doc["snrs_db"] = tuple(doc["snrs_db"])
    return SimConfig(**doc)


def write_manifest(output_path: str, command: str, config_doc: dict, extras: dict | None = None):
    """Sidecar JSON describing how an output file was produced.  The output
    itself must reproduce byte-for-byte; the manifest carries the one
    allowed non-reproducible field (its timestamp)."""
    doc = {
        "command": command,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "output": output_path,
        "config": config_doc,
    }
    if extras:
        doc.update(extras)
    path = output_path + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
