"""Monte-Carlo SNR sweeps of decoding complexity and BER, with CSV and plot output."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import (DegenerateChannelError, SubchannelAssignment, decompose, generate_channel,
                      noise_variance, subchannel_system)
from .coding import standard_code
from .config import SimConfig
from .counters import OpCounters
from .lattice import RealLatticeSystem, householder_multiplications, realify
from .link import FrameLayout, assemble_metrics, decode_frame, route_metrics
from .precoder import PrecoderConfig, load_matrix
from .qam import QamConstellation
from .sphere import (Mode, exhaustive_bit_metric, exhaustive_multiplications_per_metric,
                     exhaustive_precoded_metrics, frame_precoded_metrics, nonprecoded_metrics)

__all__ = ["SweepRow", "SweepResult", "FrameTally", "run_sweep", "simulate_frame", "emit_csv",
           "load_csv", "emit_plot", "plot_figure", "CSV_COLUMNS"]

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "nt", "nr", "S", "P", "M", "rate", "mode", "snr_db", "avg_mults_per_precoded_metric", "ber",
    "sd_execs_per_instant", "nodes_per_exec", "restarts",
    # appended after the documented interface columns
    "mults_ci95", "ber_ci95", "total_mults", "precoded_metrics", "bit_errors", "info_bits",
    "instants", "sd_execs", "nodes", "frames",
)
MODE_ORDER = (Mode.EXH, Mode.CSD, Mode.PSI)


@dataclass(frozen=True)
class SweepRow:
    nt: int
    nr: int
    S: int
    P: int
    M: int
    rate: str
    mode: str
    snr_db: float
    avg_mults_per_precoded_metric: float
    ber: float
    sd_execs_per_instant: float
    nodes_per_exec: float
    restarts: int
    mults_ci95: float
    ber_ci95: float
    total_mults: int
    precoded_metrics: int
    bit_errors: int
    info_bits: int
    instants: int
    sd_execs: int
    nodes: int
    frames: int

    def __eq__(self, other):
        if not isinstance(other, SweepRow):
            return NotImplemented
        # NaN fields (e.g. BER of a mode that was not decoded) compare equal
        for name in CSV_COLUMNS:
            a, b = getattr(self, name), getattr(other, name)
            if a != b and not (isinstance(a, float) and isinstance(b, float)
                               and math.isnan(a) and math.isnan(b)):
                return False
        return True


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict, compare=False)

    def select(self, mode=None, snr_db=None, **match):
        out = []
        for row in self.rows:
            if mode is not None and row.mode != Mode.parse(mode).label:
                continue
            if snr_db is not None and row.snr_db != snr_db:
                continue
            if any(getattr(row, k) != v for k, v in match.items()):
                continue
            out.append(row)
        return out

    def value(self, mode, snr_db, column="avg_mults_per_precoded_metric", **match):
        rows = self.select(mode, snr_db, **match)
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} rows for mode={mode} snr={snr_db} {match}")
        return getattr(rows[0], column)


@dataclass
class FrameTally:
    """Per-frame, per-(SNR, mode) totals; merged by addition."""

    mults: int = 0
    preprocessing: int = 0
    metrics: int = 0
    instants: int = 0
    sd_execs: int = 0
    nodes: int = 0
    restarts: int = 0
    bit_errors: int = 0
    info_bits: int = 0
    decoded: bool = True
    exec_counts_ok: bool = True


# ---- per-frame simulation ---------------------------------------------------

def _precoder(config: SimConfig, assignment: SubchannelAssignment) -> PrecoderConfig:
    if config.precoder in (None, "", "default"):
        return PrecoderConfig.default(assignment)
    return PrecoderConfig(load_matrix(config.precoder), assignment)


def _layout(config: SimConfig) -> FrameLayout:
    assignment = SubchannelAssignment(config.b_p, config.b_n)
    interleaver_seed = np.random.SeedSequence([config.seed, 0x1EAF])
    return FrameLayout.build(standard_code(config.rate), QamConstellation(config.M), assignment,
                             config.K, seed=interleaver_seed, interleave=config.interleave)


def _exh_executes(config: SimConfig) -> bool:
    return (1 << (config.M * config.P)) // 2 <= config.exh_max_candidates


def _channel(config: SimConfig, rng, diagnostics):
    while True:
        H = generate_channel(config.n_r, config.n_t, rng)
        bf = decompose(H, config.S)
        if bf.singular_values[-1] >= 1e-12:
            return H, bf
        diagnostics["degenerate_resamples"] = diagnostics.get("degenerate_resamples", 0) + 1


def simulate_frame(config: SimConfig, frame_index: int, layout: FrameLayout | None = None):
    """Simulate one channel block at every SNR and mode.

    Channel, information bits and the unit-variance noise pattern depend only
    on ``(seed, frame_index)``; each SNR point scales the same noise, and every
    mode decodes the same received data.  Returns ``(tallies, decisions_agree,
    diagnostics)`` where ``tallies[(snr_index, mode)]`` is a :class:`FrameTally`.
    """
    layout = layout if layout is not None else _layout(config)
    diagnostics = {}
    ch_rng, bit_rng, noise_rng = (np.random.default_rng(s) for s in
                                  np.random.SeedSequence([config.seed, frame_index]).spawn(3))
    pcfg = _precoder(config, layout.assignment)
    qam = layout.qam
    P, M, K = config.P, config.M, config.K
    while True:
        H, bf = _channel(config, ch_rng, diagnostics)
        gamma = subchannel_system(bf, layout.assignment)
        G_tilde = gamma.gamma_p @ pcfg.theta_p
        try:
            system = RealLatticeSystem.from_complex(G_tilde, qam.pam)
            break
        except DegenerateChannelError:
            diagnostics["degenerate_resamples"] = diagnostics.get("degenerate_resamples", 0) + 1

    info = bit_rng.integers(0, 2, layout.n_info, dtype=np.int8)
    _, x_prime = layout.transmit(info)
    clean = x_prime @ (gamma.full @ pcfg.theta).T
    unit_noise = (noise_rng.standard_normal(clean.shape)
                  + 1j * noise_rng.standard_normal(clean.shape)) / np.sqrt(2.0)
    lam_n = np.diag(gamma.gamma_n)
    loc = layout.location_map
    qr_mults = householder_multiplications(2 * P)
    table_mults = system.table.entry_count

    tallies = {}
    agree = True
    for si, snr in enumerate(config.snr_db):
        r = clean + np.sqrt(noise_variance(snr, config.S)) * unit_noise
        _, r_real = realify(G_tilde, r[:, :P])
        r_breve = system.rotate(r_real)
        non = nonprecoded_metrics(r[:, P:], lam_n, qam)
        decisions = []
        for mode in config.modes:
            mode = Mode.parse(mode)
            c = OpCounters()
            t = FrameTally(instants=K, metrics=K * 2 * M * P)
            if mode is Mode.EXH:
                if _exh_executes(config):
                    pre = exhaustive_precoded_metrics(r_real, system.G, qam.pam, c)
                else:
                    pre = None
                    c.add("real_multiplications",
                          exhaustive_multiplications_per_metric(P, M) * t.metrics)
            else:
                pre, execs = frame_precoded_metrics(r_breve, system, mode, c)
                expected = M * P + 1 if mode is Mode.PSI else 2 * M * P
                t.exec_counts_ok = bool(np.all(execs == expected))
                t.preprocessing = qr_mults + (table_mults if mode is Mode.PSI else 0)
            t.mults = c.real_multiplications
            t.sd_execs = c.sd_executions
            t.nodes = c.nodes_visited
            t.restarts = c.restarts
            if pre is None:
                t.decoded = False
            else:
                frame = route_metrics(assemble_metrics(pre, non), loc)
                bits = decode_frame(frame, layout)
                t.bit_errors = int(np.count_nonzero(bits != info))
                t.info_bits = layout.n_info
                decisions.append(bits)
            tallies[(si, mode)] = t
        if any(not np.array_equal(decisions[0], d) for d in decisions[1:]):
            agree = False
    return tallies, agree, diagnostics


def _spot_check(config: SimConfig, layout: FrameLayout) -> dict:
    """One literal exhaustive metric (frame 0, first SNR, instant 0, position (0, 0, 0)).

    Confirms the executed multiplication count equals the closed form and
    that the value agrees with the sphere-decoding metric.
    """
    ch_rng, _, noise_rng = (np.random.default_rng(s) for s in
                            np.random.SeedSequence([config.seed, 0]).spawn(3))
    pcfg = _precoder(config, layout.assignment)
    H, bf = _channel(config, ch_rng, {})
    gamma = subchannel_system(bf, layout.assignment)
    G_tilde = gamma.gamma_p @ pcfg.theta_p
    system = RealLatticeSystem.from_complex(G_tilde, layout.qam.pam)
    x = layout.qam.points[np.zeros(config.P, dtype=int)]
    noise = (noise_rng.standard_normal(config.P) + 1j * noise_rng.standard_normal(config.P))
    r = G_tilde @ x + np.sqrt(noise_variance(config.snr_db[0], config.S) / 2) * noise
    _, r_real = realify(G_tilde, r)
    c = OpCounters()
    value, _ = exhaustive_bit_metric(r_real, system.G, layout.qam.pam, (0, 0, 0), c)
    sd, _ = frame_precoded_metrics(system.rotate(r_real)[None], system, Mode.CSD)
    return {
        "exh_spot_check_mults": c.real_multiplications,
        "exh_closed_form_mults": exhaustive_multiplications_per_metric(config.P, config.M),
        "exh_spot_check_value": value,
        "sd_spot_check_value": float(sd[0, 0, 0, 0]),
    }


def _ci95(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2 or np.any(np.isnan(samples)):
        return 0.0 if samples.size < 2 else math.nan
    return float(1.96 * samples.std(ddof=1) / np.sqrt(samples.size))


def _frame_job(args):
    config, frame_index = args
    return simulate_frame(config, frame_index)


def run_sweep(config: SimConfig) -> SweepResult:
    """Simulate ``config.frames`` channel blocks at every SNR point and mode.

    A pure function of ``config``: frames are merged in index order whatever
    the completion order of parallel workers.
    """
    result = SweepResult(diagnostics={"degenerate_resamples": 0, "mode_disagreements": 0,
                                      "exec_count_violations": 0})
    if config.frames == 0:
        return result
    layout = _layout(config)
    modes = [Mode.parse(m) for m in config.modes]
    if Mode.EXH in modes and not _exh_executes(config):
        result.diagnostics.update(_spot_check(config, layout))

    jobs = [(config, f) for f in range(config.frames)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            outputs = list(pool.map(_frame_job, jobs))
    else:
        outputs = [simulate_frame(config, f, layout) for _, f in jobs]

    per_frame = {}
    for tallies, agree, diag in outputs:
        result.diagnostics["degenerate_resamples"] += diag.get("degenerate_resamples", 0)
        result.diagnostics["mode_disagreements"] += int(not agree)
        for key, t in tallies.items():
            per_frame.setdefault(key, []).append(t)
            result.diagnostics["exec_count_violations"] += int(not t.exec_counts_ok)

    for si, snr in enumerate(config.snr_db):
        for mode in sorted(modes, key=MODE_ORDER.index):
            ts = per_frame[(si, mode)]
            preproc = sum(t.preprocessing for t in ts) if config.count_preprocessing else 0
            mults = sum(t.mults for t in ts) + preproc
            metrics = sum(t.metrics for t in ts)
            execs = sum(t.sd_execs for t in ts)
            nodes = sum(t.nodes for t in ts)
            instants = sum(t.instants for t in ts)
            decoded = all(t.decoded for t in ts)
            errors = sum(t.bit_errors for t in ts)
            info_bits = sum(t.info_bits for t in ts)
            frame_mults = [(t.mults + (t.preprocessing if config.count_preprocessing else 0))
                           / t.metrics for t in ts]
            frame_ber = [t.bit_errors / t.info_bits if t.decoded else math.nan for t in ts]
            result.rows.append(SweepRow(
                nt=config.n_t, nr=config.n_r, S=config.S, P=config.P, M=config.M,
                rate=str(config.rate), mode=mode.label, snr_db=float(snr),
                avg_mults_per_precoded_metric=mults / metrics,
                ber=errors / info_bits if decoded else math.nan,
                sd_execs_per_instant=execs / instants,
                nodes_per_exec=nodes / execs if execs else 0.0,
                restarts=sum(t.restarts for t in ts),
                mults_ci95=_ci95(frame_mults), ber_ci95=_ci95(frame_ber),
                total_mults=mults, precoded_metrics=metrics,
                bit_errors=errors if decoded else -1, info_bits=info_bits if decoded else 0,
                instants=instants, sd_execs=execs, nodes=nodes, frames=len(ts)))
    result.diagnostics["per_frame"] = per_frame
    return result


# ---- output ---------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit_csv(result: SweepResult, path) -> Path:
    """One row per (configuration, SNR, mode); floats written with 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    return path


def load_csv(path) -> SweepResult:
    types = {f.name: f.type for f in dataclasses.fields(SweepRow)}
    conv = {"int": int, "float": float, "str": str}
    rows = []
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(SweepRow(**{k: conv[types[k]](rec[k]) for k in CSV_COLUMNS}))
    return SweepResult(rows)


def plot_figure(result: SweepResult):
    """Matplotlib figure of average multiplications per precoded bit metric vs SNR.

    Log-scale y axis, one series per (system, mode), modes in EXH, CSD, PSI order.
    """
    if not result.rows:
        raise ValueError("cannot plot an empty sweep result")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    systems = []
    for row in result.rows:
        key = (row.nt, row.nr, row.S, row.P, row.M, row.rate)
        if key not in systems:
            systems.append(key)
    markers = {"EXH": "s", "CSD": "o", "PSI": "^"}
    styles = ["-", "--", ":", "-."]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for si, key in enumerate(systems):
        nt, nr, S, P, M, rate = key
        for mode in MODE_ORDER:
            rows = sorted((r for r in result.rows if (r.nt, r.nr, r.S, r.P, r.M, r.rate) == key
                           and r.mode == mode.label), key=lambda r: r.snr_db)
            if not rows:
                continue
            label = mode.label if len(systems) == 1 else \
                f"{mode.label} {nt}x{nr} S={S} P={P} {1 << M}-QAM"
            ax.plot([r.snr_db for r in rows], [r.avg_mults_per_precoded_metric for r in rows],
                    linestyle=styles[si % len(styles)], marker=markers[mode.label], label=label)
    ax.set_yscale("log")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Average real multiplications per precoded bit metric")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def emit_plot(result: SweepResult, path) -> Path:
    """Write :func:`plot_figure` as SVG (or PDF by suffix); identical input gives identical bytes."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    meta = {"CreationDate": None} if fmt == "pdf" else {"Date": None}
    with matplotlib.rc_context({"svg.hashsalt": "bicmbcp", "svg.fonttype": "path"}):
        fig = plot_figure(result)
        fig.savefig(path, format=fmt, metadata=meta)
        plt.close(fig)
    return path
