"""End-to-end experiments: ensemble -> channels -> (noise, tomography) -> CSR statistics."""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import io
from .bootstrap import BootstrapReport, aggregate, mean_r, run_bootstrap
from .channels import (
    StateError,
    assign_sectors,
    diagonalize,
    extract_kraus,
    steady_state_sector,
    to_superoperator,
)
from .circuits import assemble_unitary, build_chaotic_circuit, build_ff_circuit, compile_to_cz
from .ensembles import build_ff_unitary, derive_seeds, sample_cue, sample_ginue, sample_poisson_spectrum
from .linalg import MAX_DENSE_DIM, CapacityError, NumericError
from .noise import NoiseModel, noisy_superoperator, twirled_average_superoperator
from .stats import (
    CHANNEL_CONJUGATE_PAIRS,
    CHANNEL_REAL_AXIS_CUT,
    CsrHistogram,
    CsrSample,
    CsrSummary,
    Marginals,
    StatisticsError,
    compute_csr,
    histogram,
    marginals,
    summarize,
)
from .tomography import FitConfig, SpamModel, fit, generate_spam_dataset, generate_synthetic_dataset, sample_modes

log = logging.getLogger(__name__)

FAMILIES = ("ff", "chaotic", "cue", "ginue", "poisson")
CHANNEL_FAMILIES = ("ff", "chaotic", "cue")
SECTORS = ("all", "steady_state")
DEFAULT_DIM = {"ginue": 1024, "poisson": 4096}
MAX_QUBITS = 10


class ConfigError(ValueError):
    """Invalid experiment configuration; ``problems`` maps key paths to messages."""

    def __init__(self, problems: dict[str, str]):
        self.problems = dict(problems)
        super().__init__("invalid config: " + "; ".join(f"{k}: {v}" for k, v in self.problems.items()))


@dataclass
class NoiseConfig:
    enabled: bool = False
    e_p_1q: float = 0.00029
    e_p_2q: float = 0.002
    twirl_m: int = 0
    seed: int | None = None
    compile_cz: bool = False
    cz_coherent: float = 0.0

    def model(self, seed=None) -> NoiseModel:
        return NoiseModel(self.e_p_1q, self.e_p_2q, seed, self.cz_coherent)


@dataclass
class TomographyConfig:
    enabled: bool = False
    N_p: int = 3704
    N_s: int | None = 12000  # None: exact probabilities
    iterations: int = 4000
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    joint: bool = False
    rank: int | None = None
    spam_p1: float = 0.05
    spam_p2: float = 0.05
    bootstrap: int = 0  # N_B; 0 disables

    def fit_config(self, seed=None) -> FitConfig:
        return FitConfig(self.iterations, self.learning_rate, seed, self.optimizer, self.rank, joint=self.joint)


@dataclass
class StatisticsConfig:
    real_axis_cut: float | None = None  # None: 0.01 for channels, 0 otherwise
    conjugate_pairs: str | None = None  # None: "upper" for channels, "both" otherwise
    degeneracy_cut: float = 1e-12
    bins: int = 51
    smear_sigma: float = 0.05
    cap: float | None = 0.6
    radial_bins: int = 20
    angular_bins: int = 20


@dataclass
class ExperimentConfig:
    family: str = "cue"
    n: int = 4
    e: int = 1
    T: int | None = None
    size: int = 2000
    dim: int | None = None  # matrix size / point count for ginue and poisson
    project_u1: bool = True
    sector: str = "all"
    seed: int = 0
    output: str | None = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    tomography: TomographyConfig = field(default_factory=TomographyConfig)
    statistics: StatisticsConfig = field(default_factory=StatisticsConfig)

    @property
    def is_channel(self) -> bool:
        return self.family in CHANNEL_FAMILIES

    @property
    def is_circuit(self) -> bool:
        return self.family in ("ff", "chaotic") and self.T is not None

    @property
    def num_qubits(self) -> int:
        return self.n + self.e

    @property
    def spectrum_dim(self) -> int:
        return self.dim if self.dim is not None else DEFAULT_DIM.get(self.family, 0)

    def csr_options(self) -> dict:
        s = self.statistics
        cut = s.real_axis_cut
        pairs = s.conjugate_pairs
        if cut is None:
            cut = CHANNEL_REAL_AXIS_CUT if self.is_channel else 0.0
        if pairs is None:
            pairs = CHANNEL_CONJUGATE_PAIRS if self.is_channel else "both"
        return {"real_axis_cut": cut, "degeneracy_cut": s.degeneracy_cut, "conjugate_pairs": pairs}

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, doc: dict | None) -> "ExperimentConfig":
        cfg = _build(cls, doc or {}, "")
        cfg.validate()
        return cfg

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError({"<document>": f"not valid YAML ({exc})"}) from None
        if doc is not None and not isinstance(doc, dict):
            raise ConfigError({"<document>": "top level must be a mapping"})
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def replace(self, **changes) -> "ExperimentConfig":
        """Copy with dotted-key overrides, e.g. ``replace(**{"noise.e_p_2q": 0.01})``."""
        doc = self.to_dict()
        for key, value in changes.items():
            node = doc
            *path, last = key.split(".")
            for p in path:
                node = node.setdefault(p, {})
            node[last] = value
        return ExperimentConfig.from_dict(doc)

    def validate(self) -> None:
        p: dict[str, str] = {}
        if self.family not in FAMILIES:
            p["family"] = f"must be one of {', '.join(FAMILIES)}"
        if self.size < 1:
            p["size"] = "must be >= 1"
        if self.sector not in SECTORS:
            p["sector"] = f"must be one of {', '.join(SECTORS)}"
        if self.family in CHANNEL_FAMILIES:
            if self.n < 1:
                p["n"] = "must be >= 1"
            if self.e < 0:
                p["e"] = "must be >= 0"
            if self.n + self.e > MAX_QUBITS or 4**self.n > MAX_DENSE_DIM:
                p["n"] = f"n + e must be <= {MAX_QUBITS} and 4^n <= {MAX_DENSE_DIM}"
            if self.num_qubits < 2:
                p["e"] = "need n + e >= 2 qubits"
        if self.family == "chaotic" and self.T is None:
            p["T"] = "chaotic family is circuit based and needs a depth"
        if self.family in ("cue", "ginue", "poisson") and self.T is not None:
            p["T"] = f"family {self.family} has no depth"
        if self.T is not None and self.T < 1:
            p["T"] = "must be >= 1"
        if self.family in ("ginue", "poisson") and self.spectrum_dim < 3:
            p["dim"] = "need at least 3 eigenvalues"
        if self.family == "ginue" and self.spectrum_dim > MAX_DENSE_DIM:
            p["dim"] = f"must be <= {MAX_DENSE_DIM}"
        if self.sector == "steady_state" and self.family != "ff":
            p["sector"] = "steady_state needs the U(1)-symmetric ff family"
        nz = self.noise
        # the depth may be supplied later (crossover scans); run() insists on it
        if nz.enabled and self.family not in ("ff", "chaotic"):
            p["noise.enabled"] = "noise needs a circuit family (ff or chaotic)"
        for k in ("e_p_1q", "e_p_2q"):
            if not 0 <= getattr(nz, k) < 1:
                p[f"noise.{k}"] = "must be in [0, 1)"
        if nz.twirl_m < 0:
            p["noise.twirl_m"] = "must be >= 0"
        tm = self.tomography
        if tm.enabled:
            if not self.is_circuit:
                p["tomography.enabled"] = "tomography needs a circuit family (ff or chaotic with T)"
            if not 1 <= tm.N_p <= 18**self.n:
                p["tomography.N_p"] = f"must be in [1, {18**self.n}]"
            if tm.N_s is not None and tm.N_s < 1:
                p["tomography.N_s"] = "must be >= 1 or null"
            if tm.bootstrap == 1 or tm.bootstrap < 0:
                p["tomography.bootstrap"] = "must be 0 (off) or >= 2"
            if tm.bootstrap and tm.N_s is None:
                p["tomography.bootstrap"] = "bootstrap needs finite shots (N_s)"
            if tm.optimizer not in ("adam", "gd"):
                p["tomography.optimizer"] = "must be adam or gd"
            if tm.iterations < 1:
                p["tomography.iterations"] = "must be >= 1"
            if tm.learning_rate <= 0:
                p["tomography.learning_rate"] = "must be > 0"
        st = self.statistics
        if st.conjugate_pairs not in (None, "both", "upper"):
            p["statistics.conjugate_pairs"] = "must be both or upper"
        if st.bins < 2:
            p["statistics.bins"] = "must be >= 2"
        if st.smear_sigma < 0:
            p["statistics.smear_sigma"] = "must be >= 0"
        if p:
            raise ConfigError(p)


_TYPES = {int: (int,), float: (int, float), bool: (bool,), str: (str,)}


def _build(cls, doc: dict, prefix: str):
    if not isinstance(doc, dict):
        raise ConfigError({prefix.rstrip(".") or "<document>": "must be a mapping"})
    fields = {f.name: f for f in dataclasses.fields(cls)}
    problems = {}
    kwargs = {}
    for key, value in doc.items():
        path = prefix + str(key)
        if key not in fields:
            problems[path] = "unknown key"
            continue
        default = fields[key].default_factory() if fields[key].default_factory is not dataclasses.MISSING else fields[key].default
        if dataclasses.is_dataclass(default):
            try:
                kwargs[key] = _build(type(default), value or {}, path + ".")
            except ConfigError as exc:
                problems.update(exc.problems)
            continue
        err = _check_type(fields[key].type, value)
        if err:
            problems[path] = err
        else:
            kwargs[key] = float(value) if fields[key].type.startswith("float") and value is not None else value
    if problems:
        raise ConfigError(problems)
    return cls(**kwargs)


def _check_type(annotation: str, value) -> str | None:
    optional = "None" in annotation
    if value is None:
        return None if optional else "must not be null"
    base = annotation.split("|")[0].strip()
    allowed = _TYPES[{"int": int, "float": float, "bool": bool, "str": str}[base]]
    if isinstance(value, bool) and base != "bool":
        return f"expected {base}, got bool"
    if not isinstance(value, allowed):
        return f"expected {base}, got {type(value).__name__}"
    return None


@dataclass
class MemberResult:
    index: int
    seed: int
    spectrum: object  # SpectrumData or ndarray of eigenvalues
    csr: CsrSample
    # relative path -> JSON document or array (loss traces), written by the run owner
    fit_files: dict = field(default_factory=dict)
    bootstrap: object = None


@dataclass
class RunResult:
    config: ExperimentConfig
    summary: CsrSummary
    csr: CsrSample
    histogram: CsrHistogram
    marginals: Marginals
    member_seeds: list[int]
    failures: dict[int, str]
    output: Path | None = None
    bootstrap: BootstrapReport | None = None


def _member_superoperator(cfg: ExperimentConfig, seed: int) -> tuple[np.ndarray, object]:
    """Superoperator of one ensemble member and the circuit it came from (or None)."""
    L, n, e = cfg.num_qubits, cfg.n, cfg.e
    build_seed, noise_seed = (int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(2))
    if cfg.family == "cue":
        return to_superoperator(extract_kraus(sample_cue(2**L, build_seed), n, e)), None
    if cfg.family == "ff" and cfg.T is None:
        u = build_ff_unitary(L, build_seed, cfg.project_u1)
        return to_superoperator(extract_kraus(u, n, e)), None
    builder = build_ff_circuit if cfg.family == "ff" else build_chaotic_circuit
    circuit = builder(L, cfg.T, build_seed)
    if not cfg.noise.enabled:
        return to_superoperator(extract_kraus(assemble_unitary(circuit), n, e)), circuit
    model = cfg.noise.model(noise_seed)
    if cfg.noise.twirl_m > 0:
        return twirled_average_superoperator(circuit, model, n, e, cfg.noise.twirl_m, noise_seed), circuit
    if cfg.noise.compile_cz:
        circuit = compile_to_cz(circuit)
    return noisy_superoperator(circuit, n, e, model), circuit


def _tomography(cfg: ExperimentConfig, lam: np.ndarray, seed: int, index: int):
    tm = cfg.tomography
    n = cfg.n
    s_spam, s_modes, s_data, s_sdata, s_fit, s_boot = (
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(6)
    )
    truth = SpamModel.synthetic(2**n, tm.spam_p1, tm.spam_p2, s_spam)
    modes = sample_modes(n, tm.N_p, s_modes)
    data = generate_synthetic_dataset(lam, truth, modes, tm.N_s, s_data)
    spam_data = generate_spam_dataset(truth, n, tm.N_s, s_sdata)
    res = fit(data, spam_data, tm.fit_config(s_fit))
    boot = None
    if tm.bootstrap:
        boot = run_bootstrap(data, spam_data, "mean_r", tm.bootstrap, tm.fit_config(), s_boot)
        boot.estimate = mean_r(res.channel)
    # written later by the run's single output owner
    prefix = f"tomography/member_{index:05d}/"
    report = {
        "final_loss": res.final_loss,
        "iterations": len(res.loss_trace),
        "channel_file": "channel.json",
        "spam_file": "spam.json",
        "loss_trace_csv": "loss_trace.csv",
    }
    files = {
        prefix + "dataset.json": data.to_dict(),
        prefix + "spam_dataset.json": spam_data.to_dict(),
        prefix + "channel.json": io.channel_to_dict(res.channel),
        prefix + "spam.json": _spam_dict(res.spam),
        prefix + "loss_trace.csv": np.asarray(res.loss_trace),
        prefix + "fit_report.json": report,
    }
    return to_superoperator(res.channel), files, boot


def _spam_dict(spam: SpamModel) -> dict:
    rho = spam.rho0
    return {"rho0_re": rho.real.tolist(), "rho0_im": rho.imag.tolist(), "corruption": spam.corruption.tolist()}


def _member(cfg: ExperimentConfig, index: int, seed: int) -> MemberResult:
    if cfg.family == "ginue":
        ev = np.linalg.eigvals(sample_ginue(cfg.spectrum_dim, seed))
        return MemberResult(index, seed, ev, compute_csr(ev, **cfg.csr_options()))
    if cfg.family == "poisson":
        ev = sample_poisson_spectrum(cfg.spectrum_dim, seed)
        return MemberResult(index, seed, ev, compute_csr(ev, **cfg.csr_options()))
    lam, _ = _member_superoperator(cfg, seed)
    files, boot = {}, None
    if cfg.tomography.enabled:
        tomo_seed = int(np.random.SeedSequence([seed, 1]).generate_state(1)[0])
        lam, files, boot = _tomography(cfg, lam, tomo_seed, index)
    if cfg.sector == "steady_state":
        spectrum = diagonalize(lam, want_vectors=True)
        ev = steady_state_sector(assign_sectors(spectrum, cfg.n), spectrum)
        return MemberResult(index, seed, spectrum, compute_csr(ev, **cfg.csr_options()), files, boot)
    ev = np.linalg.eigvals(lam)
    return MemberResult(index, seed, ev, compute_csr(ev, **cfg.csr_options()), files, boot)


MEMBER_ERRORS = (NumericError, StatisticsError, StateError, np.linalg.LinAlgError)


def _member_task(args) -> tuple[int, MemberResult | None, str | None]:
    cfg, index, seed = args
    try:
        return index, _member(cfg, index, seed), None
    except MEMBER_ERRORS as exc:
        return index, None, f"{type(exc).__name__}: {exc}"


def run(config: ExperimentConfig, output=None, workers: int = 1) -> RunResult:
    """Run an ensemble experiment; writes artifacts when an output directory is given.

    Members are independent; with ``workers > 1`` they are computed in a process
    pool and this process alone writes the outputs, so results do not depend on
    the worker count.
    """
    config.validate()
    if config.noise.enabled and config.T is None:
        raise ConfigError({"T": "noise needs a circuit depth"})
    out = output if output is not None else config.output
    outdir = Path(out) if out else None
    seeds = derive_seeds(config.seed, config.size)
    tasks = [(config, i, s) for i, s in enumerate(seeds)]
    members: list[MemberResult] = []
    failures: dict[int, str] = {}
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(_member_task, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
            outcomes = list(results)
    else:
        outcomes = map(_member_task, tasks)
    for i, member, err in outcomes:
        if member is None:
            log.warning("member %d failed: %s", i, err)
            failures[i] = err
        else:
            members.append(member)
        if (i + 1) % 100 == 0:
            log.info("%d/%d members done", i + 1, config.size)
    if not members:
        raise StatisticsError("every ensemble member failed")
    csr = CsrSample.concatenate(m.csr for m in members)
    st = config.statistics
    summ = summarize(csr)
    hist = histogram(csr, st.bins, st.smear_sigma, st.cap)
    marg = marginals(csr, st.radial_bins, st.angular_bins)
    boot = None
    ens = [m.bootstrap for m in members if m.bootstrap is not None]
    if ens:
        boot = aggregate(ens)
    result = RunResult(config, summ, csr, hist, marg, seeds, failures, outdir, boot)
    if outdir is not None:
        _write_run(result, members)
    return result


def _write_run(result: RunResult, members: list[MemberResult]) -> None:
    from . import __version__

    cfg = result.config
    outdir = result.output
    outdir.mkdir(parents=True, exist_ok=True)
    spectra = []
    for m in members:
        name = f"spectra/member_{m.index:05d}.csv"
        io.save_spectrum(outdir / name, m.spectrum)
        spectra.append(name)
        for rel, doc in m.fit_files.items():
            if rel.endswith(".csv"):
                io.save_trace(outdir / rel, doc)
            else:
                io.write_json(outdir / rel, doc)
    io.save_histogram(result.histogram, outdir / "csr_histogram.csv", outdir / "csr_histogram.json")
    io.save_marginals(result.marginals, outdir / "marginal_r.csv", outdir / "marginal_theta.csv")
    io.save_summary(result.summary, outdir / "summary.json")
    files = ["summary.json", "csr_histogram.csv", "csr_histogram.json", "marginal_r.csv", "marginal_theta.csv"]
    files += [rel for m in members for rel in m.fit_files]
    if result.bootstrap is not None:
        io.write_json(outdir / "bootstrap.json", result.bootstrap.to_dict())
        files.append("bootstrap.json")
    if result.failures:
        lines = [f"{i}\t{msg}" for i, msg in sorted(result.failures.items())]
        (outdir / "failures.log").write_text("\n".join(lines) + "\n")
        files.append("failures.log")
    manifest = {
        "family": cfg.family,
        "L": cfg.num_qubits if cfg.is_channel else None,
        "size": cfg.size,
        "master_seed": cfg.seed,
        "code_version": __version__,
        "config": cfg.to_dict(),
        "member_seeds": result.member_seeds,
        "failures": {str(k): v for k, v in sorted(result.failures.items())},
        "spectra": spectra,
        "files": files,
        "csr_exclusions": {
            "real_axis": result.csr.excluded_real,
            "degenerate": result.csr.excluded_degenerate,
            "conjugate": result.csr.excluded_conjugate,
        },
    }
    io.write_json(outdir / "manifest.json", manifest)


@dataclass
class CrossoverRow:
    T: int
    summary: CsrSummary

    def to_dict(self) -> dict:
        return {"T": self.T, **self.summary.to_dict()}


def crossover_scan(config: ExperimentConfig, depths, output=None, workers: int = 1) -> list[CrossoverRow]:
    """CSR summary of noisy free-fermion circuit channels at each depth, all sectors pooled."""
    depths = [int(t) for t in depths]
    if not depths:
        raise ValueError("depth list is empty")
    if config.family != "ff":
        raise ConfigError({"family": "crossover scans need the ff family"})
    if not config.noise.enabled:
        raise ConfigError({"noise.enabled": "crossover scans need noise enabled"})
    rows = []
    for t in depths:
        cfg = config.replace(T=t, sector="all", output=None, seed=derive_seeds([config.seed, t], 1)[0])
        res = run(cfg, workers=workers)
        log.info("T=%d: <r>=%.4f +- %.4f", t, res.summary.mean_r, res.summary.stderr_r)
        rows.append(CrossoverRow(t, res.summary))
    out = output if output is not None else config.output
    if out:
        table = [r.to_dict() for r in rows]
        io.write_json(Path(out) / "crossover.json", {"config": config.to_dict(), "depths": depths, "rows": table})
        keys = ["T", "mean_r", "mean_minus_cos_theta", "stderr_r", "stderr_ct", "n"]
        io._write_rows(Path(out) / "crossover.csv", keys, [[r[k] for k in keys] for r in table])
    return rows


def check_capacity(n: int, e: int) -> None:
    if n < 1 or e < 0:
        raise ValueError(f"need n >= 1 and e >= 0, got n={n}, e={e}")
    if n + e > MAX_QUBITS or 4**n > MAX_DENSE_DIM:
        raise CapacityError(f"n={n}, e={e} exceeds dense limits (n + e <= {MAX_QUBITS}, 4^n <= {MAX_DENSE_DIM})")


def finite_size_scan(
    n_list, e_list, size: int, seed=0, statistics: StatisticsConfig | None = None, output=None, workers: int = 1
) -> dict:
    """Steady-state CSR histograms of Haar free-fermion channels on an (n, e) grid."""
    pairs = [(int(n), int(e)) for n in n_list for e in e_list]
    if not pairs:
        raise ValueError("empty (n, e) grid")
    for n, e in pairs:
        check_capacity(n, e)
    st = statistics or StatisticsConfig()
    grid = {}
    for n, e in pairs:
        cfg = ExperimentConfig(
            family="ff", n=n, e=e, size=size, sector="steady_state",
            seed=derive_seeds([seed, n, e], 1)[0], statistics=st,
        )
        res = run(cfg, workers=workers)
        grid[(n, e)] = res
        if output:
            d = Path(output) / f"n{n}_e{e}"
            io.save_histogram(res.histogram, d / "csr_histogram.csv", d / "csr_histogram.json")
            io.save_summary(res.summary, d / "summary.json")
    if output:
        io.write_json(
            Path(output) / "finite_size.json",
            {
                "size": size,
                "seed": seed,
                "grid": [{"n": n, "e": e, **grid[(n, e)].summary.to_dict()} for n, e in pairs],
            },
        )
    return grid
