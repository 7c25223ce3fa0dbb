"""File formats for circuits, channels, spectra, histograms and summaries.

Floats are written with ``repr`` (shortest round-trip decimal) so exports
are byte-identical across runs with the same inputs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .channels import QuantumChannel, SpectrumData
from .circuits import Circuit
from .stats import CsrHistogram, CsrSummary, Marginals

MIXED_LABEL = "mixed"


def _num(x) -> str:
    return repr(float(x))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def save_circuit(circuit: Circuit, path) -> Path:
    return write_json(path, circuit.to_dict())


def load_circuit(path) -> Circuit:
    return Circuit.from_dict(read_json(path))


def channel_to_dict(channel: QuantumChannel) -> dict:
    """Kraus matrices as rows of interleaved (re, im) pairs."""
    kraus = []
    for k in channel.kraus:
        pairs = np.stack([k.real, k.imag], axis=-1).reshape(k.shape[0], -1)
        kraus.append(pairs.tolist())
    return {"n": channel.n, "e": channel.e, "kraus": kraus}


def channel_from_dict(doc: dict) -> QuantumChannel:
    k = np.asarray(doc["kraus"], dtype=float)
    kraus = k[..., 0::2] + 1j * k[..., 1::2]
    return QuantumChannel(int(doc["n"]), int(doc.get("e", 0)), kraus)


def save_channel(channel: QuantumChannel, path) -> Path:
    return write_json(path, channel_to_dict(channel))


def load_channel(path) -> QuantumChannel:
    return channel_from_dict(read_json(path))


def save_spectrum(path, spectrum) -> Path:
    """CSV rows (re, im, sector_label, q_expectation); label/q columns empty when unknown."""
    if isinstance(spectrum, SpectrumData):
        ev, labels, q = spectrum.eigenvalues, spectrum.sector_labels, spectrum.q_expectation
    else:
        ev, labels, q = np.asarray(spectrum), None, None
    rows = []
    for i, lam in enumerate(ev):
        lab = ""
        if labels is not None:
            lab = MIXED_LABEL if labels[i] == np.iinfo(np.int64).min else str(int(labels[i]))
        qe = "" if q is None else _num(np.real(q[i]))
        rows.append([_num(lam.real), _num(lam.imag), lab, qe])
    return _write_rows(path, ["re", "im", "sector_label", "q_expectation"], rows)


def load_spectrum(path) -> np.ndarray:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "re" not in rows[0] or "im" not in rows[0]:
        raise ValueError(f"{path}: expected CSV with 're' and 'im' columns")
    return np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])


def save_histogram(hist: CsrHistogram, csv_path, json_path=None) -> None:
    c = hist.centers
    rows = [[_num(c[i]), _num(c[j]), _num(hist.density[i, j])] for i in range(len(c)) for j in range(len(c))]
    _write_rows(csv_path, ["bin_x", "bin_y", "density"], rows)
    if json_path is not None:
        write_json(
            json_path,
            {
                "edges": hist.edges.tolist(),
                "density": hist.density.tolist(),
                "smear_sigma": hist.smear_sigma,
                "cap": hist.cap,
                "count": hist.count,
            },
        )


def save_marginals(m: Marginals, r_path, theta_path) -> None:
    _write_rows(r_path, ["bin_center", "density"], [[_num(a), _num(b)] for a, b in zip(m.r_centers, m.p_r)])
    _write_rows(theta_path, ["bin_center", "density"], [[_num(a), _num(b)] for a, b in zip(m.theta_centers, m.p_theta)])


def save_summary(summary: CsrSummary, path) -> Path:
    return write_json(path, summary.to_dict())


def save_trace(path, trace) -> Path:
    return _write_rows(path, ["iteration", "loss"], [[i, _num(v)] for i, v in enumerate(trace)])
