"""Dataset and spectrum files: headerless CSV matrices plus key=value metadata."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import load_matrix_csv, save_matrix_csv
from .sampling import Dataset
from .subspace import SubspaceEstimate


def save_dataset(dataset: Dataset, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(out / "ys.csv", dataset.ys)
    if dataset.xs is not None:
        save_matrix_csv(out / "xs.csv", dataset.xs)
    if dataset.ws is not None:
        save_matrix_csv(out / "ws.csv", dataset.ws)
    meta = {"n": dataset.n, "m": dataset.m, "seed": dataset.seed}
    if dataset.spec is not None:
        meta.update(d=dataset.spec.d, h=dataset.spec.h, sigma=repr(dataset.spec.sigma),
                    signal_dist=dataset.spec.signal_dist, noise_dist=dataset.spec.noise_dist)
    (out / "meta.txt").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))
    return out


def read_meta(path) -> dict:
    meta = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def load_dataset(path) -> Dataset:
    """Load a directory written by :func:`save_dataset` or a bare ``ys`` CSV file."""
    path = Path(path)
    if path.is_file():
        return Dataset(ys=load_matrix_csv(path))
    ys = load_matrix_csv(path / "ys.csv")
    xs = load_matrix_csv(path / "xs.csv") if (path / "xs.csv").exists() else None
    ws = load_matrix_csv(path / "ws.csv") if (path / "ws.csv").exists() else None
    seed = None
    if (path / "meta.txt").exists():
        raw = read_meta(path / "meta.txt").get("seed")
        seed = int(raw) if raw not in (None, "None") else None
    return Dataset(ys=ys, xs=xs, ws=ws, seed=seed)


def spectrum_table(est: SubspaceEstimate) -> list:
    """Rows ``(index, eigenvalue, ratio to next, cut)`` with ``cut`` marking the last kept index."""
    w = est.eigenvalues
    eps = 1e-15 * float(np.sum(w))
    rows = []
    for i, value in enumerate(w):
        ratio = (value + eps) / (w[i + 1] + eps) if i + 1 < len(w) else float("nan")
        rows.append((i + 1, float(value), float(ratio), int(i + 1 == est.h_detected)))
    return rows


def spectrum_csv(est: SubspaceEstimate) -> str:
    lines = ["index,eigenvalue,ratio,cut"]
    lines += [f"{i},{v:.17g},{r:.17g},{c}" for i, v, r, c in spectrum_table(est)]
    return "\n".join(lines) + "\n"
