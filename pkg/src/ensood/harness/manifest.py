"""Experiment manifests.

A manifest is a JSON object::

    {
      "K": 200,
      "ensemble": ["member_0", "member_1", ...],
      "id_dataset": {"name": "imagenet-200", "files": ["id/m0.csv", ...], "n_samples": 10000},
      "ood_datasets": [
        {"name": "textures", "files": ["textures/m0.csv", ...]},
        ...
      ]
    }

``ensemble`` names the M members; every dataset lists exactly M logit CSVs,
in member order, relative to the manifest's directory. ``n_samples`` is
optional and checked when present.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from ..core import InvalidInputError, ToolkitError
from ..scores import EnsembleBatch
from .io import load_logits_csv


class ManifestError(ToolkitError):
    pass


@dataclass
class DatasetSpec:
    name: str
    files: List[str]
    n_samples: Optional[int] = None

    def to_dict(self) -> dict:
        d = {"name": self.name, "files": list(self.files)}
        if self.n_samples is not None:
            d["n_samples"] = self.n_samples
        return d


@dataclass
class Manifest:
    K: int
    ensemble: List[str]
    id_dataset: DatasetSpec
    ood_datasets: List[DatasetSpec]
    root: Path = Path(".")
    batches: Dict[str, EnsembleBatch] = field(default_factory=dict, repr=False)

    @property
    def M(self) -> int:
        return len(self.ensemble)

    @property
    def datasets(self) -> List[DatasetSpec]:
        return [self.id_dataset, *self.ood_datasets]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "ensemble": list(self.ensemble),
            "id_dataset": self.id_dataset.to_dict(),
            "ood_datasets": [d.to_dict() for d in self.ood_datasets],
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def load_batches(self) -> Dict[str, EnsembleBatch]:
        for ds in self.datasets:
            if ds.name not in self.batches:
                self.batches[ds.name] = _load_dataset(self, ds)
        return self.batches


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ManifestError(f"{where}: missing key {key!r}")
    return d[key]


def _dataset_spec(d: dict, where: str) -> DatasetSpec:
    name = _require(d, "name", where)
    files = _require(d, "files", where)
    if not isinstance(name, str) or not name:
        raise ManifestError(f"{where}: 'name' must be a non-empty string")
    if not isinstance(files, list) or not all(isinstance(f, str) for f in files):
        raise ManifestError(f"{where}: 'files' must be a list of paths")
    n = d.get("n_samples")
    if n is not None and (not isinstance(n, int) or n < 1):
        raise ManifestError(f"{where}: 'n_samples' must be a positive integer")
    return DatasetSpec(name, files, n)


def _load_dataset(manifest: Manifest, ds: DatasetSpec) -> EnsembleBatch:
    members = []
    for f in ds.files:
        m = load_logits_csv(manifest.root / f)
        if m.n_classes != manifest.K:
            raise ManifestError(f"dataset {ds.name!r}: {f} has K={m.n_classes}, manifest says K={manifest.K}")
        members.append(m)
    try:
        batch = EnsembleBatch(members)
    except InvalidInputError as exc:
        raise ManifestError(f"dataset {ds.name!r}: {exc}") from None
    if ds.n_samples is not None and batch.n_samples != ds.n_samples:
        raise ManifestError(f"dataset {ds.name!r}: {batch.n_samples} samples, manifest says {ds.n_samples}")
    return batch


def parse_manifest(data: dict, root=".") -> Manifest:
    """Validate the manifest structure without touching the logit files."""
    K = _require(data, "K", "manifest")
    if not isinstance(K, int) or K < 2:
        raise ManifestError("manifest: 'K' must be an integer >= 2")
    ensemble = _require(data, "ensemble", "manifest")
    if not isinstance(ensemble, list) or not ensemble:
        raise ManifestError("manifest: 'ensemble' must list at least one member")
    id_ds = _dataset_spec(_require(data, "id_dataset", "manifest"), "id_dataset")
    ood_raw = _require(data, "ood_datasets", "manifest")
    if not isinstance(ood_raw, list) or not ood_raw:
        raise ManifestError("manifest: 'ood_datasets' must list at least one dataset")
    oods = [_dataset_spec(d, f"ood_datasets[{i}]") for i, d in enumerate(ood_raw)]
    names = [d.name for d in [id_ds, *oods]]
    if len(set(names)) != len(names):
        raise ManifestError("manifest: dataset names must be unique")
    M = len(ensemble)
    for ds in [id_ds, *oods]:
        if len(ds.files) != M:
            raise ManifestError(
                f"dataset {ds.name!r}: {len(ds.files)} files for an ensemble of {M} members")
    return Manifest(K, [str(e) for e in ensemble], id_ds, oods, Path(root))


def load_manifest(path, load: bool = True) -> Manifest:
    """Read, validate and (by default) load every referenced logit file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from None
    manifest = parse_manifest(data, path.parent)
    if load:
        manifest.load_batches()
    return manifest
