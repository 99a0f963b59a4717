"""Monte-Carlo generator of ensemble logits.

Each sample draws a signal class ``c``; member ``m`` receives
``signal_scale * onehot(c_m) + member_noise * z`` with ``z`` standard normal.
In ``shared-class`` mode every member boosts ``c``; in ``per-member-class``
mode each member boosts its own independently drawn class, which makes the
members confident but in disagreement.

Scenario presets:

* ``id-confident``: strong shared signal, standing in for in-distribution data.
* ``ood-high-avh``: weak shared signal with small member noise, so average
  entropy is high while the members barely disagree.
* ``ood-confident-disagreement``: confident members that each pick a
  different class. This operationalizes the hypothesis that adversarially
  selected OOD data (ImageNet-O style) makes members individually confident
  and therefore diverse; it is a modelling choice, not an established result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Dict, Mapping

import numpy as np

from .core import InvalidInputError
from .rng import DOMAIN_SIMGEN, check_seed, derive_seed, stream
from .scores import EnsembleBatch

SHARED = "shared-class"
PER_MEMBER = "per-member-class"
CLASS_MODES = (SHARED, PER_MEMBER)

ID_SCENARIO = "id-confident"


@dataclass(frozen=True)
class SimConfig:
    K: int = 200
    M: int = 5
    n_samples: int = 10_000
    signal_scale: float = 8.0
    member_noise: float = 1.0
    class_mode: str = SHARED
    seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise InvalidInputError("K must be >= 2")
        if self.M < 1:
            raise InvalidInputError("M must be >= 1")
        if self.n_samples < 1:
            raise InvalidInputError("n_samples must be >= 1")
        if not (self.signal_scale >= 0 and np.isfinite(self.signal_scale)):
            raise InvalidInputError("signal_scale must be finite and >= 0")
        if not (self.member_noise >= 0 and np.isfinite(self.member_noise)):
            raise InvalidInputError("member_noise must be finite and >= 0")
        if self.class_mode not in CLASS_MODES:
            raise InvalidInputError(f"class_mode must be one of {CLASS_MODES}")
        try:
            check_seed(self.seed)
        except ValueError as exc:
            raise InvalidInputError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SimConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInputError(f"unknown SimConfig keys: {sorted(unknown)}")
        kw = dict(d)
        for k in ("K", "M", "n_samples", "seed"):
            if k in kw:
                kw[k] = int(kw[k])
        for k in ("signal_scale", "member_noise"):
            if k in kw:
                kw[k] = float(kw[k])
        return cls(**kw)


_PRESETS = {
    ID_SCENARIO: dict(signal_scale=8.0, member_noise=1.0, class_mode=SHARED),
    "ood-high-avh": dict(signal_scale=0.5, member_noise=0.5, class_mode=SHARED),
    "ood-confident-disagreement": dict(signal_scale=8.0, member_noise=1.0, class_mode=PER_MEMBER),
}
SCENARIOS = tuple(_PRESETS)


def make_scenario(name: str, n_samples: int = 10_000, seed: int = 0) -> SimConfig:
    """Preset config with K=200 classes and M=5 members."""
    try:
        params = _PRESETS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}") from None
    return SimConfig(K=200, M=5, n_samples=n_samples, seed=seed, **params)


def _sample_logits(config: SimConfig, index: int) -> "tuple[int, np.ndarray]":
    # fixed per-sample draw layout: signal class, member classes, noise
    g = stream(config.seed, DOMAIN_SIMGEN, index)
    c = int(g.integers(config.K))
    member_classes = g.integers(config.K, size=config.M)
    z = g.standard_normal((config.M, config.K))
    if config.member_noise == 0:
        logits = np.zeros_like(z)
    else:
        logits = config.member_noise * z
    if config.class_mode == SHARED:
        member_classes = np.full(config.M, c)
    logits[np.arange(config.M), member_classes] += config.signal_scale
    return c, logits


def _fill(config: SimConfig, out: np.ndarray, labels: np.ndarray, start: int, stop: int):
    for i in range(start, stop):
        labels[i], out[i] = _sample_logits(config, i)


def simulate_batch(config: SimConfig, threads: int = 1) -> EnsembleBatch:
    """Draw ``config.n_samples`` samples; output is independent of ``threads``."""
    n = config.n_samples
    out = np.empty((n, config.M, config.K), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    if threads <= 1:
        _fill(config, out, labels, 0, n)
    else:
        bounds = np.linspace(0, n, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_fill, config, out, labels, lo, hi)
                       for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
            for f in futures:
                f.result()
    sample_ids = [str(i) for i in range(n)]
    return EnsembleBatch.from_array(out, sample_ids, labels)


def simulate_experiment(id_config: SimConfig, ood_configs: Mapping[str, SimConfig],
                        seed: int, id_name: str = ID_SCENARIO,
                        threads: int = 1) -> Dict[str, EnsembleBatch]:
    """Simulate one ID population and several OOD ones with derived seeds.

    Dataset ``d`` (0 = ID, then OOD in order) uses seed
    ``derive_seed(seed, d)``, so populations never share random streams.
    Returns datasets in order, ID first.
    """
    if id_name in ood_configs:
        raise InvalidInputError(f"dataset name {id_name!r} used twice")
    configs = {id_name: id_config, **ood_configs}
    shapes = {(c.K, c.M) for c in configs.values()}
    if len(shapes) != 1:
        raise InvalidInputError("all populations must share K and M")
    return {
        name: simulate_batch(replace(cfg, seed=derive_seed(seed, d)), threads=threads)
        for d, (name, cfg) in enumerate(configs.items())
    }
