"""Run configuration: one flat `key = value` file covering every stage.

Unknown keys are rejected so typos fail loud instead of silently using a
default. Booleans accept true/false (any case), tuples are comma lists.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ParseError, ValidationError
from .modularity import ModularityParams
from .refine import RefineConfig
from .sgns import SgnsConfig
from .walks import WalkConfig


@dataclass
class RunConfig:
    # supra construction
    theta: float = 0.1
    # walks
    walks_per_node: int = 10
    walk_length: int = 40
    # embedding
    dim: int = 128
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr_initial: float = 0.025
    lr_final: float = 0.0001
    noise_exponent: float = 0.75
    batch_size: int = 512
    workers: int = 1
    # refinement
    num_communities: int = 2
    boost: float = 0.25
    moves_per_iter: int = 0
    max_outer_iters: int = 100
    assignment_change_tol: float = 0.001
    inner_epochs: int = 15
    refine_lr: float = 0.001
    pretrain_epochs: int = 500
    pretrain_lr: float = 0.05
    pretrain_batch: int = 32
    hidden: tuple[int, ...] = (256, 64, 256)
    # modularity
    gamma: float = 1.0
    sigma: float = 1.0
    couple_all: bool = True
    # evaluation
    nc_folds: int = 3
    lp_folds: int = 5
    cd_k_list: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
    # shared
    seed: int = 42

    def walk_config(self) -> WalkConfig:
        return WalkConfig(self.walks_per_node, self.walk_length, self.seed)

    def sgns_config(self) -> SgnsConfig:
        return SgnsConfig(
            dim=self.dim,
            window=self.window,
            negatives=self.negatives,
            epochs=self.epochs,
            lr_initial=self.lr_initial,
            lr_final=self.lr_final,
            noise_exponent=self.noise_exponent,
            seed=self.seed,
            batch_size=self.batch_size,
            workers=self.workers,
        )

    def refine_config(self) -> RefineConfig:
        return RefineConfig(
            num_communities=self.num_communities,
            boost=self.boost,
            moves_per_iter=self.moves_per_iter,
            max_outer_iters=self.max_outer_iters,
            assignment_change_tol=self.assignment_change_tol,
            inner_epochs=self.inner_epochs,
            refine_lr=self.refine_lr,
            pretrain_epochs=self.pretrain_epochs,
            pretrain_lr=self.pretrain_lr,
            pretrain_batch=self.pretrain_batch,
            hidden=self.hidden,
            gamma=self.gamma,
            sigma=self.sigma,
            couple_all=self.couple_all,
            seed=self.seed,
        )

    def modularity_params(self) -> ModularityParams:
        return ModularityParams(self.gamma, self.sigma, self.couple_all)

    def validate(self) -> None:
        if not 0.0 <= self.theta <= 1.0:
            raise ValidationError("theta must lie in [0, 1]")
        self.walk_config().validate()
        self.sgns_config().validate()
        self.refine_config().validate()
        if self.nc_folds < 2 or self.lp_folds < 2:
            raise ValidationError("cross-validation needs at least 2 folds")
        if any(k < 1 for k in self.cd_k_list):
            raise ValidationError("community counts must be positive")


def _parse_value(name: str, kind, raw: str, path: str, lineno: int):
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered not in ("true", "false"):
                raise ValueError(raw)
            return lowered == "true"
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple or str(kind).startswith("tuple"):
            return tuple(int(part.strip()) for part in raw.split(",") if part.strip())
        return raw
    except ValueError as exc:
        raise ParseError(path, lineno, f"bad value for {name}: {raw!r}") from exc


def load_config(path) -> RunConfig:
    field_types = {f.name: f.type for f in fields(RunConfig)}
    kinds = {}
    for name, tp in field_types.items():
        if tp in ("int", int):
            kinds[name] = int
        elif tp in ("float", float):
            kinds[name] = float
        elif tp in ("bool", bool):
            kinds[name] = bool
        else:
            kinds[name] = tuple
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(path, lineno, f"expected `key = value`, got {text!r}")
            key, _, raw = text.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in kinds:
                raise ParseError(path, lineno, f"unknown key {key!r}")
            values[key] = _parse_value(key, kinds[key], raw, str(path), lineno)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for f in fields(RunConfig):
            value = getattr(cfg, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            fh.write(f"{f.name} = {value}\n")
