"""Run configuration and dispatch from a model name to its path generator."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from . import dlp, fbm, fim, output
from .core import DomainError, RngStream, TimeGrid, as_hurst
from .paths import Ensemble

MODELS = ("fbm", "fim", "dlp")
SCHEMES = {
    "fbm": ("circulant", "cholesky"),
    "fim": ("em", "exact"),
    "dlp": ("em",),
}
_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    model: str = "fim"
    h: float = 0.5
    t_max: float = 1.0
    steps: int = 1024
    paths: int = 100
    seed: int = 0
    scheme: str | None = None
    floor: float | None = None
    bootstrap: bool = True

    def __post_init__(self):
        as_hurst(self.h)
        if self.model not in MODELS:
            raise DomainError(f"unknown model {self.model!r}; expected one of {', '.join(MODELS)}")
        if self.scheme is None:
            object.__setattr__(self, "scheme", SCHEMES[self.model][0])
        if self.scheme not in SCHEMES[self.model]:
            raise DomainError(f"scheme {self.scheme!r} does not apply to model {self.model!r}; "
                              f"expected one of {', '.join(SCHEMES[self.model])}")
        if not self.t_max > 0:
            raise DomainError("t-max must be positive")
        if self.steps < 1:
            raise DomainError("steps must be at least 1")
        if self.paths < 1:
            raise DomainError("paths must be at least 1")
        if not 0 <= self.seed <= _U64_MAX:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.floor is not None and not self.floor >= 0:
            raise DomainError("floor must be non-negative")
        if self.scheme == "cholesky" and self.steps + 1 > fbm.CHOLESKY_CAP:
            raise DomainError(f"cholesky needs steps + 1 <= {fbm.CHOLESKY_CAP}")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.uniform(self.t_max, self.steps)

    def em_scheme(self) -> fim.EmScheme:
        return fim.EmScheme(self.t_max / self.steps, self.floor, self.bootstrap)

    def scheme_record(self) -> dict:
        rec = {"name": self.scheme, "dt": self.t_max / self.steps}
        if self.scheme == "em":
            rec["floor"] = self.em_scheme().floor_for(self.h)
            rec["bootstrap"] = self.bootstrap
        return rec


def simulate(cfg: RunConfig) -> Ensemble:
    grid = cfg.grid
    if cfg.model == "fbm":
        return fbm.simulate_fbm_ensemble(fbm.FbmParams(cfg.h), grid, cfg.paths, cfg.seed, method=cfg.scheme)
    if cfg.model == "fim":
        p = fim.FimParams(cfg.h)
        if cfg.scheme == "exact":
            return fim.simulate_fim_exact_ensemble(p, grid, cfg.paths, cfg.seed)
        return fim.simulate_fim_em_ensemble(p, cfg.em_scheme(), grid, cfg.paths, cfg.seed)
    return dlp.simulate_dlp_ensemble(dlp.DlpParams(cfg.h), cfg.em_scheme(), grid, cfg.paths, cfg.seed)


def metadata(cfg: RunConfig) -> dict:
    c = asdict(cfg)
    return output.metadata(cfg.model, cfg.h, cfg.seed, cfg.scheme_record(),
                           t_max=cfg.t_max, steps=cfg.steps, paths=cfg.paths, config=c,
                           stream_layout="path i uses stream id i")


def render(cfg: RunConfig, fmt: str = "csv"):
    """Simulate and serialize; returns ``(data_bytes, sidecar_bytes)``."""
    e = simulate(cfg)
    meta = metadata(cfg)
    if fmt == "csv":
        return output.ensemble_csv(e), output.json_bytes(meta)
    if fmt == "json":
        return output.ensemble_json(e, meta), output.json_bytes(meta)
    raise DomainError(f"unknown format {fmt!r}")


def stream_for(cfg: RunConfig, i: int) -> RngStream:
    """Stream that drives path ``i`` of ``simulate(cfg)``."""
    return RngStream(cfg.seed, i)
