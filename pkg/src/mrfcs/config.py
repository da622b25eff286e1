"""Line-oriented experiment configuration.

Files hold `key = value` pairs under `[section]` headers; `#` starts a
comment. Values are parsed on demand with errors that cite the file line
they came from, and every setting is validated before any compute runs.
"""

from dataclasses import dataclass, field

from .csrecon import CsConfig

DEFAULT_TEXT = """\
[experiment]
rows = 64
cols = 64
frames = 300
seeds = 1 2 3 4 5
train_seed_offset = 700

[sequence]
variant = literal
eta_sigma = 5.0
seed = 1234
tr_jitter = 0.0

[phantom]
noise_t1 = 0 0
noise_t2 = 0 0
noise_b0 = 0 0

[dictionary]
preset = desk

[sampling]
strategy = conditional
rows_per_frame = 4
center_rows = 2
density_power = 4.0
epi_factor = 16

[cs]
alpha_wavelet = 1e-3
alpha_tv = 1e-3
smooth_mu = 1e-6
max_iters = 30
wavelet_order = 4
wavelet_levels = 4

[metric]
ridge_rel = 1.0

[pipeline]
methods = mrf csmrf_ml
outer_iters = 1
blip_iters = 16
blip_step = 1.0

[noise]
sigma = 0.0
"""


class ConfigError(ValueError):
    pass


@dataclass
class RawConfig:
    """Parsed key/value pairs with their source line numbers."""
    path: str
    values: dict  # (section, key) -> (string value, line number)

    def line_of(self, section, key):
        return self.values[(section, key)][1]

    def get(self, section, key, parse, default=None):
        if (section, key) not in self.values:
            if default is not None:
                return default
            raise ConfigError(f"{self.path}: missing [{section}] {key}")
        raw, line = self.values[(section, key)]
        try:
            return parse(raw)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"{self.path}:{line}: bad value for [{section}] {key}: {exc}") from exc

    def require(self, section, key, parse):
        return self.get(section, key, parse)


def parse_config_text(text, path="<config>") -> RawConfig:
    values = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if not section:
                raise ConfigError(f"{path}:{lineno}: empty section name")
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"{path}:{lineno}: setting outside any [section]")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[(section, key)] = (value, lineno)
    return RawConfig(path=path, values=values)


def load_config_file(path) -> RawConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), path=str(path))


def _floats(raw):
    return tuple(float(v) for v in raw.split())


def _ints(raw):
    return tuple(int(v) for v in raw.split())


def _interval(raw):
    vals = _floats(raw)
    if len(vals) != 2:
        raise ValueError("expected two numbers 'lo hi'")
    return vals


@dataclass(frozen=True)
class ExperimentConfig:
    rows: int = 64
    cols: int = 64
    frames: int = 300
    seeds: tuple = (1, 2, 3, 4, 5)
    train_seed_offset: int = 700

    sequence_variant: str = "literal"
    eta_sigma: float = 5.0
    sequence_seed: int = 1234
    tr_jitter: float = 0.0

    noise_t1: tuple = (0.0, 0.0)
    noise_t2: tuple = (0.0, 0.0)
    noise_b0: tuple = (0.0, 0.0)

    dictionary_preset: str = "desk"
    dict_t1: tuple = ()
    dict_t2: tuple = ()
    dict_b0: tuple = ()

    strategy: str = "conditional"
    rows_per_frame: int = 4
    center_rows: int = 2
    density_power: float = 4.0
    epi_factor: int = 16

    cs: CsConfig = field(default_factory=lambda: CsConfig(smooth_mu=1e-6))
    metric_ridge_rel: float = 1.0

    methods: tuple = ("mrf", "csmrf_ml")
    outer_iters: int = 1
    blip_iters: int = 16
    blip_step: float = 1.0

    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.rows < 8 or self.cols < 8:
            raise ConfigError("image sides must be >= 8")
        if self.frames < 1:
            raise ConfigError("frames must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed required")
        if self.strategy not in ("conditional", "independent", "epi", "full"):
            raise ConfigError(f"unknown sampling strategy {self.strategy!r}")
        if self.strategy == "conditional" and self.rows < 2 * self.rows_per_frame - self.center_rows:
            raise ConfigError("conditional sampling infeasible: rows < 2R - c")
        bad = [m for m in self.methods if m not in ("mrf", "csmrf", "csmrf_ml", "blip", "oracle")]
        if bad:
            raise ConfigError(f"unknown methods {bad}")
        if self.metric_ridge_rel < 0:
            raise ConfigError("metric ridge must be >= 0")
        if self.noise_sigma < 0:
            raise ConfigError("noise sigma must be >= 0")


def experiment_from_raw(raw: RawConfig) -> ExperimentConfig:
    base = ExperimentConfig()
    cs = CsConfig(
        alpha_wavelet=raw.get("cs", "alpha_wavelet", float, base.cs.alpha_wavelet),
        alpha_tv=raw.get("cs", "alpha_tv", float, base.cs.alpha_tv),
        smooth_mu=raw.get("cs", "smooth_mu", float, base.cs.smooth_mu),
        max_iters=raw.get("cs", "max_iters", int, base.cs.max_iters),
        grad_tol=raw.get("cs", "grad_tol", float, base.cs.grad_tol),
        initial_step=raw.get("cs", "initial_step", float, base.cs.initial_step),
        shrink=raw.get("cs", "shrink", float, base.cs.shrink),
        sufficient_decrease=raw.get("cs", "sufficient_decrease", float,
                                    base.cs.sufficient_decrease),
        max_backtracks=raw.get("cs", "max_backtracks", int, base.cs.max_backtracks),
        wavelet_order=raw.get("cs", "wavelet_order", int, base.cs.wavelet_order),
        wavelet_levels=raw.get("cs", "wavelet_levels", int, base.cs.wavelet_levels),
    )
    try:
        return ExperimentConfig(
            rows=raw.get("experiment", "rows", int, base.rows),
            cols=raw.get("experiment", "cols", int, base.cols),
            frames=raw.get("experiment", "frames", int, base.frames),
            seeds=raw.get("experiment", "seeds", _ints, base.seeds),
            train_seed_offset=raw.get("experiment", "train_seed_offset", int,
                                      base.train_seed_offset),
            sequence_variant=raw.get("sequence", "variant", str, base.sequence_variant),
            eta_sigma=raw.get("sequence", "eta_sigma", float, base.eta_sigma),
            sequence_seed=raw.get("sequence", "seed", int, base.sequence_seed),
            tr_jitter=raw.get("sequence", "tr_jitter", float, base.tr_jitter),
            noise_t1=raw.get("phantom", "noise_t1", _interval, base.noise_t1),
            noise_t2=raw.get("phantom", "noise_t2", _interval, base.noise_t2),
            noise_b0=raw.get("phantom", "noise_b0", _interval, base.noise_b0),
            dictionary_preset=raw.get("dictionary", "preset", str, base.dictionary_preset),
            dict_t1=raw.get("dictionary", "t1", _floats, base.dict_t1),
            dict_t2=raw.get("dictionary", "t2", _floats, base.dict_t2),
            dict_b0=raw.get("dictionary", "b0", _floats, base.dict_b0),
            strategy=raw.get("sampling", "strategy", str, base.strategy),
            rows_per_frame=raw.get("sampling", "rows_per_frame", int, base.rows_per_frame),
            center_rows=raw.get("sampling", "center_rows", int, base.center_rows),
            density_power=raw.get("sampling", "density_power", float, base.density_power),
            epi_factor=raw.get("sampling", "epi_factor", int, base.epi_factor),
            cs=cs,
            metric_ridge_rel=raw.get("metric", "ridge_rel", float, base.metric_ridge_rel),
            methods=raw.get("pipeline", "methods", lambda v: tuple(v.split()), base.methods),
            outer_iters=raw.get("pipeline", "outer_iters", int, base.outer_iters),
            blip_iters=raw.get("pipeline", "blip_iters", int, base.blip_iters),
            blip_step=raw.get("pipeline", "blip_step", float, base.blip_step),
            noise_sigma=raw.get("noise", "sigma", float, base.noise_sigma),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{raw.path}: {exc}") from exc


def load_experiment_config(path=None) -> ExperimentConfig:
    if path is None:
        return experiment_from_raw(parse_config_text(DEFAULT_TEXT, path="<defaults>"))
    return experiment_from_raw(load_config_file(path))
