"""Flat key=value pipeline configuration.

The config file format is deliberately strict: one ``key = value`` pair per
line, ``#`` comments, and unknown keys are errors so a mistyped weight name
cannot silently fall back to a default.
"""

from dataclasses import dataclass, fields

from .exceptions import ConfigError
from .composition import BlendConfig
from .register import RegistrationConfig
from .seam import SeamWeights


@dataclass
class PipelineConfig:
    # registration
    tol_energy: float = 1e-6
    max_iters: int = 100
    gate_radius_fraction: float = 0.25
    allow_projective: bool = True
    # seam
    lambda_color: float = 1.0
    lambda_grad: float = 1.0
    lambda_feat: float = 0.5
    seam_axis: str = "vertical"
    feature_source: str = "builtin"
    # blend
    blend_k: float = 0.5
    blend_band: float = 32.0
    # ordering
    exact_order: bool = False
    reference_override: int | None = None

    def registration(self):
        return RegistrationConfig(
            tol_energy=self.tol_energy,
            max_iters=self.max_iters,
            gate_radius_fraction=self.gate_radius_fraction,
            allow_projective=self.allow_projective,
        )

    def weights(self):
        return SeamWeights(
            lambda_color=self.lambda_color,
            lambda_grad=self.lambda_grad,
            lambda_feat=self.lambda_feat,
        )

    def blend(self):
        return BlendConfig(k=self.blend_k, band=self.blend_band)


# File keys named after the quantities they set; the two blend keys keep
# their short names from the weighting formula.
_KEY_TO_FIELD = {
    "tol_energy": "tol_energy",
    "max_iters": "max_iters",
    "gate_radius_fraction": "gate_radius_fraction",
    "allow_projective": "allow_projective",
    "lambda_color": "lambda_color",
    "lambda_grad": "lambda_grad",
    "lambda_feat": "lambda_feat",
    "seam_axis": "seam_axis",
    "feature_source": "feature_source",
    "k": "blend_k",
    "band": "blend_band",
    "exact_order": "exact_order",
    "reference_override": "reference_override",
}

_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _coerce(field_name, raw, target_type):
    raw = raw.strip()
    if field_name == "reference_override":
        if raw.lower() in ("none", ""):
            return None
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"reference_override must be an integer, got {raw!r}") from exc
    if target_type is bool:
        if raw.lower() not in _BOOL_WORDS:
            raise ConfigError(f"{field_name} must be a boolean, got {raw!r}")
        return _BOOL_WORDS[raw.lower()]
    if target_type is int:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{field_name} must be an integer, got {raw!r}") from exc
    if target_type is float:
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{field_name} must be a number, got {raw!r}") from exc
    return raw


def parse_config(text):
    """Parse config text into a :class:`PipelineConfig`."""
    field_types = {f.name: f.type for f in fields(PipelineConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field_name = _KEY_TO_FIELD[key]
        ftype = field_types[field_name]
        if ftype in ("float", float):
            target = float
        elif ftype in ("int", int):
            target = int
        elif ftype in ("bool", bool):
            target = bool
        else:
            target = str
        values[field_name] = _coerce(field_name, raw, target)
    cfg = PipelineConfig(**values)
    _validate(cfg)
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def _validate(cfg):
    if cfg.tol_energy <= 0:
        raise ConfigError("tol_energy must be positive")
    if cfg.max_iters < 1:
        raise ConfigError("max_iters must be at least 1")
    if cfg.gate_radius_fraction <= 0:
        raise ConfigError("gate_radius_fraction must be positive")
    if min(cfg.lambda_color, cfg.lambda_grad, cfg.lambda_feat) < 0:
        raise ConfigError("seam weights must be non-negative")
    if max(cfg.lambda_color, cfg.lambda_grad, cfg.lambda_feat) == 0:
        raise ConfigError("at least one seam weight must be positive")
    if cfg.seam_axis not in ("vertical", "horizontal"):
        raise ConfigError("seam_axis must be 'vertical' or 'horizontal'")
    if cfg.feature_source not in ("builtin", "file"):
        raise ConfigError("feature_source must be 'builtin' or 'file'")
    if cfg.blend_k <= 0 or cfg.blend_band <= 0:
        raise ConfigError("k and band must be positive")
