"""Sectioned key/value experiment configuration.

Defaults follow the published training recipe wherever one exists (loss
weights, optimizer settings, schedules); corpus and network sizes default
to the desk-scale profile. Resolution order: defaults, then the config
file, then command-line overrides. Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from pathlib import Path

from ..data.types import SyntheticSpec
from ..da2s.backbone import BackboneConfig, FULL_VARIANT, MINI_VARIANT
from ..da2s.training import ReidTrainingConfig
from ..exceptions import ConfigurationError
from ..sbsgan.losses import ADVERSARIAL_VARIANTS, BGS_REDUCTIONS, LossWeights
from ..sbsgan.training import GanTrainingConfig


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text):
    text = str(text).strip()
    if not text:
        return ()
    return tuple(int(part) for part in text.split(","))


_PARSERS = {
    int: int,
    float: float,
    bool: _parse_bool,
    str: lambda s: str(s).strip(),
    "ints": _parse_int_list,
}

_FORMATTERS = {
    bool: lambda v: "true" if v else "false",
    "ints": lambda v: ",".join(str(x) for x in v),
}

# section -> key -> (default, type)
SCHEMA = {
    "run": {
        "seed": (0, int),
        "out": ("runs/default", str),
        "threads": (0, int),
    },
    "synthetic": {
        "num_domains": (2, int),
        "identities": (8, int),
        "images_per_identity": (24, int),
        "image_height": (64, int),
        "image_width": (32, int),
        "cameras_per_domain": (2, int),
        "min_palette_separation": (0.5, float),
        "background_noise": (0.06, float),
        "background_gradient": (0.12, float),
        "foreground_strength": (0.8, float),
        "coverage_low": (0.16, float),
        "coverage_high": (0.34, float),
        "mask_noise": (0.0, float),
    },
    "sbsgan": {
        "image_height": (64, int),
        "image_width": (32, int),
        "base_channels": (32, int),
        "res_blocks": (6, int),
        "learning_rate": (1e-4, float),
        "beta1": (0.5, float),
        "beta2": (0.999, float),
        "batch_size": (16, int),
        "epochs": (5, int),
        "d_steps_per_g": (5, int),
        "lambda_rec": (10.0, float),
        "lambda_idc": (5.0, float),
        "lambda_bgs": (5.0, float),
        "lambda_sc": (5.0, float),
        "adversarial": ("wgan-gp", str),
        "gp_weight": (10.0, float),
        "bgs_reduction": ("norm", str),
    },
    "da2s": {
        "variant": (MINI_VARIANT, str),
        "image_height": (64, int),
        "image_width": (32, int),
        "growth_rate": (0, int),        # 0 keeps the variant preset
        "init_channels": (0, int),
        "block_layers": ((), "ints"),   # empty keeps the variant preset
        "use_se": (True, bool),
        "use_isdc": (True, bool),
        "isdc_se": (False, bool),
        "se_reduction": (16, int),
        "fc1_units": (512, int),
        "dropout": (0.5, float),
        "learning_rate": (0.1, float),
        "decayed_learning_rate": (0.01, float),
        "decay_epoch": (40, int),
        "momentum": (0.9, float),
        "batch_size": (50, int),
        "epochs": (60, int),
        "flip_probability": (0.5, float),
        "target_domain": (1, int),
    },
    "eval": {
        "domain": (-1, int),  # -1 evaluates on the configured target domain
        "cross_camera": (True, bool),
        "ranks": ((1, 5, 10), "ints"),
        "fit_count": (5000, int),
        "plot_count": (200, int),
        "gap_seeds": (3, int),
    },
}


class ExperimentConfig:
    def __init__(self, values):
        self._values = values

    def get(self, section, key):
        return self._values[section][key]

    def section(self, name):
        return dict(self._values[name])

    @property
    def seed(self):
        return self.get("run", "seed")

    @property
    def out(self):
        return Path(self.get("run", "out"))

    def canonical_text(self) -> str:
        buf = io.StringIO()
        for section in sorted(self._values):
            buf.write(f"[{section}]\n")
            for key in sorted(self._values[section]):
                value = self._values[section][key]
                kind = SCHEMA[section][key][1]
                fmt = _FORMATTERS.get(kind, lambda v: repr(v) if isinstance(v, float) else str(v))
                buf.write(f"{key} = {fmt(value)}\n")
            buf.write("\n")
        return buf.getvalue()

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    def write(self, path) -> None:
        Path(path).write_text(self.canonical_text())

    # Builders for the typed module configurations.

    def synthetic_spec(self) -> SyntheticSpec:
        s = self.section("synthetic")
        return SyntheticSpec(
            num_domains=s["num_domains"],
            identities=s["identities"],
            images_per_identity=s["images_per_identity"],
            image_size=(s["image_height"], s["image_width"]),
            cameras_per_domain=s["cameras_per_domain"],
            min_palette_separation=s["min_palette_separation"],
            background_noise=s["background_noise"],
            background_gradient=s["background_gradient"],
            foreground_strength=s["foreground_strength"],
            coverage_range=(s["coverage_low"], s["coverage_high"]),
            mask_noise=s["mask_noise"],
            seed=self.seed,
        )

    def gan_config(self) -> GanTrainingConfig:
        s = self.section("sbsgan")
        return GanTrainingConfig(
            image_size=(s["image_height"], s["image_width"]),
            base_channels=s["base_channels"],
            num_res_blocks=s["res_blocks"],
            learning_rate=s["learning_rate"],
            beta1=s["beta1"],
            beta2=s["beta2"],
            batch_size=s["batch_size"],
            epochs=s["epochs"],
            d_steps_per_g=s["d_steps_per_g"],
            weights=LossWeights(s["lambda_rec"], s["lambda_idc"],
                                s["lambda_bgs"], s["lambda_sc"]),
            adversarial=s["adversarial"],
            gp_weight=s["gp_weight"],
            bgs_reduction=s["bgs_reduction"],
            seed=self.seed,
        )

    def backbone_config(self) -> BackboneConfig:
        s = self.section("da2s")
        base = BackboneConfig.from_variant(
            s["variant"], (s["image_height"], s["image_width"])
        )
        return BackboneConfig(
            growth_rate=s["growth_rate"] or base.growth_rate,
            block_layers=tuple(s["block_layers"]) or base.block_layers,
            init_channels=s["init_channels"] or base.init_channels,
            input_size=base.input_size,
        )

    def reid_config(self) -> ReidTrainingConfig:
        s = self.section("da2s")
        return ReidTrainingConfig(
            learning_rate=s["learning_rate"],
            decayed_learning_rate=s["decayed_learning_rate"],
            decay_epoch=s["decay_epoch"],
            momentum=s["momentum"],
            batch_size=s["batch_size"],
            epochs=s["epochs"],
            flip_probability=s["flip_probability"],
            use_se=s["use_se"],
            use_isdc=s["use_isdc"],
            isdc_se=s["isdc_se"],
            se_reduction=s["se_reduction"],
            fc1_units=s["fc1_units"],
            dropout=s["dropout"],
            seed=self.seed,
        )


def _parse_value(section, key, raw):
    try:
        kind = SCHEMA[section][key][1]
    except KeyError:
        raise ConfigurationError(f"unknown configuration key [{section}] {key}")
    try:
        return _PARSERS[kind](raw)
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(
            f"bad value for [{section}] {key}: {raw!r} ({exc})"
        )


def validate_config(cfg: ExperimentConfig) -> None:
    s = cfg.section("sbsgan")
    for name in ("lambda_rec", "lambda_idc", "lambda_bgs", "lambda_sc"):
        if s[name] < 0:
            raise ConfigurationError(f"[sbsgan] {name} must be >= 0, got {s[name]}")
    if s["learning_rate"] <= 0:
        raise ConfigurationError("[sbsgan] learning_rate must be positive")
    if s["adversarial"] not in ADVERSARIAL_VARIANTS:
        raise ConfigurationError(
            f"[sbsgan] adversarial must be one of {ADVERSARIAL_VARIANTS}"
        )
    if s["bgs_reduction"] not in BGS_REDUCTIONS:
        raise ConfigurationError(
            f"[sbsgan] bgs_reduction must be one of {BGS_REDUCTIONS}"
        )
    if s["image_height"] % 4 or s["image_width"] % 4:
        raise ConfigurationError(
            "[sbsgan] image dimensions must be divisible by 4"
        )
    if s["batch_size"] < 1 or s["d_steps_per_g"] < 1 or s["epochs"] < 0:
        raise ConfigurationError("[sbsgan] batch/epochs/update schedule must be positive")

    syn = cfg.section("synthetic")
    if syn["num_domains"] < 2:
        raise ConfigurationError(
            "[synthetic] num_domains must be >= 2: cross-domain evaluation "
            "needs at least two domains"
        )
    if not (0.0 < syn["coverage_low"] <= syn["coverage_high"] < 1.0):
        raise ConfigurationError("[synthetic] coverage range must lie inside (0, 1)")

    d = cfg.section("da2s")
    if d["variant"] not in (FULL_VARIANT, MINI_VARIANT):
        raise ConfigurationError(
            f"[da2s] variant must be {FULL_VARIANT!r} or {MINI_VARIANT!r}"
        )
    if not 0 <= d["target_domain"] < syn["num_domains"]:
        raise ConfigurationError(
            f"[da2s] target_domain {d['target_domain']} out of range for "
            f"{syn['num_domains']} domains"
        )
    if d["learning_rate"] <= 0 or d["decayed_learning_rate"] <= 0:
        raise ConfigurationError("[da2s] learning rates must be positive")
    if not 0.0 <= d["dropout"] < 1.0:
        raise ConfigurationError("[da2s] dropout must lie in [0, 1)")

    ev = cfg.section("eval")
    if not ev["ranks"] or any(r < 1 for r in ev["ranks"]):
        raise ConfigurationError("[eval] ranks must be positive integers")
    if not -1 <= ev["domain"] < syn["num_domains"]:
        raise ConfigurationError(
            f"[eval] domain {ev['domain']} out of range for "
            f"{syn['num_domains']} domains"
        )
    if cfg.get("run", "seed") < 0:
        raise ConfigurationError("[run] seed must be non-negative")


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Resolve the configuration: defaults, file, then overrides.

    ``overrides`` maps ``(section, key)`` to raw string values (from the
    command line). The result is fully validated.
    """
    values = {
        section: {key: default for key, (default, _) in keys.items()}
        for section, keys in SCHEMA.items()
    }
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config file {path} does not exist")
        parser = configparser.ConfigParser()
        try:
            parser.read_string(path.read_text())
        except configparser.Error as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}")
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigurationError(f"unknown configuration section [{section}]")
            for key, raw in parser.items(section):
                values[section][key] = _parse_value(section, key, raw)
    for (section, key), raw in (overrides or {}).items():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown configuration section [{section}]")
        values[section][key] = _parse_value(section, key, raw)
    cfg = ExperimentConfig(values)
    validate_config(cfg)
    return cfg
