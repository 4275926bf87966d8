"""Deterministic synthetic multi-domain corpus with exact foreground masks.

Each sample is a flat-colored "pedestrian" figure (head, torso, legs)
rendered over a domain-specific background. Identity appearance (part colors
and proportions) is consistent across domains and cameras; backgrounds are
drawn from the per-domain palette with a zero-mean gradient and pixel noise,
so per-domain background means stay close to the palette colors.
"""

from __future__ import annotations

import numpy as np

from .types import Corpus, ImageSample, SyntheticSpec

_SKIN = np.array([0.55, 0.2, -0.15], dtype=np.float32)


def _identity_params(spec: SyntheticSpec, identity: int) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1, identity]))
    strength = spec.foreground_strength

    def part_color():
        mag = rng.uniform(0.45, max(strength, 0.46), size=3)
        sign = rng.choice([-1.0, 1.0], size=3)
        return (mag * sign).astype(np.float32)

    return {
        "shirt": part_color(),
        "pants": part_color(),
        "head": (_SKIN + rng.uniform(-0.1, 0.1, size=3)).astype(np.float32),
        "body_frac": rng.uniform(0.72, 0.88),
        "torso_w": rng.uniform(0.3, 0.42),  # fraction of body height
        "leg_w": rng.uniform(0.22, 0.34),
        "head_r": rng.uniform(0.09, 0.13),
    }


def _render(spec: SyntheticSpec, params: dict, domain: int, camera: int,
            rng: np.random.Generator):
    h, w = spec.image_size
    ys = np.arange(h, dtype=np.float32)[:, None]
    xs = np.arange(w, dtype=np.float32)[None, :]

    base = np.asarray(spec.background_palette[domain], dtype=np.float32)
    gradient = spec.background_gradient * (2.0 * ys / max(h - 1, 1) - 1.0)
    noise = rng.uniform(-spec.background_noise, spec.background_noise, size=(h, w, 3))
    image = base[None, None, :] + gradient[:, :, None] + noise.astype(np.float32)

    body_h = params["body_frac"] * h
    coverage = rng.uniform(*spec.coverage_range)
    head_r0 = params["head_r"] * body_h
    torso_h = 0.36 * body_h
    leg_h = 0.34 * body_h
    base_area = (
        np.pi * head_r0 ** 2
        + torso_h * params["torso_w"] * body_h
        + leg_h * params["leg_w"] * body_h
    )
    scale = coverage * h * w / base_area

    cx = w / 2 + rng.uniform(-0.15, 0.15) * w
    top = (h - body_h) / 2 + rng.uniform(-0.04, 0.04) * h

    head_r = head_r0 * np.sqrt(scale)
    head_cy = top + 0.12 * body_h
    head = (ys - head_cy) ** 2 + (xs - cx) ** 2 <= head_r ** 2

    torso_hw = params["torso_w"] * body_h * scale / 2
    torso_top = top + 0.22 * body_h
    torso = (
        (ys >= torso_top)
        & (ys < torso_top + torso_h)
        & (np.abs(xs - cx) <= torso_hw)
    )

    leg_hw = params["leg_w"] * body_h * scale / 2
    leg_top = torso_top + torso_h
    legs = (ys >= leg_top) & (ys < leg_top + leg_h) & (np.abs(xs - cx) <= leg_hw)

    for region, color in ((legs, params["pants"]), (torso, params["shirt"]),
                          (head, params["head"])):
        image[region] = color

    mask = (head | torso | legs).astype(np.float32)

    offset = (camera - (spec.cameras_per_domain - 1) / 2) * 0.08
    image = np.clip(image + offset, -1.0, 1.0).astype(np.float32)

    if spec.mask_noise > 0.0:
        flips = rng.random(size=mask.shape) < spec.mask_noise
        mask = np.abs(mask - flips.astype(np.float32))
    return image, mask


def generate_synthetic_corpus(spec: SyntheticSpec) -> Corpus:
    """Render the corpus described by ``spec``; deterministic given its seed."""
    if not isinstance(spec, SyntheticSpec):
        raise TypeError(f"spec must be a SyntheticSpec, got {type(spec).__name__}")
    samples = []
    for domain in range(spec.num_domains):
        for identity in range(spec.identities):
            params = _identity_params(spec, identity)
            for j in range(spec.images_per_identity):
                camera = j % spec.cameras_per_domain
                rng = np.random.default_rng(
                    np.random.SeedSequence([spec.seed, 2, domain, identity, j])
                )
                image, mask = _render(spec, params, domain, camera, rng)
                samples.append(
                    ImageSample(
                        image=image,
                        identity=identity,
                        camera=camera,
                        domain=domain,
                        mask=mask,
                    )
                )
    return Corpus(samples, spec.num_domains)
