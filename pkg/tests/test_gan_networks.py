import numpy as np
import pytest
import torch

from softmasklab.data.types import IndicatorKind
from softmasklab.sbsgan.networks import (
    PatchDiscriminator,
    TranslationGenerator,
    generate,
    infer_softmask,
)


@pytest.fixture(scope="module")
def gen():
    return TranslationGenerator(2, base_channels=8, num_res_blocks=2, seed=1)


def _batch(n=2, h=32, w=16, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, (n, h, w, 3)).astype(np.float32)


class TestGenerator:
    def test_output_shape_and_range(self, gen):
        out = infer_softmask(gen, _batch())
        assert out.shape == (2, 32, 16, 3)
        assert out.min() >= -1.0 and out.max() <= 1.0

    def test_inference_deterministic(self, gen):
        images = _batch()
        a = infer_softmask(gen, images)
        b = infer_softmask(gen, images)
        assert np.array_equal(a, b)

    def test_untrained_output_nondegenerate(self, gen):
        out = infer_softmask(gen, _batch(n=4))
        assert float(np.var(out)) > 0.0

    def test_single_image_roundtrip_shape(self, gen):
        single = _batch(n=1)[0]
        out = infer_softmask(gen, single)
        assert out.shape == single.shape

    def test_batch_order_independence(self, gen):
        images = _batch(n=4)
        full = infer_softmask(gen, images)
        swapped = infer_softmask(gen, images[::-1].copy())
        assert np.allclose(full, swapped[::-1], atol=1e-6)

    def test_branch_routing(self, gen):
        images = _batch()
        soft = generate(gen, images, IndicatorKind.uniform())
        styled = generate(gen, images, IndicatorKind.one_hot(1))
        assert not np.allclose(soft, styled)

    def test_branches_share_no_parameters(self, gen):
        soft_ids = {id(p) for p in gen.branch_soft.parameters()}
        style_ids = {id(p) for p in gen.branch_style.parameters()}
        assert not soft_ids & style_ids

    def test_branch_isolation_under_updates(self):
        g = TranslationGenerator(2, base_channels=8, num_res_blocks=1, seed=3)
        style_before = [p.detach().clone() for p in g.branch_style.parameters()]
        opt = torch.optim.Adam(g.parameters(), lr=1e-2)
        images = torch.rand(2, 3, 16, 8) * 2 - 1
        loss = g(images, IndicatorKind.uniform()).abs().mean()
        opt.zero_grad()
        loss.backward()
        opt.step()
        for before, after in zip(style_before, g.branch_style.parameters()):
            assert torch.equal(before, after)
        soft_before = [p.detach().clone() for p in g.branch_soft.parameters()]
        loss = g(images, IndicatorKind.one_hot(1)).abs().mean()
        opt.zero_grad()
        loss.backward()
        opt.step()
        for before, after in zip(soft_before, g.branch_soft.parameters()):
            assert torch.equal(before, after)

    def test_domain_count_mismatch(self, gen):
        with pytest.raises(ValueError):
            generate(gen, _batch(), IndicatorKind.one_hot(5))

    def test_rejects_unaligned_size(self, gen):
        with pytest.raises(ValueError, match="divisible by 4"):
            gen(torch.zeros(1, 3, 30, 16), IndicatorKind.uniform())

    def test_input_channels_include_indicator(self, gen):
        first_conv = gen.trunk[0]
        assert first_conv.in_channels == 3 + 2

    def test_per_sample_targets(self, gen):
        images = torch.rand(3, 3, 16, 8) * 2 - 1
        out = gen(images, np.array([0, 1, 0]))
        assert out.shape == (3, 3, 16, 8)


class TestPatchDiscriminator:
    @pytest.mark.parametrize("hw,expected", [
        ((64, 32), (8, 4)),
        ((256, 128), (32, 16)),
        ((32, 16), (4, 2)),
    ])
    def test_patch_shape_table(self, hw, expected):
        disc = PatchDiscriminator(2, base_channels=8)
        assert disc.patch_shape(*hw) == expected
        adv, dom = disc(torch.zeros(1, 3, *hw))
        assert tuple(adv.shape[2:]) == expected
        assert adv.shape[1] == 1
        assert dom.shape == (1, 2)

    def test_patch_map_not_scalar(self):
        disc = PatchDiscriminator(3, base_channels=8)
        adv, _ = disc(torch.zeros(2, 3, 64, 32))
        assert adv.shape[2] * adv.shape[3] > 1

    def test_domain_head_width(self):
        disc = PatchDiscriminator(5, base_channels=8)
        _, dom = disc(torch.zeros(2, 3, 32, 16))
        assert dom.shape == (2, 5)
