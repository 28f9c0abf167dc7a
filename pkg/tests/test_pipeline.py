import hashlib
import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from pointfill.config import ConfigError, ModelConfig, default_config, load_config, save_config
from pointfill.io import format_pcf, read_cloud
from pointfill.nn.weights import WeightError, WeightStore, init_weights, weight_shapes, zero_like
from pointfill.pipeline import complete, dump_stages
from pointfill.synth import synth_shape

DATA = Path(__file__).parent / "data"
CFG = default_config("desk")


@pytest.fixture(scope="module")
def weights():
    return init_weights(CFG)


@pytest.fixture(scope="module")
def sphere():
    return synth_shape("sphere", CFG.N, 0)


class TestConfig:
    def test_full_scale_output_count(self):
        cfg = default_config("full")
        assert cfg.N_c == 16384 == cfg.U * cfg.I * cfg.r == 4 * 512 * 8
        assert (cfg.N, cfg.I_prime, cfg.residual_count) == (2048, 768, 256)

    def test_desk_scale_output_count(self):
        assert CFG.N_c == 512 == 4 * 64 * 2

    def test_i_above_i_prime_rejected(self):
        with pytest.raises(ConfigError, match="I=65"):
            replace(CFG, I=65, I_prime=64, N_c=4 * 65 * 2).validate()

    def test_n_c_mismatch_rejected(self):
        with pytest.raises(ConfigError, match="N_c"):
            replace(CFG, N_c=500).validate()

    def test_json_round_trip(self, tmp_path):
        save_config(tmp_path / "c.json", CFG)
        assert load_config(tmp_path / "c.json") == CFG

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            ModelConfig.from_dict({"bogus": 1})

    def test_scale_key(self):
        assert ModelConfig.from_dict({"scale": "full"}) == default_config("full")


class TestWeights:
    def test_same_seed_identical(self):
        assert init_weights(CFG, 3).equals(init_weights(CFG, 3))

    def test_different_seeds_differ(self):
        a, b = init_weights(CFG, 1), init_weights(CFG, 2)
        assert any(not np.array_equal(a[n], b[n]) for n in a)

    def test_shapes_match(self, weights):
        assert {n: weights[n].shape for n in weights} == weight_shapes(CFG)

    def test_missing_tensor_named(self, weights):
        partial = WeightStore({n: v for n, v in weights.items() if n != "decoder.1.cross.k.w"})
        with pytest.raises(WeightError, match="decoder.1.cross.k.w"):
            partial.validate(CFG)

    def test_wrong_shape_named(self, weights):
        bad = weights.with_values({"seed.pos.w": np.zeros((2, 2))})
        with pytest.raises(WeightError, match="seed.pos.w"):
            bad.validate(CFG)

    def test_unknown_tensor_named(self, weights):
        with pytest.raises(WeightError, match="extra.w"):
            weights.with_values({"extra.w": np.zeros(1)}).validate(CFG)

    def test_immutable(self, weights):
        with pytest.raises(ValueError):
            weights["seed.pos.w"][0, 0] = 1.0


class TestComplete:
    def test_output_count(self, weights, sphere):
        r = complete(sphere, CFG, weights)
        assert r.output.shape == (CFG.N_c, 3)
        assert [p.shape for p in r.parts] == [(CFG.I * CFG.r, 3)] * CFG.U
        assert r.seeds.shape == (CFG.I, 3) and r.candidates.shape == (CFG.I_prime, 3)

    def test_wrong_input_size(self, weights):
        with pytest.raises(ValueError, match="N=512"):
            complete(np.zeros((10, 3)), CFG, weights)

    def test_zero_heads_tile_seeds(self, weights, sphere):
        r = complete(sphere, CFG, weights.with_values(zero_like(weights, "recon.head.")))
        tiled = np.tile(np.repeat(r.seeds, CFG.r, axis=0), (CFG.U, 1))
        assert np.array_equal(r.output, tiled)

    def test_permutation_invariant(self, weights, sphere):
        perm = np.random.default_rng(5).permutation(CFG.N)
        a = complete(sphere, CFG, weights).output
        b = complete(sphere[perm], CFG, weights).output
        assert format_pcf(a) == format_pcf(b)
        assert np.array_equal(a, b)

    def test_repeat_runs_byte_identical(self, weights, sphere):
        a = complete(sphere, CFG, weights).output
        b = complete(sphere, CFG, init_weights(CFG)).output
        assert a.tobytes() == b.tobytes()

    def test_golden(self, weights, sphere):
        golden = read_cloud(DATA / "golden_desk_sphere.pcf")
        out = complete(sphere, CFG, weights).output
        np.testing.assert_allclose(out, golden, rtol=0, atol=1e-6)

    def test_stages_dump(self, weights, sphere, tmp_path):
        r = complete(sphere, CFG, weights, keep_stages=True)
        files = dump_stages(r, tmp_path)
        names = {f.name for f in files}
        assert {"seeds.pcf", "output.pcf", "part_1.pcf", "encoder_features.npy"} <= names
        assert np.load(tmp_path / "encoder_features.npy").shape == (CFG.G, CFG.D_h)

    @pytest.mark.parametrize("bias", [False, True])
    def test_attention_bias_variant_runs(self, sphere, bias):
        cfg = replace(CFG, attention_bias=bias)
        out = complete(sphere, cfg, init_weights(cfg)).output
        assert out.shape == (cfg.N_c, 3) and np.isfinite(out).all()


def run_complete_subprocess(tmp_path: Path, threads: str) -> str:
    from pointfill.io import write_cloud, write_weights

    inp, w = tmp_path / "in.pcf", tmp_path / "w.pwt"
    if not inp.exists():
        write_cloud(inp, synth_shape("sphere", CFG.N, 0))
        write_weights(w, init_weights(CFG))
    env = dict(os.environ, PPCMT_THREADS=threads)
    out = tmp_path / f"out_{threads}.pcf"
    res = subprocess.run(
        [sys.executable, "-m", "pointfill", "complete", "--input", str(inp), "--config", "desk",
         "--weights", str(w), "--out", str(out)],
        env=env, capture_output=True, text=True, check=True,
    )
    assert f"output_sha256={hashlib.sha256(out.read_bytes()).hexdigest()}" in res.stdout
    return hashlib.sha256(out.read_bytes()).hexdigest()


class TestThreads:
    def test_byte_identical_across_thread_counts(self, tmp_path):
        assert run_complete_subprocess(tmp_path, "1") == run_complete_subprocess(tmp_path, "4")
