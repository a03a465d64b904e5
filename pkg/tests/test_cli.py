"""Command-line surface tests (direct main() invocation)."""

import numpy as np
import pytest

from rnan.checkpoint import save_checkpoint
from rnan.cli import load_config, main, thread_count
from rnan.errors import ConfigurationError
from rnan.imgio import load_image, save_image
from rnan.network import BlockConfig, NetworkConfig, build_network
from rnan.synthetic import make_image


@pytest.fixture
def image_dir(tmp_path):
    d = tmp_path / "hq"
    d.mkdir()
    for i in range(3):
        save_image(d / f"im{i}.pgm", make_image(200 + i, size=32, channels=1))
    return d


@pytest.fixture
def tiny_checkpoint(tmp_path):
    cfg = NetworkConfig(
        num_local_blocks=0,
        num_nonlocal_blocks=1,
        in_channels=1,
        block=BlockConfig(q=1, t=1, m=1, features=8, nlb_channels=4),
    )
    _, store = build_network(cfg, zero_init=True)
    path = tmp_path / "zero.rnan"
    save_checkpoint(path, store, cfg)
    return path


CONFIG_TEXT = """
[network]
num_local_blocks = 0
num_nonlocal_blocks = 1
in_channels = 1
global_residual = true

[block]
q = 1
t = 1
m = 1
features = 8
nlb_channels = 4

[degrade]
kind = awgn
sigma = 25
seed = 3

[train]
batch_size = 2
patch_size = 16
lr0 = 1e-3
max_iters = 3
seed = 5

[paths]
corpus_dir = {corpus}
out_dir = {out}
"""


class TestConfigFile:
    def test_full_parse(self, tmp_path, image_dir):
        path = tmp_path / "cfg.ini"
        path.write_text(CONFIG_TEXT.format(corpus=image_dir, out=tmp_path / "run"))
        cfg = load_config(path)
        assert cfg.network.num_nonlocal_blocks == 1
        assert cfg.network.block.features == 8
        assert cfg.degrade.sigma == 25 and cfg.degrade.kind == "awgn"
        assert cfg.train.max_iters == 3 and cfg.train.lr0 == 1e-3
        assert cfg.paths["corpus_dir"] == image_dir

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.ini"
        path.write_text("[train]\nbogus = 1\n")
        with pytest.raises(ConfigurationError):
            load_config(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.ini")

    def test_missing_corpus_dir_rejected(self, tmp_path):
        path = tmp_path / "cfg.ini"
        path.write_text(f"[paths]\ncorpus_dir = {tmp_path / 'nowhere'}\n")
        with pytest.raises(ConfigurationError):
            load_config(path)


class TestDegradeCommand:
    def test_sigma_zero_outputs_byte_identical(self, image_dir, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["degrade", str(image_dir), "--sigma", "0", "--out", str(out)]) == 0
        for src in image_dir.iterdir():
            assert (out / src.name).read_bytes() == src.read_bytes()

    def test_same_seed_twice_byte_identical(self, image_dir, tmp_path):
        outs = []
        for run in ("a", "b"):
            out = tmp_path / run
            assert main(["degrade", str(image_dir), "--sigma", "30", "--seed", "7", "--out", str(out)]) == 0
            outs.append({p.name: p.read_bytes() for p in out.iterdir()})
        assert outs[0] == outs[1]

    def test_sigma50_prints_expected_mean(self, tmp_path, capsys):
        d = tmp_path / "big"
        d.mkdir()
        for i in range(2):
            save_image(d / f"im{i}.pgm", make_image(300 + i, size=96, channels=1))
        assert main(["degrade", str(d), "--sigma", "50", "--out", str(tmp_path / "o")]) == 0
        mean_line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("mean")][0]
        assert abs(float(mean_line.split("psnr=")[1].split()[0]) - 14.15) < 0.2

    def test_conflicting_flags_rejected(self, image_dir, tmp_path, capsys):
        rc = main(["degrade", str(image_dir), "--sigma", "10", "--quality", "20", "--out", str(tmp_path / "x")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_empty_directory_rejected(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["degrade", str(empty), "--sigma", "5", "--out", str(tmp_path / "x")]) == 1


class TestTrainEvalCommands:
    def test_train_then_eval_round_trip(self, tmp_path, image_dir, capsys):
        run_dir = tmp_path / "run"
        cfg_path = tmp_path / "cfg.ini"
        cfg_path.write_text(CONFIG_TEXT.format(corpus=image_dir, out=run_dir))
        assert main(["train", "--config", str(cfg_path)]) == 0
        checkpoint = run_dir / "checkpoint_final.rnan"
        assert checkpoint.exists() and (run_dir / "loss_log.csv").exists()

        out_dir = tmp_path / "scores"
        rc = main(
            ["eval", str(checkpoint), str(image_dir), "--sigma", "25", "--out", str(out_dir)]
        )
        assert rc == 0
        lines = (out_dir / "eval.csv").read_text().strip().splitlines()
        assert lines[0] == "image,psnr_db,ssim" and lines[-1].startswith("mean,")

    def test_train_without_config_fails(self, capsys):
        with pytest.raises(SystemExit):
            main(["train"])  # --config is required by the parser


class TestInferCommand:
    def test_zero_checkpoint_reproduces_inputs(self, image_dir, tiny_checkpoint, tmp_path):
        out = tmp_path / "restored"
        assert main(["infer", str(tiny_checkpoint), str(image_dir), "--out", str(out)]) == 0
        for src in image_dir.iterdir():
            got = load_image(out / src.name)
            assert np.array_equal(got, load_image(src))

    def test_self_ensemble_flag(self, image_dir, tiny_checkpoint, tmp_path):
        out = tmp_path / "restored"
        rc = main(
            ["infer", str(tiny_checkpoint), str(image_dir), "--out", str(out), "--self-ensemble"]
        )
        assert rc == 0 and len(list(out.iterdir())) == 3

    def test_missing_checkpoint_is_an_error(self, image_dir, tmp_path, capsys):
        rc = main(["infer", str(tmp_path / "none.rnan"), str(image_dir), "--out", str(tmp_path / "o")])
        assert rc == 1


class TestParamsCommand:
    def test_default_total_matches_reference_scale(self, capsys):
        assert main(["params"]) == 0
        total_line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("total")][0]
        total = int(total_line.split()[-1].replace(",", ""))
        assert abs(total - 7_409_000) <= 0.15 * 7_409_000


class TestThreads:
    def test_default_is_one(self, monkeypatch):
        monkeypatch.delenv("RNAN_THREADS", raising=False)
        assert thread_count() == 1

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("RNAN_THREADS", "4")
        assert thread_count() == 4

    def test_bad_value_rejected(self, monkeypatch):
        monkeypatch.setenv("RNAN_THREADS", "many")
        with pytest.raises(ConfigurationError):
            thread_count()
