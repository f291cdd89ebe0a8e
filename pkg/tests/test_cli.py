import os

from nomasched.cli import main
from nomasched.harness import read_rows

TINY_INI = """
[system]
n_ues = 4
n_channels = 2
episode_len_slots = 10

[ppo]
actor_width = 16
critic_width = 16
rollout_steps = 20
minibatch_size = 8
eval_every = 1
eval_episodes = 1
actor_lr = 3e-3
"""


def write_cfg(tmp_path):
    p = tmp_path / "sim.ini"
    p.write_text(TINY_INI)
    return str(p)


def test_eval_baselines(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "runs")
    code = main(["eval", "--config", cfg, "--scheme", "round_robin",
                 "--seeds", "1", "--episodes", "3", "--out", out])
    assert code == 0
    merged = capsys.readouterr().out.strip()
    rows = read_rows(merged)
    assert len(rows) == 3
    assert {r.scheme for r in rows} == {"round_robin"}


def test_train_writes_checkpoint_copy(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "runs")
    ckpt = str(tmp_path / "final.npz")
    code = main(["train", "--config", cfg, "--scheme", "ppo", "--seeds", "1",
                 "--episodes", "2", "--out", out, "--checkpoint", ckpt])
    assert code == 0
    assert os.path.exists(ckpt)
    assert os.path.exists(os.path.join(out, "checkpoints", "ppo_seed0.npz"))


def test_eval_from_checkpoint(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "runs")
    ckpt = str(tmp_path / "final.npz")
    main(["train", "--config", cfg, "--seeds", "1", "--episodes", "2",
          "--out", out, "--checkpoint", ckpt])
    capsys.readouterr()
    out2 = str(tmp_path / "eval")
    code = main(["eval", "--config", cfg, "--checkpoint", ckpt,
                 "--seeds", "1", "--episodes", "2", "--out", out2])
    assert code == 0
    rows = read_rows(capsys.readouterr().out.strip())
    assert len(rows) == 2


def test_sweep_multiple_schemes(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "runs")
    code = main(["sweep", "--config", cfg, "--scheme", "round_robin",
                 "--scheme", "semi_static", "--seeds", "2", "--episodes", "2",
                 "--out", out])
    assert code == 0
    rows = read_rows(capsys.readouterr().out.strip())
    assert len(rows) == 2 * 2 * 2


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[system]\nn_ues = 0\n")
    code = main(["eval", "--config", str(bad), "--scheme", "round_robin",
                 "--out", str(tmp_path / "x")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path, capsys):
    code = main(["eval", "--config", "/no/such/file.ini",
                 "--scheme", "round_robin", "--out", str(tmp_path / "x")])
    assert code == 2
