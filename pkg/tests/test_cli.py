import csv
import os

import numpy as np
import pytest

from bec_kinetics.cli import main


def write_config(path, outdir, lam=0.3, extra_numerics="", drop_key=None):
    lines = [
        "[physics]",
        f'lambda = {lam}',
        "bigN = 50.0",
        "T = 0.5",
        "beta = 1.0",
        "mu = -0.5",
        "L = 1.0",
        "cutoffM = 1",
        'profile = "gaussian_bump"',
        "[physics.profile_params]",
        "a = 1.0",
        "sigma = 2.0",
        "[numerics]",
        "sGridCount = 8",
        "picard_depth = 1",
        extra_numerics,
        "[output]",
        f'dir = "{outdir}"',
    ]
    if drop_key:
        lines = [l for l in lines if not l.startswith(drop_key)]
    with open(path, "w") as fh:
        fh.write("\n".join(l for l in lines if l))
    return path


def read_rows(path):
    with open(path) as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, list(r)


def test_evolve_csv_contract(tmp_path):
    cfg = write_config(tmp_path / "c.toml", str(tmp_path / "out"))
    assert main(["evolve", "--config", str(cfg)]) == 0
    header, rows = read_rows(tmp_path / "out" / "evolution.csv")
    assert header == ["T", "q_index_x", "q_index_y", "q_index_z", "F",
                      "Psi_re", "Psi_im"]
    assert len(rows) == 27
    assert os.path.exists(tmp_path / "out" / "manifest.toml")


def test_talbot_csv_contract(tmp_path):
    cfg = write_config(tmp_path / "c.toml", str(tmp_path / "out"))
    assert main(["talbot", "--config", str(cfg)]) == 0
    header, rows = read_rows(tmp_path / "out" / "talbot.csv")
    assert header == ["T", "q_moll_scaled", "sin2_sum"]
    assert len(rows) == 200


def test_missing_lambda_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.toml", str(tmp_path / "out"),
                       drop_key="lambda")
    assert main(["evolve", "--config", str(cfg)]) == 3
    assert "lambda" in capsys.readouterr().err


def test_parse_error_exits_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[physics\nlambda = ")
    assert main(["evolve", "--config", str(bad)]) == 2


def test_invalid_value_exits_3(tmp_path):
    cfg = write_config(tmp_path / "c.toml", str(tmp_path / "out"), lam=1.7)
    assert main(["evolve", "--config", str(cfg)]) == 3


def test_moments_collision_continuum_subcommands(tmp_path):
    cfg = write_config(tmp_path / "c.toml", str(tmp_path / "out"))
    for sub, fname in [("moments", "moments.csv"), ("collision", "collision.csv"),
                       ("continuum", "continuum.csv")]:
        assert main([sub, "--config", str(cfg)]) == 0
        assert os.path.exists(tmp_path / "out" / fname)


def test_manifest_round_trip(tmp_path):
    cfg = write_config(tmp_path / "c.toml", str(tmp_path / "out1"))
    assert main(["evolve", "--config", str(cfg)]) == 0
    manifest = (tmp_path / "out1" / "manifest.toml").read_text()
    manifest = manifest.replace(str(tmp_path / "out1"), str(tmp_path / "out2"))
    (tmp_path / "m.toml").write_text(manifest)
    assert main(["evolve", "--config", str(tmp_path / "m.toml")]) == 0
    a = (tmp_path / "out1" / "evolution.csv").read_bytes()
    b = (tmp_path / "out2" / "evolution.csv").read_bytes()
    assert a == b


def test_thread_cap_env(tmp_path, monkeypatch):
    monkeypatch.setenv("BEC_KINETICS_THREADS", "1")
    cfg = write_config(tmp_path / "c.toml", str(tmp_path / "out"))
    assert main(["talbot", "--config", str(cfg)]) == 0
