import csv
import json
import os
import subprocess
import sys
from fractions import Fraction

import pytest

from bepdyn.cli import main
from bepdyn.formats import (
    game_from_json,
    mc_manifest,
    read_game,
    read_pairs_csv,
    read_trajectory_csv,
    write_game,
    write_trajectory_csv,
)
from bepdyn.dynamics import integrate
from bepdyn.game import make_asymmetric_hawk_dove, make_matrix_game, make_prisoners_dilemma
from bepdyn.pd import solve_p_star


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_converges(capsys, tmp_path):
    csv_path = tmp_path / "t.csv"
    code, out, _ = run(capsys, "simulate", "--game", "pd", "--g", "0.5", "--l", "0.5", "--k", "2",
                       "--init", "0.9", "--horizon", "200", "--out", str(csv_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["converged"]
    assert summary["terminal"]["c"] == pytest.approx(solve_p_star(2), abs=1e-6)
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,c,d"


def test_simulate_single_sample(capsys):
    code, out, _ = run(capsys, "simulate", "--game", "pd", "--g", "1", "--l", "1", "--k", "1",
                       "--init", "0.9", "--horizon", "12000", "--dt", "1.0", "--record-every", "1000")
    assert code == 0
    assert json.loads(out)["terminal"]["c"] < 1e-4


def test_missing_game_file(capsys):
    code, _, err = run(capsys, "simulate", "--game-file", "/nonexistent/g.json", "--k", "2")
    assert code == 2 and "/nonexistent/g.json" in err


def test_config_errors(capsys):
    assert run(capsys, "simulate", "--game", "pd", "--g", "1", "--k", "2")[0] == 2
    assert run(capsys, "simulate", "--game", "pd", "--g", "0", "--l", "1", "--k", "2")[0] == 2
    assert run(capsys, "simulate", "--game", "pd", "--g", "1", "--l", "1", "--k", "0")[0] == 2
    assert run(capsys, "simulate", "--game", "pd", "--g", "1", "--l", "1", "--k", "2", "--init", "1.5")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2


def test_resource_exit_code(capsys, tmp_path):
    actions = [f"a{i}" for i in range(7)]
    game = make_matrix_game(actions, [[(i * 7 + j * 3) % 11 - 5 for j in range(7)] for i in range(7)])
    path = tmp_path / "big.json"
    write_game(game, path)
    code, _, err = run(capsys, "simulate", "--game-file", str(path), "--k", "8", "--horizon", "0.1")
    assert code == 3 and "Monte Carlo" in err


@pytest.mark.parametrize("g,l,k,expect", [
    ("2", "0.5", "2", [0.0, 0.245]),
    ("0.6", "0.3", "3", [0.0, 0.323]),
    ("0.5", "2", "2", [0.0]),
])
def test_equilibria(capsys, g, l, k, expect):
    code, out, _ = run(capsys, "equilibria", "--game", "pd", "--g", g, "--l", l, "--k", k)
    assert code == 0
    found = sorted(r["state"]["c"] for r in json.loads(out)["restPoints"])
    assert found == pytest.approx(expect, abs=1e-3)


def test_stability_commands(capsys, tmp_path):
    fg = make_matrix_game(["a*", "a'", "a''"], [[8, 9, 3], [7, 5, 2], [6, 4, 1]])
    path = tmp_path / "fg.json"
    write_game(fg, path)
    code, out, _ = run(capsys, "stability", "--game-file", str(path), "--k", "2", "--equilibrium", "a*")
    assert code == 0 and json.loads(out)["conclusion"] == "stable"

    code, out, _ = run(capsys, "stability", "--game", "ahd", "--g1", "1", "--l1", "0.4", "--g2", "0.5",
                       "--l2", "0.5", "--k", "2", "--equilibrium", "D1,H2")
    assert code == 0 and json.loads(out)["conclusion"] == "unstable"

    code, out, err = run(capsys, "stability", "--game", "pd", "--g", "1", "--l", "1", "--k", "2",
                         "--equilibrium", "d")
    assert code == 0 and json.loads(out)["conclusion"] == "indeterminate"
    assert "tie-breaking" in err

    code, _, _ = run(capsys, "stability", "--game", "pd", "--g", "1", "--l", "1", "--k", "2", "--equilibrium", "c")
    assert code == 4

    code, out, _ = run(capsys, "stability", "--game", "pd", "--g", "1", "--l", "0.3", "--k", "2",
                       "--equilibrium", "d", "--k-threshold", "--no-probe")
    assert json.loads(out)["kThreshold"]["k0"] == 5


def test_pd_scan(capsys, tmp_path):
    pairs = tmp_path / "pairs.csv"
    pairs.write_text("g,l\n1,1\n0.5,0.5\n")
    code, out, _ = run(capsys, "pd-scan", "--k", "2", "--pairs", str(pairs))
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0
    assert rows[0]["region_id"] == "BOUNDARY" and rows[0]["stable_equilibrium"] == ""
    assert rows[1]["region_id"] == "baseline"
    assert 0.28 < float(rows[1]["stable_equilibrium"]) < 0.5
    code, out, _ = run(capsys, "pd-scan", "--k", "3", "--g-values", "0.4", "--l-values", "0.9")
    assert list(csv.DictReader(out.splitlines()))[0]["region_id"] == "V"
    assert run(capsys, "pd-scan", "--k", "4", "--g-values", "1", "--l-values", "1")[0] == 2


def test_pd_scan_thread_env(tmp_path):
    env = dict(os.environ, BEP_THREADS="2")
    out = subprocess.run([sys.executable, "-m", "bepdyn.cli", "pd-scan", "--k", "2", "--g-values", "0.5,2",
                          "--l-values", "0.5"], env=env, capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.count("\n") == 3
    env["BEP_THREADS"] = "zero"
    out = subprocess.run([sys.executable, "-m", "bepdyn.cli", "pd-scan", "--k", "2", "--g-values", "1",
                          "--l-values", "1"], env=env, capture_output=True, text=True)
    assert out.returncode == 2


def test_mc_reproducible(capsys, tmp_path):
    args = ["mc", "--game", "pd", "--g", "0.5", "--l", "0.5", "--k", "2", "--N", "2000", "--horizon", "3",
            "--init", "0.5", "--seed", "123"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    man = tmp_path / "m.json"
    assert run(capsys, *args, "--out", str(a), "--manifest", str(man))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    manifest = json.loads(man.read_text())
    assert manifest == mc_manifest(123, 2000, 6000, 2, "uniform", make_prisoners_dilemma("1/2", "1/2"))


def test_mc_generates_seed(capsys):
    code, out, err = run(capsys, "mc", "--game", "pd", "--g", "0.5", "--l", "0.5", "--k", "2", "--N", "10",
                         "--horizon", "1")
    assert code == 0 and "seed:" in err
    assert "deviation" in json.loads(out)


def test_genericity_command(capsys):
    code, out, _ = run(capsys, "genericity", "--game", "coord", "--utilities", "2,1", "--k", "2",
                       "--candidate", "a2")
    assert code == 0 and json.loads(out)["noWeakSupportTies"] is False


def test_trajectory_round_trip(tmp_path):
    hd = make_asymmetric_hawk_dove(1, "1/2", "2/5", "1/2")
    traj = integrate(hd, 2, [[0.3, 0.7], [0.6, 0.4]], 2.0)
    path = tmp_path / "t.csv"
    write_trajectory_csv(traj, path)
    back = read_trajectory_csv(path)
    assert back.labels == traj.labels and back.sizes == (2, 2)
    assert back.array == pytest.approx(traj.array, rel=1e-11, abs=1e-12)


def test_game_file_round_trip_and_schema(tmp_path):
    hd = make_asymmetric_hawk_dove(1, "1/2", "2/5", "1/2")
    path = tmp_path / "hd.json"
    write_game(hd, path)
    assert read_game(path) == hd
    obj = json.loads(path.read_text())
    assert {"kind", "n", "action_sets", "payoffs"} <= set(obj)
    assert obj["payoffs"][0]["player"] == 1
    from bepdyn.game import GameSchemaError
    with pytest.raises(GameSchemaError):
        game_from_json({"kind": "symmetric", "n": 2, "actions": ["a", "b"], "payoffs": []})
    with pytest.raises(GameSchemaError):
        game_from_json({"kind": "weird", "n": 2, "payoffs": []})


def test_pairs_reader(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("g,l\n0.5,1/3\n")
    assert read_pairs_csv(p) == [(Fraction(1, 2), Fraction(1, 3))]
    p.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        read_pairs_csv(p)
