"""Readers and writers for game files, trajectories, verdicts and run manifests.

Game file::

    {"kind": "symmetric", "n": 2, "actions": ["c", "d"],
     "payoffs": [{"own": "c", "opponents": ["d"], "value": "-1/2"}, ...]}

Asymmetric files use ``action_sets`` and give every entry a 1-based
``player``; ``opponents`` then lists the other players' actions in
player order.  Values are integers or ``"p/q"`` strings.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import IO

import numpy as np

from .dynamics import RestPointSearch, Trajectory
from .game import (
    AsymmetricGame,
    GameSchemaError,
    SymmetricGame,
    as_rational,
    format_rational,
    make_asymmetric_game,
    make_symmetric_game,
)

__all__ = [
    "game_from_json",
    "game_hash",
    "game_to_json",
    "mc_manifest",
    "read_game",
    "read_pairs_csv",
    "read_trajectory_csv",
    "rest_points_to_json",
    "write_game",
    "write_json",
    "write_trajectory_csv",
]


def game_to_json(game) -> dict:
    if isinstance(game, SymmetricGame):
        entries = [
            {
                "own": game.actions[own],
                "opponents": [game.actions[b] for b in opp],
                "value": format_rational(v),
            }
            for own, opp, v in game.profiles()
        ]
        return {"kind": "symmetric", "n": game.n, "actions": list(game.actions), "payoffs": entries}
    entries = []
    for i in range(game.n):
        for prof in game.profiles():
            labels = [game.action_sets[j][a] for j, a in enumerate(prof)]
            entries.append({
                "player": i + 1,
                "own": labels[i],
                "opponents": labels[:i] + labels[i + 1:],
                "value": format_rational(game._payoffs[i][prof]),
            })
    return {
        "kind": "asymmetric",
        "n": game.n,
        "action_sets": [list(s) for s in game.action_sets],
        "payoffs": entries,
    }


def _field(obj, key, where="game"):
    if key not in obj:
        raise GameSchemaError(f"{where} is missing required field {key!r}")
    return obj[key]


def game_from_json(obj: dict):
    if not isinstance(obj, dict):
        raise GameSchemaError("game file must contain a JSON object")
    kind = _field(obj, "kind")
    n = _field(obj, "n")
    if not isinstance(n, int):
        raise GameSchemaError(f"n must be an integer, got {n!r}")
    rows = _field(obj, "payoffs")
    if not isinstance(rows, list):
        raise GameSchemaError("payoffs must be a list")
    if kind == "symmetric":
        entries = []
        for r in rows:
            entries.append((_field(r, "own", "payoff entry"), list(_field(r, "opponents", "payoff entry")),
                            _value(r)))
        return make_symmetric_game(n, _field(obj, "actions"), entries)
    if kind == "asymmetric":
        entries = []
        for r in rows:
            player = _field(r, "player", "payoff entry")
            if not isinstance(player, int) or not 1 <= player <= n:
                raise GameSchemaError(f"player must be an integer in 1..{n}, got {player!r}")
            others = list(_field(r, "opponents", "payoff entry"))
            if len(others) != n - 1:
                raise GameSchemaError(f"entry {r} needs {n - 1} opponent actions")
            profile = others[:player - 1] + [_field(r, "own", "payoff entry")] + others[player - 1:]
            entries.append((player - 1, profile, _value(r)))
        return make_asymmetric_game(n, _field(obj, "action_sets"), entries)
    raise GameSchemaError(f"kind must be 'symmetric' or 'asymmetric', got {kind!r}")


def _value(r):
    v = _field(r, "value", "payoff entry")
    if isinstance(v, float):
        raise GameSchemaError(f"payoff {v!r} must be an integer or a 'p/q' string")
    return as_rational(v)


def read_game(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read game file {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameSchemaError(f"{path}: invalid JSON ({exc})") from exc
    return game_from_json(obj)


def write_game(game, path) -> None:
    write_json(game_to_json(game), path)


def game_hash(game) -> str:
    """sha256 of the canonical game JSON."""
    blob = json.dumps(game_to_json(game), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def write_json(obj, path_or_file) -> None:
    text = json.dumps(obj, indent=2, default=_json_default) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        Path(path_or_file).write_text(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_trajectory_csv(traj: Trajectory, path_or_file) -> None:
    def emit(fh: IO):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *traj.labels])
        for t, row in zip(traj.times, traj.array):
            w.writerow([_fmt(t), *(_fmt(v) for v in row)])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def read_trajectory_csv(path, sizes: tuple[int, ...] | None = None) -> Trajectory:
    """Inverse of :func:`write_trajectory_csv`; block sizes inferred from ``pK_`` prefixes."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ValueError(f"{path}: not a trajectory CSV (header must start with 't')")
    labels = rows[0][1:]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(labels) + 1)
    if sizes is None:
        prefixes = [lab.split("_", 1)[0] for lab in labels]
        if all(p.startswith("p") and p[1:].isdigit() for p in prefixes) and len(set(prefixes)) > 1:
            sizes = tuple(prefixes.count(p) for p in dict.fromkeys(prefixes))
        else:
            sizes = (len(labels),)
    return Trajectory(data[:, 0], data[:, 1:], "horizon", labels, tuple(sizes))


def rest_points_to_json(search: RestPointSearch) -> dict:
    return {
        "restPoints": [
            {
                "state": dict(zip(r.labels, (float(v) for v in r.state))),
                "residual": r.residual,
                "source": r.source,
                **({"stability": r.stability} if r.stability else {}),
            }
            for r in search.rest_points
        ],
        "unresolved": [s.tolist() for s in search.unresolved],
        "warning": bool(search.unresolved),
    }


def mc_manifest(seed: int, N: int, R: int, k: int, tie, game, **extra) -> dict:
    return {"seed": seed, "N": N, "R": R, "k": k, "tie": str(tie), "game-hash": game_hash(game), **extra}


def read_pairs_csv(path) -> list[tuple]:
    """Rows of a CSV with header ``g,l``; values kept exact."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, skipinitialspace=True)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["g", "l"]:
            raise ValueError(f"{path}: expected header 'g,l'")
        out = []
        for i, row in enumerate(reader, start=2):
            try:
                out.append((as_rational(row["g"]), as_rational(row["l"])))
            except (GameSchemaError, TypeError) as exc:
                raise ValueError(f"{path}:{i}: {exc}") from exc
    return out
