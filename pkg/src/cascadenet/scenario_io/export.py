"""Trajectory and topology exports (CSV, JSON, DOT).

Outputs are byte strings; identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dynamics import PriceOverride, PriceSignal, Trajectory
from ..errors import IoFailure, LengthMismatch
from ..model import FinancialNetwork, failure_indicator
from .scenario import fmt_num

TRAJECTORY_FORMAT = "cascadenet.trajectory"


def trajectory_csv(traj: Trajectory) -> bytes:
    n = traj.n
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"V_{i + 1}" for i in range(n)] + [f"phi_{i + 1}" for i in range(n)])
    for t in range(traj.states.shape[0]):
        w.writerow([t] + [fmt_num(v) for v in traj.states[t]] + [int(b) for b in traj.indicators[t]])
    return buf.getvalue().encode("utf-8")


def _signal_dict(ps: PriceSignal) -> dict:
    return {
        "base": list(ps.base),
        "overrides": [{"start": o.start, "end": o.end, "prices": list(o.prices)} for o in ps.overrides],
    }


def trajectory_json(traj: Trajectory) -> bytes:
    doc = {
        "format": TRAJECTORY_FORMAT,
        "version": 1,
        "n": traj.n,
        "labels": traj.labels,
        "horizon": traj.horizon,
        "converged": traj.converged,
        "settle_time": traj.settle_time,
        "conv_tol": traj.conv_tol,
        "confirm_window": traj.confirm_window,
        "price_signal": _signal_dict(traj.prices),
        "states": [
            {"t": t, "V": traj.states[t].tolist(), "phi": traj.indicators[t].astype(int).tolist()}
            for t in range(traj.states.shape[0])
        ],
    }
    return (json.dumps(doc, indent=1) + "\n").encode("utf-8")


def export_trajectory(traj: Trajectory, fmt: str = "csv") -> bytes:
    if traj.states.shape[0] == 0:
        raise ValueError("trajectory is empty")
    if fmt == "csv":
        return trajectory_csv(traj)
    if fmt == "json":
        return trajectory_json(traj)
    raise ValueError(f"unknown trajectory format {fmt!r}")


def trajectory_from_json(data: bytes | str) -> Trajectory:
    doc = json.loads(data)
    if doc.get("format") != TRAJECTORY_FORMAT:
        raise ValueError("not a trajectory export")
    ps = doc["price_signal"]
    signal = PriceSignal(
        tuple(ps["base"]),
        tuple(PriceOverride(o["start"], o["end"], tuple(o["prices"])) for o in ps["overrides"]),
    )
    return Trajectory(
        states=np.array([s["V"] for s in doc["states"]], dtype=float),
        indicators=np.array([s["phi"] for s in doc["states"]], dtype=np.int8),
        prices=signal,
        converged=doc["converged"],
        settle_time=doc["settle_time"],
        conv_tol=doc["conv_tol"],
        confirm_window=doc["confirm_window"],
        labels=doc.get("labels"),
    )


def read_trajectory_csv(data: bytes | str) -> tuple[np.ndarray, np.ndarray]:
    """(states, indicators) from a CSV export."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    n = (len(header) - 1) // 2
    states = np.array([[float(x) for x in r[1 : n + 1]] for r in body])
    phis = np.array([[int(x) for x in r[n + 1 :]] for r in body], dtype=np.int8)
    return states, phis


@dataclass(frozen=True)
class TopologySnapshot:
    t: int
    nodes: tuple[tuple[str, float, bool], ...]  # (id, equity value, failed)
    edges: tuple[tuple[str, str, float], ...]  # (owner i, owned j, C_ij)


def topology_snapshot(net: FinancialNetwork, V, t: int = 0) -> TopologySnapshot:
    V = np.asarray(V, dtype=float)
    if V.shape != (net.n,):
        raise LengthMismatch(f"state has shape {V.shape}, expected ({net.n},)")
    ids = net.node_ids()
    phi = failure_indicator(V, net.v_threshold)
    nodes = tuple((ids[i], float(V[i]), bool(phi[i])) for i in range(net.n))
    rows, cols = np.nonzero(net.C)
    edges = tuple((ids[i], ids[j], float(net.C[i, j])) for i, j in zip(rows.tolist(), cols.tolist()))
    return TopologySnapshot(t, nodes, edges)


def _dq(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_topology(net: FinancialNetwork, V, fmt: str = "dot", t: int = 0, name: str = "network") -> bytes:
    """Weighted digraph with an edge i -> j for every C_ij > 0.

    Healthy nodes are blue, failed nodes red.
    """
    snap = topology_snapshot(net, V, t)
    if fmt == "json":
        doc = {
            "t": snap.t,
            "nodes": [{"id": i, "V": v, "failed": f} for i, v, f in snap.nodes],
            "edges": [{"source": a, "target": b, "weight": w} for a, b, w in snap.edges],
        }
        return (json.dumps(doc, indent=1) + "\n").encode("utf-8")
    if fmt != "dot":
        raise ValueError(f"unknown topology format {fmt!r}")
    lines = [f"digraph {_dq(f'{name}_t{t}')} {{", "  node [shape=circle, style=filled];"]
    for nid, v, failed in snap.nodes:
        cls = "failed" if failed else "healthy"
        color = "red" if failed else "blue"
        lines.append(
            f"  {_dq(nid)} [label={_dq(nid)}, class={_dq(cls)}, value={_dq(fmt_num(v))}, fillcolor={color}];"
        )
    for a, b, w in snap.edges:
        lines.append(f"  {_dq(a)} -> {_dq(b)} [weight={_dq(fmt_num(w))}, label={_dq(fmt_num(w))}];")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_artifact(path: str | Path, data: bytes) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror}") from None
    return path
