"""Contact dataset: scenario matrix, gated samples, CSV IO."""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import yaml

from ..errors import ConfigError, EmptyDataset
from .harness import run_scenario
from .scenario import Preplanned, scenario_from_dict
from .units import vec_si

FEATURES = ("fx", "fy", "mz", "d1", "d2", "d3")
CSV_HEADER = FEATURES + ("label", "config_id", "scenario_id")
COLLISION_LABEL = 0  # labels 1..3 are clamping of that chain

# three assembly poses of the symmetric robot (x, y in m, phi in rad)
DEFAULT_CONFIGS = (
    (0.0, 0.0, np.deg2rad(20.0)),
    (0.03, -0.02, np.deg2rad(-10.0)),
    (-0.03, 0.03, np.deg2rad(5.0)),
)


def default_contacts():
    """Three clampings, six link collisions and one platform collision."""
    out = [{"type": "clamping", "chain": i} for i in (1, 2, 3)]
    for i in (1, 2, 3):
        out.append({"type": "collision", "locations": [{"chain": i, "link": 1, "s": 0.7}]})
        out.append({"type": "collision", "locations": [{"chain": i, "link": 2, "s": 0.5}]})
    out.append({"type": "collision", "locations": [{"link": "platform", "point": [0.1, 0.0]}]})
    return out


DEFAULT_MATRIX = {
    "speed": 0.1,
    "contact_distance": 0.02,
    "overtravel": 0.015,
    "dwell": 2.0,
}


@dataclass
class MatrixEntry:
    scenario: object
    label: int
    config_id: int
    scenario_id: int


def label_of(contact_spec):
    return contact_spec.chain if contact_spec.type == "clamping" else COLLISION_LABEL


def build_matrix(matrix=None):
    """Scenario list from a matrix description (dict, see README)."""
    m = {**DEFAULT_MATRIX, **(matrix or {})}
    base = dict(m.get("base", {}))
    configs = m.get("configs", DEFAULT_CONFIGS)
    contacts = m.get("contacts") or default_contacts()
    speed, dist = m["speed"], m["contact_distance"]
    entries = []
    sid = 0
    for cid, pose in enumerate(configs):
        for c in contacts:
            d = {**base,
                 "initial_pose": list(vec_si(pose, 3, "configs")) if not isinstance(pose, dict) else pose,
                 "task": {"speed": speed, "distance": float(dist) + float(m["overtravel"]),
                          "dwell": m["dwell"], "return_to_start": True},
                 "contact": {**c, "contact_distance": dist},
                 "planner": {**dict(base.get("planner", {})), "strategy": "none"},
                 "name": f"cfg{cid}-{sid}", "seed": int(m.get("seed", 0)) + sid}
            s = scenario_from_dict(d)
            # press, dwell and return, plus a short tail
            pre = Preplanned(s)
            s.duration = pre.t_back + pre.back.duration + 0.05
            entries.append(MatrixEntry(s, label_of(s.contact), cid, sid))
            sid += 1
    return entries


def load_matrix(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return build_matrix(data)


@dataclass
class ContactDataset:
    X: np.ndarray
    label: np.ndarray
    config_id: np.ndarray
    scenario_id: np.ndarray

    def __len__(self):
        return len(self.label)

    def subset(self, mask):
        return ContactDataset(self.X[mask], self.label[mask], self.config_id[mask], self.scenario_id[mask])

    @property
    def is_clamping(self):
        return (self.label != COLLISION_LABEL).astype(int)

    def counts(self):
        vals, n = np.unique(self.label, return_counts=True)
        return dict(zip(vals.tolist(), n.tolist()))


def gated_samples(trace, thresholds):
    """Rows where some |F_hat| component reaches eps_r and the LoA distances exist."""
    F = trace.array(("Fhat_x", "Fhat_y", "Fhat_phi"))
    d = trace.array(("d1", "d2", "d3"))
    keep = np.any(np.abs(F) >= thresholds.eps_r, axis=1) & np.all(np.isfinite(d), axis=1)
    return np.hstack([F, d])[keep]


def _run_entry(entry):
    res = run_scenario(entry.scenario)
    return gated_samples(res.trace, entry.scenario.planner.thresholds)


def generate_dataset(entries, workers=1):
    if workers > 1 and len(entries) > 1:
        with ProcessPoolExecutor(workers) as ex:
            blocks = list(ex.map(_run_entry, entries))
    else:
        blocks = [_run_entry(e) for e in entries]
    X, lab, cid, sid = [], [], [], []
    for e, b in zip(entries, blocks):
        X.append(b)
        lab.append(np.full(len(b), e.label))
        cid.append(np.full(len(b), e.config_id))
        sid.append(np.full(len(b), e.scenario_id))
    return ContactDataset(np.vstack(X) if X else np.zeros((0, 6)), np.concatenate(lab).astype(int),
                          np.concatenate(cid).astype(int), np.concatenate(sid).astype(int))


def write_dataset(ds, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for x, l, c, s in zip(ds.X, ds.label, ds.config_id, ds.scenario_id):
            w.writerow([repr(float(v)) for v in x] + [int(l), int(c), int(s)])


def read_dataset(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ConfigError(f"{path}: expected header {','.join(CSV_HEADER)}")
    body = rows[1:]
    if not body:
        raise EmptyDataset(f"{path} has no samples")
    try:
        A = np.array(body, dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return ContactDataset(A[:, :6], A[:, 6].astype(int), A[:, 7].astype(int), A[:, 8].astype(int))


__all__ = ["ContactDataset", "build_matrix", "load_matrix", "generate_dataset", "gated_samples",
           "write_dataset", "read_dataset", "FEATURES", "CSV_HEADER", "DEFAULT_CONFIGS"]
