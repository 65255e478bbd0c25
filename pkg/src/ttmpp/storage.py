"""Reading, writing, and storing instances, scenarios, and solutions.

Two interchange formats are supported for instances:

* ``json`` — one document with top-level keys ``schema_version``,
  ``metadata``, ``courses``, ``faculty``, ``slots``, ``conflicts``, ``W``
  (rows per faculty member, columns per slot), ``alpha`` (rows per course,
  columns per faculty member), ``C`` (courses x faculty), ``M`` (courses x
  slots) and ``X_triples`` (sparse obsolete assignments).
* ``csv_bundle`` — a zip archive of per-matrix CSV files named
  courses.csv, faculty.csv, slots.csv, conflicts.csv, W.csv, alpha.csv,
  C.csv, M.csv, X.csv, with header rows naming ids; dimensions are
  cross-validated against the entity files.

The scenario store is a flat directory of JSON files plus an index;
mutations take a per-store file lock and write via temp-file-then-rename
so a crash never leaves a half-written entry.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import zipfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from filelock import FileLock

from .errors import InstanceFormatError, NotFoundError, StoreError
from .instance import (
    ConflictPair,
    Course,
    FacultyMember,
    Instance,
    PenaltyOverride,
    Scenario,
    SectionDelta,
    TimeSlot,
    WeightOverride,
    validate_instance,
)
from .solver import Solution, SolveStats

INSTANCE_SCHEMA_VERSION = 1
SCENARIO_SCHEMA_VERSION = 1
SOLUTION_SCHEMA_VERSION = 1

FORMAT_JSON = "json"
FORMAT_CSV_BUNDLE = "csv_bundle"

CSV_FILES = ("courses.csv", "faculty.csv", "slots.csv", "conflicts.csv",
             "W.csv", "alpha.csv", "C.csv", "M.csv", "X.csv")


@dataclass(frozen=True)
class InstanceDocument:
    instance: Instance
    name: str = ""
    description: str = ""
    created_at: str = ""
    schema_version: int = INSTANCE_SCHEMA_VERSION


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# -- json ----------------------------------------------------------------


def document_to_dict(doc: InstanceDocument) -> dict:
    inst = doc.instance
    return {
        "schema_version": doc.schema_version,
        "metadata": {
            "name": doc.name,
            "description": doc.description,
            "created_at": doc.created_at or _now(),
        },
        "courses": [{"id": c.id, "label": c.label, "load_units": c.load_units}
                    for c in inst.courses],
        "faculty": [{"id": f.id, "label": f.label,
                     "load_min": f.load_min, "load_max": f.load_max}
                    for f in inst.faculty],
        "slots": [{"id": s.id, "label": s.label} for s in inst.slots],
        "conflicts": sorted([p.slot_a, p.slot_b] for p in inst.conflicts),
        "W": inst.preferences.tolist(),
        "alpha": inst.swap_penalties.tolist(),
        "C": inst.eligibility.astype(int).tolist(),
        "M": inst.demand.astype(int).tolist(),
        "X_triples": sorted(
            [inst.courses[i].id, inst.faculty[j].id, inst.slots[t].id]
            for i, j, t in np.argwhere(inst.obsolete_schedule == 1)),
    }


def _matrix(doc: dict, key: str, shape: tuple[int, int], file: str) -> np.ndarray:
    raw = doc.get(key)
    if not isinstance(raw, list) or len(raw) != shape[0]:
        raise InstanceFormatError(
            f"{key} must have {shape[0]} rows", file=file, column=key)
    out = np.zeros(shape)
    for r, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != shape[1]:
            raise InstanceFormatError(
                f"{key} row has {len(row) if isinstance(row, list) else 'no'} "
                f"columns, expected {shape[1]}", file=file, row=r, column=key)
        for cidx, value in enumerate(row):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise InstanceFormatError(
                    f"non-numeric cell {value!r} in {key}",
                    file=file, row=r, column=cidx)
            out[r, cidx] = value
    return out


def document_from_dict(doc: dict, *, file: str = "<json>",
                       enforce_validation: bool = True) -> InstanceDocument:
    version = doc.get("schema_version")
    if version != INSTANCE_SCHEMA_VERSION:
        raise InstanceFormatError(
            f"unknown schema_version {version!r}", file=file)
    try:
        courses = [Course(c["id"], c.get("label", c["id"]),
                          float(c.get("load_units", 1.0)))
                   for c in doc["courses"]]
        faculty = [FacultyMember(f["id"], f.get("label", f["id"]),
                                 float(f["load_min"]), float(f["load_max"]))
                   for f in doc["faculty"]]
        slots = [TimeSlot(s["id"], s.get("label", s["id"]))
                 for s in doc["slots"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed entity list: {exc}", file=file)

    ni, nj, nt = len(courses), len(faculty), len(slots)
    course_idx = {c.id: i for i, c in enumerate(courses)}
    faculty_idx = {f.id: j for j, f in enumerate(faculty)}
    slot_idx = {s.id: t for t, s in enumerate(slots)}
    if len(course_idx) != ni or len(faculty_idx) != nj or len(slot_idx) != nt:
        raise InstanceFormatError("duplicated id in entity lists", file=file)

    conflicts = set()
    for pair in doc.get("conflicts", []):
        if len(pair) != 2 or pair[0] not in slot_idx or pair[1] not in slot_idx:
            raise InstanceFormatError(
                f"conflict pair {pair!r} names unknown slots", file=file)
        conflicts.add(ConflictPair(pair[0], pair[1]))

    x = np.zeros((ni, nj, nt), dtype=np.int8)
    for row, triple in enumerate(doc.get("X_triples", [])):
        try:
            ci, fj, st = triple
            x[course_idx[ci], faculty_idx[fj], slot_idx[st]] = 1
        except (KeyError, ValueError, TypeError):
            raise InstanceFormatError(
                f"bad assignment triple {triple!r}",
                file=file, row=row, column="X_triples")

    instance = Instance(
        courses=courses, faculty=faculty, slots=slots,
        conflicts=frozenset(conflicts), obsolete_schedule=x,
        preferences=_matrix(doc, "W", (nj, nt), file),
        swap_penalties=_matrix(doc, "alpha", (ni, nj), file),
        demand=_matrix(doc, "M", (ni, nt), file).astype(np.int64),
        eligibility=_matrix(doc, "C", (ni, nj), file).astype(np.int8))

    if enforce_validation:
        report = validate_instance(instance)
        if not report.ok:
            raise InstanceFormatError(
                "instance fails validation: " + "; ".join(report.messages()),
                file=file)

    meta = doc.get("metadata", {})
    return InstanceDocument(instance=instance, name=meta.get("name", ""),
                            description=meta.get("description", ""),
                            created_at=meta.get("created_at", ""),
                            schema_version=version)


# -- csv bundle ----------------------------------------------------------


def _csv_text(rows: list[list]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerows(rows)
    return out.getvalue()


def _fnum(value) -> str:
    """Exact decimal text for a float (round-trips bit-for-bit)."""
    return repr(float(value))


def _bundle_files(instance: Instance) -> dict[str, str]:
    slot_ids = [s.id for s in instance.slots]
    faculty_ids = [f.id for f in instance.faculty]
    files = {
        "courses.csv": _csv_text(
            [["id", "label", "load_units"]]
            + [[c.id, c.label, _fnum(c.load_units)] for c in instance.courses]),
        "faculty.csv": _csv_text(
            [["id", "label", "load_min", "load_max"]]
            + [[f.id, f.label, _fnum(f.load_min), _fnum(f.load_max)]
               for f in instance.faculty]),
        "slots.csv": _csv_text(
            [["id", "label"]] + [[s.id, s.label] for s in instance.slots]),
        "conflicts.csv": _csv_text(
            [["slot_a", "slot_b"]]
            + sorted([p.slot_a, p.slot_b] for p in instance.conflicts)),
        "W.csv": _csv_text(
            [["faculty_id"] + slot_ids]
            + [[f.id] + [_fnum(v) for v in row]
               for f, row in zip(instance.faculty, instance.preferences.tolist())]),
        "alpha.csv": _csv_text(
            [["course_id"] + faculty_ids]
            + [[c.id] + [_fnum(v) for v in row]
               for c, row in zip(instance.courses, instance.swap_penalties.tolist())]),
        "C.csv": _csv_text(
            [["course_id"] + faculty_ids]
            + [[c.id] + [str(int(v)) for v in row]
               for c, row in zip(instance.courses, instance.eligibility.tolist())]),
        "M.csv": _csv_text(
            [["course_id"] + slot_ids]
            + [[c.id] + [str(int(v)) for v in row]
               for c, row in zip(instance.courses, instance.demand.tolist())]),
        "X.csv": _csv_text(
            [["course_id", "faculty_id", "slot_id"]]
            + sorted([instance.courses[i].id, instance.faculty[j].id,
                      instance.slots[t].id]
                     for i, j, t in np.argwhere(instance.obsolete_schedule == 1))),
    }
    return files


def _parse_csv(name: str, text: str) -> list[list[str]]:
    return [row for row in csv.reader(io.StringIO(text)) if row]


def _numeric(value: str, file: str, row: int, column) -> float:
    try:
        return float(value)
    except ValueError:
        raise InstanceFormatError(f"non-numeric cell {value!r}",
                                  file=file, row=row, column=column)


def _matrix_from_csv(files: dict[str, str], name: str, row_ids: list[str],
                     col_ids: list[str], row_kind: str) -> np.ndarray:
    rows = _parse_csv(name, files[name])
    header = rows[0]
    if header[1:] != col_ids:
        raise InstanceFormatError(
            f"column header mismatch: expected {col_ids}, got {header[1:]}",
            file=name, row=0)
    body = rows[1:]
    if [r[0] for r in body] != row_ids:
        raise InstanceFormatError(
            f"{row_kind} rows do not match the entity file", file=name)
    out = np.zeros((len(row_ids), len(col_ids)))
    for r, row in enumerate(body):
        if len(row) != len(col_ids) + 1:
            raise InstanceFormatError(
                f"expected {len(col_ids) + 1} cells, got {len(row)}",
                file=name, row=r + 1)
        for cidx, value in enumerate(row[1:]):
            out[r, cidx] = _numeric(value, name, r + 1, header[1 + cidx])
    return out


def bundle_from_files(files: dict[str, str], *,
                      enforce_validation: bool = True) -> Instance:
    missing = [name for name in CSV_FILES if name not in files]
    if missing:
        raise InstanceFormatError(
            f"csv bundle is missing required files: {', '.join(missing)}")

    rows = _parse_csv("courses.csv", files["courses.csv"])
    courses = [Course(r[0], r[1], float(r[2])) for r in rows[1:]]
    rows = _parse_csv("faculty.csv", files["faculty.csv"])
    faculty = [FacultyMember(r[0], r[1], float(r[2]), float(r[3]))
               for r in rows[1:]]
    rows = _parse_csv("slots.csv", files["slots.csv"])
    slots = [TimeSlot(r[0], r[1]) for r in rows[1:]]

    course_ids = [c.id for c in courses]
    faculty_ids = [f.id for f in faculty]
    slot_ids = [s.id for s in slots]
    course_idx = {cid: i for i, cid in enumerate(course_ids)}
    faculty_idx = {fid: j for j, fid in enumerate(faculty_ids)}
    slot_idx = {sid: t for t, sid in enumerate(slot_ids)}

    conflicts = set()
    for r, row in enumerate(_parse_csv("conflicts.csv", files["conflicts.csv"])[1:]):
        if len(row) != 2 or row[0] not in slot_idx or row[1] not in slot_idx:
            raise InstanceFormatError(f"bad conflict pair {row!r}",
                                      file="conflicts.csv", row=r + 1)
        conflicts.add(ConflictPair(row[0], row[1]))

    w = _matrix_from_csv(files, "W.csv", faculty_ids, slot_ids, "faculty")
    alpha = _matrix_from_csv(files, "alpha.csv", course_ids, faculty_ids, "course")
    c_mat = _matrix_from_csv(files, "C.csv", course_ids, faculty_ids, "course")
    m_mat = _matrix_from_csv(files, "M.csv", course_ids, slot_ids, "course")

    x = np.zeros((len(courses), len(faculty), len(slots)), dtype=np.int8)
    for r, row in enumerate(_parse_csv("X.csv", files["X.csv"])[1:]):
        try:
            x[course_idx[row[0]], faculty_idx[row[1]], slot_idx[row[2]]] = 1
        except (KeyError, IndexError):
            raise InstanceFormatError(f"bad assignment triple {row!r}",
                                      file="X.csv", row=r + 1)

    instance = Instance(courses=courses, faculty=faculty, slots=slots,
                        conflicts=frozenset(conflicts), obsolete_schedule=x,
                        preferences=w, swap_penalties=alpha,
                        demand=m_mat.astype(np.int64),
                        eligibility=c_mat.astype(np.int8))
    if enforce_validation:
        report = validate_instance(instance)
        if not report.ok:
            raise InstanceFormatError(
                "instance fails validation: " + "; ".join(report.messages()))
    return instance


# -- unified entry points -------------------------------------------------


def serialize_instance(instance: Instance, format: str = FORMAT_JSON, *,
                       name: str = "", description: str = "",
                       created_at: str = "") -> bytes:
    if format == FORMAT_JSON:
        doc = InstanceDocument(instance=instance, name=name,
                               description=description,
                               created_at=created_at or _now())
        return (json.dumps(document_to_dict(doc), indent=2) + "\n").encode()
    if format == FORMAT_CSV_BUNDLE:
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            for fname, text in _bundle_files(instance).items():
                archive.writestr(fname, text)
        return buffer.getvalue()
    raise ValueError(f"unknown instance format {format!r}")


def parse_instance(data: bytes, format: str = FORMAT_JSON) -> Instance:
    return parse_document(data, format).instance


def parse_document(data: bytes, format: str = FORMAT_JSON, *,
                   enforce_validation: bool = True) -> InstanceDocument:
    if format == FORMAT_JSON:
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"invalid json: {exc}")
        return document_from_dict(doc, enforce_validation=enforce_validation)
    if format == FORMAT_CSV_BUNDLE:
        try:
            with zipfile.ZipFile(io.BytesIO(data)) as archive:
                files = {name: archive.read(name).decode()
                         for name in archive.namelist()}
        except zipfile.BadZipFile as exc:
            raise InstanceFormatError(f"not a zip archive: {exc}")
        return InstanceDocument(instance=bundle_from_files(
            files, enforce_validation=enforce_validation))
    raise ValueError(f"unknown instance format {format!r}")


def load_instance_file(path: str | Path) -> Instance:
    """Dispatch on extension: .zip loads a csv bundle, anything else json."""
    path = Path(path)
    data = path.read_bytes()
    format = FORMAT_CSV_BUNDLE if path.suffix == ".zip" else FORMAT_JSON
    return parse_instance(data, format)


# -- scenarios -------------------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "schema_version": SCENARIO_SCHEMA_VERSION,
        "name": scenario.name,
        "description": scenario.description,
        "base_instance": scenario.base_instance,
        "section_deltas": [{"course": d.course, "slot": d.slot, "delta": d.delta}
                           for d in scenario.section_deltas],
        "weight_overrides": [{"faculty": o.faculty, "slot": o.slot,
                              "value": o.value}
                             for o in scenario.weight_overrides],
        "penalty_overrides": [{"course": o.course, "faculty": o.faculty,
                               "value": o.value}
                              for o in scenario.penalty_overrides],
    }


def scenario_from_dict(doc: dict) -> Scenario:
    version = doc.get("schema_version")
    if version != SCENARIO_SCHEMA_VERSION:
        raise InstanceFormatError(f"unknown scenario schema_version {version!r}")
    try:
        return Scenario(
            name=doc.get("name", ""),
            description=doc.get("description", ""),
            base_instance=doc.get("base_instance"),
            section_deltas=tuple(
                SectionDelta(d["course"], d["slot"], int(d["delta"]))
                for d in doc.get("section_deltas", [])),
            weight_overrides=tuple(
                WeightOverride(o["faculty"], o["slot"], float(o["value"]))
                for o in doc.get("weight_overrides", [])),
            penalty_overrides=tuple(
                PenaltyOverride(o["course"], o["faculty"], float(o["value"]))
                for o in doc.get("penalty_overrides", [])))
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed scenario: {exc}")


def serialize_scenario(scenario: Scenario) -> bytes:
    return (json.dumps(scenario_to_dict(scenario), indent=2) + "\n").encode()


def parse_scenario(data: bytes) -> Scenario:
    try:
        return scenario_from_dict(json.loads(data))
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid json: {exc}")


# -- solutions ---------------------------------------------------------------


def solution_to_dict(solution: Solution, instance: Instance) -> dict:
    doc = {
        "schema_version": SOLUTION_SCHEMA_VERSION,
        "status": solution.status,
        "objective": solution.objective,
        "change_count": solution.change_count,
        "stats": {
            "nodes": solution.stats.nodes,
            "lp_iterations": solution.stats.lp_iterations,
            "wall_time": solution.stats.wall_time,
            "best_bound": solution.stats.best_bound,
        },
        "p_triples": None,
        "t_aux": None,
    }
    if solution.has_schedule:
        doc["p_triples"] = [
            [instance.courses[i].id, instance.faculty[j].id,
             instance.slots[t].id, int(solution.p[i, j, t])]
            for i, j, t in np.argwhere(solution.p != 0)]
        doc["t_aux"] = [
            [instance.courses[i].id, instance.faculty[j].id,
             int(solution.t_aux[i, j])]
            for i, j in np.argwhere(solution.t_aux != 0)]
    return doc


def solution_from_dict(doc: dict, instance: Instance) -> Solution:
    version = doc.get("schema_version")
    if version != SOLUTION_SCHEMA_VERSION:
        raise InstanceFormatError(f"unknown solution schema_version {version!r}")
    stats = doc.get("stats", {})
    p = t_aux = None
    if doc.get("p_triples") is not None:
        ni, nj, nt = instance.shape
        p = np.zeros((ni, nj, nt), dtype=np.int64)
        for cid, fid, sid, value in doc["p_triples"]:
            p[instance.course_index(cid), instance.faculty_index(fid),
              instance.slot_index(sid)] = int(value)
        t_aux = np.zeros((ni, nj), dtype=np.int64)
        for cid, fid, value in doc.get("t_aux", []):
            t_aux[instance.course_index(cid), instance.faculty_index(fid)] = int(value)
    return Solution(
        status=doc["status"], p=p, t_aux=t_aux,
        objective=doc.get("objective"),
        change_count=doc.get("change_count"),
        stats=SolveStats(nodes=stats.get("nodes", 0),
                         lp_iterations=stats.get("lp_iterations", 0),
                         wall_time=stats.get("wall_time", 0.0),
                         best_bound=stats.get("best_bound")))


def serialize_solution(solution: Solution, instance: Instance) -> bytes:
    return (json.dumps(solution_to_dict(solution, instance), indent=2) + "\n").encode()


def parse_solution(data: bytes, instance: Instance) -> Solution:
    try:
        return solution_from_dict(json.loads(data), instance)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid json: {exc}")


# -- scenario store ----------------------------------------------------------


class ScenarioStore:
    """Directory-backed key-value store for instances and scenarios.

    Ids are monotonic per store ("i-000001", "s-000001", ...) and stable
    across restarts; storing the same payload twice yields two ids.
    Mutations serialize through a per-store file lock; readers need no
    lock because entries are immutable once written.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "instances").mkdir(exist_ok=True)
        (self.root / "scenarios").mkdir(exist_ok=True)
        self._lock = FileLock(str(self.root / ".lock"))
        if not self._index_path.exists():
            with self._lock:
                if not self._index_path.exists():
                    self._write_index({"next_instance": 1, "next_scenario": 1,
                                       "instances": [], "scenarios": {}})

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _read_index(self) -> dict:
        try:
            return json.loads(self._index_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"cannot read store index: {exc}")

    def _write_index(self, index: dict) -> None:
        _atomic_write(self._index_path, json.dumps(index, indent=2).encode())

    # -- instances ------------------------------------------------------

    def put_instance(self, document: InstanceDocument) -> str:
        payload = (json.dumps(document_to_dict(document), indent=2) + "\n").encode()
        with self._lock:
            index = self._read_index()
            instance_id = f"i-{index['next_instance']:06d}"
            index["next_instance"] += 1
            _atomic_write(self.root / "instances" / f"{instance_id}.json", payload)
            index["instances"].append(instance_id)
            self._write_index(index)
        return instance_id

    def get_instance(self, instance_id: str) -> InstanceDocument:
        path = self.root / "instances" / f"{instance_id}.json"
        if not path.exists():
            raise NotFoundError(f"unknown instance id {instance_id!r}")
        return document_from_dict(json.loads(path.read_text()),
                                  file=str(path))

    def list_instances(self) -> list[str]:
        return list(self._read_index()["instances"])

    # -- scenarios ------------------------------------------------------

    def store_scenario(self, scenario: Scenario) -> str:
        if not scenario.base_instance:
            raise StoreError("scenario must reference a base instance id")
        with self._lock:
            index = self._read_index()
            if scenario.base_instance not in index["instances"]:
                raise NotFoundError(
                    f"unknown base instance {scenario.base_instance!r}")
            scenario_id = f"s-{index['next_scenario']:06d}"
            index["next_scenario"] += 1
            _atomic_write(self.root / "scenarios" / f"{scenario_id}.json",
                          serialize_scenario(scenario))
            index["scenarios"][scenario_id] = scenario.base_instance
            self._write_index(index)
        return scenario_id

    def get_scenario(self, scenario_id: str) -> Scenario:
        path = self.root / "scenarios" / f"{scenario_id}.json"
        if not path.exists():
            raise NotFoundError(f"unknown scenario id {scenario_id!r}")
        return parse_scenario(path.read_bytes())

    def delete_scenario(self, scenario_id: str) -> None:
        with self._lock:
            index = self._read_index()
            if scenario_id not in index["scenarios"]:
                raise NotFoundError(f"unknown scenario id {scenario_id!r}")
            del index["scenarios"][scenario_id]
            (self.root / "scenarios" / f"{scenario_id}.json").unlink(missing_ok=True)
            self._write_index(index)

    def list_scenarios(self) -> dict[str, str]:
        """scenario id -> base instance id."""
        return dict(self._read_index()["scenarios"])


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise StoreError(f"cannot write {path}: {exc}")
