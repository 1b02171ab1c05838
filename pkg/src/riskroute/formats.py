"""Reading and writing graphs and time profiles.

Graph: a directory holding ``nodes.csv`` (``id,lat,lon``) and ``edges.csv``
(``id,tail,head,length_m,speed_limit_mps``).

Profile, CSV flavour: a ``# bin_width=<s> edge_cap=<s>`` comment line, then a
header ``edge_id,day_class,hour,bin_width,offset,p0,p1,...`` and one row per
cell.  ``p<i>`` is the mass at ``offset + i * bin_width``; rows may differ in
length.

Profile, binary flavour (little-endian)::

    b"RRP1" | u32 n_records | f64 bin_width | f64 edge_cap (NaN = none)
    per record: u32 len | utf-8 edge id | u8 day_class (0 weekdays, 1 weekends)
                u8 hour | f64 bin_width | f64 offset | u32 n | n * f64 pmf
"""
import csv
import math
from pathlib import Path
import struct

import numpy as np

from .dist import DiscreteDistribution
from .exceptions import InvalidParameterError, ParseError, ReferentialIntegrityError
from .network import HOURS, DayClass, Edge, Graph, Node, TimeProfile

MAGIC = b"RRP1"
NODE_FIELDS = ("id", "lat", "lon")
EDGE_FIELDS = ("id", "tail", "head", "length_m", "speed_limit_mps")
_DC_CODE = {DayClass.WEEKDAYS: 0, DayClass.WEEKENDS: 1}
_DC_FROM_CODE = {v: k for k, v in _DC_CODE.items()}


def _read_rows(path, fields):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("file is empty", path, 1) from None
        if tuple(header[: len(fields)]) != fields:
            raise ParseError(f"expected header {','.join(fields)}, got {','.join(header)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < len(fields):
                raise ParseError(f"expected {len(fields)} fields, got {len(row)}", path, lineno)
            yield lineno, [c.strip() for c in row]


def _float(text, path, lineno, name):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{name}: not a number: {text!r}", path, lineno) from None
    if not math.isfinite(v):
        raise ParseError(f"{name}: not finite: {text!r}", path, lineno)
    return v


def save_graph(graph, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "nodes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NODE_FIELDS)
        for n in graph.nodes.values():
            w.writerow([n.id, repr(float(n.lat)), repr(float(n.lon))])
    with open(directory / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EDGE_FIELDS)
        for e in graph.edges.values():
            w.writerow([e.id, e.tail, e.head, repr(float(e.length)), repr(float(e.speed_limit))])


def load_graph(directory):
    directory = Path(directory)
    npath, epath = directory / "nodes.csv", directory / "edges.csv"
    for p in (npath, epath):
        if not p.exists():
            raise ParseError("file not found", p)
    nodes = {}
    for lineno, row in _read_rows(npath, NODE_FIELDS):
        nid = row[0]
        if nid in nodes:
            raise ParseError(f"duplicate node id {nid!r}", npath, lineno)
        nodes[nid] = Node(nid, _float(row[1], npath, lineno, "lat"), _float(row[2], npath, lineno, "lon"))
    if not nodes:
        raise ParseError("no nodes", npath)
    edges = {}
    for lineno, row in _read_rows(epath, EDGE_FIELDS):
        eid, tail, head = row[0], row[1], row[2]
        if eid in edges:
            raise ParseError(f"duplicate edge id {eid!r}", epath, lineno)
        for end in (tail, head):
            if end not in nodes:
                raise ReferentialIntegrityError(f"edge {eid!r} references unknown node {end!r}", epath, lineno)
        length = _float(row[3], epath, lineno, "length_m")
        speed = _float(row[4], epath, lineno, "speed_limit_mps")
        if length <= 0 or speed <= 0:
            raise ParseError(f"edge {eid!r}: length and speed limit must be positive", epath, lineno)
        edges[eid] = Edge(eid, tail, head, length, speed)
    return Graph(nodes, edges)


def save_profile(profile, path, fmt=None):
    """Write ``profile``; ``fmt`` is ``csv`` or ``binary`` (default: by suffix)."""
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "binary")
    if fmt == "csv":
        _save_profile_csv(profile, path)
    elif fmt == "binary":
        _save_profile_bin(profile, path)
    else:
        raise InvalidParameterError(f"unknown profile format {fmt!r}")


def load_profile(path, graph=None):
    """Read a profile written by :func:`save_profile`.

    With ``graph`` given, edge ids are checked against it.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    profile = _load_profile_bin(path) if head == MAGIC else _load_profile_csv(path)
    if graph is not None:
        for eid in profile.edge_ids:
            if eid not in graph.edges:
                raise ReferentialIntegrityError(f"profile references unknown edge id {eid!r}", path)
    return profile


def _save_profile_csv(profile, path):
    with open(path, "w", newline="") as fh:
        cap = "none" if profile.edge_cap is None else repr(profile.edge_cap)
        fh.write(f"# bin_width={profile.bin_width!r} edge_cap={cap}\n")
        w = csv.writer(fh)
        w.writerow(["edge_id", "day_class", "hour", "bin_width", "offset", "pmf..."])
        for eid, dc, h, d in profile.items():
            w.writerow([eid, dc.value, h, repr(d.bin_width), repr(d.offset), *map(repr, d.pmf.tolist())])


def _cell_dist(values, bw, offset, path, lineno, memo=None):
    # identical cells (common: fallbacks, shared synthetic shapes) share one object
    key = None
    if memo is not None:
        key = (offset, np.asarray(values, dtype="<f8").tobytes())
        d = memo.get(key)
        if d is not None:
            return d
    try:
        d = DiscreteDistribution(values, bin_width=bw, offset=offset)
    except InvalidParameterError as exc:
        raise ParseError(str(exc), path, lineno) from None
    if key is not None:
        memo[key] = d
    return d


def _assemble(cells, bw, cap, path):
    table = {}
    for (eid, dc), hourly in cells.items():
        missing = [h for h in range(HOURS) if h not in hourly]
        if missing:
            raise ParseError(f"edge {eid!r} ({dc.value}) lacks hours {missing}", path)
        table.setdefault(eid, {})[dc] = [hourly[h] for h in range(HOURS)]
    try:
        return TimeProfile(table, bw, cap)
    except InvalidParameterError as exc:
        raise ParseError(str(exc), path) from None


def _load_profile_csv(path):
    bw = cap = None
    cells, memo = {}, {}
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ParseError("missing '# bin_width=... edge_cap=...' line", path, 1)
        meta = dict(kv.split("=", 1) for kv in first[1:].split() if "=" in kv)
        try:
            bw = float(meta["bin_width"])
            cap = None if meta.get("edge_cap", "none") == "none" else float(meta["edge_cap"])
        except (KeyError, ValueError):
            raise ParseError(f"bad metadata line {first.strip()!r}", path, 1) from None
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:5] != ["edge_id", "day_class", "hour", "bin_width", "offset"]:
            raise ParseError("bad header", path, 2)
        for lineno, row in enumerate(reader, start=3):
            if not row:
                continue
            if len(row) < 6:
                raise ParseError("row has no pmf values", path, lineno)
            eid = row[0]
            try:
                dc = DayClass.parse(row[1])
                hour = int(row[2])
            except (InvalidParameterError, ValueError):
                raise ParseError(f"bad day class/hour {row[1]!r}/{row[2]!r}", path, lineno) from None
            if not 0 <= hour < HOURS:
                raise ParseError(f"hour {hour} out of range", path, lineno)
            rbw = _float(row[3], path, lineno, "bin_width")
            if rbw != bw:
                raise ParseError(f"bin_width {rbw} differs from file bin_width {bw}", path, lineno)
            offset = _float(row[4], path, lineno, "offset")
            values = [_float(v, path, lineno, "pmf") for v in row[5:]]
            slot = cells.setdefault((eid, dc), {})
            if hour in slot:
                raise ParseError(f"duplicate cell {eid!r}/{dc.value}/{hour}", path, lineno)
            slot[hour] = _cell_dist(values, bw, offset, path, lineno, memo)
    return _assemble(cells, bw, cap, path)


def _save_profile_bin(profile, path):
    records = list(profile.items())
    cap = math.nan if profile.edge_cap is None else profile.edge_cap
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Idd", len(records), profile.bin_width, cap))
        for eid, dc, h, d in records:
            raw = eid.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<BBddI", _DC_CODE[dc], h, d.bin_width, d.offset, len(d)))
            fh.write(d.pmf.astype("<f8").tobytes())


def _load_profile_bin(path):
    data = Path(path).read_bytes()
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise ParseError(f"truncated file at byte {pos}", path)
        out = struct.unpack_from(fmt, data, pos)
        pos += size
        return out

    n, bw, cap = take("<Idd")
    cap = None if math.isnan(cap) else cap
    cells, memo = {}, {}
    for rec in range(n):
        (ln,) = take("<I")
        if pos + ln > len(data):
            raise ParseError(f"truncated edge id in record {rec}", path)
        eid = data[pos:pos + ln].decode("utf-8")
        pos += ln
        code, hour, rbw, offset, k = take("<BBddI")
        if code not in _DC_FROM_CODE or hour >= HOURS:
            raise ParseError(f"record {rec}: bad day class/hour {code}/{hour}", path)
        if rbw != bw:
            raise ParseError(f"record {rec}: bin_width {rbw} differs from {bw}", path)
        if pos + 8 * k > len(data):
            raise ParseError(f"record {rec}: truncated pmf", path)
        values = np.frombuffer(data, dtype="<f8", count=k, offset=pos)
        pos += 8 * k
        slot = cells.setdefault((eid, _DC_FROM_CODE[code]), {})
        if hour in slot:
            raise ParseError(f"record {rec}: duplicate cell {eid!r}/{hour}", path)
        slot[hour] = _cell_dist(values, bw, offset, path, f"record {rec}", memo)
    if pos != len(data):
        raise ParseError(f"{len(data) - pos} trailing bytes", path)
    return _assemble(cells, bw, cap, path)
