#!/usr/bin/env python3
"""Reader and writer for DEX1 shards, independent of the C++ engine.

Records are plain dicts. Doubles travel through JSON as float.hex strings so
round trips keep every bit:

    python3 dexshard.py encode golden.json out.shard
    python3 dexshard.py decode in.shard out.json
    python3 dexshard.py golden --n 32 --seed 0 golden.json
"""

import argparse
import json
import random
import struct
import sys
import zlib

MAGIC = b"DEX1"
VERSION = 1
MAX_RECORDS = 65536
HEADER = struct.Struct("<4sIQQIQI")
TASKS = ("grasp", "articulation")
STAGES = ("reach", "grasp", "post")


class ShardError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Writer:
    def __init__(self):
        self.parts = []

    def pack(self, fmt, *values):
        self.parts.append(struct.pack("<" + fmt, *values))

    def string(self, s):
        b = s.encode("utf-8")
        self.pack("I", len(b))
        self.parts.append(b)

    def pose(self, p, dof):
        if len(p["joints"]) != dof:
            raise ShardError("dimension_mismatch", "pose dof does not match the shard")
        self.pack("3d", *p["translation"])
        self.pack("3d", *p["euler"])
        self.pack("%dd" % dof, *p["joints"])


class _Reader:
    def __init__(self, data):
        self.data = data
        self.at = 0

    def unpack(self, fmt):
        s = struct.Struct("<" + fmt)
        if self.at + s.size > len(self.data):
            raise ShardError("format_error", "shard record runs past the payload")
        v = s.unpack_from(self.data, self.at)
        self.at += s.size
        return v

    def string(self):
        (n,) = self.unpack("I")
        if self.at + n > len(self.data):
            raise ShardError("format_error", "shard record runs past the payload")
        b = self.data[self.at:self.at + n]
        self.at += n
        return b.decode("utf-8", errors="surrogateescape")

    def pose(self, dof):
        t = list(self.unpack("3d"))
        e = list(self.unpack("3d"))
        j = list(self.unpack("%dd" % dof))
        return {"translation": t, "euler": e, "joints": j}


def encode(records, hand_hash, dof):
    if len(records) > MAX_RECORDS:
        raise ShardError("invalid_argument", "a shard holds at most %d records" % MAX_RECORDS)
    w = _Writer()
    for r in records:
        w.pack("B", TASKS.index(r["task"]))
        w.string(r["object"]["id"])
        w.string(r["object"]["asset"])
        w.pack("d", r["object"]["scale"])
        w.pose(r["keyframe"], dof)
        cond = r.get("condition")
        w.pack("Bi", 0 if cond is None else 1, -1 if cond is None else cond)
        m = r.get("metrics")
        w.pack("B", 0 if m is None else 1)
        if m is not None:
            w.pack("ddiB", m["q1"], m["max_penetration"], m["contact_count"], 1 if m["feasible"] else 0)
        p = r["provenance"]
        w.string(p["generator"])
        w.pack("Q", p["seed"])
        w.string(p["engine_version"])
        t = r.get("trajectory")
        if t is None:
            w.pack("I", 0)
        else:
            w.pack("Id", len(t["frames"]), t["dt"])
            for f in t["frames"]:
                w.pack("B", STAGES.index(f["stage"]))
                w.pose(f, dof)
    payload = b"".join(w.parts)
    header = HEADER.pack(MAGIC, VERSION, len(records), hand_hash, dof, len(payload), zlib.crc32(payload))
    return header + payload


def decode(data, expected_hash=None, expected_dof=None):
    if len(data) < HEADER.size:
        if data[:4] == MAGIC[:len(data[:4])]:
            raise ShardError("checksum_mismatch", "shard is truncated inside the header")
        raise ShardError("format_error", "not a DEX1 shard")
    magic, version, count, hand_hash, dof, size, crc = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ShardError("format_error", "not a DEX1 shard")
    if version != VERSION:
        raise ShardError("version_mismatch", "shard version %d is not supported" % version)
    payload = data[HEADER.size:]
    if len(payload) != size:
        raise ShardError("checksum_mismatch", "shard payload length does not match the header")
    if zlib.crc32(payload) != crc:
        raise ShardError("checksum_mismatch", "shard payload checksum does not match")
    if expected_hash is not None and hand_hash != expected_hash:
        raise ShardError("dimension_mismatch", "shard was written for another hand")
    if expected_dof is not None and dof != expected_dof:
        raise ShardError("dimension_mismatch", "shard pose dof does not match")
    if count > MAX_RECORDS:
        raise ShardError("format_error", "shard record count exceeds the limit")
    rd = _Reader(payload)
    records = []
    for _ in range(count):
        (task,) = rd.unpack("B")
        if task >= len(TASKS):
            raise ShardError("format_error", "unknown task")
        r = {"task": TASKS[task]}
        oid, asset = rd.string(), rd.string()
        (scale,) = rd.unpack("d")
        r["object"] = {"id": oid, "asset": asset, "scale": scale}
        r["keyframe"] = rd.pose(dof)
        has_cond, cond = rd.unpack("Bi")
        if has_cond > 1:
            raise ShardError("format_error", "bad condition flag")
        r["condition"] = cond if has_cond else None
        (has_metrics,) = rd.unpack("B")
        if has_metrics > 1:
            raise ShardError("format_error", "bad metrics flag")
        r["metrics"] = None
        if has_metrics:
            q1, pen, contacts, feasible = rd.unpack("ddiB")
            if feasible > 1:
                raise ShardError("format_error", "bad feasibility flag")
            r["metrics"] = {"q1": q1, "max_penetration": pen, "contact_count": contacts, "feasible": bool(feasible)}
        gen = rd.string()
        (seed,) = rd.unpack("Q")
        r["provenance"] = {"generator": gen, "seed": seed, "engine_version": rd.string()}
        (frames,) = rd.unpack("I")
        r["trajectory"] = None
        if frames:
            (dt,) = rd.unpack("d")
            fs = []
            for _ in range(frames):
                (stage,) = rd.unpack("B")
                if stage >= len(STAGES):
                    raise ShardError("format_error", "unknown trajectory stage tag")
                f = rd.pose(dof)
                f["stage"] = STAGES[stage]
                fs.append(f)
            r["trajectory"] = {"dt": dt, "frames": fs}
        records.append(r)
    if rd.at != len(payload):
        raise ShardError("format_error", "shard payload has trailing bytes")
    header = {"version": version, "count": count, "hand_hash": hand_hash, "dof": dof,
              "payload_size": size, "crc32": crc}
    return header, records


# JSON view with float.hex doubles

_DOUBLE_KEYS = {"scale", "translation", "euler", "joints", "q1", "max_penetration", "dt"}


def _map_doubles(obj, fn, key=None):
    if isinstance(obj, dict):
        return {k: _map_doubles(v, fn, k) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_map_doubles(v, fn, key) for v in obj]
    if key in _DOUBLE_KEYS:
        return fn(obj)
    return obj


def to_hex_json(records):
    return _map_doubles(records, float.hex)


def from_hex_json(records):
    return _map_doubles(records, float.fromhex)


def same_bits(a, b):
    """Structural equality with doubles compared by bit pattern."""
    if isinstance(a, float) and isinstance(b, float):
        return struct.pack("<d", a) == struct.pack("<d", b)
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(same_bits(a[k], b[k]) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(same_bits(x, y) for x, y in zip(a, b))
    return type(a) is type(b) and a == b


def golden(n, seed, dof=9):
    rng = random.Random(seed)
    specials = [0.0, -0.0, float("inf"), -float("inf"), float("nan"), 5e-324, 1.7976931348623157e308, 0.1]

    def d():
        return rng.choice(specials) if rng.random() < 0.2 else rng.uniform(-5, 5)

    def pose():
        return {"translation": [d() for _ in range(3)], "euler": [d() for _ in range(3)],
                "joints": [d() for _ in range(dof)]}

    def text():
        return "".join(rng.choice("abcxyz_-09 é中") for _ in range(rng.randrange(0, 12)))

    records = []
    for i in range(n):
        r = {"task": TASKS[i % 2],
             "object": {"id": text(), "asset": text() + ".obj", "scale": d()},
             "keyframe": pose(),
             "condition": rng.randrange(-2**31, 2**31) if i % 3 else None,
             "metrics": None,
             "provenance": {"generator": rng.choice(["optim", "gen-iter-2", "gen-iter-2-post"]),
                            "seed": rng.getrandbits(64), "engine_version": text()},
             "trajectory": None}
        if i % 4 != 1:
            r["metrics"] = {"q1": d(), "max_penetration": d(), "contact_count": rng.randrange(-2**31, 2**31),
                            "feasible": bool(i % 2)}
        if i % 2 == 0:
            frames = []
            for _ in range(rng.randrange(2, 6)):
                f = pose()
                f["stage"] = rng.choice(STAGES)
                frames.append(f)
            r["trajectory"] = {"dt": d(), "frames": frames}
        records.append(r)
    return {"hand_hash": "%016x" % rng.getrandbits(64), "dof": dof, "records": records}


def _main(argv):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    e = sub.add_parser("encode")
    e.add_argument("golden")
    e.add_argument("shard")
    dcd = sub.add_parser("decode")
    dcd.add_argument("shard")
    dcd.add_argument("out")
    g = sub.add_parser("golden")
    g.add_argument("--n", type=int, default=32)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("out")
    a = ap.parse_args(argv)
    try:
        if a.cmd == "encode":
            with open(a.golden) as f:
                doc = json.load(f)
            data = encode(from_hex_json(doc["records"]), int(doc["hand_hash"], 16), doc["dof"])
            with open(a.shard, "wb") as f:
                f.write(data)
        elif a.cmd == "decode":
            with open(a.shard, "rb") as f:
                header, records = decode(f.read())
            doc = {"hand_hash": "%016x" % header["hand_hash"], "dof": header["dof"], "records": to_hex_json(records)}
            with open(a.out, "w") as f:
                json.dump(doc, f, indent=1, ensure_ascii=False)
        else:
            doc = golden(a.n, a.seed)
            doc["records"] = to_hex_json(doc["records"])
            with open(a.out, "w") as f:
                json.dump(doc, f, indent=1, ensure_ascii=False)
                f.write("\n")
    except ShardError as err:
        print(json.dumps({"error": {"code": err.code, "message": str(err)}}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(_main(sys.argv[1:]))
