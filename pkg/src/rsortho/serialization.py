"""JSON representation of channels, surface configurations and reports.

Complex matrices are nested lists of ``[re, im]`` pairs, row by row.  A
channel set looks like::

    {"m": 4, "k": 2, "n": 8, "e0": 1.0,
     "h0": [[[re, im], ...], ...], "h1": ..., "h2": ...}

A surface configuration is ``{"kind": "aris", "values": ...}``: a list of
reals (RIS phases), a list of ``[re, im]`` pairs (ARIS) or a matrix (FRIS).
"""
import json

import numpy as np

from .channel import ChannelSet
from .surface import RsConfig, SurfaceKind


def encode_complex(a):
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(data):
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return np.zeros(0, dtype=np.complex128)
    if arr.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def channel_to_dict(cs):
    return {
        "m": cs.m,
        "k": cs.k,
        "n": cs.n,
        "e0": cs.e0,
        "h0": encode_complex(cs.h0),
        "h1": encode_complex(cs.h1),
        "h2": encode_complex(cs.h2),
    }


def channel_from_dict(d):
    m, k, n = int(d["m"]), int(d["k"]), int(d["n"])
    h0 = decode_complex(d["h0"]).reshape(m, k)
    h1 = decode_complex(d["h1"]).reshape(m, n)
    h2 = decode_complex(d["h2"]).reshape(n, k)
    return ChannelSet(h0, h1, h2, float(d["e0"]))


def config_to_dict(cfg):
    if cfg.kind is SurfaceKind.RIS:
        values = [float(x) for x in cfg.values]
    else:
        values = encode_complex(cfg.values)
    return {"kind": cfg.kind.value, "values": values}


def config_from_dict(d):
    kind = SurfaceKind.parse(d["kind"])
    if kind is SurfaceKind.RIS:
        return RsConfig.ris(np.asarray(d["values"], dtype=float))
    return RsConfig(kind, decode_complex(d["values"]))


def report_to_dict(report):
    out = {
        "kind": report.kind.value,
        "pilot_slots_used": int(report.pilot_slots_used),
        "residual": float(report.residual),
        "ledger": [[step, int(n)] for step, n in report.ledger],
        "h0_hat": encode_complex(report.h0_hat),
        "config": config_to_dict(report.config),
    }
    for name in ("cascade_hat", "h1_hat", "h2_hat"):
        value = getattr(report, name)
        if value is not None:
            out[name] = encode_complex(value)
    return out


def dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def load(path):
    with open(path) as fh:
        return json.load(fh)
