#!/usr/bin/env python3
"""Independent encoder for the golden wire vectors (struct + zlib)."""
import struct
import sys
import zlib


def seal(body: bytes) -> bytes:
    return body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def telemetry(seq, t_ms, meas, breaker, soc=None):
    version = 0x81 if soc is not None else 0x01
    body = b"MG" + bytes([version, 0x01]) + struct.pack(">IQ", seq, t_ms) + struct.pack(">5d", *meas)
    if soc is not None:
        body += struct.pack(">d", soc)
    return seal(body + bytes([breaker]))


def command(seq, connect, setpoint):
    return seal(b"MG" + bytes([0x01, 0x02]) + struct.pack(">IBd", seq, connect, setpoint))


def ack(seq):
    return seal(b"MG" + bytes([0x01, 0x03]) + struct.pack(">I", seq))


VECTORS = [
    ("telemetry_zero", telemetry(0, 0, (0.0,) * 5, 0)),
    ("telemetry_grid", telemetry(1, 100, (100.0, 1250.0, 60.5, 1410.5, 119.25), 0)),
    ("telemetry_islanded", telemetry(0xDEADBEEF, 60000, (-648.14, 1250.0, 0.0, 601.86, 119.628), 1)),
    ("telemetry_soc", telemetry(101, 10000, (100.0, 1250.0, 60.126666666666665, 1410.1266666666666, 118.868), 1, 35.74)),
    ("command_connect", command(7, 1, 800.0)),
    ("command_shed", command(8, 0, 0.0)),
    ("ack", ack(42)),
]

if __name__ == "__main__":
    out = sys.stdout
    for name, data in VECTORS:
        out.write(f"{name} {data.hex()}\n")
