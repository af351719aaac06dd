"""Golden hash_dv values from Python's SHAKE128, independent of OpenSSL.

Serialization: bit r of the deviation vector is bit r%8 of byte r//8.
Prints (width, set bits, u24) rows for test_coverage.cpp.
"""
import hashlib


def serialize(width, bits):
    out = bytearray((width + 7) // 8)
    for r in bits:
        out[r // 8] |= 1 << (r % 8)
    return bytes(out)


def u24(data):
    d = hashlib.shake_128(data).digest(3)
    return d[0] | d[1] << 8 | d[2] << 16


CASES = [
    (8, []),
    (1, []),
    (1, [0]),
    (16, []),
    (20, [0, 9, 19]),
    (64, [63]),
    (300, [r for r in range(300) if r % 7 == 0]),
]

for width, bits in CASES:
    print(f"{width} {bits} 0x{u24(serialize(width, bits)):06x}")
