#!/usr/bin/env python3
"""Encoder used to produce cipher.bin (key withheld, but it is one byte)."""
import sys

def encode(data: bytes, key: int) -> bytes:
    return bytes(b ^ key for b in data)

if __name__ == "__main__":
    key = int(sys.argv[1])
    sys.stdout.buffer.write(encode(sys.stdin.buffer.read(), key))
