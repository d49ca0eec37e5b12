"""Seed derivation: every downstream stream is a hash of the master seed and a label path.

``derive_seed(master, "replication", r, s)`` is stable across runs, platforms
and Python hash randomization.
"""
import hashlib


def derive_seed(master: int, *labels) -> int:
    text = "/".join([str(int(master)), *(str(x) for x in labels)])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")
