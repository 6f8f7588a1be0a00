"""Labelled random streams derived from one master seed.

Adding a new consumer with a new label never perturbs the numbers drawn
by existing consumers.
"""
import hashlib

import numpy as np


def derive_seed(master, label):
    """Derive an unsigned 64-bit seed for the stream called label."""
    digester = hashlib.sha256(f"{int(master)}/{label}".encode("utf-8"))
    return int.from_bytes(digester.digest()[:8], "big")


def rng(master, label):
    return np.random.default_rng(derive_seed(master, label))
