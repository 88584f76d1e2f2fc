import hashlib
import os
import re
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd


class Singleton(type):
    """
    Allows only one instance of given class (use as metaclass)
    Copied from: https://stackoverflow.com/questions/6760685/
    """
    _instances = {}

    def __call__(cls, *args, **kwargs):
        if cls not in cls._instances:
            cls._instances[cls] = super(Singleton, cls).__call__(*args, **kwargs)
        return cls._instances[cls]

    @classmethod
    def reset(mcs, cls):
        """
        Forgets the instance of given class, next call creates a fresh one
        """
        mcs._instances.pop(cls, None)


def derive_seed(*parts) -> int:
    """
    Derives a 64-bit seed from given parts (root seed, component, purpose, indices...)

    Every random draw in gridfill goes through here, so a partial re-run with the same
    root seed reproduces exactly the draws of a complete run.

    :param parts: anything with a stable str() representation
    :return: unsigned 64-bit integer
    """
    key = "\x1f".join(str(part) for part in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def rng_for(*parts) -> np.random.Generator:
    """
    Returns a numpy Generator seeded by derive_seed(*parts)
    """
    return np.random.default_rng(derive_seed(*parts))


def fingerprint_file(path, chunk_size=1 << 20) -> str:
    """
    Returns the sha256 hex digest of given file
    """
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def fingerprint_arrays(arrays) -> str:
    """
    Returns the sha256 hex digest of given sequence of numpy arrays (shape and bytes)
    """
    digest = hashlib.sha256()
    for array in arrays:
        array = np.ascontiguousarray(array)
        digest.update(str(array.shape).encode("ascii"))
        digest.update(array.tobytes())
    return digest.hexdigest()


def atomic_write(path, data, mode="wb"):
    """
    Writes data next to given path into a temporary file, then renames it onto the path.
    Readers never see a half-written file

    :param path: destination
    :param data: bytes (mode "wb") or str (mode "w")
    :param mode: "wb" or "w"
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    file_descriptor, temp_name = tempfile.mkstemp(prefix="." + path.name, dir=str(path.parent))
    try:
        if mode == "w":
            with os.fdopen(file_descriptor, "w", encoding="utf-8", newline="") as f:
                f.write(data)
        else:
            with os.fdopen(file_descriptor, "wb") as f:
                f.write(data)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.remove(temp_name)
        raise


def safe_name(name: str) -> str:
    """
    Returns given identifier with every character unsafe for file names replaced by "_"
    """
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def format_float(value: float) -> str:
    """
    Shortest repr that reads back to the same float. Used for every text output so reruns are byte-identical
    """
    return repr(float(value))


def table_to_csv(table: pd.DataFrame) -> str:
    """
    Floats through format_float so reruns give identical bytes
    """
    formatted = table.copy()
    for column in formatted.columns:
        if pd.api.types.is_float_dtype(formatted[column]):
            formatted[column] = formatted[column].map(format_float)
    return formatted.to_csv(index=False, lineterminator="\n")
