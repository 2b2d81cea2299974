"""Import and export of MPS and MPO tensors."""

from __future__ import annotations

from ..container import read_container, write_container
from .mpo import MPO
from .mps import MPS

CONVENTION = "site0-left; mps (Dl, phys, Dr); mpo (Dl, out, in, Dr)"


def save_mps(mps: MPS, path):
    arrays = {f"site{j}": t for j, t in enumerate(mps.tensors)}
    meta = {"L": mps.L, "bond_dims": mps.bond_dims, "canonical_form": mps.canonical_form, "convention": CONVENTION}
    return write_container(path, "mps", arrays, meta)


def load_mps(path) -> MPS:
    arrays, header = read_container(path, "mps")
    meta = header["meta"]
    return MPS([arrays[f"site{j}"] for j in range(meta["L"])], meta["canonical_form"])


def save_mpo(mpo: MPO, path):
    arrays = {f"site{j}": t for j, t in enumerate(mpo.tensors)}
    meta = {
        "L": mpo.L,
        "bond_dims": mpo.bond_dims,
        "periodic": mpo.periodic,
        "log_scale": mpo.log_scale,
        "truncation_error": mpo.truncation_error,
        "convention": CONVENTION,
    }
    return write_container(path, "mpo", arrays, meta)


def load_mpo(path) -> MPO:
    arrays, header = read_container(path, "mpo")
    meta = header["meta"]
    return MPO(
        [arrays[f"site{j}"] for j in range(meta["L"])],
        periodic=meta["periodic"],
        log_scale=meta["log_scale"],
        truncation_error=meta["truncation_error"],
    )
