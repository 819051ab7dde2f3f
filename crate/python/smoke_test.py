#!/usr/bin/env python3
"""Smoke test for the projpart_py extension module.

Build the module first:

    cargo build -p projpart-python --release

then run this script from anywhere inside the repository:

    python3 python/smoke_test.py
"""

import shutil
import sys
import sysconfig
import tempfile
from pathlib import Path


def locate_cdylib(repo_root: Path) -> Path:
    candidates = [
        repo_root / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libprojpart_py.so", "libprojpart_py.dylib", "projpart_py.dll")
    ]
    for path in candidates:
        if path.exists():
            return path
    sys.exit(
        "projpart_py cdylib not found; run `cargo build -p projpart-python` first"
    )


def import_module(repo_root: Path, scratch: Path):
    lib = locate_cdylib(repo_root)
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy2(lib, scratch / f"projpart_py{suffix}")
    sys.path.insert(0, str(scratch))
    import projpart_py

    return projpart_py


def main() -> None:
    repo_root = Path(__file__).resolve().parent.parent
    with tempfile.TemporaryDirectory() as tmp:
        pp = import_module(repo_root, Path(tmp))

        # field arithmetic: GF(4) multiplies its generator to x+1
        gf4 = pp.Field(4)
        assert (gf4.p, gf4.m) == (2, 2)
        assert gf4.poly == [1, 1, 1]
        assert gf4.mul(2, 2) == 3
        assert gf4.add(1, 1) == 0
        try:
            pp.Field(6)
        except ValueError:
            pass
        else:
            raise AssertionError("Field(6) should be rejected")

        # the Fano plane: 7 points, 7 lines, lines hold 3 points
        fano = pp.Space(2, 2)
        assert fano.point_count == 7
        assert fano.count_flats(1) == 7
        line = fano.span([0, 1])
        assert line.dim == 1 and len(line.points()) == 3
        assert fano.is_dependent([3, 3]) and not fano.is_dependent([3, 4])
        assert fano.point_index(fano.point_coords(5)) == 5

        # dependent pairs of the squared plane: exactly 7 of 49
        full = list(range(7))
        assert fano.count_dependent([full, full]) == (7, 49)

        # plane partition at q=3: 52 parts, all checks green
        part = pp.plane_partition(3)
        assert part.size == 52
        report = part.verify()
        assert report["pass"], report["violations"]
        first = part.part(0)
        assert len(first["factors"]) == 2

        # the power construction agrees with the plane one at (2, 2)
        assert pp.power_partition(2, 2, 2).size == 21

        # JSON round trip
        again = pp.partition_from_json(part.to_json())
        assert again.size == part.size

        # the span game solves and stays within its query budget
        solved = pp.dspan_solve(fano, [0, 1])
        assert solved["queries"] <= 2 * 2 * 3 + 1
        out_rows = solved["output"]
        assert len(out_rows) == 2  # an (n-1)-flat of P^2 has rank 2
        sweep = pp.dspan_leaf_partition(fano)
        assert sweep["instances"] == 49
        assert sweep["verify"]["pass"]
        assert sweep["induced_sets_exact"] and sweep["factor_structure_ok"]

        # Graham–Pollak floor
        assert pp.min_biclique_partition(4) == 4

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
