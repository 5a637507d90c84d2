"""Rebuild data/cora and data/citeseer from the raw copies shipped in the pgl 2.2.6 sdist on PyPI.

Usage: python scripts/fetch_datasets.py [--out data]
"""

import argparse
import hashlib
import tarfile
import tempfile
import urllib.request
from pathlib import Path

from fsnc.cli import main as fsnc

SDIST_URL = ("https://files.pythonhosted.org/packages/fc/76/"
             "f85e59a3543a6b0ad995dee80c562b58f33e769a25282a440d0c9a5e2333/pgl-2.2.6.tar.gz")
SDIST_SHA256 = "d360147afefa34600d8c6db9ae43623fc28b1341550c213a4180b6a24cf9f200"
DATASETS = [
    # name, reader, raw dir inside the sdist, class split sizes
    ("cora", "linqs", "pgl/data/cora", "3,2,2"),
    ("citeseer", "planetoid", "pgl/data/citeseer", "2,2,2"),
]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        archive = Path(tmp) / "pgl.tar.gz"
        urllib.request.urlretrieve(SDIST_URL, archive)
        digest = hashlib.sha256(archive.read_bytes()).hexdigest()
        if digest != SDIST_SHA256:
            raise SystemExit(f"checksum mismatch for {SDIST_URL}: {digest}")
        with tarfile.open(archive) as tf:
            members = [m for m in tf.getmembers() if "/pgl/data/" in m.name and m.isfile()]
            tf.extractall(tmp, members=members)
        root = next(Path(tmp).glob("pgl-*"))
        for name, reader, raw, sizes in DATASETS:
            code = fsnc(["ingest", "--format", reader, "--input", str(root / raw), "--name", name,
                         "--out", str(Path(args.out) / name), "--split", sizes])
            if code:
                raise SystemExit(code)


if __name__ == "__main__":
    main()
