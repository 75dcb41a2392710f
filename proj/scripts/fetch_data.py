#!/usr/bin/env python3
"""Download the Abalone and SARCOS datasets into CSV files the bench reads.

Checksums are trust-on-first-use: the first download records SHA-256 hashes
in <dest>/checksums.sha256, later downloads must match them.
"""

import argparse
import csv
import hashlib
import sys
import tempfile
import urllib.request
from pathlib import Path

SOURCES = {
    "abalone.data": "https://archive.ics.uci.edu/ml/machine-learning-databases/abalone/abalone.data",
    "sarcos_inv.mat": "http://www.gaussianprocess.org/gpml/data/sarcos_inv.mat",
}


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_checksums(path: Path) -> dict:
    if not path.exists():
        return {}
    out = {}
    for line in path.read_text().splitlines():
        parts = line.split()
        if len(parts) == 2:
            out[parts[1]] = parts[0]
    return out


def save_checksums(path: Path, sums: dict) -> None:
    path.write_text("".join(f"{h}  {name}\n" for name, h in sorted(sums.items())))


def download(url: str, target: Path, timeout: float) -> None:
    with urllib.request.urlopen(url, timeout=timeout) as resp, target.open("wb") as out:
        while True:
            chunk = resp.read(1 << 20)
            if not chunk:
                break
            out.write(chunk)


def sarcos_to_csv(mat_path: Path, csv_path: Path) -> None:
    try:
        from scipy.io import loadmat
    except ImportError as exc:
        raise SystemExit("scipy is needed to convert sarcos_inv.mat (pip install scipy)") from exc
    data = loadmat(str(mat_path))["sarcos_inv"]
    if data.shape[1] != 28:
        raise SystemExit(f"unexpected SARCOS shape {data.shape}, expected 28 columns")
    with csv_path.open("w", newline="") as f:
        w = csv.writer(f)
        for row in data:
            w.writerow(f"{v:.17g}" for v in row)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dest", default="data", help="output directory")
    ap.add_argument("--timeout", type=float, default=60.0)
    args = ap.parse_args()

    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    sums_path = dest / "checksums.sha256"
    sums = load_checksums(sums_path)

    with tempfile.TemporaryDirectory() as tmp:
        for name, url in SOURCES.items():
            raw = Path(tmp) / name
            print(f"fetching {url}")
            try:
                download(url, raw, args.timeout)
            except OSError as exc:
                print(f"download failed for {name}: {exc}", file=sys.stderr)
                return 1
            digest = sha256(raw)
            if name in sums and sums[name] != digest:
                print(f"checksum mismatch for {name}: recorded {sums[name]}, got {digest}", file=sys.stderr)
                return 1
            sums.setdefault(name, digest)

            if name == "abalone.data":
                (dest / "abalone.csv").write_bytes(raw.read_bytes())
            else:
                sarcos_to_csv(raw, dest / "sarcos.csv")

    save_checksums(sums_path, sums)
    print(f"wrote {dest / 'abalone.csv'} and {dest / 'sarcos.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
