#!/usr/bin/env python3
"""Write MovieLens-100k ratings in the original ``u.data`` layout.

The GroupLens download host is not always reachable, so this pulls the
ratings table that ships inside the ``pytorch-widedeep`` wheel (same rows,
same order as the original ``u.data``) and writes it out tab-separated:
``user \\t item \\t rating \\t timestamp`` with 1-based ids.
"""
import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "pytorch_widedeep/datasets/data/MovieLens100k_data.parquet.brotli"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/ml-100k/u.data")
    ap.add_argument("--wheel", help="use an already downloaded wheel")
    args = ap.parse_args()

    import pandas as pd

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                                   "-q", "-d", tmp, "pytorch-widedeep==1.7.0"])
            wheel = next(pathlib.Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as z:
            df = pd.read_parquet(io.BytesIO(z.read(MEMBER)))

    df = df[["user_id", "movie_id", "rating", "timestamp"]]
    if len(df) != 100_000:
        print(f"unexpected row count {len(df)}", file=sys.stderr)
        return 1
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out, sep="\t", header=False, index=False)
    print(f"wrote {out} ({len(df)} ratings)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
