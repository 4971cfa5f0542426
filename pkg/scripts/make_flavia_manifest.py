#!/usr/bin/env python3
"""Write a manifest CSV for a Flavia image directory.

    python scripts/make_flavia_manifest.py /data/flavia/Leaves flavia.csv
"""
import sys

from leafpnn.cli import main

if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    sys.exit(main(["flavia-manifest", "--images", sys.argv[1], "--out", sys.argv[2]]))
