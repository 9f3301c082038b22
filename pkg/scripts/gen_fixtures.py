#!/usr/bin/env python3
"""Regenerate the packaged corpus fixtures (images + benchmark scene).

The generators are deterministic, so rerunning reproduces the checked-in
files byte for byte.
"""

from pathlib import Path

from splinesplat import io
from splinesplat.corpus import CORPUS_NAMES, bench_scene, corpus_image

OUT = Path(__file__).resolve().parent.parent / "src" / "splinesplat" / "fixtures"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name in CORPUS_NAMES:
        io.write_png(OUT / f"{name}.png", corpus_image(name))
        print(f"wrote {name}.png")
    io.save_scene(OUT / "bench_scene.json", bench_scene())
    print("wrote bench_scene.json")


if __name__ == "__main__":
    main()
