"""Regenerate the committed test fixtures under tests/fixtures/.

Produces, via the deepsep-export CLI (install exporter/ first):
  * squeezenet11_conv1_fire4.pt -- TorchScript SqueezeNet-v1.1 truncated after
    fire4, taps `conv1` and `fire4`, default initializers under seed 2;
  * parity/squeezenet11_{conv1,fire4}.dfeat -- pooled vectors computed with
    forward hooks on the eager source model (independent of the TorchScript
    path, so they act as a parity oracle for the backend);
and locally:
  * parity/images/pimg*.png -- five small natural crops;
  * parity/manifest.csv -- a manifest over those images.

Run from the repo root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from deepsep.data import Manifest, ManifestRow, Polarity  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"
SEED = 2


def parity_images() -> list:
    import skimage.data as skd
    crops = [
        ("pimg0", np.asarray(skd.astronaut())[100:196, 150:246]),
        ("pimg1", np.asarray(skd.coffee())[50:146, 200:296]),
        ("pimg2", np.asarray(skd.chelsea())[60:156, 120:216]),
        ("pimg3", np.asarray(skd.rocket())[150:246, 250:346]),
        ("pimg4", np.asarray(skd.cat())[80:176, 140:236]),
    ]
    return [(name, np.ascontiguousarray(arr)) for name, arr in crops]


def main() -> None:
    from PIL import Image

    parity_dir = FIXTURES / "parity"
    images_dir = parity_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for name, arr in parity_images():
        Image.fromarray(arr).save(images_dir / f"{name}.png")
        rows.append(ManifestRow(image_path=f"images/{name}.png", image_id=name,
                                reference_id=name, kinds=(), levels=(), score=None,
                                polarity=Polarity.HIGHER_IS_WORSE, database="parity"))
    Manifest(rows).save(parity_dir / "manifest.csv")

    subprocess.run([
        "deepsep-export", "--network", "squeezenet11", "--taps", "conv1,fire4",
        "--mode", f"random:{SEED}",
        "--out", str(FIXTURES / "squeezenet11_conv1_fire4.pt"),
        "--registry", str(REPO / "layers.json"),
        "--parity-images", str(images_dir),
        "--parity-out", str(parity_dir),
    ], check=True)
    print("fixtures regenerated")


if __name__ == "__main__":
    main()
