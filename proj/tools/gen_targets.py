#!/usr/bin/env python3
"""Regenerates builtin_targets.cpp from scikit-image sample images.

The built-in complex test target uses a photographic amplitude (the
scikit-image "camera" picture, scaled to [0, 1]) and a textured phase (the
"brick" texture, min-max normalized and mapped to [-pi/2, pi/2]). Both are
native-resolution crops — never resizes, whose anti-aliasing would strip the
high-frequency texture the truncation experiments depend on. The offsets
pick the most detailed windows (by mean gradient energy) of each source.
Values are quantized to uint16 so the checked-in source stays compact and
frozen independently of the scikit-image version used to regenerate it.
"""

import numpy as np
from skimage import data

# (size, camera row/col, brick row/col)
CROPS = (
    (64, (320, 272), (128, 96)),
    (200, (304, 224), (0, 96)),
)


def quant16(img):
    img = np.clip(img, 0.0, 1.0)
    return np.round(img * 65535.0).astype(np.uint16)


def crop(img, size, origin):
    r, c = origin
    return img[r:r + size, c:c + size].astype(np.float64) / 255.0


def normalized(img):
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)


def emit_array(f, name, values):
    f.write(f"const std::uint16_t {name}[{values.size}] = {{\n")
    flat = values.ravel()
    for start in range(0, flat.size, 16):
        chunk = ",".join(str(int(v)) for v in flat[start:start + 16])
        f.write("    " + chunk + ",\n")
    f.write("};\n\n")


def main():
    camera = data.camera()
    brick = data.brick()
    with open("builtin_targets.cpp", "w") as f:
        f.write("// Generated by gen_targets.py; do not edit by hand.\n")
        f.write('#include "builtin_targets.hpp"\n\n')
        f.write("namespace cdpr::targets {\n\n")
        for size, cam_at, brick_at in CROPS:
            emit_array(f, f"kAmp{size}", quant16(crop(camera, size, cam_at)))
            emit_array(f, f"kPhase{size}", quant16(normalized(crop(brick, size, brick_at))))
        f.write("}  // namespace cdpr::targets\n")


if __name__ == "__main__":
    main()
