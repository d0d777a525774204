#!/usr/bin/env python3
"""Build the 10-record dataset-preparation fixture under
crates/core/fixtures/minicorpus.

Each record has an RGB image, one binary segmentation mask per text line,
and OCR results (a sidecar JSON array per image, or inline in the manifest).

Gate arithmetic (min confidence 0.8 inclusive, edit distance <= 0.2 * len(target)):

  rec  line  target      ocr text    conf  ed  limit  verdict
  00   0     HELLO       HELLO       0.95  0   1.0    pass
  01   0     WORLD       WORLD       0.50  0   1.0    reject: confidence
  02   0     OPEN        OPEN        0.90  0   0.8    pass
  02   1     SALE        SAIE        0.85  1   0.8    reject: edit distance
  03   0     COFFEE      COFFEE      0.80  0   1.2    pass (inline OCR, boundary)
  04   0     TEXT        TEXT        0.79  0   0.8    reject: confidence
  05   0     RESTAURANT  RESTAURNAT  0.90  2   2.0    pass (boundary)
  06   0     BAKERY      BAKER       0.92  1   1.2    pass
  07   0     EXIT        EX          0.97  2   0.8    reject: edit distance
  07   1     STOP        STOP        0.60  0   0.8    reject: confidence
  08   0     MARKET      MARKEI      0.99  1   1.2    pass
  09   0     HOTEL       HOTFL       0.88  1   1.0    pass (boundary)

  => 7 training examples (records 00 02 03 05 06 08 09), 3 rejections (01 04 07),
     7 accepted lines, 5 rejected lines.

    python3 tools/make_minicorpus.py
"""

import json
import os

from PIL import Image, ImageDraw, ImageFont

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIX = os.path.join(ROOT, "crates", "core", "fixtures")
OUT = os.path.join(FIX, "minicorpus")
FONT = os.path.join(FIX, "fonts", "strokes-bold.ttf")
SIZE = 128

# (caption, background, ink, [(target, ocr_text, conf, rect)], inline_ocr)
RECORDS = [
    ("a sign that says hello", (200, 180, 150), (30, 30, 60), [("HELLO", "HELLO", 0.95, (14, 40, 114, 80))], False),
    ("a poster reading world", (90, 140, 200), (250, 250, 240), [("WORLD", "WORLD", 0.50, (14, 44, 114, 84))], False),
    ("shop window", (60, 60, 70), (240, 200, 40), [("OPEN", "OPEN", 0.90, (20, 14, 108, 54)), ("SALE", "SAIE", 0.85, (20, 70, 108, 110))], False),
    ("coffee shop board", (40, 30, 20), (240, 230, 210), [("COFFEE", "COFFEE", 0.80, (8, 46, 120, 82))], True),
    ("some text on paper", (245, 245, 235), (10, 10, 10), [("TEXT", "TEXT", 0.79, (20, 40, 108, 84))], False),
    ("restaurant facade", (120, 20, 30), (255, 255, 255), [("RESTAURANT", "RESTAURNAT", 0.90, (6, 50, 122, 76))], False),
    ("bakery storefront", (230, 200, 160), (90, 50, 20), [("BAKERY", "BAKER", 0.92, (10, 44, 118, 80))], False),
    ("exit and stop signs", (20, 120, 40), (255, 255, 255), [("EXIT", "EX", 0.97, (20, 14, 108, 54)), ("STOP", "STOP", 0.60, (20, 70, 108, 110))], False),
    ("market banner", (250, 220, 0), (0, 0, 0), [("MARKET", "MARKEI", 0.99, (10, 44, 118, 80))], False),
    ("hotel neon", (10, 10, 40), (255, 80, 200), [("HOTEL", "HOTFL", 0.88, (14, 40, 114, 80))], False),
]


def fit_font(text, rect):
    w = rect[2] - rect[0] - 4
    h = rect[3] - rect[1] - 4
    size = 64
    while size > 6:
        font = ImageFont.truetype(FONT, size)
        l, t, r, b = font.getbbox(text)
        if r - l <= w and b - t <= h:
            return font, (l, t, r, b)
        size -= 1
    raise SystemExit("cannot fit " + text)


def main():
    os.makedirs(OUT, exist_ok=True)
    manifest = []
    for idx, (caption, bg, ink, lines, inline) in enumerate(RECORDS):
        stem = "rec%02d" % idx
        img = Image.new("RGB", (SIZE, SIZE), bg)
        draw = ImageDraw.Draw(img)
        # mild background texture so blending has something to preserve
        for y in range(SIZE):
            shade = (y * 24) // SIZE
            for x in range(0, SIZE, 8):
                px = img.getpixel((x, y))
                draw.point((x, y), fill=tuple(max(0, c - shade) for c in px))
        entries = []
        sidecar = []
        for li, (target, ocr_text, conf, rect) in enumerate(lines):
            font, (l, t, r, b) = fit_font(target, rect)
            ox = rect[0] + ((rect[2] - rect[0]) - (r - l)) // 2 - l
            oy = rect[1] + ((rect[3] - rect[1]) - (b - t)) // 2 - t
            draw.text((ox, oy), target, font=font, fill=ink)
            mask = Image.new("L", (SIZE, SIZE), 0)
            ImageDraw.Draw(mask).text((ox, oy), target, font=font, fill=255)
            mask = mask.point(lambda v: 255 if v >= 128 else 0)
            mask_name = "%s_line%d_mask.png" % (stem, li)
            mask.save(os.path.join(OUT, mask_name))
            x0, y0, x1, y1 = rect
            if idx == 5:
                polygon = [[x0, y0], [64, y0], [x1, y0], [x1, y1], [64, y1], [x0, y1]]
            else:
                polygon = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
            entry = {"text": target, "polygon": polygon, "mask_path": mask_name}
            if inline:
                entry["ocr"] = {"text": ocr_text, "confidence": conf}
            else:
                sidecar.append({"text": ocr_text, "confidence": conf})
            entries.append(entry)
        img.save(os.path.join(OUT, stem + ".png"))
        if sidecar:
            with open(os.path.join(OUT, stem + ".ocr.json"), "w") as fh:
                json.dump(sidecar, fh, indent=2)
                fh.write("\n")
        manifest.append({"image_path": stem + ".png", "caption": caption, "lines": entries})
    with open(os.path.join(OUT, "manifest.jsonl"), "w") as fh:
        for rec in manifest:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    print("mini-corpus written to", OUT)


if __name__ == "__main__":
    main()
