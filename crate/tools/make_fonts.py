#!/usr/bin/env python3
"""Build the TrueType fixture fonts under crates/core/fixtures/fonts.

Fonts are constructed with fontTools' FontBuilder and then re-opened with
fontTools to check the facts the Rust test-suite relies on.

    python3 tools/make_fonts.py
"""

import os
import sys

from fontTools.fontBuilder import FontBuilder
from fontTools.pens.t2CharStringPen import T2CharStringPen
from fontTools.pens.ttGlyphPen import TTGlyphPen
from fontTools.ttLib import TTFont

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT = os.path.join(ROOT, "crates", "core", "fixtures", "fonts")


def notdef_box(pen, adv, top):
    pen.moveTo((50, 0))
    pen.lineTo((50, top))
    pen.lineTo((adv - 50, top))
    pen.lineTo((adv - 50, 0))
    pen.closePath()
    pen.moveTo((100, 50))
    pen.lineTo((adv - 100, 50))
    pen.lineTo((adv - 100, top - 50))
    pen.lineTo((100, top - 50))
    pen.closePath()


def finish(fb, family, ascent, descent):
    fb.setupHorizontalHeader(ascent=ascent, descent=descent)
    fb.setupNameTable({"familyName": family, "styleName": "Regular"})
    fb.setupOS2(sTypoAscender=ascent, sTypoDescender=descent, usWinAscent=ascent, usWinDescent=-descent)
    fb.setupPost()


def build_testsquare(path, extra_cmap=None):
    order = [".notdef", "A", "space", "B", "C", "D", "O"]
    cmap = {ord("A"): "A", ord(" "): "space", ord("B"): "B", ord("C"): "C", ord("D"): "D", ord("O"): "O"}
    if extra_cmap:
        cmap.update(extra_cmap)
    fb = FontBuilder(1000, isTTF=True)
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap(cmap)
    glyphs = {}

    pen = TTGlyphPen(None)
    notdef_box(pen, 1000, 800)
    glyphs[".notdef"] = pen.glyph()

    # axis-aligned square, 100..900 font units
    pen = TTGlyphPen(None)
    pen.moveTo((100, 100))
    pen.lineTo((100, 900))
    pen.lineTo((900, 900))
    pen.lineTo((900, 100))
    pen.closePath()
    glyphs["A"] = pen.glyph()

    glyphs["space"] = TTGlyphPen(None).glyph()

    # consecutive off-curve points (50,0) and (150,0): implied on-curve at (100,0)
    pen = TTGlyphPen(None)
    pen.moveTo((0, 200))
    pen.qCurveTo((50, 0), (150, 0), (200, 200))
    pen.closePath()
    glyphs["B"] = pen.glyph()

    # translation-only composite of A
    pen = TTGlyphPen({"A": glyphs["A"]})
    pen.addComponent("A", (1, 0, 0, 1, 50, 0))
    glyphs["C"] = pen.glyph()

    # scaled composite of A (unsupported by design)
    pen = TTGlyphPen({"A": glyphs["A"]})
    pen.addComponent("A", (0.5, 0, 0, 0.5, 0, 0))
    glyphs["D"] = pen.glyph()

    # contour made only of off-curve points
    pen = TTGlyphPen(None)
    pen.qCurveTo((500, 100), (900, 500), (500, 900), (100, 500), None)
    pen.closePath()
    glyphs["O"] = pen.glyph()

    fb.setupGlyf(glyphs)
    adv = {".notdef": 1000, "A": 1000, "space": 500, "B": 300, "C": 1100, "D": 600, "O": 1000}
    fb.setupHorizontalMetrics({g: (adv[g], 0) for g in order})
    finish(fb, "TestSquare", 800, -200)
    fb.save(path)


# Stroke skeletons on a 4x6 grid, y up.
LETTERS = {
    "A": [[(0, 0), (0, 4), (2, 6), (4, 4), (4, 0)], [(0, 3), (4, 3)]],
    "B": [[(0, 0), (0, 6), (3, 6), (4, 5), (4, 4), (3, 3), (0, 3)], [(3, 3), (4, 2), (4, 1), (3, 0), (0, 0)]],
    "C": [[(4, 6), (0, 6), (0, 0), (4, 0)]],
    "D": [[(0, 0), (0, 6), (3, 6), (4, 5), (4, 1), (3, 0), (0, 0)]],
    "E": [[(4, 6), (0, 6), (0, 0), (4, 0)], [(0, 3), (3, 3)]],
    "F": [[(4, 6), (0, 6), (0, 0)], [(0, 3), (3, 3)]],
    "G": [[(4, 6), (0, 6), (0, 0), (4, 0), (4, 3), (2, 3)]],
    "H": [[(0, 0), (0, 6)], [(4, 0), (4, 6)], [(0, 3), (4, 3)]],
    "I": [[(1, 6), (3, 6)], [(2, 6), (2, 0)], [(1, 0), (3, 0)]],
    "J": [[(4, 6), (4, 0), (0, 0), (0, 2)]],
    "K": [[(0, 0), (0, 6)], [(4, 6), (0, 3), (4, 0)]],
    "L": [[(0, 6), (0, 0), (4, 0)]],
    "M": [[(0, 0), (0, 6), (2, 3), (4, 6), (4, 0)]],
    "N": [[(0, 0), (0, 6), (4, 0), (4, 6)]],
    "O": [[(0, 0), (0, 6), (4, 6), (4, 0), (0, 0)]],
    "P": [[(0, 0), (0, 6), (4, 6), (4, 3), (0, 3)]],
    "Q": [[(0, 0), (0, 6), (4, 6), (4, 0), (0, 0)], [(2, 2), (4, 0)]],
    "R": [[(0, 0), (0, 6), (4, 6), (4, 3), (0, 3)], [(1, 3), (4, 0)]],
    "S": [[(4, 6), (0, 6), (0, 3), (4, 3), (4, 0), (0, 0)]],
    "T": [[(0, 6), (4, 6)], [(2, 6), (2, 0)]],
    "U": [[(0, 6), (0, 0), (4, 0), (4, 6)]],
    "V": [[(0, 6), (2, 0), (4, 6)]],
    "W": [[(0, 6), (1, 0), (2, 3), (3, 0), (4, 6)]],
    "X": [[(0, 6), (4, 0)], [(0, 0), (4, 6)]],
    "Y": [[(0, 6), (2, 3), (4, 6)], [(2, 3), (2, 0)]],
    "Z": [[(0, 6), (4, 6), (0, 0), (4, 0)]],
    "0": [[(0, 0), (0, 6), (4, 6), (4, 0), (0, 0)], [(0, 0), (4, 6)]],
    "1": [[(1, 5), (2, 6), (2, 0)], [(1, 0), (3, 0)]],
    "2": [[(0, 6), (4, 6), (4, 3), (0, 3), (0, 0), (4, 0)]],
    "3": [[(0, 6), (4, 6), (4, 0), (0, 0)], [(1, 3), (4, 3)]],
    "4": [[(0, 6), (0, 3), (4, 3)], [(3, 6), (3, 0)]],
    "5": [[(4, 6), (0, 6), (0, 3), (4, 3), (4, 0), (0, 0)]],
    "6": [[(4, 6), (0, 6), (0, 0), (4, 0), (4, 3), (0, 3)]],
    "7": [[(0, 6), (4, 6), (1, 0)]],
    "8": [[(0, 0), (0, 6), (4, 6), (4, 0), (0, 0)], [(0, 3), (4, 3)]],
    "9": [[(4, 3), (0, 3), (0, 6), (4, 6), (4, 0), (0, 0)]],
}

UNIT = 120
LEFT = 80
ADVANCE = 4 * UNIT + 2 * LEFT


def grid(p, shear):
    x = LEFT + p[0] * UNIT
    y = p[1] * UNIT
    return (round(x + shear * y), round(y))


def stroke_square(pen, p, q, h):
    dx, dy = q[0] - p[0], q[1] - p[1]
    n = (dx * dx + dy * dy) ** 0.5
    dx, dy = dx / n, dy / n
    nx, ny = -dy, dx
    pts = [
        (p[0] - dx * h + nx * h, p[1] - dy * h + ny * h),
        (q[0] + dx * h + nx * h, q[1] + dy * h + ny * h),
        (q[0] + dx * h - nx * h, q[1] + dy * h - ny * h),
        (p[0] - dx * h - nx * h, p[1] - dy * h - ny * h),
    ]
    pts = [(round(x), round(y)) for x, y in pts]
    pen.moveTo(pts[0])
    for pt in pts[1:]:
        pen.lineTo(pt)
    pen.closePath()


def stroke_round(pen, p, q, h):
    dx, dy = q[0] - p[0], q[1] - p[1]
    n = (dx * dx + dy * dy) ** 0.5
    dx, dy = dx / n, dy / n
    nx, ny = -dy, dx

    def r(x, y):
        return (round(x), round(y))

    pen.moveTo(r(p[0] + nx * h, p[1] + ny * h))
    pen.lineTo(r(q[0] + nx * h, q[1] + ny * h))
    pen.qCurveTo(r(q[0] + nx * h + dx * h, q[1] + ny * h + dy * h), r(q[0] + dx * h, q[1] + dy * h))
    pen.qCurveTo(r(q[0] - nx * h + dx * h, q[1] - ny * h + dy * h), r(q[0] - nx * h, q[1] - ny * h))
    pen.lineTo(r(p[0] - nx * h, p[1] - ny * h))
    pen.qCurveTo(r(p[0] - nx * h - dx * h, p[1] - ny * h - dy * h), r(p[0] - dx * h, p[1] - dy * h))
    pen.qCurveTo(r(p[0] + nx * h - dx * h, p[1] + ny * h - dy * h), r(p[0] + nx * h, p[1] + ny * h))
    pen.closePath()


def build_stroke_font(path, family, half_width, shear=0.0, round_caps=False):
    chars = sorted(LETTERS)
    order = [".notdef", "space"] + ["g_" + c for c in chars]
    cmap = {ord(" "): "space"}
    for c in chars:
        cmap[ord(c)] = "g_" + c
    fb = FontBuilder(1000, isTTF=True)
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap(cmap)
    glyphs = {}
    pen = TTGlyphPen(None)
    notdef_box(pen, ADVANCE, 720)
    glyphs[".notdef"] = pen.glyph()
    glyphs["space"] = TTGlyphPen(None).glyph()
    for c in chars:
        pen = TTGlyphPen(None)
        for line in LETTERS[c]:
            for a, b in zip(line, line[1:]):
                pa, pb = grid(a, shear), grid(b, shear)
                if round_caps:
                    stroke_round(pen, pa, pb, half_width)
                else:
                    stroke_square(pen, pa, pb, half_width)
        glyphs["g_" + c] = pen.glyph()
    fb.setupGlyf(glyphs)
    metrics = {g: (ADVANCE, 0) for g in order}
    metrics["space"] = (ADVANCE // 2, 0)
    fb.setupHorizontalMetrics(metrics)
    finish(fb, family, 900, -200)
    fb.save(path)


def build_cff(path):
    order = [".notdef", "A"]
    fb = FontBuilder(1000, isTTF=False)
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap({ord("A"): "A"})
    charstrings = {}
    for name in order:
        pen = T2CharStringPen(1000, None)
        pen.moveTo((100, 100))
        pen.lineTo((100, 900))
        pen.lineTo((900, 900))
        pen.lineTo((900, 100))
        pen.closePath()
        charstrings[name] = pen.getCharString()
    fb.setupCFF("TestCFF", {"FullName": "TestCFF"}, charstrings, {})
    fb.setupHorizontalMetrics({g: (1000, 100) for g in order})
    finish(fb, "TestCFF", 800, -200)
    fb.save(path)


FAMILY_WEIGHTS = [30, 40, 50, 60, 70, 80, 90, 100]
FAMILY_SHEARS = [0.0, 0.1, 0.2, 0.3]


def build_family(outdir):
    """64 stroke fonts (weight x shear x cap style) used as classifier labels."""
    os.makedirs(outdir, exist_ok=True)
    for w in FAMILY_WEIGHTS:
        for i, shear in enumerate(FAMILY_SHEARS):
            for caps in ("sq", "rd"):
                name = "strokes-w%03d-s%d-%s" % (w, i, caps)
                build_stroke_font(os.path.join(outdir, name + ".ttf"), name, w, shear=shear, round_caps=caps == "rd")


def check(cond, msg):
    if not cond:
        sys.exit("fixture check failed: " + msg)


def verify():
    f = TTFont(os.path.join(OUT, "testsquare.ttf"))
    check(f["head"].unitsPerEm == 1000, "upm")
    check(f.getGlyphID("A") == 1, "A gid")
    best = f.getBestCmap()
    check(best[ord("A")] == "A", "cmap A")
    check(0x2603 not in best, "snowman unmapped")
    g = f["glyf"]["A"]
    g.recalcBounds(f["glyf"])
    check((g.xMin, g.yMin, g.xMax, g.yMax) == (100, 100, 900, 900), "A bbox")
    coords, ends, flags = f["glyf"]["B"].getCoordinates(f["glyf"])
    check(list(coords) == [(0, 200), (50, 0), (150, 0), (200, 200)], "B coords %r" % list(coords))
    check([fl & 1 for fl in flags] == [1, 0, 0, 1], "B flags")
    check(f["glyf"]["C"].isComposite(), "C composite")
    check(f["glyf"]["space"].numberOfContours == 0, "space empty")
    check(f["hmtx"]["A"][0] == 1000, "A advance")

    f = TTFont(os.path.join(OUT, "testcmap12.ttf"))
    formats = sorted(t.format for t in f["cmap"].tables)
    check(12 in formats and 4 in formats, "cmap formats %r" % formats)
    check(f.getBestCmap()[0x1F600] == "B", "astral mapping")

    check(len(os.listdir(os.path.join(OUT, "family"))) == 64, "family size")
    for name in ["strokes-thin", "strokes-bold", "strokes-slant", "strokes-round"]:
        f = TTFont(os.path.join(OUT, name + ".ttf"))
        best = f.getBestCmap()
        for c in "HELLOWORLD0123456789":
            check(ord(c) in best, "%s maps %s" % (name, c))

    f = TTFont(os.path.join(OUT, "testcff.otf"))
    check("CFF " in f and "glyf" not in f, "cff outlines")


def main():
    os.makedirs(OUT, exist_ok=True)
    build_testsquare(os.path.join(OUT, "testsquare.ttf"))
    build_testsquare(os.path.join(OUT, "testcmap12.ttf"), {0x1F600: "B"})
    build_stroke_font(os.path.join(OUT, "strokes-thin.ttf"), "Strokes Thin", 40)
    build_stroke_font(os.path.join(OUT, "strokes-bold.ttf"), "Strokes Bold", 85)
    build_stroke_font(os.path.join(OUT, "strokes-slant.ttf"), "Strokes Slant", 55, shear=0.25)
    build_stroke_font(os.path.join(OUT, "strokes-round.ttf"), "Strokes Round", 60, round_caps=True)
    build_cff(os.path.join(OUT, "testcff.otf"))
    build_family(os.path.join(OUT, "family"))
    verify()
    print("fixtures written to", OUT)


if __name__ == "__main__":
    main()
