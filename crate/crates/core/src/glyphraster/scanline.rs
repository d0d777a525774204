use crate::geometry::Point;
use crate::mask::BinaryMask;

struct Edge {
    ymin: f64,
    ymax: f64,
    // x at ymin and dx/dy
    x0: f64,
    slope: f64,
    winding: i32,
}

/// Fills closed polylines under the nonzero winding rule. A pixel is ink
/// iff its center lies inside; edges are half-open in y (`[ymin, ymax)`) so
/// shared vertices and abutting shapes are counted once.
pub fn rasterize_polylines(polylines: &[Vec<Point>], width: u32, height: u32) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); height as usize];
    let mut edges = Vec::new();
    for poly in polylines {
        let n = poly.len();
        if n < 2 {
            continue;
        }
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            if a.y == b.y || ![a.x, a.y, b.x, b.y].iter().all(|v| v.is_finite()) {
                continue;
            }
            let (lo, hi, winding) = if a.y < b.y { (a, b, 1) } else { (b, a, -1) };
            let edge = Edge { ymin: lo.y, ymax: hi.y, x0: lo.x, slope: (hi.x - lo.x) / (hi.y - lo.y), winding };
            // rows whose center y+0.5 lies in [ymin, ymax)
            let first = (edge.ymin - 0.5).ceil().max(0.0);
            let last = ((edge.ymax - 0.5).ceil() - 1.0).min(height as f64 - 1.0);
            if first > last {
                continue;
            }
            let id = edges.len();
            edges.push(edge);
            for row in first as usize..=last as usize {
                rows[row].push(id);
            }
        }
    }

    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for (y, ids) in rows.iter().enumerate() {
        if ids.is_empty() {
            continue;
        }
        let yc = y as f64 + 0.5;
        crossings.clear();
        crossings.extend(ids.iter().map(|&id| {
            let e = &edges[id];
            (e.x0 + (yc - e.ymin) * e.slope, e.winding)
        }));
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut winding = 0;
        for pair in 0..crossings.len() {
            winding += crossings[pair].1;
            if winding == 0 || pair + 1 == crossings.len() {
                continue;
            }
            // pixel centers x+0.5 in [x_left, x_right)
            let start = (crossings[pair].0 - 0.5).ceil().max(0.0);
            let end = (crossings[pair + 1].0 - 0.5).ceil().min(width as f64);
            let mut x = start;
            while x < end {
                mask.set(x as u32, y as u32, true);
                x += 1.0;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64, clockwise: bool) -> Vec<Point> {
        let mut v = vec![Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)];
        if !clockwise {
            v.reverse();
        }
        v
    }

    #[test]
    fn square_pixel_count() {
        let m = rasterize_polylines(&[rect(10.0, 10.0, 90.0, 90.0, true)], 100, 100);
        assert_eq!(m.count(), 6400);
        assert!(m.get(10, 10) && m.get(89, 89) && !m.get(90, 50) && !m.get(9, 50));
    }

    #[test]
    fn empty_set() {
        assert!(rasterize_polylines(&[], 20, 20).is_empty());
    }

    #[test]
    fn annulus_and_overlap() {
        let outer = rect(10.0, 10.0, 90.0, 90.0, true);
        let inner = rect(30.0, 30.0, 70.0, 70.0, false);
        assert_eq!(rasterize_polylines(&[outer.clone(), inner], 100, 100).count(), 6400 - 1600);
        // same orientation: winding 2 in the overlap, still ink
        let inner_same = rect(30.0, 30.0, 70.0, 70.0, true);
        assert_eq!(rasterize_polylines(&[outer, inner_same], 100, 100).count(), 6400);
    }

    #[test]
    fn clipped_to_canvas() {
        let m = rasterize_polylines(&[rect(-50.0, -50.0, 5.0, 200.0, true)], 10, 10);
        assert_eq!(m.count(), 50);
    }

    #[test]
    fn fractional_edges_follow_pixel_centers() {
        // x centers 2.5..=6.5 lie in [2.4, 7.0); y centers 1.5 and 2.5 lie in [1.5, 2.6)
        let m = rasterize_polylines(&[rect(2.4, 1.5, 7.0, 2.6, true)], 10, 10);
        assert_eq!(
            m.ink_pixels().collect::<Vec<_>>(),
            vec![(2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (2, 2), (3, 2), (4, 2), (5, 2), (6, 2)]
        );
    }
}
