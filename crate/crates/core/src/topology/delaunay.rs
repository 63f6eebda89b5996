//! Incremental Bowyer-Watson Delaunay triangulation, used only to find
//! nearest neighbours of large point sets.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::Point;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    /// Anticlockwise vertices.
    v: [usize; 3],
    /// `n[k]` is the triangle across the edge opposite `v[k]`.
    n: [usize; 3],
    alive: bool,
}

#[inline]
fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// anticlockwise triangle `abc`.
#[inline]
fn in_circle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (ax, ay) = (a.x - d.x, a.y - d.y);
    let (bx, by) = (b.x - d.x, b.y - d.y);
    let (cx, cy) = (c.x - d.x, c.y - d.y);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
}

/// Undirected Delaunay edges between input points (super-triangle
/// vertices removed). Exact duplicates are linked to their first copy.
pub fn delaunay_edges(points: &[Point]) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let size = (x1 - x0).max(y1 - y0).max(1e-300);
    let centre = Point::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let big = 1e3 * size;

    let mut pts: Vec<Point> = points.to_vec();
    pts.push(centre + Point::new(-big, -big));
    pts.push(centre + Point::new(big, -big));
    pts.push(centre + Point::new(0.0, big));
    let mut tris = vec![Tri { v: [n, n + 1, n + 2], n: [NONE; 3], alive: true }];

    // spatially coherent insertion order keeps point location walks short
    let cells = libm::ceil(libm::sqrt(n as f64 / 4.0)).max(1.0);
    let key = |p: Point| -> (i64, f64) {
        let row = ((p.y - y0) / size * cells).min(cells - 1.0) as i64;
        let x = if row % 2 == 0 { p.x } else { -p.x };
        (row, x)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ra, xa) = key(points[a]);
        let (rb, xb) = key(points[b]);
        ra.cmp(&rb).then(xa.total_cmp(&xb))
    });

    let mut edges = Vec::new();
    let mut last = 0usize;
    let mut bad: Vec<usize> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut is_bad: Vec<bool> = vec![false];
    let mut boundary: Vec<(usize, usize, usize)> = Vec::new();

    for &pi in &order {
        let p = pts[pi];
        let Some(t0) = locate(&pts, &tris, last, p) else { continue };
        // duplicate of an existing vertex
        if let Some(&dup) = tris[t0].v.iter().find(|&&v| v < n && pts[v] == p) {
            edges.push((dup.min(pi), dup.max(pi)));
            continue;
        }

        bad.clear();
        stack.clear();
        stack.push(t0);
        is_bad[t0] = true;
        while let Some(t) = stack.pop() {
            bad.push(t);
            for &nb in &tris[t].n {
                if nb == NONE || is_bad[nb] {
                    continue;
                }
                let [a, b, c] = tris[nb].v;
                if in_circle(pts[a], pts[b], pts[c], p) > 0.0 {
                    is_bad[nb] = true;
                    stack.push(nb);
                }
            }
        }

        boundary.clear();
        for &t in &bad {
            for k in 0..3 {
                let nb = tris[t].n[k];
                if nb == NONE || !is_bad[nb] {
                    boundary.push((tris[t].v[(k + 1) % 3], tris[t].v[(k + 2) % 3], nb));
                }
            }
        }
        for &t in &bad {
            tris[t].alive = false;
            is_bad[t] = false;
        }

        let first_new = tris.len();
        for &(a, b, outside) in &boundary {
            let id = tris.len();
            tris.push(Tri { v: [a, b, pi], n: [NONE, NONE, outside], alive: true });
            is_bad.push(false);
            if outside != NONE {
                let o = &mut tris[outside];
                for k in 0..3 {
                    let (oa, ob) = (o.v[(k + 1) % 3], o.v[(k + 2) % 3]);
                    if oa == b && ob == a {
                        o.n[k] = id;
                    }
                }
            }
        }
        for id in first_new..tris.len() {
            let [a, b, _] = tris[id].v;
            // across b→p: the new triangle starting at b; across p→a: the one ending at a
            let next = (first_new..tris.len()).find(|&o| tris[o].v[0] == b).unwrap_or(NONE);
            let prev = (first_new..tris.len()).find(|&o| tris[o].v[1] == a).unwrap_or(NONE);
            tris[id].n[0] = next;
            tris[id].n[1] = prev;
        }
        last = first_new;
    }

    for t in tris.iter().filter(|t| t.alive) {
        for k in 0..3 {
            let (a, b) = (t.v[k], t.v[(k + 1) % 3]);
            if a < n && b < n && a < b {
                edges.push((a, b));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Walk towards `p` from triangle `start`; falls back to a linear scan if
/// the walk cycles on near-degenerate input.
fn locate(pts: &[Point], tris: &[Tri], start: usize, p: Point) -> Option<usize> {
    let mut t = if tris[start].alive { start } else { tris.iter().rposition(|t| t.alive)? };
    let limit = 4 * tris.len() + 16;
    'walk: for _ in 0..limit {
        let tri = &tris[t];
        for k in 0..3 {
            let a = pts[tri.v[(k + 1) % 3]];
            let b = pts[tri.v[(k + 2) % 3]];
            if orient(a, b, p) < 0.0 && tri.n[k] != NONE {
                t = tri.n[k];
                continue 'walk;
            }
        }
        return Some(t);
    }
    tris.iter().position(|tri| {
        tri.alive && (0..3).all(|k| orient(pts[tri.v[(k + 1) % 3]], pts[tri.v[(k + 2) % 3]], p) >= 0.0)
    })
}
