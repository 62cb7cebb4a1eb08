//! Planar geometry primitives: points, polylines, bounding boxes and the
//! segment distance/intersection routines the connection detector builds on.
//!
//! Coordinates are carried through unchanged; whether they are projected
//! meters or lon/lat degrees is collection metadata, never interpreted here.

use crate::error::{Error, Result};

/// A node location or polyline vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
}

impl GeoPoint {
    /// Both coordinates must be finite.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFiniteCoordinate { x, y });
        }
        Ok(GeoPoint { x, y })
    }

    /// Additionally enforces lon/lat ranges for geographic collections.
    pub fn new_geographic(x: f64, y: f64) -> Result<Self> {
        let p = Self::new(x, y)?;
        if !(-180.0..=180.0).contains(&x) || !(-90.0..=90.0).contains(&y) {
            return Err(Error::GeographicRange { x, y });
        }
        Ok(p)
    }

    pub fn distance(&self, other: &GeoPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &GeoPoint) -> GeoPoint {
        GeoPoint {
            x: (self.x + other.x) / 2.0,
            y: (self.y + other.y) / 2.0,
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn of_point(p: &GeoPoint) -> Self {
        BoundingBox {
            min_x: p.x,
            min_y: p.y,
            max_x: p.x,
            max_y: p.y,
        }
    }

    pub fn merge(&self, other: &BoundingBox) -> Self {
        BoundingBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn include(&mut self, p: &GeoPoint) {
        self.min_x = self.min_x.min(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_x = self.max_x.max(p.x);
        self.max_y = self.max_y.max(p.y);
    }

    pub fn expand(&self, margin: f64) -> Self {
        BoundingBox {
            min_x: self.min_x - margin,
            min_y: self.min_y - margin,
            max_x: self.max_x + margin,
            max_y: self.max_y + margin,
        }
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn overlaps(&self, other: &BoundingBox) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// One or more vertex chains. The bounding box is always the exact
/// componentwise min/max over every vertex; constructors compute it.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyLine {
    parts: Vec<Vec<GeoPoint>>,
    bbox: BoundingBox,
}

impl PolyLine {
    /// At least one part; every part needs two or more points.
    pub fn new(parts: Vec<Vec<GeoPoint>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptyPolyline);
        }
        for (i, part) in parts.iter().enumerate() {
            if part.len() < 2 {
                return Err(Error::ShortPolylinePart {
                    part: i,
                    len: part.len(),
                });
            }
        }
        let mut bbox = BoundingBox::of_point(&parts[0][0]);
        for part in &parts {
            for p in part {
                bbox.include(p);
            }
        }
        Ok(PolyLine { parts, bbox })
    }

    pub fn single(points: Vec<GeoPoint>) -> Result<Self> {
        Self::new(vec![points])
    }

    pub fn parts(&self) -> &[Vec<GeoPoint>] {
        &self.parts
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn num_points(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    /// Euclidean length of one part.
    pub fn part_length(&self, part: usize) -> f64 {
        arc_length(&self.parts[part])
    }

    /// Sum of all part lengths.
    pub fn total_length(&self) -> f64 {
        (0..self.parts.len()).map(|i| self.part_length(i)).sum()
    }

    /// Iterate segments as (part index, segment index, start, end).
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize, &GeoPoint, &GeoPoint)> {
        self.parts.iter().enumerate().flat_map(|(pi, part)| {
            part.windows(2)
                .enumerate()
                .map(move |(si, w)| (pi, si, &w[0], &w[1]))
        })
    }

    /// Minimum distance from a point to any segment of this polyline.
    pub fn distance_to_point(&self, p: &GeoPoint) -> f64 {
        self.segments()
            .map(|(_, _, a, b)| point_segment_distance(p, a, b).0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Polyline arc length of a vertex chain.
pub fn arc_length(points: &[GeoPoint]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// The point `fraction` of the way along a chain by cumulative arc length.
/// Zero-length chains return the first vertex.
pub fn point_along(points: &[GeoPoint], fraction: f64) -> GeoPoint {
    let total = arc_length(points);
    if total <= 0.0 {
        return points[0];
    }
    let target = total * fraction.clamp(0.0, 1.0);
    let mut walked = 0.0;
    for w in points.windows(2) {
        let seg = w[0].distance(&w[1]);
        if walked + seg >= target {
            if seg <= 0.0 {
                return w[0];
            }
            let t = (target - walked) / seg;
            return GeoPoint {
                x: w[0].x + t * (w[1].x - w[0].x),
                y: w[0].y + t * (w[1].y - w[0].y),
            };
        }
        walked += seg;
    }
    *points.last().unwrap()
}

fn cross(ox: f64, oy: f64, ax: f64, ay: f64) -> f64 {
    ox * ay - oy * ax
}

/// Closest point on segment [a,b] to p, with the distance.
pub fn point_segment_distance(p: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> (f64, GeoPoint) {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    let t = if len2 <= 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let q = GeoPoint {
        x: a.x + t * dx,
        y: a.y + t * dy,
    };
    (p.distance(&q), q)
}

/// Proper or touching intersection of two segments.
///
/// Collinear overlapping segments report the midpoint of the overlap
/// interval. Returns `None` when the segments do not meet.
pub fn segment_intersection(
    p1: &GeoPoint,
    p2: &GeoPoint,
    q1: &GeoPoint,
    q2: &GeoPoint,
) -> Option<GeoPoint> {
    let rx = p2.x - p1.x;
    let ry = p2.y - p1.y;
    let sx = q2.x - q1.x;
    let sy = q2.y - q1.y;
    let denom = cross(rx, ry, sx, sy);
    let qpx = q1.x - p1.x;
    let qpy = q1.y - p1.y;
    if denom != 0.0 {
        let t = cross(qpx, qpy, sx, sy) / denom;
        let u = cross(qpx, qpy, rx, ry) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return Some(GeoPoint {
                x: p1.x + t * rx,
                y: p1.y + t * ry,
            });
        }
        return None;
    }
    // Parallel. Non-collinear parallels never meet.
    if cross(qpx, qpy, rx, ry) != 0.0 {
        return None;
    }
    // Collinear: overlap interval in the parameter space of [p1,p2].
    let len2 = rx * rx + ry * ry;
    if len2 <= 0.0 {
        // p is a single point; meets if it lies on [q1,q2].
        return if point_segment_distance(p1, q1, q2).0 == 0.0 {
            Some(*p1)
        } else {
            None
        };
    }
    let t0 = (qpx * rx + qpy * ry) / len2;
    let t1 = ((q2.x - p1.x) * rx + (q2.y - p1.y) * ry) / len2;
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    if lo > hi {
        return None;
    }
    let mid = (lo + hi) / 2.0;
    Some(GeoPoint {
        x: p1.x + mid * rx,
        y: p1.y + mid * ry,
    })
}

/// Minimum distance between two segments and a witness point.
///
/// Crossing or touching segments give distance 0 with the intersection
/// point (overlap midpoint when collinear). Otherwise the witness is the
/// midpoint of the closest-approach pair.
pub fn segment_segment_distance(
    p1: &GeoPoint,
    p2: &GeoPoint,
    q1: &GeoPoint,
    q2: &GeoPoint,
) -> (f64, GeoPoint) {
    if let Some(hit) = segment_intersection(p1, p2, q1, q2) {
        return (0.0, hit);
    }
    let mut best = f64::INFINITY;
    let mut witness = *p1;
    let candidates = [
        point_segment_distance(p1, q1, q2),
        point_segment_distance(p2, q1, q2),
        point_segment_distance(q1, p1, p2),
        point_segment_distance(q2, p1, p2),
    ];
    let anchors = [p1, p2, q1, q2];
    for (i, (d, closest)) in candidates.iter().enumerate() {
        if *d < best {
            best = *d;
            witness = anchors[i].midpoint(closest);
        }
    }
    (best, witness)
}
