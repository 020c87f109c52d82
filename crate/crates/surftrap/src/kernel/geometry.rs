//! Edge and support descriptions used to place quadrature breakpoints.

use std::f64::consts::PI;
use std::sync::Arc;

/// Axis-aligned rectangle in the electrode plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Square of half-width `r` around `(cx, cy)`.
    pub fn around(cx: f64, cy: f64, r: f64) -> Self {
        Rect::new(cx - r, cx + r, cy - r, cy + r)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Parameter interval `[t0, t1]`, `t0 >= 0`, of the ray `o + t (c, s)` inside the rectangle.
    pub fn ray_interval(&self, ox: f64, oy: f64, c: f64, s: f64) -> Option<(f64, f64)> {
        let mut t0 = 0.0_f64;
        let mut t1 = f64::INFINITY;
        for (o, dir, lo, hi) in [(ox, c, self.x_min, self.x_max), (oy, s, self.y_min, self.y_max)] {
            if dir.abs() < 1e-300 {
                if o < lo || o > hi {
                    return None;
                }
            } else {
                let (mut a, mut b) = ((lo - o) / dir, (hi - o) / dir);
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                t0 = t0.max(a);
                t1 = t1.min(b);
            }
        }
        (t1 > t0).then_some((t0, t1))
    }

    fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.x_min, self.y_min),
            (self.x_max, self.y_min),
            (self.x_max, self.y_max),
            (self.x_min, self.y_max),
        ]
    }
}

/// A curve across which a surface function or one of its low derivatives is
/// discontinuous.
#[derive(Debug, Clone, PartialEq)]
pub enum Edge {
    Circle {
        cx: f64,
        cy: f64,
        r: f64,
    },
    /// Infinite straight line through `(x0, y0)` with direction angle `angle`.
    Line {
        x0: f64,
        y0: f64,
        angle: f64,
    },
    /// Chain of straight segments through `points`, joined back to the first
    /// point when `closed`.
    Polyline {
        points: Arc<[[f64; 2]]>,
        closed: bool,
    },
    /// Breakpoints supplied by the caller, for curves without a closed form.
    Custom(CustomEdge),
}

/// Shared handle to a caller-defined breakpoint provider; compares by identity.
#[derive(Clone)]
pub struct CustomEdge(pub Arc<dyn RayBreaks + Send + Sync>);

impl std::fmt::Debug for CustomEdge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("CustomEdge(..)")
    }
}

impl PartialEq for CustomEdge {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Edge {
    /// Vertical line `x = x0`, the edge type of translation-invariant profiles.
    pub fn vertical(x0: f64) -> Self {
        Edge::Line {
            x0,
            y0: 0.0,
            angle: PI / 2.0,
        }
    }

    /// Polyline through `points`.
    pub fn polyline(points: Vec<[f64; 2]>, closed: bool) -> Self {
        Edge::Polyline {
            points: points.into(),
            closed,
        }
    }

    /// Positive ray parameters where `o + t (c, s)` crosses the edge.
    pub fn ray_hits(&self, ox: f64, oy: f64, c: f64, s: f64, out: &mut Vec<f64>) {
        match *self {
            Edge::Circle { cx, cy, r } => {
                let (dx, dy) = (ox - cx, oy - cy);
                let b = c * dx + s * dy;
                let q = dx * dx + dy * dy - r * r;
                let disc = b * b - q;
                if disc < 0.0 {
                    return;
                }
                let sq = disc.sqrt();
                for t in [-b - sq, -b + sq] {
                    if t > 0.0 {
                        out.push(t);
                    }
                }
            }
            Edge::Line { x0, y0, angle } => {
                let (nx, ny) = (-angle.sin(), angle.cos());
                let den = c * nx + s * ny;
                if den.abs() < 1e-300 {
                    return;
                }
                let t = -((ox - x0) * nx + (oy - y0) * ny) / den;
                if t > 0.0 {
                    out.push(t);
                }
            }
            Edge::Polyline { ref points, closed } => {
                for (a, b) in segments(points, closed) {
                    // Solve o + t (c, s) = a + v (b - a) for 0 <= v <= 1.
                    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                    let den = ex * s - ey * c;
                    if den.abs() < 1e-300 {
                        continue;
                    }
                    let (wx, wy) = (a[0] - ox, a[1] - oy);
                    let t = (ex * wy - ey * wx) / den;
                    let v = (c * wy - s * wx) / den;
                    if t > 0.0 && (0.0..=1.0).contains(&v) {
                        out.push(t);
                    }
                }
            }
            Edge::Custom(ref e) => e.0.ray_breaks(ox, oy, c, s, out),
        }
    }

    /// Ray directions from `o` along which the crossing pattern changes.
    pub fn critical_angles(&self, ox: f64, oy: f64, out: &mut Vec<f64>) {
        match *self {
            Edge::Circle { cx, cy, r } => {
                let (dx, dy) = (cx - ox, cy - oy);
                let dist = dx.hypot(dy);
                let phi = dy.atan2(dx);
                if dist > r * (1.0 + 1e-12) {
                    let delta = (r / dist).asin();
                    out.push(phi - delta);
                    out.push(phi + delta);
                } else if dist > r * (1.0 - 1e-12) {
                    out.push(phi + PI / 2.0);
                    out.push(phi - PI / 2.0);
                }
            }
            Edge::Line { angle, .. } => {
                out.push(angle);
                out.push(angle + PI);
            }
            Edge::Polyline { ref points, closed } => {
                // A vertex is critical where the chain turns back as seen from
                // `o` (a grazing ray) and at the ends of an open chain.
                let n = points.len();
                let cross = |a: [f64; 2], b: [f64; 2]| (a[0] - ox) * (b[1] - oy) - (a[1] - oy) * (b[0] - ox);
                for k in 0..n {
                    let p = points[k];
                    if p[0] == ox && p[1] == oy {
                        continue;
                    }
                    let prev = if k > 0 {
                        Some(points[k - 1])
                    } else if closed {
                        Some(points[n - 1])
                    } else {
                        None
                    };
                    let next = if k + 1 < n {
                        Some(points[k + 1])
                    } else if closed {
                        Some(points[0])
                    } else {
                        None
                    };
                    let critical = match (prev, next) {
                        (Some(a), Some(b)) => cross(a, p) * cross(p, b) <= 0.0,
                        _ => true,
                    };
                    if critical {
                        out.push((p[1] - oy).atan2(p[0] - ox));
                    }
                }
            }
            Edge::Custom(ref e) => e.0.angle_breaks(ox, oy, out),
        }
    }

    /// Position of a vertical edge, if it is one.
    pub(crate) fn vertical_x(&self) -> Option<f64> {
        match *self {
            Edge::Line { x0, y0, angle } if angle.cos().abs() < 1e-14 => {
                let _ = y0;
                Some(x0)
            }
            _ => None,
        }
    }
}

fn segments(points: &[[f64; 2]], closed: bool) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    let wrap = (closed && points.len() > 2).then(|| (points[points.len() - 1], points[0]));
    points.windows(2).map(|w| (w[0], w[1])).chain(wrap)
}

/// Breakpoint provider for polar quadrature around an origin.
pub trait RayBreaks: Sync {
    /// Appends ray parameters `t > 0` where `o + t (c, s)` meets a non-smooth feature.
    fn ray_breaks(&self, ox: f64, oy: f64, c: f64, s: f64, out: &mut Vec<f64>);
    /// Appends ray angles from `o` at which the set of crossings changes.
    fn angle_breaks(&self, ox: f64, oy: f64, out: &mut Vec<f64>);
}

/// Edges plus an optional support rectangle.
#[derive(Debug, Clone, Default)]
pub struct EdgeSet {
    pub edges: Vec<Edge>,
    pub rect: Option<Rect>,
}

impl RayBreaks for EdgeSet {
    fn ray_breaks(&self, ox: f64, oy: f64, c: f64, s: f64, out: &mut Vec<f64>) {
        for e in &self.edges {
            e.ray_hits(ox, oy, c, s, out);
        }
        if let Some(r) = &self.rect {
            if let Some((t0, t1)) = r.ray_interval(ox, oy, c, s) {
                out.push(t0);
                out.push(t1);
            }
        }
    }

    fn angle_breaks(&self, ox: f64, oy: f64, out: &mut Vec<f64>) {
        for e in &self.edges {
            e.critical_angles(ox, oy, out);
        }
        if let Some(r) = &self.rect {
            for (cx, cy) in r.corners() {
                if (cx - ox).abs() + (cy - oy).abs() > 0.0 {
                    out.push((cy - oy).atan2(cx - ox));
                }
            }
        }
    }
}

/// Reduces angles into `[lo, lo + period)`.
pub(crate) fn wrap_angles(angles: &mut [f64], lo: f64, period: f64) {
    for a in angles.iter_mut() {
        *a = lo + (*a - lo).rem_euclid(period);
    }
}
