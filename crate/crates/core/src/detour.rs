//! Restart heuristic for iterates wedged in a blocked gap.
//!
//! Overlapping inflated obstacles form walls with no feasible passage. A path
//! whose initial guess crosses such a wall is pushed into the overlap from
//! both sides and stalls there. [`detour`] moves the crossing waypoints to
//! the nearer outer side of the wall so the iteration can resume in a
//! different homotopy class.

use crate::costs::{InflatedObstacle, Objective};
use crate::{Vec2, Vec3};

/// Lateral clearance added beyond the cluster edge, relative to the largest
/// inflated radius.
const CLEARANCE: f64 = 0.25;

/// Connected component of overlapping disks containing `seed`.
pub fn cluster(obstacles: &[InflatedObstacle], seed: usize) -> Vec<usize> {
    let mut members = vec![seed];
    let mut queue = vec![seed];
    while let Some(i) = queue.pop() {
        for (j, o) in obstacles.iter().enumerate() {
            if members.contains(&j) {
                continue;
            }
            let a = &obstacles[i];
            if (a.center - o.center).norm() < a.radius + o.radius {
                members.push(j);
                queue.push(j);
            }
        }
    }
    members
}

/// Decision vector with the waypoints near the deepest obstacle violation
/// shifted around its cluster, and the duration stretched with the path.
/// `None` if no sample violates an inflated obstacle.
pub fn detour(obj: &Objective, x: &[f64]) -> Option<Vec<f64>> {
    let obstacles = &obj.penalties.obstacles;
    let samples = obj.trajectory(x).samples(&obj.cache);
    let (mut worst, mut at) = (0.0, None);
    for fp in &samples {
        for (j, o) in obstacles.iter().enumerate() {
            let depth = o.radius - (fp.p.xy() - o.center).norm();
            if depth > worst {
                worst = depth;
                at = Some((fp, j));
            }
        }
    }
    let (fp, seed) = at?;
    let anchor = fp.p.xy();
    let s = obj.scenario();
    let span = (s.goal.position - s.start.position).xy();
    let tangent = [fp.v.xy(), span].into_iter().find(|v| v.norm() > 1e-9)?.normalize();
    let normal = Vec2::new(-tangent.y, tangent.x);

    let members = cluster(obstacles, seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut back, mut front) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut widest: f64 = 0.0;
    for &j in &members {
        let o = &obstacles[j];
        let rel = o.center - anchor;
        lo = lo.min(rel.dot(&normal) - o.radius);
        hi = hi.max(rel.dot(&normal) + o.radius);
        back = back.min(rel.dot(&tangent) - o.radius);
        front = front.max(rel.dot(&tangent) + o.radius);
        widest = widest.max(o.radius);
    }
    let margin = CLEARANCE * widest;
    let shift = if hi < -lo { hi + margin } else { lo - margin };
    let taper = widest.max(0.5 * (front - back));

    let (waypoints, duration) = obj.unpack(x);
    let moved: Vec<Vec3> = waypoints
        .iter()
        .map(|w| {
            let u = (w.xy() - anchor).dot(&tangent);
            let outside = (back - u).max(u - front).max(0.0);
            let weight = if outside >= taper { 0.0 } else { (0.5 * std::f64::consts::PI * outside / taper).cos().powi(2) };
            let offset = normal * (shift * weight);
            w + Vec3::new(offset.x, offset.y, 0.0)
        })
        .collect();
    let stretch = polyline_length(s.start.position, &moved, s.goal.position)
        / polyline_length(s.start.position, &waypoints, s.goal.position);
    Some(obj.pack(&moved, (duration * stretch).ln()))
}

fn polyline_length(start: Vec3, points: &[Vec3], end: Vec3) -> f64 {
    let mut prev = start;
    let mut total = 0.0;
    for p in points.iter().chain(std::iter::once(&end)) {
        total += (p - prev).norm();
        prev = *p;
    }
    total
}
