//! Dubins connections between horizontal poses, extended to 3D with a
//! linear altitude profile.
//!
//! Headings are measured from the `x` axis toward the `y` axis, which in NED
//! coordinates is the usual azimuth `χ`. A "left" arc increases the heading.

use std::f64::consts::TAU;

use crate::flat::UavState;
use crate::{Error, Result, Vec2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Turn {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Word {
    Lsl,
    Lsr,
    Rsl,
    Rsr,
    Rlr,
    Lrl,
}

impl Word {
    pub const ALL: [Word; 6] = [Word::Lsl, Word::Lsr, Word::Rsl, Word::Rsr, Word::Rlr, Word::Lrl];

    pub fn turns(self) -> [Turn; 3] {
        use Turn::*;
        match self {
            Word::Lsl => [Left, Straight, Left],
            Word::Lsr => [Left, Straight, Right],
            Word::Rsl => [Right, Straight, Left],
            Word::Rsr => [Right, Straight, Right],
            Word::Rlr => [Right, Left, Right],
            Word::Lrl => [Left, Right, Left],
        }
    }
}

fn mod2pi(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

/// Normalized segment lengths `(t, p, q)` of a word for unit radius, or
/// `None` when the word cannot connect the poses.
fn word_lengths(word: Word, d: f64, alpha: f64, beta: f64) -> Option<[f64; 3]> {
    let (sa, sb, ca, cb) = (alpha.sin(), beta.sin(), alpha.cos(), beta.cos());
    let c_ab = (alpha - beta).cos();
    match word {
        Word::Lsl => {
            let p2 = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb);
            if p2 < 0.0 {
                return None;
            }
            let th = (cb - ca).atan2(d + sa - sb);
            Some([mod2pi(th - alpha), p2.sqrt(), mod2pi(beta - th)])
        }
        Word::Rsr => {
            let p2 = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa);
            if p2 < 0.0 {
                return None;
            }
            let th = (ca - cb).atan2(d - sa + sb);
            Some([mod2pi(alpha - th), p2.sqrt(), mod2pi(th - beta)])
        }
        Word::Lsr => {
            let p2 = -2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let th = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(th - alpha), p, mod2pi(th - beta)])
        }
        Word::Rsl => {
            let p2 = -2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let th = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(alpha - th), p, mod2pi(beta - th)])
        }
        Word::Rlr => {
            let c = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
            if c.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(TAU - c.acos());
            let t = mod2pi(alpha - (ca - cb).atan2(d - sa + sb) + p / 2.0);
            Some([t, p, mod2pi(alpha - beta - t + p)])
        }
        Word::Lrl => {
            let c = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
            if c.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(TAU - c.acos());
            let t = mod2pi(-alpha - (ca - cb).atan2(d + sa - sb) + p / 2.0);
            Some([t, p, mod2pi(beta - alpha - t + p)])
        }
    }
}

/// Advances a pose along one primitive of normalized length `s` (unit radius).
fn advance(pos: Vec2, heading: f64, turn: Turn, s: f64) -> (Vec2, f64) {
    let (sh, ch) = heading.sin_cos();
    match turn {
        Turn::Straight => (pos + Vec2::new(ch, sh) * s, heading),
        Turn::Left => {
            let h = heading + s;
            (pos + Vec2::new(h.sin() - sh, ch - h.cos()), h)
        }
        Turn::Right => {
            let h = heading - s;
            (pos + Vec2::new(sh - h.sin(), h.cos() - ch), h)
        }
    }
}

/// Planar Dubins path.
#[derive(Debug, Clone, PartialEq)]
pub struct DubinsPath {
    pub start: Vec2,
    pub heading: f64,
    pub radius: f64,
    pub word: Word,
    /// Segment lengths in units of `radius`.
    pub segments: [f64; 3],
}

impl DubinsPath {
    /// All feasible words between two poses, unsorted.
    pub fn candidates(start: Vec2, h0: f64, goal: Vec2, h1: f64, radius: f64) -> Vec<DubinsPath> {
        let delta = (goal - start) / radius;
        let d = delta.norm();
        let theta = if d > 0.0 { mod2pi(delta.y.atan2(delta.x)) } else { 0.0 };
        let (alpha, beta) = (mod2pi(h0 - theta), mod2pi(h1 - theta));
        Word::ALL
            .iter()
            .filter_map(|&word| {
                word_lengths(word, d, alpha, beta).map(|segments| DubinsPath { start, heading: h0, radius, word, segments })
            })
            .collect()
    }

    /// Shortest of the six words.
    pub fn shortest(start: Vec2, h0: f64, goal: Vec2, h1: f64, radius: f64) -> Option<DubinsPath> {
        Self::candidates(start, h0, goal, h1, radius).into_iter().min_by(|a, b| a.length().total_cmp(&b.length()))
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().sum::<f64>() * self.radius
    }

    /// Pose at arc length `s`, clamped to `[0, length]`.
    pub fn sample(&self, s: f64) -> (Vec2, f64) {
        let mut rem = (s / self.radius).clamp(0.0, self.segments.iter().sum());
        let mut pos = Vec2::zeros();
        let mut heading = self.heading;
        for (turn, &len) in self.word.turns().iter().zip(&self.segments) {
            let step = rem.min(len);
            (pos, heading) = advance(pos, heading, *turn, step);
            rem -= step;
            if rem <= 0.0 {
                break;
            }
        }
        (self.start + pos * self.radius, heading)
    }

    pub fn end(&self) -> (Vec2, f64) {
        self.sample(self.length())
    }
}

/// Horizontal Dubins path with a constant-slope altitude profile. Extra full
/// loops are added on the first turning circle when the direct path would
/// need a flight-path angle outside the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DubinsPath3D {
    pub horizontal: DubinsPath,
    pub loops: usize,
    pub z0: f64,
    pub dz: f64,
}

impl DubinsPath3D {
    pub fn horizontal_length(&self) -> f64 {
        self.horizontal.length() + self.loops as f64 * TAU * self.horizontal.radius
    }

    pub fn length(&self) -> f64 {
        self.horizontal_length().hypot(self.dz)
    }

    /// Flight-path angle along the path (NED: climbing is negative `dz`).
    pub fn flight_path(&self) -> f64 {
        (-self.dz).atan2(self.horizontal_length())
    }

    /// Point at fraction `u ∈ [0, 1]` of the arc length.
    pub fn point_at(&self, u: f64) -> Vec3 {
        let u = u.clamp(0.0, 1.0);
        let s = u * self.horizontal_length();
        let loop_len = self.loops as f64 * TAU * self.horizontal.radius;
        let xy = if s <= loop_len {
            // a loop on the first primitive's circle; a straight first
            // primitive never occurs since every word starts with an arc
            let turn = self.horizontal.word.turns()[0];
            let (pos, _) = advance(Vec2::zeros(), self.horizontal.heading, turn, s / self.horizontal.radius);
            self.horizontal.start + pos * self.horizontal.radius
        } else {
            self.horizontal.sample(s - loop_len).0
        };
        Vec3::new(xy.x, xy.y, self.z0 + u * self.dz)
    }
}

/// 3D Dubins connection at turn radius `radius` with flight-path bounds
/// `[gamma_min, gamma_max]` (radians).
pub fn dubins3d(start: &UavState, goal: &UavState, radius: f64, gamma_min: f64, gamma_max: f64) -> Result<DubinsPath3D> {
    if !(radius > 0.0) || !(gamma_max > 0.0) || !(gamma_min < 0.0) {
        return Err(Error::InitFailure(format!(
            "turn radius {radius} and flight-path bounds [{gamma_min}, {gamma_max}] must bracket level flight"
        )));
    }
    let p0 = start.position.xy();
    let p1 = goal.position.xy();
    let dz = goal.position.z - start.position.z;
    let scale = radius.max(p0.norm()).max(p1.norm());
    let heading_gap = mod2pi(goal.heading - start.heading);
    let same_heading = heading_gap.min(TAU - heading_gap) < 1e-12;
    if (p1 - p0).norm() <= 1e-12 * scale && same_heading && dz.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateEndpoints);
    }
    let horizontal = DubinsPath::shortest(p0, start.heading, p1, goal.heading, radius)
        .ok_or_else(|| Error::InitFailure("no Dubins word connects the endpoints".into()))?;
    // climbing means dz < 0 in NED
    let slope_limit = if dz < 0.0 { gamma_max.tan() } else { (-gamma_min).tan() };
    let needed = dz.abs() / slope_limit;
    let base = horizontal.length();
    let loops = if needed > base { ((needed - base) / (TAU * radius)).ceil() as usize } else { 0 };
    Ok(DubinsPath3D { horizontal, loops, z0: start.position.z, dz })
}

/// Straight-line lower bound used in tests and sanity checks.
pub fn euclidean_gap(start: &UavState, goal: &UavState) -> f64 {
    (goal.position - start.position).norm()
}
