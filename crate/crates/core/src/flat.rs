//! Differential-flatness mappings between the vehicle's state/control space
//! and the flat output (position and its time derivatives).
//!
//! Frame convention is north-east-down: `e3 = [0, 0, 1]` points down and
//! altitude is `-z`.

use serde::{Deserialize, Serialize};

use crate::{e3, Error, Result, Vec3};

/// Default singularity guard on `‖v‖` and `‖e3 × v‖`.
pub const V_EPS: f64 = 1e-6;

/// 3-DOF point-mass state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    /// NED position [m].
    pub position: Vec3,
    /// Flight speed [m/s].
    pub speed: f64,
    /// Heading angle, four-quadrant [rad].
    pub heading: f64,
    /// Flight-path angle, positive when climbing [rad].
    pub flight_path: f64,
}

impl UavState {
    pub fn new(position: Vec3, speed: f64, heading: f64, flight_path: f64) -> Self {
        Self { position, speed, heading, flight_path }
    }
}

/// Tangential, horizontal and vertical load factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadControls {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl LoadControls {
    pub const LEVEL: LoadControls = LoadControls { nx: 0.0, ny: 0.0, nz: 1.0 };

    pub fn new(nx: f64, ny: f64, nz: f64) -> Self {
        Self { nx, ny, nz }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.nx, self.ny, self.nz]
    }
}

/// Position and its first three time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlatPoint {
    pub p: Vec3,
    pub v: Vec3,
    pub a: Vec3,
    pub j: Vec3,
}

/// Speed-frame triad plus the unnormalized vectors it is built from.
#[derive(Debug, Clone, Copy)]
pub struct FrameVectors {
    pub r1: Vec3,
    pub r2: Vec3,
    pub r3: Vec3,
    /// Load-factor vector `a/g - e3`.
    pub n_g: Vec3,
    /// `e3 × v`
    pub w2: Vec3,
    /// `v × (e3 × v)`
    pub w3: Vec3,
}

/// Builds the speed frame at a flat point.
pub fn speed_frame(fp: &FlatPoint, g: f64, v_eps: f64) -> Result<FrameVectors> {
    let speed = fp.v.norm();
    if speed < v_eps {
        return Err(Error::SingularVelocity(speed));
    }
    let w2 = e3().cross(&fp.v);
    let w2_norm = w2.norm();
    if w2_norm < v_eps {
        return Err(Error::SingularVertical(w2_norm));
    }
    let w3 = fp.v.cross(&w2);
    // ‖w3‖ = ‖v‖‖w2‖ because v ⊥ w2
    let w3_norm = w3.norm();
    Ok(FrameVectors {
        r1: fp.v / speed,
        r2: w2 / w2_norm,
        r3: w3 / w3_norm,
        n_g: fp.a / g - e3(),
        w2,
        w3,
    })
}

/// Flat output -> state.
pub fn map_state(fp: &FlatPoint, v_eps: f64) -> Result<UavState> {
    let speed = fp.v.norm();
    if speed < v_eps {
        return Err(Error::SingularVelocity(speed));
    }
    Ok(UavState {
        position: fp.p,
        speed,
        heading: fp.v.y.atan2(fp.v.x),
        flight_path: -(fp.v.z / speed).clamp(-1.0, 1.0).asin(),
    })
}

/// Flat output -> load factors.
pub fn map_controls(fp: &FlatPoint, g: f64, v_eps: f64) -> Result<LoadControls> {
    let frame = speed_frame(fp, g, v_eps)?;
    Ok(controls_from_frame(&frame))
}

pub(crate) fn controls_from_frame(frame: &FrameVectors) -> LoadControls {
    LoadControls {
        nx: frame.n_g.dot(&frame.r1),
        ny: frame.n_g.dot(&frame.r2),
        nz: -frame.n_g.dot(&frame.r3),
    }
}

/// State and controls -> position, velocity and acceleration. Jerk is left
/// at zero since it is not determined by `(x, u)`.
pub fn inverse_map(state: &UavState, u: &LoadControls, g: f64) -> FlatPoint {
    let (sc, cc) = state.heading.sin_cos();
    let (sg, cg) = state.flight_path.sin_cos();
    let v = state.speed * Vec3::new(cg * cc, cg * sc, -sg);
    let rot = nalgebra::Matrix3::new(
        cg * cc, -sc, -cc * sg, //
        cg * sc, cc, -sc * sg, //
        -sg, 0.0, -cg,
    );
    let a = g * rot * Vec3::new(u.nx, u.ny, u.nz) + Vec3::new(0.0, 0.0, g);
    FlatPoint { p: state.position, v, a, j: Vec3::zeros() }
}

/// Aerodynamic drag used to recover thrust from the tangential load factor.
pub trait DragModel {
    fn drag(&self, u: &LoadControls, lift: f64) -> f64;
}

/// Drag-free vehicle.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDrag;

impl DragModel for ZeroDrag {
    fn drag(&self, _u: &LoadControls, _lift: f64) -> f64 {
        0.0
    }
}

/// Constant drag force [N].
#[derive(Debug, Clone, Copy)]
pub struct ConstantDrag(pub f64);

impl DragModel for ConstantDrag {
    fn drag(&self, _u: &LoadControls, _lift: f64) -> f64 {
        self.0
    }
}

/// Thrust, lift and bank angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalControls {
    /// Thrust [N].
    pub thrust: f64,
    /// Lift [N].
    pub lift: f64,
    /// Bank angle [rad].
    pub bank: f64,
}

/// Recovers thrust, lift and bank angle from load factors.
pub fn physical_controls(
    u: &LoadControls,
    mass: f64,
    g: f64,
    drag: &impl DragModel,
) -> Result<PhysicalControls> {
    if u.nz.abs() < 1e-12 {
        return Err(Error::ZeroNormalLoad(u.nz));
    }
    let weight = mass * g;
    let lift = weight * u.ny.hypot(u.nz);
    Ok(PhysicalControls {
        thrust: u.nx * weight + drag.drag(u, lift),
        lift,
        bank: (u.ny / u.nz).atan(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    const G: f64 = 9.81;

    fn fp(v: Vec3, a: Vec3) -> FlatPoint {
        FlatPoint { p: Vec3::zeros(), v, a, j: Vec3::zeros() }
    }

    #[test]
    fn level_flight_state() {
        let s = map_state(&fp(Vec3::new(30.0, 0.0, 0.0), Vec3::zeros()), V_EPS).unwrap();
        assert_eq!(s.speed, 30.0);
        assert_eq!(s.heading, 0.0);
        assert_eq!(s.flight_path, 0.0);
        let s = map_state(&fp(Vec3::new(0.0, 30.0, 0.0), Vec3::zeros()), V_EPS).unwrap();
        assert_relative_eq!(s.heading, FRAC_PI_2);
        assert_eq!(s.flight_path, 0.0);
    }

    #[test]
    fn climbing_state_round_trip() {
        let gamma = 10f64.to_radians();
        let v = Vec3::new(30.0 * gamma.cos(), 0.0, -30.0 * gamma.sin());
        let s = map_state(&fp(v, Vec3::zeros()), V_EPS).unwrap();
        assert_relative_eq!(s.speed, 30.0, epsilon = 1e-12);
        assert_relative_eq!(s.flight_path, gamma, epsilon = 1e-12);
        let back = inverse_map(&s, &LoadControls::LEVEL, G);
        assert_relative_eq!(back.v, v, epsilon = 1e-12);
    }

    #[test]
    fn level_controls() {
        let u = map_controls(&fp(Vec3::new(30.0, 0.0, 0.0), Vec3::zeros()), G, V_EPS).unwrap();
        assert_relative_eq!(u.nx, 0.0);
        assert_relative_eq!(u.ny, 0.0);
        assert_relative_eq!(u.nz, 1.0);
    }

    #[test]
    fn lateral_acceleration_maps_to_ny() {
        let a = Vec3::new(0.0, 0.2 * G, 0.0);
        let u = map_controls(&fp(Vec3::new(30.0, 0.0, 0.0), a), G, V_EPS).unwrap();
        assert_relative_eq!(u.nx, 0.0, epsilon = 1e-12);
        assert_relative_eq!(u.ny, 0.2, epsilon = 1e-12);
        assert_relative_eq!(u.nz, 1.0, epsilon = 1e-12);
        let state = map_state(&fp(Vec3::new(30.0, 0.0, 0.0), a), V_EPS).unwrap();
        assert_relative_eq!(inverse_map(&state, &u, G).a, a, epsilon = 1e-12);
    }

    #[test]
    fn steady_climb_gravity_split() {
        for deg in [-10.0f64, -3.0, 5.0, 10.0] {
            let gamma = deg.to_radians();
            let v = 35.0 * Vec3::new(gamma.cos(), 0.0, -gamma.sin());
            let u = map_controls(&fp(v, Vec3::zeros()), G, V_EPS).unwrap();
            assert_relative_eq!(u.nx, gamma.sin(), epsilon = 1e-12);
            assert_relative_eq!(u.ny, 0.0, epsilon = 1e-12);
            assert_relative_eq!(u.nz, gamma.cos(), epsilon = 1e-12);
            // gravity decomposition is unit-norm for a = 0
            assert_relative_eq!(u.nx * u.nx + u.ny * u.ny + u.nz * u.nz, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn inverse_map_level_and_heading() {
        let s = UavState::new(Vec3::zeros(), 30.0, 0.0, 0.0);
        let f = inverse_map(&s, &LoadControls::LEVEL, G);
        assert_relative_eq!(f.v, Vec3::new(30.0, 0.0, 0.0));
        assert_relative_eq!(f.a, Vec3::zeros(), epsilon = 1e-12);
        let s = UavState::new(Vec3::zeros(), 30.0, FRAC_PI_2, 0.0);
        let f = inverse_map(&s, &LoadControls::LEVEL, G);
        assert_relative_eq!(f.v, Vec3::new(0.0, 30.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn frame_is_orthonormal() {
        let f = fp(Vec3::new(12.0, -20.0, 4.0), Vec3::new(1.0, 2.0, -3.0));
        let fr = speed_frame(&f, G, V_EPS).unwrap();
        for r in [fr.r1, fr.r2, fr.r3] {
            assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-12);
        }
        assert!(fr.r1.dot(&fr.r2).abs() < 1e-12);
        assert!(fr.r1.dot(&fr.r3).abs() < 1e-12);
        assert!(fr.r2.dot(&fr.r3).abs() < 1e-12);
        assert_relative_eq!(fr.r1.cross(&fr.r2), fr.r3, epsilon = 1e-12);
        assert_eq!(fr.w2.dot(&f.v), 0.0);
        assert!(fr.w3.dot(&f.v).abs() < 1e-10);
    }

    #[test]
    fn singularity_guards() {
        let err = map_state(&fp(Vec3::new(1e-7, 0.0, 0.0), Vec3::zeros()), V_EPS);
        assert!(matches!(err, Err(Error::SingularVelocity(_))));
        let err = map_controls(&fp(Vec3::new(0.0, 0.0, -30.0), Vec3::zeros()), G, V_EPS);
        assert!(matches!(err, Err(Error::SingularVertical(_))));
        let err = map_controls(&fp(Vec3::new(1e-7, 0.0, -30.0), Vec3::zeros()), G, V_EPS);
        assert!(matches!(err, Err(Error::SingularVertical(_))));
        // just above the guard
        assert!(map_controls(&fp(Vec3::new(2e-6, 0.0, -30.0), Vec3::zeros()), G, V_EPS).is_ok());
    }

    #[test]
    fn physical_controls_examples() {
        let level = physical_controls(&LoadControls::LEVEL, 10.0, G, &ZeroDrag).unwrap();
        assert_eq!(level.thrust, 0.0);
        assert_relative_eq!(level.lift, 10.0 * G);
        assert_eq!(level.bank, 0.0);

        let turn = physical_controls(&LoadControls::new(0.0, 0.2, 1.0), 10.0, G, &ZeroDrag).unwrap();
        assert_relative_eq!(turn.bank.to_degrees(), 11.309932474020215, epsilon = 1e-9);

        let accel =
            physical_controls(&LoadControls::new(0.1, 0.0, 1.0), 10.0, G, &ConstantDrag(5.0)).unwrap();
        assert_relative_eq!(accel.thrust, 14.81, epsilon = 1e-12);

        assert!(matches!(
            physical_controls(&LoadControls::new(0.0, 0.1, 0.0), 10.0, G, &ZeroDrag),
            Err(Error::ZeroNormalLoad(_))
        ));
    }
}
