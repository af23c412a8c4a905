//! Trajectory CSV: `t,x,y,z,V,chi,gamma,n_x,n_y,n_z,d_obs`.
//!
//! Time in s, position in m (north, east, down), speed in m/s, heading and
//! flight-path angle in degrees, load factors dimensionless, and `d_obs` the
//! horizontal distance in m from the position to the nearest cylinder
//! surface (empty when there are no obstacles). States where the flat
//! mapping is singular are written as `NaN`.

use std::io::{Read, Write};
use std::path::Path;

use flatfw_core::flat::{map_controls, map_state, V_EPS};
use flatfw_core::{FlatTrajectory, Scenario};
use serde::{Deserialize, Serialize};

use crate::metrics::{clearance, sample_times};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "V")]
    pub speed: f64,
    pub chi: f64,
    pub gamma: f64,
    pub n_x: f64,
    pub n_y: f64,
    pub n_z: f64,
    pub d_obs: Option<f64>,
}

/// Rows on a `dt` grid that always includes both endpoints.
pub fn trajectory_rows(traj: &FlatTrajectory, scenario: &Scenario, dt: f64) -> Vec<TrajectoryRow> {
    sample_times(traj.duration(), dt)
        .into_iter()
        .map(|t| {
            let fp = traj.evaluate(t).expect("sample time inside the domain");
            let nan = f64::NAN;
            let (speed, chi, gamma) = map_state(&fp, V_EPS)
                .map(|s| (s.speed, s.heading.to_degrees(), s.flight_path.to_degrees()))
                .unwrap_or((nan, nan, nan));
            let u = map_controls(&fp, scenario.gravity, V_EPS).map(|u| u.as_array()).unwrap_or([nan; 3]);
            let d = clearance(scenario, &fp.p);
            TrajectoryRow {
                t,
                x: fp.p.x,
                y: fp.p.y,
                z: fp.p.z,
                speed,
                chi,
                gamma,
                n_x: u[0],
                n_y: u[1],
                n_z: u[2],
                d_obs: d.is_finite().then_some(d),
            }
        })
        .collect()
}

pub fn write_rows<W: Write>(rows: &[TrajectoryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> csv::Result<Vec<TrajectoryRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn export_trajectory(traj: &FlatTrajectory, scenario: &Scenario, dt: f64, path: impl AsRef<Path>) -> std::io::Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_rows(&trajectory_rows(traj, scenario, dt), file).map_err(std::io::Error::other)
}
