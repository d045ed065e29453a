//! CSV output for plotting: `t,x,y` trajectories and `index,x,y` waypoints.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use streamplan::Vec2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("refusing to write an empty trajectory")]
    EmptyTrajectory,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaypointRow {
    pub index: usize,
    pub x: f64,
    pub y: f64,
}

/// One row per point, `t = k * dt`.
pub fn write_trajectory<W: Write>(out: W, trajectory: &[Vec2], dt: f64) -> Result<(), ExportError> {
    if trajectory.is_empty() {
        return Err(ExportError::EmptyTrajectory);
    }
    let mut w = csv::Writer::from_writer(out);
    for (k, p) in trajectory.iter().enumerate() {
        w.serialize(TrajectoryRow {
            t: k as f64 * dt,
            x: p.x,
            y: p.y,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Like [`write_trajectory`] but to a file. Nothing is created on error.
pub fn export_trajectory(path: &Path, trajectory: &[Vec2], dt: f64) -> Result<(), ExportError> {
    if trajectory.is_empty() {
        return Err(ExportError::EmptyTrajectory);
    }
    write_trajectory(BufWriter::new(File::create(path)?), trajectory, dt)
}

pub fn export_waypoints(path: &Path, waypoints: &[Vec2]) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for (index, p) in waypoints.iter().enumerate() {
        w.serialize(WaypointRow {
            index,
            x: p.x,
            y: p.y,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(source: R) -> Result<Vec<TrajectoryRow>, ExportError> {
    let mut r = csv::Reader::from_reader(source);
    r.deserialize()
        .map(|row| row.map_err(ExportError::from))
        .collect()
}

pub fn read_waypoints<R: Read>(source: R) -> Result<Vec<WaypointRow>, ExportError> {
    let mut r = csv::Reader::from_reader(source);
    r.deserialize()
        .map(|row| row.map_err(ExportError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points_three_rows() {
        let mut buf = Vec::new();
        let traj = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.5, -2.0),
            Vec2::new(3.0, -4.0),
        ];
        write_trajectory(&mut buf, &traj, 750.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y");
        assert_eq!(lines.len(), 4);
        let rows = read_trajectory(text.as_bytes()).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.t).collect::<Vec<_>>(),
            vec![0.0, 750.0, 1500.0]
        );
        assert_eq!(rows[1].y, -2.0);
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        assert!(matches!(
            write_trajectory(Vec::new(), &[], 1.0),
            Err(ExportError::EmptyTrajectory)
        ));
    }
}
