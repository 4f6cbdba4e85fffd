use std::io::BufRead;
use std::sync::Arc;

use arc_swap::ArcSwap;

use crate::geom::Point3;

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trajectory has no keyframes")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Keyframed HIP path, linearly interpolated between keyframes and held
/// constant outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    keys: Vec<(u64, Point3)>,
}

impl Trajectory {
    /// Keyframe ticks must be strictly increasing.
    pub fn new(keys: Vec<(u64, Point3)>) -> Result<Self, TrajectoryError> {
        if keys.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for (i, w) in keys.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(TrajectoryError::Parse {
                    line: i + 2,
                    message: format!("tick {} does not follow {}", w[1].0, w[0].0),
                });
            }
        }
        if let Some(i) = keys.iter().position(|(_, p)| !crate::geom::is_finite_point(p)) {
            return Err(TrajectoryError::Parse {
                line: i + 1,
                message: "non-finite position".into(),
            });
        }
        Ok(Self { keys })
    }

    /// A single fixed position.
    pub fn constant(p: Point3) -> Self {
        Self { keys: vec![(0, p)] }
    }

    pub fn keyframes(&self) -> &[(u64, Point3)] {
        &self.keys
    }

    pub fn last_tick(&self) -> u64 {
        self.keys.last().map(|k| k.0).unwrap_or(0)
    }

    pub fn position_at(&self, tick: u64) -> Point3 {
        let i = self.keys.partition_point(|(t, _)| *t <= tick);
        if i == 0 {
            return self.keys[0].1;
        }
        if i == self.keys.len() {
            return self.keys[i - 1].1;
        }
        let (t0, p0) = self.keys[i - 1];
        let (t1, p1) = self.keys[i];
        let u = (tick - t0) as f64 / (t1 - t0) as f64;
        p0 + (p1 - p0) * u
    }

    /// Reads `tick,x,y,z` rows. A leading header row and `#` comments are skipped.
    pub fn from_csv<R: BufRead>(source: R) -> Result<Self, TrajectoryError> {
        let mut keys = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if keys.is_empty() && t.starts_with("tick") {
                continue;
            }
            let cols: Vec<&str> = t.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(TrajectoryError::Parse {
                    line: lineno,
                    message: format!("expected 4 columns, found {}", cols.len()),
                });
            }
            let tick: u64 = cols[0].parse().map_err(|_| TrajectoryError::Parse {
                line: lineno,
                message: format!("bad tick {:?}", cols[0]),
            })?;
            let mut xyz = [0.0; 3];
            for (a, c) in cols[1..].iter().enumerate() {
                xyz[a] = c.parse().map_err(|_| TrajectoryError::Parse {
                    line: lineno,
                    message: format!("bad coordinate {c:?}"),
                })?;
            }
            keys.push((tick, Point3::from(xyz)));
        }
        Self::new(keys)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tick,x,y,z\n");
        for (t, p) in &self.keys {
            s.push_str(&format!("{},{},{},{}\n", t, p.x, p.y, p.z));
        }
        s
    }
}

/// Latest-value-wins cell for live HIP input. Writers replace, the loop
/// reads whatever is freshest.
#[derive(Debug)]
pub struct HipMailbox {
    cell: ArcSwap<Point3>,
}

impl HipMailbox {
    pub fn new(initial: Point3) -> Self {
        Self {
            cell: ArcSwap::from_pointee(initial),
        }
    }

    pub fn set(&self, p: Point3) {
        self.cell.store(Arc::new(p));
    }

    pub fn get(&self) -> Point3 {
        **self.cell.load()
    }
}

#[derive(Debug, Clone)]
pub enum HipSource {
    Scripted(Trajectory),
    Live(Arc<HipMailbox>),
}

impl HipSource {
    pub fn position(&self, tick: u64) -> Point3 {
        match self {
            HipSource::Scripted(t) => t.position_at(tick),
            HipSource::Live(m) => m.get(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_hold() {
        let t = Trajectory::new(vec![
            (10, Point3::new(0.0, 0.0, 0.0)),
            (20, Point3::new(1.0, 2.0, -1.0)),
        ])
        .unwrap();
        assert_eq!(t.position_at(0), Point3::origin());
        assert_eq!(t.position_at(10), Point3::origin());
        assert_eq!(t.position_at(15), Point3::new(0.5, 1.0, -0.5));
        assert_eq!(t.position_at(20), Point3::new(1.0, 2.0, -1.0));
        assert_eq!(t.position_at(1000), Point3::new(1.0, 2.0, -1.0));
    }

    #[test]
    fn non_increasing_ticks_rejected() {
        let keys = vec![(5, Point3::origin()), (5, Point3::origin())];
        assert!(matches!(Trajectory::new(keys), Err(TrajectoryError::Parse { line: 2, .. })));
        assert!(matches!(Trajectory::new(vec![]), Err(TrajectoryError::Empty)));
    }

    #[test]
    fn csv_round_trip() {
        let text = "tick,x,y,z\n0,0,0,0.1\n# comment\n100, 0.5,0,0\n";
        let t = Trajectory::from_csv(text.as_bytes()).unwrap();
        assert_eq!(t.keyframes().len(), 2);
        let again = Trajectory::from_csv(t.to_csv().as_bytes()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn csv_errors_name_line() {
        let err = Trajectory::from_csv("0,0,0,0\n1,0,zero,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, TrajectoryError::Parse { line: 2, .. }));
    }

    #[test]
    fn mailbox_latest_wins() {
        let m = Arc::new(HipMailbox::new(Point3::origin()));
        let src = HipSource::Live(m.clone());
        m.set(Point3::new(1.0, 0.0, 0.0));
        m.set(Point3::new(0.1, 0.1, 0.1));
        assert_eq!(src.position(7), Point3::new(0.1, 0.1, 0.1));
    }
}
