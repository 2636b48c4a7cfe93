//! Off-line corner map: ground-truth landmark corners, persistence, candidate
//! selection around a pose estimate, and nearest-neighbor lookup.

mod index;

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub use index::{IndexError, NNIndex, Neighbor};

use crate::geometry::{Point2, Pose};
use crate::simulator::WorldModel;

const HEADER: &str = "lotmap v1";
const ORIGIN_PREFIX: &str = "# origin:";

#[derive(Debug, Error)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate landmark id {id}")]
    DuplicateId { line: usize, id: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landmark {
    pub id: u32,
    pub position: Point2,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LandmarkMap {
    landmarks: Vec<Landmark>,
    pub origin_note: String,
    min_separation: f64,
}

fn min_pairwise_distance(landmarks: &[Landmark]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in landmarks.iter().enumerate() {
        for b in &landmarks[i + 1..] {
            best = best.min(a.position.distance(&b.position));
        }
    }
    best
}

impl LandmarkMap {
    /// Builds a map; ids must be unique.
    pub fn new(landmarks: Vec<Landmark>, origin_note: impl Into<String>) -> Result<Self, MapError> {
        let mut seen = std::collections::HashSet::new();
        for (i, l) in landmarks.iter().enumerate() {
            if !seen.insert(l.id) {
                return Err(MapError::DuplicateId { line: i + 1, id: l.id });
            }
        }
        Ok(Self {
            min_separation: min_pairwise_distance(&landmarks),
            landmarks,
            origin_note: origin_note.into(),
        })
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    /// Smallest distance between two landmarks (infinite for fewer than two).
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// True when every pair of landmarks is farther apart than `gate`, so an
    /// observation can fall inside the association gate of at most one landmark.
    pub fn is_distinct(&self, gate: f64) -> bool {
        self.min_separation > gate
    }

    /// Corner landmarks of every landmark-eligible obstacle in the world.
    pub fn from_world(world: &WorldModel) -> Self {
        let mut landmarks = Vec::new();
        for obstacle in world.obstacles.iter().filter(|o| o.kind.is_landmark()) {
            for corner in obstacle.corners() {
                landmarks.push(Landmark {
                    id: landmarks.len() as u32,
                    position: corner,
                });
            }
        }
        Self {
            min_separation: min_pairwise_distance(&landmarks),
            landmarks,
            origin_note: world.origin_note.clone(),
        }
    }

    /// Landmarks within `range + margin` of the estimate (closed ball), in map order.
    pub fn select_visible(&self, estimate: &Pose, range: f64, margin: f64) -> Vec<Landmark> {
        let center = estimate.position();
        let limit = range + margin;
        let limit2 = limit * limit;
        self.landmarks
            .iter()
            .filter(|l| l.position.distance_squared(&center) <= limit2)
            .copied()
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        if !self.origin_note.is_empty() {
            for line in self.origin_note.lines() {
                let _ = writeln!(out, "{ORIGIN_PREFIX} {line}");
            }
        }
        for l in &self.landmarks {
            let _ = writeln!(out, "{},{},{}", l.id, l.position.x, l.position.y);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MapError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => {
                return Err(MapError::Parse {
                    line: 1,
                    message: format!("expected header `{HEADER}`"),
                })
            }
        }

        let mut landmarks = Vec::new();
        let mut notes: Vec<&str> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in lines {
            let line_no = i + 1;
            let line = raw.trim();
            if let Some(note) = line.strip_prefix(ORIGIN_PREFIX) {
                notes.push(note.strip_prefix(' ').unwrap_or(note));
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| MapError::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected `id,easting,northing`, got {} fields",
                    fields.len()
                )));
            }
            let id: u32 = fields[0]
                .parse()
                .map_err(|e| parse_err(format!("bad id `{}`: {e}", fields[0])))?;
            let coord = |s: &str| -> Result<f64, MapError> {
                let v: f64 = s
                    .parse()
                    .map_err(|e| parse_err(format!("bad coordinate `{s}`: {e}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(format!("non-finite coordinate `{s}`")))
                }
            };
            let position = Point2::new(coord(fields[1])?, coord(fields[2])?);
            if !seen.insert(id) {
                return Err(MapError::DuplicateId { line: line_no, id });
            }
            landmarks.push(Landmark { id, position });
        }

        Ok(Self {
            min_separation: min_pairwise_distance(&landmarks),
            landmarks,
            origin_note: notes.join("\n"),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MapError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
