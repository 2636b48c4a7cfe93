use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Point2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObstacleKind {
    Pillar,
    ChargingPile,
    Stairwell,
    Wall,
    /// Parked cars sit below the scan plane of the roof-mounted LiDAR.
    Vehicle,
}

impl ObstacleKind {
    pub fn is_landmark(self) -> bool {
        matches!(self, Self::Pillar | Self::ChargingPile | Self::Stairwell)
    }

    pub fn is_scan_visible(self) -> bool {
        self != Self::Vehicle
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Pillar => "pillar",
            Self::ChargingPile => "charging_pile",
            Self::Stairwell => "stairwell",
            Self::Wall => "wall",
            Self::Vehicle => "vehicle",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "pillar" => Self::Pillar,
            "charging_pile" => Self::ChargingPile,
            "stairwell" => Self::Stairwell,
            "wall" => Self::Wall,
            "vehicle" => Self::Vehicle,
            _ => return None,
        })
    }
}

/// An oriented rectangle in the map frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obstacle {
    pub center: Point2,
    pub width: f64,
    pub height: f64,
    pub rotation: f64,
    pub kind: ObstacleKind,
}

impl Obstacle {
    pub fn new(center: Point2, width: f64, height: f64, rotation: f64, kind: ObstacleKind) -> Self {
        Self {
            center,
            width,
            height,
            rotation,
            kind,
        }
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Point2; 4] {
        let (s, c) = self.rotation.sin_cos();
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)].map(|(x, y)| {
            Point2::new(
                self.center.x + c * x - s * y,
                self.center.y + s * x + c * y,
            )
        })
    }

    pub fn bounding_radius(&self) -> f64 {
        self.width.hypot(self.height) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min: Point2,
    pub max: Point2,
}

impl Bounds {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min: Point2::new(min_x, min_y),
            max: Point2::new(max_x, max_y),
        }
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn diagonal(&self) -> f64 {
        self.min.distance(&self.max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldModel {
    pub obstacles: Vec<Obstacle>,
    pub bounds: Bounds,
    pub origin_note: String,
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("obstacle {index} ({kind}) extends outside the world bounds")]
    OutOfBounds { index: usize, kind: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const HEADER: &str = "lotworld v1";

impl WorldModel {
    pub fn empty(bounds: Bounds) -> Self {
        Self {
            obstacles: Vec::new(),
            bounds,
            origin_note: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for (index, o) in self.obstacles.iter().enumerate() {
            if !o.corners().iter().all(|c| self.bounds.contains(c)) {
                return Err(WorldError::OutOfBounds {
                    index,
                    kind: o.kind.name(),
                });
            }
        }
        Ok(())
    }

    pub fn count(&self, kind: ObstacleKind) -> usize {
        self.obstacles.iter().filter(|o| o.kind == kind).count()
    }

    /// Text form: header, `bounds,min_x,min_y,max_x,max_y`, optional
    /// `origin,<note>`, then `obstacle,kind,cx,cy,width,height,rotation` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\n");
        let b = &self.bounds;
        let _ = writeln!(out, "bounds,{},{},{},{}", b.min.x, b.min.y, b.max.x, b.max.y);
        if !self.origin_note.is_empty() {
            let _ = writeln!(out, "origin,{}", self.origin_note.replace('\n', " "));
        }
        for o in &self.obstacles {
            let _ = writeln!(
                out,
                "obstacle,{},{},{},{},{},{}",
                o.kind.name(),
                o.center.x,
                o.center.y,
                o.width,
                o.height,
                o.rotation
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, WorldError> {
        let mut lines = text.lines().enumerate();
        if !matches!(lines.next(), Some((_, h)) if h.trim() == HEADER) {
            return Err(WorldError::Parse {
                line: 1,
                message: format!("expected header `{HEADER}`"),
            });
        }
        let mut bounds = None;
        let mut origin_note = String::new();
        let mut obstacles = Vec::new();
        for (i, raw) in lines {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| WorldError::Parse {
                line: line_no,
                message,
            };
            let (tag, rest) = line.split_once(',').unwrap_or((line, ""));
            if tag == "origin" {
                origin_note = rest.to_string();
                continue;
            }
            let fields: Vec<&str> = rest.split(',').map(str::trim).collect();
            let num = |s: &str| -> Result<f64, WorldError> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("bad number `{s}`")))
            };
            match tag {
                "bounds" if fields.len() == 4 => {
                    bounds = Some(Bounds::new(
                        num(fields[0])?,
                        num(fields[1])?,
                        num(fields[2])?,
                        num(fields[3])?,
                    ));
                }
                "obstacle" if fields.len() == 6 => {
                    let kind = ObstacleKind::from_name(fields[0])
                        .ok_or_else(|| err(format!("unknown obstacle kind `{}`", fields[0])))?;
                    let (w, h) = (num(fields[3])?, num(fields[4])?);
                    if w <= 0.0 || h <= 0.0 {
                        return Err(err("obstacle sides must be positive".into()));
                    }
                    obstacles.push(Obstacle::new(
                        Point2::new(num(fields[1])?, num(fields[2])?),
                        w,
                        h,
                        num(fields[5])?,
                        kind,
                    ));
                }
                _ => return Err(err(format!("unrecognized record `{line}`"))),
            }
        }
        let bounds = bounds.ok_or(WorldError::Parse {
            line: 1,
            message: "missing bounds record".into(),
        })?;
        let world = Self {
            obstacles,
            bounds,
            origin_note,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), WorldError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Lot width (easting) and depth (northing), meters.
pub const LOT_SIZE: (f64, f64) = (90.0, 60.0);
pub const PILLAR_SIDE: f64 = 0.8;
pub const PILE_SIDE: f64 = 0.6;
const LAYOUT_SEED: u64 = 0x5041_524b_4c4f_5431;
const WALL_THICKNESS: f64 = 0.3;

/// Pillar grid columns / rows; the stairwell takes the place of one grid slot.
const PILLAR_COLUMNS: [f64; 6] = [10.0, 24.0, 38.0, 52.0, 66.0, 80.0];
const PILLAR_ROWS: [f64; 4] = [10.0, 26.0, 34.0, 50.0];
const STAIRWELL_SLOT: (usize, usize) = (4, 2);

/// The evaluation parking lot: 23 pillars on a jittered grid, 18 irregularly
/// spaced charging piles, one stairwell block, perimeter walls, and parked
/// cars. Generated from a fixed seed, so every call returns the same world.
pub fn default_lot() -> WorldModel {
    let mut rng = ChaCha8Rng::seed_from_u64(LAYOUT_SEED);
    let (w, h) = LOT_SIZE;
    let mut obstacles = Vec::new();

    for (col, &x) in PILLAR_COLUMNS.iter().enumerate() {
        for (row, &y) in PILLAR_ROWS.iter().enumerate() {
            if (col, row) == STAIRWELL_SLOT {
                continue;
            }
            let jitter = Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5));
            obstacles.push(Obstacle::new(
                Point2::new(x + jitter.x, y + jitter.y),
                PILLAR_SIDE,
                PILLAR_SIDE,
                0.0,
                ObstacleKind::Pillar,
            ));
        }
    }

    // Stairwell block in the central parking strip, next to the northern aisle.
    let (sx, sy) = (PILLAR_COLUMNS[STAIRWELL_SLOT.0], PILLAR_ROWS[STAIRWELL_SLOT.1]);
    obstacles.push(Obstacle::new(
        Point2::new(sx, sy + 0.5),
        6.0,
        4.0,
        0.0,
        ObstacleKind::Stairwell,
    ));

    // Charging piles: a row along the southern wall and a row along the
    // northern wall, with deliberately uneven spacing.
    let south: [f64; 9] = [6.0, 13.5, 19.0, 29.5, 36.0, 47.0, 55.5, 63.0, 76.5];
    let north: [f64; 9] = [8.5, 17.0, 27.5, 33.0, 44.5, 51.0, 61.5, 72.0, 84.0];
    for (xs, y) in [(south, 3.0), (north, h - 3.0)] {
        for x in xs {
            let dy = rng.random_range(-0.4..0.4);
            obstacles.push(Obstacle::new(
                Point2::new(x, y + dy),
                PILE_SIDE,
                PILE_SIDE,
                0.0,
                ObstacleKind::ChargingPile,
            ));
        }
    }

    let t = WALL_THICKNESS;
    obstacles.extend([
        Obstacle::new(Point2::new(w / 2.0, t / 2.0), w, t, 0.0, ObstacleKind::Wall),
        Obstacle::new(Point2::new(w / 2.0, h - t / 2.0), w, t, 0.0, ObstacleKind::Wall),
        Obstacle::new(Point2::new(t / 2.0, h / 2.0), t, h - 2.0 * t, 0.0, ObstacleKind::Wall),
        Obstacle::new(Point2::new(w - t / 2.0, h / 2.0), t, h - 2.0 * t, 0.0, ObstacleKind::Wall),
    ]);

    // Parked cars in the bays between pillar columns, nose towards the aisles.
    for &y in &PILLAR_ROWS {
        for pair in PILLAR_COLUMNS.windows(2) {
            let mid = (pair[0] + pair[1]) / 2.0;
            for dx in [-4.5, -2.0, 2.0, 4.5] {
                if rng.random_bool(0.6) {
                    obstacles.push(Obstacle::new(
                        Point2::new(mid + dx, y),
                        1.9,
                        4.6,
                        0.0,
                        ObstacleKind::Vehicle,
                    ));
                }
            }
        }
    }

    WorldModel {
        obstacles,
        bounds: Bounds::new(0.0, 0.0, w, h),
        origin_note: "local frame: south-west inner corner of the evaluation lot".into(),
    }
}
