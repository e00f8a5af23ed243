//! Procedurally built fixture environments used by the test and
//! experiment suites: a plain corridor, a multi-room floor plan, a ring
//! corridor, a symmetric twin-hallway world for aliasing studies, and a
//! cluttered hall. All are deterministic functions of nothing.

use crate::sim::Environment;
use std::path::Path;

pub const FIXTURE_NAMES: [&str; 5] = ["corridor", "rooms", "loop", "twin", "clutter"];

/// Build a fixture by name.
pub fn build(name: &str) -> Option<Environment> {
    match name {
        "corridor" => Some(corridor()),
        "rooms" => Some(rooms()),
        "loop" => Some(loop_world()),
        "twin" => Some(twin()),
        "clutter" => Some(clutter()),
        _ => None,
    }
}

/// Write every fixture as `<name>.grid` under `dir`.
pub fn write_all(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for name in FIXTURE_NAMES {
        let env = build(name).unwrap();
        std::fs::write(dir.join(format!("{name}.grid")), env.to_text())?;
    }
    Ok(())
}

/// Grid builder working in bottom-up cell coordinates (i = column,
/// j = row counted from y = 0), converted to the top-down text layout.
struct Builder {
    w: usize,
    h: usize,
    res: f64,
    occ: Vec<bool>,
}

impl Builder {
    fn open(w: usize, h: usize, res: f64) -> Self {
        Self { w, h, res, occ: vec![false; w * h] }
    }

    fn set(&mut self, i: usize, j: usize, occupied: bool) {
        if i < self.w && j < self.h {
            let row = self.h - 1 - j;
            self.occ[row * self.w + i] = occupied;
        }
    }

    fn fill(&mut self, i0: usize, i1: usize, j0: usize, j1: usize, occupied: bool) {
        for j in j0..=j1.min(self.h - 1) {
            for i in i0..=i1.min(self.w - 1) {
                self.set(i, j, occupied);
            }
        }
    }

    fn border(&mut self) {
        self.fill(0, self.w - 1, 0, 0, true);
        self.fill(0, self.w - 1, self.h - 1, self.h - 1, true);
        self.fill(0, 0, 0, self.h - 1, true);
        self.fill(self.w - 1, self.w - 1, 0, self.h - 1, true);
    }

    fn finish(self) -> Environment {
        Environment::new(self.w, self.h, self.res, self.occ).expect("fixture has free cells")
    }
}

/// 10 m x 5 m straight corridor: walls along the long sides only.
/// 800 cells, 720 free.
pub fn corridor() -> Environment {
    let mut b = Builder::open(40, 20, 0.25);
    b.fill(0, 39, 0, 0, true);
    b.fill(0, 39, 19, 19, true);
    b.finish()
}

/// 20 m x 14 m floor plan: five rooms around a central hallway with
/// doorways, plus an interior door joining the two lower rooms.
pub fn rooms() -> Environment {
    let mut b = Builder::open(80, 56, 0.25);
    b.border();
    // hallway walls at j = 24 and j = 31
    b.fill(1, 78, 24, 24, true);
    b.fill(1, 78, 31, 31, true);
    // lower rooms split at i = 40
    b.fill(40, 40, 1, 23, true);
    // upper rooms split at i = 27 and i = 53
    b.fill(27, 27, 32, 54, true);
    b.fill(53, 53, 32, 54, true);
    // doorways into the hallway
    b.fill(18, 22, 24, 24, false);
    b.fill(58, 62, 24, 24, false);
    b.fill(12, 16, 31, 31, false);
    b.fill(38, 42, 31, 31, false);
    b.fill(64, 68, 31, 31, false);
    // door between the lower rooms
    b.fill(40, 40, 10, 14, false);
    b.finish()
}

/// 16 m x 16 m ring corridor around a solid central block.
pub fn loop_world() -> Environment {
    let mut b = Builder::open(64, 64, 0.25);
    b.border();
    b.fill(16, 47, 16, 47, true);
    b.finish()
}

/// 14 m x 11 m symmetric twin: two identical vertical hallways joined by
/// a bottom corridor. Distinguishing geometry sits only at the
/// extremities (a chamber top-right, a pillar bottom-left), farther than
/// one sensor range from the hallway interiors.
pub fn twin() -> Environment {
    let mut b = Builder::open(56, 44, 0.25);
    b.fill(0, 55, 0, 43, true);
    // vertical hallways
    b.fill(6, 13, 10, 40, false);
    b.fill(42, 49, 10, 40, false);
    // bottom cross corridor
    b.fill(6, 49, 4, 9, false);
    // top-right chamber
    b.fill(36, 49, 34, 40, false);
    // bottom-left pillar
    b.fill(10, 11, 6, 7, true);
    b.finish()
}

/// 15 m x 12 m open hall scattered with 0.5 m square pillars.
pub fn clutter() -> Environment {
    let mut b = Builder::open(60, 48, 0.25);
    b.border();
    const PILLARS: [(usize, usize); 20] = [
        (8, 8),
        (20, 6),
        (32, 10),
        (44, 7),
        (52, 14),
        (12, 20),
        (26, 18),
        (38, 22),
        (50, 26),
        (10, 32),
        (22, 30),
        (34, 34),
        (46, 31),
        (54, 38),
        (16, 40),
        (30, 42),
        (44, 40),
        (6, 26),
        (56, 20),
        (40, 14),
    ];
    for (i, j) in PILLARS {
        b.fill(i, i + 1, j, j + 1, true);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_cell_counts() {
        let env = corridor();
        assert_eq!(env.cell_count(), 800);
        assert_eq!(env.free_cell_count(), 720);
    }

    #[test]
    fn all_fixtures_parse_roundtrip() {
        for name in FIXTURE_NAMES {
            let env = build(name).unwrap();
            let back = Environment::parse(&env.to_text()).unwrap();
            assert_eq!(env, back, "{name} round-trips");
            assert!(env.free_cell_count() > 100, "{name} has usable free space");
        }
    }

    #[test]
    fn checked_in_fixtures_match_generator() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        if !dir.exists() {
            // repo checkout without fixtures; nothing to compare
            return;
        }
        for name in FIXTURE_NAMES {
            let path = dir.join(format!("{name}.grid"));
            let on_disk = std::fs::read_to_string(&path).unwrap();
            assert_eq!(on_disk, build(name).unwrap().to_text(), "{name}.grid drifted");
        }
    }
}
