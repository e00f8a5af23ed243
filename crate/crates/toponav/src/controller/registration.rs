//! Correlative scan registration: score candidate rigid transforms of the
//! live scan against likelihood fields rasterized from reference frames.
//! Coarse-to-fine over a (dx, dy, dtheta) window, with a cheap tracked
//! mode once a lock exists.

use crate::geometry::Pose2;
use crate::sim::Observation;

/// Likelihood field resolution, meters per cell.
const FIELD_RES: f64 = 0.1;
/// Gaussian splat sigma, meters.
const SPLAT_SIGMA: f64 = 0.15;
/// Splat stamp half-width in cells.
const SPLAT_HALF: i64 = 5;
/// Scans with fewer hit returns than this cannot be registered.
const MIN_HITS: usize = 8;

/// Full-sweep search window.
const FULL_XY: f64 = 2.0;
const FULL_XY_STEP: f64 = 0.25;
const FULL_THETA: f64 = 0.872_664_625_997_164_7; // 50 deg
const FULL_THETA_STEP: f64 = 0.087_266_462_599_716_47; // 5 deg

/// Tracked-mode window around the previous estimate.
const TRACK_XY: f64 = 0.3;
const TRACK_XY_STEP: f64 = 0.1;
const TRACK_THETA: f64 = 0.218_166_156_499_291_2; // 12.5 deg
const TRACK_THETA_STEP: f64 = 0.043_633_231_299_858_24; // 2.5 deg

/// Refinement window around the best coarse candidate.
const FINE_XY: f64 = 0.1;
const FINE_XY_STEP: f64 = 0.05;
const FINE_THETA: f64 = 0.034_906_585_039_886_59; // 2 deg
const FINE_THETA_STEP: f64 = 0.017_453_292_519_943_295; // 1 deg

/// Candidates scoring within this band of the maximum count as tied.
/// Aliased geometry (a straight corridor seen from its middle) produces
/// whole ridges of near-equal transforms whose residual differences are
/// raster noise; ties resolve structurally — toward a preferred pose and
/// the earliest context frame — instead of by that noise.
const TIE_BAND: f64 = 0.03;

/// Rasterized likelihood of obstacle presence around a reference scan.
pub struct LikelihoodField {
    size: usize,
    origin: f64,
    data: Vec<f32>,
    hits: usize,
}

impl LikelihoodField {
    pub fn build(reference: &Observation, fov: f64, max_range: f64) -> Self {
        let half = max_range + 0.5;
        let size = (2.0 * half / FIELD_RES).ceil() as usize + 1;
        let mut data = vec![0.0f32; size * size];
        let inv_two_sigma2 = 1.0 / (2.0 * SPLAT_SIGMA * SPLAT_SIGMA);
        // evaluate the kernel at each cell's true distance to the
        // endpoint; a rounded-center stamp carries a raster phase error
        // (up to half a cell) that systematically biases the match
        let splat = |ex: f64, ey: f64, data: &mut Vec<f32>| {
            let cx = ((ex + half) / FIELD_RES).round() as i64;
            let cy = ((ey + half) / FIELD_RES).round() as i64;
            for dy in -SPLAT_HALF..=SPLAT_HALF {
                for dx in -SPLAT_HALF..=SPLAT_HALF {
                    let (gx, gy) = (cx + dx, cy + dy);
                    if gx < 0 || gy < 0 || gx >= size as i64 || gy >= size as i64 {
                        continue;
                    }
                    let px = -half + gx as f64 * FIELD_RES;
                    let py = -half + gy as f64 * FIELD_RES;
                    let d2 = (px - ex).powi(2) + (py - ey).powi(2);
                    let v = (-d2 * inv_two_sigma2).exp() as f32;
                    let idx = gy as usize * size + gx as usize;
                    if v > data[idx] {
                        data[idx] = v;
                    }
                }
            }
        };
        let mut hits = 0usize;
        let n = reference.depth.len();
        let mut prev: Option<(f64, f64)> = None;
        for (i, &d) in reference.depth.iter().enumerate() {
            if d >= max_range - 1e-9 {
                prev = None;
                continue; // no-hit ray: no endpoint
            }
            hits += 1;
            let b = Observation::ray_bearing(fov, n, i);
            let (ex, ey) = (d * b.cos(), d * b.sin());
            splat(ex, ey, &mut data);
            // densify the surface between adjacent returns so walls form
            // flat ridges; otherwise sliding along a wall rides splat
            // bumps and the centered prior cannot break aliasing ties
            if let Some((px, py)) = prev {
                let gap = ((ex - px).powi(2) + (ey - py).powi(2)).sqrt();
                if gap < 0.5 {
                    let steps = (gap / (FIELD_RES * 0.5)).ceil() as usize;
                    for s in 1..steps {
                        let t = s as f64 / steps as f64;
                        splat(px + t * (ex - px), py + t * (ey - py), &mut data);
                    }
                }
            }
            prev = Some((ex, ey));
        }
        Self {
            size,
            origin: -half,
            data,
            hits,
        }
    }

    /// Bilinear field lookup. Smoothness matters: with nearest-cell
    /// sampling, sub-grid residuals turn aliasing-ridge ties into noise
    /// larger than the centered prior.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> f32 {
        let fx = (x - self.origin) / FIELD_RES;
        let fy = (y - self.origin) / FIELD_RES;
        let gx = fx.floor();
        let gy = fy.floor();
        let (ix, iy) = (gx as i64, gy as i64);
        if ix < 0 || iy < 0 || ix + 1 >= self.size as i64 || iy + 1 >= self.size as i64 {
            return 0.0;
        }
        let tx = (fx - gx) as f32;
        let ty = (fy - gy) as f32;
        let i = iy as usize * self.size + ix as usize;
        let v00 = self.data[i];
        let v10 = self.data[i + 1];
        let v01 = self.data[i + self.size];
        let v11 = self.data[i + self.size + 1];
        v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
    }
}

/// Best transform found for one reference frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    /// Index of the matched reference frame.
    pub frame_idx: usize,
    /// Pose of the live sensor expressed in the reference frame.
    pub pose_in_frame: Pose2,
    /// Mean endpoint likelihood in [0, 1].
    pub score: f64,
}

/// The rasterized reference frames of one target context, immutable and
/// shareable across matchers.
pub struct FieldSet {
    fields: Vec<LikelihoodField>,
    pub fov: f64,
    pub max_range: f64,
}

impl FieldSet {
    pub fn build(references: &[Observation], fov: f64, max_range: f64) -> Self {
        Self {
            fields: references
                .iter()
                .map(|r| LikelihoodField::build(r, fov, max_range))
                .collect(),
            fov,
            max_range,
        }
    }
}

/// Matcher over the reference frames of one target context.
pub struct ScanMatcher {
    fields: std::sync::Arc<FieldSet>,
    scratch: Vec<(f64, f64)>,
    scratch_half: Vec<(f64, f64)>,
    rotated: Vec<(f64, f64)>,
    scores: Vec<f32>,
}

struct FrameBest {
    result: MatchResult,
    max_raw: f64,
}

impl ScanMatcher {
    pub fn new(references: &[Observation], fov: f64, max_range: f64) -> Self {
        Self::with_fields(std::sync::Arc::new(FieldSet::build(references, fov, max_range)))
    }

    pub fn with_fields(fields: std::sync::Arc<FieldSet>) -> Self {
        Self {
            fields,
            scratch: Vec::new(),
            scratch_half: Vec::new(),
            rotated: Vec::new(),
            scores: Vec::new(),
        }
    }

    pub fn frame_count(&self) -> usize {
        self.fields.fields.len()
    }

    fn collect_endpoints(&mut self, live: &Observation) -> usize {
        self.scratch.clear();
        self.scratch_half.clear();
        let n = live.depth.len();
        for (i, &d) in live.depth.iter().enumerate() {
            if d >= self.fields.max_range - 1e-9 {
                continue;
            }
            let b = Observation::ray_bearing(self.fields.fov, n, i);
            let p = (d * b.cos(), d * b.sin());
            self.scratch.push(p);
            if self.scratch.len() % 2 == 0 {
                self.scratch_half.push(p);
            }
        }
        self.scratch.len()
    }

    /// Grid-search one frame over a window centered at `center`. The
    /// winner is the candidate closest to `prefer` among those scoring
    /// within TIE_BAND of the window maximum.
    fn search_frame(
        &mut self,
        frame_idx: usize,
        center: Pose2,
        prefer: Pose2,
        half_xy: f64,
        step_xy: f64,
        half_theta: f64,
        step_theta: f64,
        coarse: bool,
    ) -> FrameBest {
        // coarse passes score on half the points; walls are densified in
        // the field so the subsample loses little discrimination
        let pts: &[(f64, f64)] = if coarse && self.scratch_half.len() >= MIN_HITS / 2 {
            &self.scratch_half
        } else {
            &self.scratch
        };
        let n_pts = pts.len() as f64;
        let theta_steps = (half_theta / step_theta).round() as i64;
        let xy_steps = (half_xy / step_xy).round() as i64;
        let nxy = (2 * xy_steps + 1) as usize;
        let ntheta = (2 * theta_steps + 1) as usize;
        self.scores.clear();
        self.scores.resize(ntheta * nxy * nxy, 0.0);
        {
            let field = &self.fields.fields[frame_idx];
            let mut out = 0usize;
            for ti in -theta_steps..=theta_steps {
                let theta = center.theta + ti as f64 * step_theta;
                let (s, c) = theta.sin_cos();
                self.rotated.clear();
                for &(px, py) in pts {
                    self.rotated.push((c * px - s * py, s * px + c * py));
                }
                for yi in -xy_steps..=xy_steps {
                    let dy = center.y + yi as f64 * step_xy;
                    for xi in -xy_steps..=xy_steps {
                        let dx = center.x + xi as f64 * step_xy;
                        let mut sum = 0.0f32;
                        for &(rx, ry) in &self.rotated {
                            sum += field.sample(rx + dx, ry + dy);
                        }
                        self.scores[out] = sum;
                        out += 1;
                    }
                }
            }
        }
        let max_raw = self.scores.iter().cloned().fold(0.0f32, f32::max) as f64 / n_pts;
        let floor = ((max_raw - TIE_BAND) * n_pts) as f32;
        let mut best_pref = f64::INFINITY;
        let mut best = MatchResult {
            frame_idx,
            pose_in_frame: center,
            score: 0.0,
        };
        let mut idx = 0usize;
        for ti in -theta_steps..=theta_steps {
            let theta = center.theta + ti as f64 * step_theta;
            for yi in -xy_steps..=xy_steps {
                let dy = center.y + yi as f64 * step_xy;
                for xi in -xy_steps..=xy_steps {
                    let dx = center.x + xi as f64 * step_xy;
                    let s = self.scores[idx];
                    idx += 1;
                    if s < floor {
                        continue;
                    }
                    let pref = (dx - prefer.x).abs()
                        + (dy - prefer.y).abs()
                        + (theta - prefer.theta).abs();
                    if pref < best_pref {
                        best_pref = pref;
                        best = MatchResult {
                            frame_idx,
                            pose_in_frame: Pose2::new(dx, dy, theta),
                            score: s as f64 / n_pts,
                        };
                    }
                }
            }
        }
        FrameBest {
            result: best,
            max_raw,
        }
    }

    fn refine(&mut self, coarse: MatchResult) -> MatchResult {
        let center = coarse.pose_in_frame;
        let fine = self.search_frame(
            coarse.frame_idx,
            center,
            center,
            FINE_XY,
            FINE_XY_STEP,
            FINE_THETA,
            FINE_THETA_STEP,
            false,
        );
        if fine.result.score >= coarse.score {
            fine.result
        } else {
            coarse
        }
    }

    /// Select among per-frame results: the earliest frame whose window
    /// maximum ties the global maximum. Under aliasing every frame ties
    /// and "assume the earliest frame" keeps the implied waypoint ahead.
    fn pick(&mut self, frames: Vec<FrameBest>, refine: bool) -> Option<MatchResult> {
        let global = frames
            .iter()
            .map(|f| f.max_raw)
            .fold(f64::NEG_INFINITY, f64::max);
        if !global.is_finite() {
            return None;
        }
        let chosen = frames
            .into_iter()
            .find(|f| f.max_raw >= global - TIE_BAND)
            .map(|f| f.result)?;
        Some(if refine { self.refine(chosen) } else { chosen })
    }

    /// Full sweep over every reference frame.
    pub fn match_full(&mut self, live: &Observation) -> Option<MatchResult> {
        if self.collect_endpoints(live) < MIN_HITS {
            return None;
        }
        let origin = Pose2::new(0.0, 0.0, 0.0);
        let mut results = Vec::with_capacity(self.fields.fields.len());
        for fi in 0..self.fields.fields.len() {
            if self.fields.fields[fi].hits < MIN_HITS {
                continue;
            }
            results.push(self.search_frame(
                fi,
                origin,
                origin,
                FULL_XY,
                FULL_XY_STEP,
                FULL_THETA,
                FULL_THETA_STEP,
                true,
            ));
        }
        self.pick(results, true)
    }

    /// Cheap search around a previous estimate. With `probe_neighbors`
    /// the adjacent reference frames are scored too, letting the lock
    /// slide along the context as the vehicle advances.
    pub fn match_tracked(
        &mut self,
        live: &Observation,
        prev: &MatchResult,
        probe_neighbors: bool,
    ) -> Option<MatchResult> {
        if self.collect_endpoints(live) < MIN_HITS {
            return None;
        }
        // probe the previous frame first so a stable lock stays put
        let mut order = vec![prev.frame_idx];
        if probe_neighbors {
            let lo = prev.frame_idx.saturating_sub(1);
            let hi = (prev.frame_idx + 1).min(self.fields.fields.len() - 1);
            if lo < prev.frame_idx {
                order.push(lo);
            }
            if hi > prev.frame_idx {
                order.push(hi);
            }
        }
        let mut results = Vec::with_capacity(order.len());
        for fi in order {
            if self.fields.fields[fi].hits < MIN_HITS {
                continue;
            }
            results.push(self.search_frame(
                fi,
                prev.pose_in_frame,
                prev.pose_in_frame,
                TRACK_XY,
                TRACK_XY_STEP,
                TRACK_THETA,
                TRACK_THETA_STEP,
                true,
            ));
        }
        // tracked precision (0.1 m / 2.5 deg) is enough for control;
        // skip the refine pass on the hot path
        self.pick(results, false)
    }
}
