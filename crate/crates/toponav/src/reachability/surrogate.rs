//! Non-privileged reachability surrogate: a calibrated logistic model
//! over registration-derived features, fitted offline against oracle
//! rollout labels. Monotone non-increasing in estimated distance by
//! construction (the distance weight is constrained non-positive).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::config::{ControllerConfig, SimConfig};
use crate::controller::{AnchorContext, FieldSet, RegistrationPredictor, WaypointPrediction};
use crate::sim::{FrameId, Observation};

use super::{ReachEstimate, ReachEstimator, SourceKind};

pub const N_FEATURES: usize = 5;

/// Features extracted from one registration attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFeatures {
    pub score: f64,
    pub overlap_fwd: f64,
    pub overlap_bwd: f64,
    pub distance: f64,
    pub heading_mag: f64,
}

impl SurrogateFeatures {
    pub fn from_prediction(p: &WaypointPrediction) -> Self {
        Self {
            score: p.score,
            overlap_fwd: p.overlap.0,
            overlap_bwd: p.overlap.1,
            distance: p.target_dist,
            heading_mag: p.heading_diff.abs(),
        }
    }

    fn as_array(&self) -> [f64; N_FEATURES] {
        [
            self.score,
            self.overlap_fwd,
            self.overlap_bwd,
            self.distance,
            self.heading_mag,
        ]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CalibrationError {
    #[error("not enough samples to calibrate ({0} given)")]
    TooFewSamples(usize),
    #[error("calibration table not fitted")]
    NotFitted,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Fitted logistic calibration over standardized features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationTable {
    weights: [f64; N_FEATURES],
    bias: f64,
    mean: [f64; N_FEATURES],
    std: [f64; N_FEATURES],
    pub brier: f64,
    pub reliability_gap: f64,
    pub n_train: usize,
    pub n_eval: usize,
    pub config_hash: u64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl CalibrationTable {
    /// Fit on training pairs and score calibration on held-out pairs.
    /// The feature order puts distance at index 3; its weight is
    /// projected non-positive every step.
    pub fn fit(
        train: &[(SurrogateFeatures, bool)],
        held_out: &[(SurrogateFeatures, bool)],
        config_hash: u64,
    ) -> Result<Self, CalibrationError> {
        if train.len() < 20 || held_out.is_empty() {
            return Err(CalibrationError::TooFewSamples(train.len()));
        }
        let mut mean = [0.0; N_FEATURES];
        let mut std = [0.0; N_FEATURES];
        for (f, _) in train {
            for (i, v) in f.as_array().iter().enumerate() {
                mean[i] += v;
            }
        }
        for m in &mut mean {
            *m /= train.len() as f64;
        }
        for (f, _) in train {
            for (i, v) in f.as_array().iter().enumerate() {
                std[i] += (v - mean[i]).powi(2);
            }
        }
        for s in &mut std {
            *s = (*s / train.len() as f64).sqrt().max(1e-6);
        }
        let standardized: Vec<([f64; N_FEATURES], f64)> = train
            .iter()
            .map(|(f, y)| {
                let mut x = f.as_array();
                for i in 0..N_FEATURES {
                    x[i] = (x[i] - mean[i]) / std[i];
                }
                (x, if *y { 1.0 } else { 0.0 })
            })
            .collect();

        let mut w = [0.0; N_FEATURES];
        let mut b = 0.0;
        let lr = 0.5;
        let l2 = 1e-4;
        let n = standardized.len() as f64;
        for it in 0..4000 {
            let step = lr / (1.0 + it as f64 / 1000.0);
            let mut gw = [0.0; N_FEATURES];
            let mut gb = 0.0;
            for (x, y) in &standardized {
                let z: f64 = b + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
                let err = sigmoid(z) - y;
                for i in 0..N_FEATURES {
                    gw[i] += err * x[i];
                }
                gb += err;
            }
            for i in 0..N_FEATURES {
                w[i] -= step * (gw[i] / n + l2 * w[i]);
            }
            b -= step * gb / n;
            // isotonic constraint: larger estimated distance never raises p
            if w[3] > 0.0 {
                w[3] = 0.0;
            }
        }

        let mut table = Self {
            weights: w,
            bias: b,
            mean,
            std,
            brier: f64::NAN,
            reliability_gap: f64::NAN,
            n_train: train.len(),
            n_eval: held_out.len(),
            config_hash,
        };
        let (brier, gap) = table.evaluate(held_out);
        table.brier = brier;
        table.reliability_gap = gap;
        Ok(table)
    }

    /// Brier score and max 10-bin reliability gap on labeled pairs.
    pub fn evaluate(&self, pairs: &[(SurrogateFeatures, bool)]) -> (f64, f64) {
        let mut brier = 0.0;
        let mut bins = vec![(0.0f64, 0.0f64, 0usize); 10];
        for (f, y) in pairs {
            let p = self.predict(f);
            let y = if *y { 1.0 } else { 0.0 };
            brier += (p - y).powi(2);
            let b = ((p * 10.0) as usize).min(9);
            bins[b].0 += p;
            bins[b].1 += y;
            bins[b].2 += 1;
        }
        brier /= pairs.len() as f64;
        let gap = bins
            .iter()
            .filter(|(_, _, c)| *c >= 5)
            .map(|(ps, ys, c)| ((ps - ys) / *c as f64).abs())
            .fold(0.0, f64::max);
        (brier, gap)
    }

    pub fn predict(&self, f: &SurrogateFeatures) -> f64 {
        let x = f.as_array();
        let mut z = self.bias;
        for i in 0..N_FEATURES {
            z += self.weights[i] * (x[i] - self.mean[i]) / self.std[i];
        }
        sigmoid(z)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), CalibrationError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CalibrationError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Online reachability estimator: registration features through the
/// calibration table. NoMatch floors at p = 0.
pub struct SurrogateReachability {
    table: CalibrationTable,
    ctl: ControllerConfig,
    sim: SimConfig,
    fields: RwLock<HashMap<FrameId, Arc<FieldSet>>>,
}

impl SurrogateReachability {
    pub fn new(table: CalibrationTable, ctl: ControllerConfig, sim: SimConfig) -> Self {
        Self {
            table,
            ctl,
            sim,
            fields: RwLock::new(HashMap::new()),
        }
    }

    pub fn table(&self) -> &CalibrationTable {
        &self.table
    }

    fn field_set(&self, target: &AnchorContext) -> Arc<FieldSet> {
        if let Some(id) = target.frame_id() {
            if let Some(hit) = self.fields.read().unwrap().get(&id) {
                return hit.clone();
            }
            let built = Arc::new(FieldSet::build(&target.frames, self.sim.fov, self.sim.max_range));
            self.fields.write().unwrap().insert(id, built.clone());
            built
        } else {
            Arc::new(FieldSet::build(&target.frames, self.sim.fov, self.sim.max_range))
        }
    }

    /// Features for one (observation, target) pair, if registration
    /// finds the target at all.
    pub fn features(&self, source: &Observation, target: &AnchorContext) -> Option<SurrogateFeatures> {
        let fields = self.field_set(target);
        let mut pred = RegistrationPredictor::with_fields(fields, target, &self.ctl, &self.sim);
        pred.predict(source, target)
            .ok()
            .map(|p| SurrogateFeatures::from_prediction(&p))
    }

    pub fn predict_features(&self, f: &SurrogateFeatures) -> f64 {
        self.table.predict(f)
    }
}

impl ReachEstimator for SurrogateReachability {
    fn estimate(&self, source: &Observation, target: &AnchorContext) -> ReachEstimate {
        let p = match self.features(source, target) {
            Some(f) => self.table.predict(&f),
            None => 0.0,
        };
        ReachEstimate {
            p,
            n: 0,
            source_kind: SourceKind::Surrogate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic_samples(n: usize, seed: u64) -> Vec<(SurrogateFeatures, bool)> {
        // ground truth: success probability falls with distance and
        // rises with score/overlap
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let dist: f64 = rng.gen_range(0.0..4.0);
                let score: f64 = rng.gen_range(0.2..1.0);
                let ov: f64 = rng.gen_range(0.0..1.0);
                let heading: f64 = rng.gen_range(0.0..1.0);
                let p = sigmoid(3.0 * score + 2.0 * ov - 1.8 * dist + 1.0);
                let y = rng.gen_bool(p.clamp(0.001, 0.999));
                (
                    SurrogateFeatures {
                        score,
                        overlap_fwd: ov,
                        overlap_bwd: ov * 0.9,
                        distance: dist,
                        heading_mag: heading,
                    },
                    y,
                )
            })
            .collect()
    }

    #[test]
    fn fits_synthetic_ground_truth() {
        let train = synthetic_samples(800, 1);
        let held = synthetic_samples(300, 2);
        let table = CalibrationTable::fit(&train, &held, 7).unwrap();
        assert!(table.brier <= 0.15, "brier {}", table.brier);
        assert!(table.reliability_gap <= 0.15, "gap {}", table.reliability_gap);
    }

    #[test]
    fn outputs_are_probabilities_and_monotone_in_distance() {
        let train = synthetic_samples(800, 3);
        let held = synthetic_samples(200, 4);
        let table = CalibrationTable::fit(&train, &held, 7).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let f = SurrogateFeatures {
                score: 0.8,
                overlap_fwd: 0.7,
                overlap_bwd: 0.7,
                distance: 0.25 * i as f64,
                heading_mag: 0.2,
            };
            let p = table.predict(&f);
            assert!((0.0..=1.0).contains(&p));
            assert!(p <= prev + 1e-12, "distance must not raise p");
            prev = p;
        }
    }

    #[test]
    fn rejects_tiny_training_sets() {
        let train = synthetic_samples(5, 1);
        let held = synthetic_samples(5, 2);
        assert!(matches!(
            CalibrationTable::fit(&train, &held, 0),
            Err(CalibrationError::TooFewSamples(_))
        ));
    }

    #[test]
    fn table_roundtrips_through_json() {
        let train = synthetic_samples(100, 5);
        let held = synthetic_samples(50, 6);
        let table = CalibrationTable::fit(&train, &held, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calib.json");
        table.save(&path).unwrap();
        let back = CalibrationTable::load(&path).unwrap();
        let f = SurrogateFeatures {
            score: 0.5,
            overlap_fwd: 0.5,
            overlap_bwd: 0.5,
            distance: 1.0,
            heading_mag: 0.1,
        };
        assert_eq!(table.predict(&f), back.predict(&f));
    }
}
