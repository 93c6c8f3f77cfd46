//! Seeded two-class toy datasets: concentric rings and interleaved half-moons.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DpsmError, Result};
use crate::graph::PointSet;

/// Inner ring radius relative to the outer ring.
pub const RING_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circles,
    Moons,
}

impl std::str::FromStr for Shape {
    type Err = DpsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circles" => Ok(Self::Circles),
            "moons" => Ok(Self::Moons),
            other => Err(DpsmError::InvalidParameter(format!("unknown shape `{other}`"))),
        }
    }
}

/// Generates `n` labelled 2-d points. The first class takes `n / 2` points.
///
/// Circles: unit ring (label 0) around a ring of radius [`RING_FACTOR`]
/// (label 1), evenly spaced angles, Gaussian noise on the radius.
/// Moons: upper unit half-circle (label 0) and a shifted lower half-circle
/// (label 1), with isotropic Gaussian noise.
pub fn generate(shape: Shape, n: usize, noise: f64, seed: u64) -> Result<PointSet> {
    if n < 4 {
        return Err(DpsmError::InvalidParameter(format!("need at least 4 points, got {n}")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(DpsmError::InvalidParameter(format!("noise must be non-negative, got {noise}")));
    }
    let normal = Normal::new(0.0, noise).map_err(|e| DpsmError::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_first = n / 2;
    let n_second = n - n_first;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    match shape {
        Shape::Circles => {
            for (label, count, radius) in [(0, n_first, 1.0), (1, n_second, RING_FACTOR)] {
                for i in 0..count {
                    let t = 2.0 * PI * i as f64 / count as f64;
                    let r = radius + normal.sample(&mut rng);
                    rows.push(vec![r * t.cos(), r * t.sin()]);
                    labels.push(label);
                }
            }
        }
        Shape::Moons => {
            let span = |i: usize, count: usize| if count > 1 { PI * i as f64 / (count - 1) as f64 } else { 0.0 };
            for i in 0..n_first {
                let t = span(i, n_first);
                rows.push(vec![t.cos(), t.sin()]);
                labels.push(0);
            }
            for i in 0..n_second {
                let t = span(i, n_second);
                rows.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
                labels.push(1);
            }
            for row in &mut rows {
                for x in row.iter_mut() {
                    *x += normal.sample(&mut rng);
                }
            }
        }
    }
    PointSet::new(rows, Some(labels))
}

/// Writes `x,y,...,label` rows (label omitted when absent).
pub fn write_points<W: Write>(points: &PointSet, mut out: W) -> std::io::Result<()> {
    for i in 0..points.len() {
        let coords: Vec<String> = points.point(i).iter().map(|x| format!("{x:.9}")).collect();
        match points.labels() {
            Some(l) => writeln!(out, "{},{}", coords.join(","), l[i])?,
            None => writeln!(out, "{}", coords.join(","))?,
        }
    }
    Ok(())
}
