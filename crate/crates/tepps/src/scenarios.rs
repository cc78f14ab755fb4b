//! Scenario machinery: hourly profile ingestion and K-means reduction of
//! joint (load, wind) points into weighted operating scenarios.
//!
//! Clustering runs on the 2-D points (load level, capacity factor) so the
//! correlation between demand and wind is preserved in the reduced set.

use crate::model::Scenario;
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Read;

/// What a profile column represents, which decides its normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Normalized by the series maximum so the peak is 1.0.
    Load,
    /// Taken as-is; values must lie in [0, 1].
    CapacityFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub values: Vec<f64>,
}

impl HourlySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Read one named column from a CSV stream with a header row.
pub fn ingest_profile<R: Read>(input: R, column: &str, kind: ProfileKind) -> Result<HourlySeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Csv(format!("column '{column}' not found in header")))?;

    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let cell = record
            .get(col)
            .ok_or_else(|| Error::Csv(format!("row {} too short", i + 2)))?;
        let v: f64 = cell
            .parse()
            .map_err(|_| Error::Csv(format!("non-numeric cell '{cell}' at row {}", i + 2)))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Csv("profile has no data rows".into()));
    }

    match kind {
        ProfileKind::Load => {
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max <= 0.0 {
                return Err(Error::Csv("load profile maximum is not positive".into()));
            }
            for v in &mut values {
                *v /= max;
            }
        }
        ProfileKind::CapacityFactor => {
            if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Csv(format!(
                    "capacity factor {bad} outside [0, 1]"
                )));
            }
        }
    }
    Ok(HourlySeries { values })
}

/// Reduce hourly (load, wind) pairs to `k` weighted scenarios with K-means.
///
/// k-means++ seeding from the given seed, Lloyd iterations until the
/// assignment is stable (at most 300 rounds), empty clusters repaired by
/// stealing the point farthest from its centroid. The result is
/// deterministic in (inputs, seed).
pub fn kmeans_reduce(
    load: &HourlySeries,
    wind: &HourlySeries,
    k: usize,
    seed: u64,
) -> Result<Vec<Scenario>> {
    if load.len() != wind.len() {
        return Err(Error::Schema(format!(
            "load and wind series lengths differ ({} vs {})",
            load.len(),
            wind.len()
        )));
    }
    let points: Vec<[f64; 2]> = load
        .values
        .iter()
        .zip(&wind.values)
        .map(|(&l, &w)| [l, w])
        .collect();
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Schema(format!("k = {k} outside 1..={n}")));
    }
    let mut distinct = points.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if k > distinct.len() {
        return Err(Error::Schema(format!(
            "k = {k} exceeds the {} distinct points",
            distinct.len()
        )));
    }

    let dist2 = |a: &[f64; 2], b: &[f64; 2]| {
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        dx * dx + dy * dy
    };

    // k-means++ seeding.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<[f64; 2]> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All mass on existing centroids; take the first point not yet
            // a centroid (there is one, since k <= distinct count).
            points
                .iter()
                .position(|p| centroids.iter().all(|c| dist2(p, c) > 0.0))
                .expect("a non-centroid point exists")
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        let c = points[next];
        centroids.push(c);
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, &c);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    // Lloyd iterations.
    let mut assignment = vec![0usize; n];
    let mut prev_wcss = f64::INFINITY;
    for _round in 0..300 {
        let mut changed = false;
        let mut wcss = 0.0;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, centre) in centroids.iter().enumerate() {
                let d = dist2(p, centre);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            wcss += best_d;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        // The within-cluster sum of squares never increases between rounds.
        debug_assert!(wcss <= prev_wcss + 1e-9 * (1.0 + prev_wcss.abs()));
        prev_wcss = wcss;

        // Recompute centroids; repair empty clusters by stealing the point
        // farthest from its current centroid.
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (i, &a) in assignment.iter().enumerate() {
            sums[a][0] += points[i][0];
            sums[a][1] += points[i][1];
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let (far, _) = points
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| counts[assignment[*i]] > 1)
                    .map(|(i, p)| (i, dist2(p, &centroids[assignment[i]])))
                    .fold((usize::MAX, -1.0), |acc, (i, d)| {
                        if d > acc.1 {
                            (i, d)
                        } else {
                            acc
                        }
                    });
                let old = assignment[far];
                sums[old][0] -= points[far][0];
                sums[old][1] -= points[far][1];
                counts[old] -= 1;
                assignment[far] = c;
                sums[c] = points[far];
                counts[c] = 1;
                changed = true;
            }
        }
        for c in 0..k {
            centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
        }
        if !changed && _round > 0 {
            break;
        }
    }

    let mut counts = vec![0usize; k];
    for &a in &assignment {
        counts[a] += 1;
    }
    let scenarios = centroids
        .iter()
        .enumerate()
        .map(|(c, centre)| Scenario {
            index: c,
            load_level: centre[0],
            wind_cf: vec![centre[1].clamp(0.0, 1.0)],
            hours: counts[c] as f64,
        })
        .collect();
    Ok(scenarios)
}

/// Build scenarios directly from (load level, capacity factor, hours) rows,
/// bypassing reduction. Used to reproduce published scenario tables.
pub fn scenarios_from_table(rows: &[(f64, f64, f64)]) -> Vec<Scenario> {
    rows.iter()
        .enumerate()
        .map(|(i, &(load_level, cf, hours))| Scenario {
            index: i,
            load_level,
            wind_cf: vec![cf],
            hours,
        })
        .collect()
}
