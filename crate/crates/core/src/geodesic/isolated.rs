use serde::Serialize;

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsolationProfile {
    pub delta: f64,
    /// `counts[m - 2]` is the number of points among the first `m` samples
    /// whose nearest neighbor in that prefix is farther than `delta`.
    pub counts: Vec<usize>,
}

impl IsolationProfile {
    pub fn last(&self) -> usize {
        *self.counts.last().expect("at least one prefix")
    }
}

/// Counts `delta`-isolated samples for every prefix of the sequence. Purely
/// descriptive: finitely many samples cannot decide accumulation.
pub fn isolated_point_diagnostic<P, F>(samples: &[P], dist: F, delta: f64) -> Result<IsolationProfile>
where
    F: Fn(&P, &P) -> f64,
{
    if samples.len() < 2 {
        return domain("need at least two samples");
    }
    let mut nnd = vec![f64::INFINITY; samples.len()];
    let mut isolated = 0usize;
    let mut counts = Vec::with_capacity(samples.len() - 1);
    for m in 1..samples.len() {
        if m == 1 {
            // the first point becomes countable once it has a neighbor
            isolated += 1;
        }
        let mut own = f64::INFINITY;
        for i in 0..m {
            let d = dist(&samples[i], &samples[m]);
            own = own.min(d);
            if d < nnd[i] {
                if nnd[i] > delta && d <= delta {
                    isolated -= 1;
                }
                nnd[i] = d;
            }
        }
        nnd[m] = own;
        if own > delta {
            isolated += 1;
        }
        counts.push(isolated);
    }
    Ok(IsolationProfile { delta, counts })
}
