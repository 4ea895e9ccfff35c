use std::fmt;

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn of(delta: f64) -> Self {
        let d = delta.abs();
        if d <= 0.147 {
            Self::Negligible
        } else if d <= 0.33 {
            Self::Small
        } else if d <= 0.474 {
            Self::Medium
        } else {
            Self::Large
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Negligible => "negligible",
            Self::Small => "small",
            Self::Medium => "medium",
            Self::Large => "large",
        })
    }
}

/// `(#(a > b) - #(a < b)) / (|a| |b|)` over all cross pairs.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<(f64, Magnitude), StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut dominance: i64 = 0;
    for &x in a {
        let below = sorted.partition_point(|&y| y < x);
        let not_above = sorted.partition_point(|&y| y <= x);
        dominance += below as i64 - (sorted.len() - not_above) as i64;
    }
    let d = dominance as f64 / (a.len() * b.len()) as f64;
    Ok((d, Magnitude::of(d)))
}
