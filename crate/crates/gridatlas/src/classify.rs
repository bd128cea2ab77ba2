//! Discretization of continuous values into class intervals for choropleth
//! and graduated styling. Intervals are left-closed/right-open except the
//! last, which is closed at the top edge.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakMethod {
    Quantile,
    Equal,
    Geometric,
    Manual,
}

impl BreakMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BreakMethod::Quantile => "quantile",
            BreakMethod::Equal => "equal",
            BreakMethod::Geometric => "geometric",
            BreakMethod::Manual => "manual",
        }
    }
}

/// Class interval set: k classes bounded by k+1 strictly ascending edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBreaks {
    pub method: BreakMethod,
    pub edges: Vec<f64>,
}

impl ClassBreaks {
    pub fn manual(edges: Vec<f64>) -> Result<Self> {
        ensure_ascending(&edges)?;
        Ok(ClassBreaks {
            method: BreakMethod::Manual,
            edges,
        })
    }

    pub fn k(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn min(&self) -> f64 {
        self.edges[0]
    }

    pub fn max(&self) -> f64 {
        *self.edges.last().unwrap()
    }
}

fn ensure_ascending(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::DegenerateClasses {
            detail: format!("need at least 2 edges, got {}", edges.len()),
        });
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::DegenerateClasses {
            detail: "edges are not strictly ascending".into(),
        });
    }
    Ok(())
}

/// Linear-interpolated order statistic (the common "type 7" definition):
/// h = (n−1)·p over the sorted sample.
fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quantile breaks: each class holds n/k ± 1 values when values are distinct.
pub fn breaks_quantile(values: &[f64], k: usize) -> Result<ClassBreaks> {
    if values.is_empty() {
        return Err(Error::EmptyDomain {
            what: "quantile breaks of an empty value list".into(),
        });
    }
    if k < 1 {
        return Err(Error::invalid_params("k must be >= 1"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut distinct = sorted.clone();
    distinct.dedup();
    if k > distinct.len() {
        return Err(Error::DegenerateClasses {
            detail: format!("k = {k} exceeds {} distinct values", distinct.len()),
        });
    }
    let edges: Vec<f64> = (0..=k)
        .map(|i| quantile_type7(&sorted, i as f64 / k as f64))
        .collect();
    ensure_ascending(&edges)?;
    Ok(ClassBreaks {
        method: BreakMethod::Quantile,
        edges,
    })
}

/// Equal-interval breaks over [min, max].
pub fn breaks_equal(min: f64, max: f64, k: usize) -> Result<ClassBreaks> {
    if !(max > min) {
        return Err(Error::DegenerateClasses {
            detail: format!("max {max} must exceed min {min}"),
        });
    }
    if k < 1 {
        return Err(Error::invalid_params("k must be >= 1"));
    }
    let edges: Vec<f64> = (0..=k)
        .map(|i| min + (max - min) * i as f64 / k as f64)
        .collect();
    ensure_ascending(&edges)?;
    Ok(ClassBreaks {
        method: BreakMethod::Equal,
        edges,
    })
}

/// Geometric progression edges: edge_i = min·(max/min)^(i/k).
/// Requires min > 0 (log scale).
pub fn breaks_geometric(min: f64, max: f64, k: usize) -> Result<ClassBreaks> {
    if !(min > 0.0) {
        return Err(Error::Domain {
            detail: format!("geometric breaks need min > 0, got {min}"),
        });
    }
    if !(max > min) {
        return Err(Error::DegenerateClasses {
            detail: format!("max {max} must exceed min {min}"),
        });
    }
    if k < 1 {
        return Err(Error::invalid_params("k must be >= 1"));
    }
    let ratio = max / min;
    let edges: Vec<f64> = (0..=k)
        .map(|i| {
            if i == 0 {
                min
            } else if i == k {
                max
            } else {
                min * ratio.powf(i as f64 / k as f64)
            }
        })
        .collect();
    ensure_ascending(&edges)?;
    Ok(ClassBreaks {
        method: BreakMethod::Geometric,
        edges,
    })
}

/// Where a value sits relative to the break range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeFlag {
    InRange,
    BelowMin,
    AboveMax,
    /// NaN input; callers render these in a dedicated "missing" style.
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classified {
    pub class: usize,
    pub flag: RangeFlag,
}

/// Class index of `value`: left-closed/right-open intervals, last interval
/// closed at the top. Out-of-range values clamp to the end classes and are
/// flagged rather than failing.
pub fn classify(value: f64, breaks: &ClassBreaks) -> Classified {
    if value.is_nan() {
        return Classified {
            class: 0,
            flag: RangeFlag::Missing,
        };
    }
    let k = breaks.k();
    if value < breaks.min() {
        return Classified {
            class: 0,
            flag: RangeFlag::BelowMin,
        };
    }
    if value > breaks.max() {
        return Classified {
            class: k - 1,
            flag: RangeFlag::AboveMax,
        };
    }
    if value == breaks.max() {
        return Classified {
            class: k - 1,
            flag: RangeFlag::InRange,
        };
    }
    // Count of edges <= value, minus one, is the class.
    let class = breaks.edges.partition_point(|&e| e <= value) - 1;
    Classified {
        class,
        flag: RangeFlag::InRange,
    }
}
