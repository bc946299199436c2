//! Time grids: strictly increasing point sequences with refinement
//! helpers.
//!
//! Grid points are kept exactly as given, never snapped, so membership and
//! union use exact float equality. Refinement comparisons below rely on
//! that.

use crate::error::{Error, Result};

/// Minimal admissible gap; protects downstream divisions by gap lengths.
const MIN_GAP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
    stats: PartitionStats,
}

/// (smallest gap, largest gap, number of gaps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionStats {
    pub min_gap: f64,
    pub max_gap: f64,
    pub pieces: usize,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        let mut min_gap = f64::INFINITY;
        let mut max_gap: f64 = 0.0;
        for (i, &p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: i,
                    col: 0,
                    value: p,
                });
            }
            if i > 0 {
                let gap = p - points[i - 1];
                if gap <= MIN_GAP {
                    return Err(Error::NotIncreasing {
                        index: i,
                        value: p,
                        previous: points[i - 1],
                        tol: MIN_GAP,
                    });
                }
                min_gap = min_gap.min(gap);
                max_gap = max_gap.max(gap);
            }
        }
        let stats = PartitionStats {
            min_gap,
            max_gap,
            pieces: points.len() - 1,
        };
        Ok(Self { points, stats })
    }

    /// Uniform grid with `pieces` equal gaps over [a, b].
    pub fn uniform(pieces: usize, a: f64, b: f64) -> Result<Self> {
        if pieces == 0 {
            return Err(Error::TooFewPoints(1));
        }
        let points = (0..=pieces)
            .map(|i| a + (b - a) * (i as f64) / (pieces as f64))
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        *self.points.last().expect("at least two points")
    }

    /// Number of gaps.
    pub fn pieces(&self) -> usize {
        self.points.len() - 1
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|w| w[1] - w[0])
    }

    /// Gap statistics, computed once at construction. Grids can run to
    /// tens of millions of points, so callers rely on this being O(1).
    pub fn stats(&self) -> PartitionStats {
        self.stats
    }

    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        self.stats.max_gap - self.stats.min_gap <= rel_tol * self.stats.max_gap
    }

    /// Splits every gap at its midpoint, `depth` times over. The result
    /// has 2^depth times as many gaps, each half as long per level.
    pub fn dyadic_refine(&self, depth: u32) -> Result<Partition> {
        let mut current = self.points.clone();
        for _ in 0..depth {
            let mut next = Vec::with_capacity(current.len() * 2 - 1);
            for w in current.windows(2) {
                next.push(w[0]);
                next.push(0.5 * (w[0] + w[1]));
            }
            next.push(*current.last().expect("nonempty"));
            current = next;
        }
        Partition::new(current)
    }

    /// Merge of two grids over the same span, duplicates removed by exact
    /// equality.
    pub fn union(&self, other: &Partition) -> Result<Partition> {
        self.check_endpoints(other)?;
        let mut merged: Vec<f64> = self
            .points
            .iter()
            .chain(other.points.iter())
            .copied()
            .collect();
        merged.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
        merged.dedup();
        Partition::new(merged)
    }

    fn check_endpoints(&self, other: &Partition) -> Result<()> {
        if self.first() != other.first() || self.last() != other.last() {
            return Err(Error::EndpointMismatch {
                left: (self.first(), self.last()),
                right: (other.first(), other.last()),
            });
        }
        Ok(())
    }

    pub fn contains_point(&self, t: f64) -> bool {
        self.points
            .binary_search_by(|p| p.partial_cmp(&t).expect("finite points"))
            .is_ok()
    }

    /// True when `refined` keeps every point of `self` and adds at most
    /// one interior point per gap of `self`. Endpoints must agree.
    pub fn is_elementary_refinement(&self, refined: &Partition) -> Result<bool> {
        self.check_endpoints(refined)?;
        if !self.points.iter().all(|&p| refined.contains_point(p)) {
            return Ok(false);
        }
        for w in self.points.windows(2) {
            let inside = refined
                .points
                .iter()
                .filter(|&&p| p > w[0] && p < w[1])
                .count();
            if inside > 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
