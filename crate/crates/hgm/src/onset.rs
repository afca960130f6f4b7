//! Where a computed trajectory stops tracking the reference solution.

use hgm_core::steppers::SolutionTable;
use hgm_core::{Real, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct Onset {
    /// First node whose relative error exceeds the threshold, or `+∞`.
    pub t: f64,
    /// Nodes skipped because the reference vanishes there.
    pub skipped: Vec<f64>,
}

impl Onset {
    pub fn is_sentinel(&self) -> bool {
        self.t == f64::INFINITY
    }
}

/// Smallest `t_i` with `|F_i[component] − ref(t_i)| / |ref(t_i)| > threshold`.
/// Non-finite states count as failures.
pub fn failure_onset<R: Real>(table: &SolutionTable<R>, component: usize, reference: impl Fn(R) -> Result<R>, threshold: f64) -> Result<Onset> {
    let mut skipped = Vec::new();
    for (t, state) in table.times.iter().zip(&table.states) {
        let r = reference(*t)?;
        if r == R::zero() {
            skipped.push(t.to_f64());
            continue;
        }
        let f = state[component];
        let rel = ((f - r) / r).abs();
        if !f.is_finite() || !(rel.to_f64() <= threshold) {
            return Ok(Onset { t: t.to_f64(), skipped });
        }
    }
    Ok(Onset { t: f64::INFINITY, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(values: &[(f64, f64)]) -> SolutionTable<f64> {
        let mut t = SolutionTable::new("test");
        for &(x, f) in values {
            t.push(x, vec![f]);
        }
        t
    }

    #[test]
    fn exact_table_gives_sentinel() {
        let t = table(&[(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]);
        let o = failure_onset(&t, 0, |x: f64| Ok(1.0 + x), DEFAULT_THRESHOLD).unwrap();
        assert!(o.is_sentinel());
    }

    #[test]
    fn first_crossing_and_zero_skips() {
        let t = table(&[(0.0, 5.0), (1.0, 1.0), (2.0, 1.2), (3.0, 1.5), (4.0, 9.0)]);
        let o = failure_onset(&t, 0, |x: f64| Ok(if x == 0.0 { 0.0 } else { 1.0 }), DEFAULT_THRESHOLD).unwrap();
        assert_eq!(o.t, 3.0);
        assert_eq!(o.skipped, vec![0.0]);
        let nan = table(&[(0.0, 1.0), (1.0, f64::NAN)]);
        assert_eq!(failure_onset(&nan, 0, |_| Ok(1.0), DEFAULT_THRESHOLD).unwrap().t, 1.0);
    }
}
