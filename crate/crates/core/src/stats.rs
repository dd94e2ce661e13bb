//! 2x2 contingency tables for binary patient-level indicators.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Counts for two binary indicators X and Y over a cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Contingency2x2 {
    /// X and Y
    pub both: u64,
    /// X, not Y
    pub first_only: u64,
    /// Y, not X
    pub second_only: u64,
    /// neither
    pub neither: u64,
}

impl Contingency2x2 {
    pub fn from_indicators(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut t = Self::default();
        for (x, y) in pairs {
            match (x, y) {
                (true, true) => t.both += 1,
                (true, false) => t.first_only += 1,
                (false, true) => t.second_only += 1,
                (false, false) => t.neither += 1,
            }
        }
        t
    }

    /// Builds the table from the holder counts of each indicator and their
    /// overlap within a cohort of `n`.
    pub fn from_counts(n: u64, first: u64, second: u64, overlap: u64) -> Self {
        debug_assert!(overlap <= first.min(second) && first + second - overlap <= n);
        Self {
            both: overlap,
            first_only: first - overlap,
            second_only: second - overlap,
            neither: n + overlap - first - second,
        }
    }

    pub fn total(&self) -> u64 {
        self.both + self.first_only + self.second_only + self.neither
    }

    fn marginal_product(&self) -> f64 {
        let (a, b, c, d) = self.as_f64();
        (a + b) * (c + d) * (a + c) * (b + d)
    }

    fn as_f64(&self) -> (f64, f64, f64, f64) {
        (
            self.both as f64,
            self.first_only as f64,
            self.second_only as f64,
            self.neither as f64,
        )
    }

    /// Phi coefficient (Pearson correlation of the two indicators). Zero when
    /// either indicator is constant over the cohort.
    pub fn phi(&self) -> f64 {
        let denom = self.marginal_product();
        if denom == 0.0 {
            return 0.0;
        }
        let (a, b, c, d) = self.as_f64();
        (a * d - b * c) / denom.sqrt()
    }

    /// Pearson chi-square statistic without continuity correction; for a 2x2
    /// table this is `n * phi^2`.
    pub fn chi_square(&self) -> f64 {
        let phi = self.phi();
        self.total() as f64 * phi * phi
    }

    /// Upper-tail probability of the chi-square statistic with one degree of
    /// freedom.
    pub fn p_value(&self) -> f64 {
        if self.marginal_product() == 0.0 {
            return 1.0;
        }
        let dist = ChiSquared::new(1.0).expect("one degree of freedom is valid");
        dist.sf(self.chi_square())
    }
}
