use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("sample {which} has {n} values; at least 2 are needed")]
    TooFew { which: char, n: usize },
    #[error("sample {which} has zero variance")]
    ZeroVariance { which: char },
    #[error("sample {which} contains a non-finite value")]
    NonFinite { which: char },
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two
/// values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Outcome of Welch's unequal-variance t-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

fn check(which: char, xs: &[f64]) -> Result<f64, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFew { which, n: xs.len() });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite { which });
    }
    let var = sample_std(xs).powi(2);
    if var <= 0.0 {
        return Err(StatsError::ZeroVariance { which });
    }
    Ok(var / xs.len() as f64)
}

/// Welch's t-test of `mean(a) == mean(b)`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest, StatsError> {
    let sa = check('a', a)?;
    let sb = check('b', b)?;
    let se2 = sa + sb;
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive and finite");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(WelchTest { t, df, p })
}
