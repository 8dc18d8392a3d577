//! Small numeric helpers shared across modules.

/// Kahan compensated summation; keeps long accumulations reproducible to
/// well below the tolerances asserted anywhere in this crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of a slice.
pub fn ksum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Sample mean and standard error of the mean (n >= 1; se = 0 for n = 1).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1, "mean_and_se needs at least one value");
    let mean = ksum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = ksum(xs.iter().map(|x| (x - mean) * (x - mean)));
    let var = ss / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, std_error) = mean_and_se(xs);
        Self {
            mean,
            std_error,
            n: xs.len(),
        }
    }

    /// |mean − reference| ≤ sigmas · std_error, the acceptance convention
    /// for every statistical check in this workspace.
    pub fn within(&self, reference: f64, sigmas: f64) -> bool {
        (self.mean - reference).abs() <= sigmas * self.std_error
    }
}

/// Format a real with 17 significant digits, the CSV convention everywhere
/// in this workspace (round-trips any f64 exactly).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
