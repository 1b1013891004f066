//! Special functions shared by the time and space operators.

/// Euler gamma function (Lanczos approximation from `statrs`, ~1e-15 relative on (0, 20)).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Euler beta function B(a, b) for positive arguments.
pub fn beta(a: f64, b: f64) -> f64 {
    // ln-form keeps B(q+1, sigma) accurate when sigma is tiny and Gamma(sigma) is huge.
    let ln = statrs::function::gamma::ln_gamma;
    (ln(a) + ln(b) - ln(a + b)).exp()
}

/// Binomial coefficient as f64; exact for the small arguments used here (n <= 60).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}
