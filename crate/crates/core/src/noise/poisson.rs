//! Poisson variates.
//!
//! One-off draws use sequential inversion below a mean of 30 and Hörmann's
//! PTRS transformed rejection above. [`Poisson::tabulated`] precomputes the
//! CDF with a guide table for the simulator, which draws from the same mean
//! once per tick for millions of ticks.

use rand::Rng;

use crate::error::{Error, Result};

const INVERSION_LIMIT: f64 = 30.0;
const TABLE_LIMIT: f64 = 1024.0;

#[derive(Debug, Clone)]
pub struct Poisson {
    lambda: f64,
    method: Method,
}

#[derive(Debug, Clone)]
enum Method {
    Zero,
    Inversion {
        p0: f64,
    },
    Table {
        offset: u64,
        cdf: Vec<f64>,
        guide: Vec<u32>,
    },
    Ptrs(Ptrs),
}

#[derive(Debug, Clone)]
struct Ptrs {
    log_lambda: f64,
    a: f64,
    b: f64,
    log_inv_alpha: f64,
    vr: f64,
}

impl Ptrs {
    fn new(lambda: f64) -> Self {
        let slam = lambda.sqrt();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        Self {
            log_lambda: lambda.ln(),
            a,
            b,
            log_inv_alpha: inv_alpha.ln(),
            vr: 0.9277 - 3.6224 / (b - 2.0),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> u64 {
        loop {
            let u = rng.random::<f64>() - 0.5;
            let v = rng.random::<f64>();
            let us = 0.5 - u.abs();
            let k = ((2.0 * self.a / us + self.b) * u + lambda + 0.43).floor();
            if us >= 0.07 && v <= self.vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + self.log_inv_alpha - (self.a / (us * us) + self.b).ln();
            let rhs = -lambda + k * self.log_lambda - ln_factorial(k);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

/// `ln(k!)` for a non-negative integer-valued `k`.
fn ln_factorial(k: f64) -> f64 {
    if k < 16.0 {
        return (2..=k as u64).map(|i| (i as f64).ln()).sum();
    }
    // Stirling series for ln Γ(n), n = k + 1.
    let n = k + 1.0;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    (n - 0.5) * n.ln() - n
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

fn check_mean(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "Poisson mean must be finite and non-negative, got {lambda}"
        )))
    }
}

impl Poisson {
    pub fn new(lambda: f64) -> Result<Self> {
        check_mean(lambda)?;
        let method = if lambda == 0.0 {
            Method::Zero
        } else if lambda < INVERSION_LIMIT {
            Method::Inversion {
                p0: (-lambda).exp(),
            }
        } else {
            Method::Ptrs(Ptrs::new(lambda))
        };
        Ok(Self { lambda, method })
    }

    /// Same distribution as [`Poisson::new`], with O(1) expected draw cost
    /// for means up to 1024 at the price of an O(mean) table.
    pub fn tabulated(lambda: f64) -> Result<Self> {
        check_mean(lambda)?;
        if lambda == 0.0 || lambda > TABLE_LIMIT {
            return Self::new(lambda);
        }
        // pmf from the mode outward; exp(-lambda) alone underflows past ~745
        let spread = 12.0 * lambda.sqrt() + 16.0;
        let lo = (lambda - spread).max(0.0).floor() as u64;
        let hi = (lambda + spread).ceil() as u64;
        let mode = lambda.floor() as u64;
        let mut pmf = vec![0.0; (hi - lo + 1) as usize];
        let at_mode = (-lambda + mode as f64 * lambda.ln() - ln_factorial(mode as f64)).exp();
        pmf[(mode - lo) as usize] = at_mode;
        let mut p = at_mode;
        for k in mode..hi {
            p *= lambda / (k + 1) as f64;
            pmf[(k + 1 - lo) as usize] = p;
        }
        p = at_mode;
        for k in (lo + 1..=mode).rev() {
            p *= k as f64 / lambda;
            pmf[(k - 1 - lo) as usize] = p;
        }
        let mut acc = 0.0;
        let cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let m = cdf.len();
        let mut guide = Vec::with_capacity(m);
        let mut j = 0usize;
        for i in 0..m {
            let edge = i as f64 / m as f64;
            while j + 1 < m && cdf[j] <= edge {
                j += 1;
            }
            guide.push(j as u32);
        }
        Ok(Self {
            lambda,
            method: Method::Table {
                offset: lo,
                cdf,
                guide,
            },
        })
    }

    pub fn mean(&self) -> f64 {
        self.lambda
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.method {
            Method::Zero => 0,
            Method::Inversion { p0 } => {
                let u: f64 = rng.random();
                let (mut k, mut p, mut s) = (0u64, *p0, *p0);
                while u >= s {
                    k += 1;
                    p *= self.lambda / k as f64;
                    let next = s + p;
                    if next == s {
                        break;
                    }
                    s = next;
                }
                k
            }
            Method::Table { offset, cdf, guide } => {
                let u: f64 = rng.random();
                let m = cdf.len();
                let mut k = guide[((u * m as f64) as usize).min(m - 1)] as usize;
                while k + 1 < m && cdf[k] <= u {
                    k += 1;
                }
                offset + k as u64
            }
            Method::Ptrs(p) => p.sample(self.lambda, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn moments(d: &Poisson, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = seeded(seed);
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn ln_factorial_matches_direct_sum() {
        for k in [0u64, 1, 5, 15, 16, 17, 40, 200] {
            let direct: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
            assert!(
                (ln_factorial(k as f64) - direct).abs() < 1e-9 * direct.max(1.0),
                "k={k}"
            );
        }
    }

    #[test]
    fn negative_or_nan_mean_rejected() {
        assert!(Poisson::new(-1.0).is_err());
        assert!(Poisson::new(f64::NAN).is_err());
        assert!(Poisson::tabulated(-0.5).is_err());
    }

    #[test]
    fn table_and_direct_agree_in_distribution() {
        for lambda in [0.3, 4.0, 29.0, 31.0, 70.0, 255.0, 1000.0] {
            let n = 200_000;
            let sd = (lambda / n as f64).sqrt();
            let (m1, v1) = moments(&Poisson::new(lambda).unwrap(), n, 1);
            let (m2, v2) = moments(&Poisson::tabulated(lambda).unwrap(), n, 2);
            assert!(
                (m1 - lambda).abs() < 4.0 * sd,
                "direct mean {m1} for {lambda}"
            );
            assert!(
                (m2 - lambda).abs() < 4.0 * sd,
                "table mean {m2} for {lambda}"
            );
            let vsd = lambda * (2.0 / n as f64).sqrt() + (lambda / n as f64).sqrt();
            assert!(
                (v1 - lambda).abs() < 5.0 * vsd,
                "direct var {v1} for {lambda}"
            );
            assert!(
                (v2 - lambda).abs() < 5.0 * vsd,
                "table var {v2} for {lambda}"
            );
        }
    }

    #[test]
    fn pmf_of_small_mean() {
        // P(0) = e^-1, P(1) = e^-1, P(2) = e^-1 / 2
        let d = Poisson::tabulated(1.0).unwrap();
        let mut rng = seeded(9);
        let n = 400_000;
        let mut hist = [0usize; 3];
        for _ in 0..n {
            let k = d.sample(&mut rng) as usize;
            if k < 3 {
                hist[k] += 1;
            }
        }
        let e = (-1.0f64).exp();
        for (k, want) in [e, e, e / 2.0].into_iter().enumerate() {
            let got = hist[k] as f64 / n as f64;
            let sd = (want * (1.0 - want) / n as f64).sqrt();
            assert!((got - want).abs() < 4.0 * sd, "P({k}) = {got}, want {want}");
        }
    }
}
