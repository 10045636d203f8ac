//! Parametric unit-mean weight laws with closed-form low moments.
//!
//! Every variant has first moment exactly 1 by construction, not by
//! post-hoc normalization: the two-point law takes values `1 +- a`
//! equiprobably, the uniform law is centered at 1, and the lognormal uses
//! the mean-one parameterization `exp(rho G - rho^2/2)`.

use crate::error::{Error, Result};
use crate::moments::{classify_domain, DomainClass};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightLaw {
    /// Point mass at 1; the fixed point of everything.
    Dirac1,
    /// Values `1 - a` and `1 + a` with probability 1/2 each, `0 < a < 1`.
    TwoPoint { a: f64 },
    /// Uniform on `[1 - c, 1 + c]`, `0 < c <= 1`.
    Uniform { c: f64 },
    /// `exp(rho G - rho^2/2)` with `G` standard normal, `rho > 0`.
    LogNormal { rho: f64 },
}

impl WeightLaw {
    pub fn dirac1() -> WeightLaw {
        WeightLaw::Dirac1
    }

    pub fn two_point(a: f64) -> Result<WeightLaw> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::input(format!(
                "two-point spread must satisfy 0 < a < 1 (nonnegative support), got {a}"
            )));
        }
        Ok(WeightLaw::TwoPoint { a })
    }

    pub fn uniform(c: f64) -> Result<WeightLaw> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::input(format!(
                "uniform half-width must satisfy 0 < c <= 1, got {c}"
            )));
        }
        Ok(WeightLaw::Uniform { c })
    }

    pub fn log_normal(rho: f64) -> Result<WeightLaw> {
        if !(rho > 0.0) {
            return Err(Error::input(format!(
                "lognormal parameter must be positive, got {rho}"
            )));
        }
        Ok(WeightLaw::LogNormal { rho })
    }

    /// Moment of order `p` for `p` in `{1, 2, 3}`, in closed form.
    pub fn moment(&self, p: u32) -> Result<f64> {
        let m = match (self, p) {
            (_, 1) => 1.0,
            (WeightLaw::Dirac1, 2 | 3) => 1.0,
            (WeightLaw::TwoPoint { a }, 2) => 1.0 + a * a,
            (WeightLaw::TwoPoint { a }, 3) => 1.0 + 3.0 * a * a,
            (WeightLaw::Uniform { c }, 2) => 1.0 + c * c / 3.0,
            (WeightLaw::Uniform { c }, 3) => 1.0 + c * c,
            (WeightLaw::LogNormal { rho }, 2) => (rho * rho).exp(),
            (WeightLaw::LogNormal { rho }, 3) => (3.0 * rho * rho).exp(),
            _ => {
                return Err(Error::unsupported(format!(
                    "moment order {p} (only 1..=3 have closed forms)"
                )))
            }
        };
        Ok(m)
    }

    /// One draw. Consumes exactly one stream value for the random variants
    /// and none for the Dirac law.
    pub fn draw(&self, rng: &mut Rng) -> f64 {
        match self {
            WeightLaw::Dirac1 => 1.0,
            WeightLaw::TwoPoint { a } => {
                if rng.next_u64() >> 63 == 0 {
                    1.0 + a
                } else {
                    1.0 - a
                }
            }
            WeightLaw::Uniform { c } => 1.0 - c + 2.0 * c * rng.uniform(),
            WeightLaw::LogNormal { rho } => (rho * rng.normal() - rho * rho / 2.0).exp(),
        }
    }

    /// `count` i.i.d. draws from the given stream.
    pub fn sample(&self, rng: &mut Rng, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng)).collect()
    }

    /// Where this law sits relative to the iterable domains for base `b`.
    pub fn validate_for_cascade(&self, b: u32) -> Result<DomainClass> {
        classify_domain(b, 1.0, self.moment(2)?, self.moment(3)?)
    }

    /// Config-style description, e.g. `twopoint a=0.7`.
    pub fn describe(&self) -> String {
        match self {
            WeightLaw::Dirac1 => "dirac1".to_string(),
            WeightLaw::TwoPoint { a } => format!("twopoint a={a}"),
            WeightLaw::Uniform { c } => format!("uniform c={c}"),
            WeightLaw::LogNormal { rho } => format!("lognormal rho={rho}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_moments() {
        let tp = WeightLaw::two_point(0.7).unwrap();
        assert!((tp.moment(2).unwrap() - 1.49).abs() < 1e-15);
        assert!((tp.moment(3).unwrap() - 2.47).abs() < 1e-15);

        for p in 1..=3 {
            assert_eq!(WeightLaw::dirac1().moment(p).unwrap(), 1.0);
        }

        let ln = WeightLaw::log_normal(0.5).unwrap();
        assert!((ln.moment(2).unwrap() - 1.284_025_416_687_741_4).abs() < 1e-15);
        assert!((ln.moment(3).unwrap() - 2.117_000_016_612_675).abs() < 1e-15);

        let un = WeightLaw::uniform(0.9).unwrap();
        assert!((un.moment(2).unwrap() - (1.0 + 0.27)).abs() < 1e-15);
        assert!((un.moment(3).unwrap() - 1.81).abs() < 1e-15);

        assert!(matches!(tp.moment(4), Err(Error::Unsupported(_))));
        assert!(matches!(tp.moment(0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(WeightLaw::two_point(1.0).is_err());
        assert!(WeightLaw::two_point(0.0).is_err());
        assert!(WeightLaw::two_point(-0.5).is_err());
        assert!(WeightLaw::uniform(0.0).is_err());
        assert!(WeightLaw::uniform(1.5).is_err());
        assert!(WeightLaw::log_normal(0.0).is_err());
    }

    #[test]
    fn deterministic_sampling() {
        let law = WeightLaw::two_point(0.7).unwrap();
        let a = law.sample(&mut Rng::from_seed(11), 100);
        let b = law.sample(&mut Rng::from_seed(11), 100);
        assert_eq!(a, b);
        let dirac = WeightLaw::dirac1().sample(&mut Rng::from_seed(1), 50);
        assert!(dirac.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn monte_carlo_moments_match_closed_forms() {
        // 10^6 draws per law; agreement within 4 standard errors
        let laws = [
            WeightLaw::two_point(0.7).unwrap(),
            WeightLaw::two_point(0.3).unwrap(),
            WeightLaw::uniform(0.9).unwrap(),
            WeightLaw::uniform(0.4).unwrap(),
            WeightLaw::log_normal(0.5).unwrap(),
            WeightLaw::log_normal(0.2).unwrap(),
        ];
        let n = 1_000_000usize;
        for (i, law) in laws.iter().enumerate() {
            let mut rng = Rng::from_seed(1000 + i as u64);
            let xs = law.sample(&mut rng, n);
            assert!(xs.iter().all(|&x| x >= 0.0), "negative weight from {law:?}");
            for p in 1..=3u32 {
                let pows: Vec<f64> = xs.iter().map(|&x| x.powi(p as i32)).collect();
                let mean = pows.iter().sum::<f64>() / n as f64;
                let var = pows.iter().map(|&y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
                let se = (var / n as f64).sqrt();
                let exact = law.moment(p).unwrap();
                assert!(
                    (mean - exact).abs() <= 4.0 * se,
                    "{law:?} p={p}: {mean} vs {exact} (se {se})"
                );
            }
        }
    }

    #[test]
    fn cascade_validation() {
        let tp = WeightLaw::two_point(0.7).unwrap();
        assert_eq!(tp.validate_for_cascade(3).unwrap(), DomainClass::InDb);
        assert_eq!(
            WeightLaw::dirac1().validate_for_cascade(3).unwrap(),
            DomainClass::Outside
        );
        // m2 = e > b - 1 for b = 3
        let ln = WeightLaw::log_normal(1.0).unwrap();
        assert_eq!(ln.validate_for_cascade(3).unwrap(), DomainClass::Outside);
    }
}
