//! Standard normal and standardized Student-t reference distributions.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
#[allow(unused_imports)]
use num_traits::Float;

use crate::rng::Rng;
use crate::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Zero-mean, unit-variance noise law.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ReferenceDistribution {
    StandardNormal,
    /// A t(dof) variable divided by `sqrt(dof / (dof - 2))`.
    StandardizedT { dof: u32 },
}

impl ReferenceDistribution {
    pub fn standardized_t(dof: u32) -> Result<Self> {
        if dof <= 2 {
            return Err(Error::InvalidParameter("standardized t needs more than 2 degrees of freedom"));
        }
        Ok(ReferenceDistribution::StandardizedT { dof })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ReferenceDistribution::StandardizedT { dof } if dof <= 2 => {
                Err(Error::InvalidParameter("standardized t needs more than 2 degrees of freedom"))
            }
            _ => Ok(()),
        }
    }

    /// Factor `sqrt(dof / (dof - 2))` that maps a unit-variance draw to the raw t scale.
    pub fn t_scale(dof: u32) -> f64 {
        let nu = f64::from(dof);
        (nu / (nu - 2.0)).sqrt()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match *self {
            ReferenceDistribution::StandardNormal => normal_cdf(z),
            ReferenceDistribution::StandardizedT { dof } => {
                student_t_cdf(z * Self::t_scale(dof), f64::from(dof))
            }
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match *self {
            ReferenceDistribution::StandardNormal => normal_pdf(z),
            ReferenceDistribution::StandardizedT { dof } => {
                let s = Self::t_scale(dof);
                s * student_t_pdf(z * s, f64::from(dof))
            }
        }
    }

    pub fn quantile(&self, a: f64) -> Result<f64> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidLevel(a));
        }
        self.validate()?;
        Ok(match *self {
            ReferenceDistribution::StandardNormal => normal_quantile(a),
            ReferenceDistribution::StandardizedT { dof } => {
                student_t_quantile(a, f64::from(dof)) / Self::t_scale(dof)
            }
        })
    }

    pub fn sample_one(&self, rng: &mut Rng) -> f64 {
        match *self {
            ReferenceDistribution::StandardNormal => StandardNormal.sample(rng),
            ReferenceDistribution::StandardizedT { dof } => {
                let nu = f64::from(dof);
                let z: f64 = StandardNormal.sample(rng);
                let chi = ChiSquared::new(nu).expect("dof validated").sample(rng);
                z / (chi / nu).sqrt() / Self::t_scale(dof)
            }
        }
    }

    /// `n` i.i.d. draws.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        self.validate()?;
        Ok((0..n).map(|_| self.sample_one(rng)).collect())
    }
}

/// Uniform draw on `[lo, hi)`.
pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Inverse standard normal CDF (Wichura's AS 241, about 1e-16 relative accuracy).
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_854_5e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_445_9e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

pub fn student_t_pdf(t: f64, nu: f64) -> f64 {
    let ln_c = libm::lgamma(0.5 * (nu + 1.0)) - libm::lgamma(0.5 * nu) - 0.5 * (nu * PI).ln();
    (ln_c - 0.5 * (nu + 1.0) * (1.0 + t * t / nu).ln()).exp()
}

/// Upper tail `P(T > t)` for `t >= 0`.
fn student_t_upper(t: f64, nu: f64) -> f64 {
    // pass 1 - x explicitly; forming it by subtraction cancels near t = 0
    let d = nu + t * t;
    0.5 * incomplete_beta_split(nu / d, t * t / d, 0.5 * nu, 0.5)
}

pub fn student_t_cdf(t: f64, nu: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let upper = student_t_upper(t.abs(), nu);
    if t >= 0.0 {
        1.0 - upper
    } else {
        upper
    }
}

/// Inverse t CDF by safeguarded Newton on the upper tail.
pub fn student_t_quantile(a: f64, nu: f64) -> f64 {
    if a == 0.5 {
        return 0.0;
    }
    if a < 0.5 {
        return -student_t_quantile(1.0 - a, nu);
    }
    let target = 1.0 - a;
    let mut lo = 0.0;
    let mut hi = normal_quantile(a).max(1.0);
    while student_t_upper(hi, nu) > target {
        lo = hi;
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = student_t_upper(t, nu) - target;
        if g > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t + g / student_t_pdf(t, nu);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) {
            return next;
        }
        t = next;
    }
    t
}

/// `I_x(a, b)` via the Lentz continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    incomplete_beta_split(x, 1.0 - x, a, b)
}

/// `I_x(a, b)` with `y = 1 - x` supplied by the caller.
fn incomplete_beta_split(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * x.ln() + b * y.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(y, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=500 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
