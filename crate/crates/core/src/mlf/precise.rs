//! Extended-precision support: Gamma function and series coefficients.
//!
//! Gamma uses Spouge's approximation with `a = 72`, whose relative error is
//! below `a^{-1/2} (2π)^{-(a+1/2)} ≈ 1e-59`. The coefficients alternate and
//! reach about 1e30, so the working precision carries enough guard bits to
//! absorb that cancellation.

use astro_float::{BigFloat, Consts, RoundingMode};

use super::dd::Dd;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;
pub(crate) const WORK_PREC: usize = 448;
const SPOUGE_A: usize = 72;

pub(crate) fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, WORK_PREC)
}

pub(crate) struct BigCtx {
    cc: Consts,
    spouge: Vec<BigFloat>,
    pi: BigFloat,
}

impl BigCtx {
    pub(crate) fn new() -> Self {
        let p = WORK_PREC;
        let mut cc = Consts::new().expect("astro-float constant cache");
        let pi = cc.pi(p, RM);
        let two_pi = pi.mul(&big(2.0), p, RM);

        let mut spouge = Vec::with_capacity(SPOUGE_A);
        spouge.push(two_pi.sqrt(p, RM));
        let mut factorial = big(1.0);
        for k in 1..SPOUGE_A {
            let base = big((SPOUGE_A - k) as f64);
            let power = base.pow(&big(k as f64 - 0.5), p, RM, &mut cc);
            let c = power
                .mul(&base.exp(p, RM, &mut cc), p, RM)
                .div(&factorial, p, RM);
            spouge.push(if k % 2 == 1 { c } else { c.neg() });
            factorial = factorial.mul(&big(k as f64), p, RM);
        }
        BigCtx { cc, spouge, pi }
    }

    /// Γ(x) for x > 0.
    pub(crate) fn gamma(&mut self, x: &BigFloat) -> BigFloat {
        let p = WORK_PREC;
        let one = big(1.0);
        // Spouge is applied at argument >= 1; smaller arguments are shifted up.
        if x.cmp(&one).is_some_and(|c| c < 0) {
            let shifted = x.add(&one, p, RM);
            return self.gamma(&shifted).div(x, p, RM);
        }
        let z = x.sub(&one, p, RM);
        let mut sum = self.spouge[0].clone();
        for (k, c) in self.spouge.iter().enumerate().skip(1) {
            let denom = z.add(&big(k as f64), p, RM);
            sum = sum.add(&c.div(&denom, p, RM), p, RM);
        }
        let za = z.add(&big(SPOUGE_A as f64), p, RM);
        let power = za.pow(&z.add(&big(0.5), p, RM), p, RM, &mut self.cc);
        let decay = za.neg().exp(p, RM, &mut self.cc);
        power.mul(&decay, p, RM).mul(&sum, p, RM)
    }

    /// 1/Γ(x) for any real x, exactly zero at the poles.
    pub(crate) fn rgamma(&mut self, x: &BigFloat) -> BigFloat {
        let p = WORK_PREC;
        if x.is_positive() && !x.is_zero() {
            return big(1.0).div(&self.gamma(x), p, RM);
        }
        if x.is_int() {
            return big(0.0);
        }
        // reflection: 1/Γ(x) = sin(πx) Γ(1-x) / π
        let reflected = big(1.0).sub(x, p, RM);
        let g = self.gamma(&reflected);
        let s = self.pi.mul(x, p, RM).sin(p, RM, &mut self.cc);
        s.mul(&g, p, RM).div(&self.pi, p, RM)
    }
}

/// Nearest f64 to a big float.
pub(crate) fn to_f64(v: &BigFloat) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    v.to_string()
        .parse()
        .expect("big float renders as a decimal literal")
}

/// Rounds a big float to double-double.
pub(crate) fn to_dd(v: &BigFloat) -> Dd {
    let hi = to_f64(v);
    if hi == 0.0 || !hi.is_finite() {
        return Dd::from_f64(hi);
    }
    let rest = v.sub(&big(hi), WORK_PREC, RM);
    Dd::new(hi, to_f64(&rest))
}
