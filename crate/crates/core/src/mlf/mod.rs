//! Two-parameter Mittag-Leffler function `E_{α,β}(z) = Σ_k z^k / Γ(αk + β)` for real `z`.
//!
//! Both expansions are controlled by `y = |z|^{1/α}` rather than `|z|`.
//!
//! - Power series. On the negative axis the terms peak near `e^y` while the sum is
//!   `O(y^{-α})`, so about `y / ln 10` digits cancel. The sum is accumulated in
//!   double-double with coefficients rounded from 448-bit values. When that is not
//!   enough, the same series is summed in 320-bit arithmetic.
//! - Asymptotic expansion `-Σ_{k≥1} z^{-k} / Γ(β - αk)` for `z < 0`, optimally
//!   truncated. Its smallest term behaves like `e^{-y}`.
//!
//! Every branch reports a relative error estimate. A value is returned only when
//! some branch meets [`TARGET_RELATIVE_ERROR`]; otherwise the caller receives
//! [`Error::Accuracy`].
//!
//! Positive arguments are supported up to `z^{1/α} ≤` [`SERIES_REACH`], i.e.
//! `z ≤ 50^α`. Beyond that [`Error::OutOfRange`] is returned. `E_{1,1}` is
//! evaluated as `exp` for every finite `z`.

mod dd;
mod precise;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use astro_float::BigFloat;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use dd::Dd;
use precise::{big, BigCtx, RM, WORK_PREC};

/// Relative accuracy promised for every returned value.
pub const TARGET_RELATIVE_ERROR: f64 = 1e-12;

/// Largest `|z|^{1/α}` covered by the power-series tables.
pub const SERIES_REACH: f64 = 50.0;

/// Below this `y` the double-double series is tried first, above it the asymptotic expansion.
const ASYMPTOTIC_FIRST: f64 = 30.0;

/// The asymptotic tables hold terms with `αk` up to this value.
const ASYMPTOTIC_ORDER_REACH: f64 = 80.0;

/// A branch estimate below this is accepted without trying the next branch.
const BRANCH_ACCEPT: f64 = 5e-13;

/// Series terms are tabulated until `R^k / Γ(αk+β)` drops below this (`R = SERIES_REACH^α`).
const SERIES_TABLE_FLOOR: f64 = -110.0; // natural log, about 1e-48

const EXTENDED_PREC: usize = 320;

/// Parameters `(α, β)` of `E_{α,β}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MlfParams {
    alpha: f64,
    beta: f64,
}

impl MlfParams {
    /// Validates `0 < α ≤ 1` and `β > 0`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "Mittag-Leffler alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Parameter(format!(
                "Mittag-Leffler beta must be positive and finite, got {beta}"
            )));
        }
        Ok(MlfParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Which expansion produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Exponential,
    Series,
    ExtendedSeries,
    Asymptotic,
}

/// A value with its estimated relative error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub error_estimate: f64,
    pub branch: Branch,
}

struct Tables {
    /// `1/Γ(αk+β)` in double-double.
    series: Vec<Dd>,
    /// `1/Γ(αk+β)` at full working precision.
    series_big: Vec<BigFloat>,
    /// `1/Γ(β-αk)`, index 0 unused.
    asymptotic: Vec<f64>,
    /// `Γ(1-β+αk)/π`, a smooth magnitude envelope of `asymptotic` where `β-αk ≤ 0`
    /// (zero where the argument is still positive).
    envelope: Vec<f64>,
}

impl Tables {
    fn build(p: MlfParams) -> Tables {
        let MlfParams { alpha, beta } = p;
        let mut ctx = BigCtx::new();
        let big_alpha = big(alpha);
        let big_beta = big(beta);
        let arg = |k: usize| {
            big_alpha
                .mul(&big(k as f64), WORK_PREC, RM)
                .add(&big_beta, WORK_PREC, RM)
        };

        let ln_reach = alpha * SERIES_REACH.ln();
        let mut series = Vec::new();
        let mut series_big = Vec::new();
        for k in 0.. {
            let c = ctx.rgamma(&arg(k));
            series.push(precise::to_dd(&c));
            series_big.push(c);
            let x = alpha * k as f64 + beta;
            if x > SERIES_REACH + 1.0 && k as f64 * ln_reach - ln_gamma(x) < SERIES_TABLE_FLOOR {
                break;
            }
        }

        let n_asym = (ASYMPTOTIC_ORDER_REACH / alpha).ceil() as usize + 2;
        let mut asymptotic = vec![0.0; n_asym];
        let mut envelope = vec![0.0; n_asym];
        for k in 1..n_asym {
            let x = big_beta.sub(&big_alpha.mul(&big(k as f64), WORK_PREC, RM), WORK_PREC, RM);
            asymptotic[k] = precise::to_f64(&ctx.rgamma(&x));
            let xf = beta - alpha * k as f64;
            if xf <= 0.0 {
                envelope[k] = ln_gamma(1.0 - xf).exp() / std::f64::consts::PI;
            }
        }
        Tables {
            series,
            series_big,
            asymptotic,
            envelope,
        }
    }
}

type Key = (u64, u64);

fn table_cache() -> &'static Mutex<HashMap<Key, Arc<Tables>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Tables>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn tables_for(p: MlfParams) -> Arc<Tables> {
    let key = (p.alpha.to_bits(), p.beta.to_bits());
    if let Some(t) = table_cache().lock().expect("mlf cache poisoned").get(&key) {
        return t.clone();
    }
    // Built outside the lock; a concurrent duplicate build is harmless.
    let built = Arc::new(Tables::build(p));
    table_cache()
        .lock()
        .expect("mlf cache poisoned")
        .entry(key)
        .or_insert(built)
        .clone()
}

/// Evaluator for a fixed `(α, β)`.
///
/// Construction precomputes the coefficient tables once per parameter pair and
/// process (they are shared through a global cache); evaluation is then cheap and
/// thread-safe.
#[derive(Clone)]
pub struct MittagLeffler {
    params: MlfParams,
    tables: Arc<Tables>,
}

impl std::fmt::Debug for MittagLeffler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MittagLeffler")
            .field("params", &self.params)
            .finish()
    }
}

impl MittagLeffler {
    pub fn new(params: MlfParams) -> Self {
        MittagLeffler {
            params,
            tables: tables_for(params),
        }
    }

    pub fn params(&self) -> MlfParams {
        self.params
    }

    /// `E_{α,β}(z)` to [`TARGET_RELATIVE_ERROR`].
    pub fn eval(&self, z: f64) -> Result<f64> {
        self.evaluate(z).map(|e| e.value)
    }

    /// `E_{α,β}(z)` together with the branch used and its error estimate.
    pub fn evaluate(&self, z: f64) -> Result<Evaluation> {
        let MlfParams { alpha, beta } = self.params;
        if !z.is_finite() {
            return Err(Error::Parameter(format!(
                "Mittag-Leffler argument must be finite, got {z}"
            )));
        }
        if alpha == 1.0 && beta == 1.0 {
            return Ok(Evaluation {
                value: z.exp(),
                error_estimate: f64::EPSILON,
                branch: Branch::Exponential,
            });
        }
        if z == 0.0 {
            return Ok(Evaluation {
                value: self.tables.series[0].to_f64(),
                error_estimate: f64::EPSILON,
                branch: Branch::Series,
            });
        }

        let y = z.abs().powf(1.0 / alpha);
        if z > 0.0 && y > SERIES_REACH {
            return Err(Error::OutOfRange(format!(
                "positive argument z={z} exceeds {:e} for alpha={alpha}",
                SERIES_REACH.powf(alpha)
            )));
        }
        if z < 0.0 && y > SERIES_REACH {
            let e = self.asymptotic(z);
            return self.accept(z, e, e);
        }

        let order: [fn(&Self, f64) -> Evaluation; 2] = if z < 0.0 && y >= ASYMPTOTIC_FIRST {
            [Self::asymptotic, Self::series]
        } else {
            [Self::series, Self::asymptotic]
        };
        let mut best: Option<Evaluation> = None;
        for branch in order {
            let e = branch(self, z);
            if e.error_estimate <= BRANCH_ACCEPT {
                return Ok(e);
            }
            if best.is_none_or(|b| e.error_estimate < b.error_estimate) {
                best = Some(e);
            }
        }
        let extended = self.extended_series(z);
        let best = best.expect("at least one branch ran");
        self.accept(z, extended, best)
    }

    fn accept(&self, z: f64, first: Evaluation, second: Evaluation) -> Result<Evaluation> {
        let pick = if first.error_estimate <= second.error_estimate {
            first
        } else {
            second
        };
        if pick.error_estimate <= TARGET_RELATIVE_ERROR {
            Ok(pick)
        } else {
            Err(Error::Accuracy {
                alpha: self.params.alpha,
                beta: self.params.beta,
                z,
                estimate: pick.error_estimate,
            })
        }
    }

    /// Power series summed in double-double.
    ///
    /// Always returns; the estimate is infinite when the tabulated terms do not
    /// reach convergence.
    pub fn series(&self, z: f64) -> Evaluation {
        let c = &self.tables.series;
        let mut sum = c[0];
        let mut abs_sum = c[0].hi.abs();
        let mut power = Dd::ONE;
        let mut prev = abs_sum;
        let mut used = 0usize;
        let mut converged = false;
        for (k, ck) in c.iter().enumerate().skip(1) {
            power = power.mul_f64(z);
            let t = power * *ck;
            sum = sum + t;
            let mag = t.hi.abs();
            abs_sum += mag;
            used = k;
            // terms are unimodal in k, so a small term past the peak ends the sum
            if mag <= prev && mag <= 1e-34 * sum.hi.abs() {
                converged = true;
                break;
            }
            prev = mag;
        }
        let value = sum.to_f64();
        let rounding = 4.0 * (used as f64 + 2.0) * 2f64.powi(-106) * abs_sum;
        let error_estimate = if converged && value != 0.0 {
            rounding / value.abs() + f64::EPSILON / 2.0
        } else {
            f64::INFINITY
        };
        Evaluation {
            value,
            error_estimate,
            branch: Branch::Series,
        }
    }

    /// Optimally truncated asymptotic expansion, valid for `z < 0`.
    pub fn asymptotic(&self, z: f64) -> Evaluation {
        let fail = Evaluation {
            value: f64::NAN,
            error_estimate: f64::INFINITY,
            branch: Branch::Asymptotic,
        };
        if z >= 0.0 {
            return fail;
        }
        let coef = &self.tables.asymptotic;
        let env = &self.tables.envelope;
        let inv = -1.0 / z;
        let mut power = 1.0;
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut prev_env = f64::INFINITY;
        let mut truncation = f64::INFINITY;
        for k in 1..coef.len() {
            power *= inv;
            // While β-αk > 0 the terms are always kept; the stopping rules need the
            // smooth envelope, which starts at the first nonpositive argument.
            let smooth = env[k] > 0.0;
            let e = env[k] * power;
            if smooth && e > prev_env {
                // past the smallest term
                truncation = prev_env;
                break;
            }
            // -z^{-k} = -(-1)^k |z|^{-k}
            let t = if k % 2 == 1 {
                power * coef[k]
            } else {
                -power * coef[k]
            };
            sum += t;
            abs_sum += t.abs();
            if smooth {
                prev_env = e;
                if e < 1e-18 * sum.abs() {
                    truncation = e;
                    break;
                }
            }
        }
        if sum == 0.0 || !truncation.is_finite() {
            return fail;
        }
        let error_estimate = (4.0 * truncation + 2.0 * f64::EPSILON * abs_sum) / sum.abs() + 1e-15;
        Evaluation {
            value: sum,
            error_estimate,
            branch: Branch::Asymptotic,
        }
    }

    /// Power series summed with 320-bit floats; slow, used only when both fast branches fail.
    pub fn extended_series(&self, z: f64) -> Evaluation {
        let p = EXTENDED_PREC;
        let zb = BigFloat::from_f64(z, p);
        let coef = &self.tables.series_big;
        let mut power = BigFloat::from_f64(1.0, p);
        let mut sum = coef[0].clone();
        let mut max_exp = exponent(&sum);
        let mut prev_exp = max_exp;
        let mut used = 0usize;
        let mut converged = false;
        for (k, ck) in coef.iter().enumerate().skip(1) {
            power = power.mul(&zb, p, RM);
            let t = power.mul(ck, p, RM);
            sum = sum.add(&t, p, RM);
            used = k;
            if t.is_zero() {
                continue;
            }
            let te = exponent(&t);
            max_exp = max_exp.max(te);
            if te <= prev_exp && te + 80 < exponent(&sum) {
                converged = true;
                break;
            }
            prev_exp = te;
        }
        let value = precise::to_f64(&sum);
        let error_estimate = if converged && value != 0.0 {
            let bits = max_exp - exponent(&sum) - p as i64 + 4;
            (used as f64 + 2.0) * 2f64.powi(bits.clamp(-1000, 1000) as i32) + f64::EPSILON / 2.0
        } else {
            f64::INFINITY
        };
        Evaluation {
            value,
            error_estimate,
            branch: Branch::ExtendedSeries,
        }
    }
}

fn exponent(x: &BigFloat) -> i64 {
    x.exponent().map_or(i64::MIN / 4, i64::from)
}

/// `E_{α,β}(z)`; see the module documentation for accuracy and range.
pub fn mlf_eval(params: MlfParams, z: f64) -> Result<f64> {
    MittagLeffler::new(params).eval(z)
}

/// The decay factor `E_{α,1}(-x)` for `x ≥ 0`.
pub fn mlf_e_alpha_1(alpha: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Parameter(format!(
            "decay factor argument must be nonnegative, got {x}"
        )));
    }
    mlf_eval(MlfParams::new(alpha, 1.0)?, -x)
}
