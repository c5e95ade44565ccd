//! Binary-binary logistic regression: `logit(P(y = 1)) = alpha + beta * x`.
//!
//! For a saturated 2x2 table the maximum-likelihood coefficient is the log
//! odds ratio, so [`fit_logistic`] uses the closed form with a Wald standard
//! error. [`fit_logistic_mle`] is an independent damped-Newton fit of the
//! same model and must agree to 1e-8 on every non-degenerate table;
//! [`two_prop_ztest`] is the pooled two-proportion cross-check oracle.

use crate::error::{Error, Result};
use crate::scalar::{two_sided_p, Scalar};

/// Cell counts of the 2x2 table.
///
/// `a`: x=1,y=1; `b`: x=1,y=0; `c`: x=0,y=1; `d`: x=0,y=0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl Counts2x2 {
    pub fn from_vectors(y: &[u8], x: &[u8]) -> Result<Self> {
        if y.len() != x.len() {
            return Err(Error::validation("y and x must have equal length"));
        }
        if y.len() < 4 {
            return Err(Error::validation("need at least 4 observations"));
        }
        let mut t = Counts2x2 { a: 0, b: 0, c: 0, d: 0 };
        for (&yi, &xi) in y.iter().zip(x) {
            match (xi, yi) {
                (1, 1) => t.a += 1,
                (1, 0) => t.b += 1,
                (0, 1) => t.c += 1,
                (0, 0) => t.d += 1,
                _ => return Err(Error::validation("y and x must be binary (0/1)")),
            }
        }
        if t.n1() == 0 || t.n0() == 0 {
            return Err(Error::validation("both x groups must be non-empty"));
        }
        Ok(t)
    }

    /// Group-1 size.
    pub fn n1(&self) -> u64 {
        self.a + self.b
    }

    /// Group-0 size.
    pub fn n0(&self) -> u64 {
        self.c + self.d
    }

    /// True when any cell is zero (the saturated MLE does not exist).
    pub fn has_zero_cell(&self) -> bool {
        self.a == 0 || self.b == 0 || self.c == 0 || self.d == 0
    }

    /// Group-proportion difference `p1 - p0`.
    pub fn delta_p<S: Scalar>(&self) -> S {
        let p1 = S::from_u64(self.a).unwrap() / S::from_u64(self.n1()).unwrap();
        let p0 = S::from_u64(self.c).unwrap() / S::from_u64(self.n0()).unwrap();
        p1 - p0
    }
}

/// Outcome of one logistic fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult<S: Scalar> {
    /// Log-odds coefficient of the group indicator.
    pub beta: S,
    pub se: S,
    pub z: S,
    pub p_value: S,
    /// `p_value < alpha` (never set for degenerate fits).
    pub significant: bool,
    pub alpha: S,
    /// Sign of `beta`; for degenerate fits, the sign of `delta_p`.
    pub sign: i8,
    /// Group-1 positive proportion minus group-0.
    pub delta_p: S,
    pub n0: usize,
    pub n1: usize,
    /// Set when a zero cell (or an empty group at a caller boundary) makes
    /// the Wald fit undefined; such results are never significant.
    pub degenerate: bool,
}

impl<S: Scalar> RegressionResult<S> {
    /// A degenerate placeholder: not significant, p = 1, sign from `delta_p`.
    pub fn degenerate(alpha: S, delta_p: S, n0: usize, n1: usize) -> Self {
        RegressionResult {
            beta: S::zero(),
            se: S::zero(),
            z: S::zero(),
            p_value: S::one(),
            significant: false,
            alpha,
            sign: sign_of(delta_p),
            delta_p,
            n0,
            n1,
            degenerate: true,
        }
    }
}

fn sign_of<S: Scalar>(v: S) -> i8 {
    if v > S::zero() {
        1
    } else if v < S::zero() {
        -1
    } else {
        0
    }
}

/// Closed-form logistic fit from the 2x2 table.
///
/// `beta = ln(ad/bc)`, Wald `se = sqrt(1/a + 1/b + 1/c + 1/d)`, two-sided
/// normal p. Tables with a zero cell are reported as degenerate (p = 1, not
/// significant) rather than continuity-corrected.
pub fn fit_logistic_table<S: Scalar>(t: Counts2x2, alpha: S) -> RegressionResult<S> {
    let delta_p = t.delta_p::<S>();
    if t.has_zero_cell() {
        return RegressionResult::degenerate(alpha, delta_p, t.n0() as usize, t.n1() as usize);
    }
    let (a, b, c, d) = (
        S::from_u64(t.a).unwrap(),
        S::from_u64(t.b).unwrap(),
        S::from_u64(t.c).unwrap(),
        S::from_u64(t.d).unwrap(),
    );
    let beta = (a * d / (b * c)).ln();
    let se = (a.recip() + b.recip() + c.recip() + d.recip()).sqrt();
    let z = beta / se;
    let p_value = two_sided_p(z);
    RegressionResult {
        beta,
        se,
        z,
        p_value,
        significant: p_value < alpha,
        alpha,
        sign: sign_of(beta),
        delta_p,
        n0: t.n0() as usize,
        n1: t.n1() as usize,
        degenerate: false,
    }
}

/// Fits the regression from binary vectors. NA rows must already be removed.
pub fn fit_logistic<S: Scalar>(y: &[u8], x: &[u8], alpha: S) -> Result<RegressionResult<S>> {
    Ok(fit_logistic_table(Counts2x2::from_vectors(y, x)?, alpha))
}

/// Iterative maximum-likelihood fit by damped Newton on the log-likelihood.
///
/// Independent of the closed form; used as its oracle. Errors on tables
/// where the MLE does not exist (zero cells).
pub fn fit_logistic_mle<S: Scalar>(y: &[u8], x: &[u8], alpha: S) -> Result<RegressionResult<S>> {
    let t = Counts2x2::from_vectors(y, x)?;
    if t.has_zero_cell() {
        return Err(Error::Estimation(
            "fit_logistic_mle: zero cell, MLE does not exist".into(),
        ));
    }
    // Work on the grouped likelihood: two binomial observations.
    let n1 = t.n1() as f64;
    let n0 = t.n0() as f64;
    let (a, c) = (t.a as f64, t.c as f64);

    let log_lik = |intercept: f64, slope: f64| -> f64 {
        let eta0 = intercept;
        let eta1 = intercept + slope;
        c * eta0 - n0 * softplus(eta0) + a * eta1 - n1 * softplus(eta1)
    };

    let mut theta = [0.0f64, 0.0];
    let mut ll = log_lik(theta[0], theta[1]);
    for _ in 0..200 {
        let p0 = sigmoid(theta[0]);
        let p1 = sigmoid(theta[0] + theta[1]);
        let g = [c - n0 * p0 + a - n1 * p1, a - n1 * p1];
        let w0 = n0 * p0 * (1.0 - p0);
        let w1 = n1 * p1 * (1.0 - p1);
        // Hessian of -ll: [[w0+w1, w1], [w1, w1]].
        let h = [[w0 + w1, w1], [w1, w1]];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::Estimation("fit_logistic_mle: singular Hessian".into()));
        }
        let step = [
            (h[1][1] * g[0] - h[0][1] * g[1]) / det,
            (h[0][0] * g[1] - h[1][0] * g[0]) / det,
        ];
        // Step halving until the likelihood does not decrease.
        let mut scale = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = [theta[0] + scale * step[0], theta[1] + scale * step[1]];
            let cand_ll = log_lik(cand[0], cand[1]);
            if cand_ll >= ll - 1e-14 {
                theta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::Estimation("fit_logistic_mle: line search failed".into()));
        }
        if (scale * step[0]).abs().max((scale * step[1]).abs()) < 1e-12 {
            break;
        }
    }

    let p0 = sigmoid(theta[0]);
    let p1 = sigmoid(theta[0] + theta[1]);
    let w0 = n0 * p0 * (1.0 - p0);
    let w1 = n1 * p1 * (1.0 - p1);
    // Var(beta) from the inverse Fisher information.
    let det = (w0 + w1) * w1 - w1 * w1;
    let var_beta = (w0 + w1) / det;
    let beta = S::from_f64(theta[1]).unwrap();
    let se = S::from_f64(var_beta.sqrt()).unwrap();
    let z = beta / se;
    let p_value = two_sided_p(z);
    Ok(RegressionResult {
        beta,
        se,
        z,
        p_value,
        significant: p_value < alpha,
        alpha,
        sign: sign_of(beta),
        delta_p: t.delta_p(),
        n0: t.n0() as usize,
        n1: t.n1() as usize,
        degenerate: false,
    })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Two-proportion z-test p-value with pooled variance. Returns 1 when the
/// pooled proportion is 0 or 1.
pub fn two_prop_ztest<S: Scalar>(t: Counts2x2) -> S {
    let n1 = t.n1() as f64;
    let n0 = t.n0() as f64;
    let pooled = (t.a + t.c) as f64 / (n1 + n0);
    if pooled <= 0.0 || pooled >= 1.0 {
        return S::one();
    }
    let p1 = t.a as f64 / n1;
    let p0 = t.c as f64 / n0;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n0)).sqrt();
    two_sided_p(S::from_f64((p1 - p0) / se).unwrap())
}

/// `mean(y | x=1) - mean(y | x=0)`; errors when a group is empty.
pub fn delta_p<S: Scalar>(y: &[u8], x: &[u8]) -> Result<S> {
    if y.len() != x.len() {
        return Err(Error::validation("y and x must have equal length"));
    }
    let (mut n1, mut s1, mut n0, mut s0) = (0u64, 0u64, 0u64, 0u64);
    for (&yi, &xi) in y.iter().zip(x) {
        if xi == 1 {
            n1 += 1;
            s1 += u64::from(yi);
        } else {
            n0 += 1;
            s0 += u64::from(yi);
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(Error::EmptyInput("delta_p: a group is empty".into()));
    }
    Ok(S::from_u64(s1).unwrap() / S::from_u64(n1).unwrap()
        - S::from_u64(s0).unwrap() / S::from_u64(n0).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vectors(t: Counts2x2) -> (Vec<u8>, Vec<u8>) {
        let mut y = Vec::new();
        let mut x = Vec::new();
        for _ in 0..t.a {
            y.push(1);
            x.push(1);
        }
        for _ in 0..t.b {
            y.push(0);
            x.push(1);
        }
        for _ in 0..t.c {
            y.push(1);
            x.push(0);
        }
        for _ in 0..t.d {
            y.push(0);
            x.push(0);
        }
        (y, x)
    }

    // Worked example: 30/100 vs 50/100 positives.
    #[test]
    fn worked_example_matches_log_odds_ratio() {
        let t = Counts2x2 { a: 50, b: 50, c: 30, d: 70 };
        let r: RegressionResult<f64> = fit_logistic_table(t, 0.05);
        assert!((r.beta - (7.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((r.beta - 0.8473).abs() < 5e-5);
        assert!((r.se - 0.2960).abs() < 5e-5);
        assert!((r.z - 2.862).abs() < 5e-4);
        assert!((r.p_value - 0.0042).abs() < 5e-5);
        assert!(r.significant);
        assert_eq!(r.sign, 1);
        assert!((r.delta_p - 0.2).abs() < 1e-12);

        // Independent iterative MLE agrees to 1e-8.
        let (y, x) = vectors(t);
        let m: RegressionResult<f64> = fit_logistic_mle(&y, &x, 0.05).unwrap();
        assert!((m.beta - r.beta).abs() < 1e-8);
    }

    #[test]
    fn equal_proportions_give_zero_beta_and_p_one() {
        let t = Counts2x2 { a: 40, b: 60, c: 40, d: 60 };
        let r: RegressionResult<f64> = fit_logistic_table(t, 0.05);
        assert_eq!(r.beta, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
        assert_eq!(r.sign, 0);
    }

    #[test]
    fn zero_cell_is_degenerate_not_significant() {
        let t = Counts2x2 { a: 0, b: 50, c: 20, d: 30 };
        let r: RegressionResult<f64> = fit_logistic_table(t, 0.05);
        assert!(r.degenerate);
        assert!(!r.significant);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.sign, -1); // sign from delta_p = 0 - 0.4
    }

    #[test]
    fn ztest_examples() {
        let p: f64 = two_prop_ztest(Counts2x2 { a: 50, b: 50, c: 30, d: 70 });
        assert!(p < 0.05);
        let r: RegressionResult<f64> =
            fit_logistic_table(Counts2x2 { a: 50, b: 50, c: 30, d: 70 }, 0.05);
        assert_eq!(p < 0.05, r.significant);

        let p: f64 = two_prop_ztest(Counts2x2 { a: 40, b: 60, c: 40, d: 60 });
        assert_eq!(p, 1.0);

        let p: f64 = two_prop_ztest(Counts2x2 { a: 0, b: 50, c: 0, d: 50 });
        assert_eq!(p, 1.0);
    }

    #[test]
    fn delta_p_arithmetic() {
        let t = Counts2x2 { a: 50, b: 50, c: 30, d: 70 };
        let (y, x) = vectors(t);
        let d: f64 = delta_p(&y, &x).unwrap();
        assert!((d - 0.2).abs() < 1e-12);

        let same = Counts2x2 { a: 40, b: 60, c: 40, d: 60 };
        let (y, x) = vectors(same);
        let d: f64 = delta_p(&y, &x).unwrap();
        assert_eq!(d, 0.0);

        assert!(delta_p::<f64>(&[1, 0], &[1, 1]).is_err());
    }

    #[test]
    fn delta_p_matches_recount_on_random_table() {
        let mut y = Vec::new();
        let mut x = Vec::new();
        // Deterministic pseudo-random 200-row table.
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as u32
        };
        for _ in 0..200 {
            x.push((next() % 2) as u8);
            y.push((next() % 3 == 0) as u8);
        }
        let d: f64 = delta_p(&y, &x).unwrap();
        let mut sums = [0f64; 2];
        let mut ns = [0f64; 2];
        for (&yi, &xi) in y.iter().zip(&x) {
            sums[xi as usize] += yi as f64;
            ns[xi as usize] += 1.0;
        }
        assert!((d - (sums[1] / ns[1] - sums[0] / ns[0])).abs() < 1e-12);
    }

    #[test]
    fn generic_scalar_f32_fit_is_close_to_f64() {
        let t = Counts2x2 { a: 50, b: 50, c: 30, d: 70 };
        let r32: RegressionResult<f32> = fit_logistic_table(t, 0.05f32);
        let r64: RegressionResult<f64> = fit_logistic_table(t, 0.05f64);
        assert!((f64::from(r32.beta) - r64.beta).abs() < 1e-5);
        assert_eq!(r32.significant, r64.significant);
    }

    proptest! {
        // Swapping group labels flips beta and delta_p, keeps p.
        #[test]
        fn antisymmetry_under_group_swap(a in 1u64..40, b in 1u64..40, c in 1u64..40, d in 1u64..40) {
            let t = Counts2x2 { a, b, c, d };
            let swapped = Counts2x2 { a: c, b: d, c: a, d: b };
            let r: RegressionResult<f64> = fit_logistic_table(t, 0.05);
            let s: RegressionResult<f64> = fit_logistic_table(swapped, 0.05);
            prop_assert!((r.beta + s.beta).abs() < 1e-12);
            prop_assert!((r.delta_p + s.delta_p).abs() < 1e-12);
            prop_assert!((r.p_value - s.p_value).abs() < 1e-12);
            prop_assert_eq!(r.sign, -s.sign);
        }

        // Row order never matters.
        #[test]
        fn permutation_invariance(rows in proptest::collection::vec((0u8..2, 0u8..2), 8..60), seed in 0u64..1000) {
            let mut y: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let mut x: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let n1 = x.iter().filter(|&&v| v == 1).count();
            prop_assume!(n1 > 0 && n1 < x.len());

            let before = fit_logistic::<f64>(&y, &x, 0.05).unwrap();
            // Deterministic shuffle of the paired rows.
            let mut idx: Vec<usize> = (0..y.len()).collect();
            let mut state = seed.wrapping_add(1);
            for i in (1..idx.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                idx.swap(i, j);
            }
            let (py, px): (Vec<u8>, Vec<u8>) = idx.iter().map(|&i| (y[i], x[i])).unzip();
            y = py;
            x = px;
            let after = fit_logistic::<f64>(&y, &x, 0.05).unwrap();
            prop_assert_eq!(before, after);
        }

        // Closed form and iterative MLE agree to 1e-8 on non-degenerate tables.
        #[test]
        fn closed_form_matches_mle(a in 1u64..60, b in 1u64..60, c in 1u64..60, d in 1u64..60) {
            let t = Counts2x2 { a, b, c, d };
            let (y, x) = vectors(t);
            let closed: RegressionResult<f64> = fit_logistic_table(t, 0.05);
            let mle: RegressionResult<f64> = fit_logistic_mle(&y, &x, 0.05).unwrap();
            prop_assert!((closed.beta - mle.beta).abs() < 1e-8);
            prop_assert!((closed.se - mle.se).abs() < 1e-7);
        }
    }
}
