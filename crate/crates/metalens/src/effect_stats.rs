//! Per-study effect statistics: normal-approximation standard errors, z-scores
//! and two-sided p-values recovered from published risk ratios and confidence
//! intervals, plus the ranking step that feeds the p-value plot.

// the ported erfc coefficient tables and the frozen expectations in the tests
// keep every digit of their sources on purpose
#![allow(clippy::excessive_precision)]

use crate::error::{MetalensError, Result};

/// Scale on which the normal approximation is applied.
///
/// `RawRR` treats the risk ratio itself as normally distributed around 1,
/// recovering `se = (cl_high - cl_low) / (2 z)`. `LogRR` works on the log of
/// the ratio, where the null sits at 0. Both z-scores always share a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    RawRR,
    LogRR,
}

impl Scale {
    /// Effect value under the null hypothesis on this scale.
    pub fn null_value(self) -> f64 {
        match self {
            Scale::RawRR => 1.0,
            Scale::LogRR => 0.0,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "raw" | "rr" => Ok(Scale::RawRR),
            "log" | "logrr" => Ok(Scale::LogRR),
            other => Err(format!("unknown scale `{other}` (expected `raw` or `log`)")),
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scale::RawRR => write!(f, "raw risk ratio"),
            Scale::LogRR => write!(f, "log risk ratio"),
        }
    }
}

/// One published study result: a risk ratio with its confidence limits.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimate {
    pub id: String,
    pub label: String,
    pub rr: f64,
    pub cl_low: f64,
    pub cl_high: f64,
    /// Level of the published interval, e.g. 0.95.
    pub confidence_level: f64,
}

impl EffectEstimate {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        rr: f64,
        cl_low: f64,
        cl_high: f64,
        confidence_level: f64,
    ) -> Result<Self> {
        let e = EffectEstimate {
            id: id.into(),
            label: label.into(),
            rr,
            cl_low,
            cl_high,
            confidence_level,
        };
        e.validate()?;
        Ok(e)
    }

    /// Checks the construction invariants: `0 < cl_low <= rr <= cl_high`,
    /// `cl_low < cl_high`, and a confidence level strictly inside (0, 1).
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(MetalensError::InvalidEstimate {
                id: self.id.clone(),
                reason,
            })
        };
        if !(self.rr.is_finite() && self.cl_low.is_finite() && self.cl_high.is_finite()) {
            return fail("rr and confidence limits must be finite".into());
        }
        if self.cl_low <= 0.0 {
            return fail(format!("cl_low must be positive, got {}", self.cl_low));
        }
        if self.cl_low >= self.cl_high {
            return fail(format!(
                "cl_low must be below cl_high, got [{}, {}]",
                self.cl_low, self.cl_high
            ));
        }
        if self.rr < self.cl_low || self.rr > self.cl_high {
            return fail(format!(
                "rr {} falls outside its confidence interval [{}, {}]",
                self.rr, self.cl_low, self.cl_high
            ));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(MetalensError::ConfidenceLevel(self.confidence_level));
        }
        Ok(())
    }
}

/// Derived test statistics for one study, including its position in the
/// ascending p-value ordering (`rank` 1 = smallest p).
#[derive(Debug, Clone, PartialEq)]
pub struct PValueRecord {
    pub id: String,
    pub se: f64,
    pub z: f64,
    pub p: f64,
    pub rank: usize,
}

// ----------------------------------------------------------------------------
// Complementary error function.
//
// Rational approximations from the classic SunPro implementation as shipped in
// FreeBSD's msun (s_erf.c) and the Go standard library; relative error is a
// few ulps across the whole range, which keeps the normal CDF built on top of
// it well inside 1e-15 absolute error.
//
// ====================================================
// Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//
// Developed at SunPro, a Sun Microsystems, Inc. business.
// Permission to use, copy, modify, and distribute this
// software is freely granted, provided that this notice
// is preserved.
// ====================================================

const ERX: f64 = 8.45062911510467529297e-01;

// |x| in [0, 0.84375]
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;

// |x| in [0.84375, 1.25]
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;

// |x| in [1.25, 1/0.35]
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;

// |x| in [1/0.35, 28]
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

const TINY: f64 = 1.3877787807814456755e-17; // 2^-56

fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 2.0;
    }
    let sign = x < 0.0;
    let x = x.abs();
    if x < 0.84375 {
        let temp = if x < TINY {
            x
        } else {
            let z = x * x;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            let y = r / s;
            if x < 0.25 {
                x + x * y
            } else {
                0.5 + (x * y + (x - 0.5))
            }
        };
        return if sign { 1.0 + temp } else { 1.0 - temp };
    }
    if x < 1.25 {
        let s = x - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return if sign {
            1.0 + ERX + p / q
        } else {
            1.0 - ERX - p / q
        };
    }
    if x < 28.0 {
        let s = 1.0 / (x * x);
        let (r, q) = if x < 1.0 / 0.35 {
            (
                RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
                1.0 + s
                    * (SA1
                        + s * (SA2
                            + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
            )
        } else {
            if sign && x > 6.0 {
                return 2.0;
            }
            (
                RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
                1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
            )
        };
        // split x into a pseudo-single-precision head so exp(-x*x) stays exact
        let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
        let v = (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / q).exp();
        return if sign { 2.0 - v / x } else { v / x };
    }
    if sign {
        2.0
    } else {
        0.0
    }
}

/// Standard normal cumulative distribution function.
///
/// Built on the complementary error function above, so the absolute error is
/// far below the 1e-12 this crate's derivations require, and the lower tail
/// keeps full relative precision down to the underflow threshold.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided p-value for a standard normal z-score, clamped into (0, 1].
///
/// `2 * (1 - cdf(|z|))` collapses to `erfc(|z| / sqrt 2)`, which preserves
/// relative precision in the far tail instead of cancelling against 1.
pub fn p_two_sided(z: f64) -> f64 {
    let p = erfc(z.abs() / std::f64::consts::SQRT_2);
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Two-sided critical value for a confidence level, e.g. 0.95 -> 1.959964.
///
/// Found by bisecting this module's own `normal_cdf` rather than hard-coding
/// table constants, so every derived quantity is consistent with one CDF.
pub fn z_critical(confidence_level: f64) -> Result<f64> {
    if !(confidence_level > 0.0 && confidence_level < 1.0) || confidence_level.is_nan() {
        return Err(MetalensError::ConfidenceLevel(confidence_level));
    }
    let target = 0.5 + confidence_level / 2.0;
    let mut lo = 0.0_f64;
    let mut hi = 40.0_f64;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Recovers the standard error implied by a published confidence interval.
pub fn se_from_ci(estimate: &EffectEstimate, scale: Scale) -> Result<f64> {
    estimate.validate()?;
    let z = z_critical(estimate.confidence_level)?;
    let width = match scale {
        Scale::RawRR => estimate.cl_high - estimate.cl_low,
        Scale::LogRR => estimate.cl_high.ln() - estimate.cl_low.ln(),
    };
    let se = width / (2.0 * z);
    if !(se > 0.0 && se.is_finite()) {
        return Err(MetalensError::BadStandardError(se));
    }
    Ok(se)
}

/// Z-score of the effect against the null on the chosen scale, given the
/// standard error already recovered on that same scale.
pub fn z_score(estimate: &EffectEstimate, se: f64, scale: Scale) -> Result<f64> {
    if !(se > 0.0 && se.is_finite()) {
        return Err(MetalensError::BadStandardError(se));
    }
    let displacement = match scale {
        Scale::RawRR => estimate.rr - 1.0,
        Scale::LogRR => estimate.rr.ln(),
    };
    Ok(displacement / se)
}

/// Derives (se, z, p, rank) for every study.
///
/// Output preserves input order; `rank` positions each study in the ascending
/// p-value ordering with ties broken by input order. Validation failures name
/// the offending study.
pub fn derive_records(estimates: &[EffectEstimate], scale: Scale) -> Result<Vec<PValueRecord>> {
    if estimates.is_empty() {
        return Err(MetalensError::EmptyInput("derive_records"));
    }
    let mut records = Vec::with_capacity(estimates.len());
    for e in estimates {
        let se = se_from_ci(e, scale)?;
        let z = z_score(e, se, scale)?;
        let p = p_two_sided(z);
        records.push(PValueRecord {
            id: e.id.clone(),
            se,
            z,
            p,
            rank: 0,
        });
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    // stable sort keeps input order for tied p-values
    order.sort_by(|&a, &b| records[a].p.total_cmp(&records[b].p));
    for (rank, idx) in order.into_iter().enumerate() {
        records[idx].rank = rank + 1;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn estimate(id: &str, rr: f64, lo: f64, hi: f64) -> EffectEstimate {
        EffectEstimate::new(id, "", rr, lo, hi, 0.95).unwrap()
    }

    fn derive_one(e: &EffectEstimate, scale: Scale) -> (f64, f64, f64) {
        let se = se_from_ci(e, scale).unwrap();
        let z = z_score(e, se, scale).unwrap();
        (se, z, p_two_sided(z))
    }

    // Independent CDF oracle: adaptive Simpson quadrature of the normal
    // density from 0 to x, tolerance well below the 1e-12 being verified.
    fn density(t: f64) -> f64 {
        (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive_simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = density(lm);
        let frm = density(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            adaptive_simpson(a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + adaptive_simpson(m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }

    fn cdf_by_quadrature(x: f64) -> f64 {
        if x == 0.0 {
            return 0.5;
        }
        let (a, b) = (0.0, x.abs());
        let fa = density(a);
        let fb = density(b);
        let fm = density(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let integral = adaptive_simpson(a, b, fa, fm, fb, whole, 1e-15, 48);
        if x > 0.0 {
            0.5 + integral
        } else {
            0.5 - integral
        }
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        let mut x = -8.0;
        while x <= 8.0 {
            let got = normal_cdf(x);
            let want = cdf_by_quadrature(x);
            assert!(
                (got - want).abs() < 1e-12,
                "cdf({x}) = {got}, quadrature oracle {want}"
            );
            x += 0.125;
        }
    }

    #[test]
    fn cdf_fixed_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_relative_eq!(normal_cdf(1.0), 0.8413447460685429, max_relative = 1e-14);
        assert_relative_eq!(normal_cdf(-1.96), 0.024997895148220435, max_relative = 1e-12);
        assert!(normal_cdf(40.0) == 1.0);
        assert!(normal_cdf(-40.0) < 1e-300);
    }

    #[test]
    fn critical_values_from_bisection() {
        assert!((z_critical(0.95).unwrap() - 1.959964).abs() < 1e-6);
        assert!((z_critical(0.5).unwrap() - 0.674490).abs() < 1e-6);
        assert!((z_critical(0.6827).unwrap() - 1.0).abs() < 1e-3);
        assert!((z_critical(0.99).unwrap() - 2.575829).abs() < 1e-6);
        for cl in [0.5, 0.8, 0.9, 0.95, 0.99, 0.999] {
            let z = z_critical(cl).unwrap();
            assert!((normal_cdf(z) - (0.5 + cl / 2.0)).abs() < 1e-9);
        }
        assert!(z_critical(0.0).is_err());
        assert!(z_critical(1.0).is_err());
        assert!(z_critical(-0.2).is_err());
        assert!(z_critical(f64::NAN).is_err());
    }

    #[test]
    fn p_two_sided_edges() {
        assert_eq!(p_two_sided(0.0), 1.0);
        let p = p_two_sided(1.959964);
        assert!((p - 0.05).abs() < 1e-6);
        assert_eq!(p_two_sided(3.0), p_two_sided(-3.0));
        // far tail keeps relative precision instead of rounding to 0
        let far = p_two_sided(35.0);
        assert!(far > 0.0 && far < 1e-250);
        assert_eq!(p_two_sided(1e6), f64::MIN_POSITIVE);
    }

    #[test]
    fn recovers_published_study_statistics() {
        // rank-1 rows of the two bundled study tables
        let (se, z, p) = derive_one(&estimate("VHM&PP", 1.32, 0.97, 1.81), Scale::RawRR);
        assert_relative_eq!(se, 0.2142897, max_relative = 1e-6);
        assert_relative_eq!(z, 1.4933059, max_relative = 1e-6);
        assert_relative_eq!(p, 0.13535713, max_relative = 1e-6);

        let (se, z, p) = derive_one(&estimate("Krewski 2009", 1.09, 1.05, 1.13), Scale::RawRR);
        assert_relative_eq!(se, 0.0204085, max_relative = 1e-5);
        assert_relative_eq!(z, 4.4099190, max_relative = 1e-6);
        assert_relative_eq!(p, 1.0340931e-5, max_relative = 1e-6);

        let (se, z, p) = derive_one(&estimate("HUBRO", 0.83, 0.35, 2.00), Scale::RawRR);
        assert!((se - 0.4209).abs() < 2e-4);
        assert!((z - -0.4039).abs() < 2e-4);
        assert!((p - 0.6863).abs() < 2e-4);
    }

    #[test]
    fn log_scale_uses_log_width_and_null() {
        let e = estimate("x", 1.0, 0.5, 2.0);
        // symmetric interval on the log scale, rr at the null
        let (se, z, p) = derive_one(&e, Scale::LogRR);
        assert_eq!(z, 0.0);
        assert_eq!(p, 1.0);
        assert_relative_eq!(se, (4.0f64).ln() / (2.0 * 1.9599639845), max_relative = 1e-9);
        assert!(z_score(&e, 0.0, Scale::LogRR).is_err());
        assert!(z_score(&e, -1.0, Scale::RawRR).is_err());
    }

    #[test]
    fn derive_assigns_ranks_by_ascending_p() {
        let estimates = vec![
            estimate("a", 1.05, 0.60, 1.50), // middling
            estimate("b", 1.50, 1.20, 1.80), // strongest
            estimate("c", 1.02, 0.42, 1.62), // weakest
        ];
        let records = derive_records(&estimates, Scale::RawRR).unwrap();
        assert_eq!(records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(records[0].rank, 2);
        assert_eq!(records[1].rank, 1);
        assert_eq!(records[2].rank, 3);
    }

    #[test]
    fn derive_breaks_ties_by_input_order() {
        // identical studies tie exactly
        let estimates = vec![
            estimate("first", 1.2, 1.0, 1.4),
            estimate("second", 1.2, 1.0, 1.4),
        ];
        let records = derive_records(&estimates, Scale::RawRR).unwrap();
        assert_eq!(records[0].p, records[1].p);
        assert_eq!(records[0].rank, 1);
        assert_eq!(records[1].rank, 2);
    }

    #[test]
    fn derive_rejects_bad_rows_by_id() {
        let mut bad = estimate("ok", 1.2, 1.0, 1.4);
        bad.id = "broken".into();
        bad.cl_low = -0.5;
        let err = derive_records(&[bad], Scale::RawRR).unwrap_err();
        assert!(err.to_string().contains("broken"), "{err}");
        assert!(derive_records(&[], Scale::RawRR).is_err());
    }

    #[test]
    fn estimate_validation() {
        assert!(EffectEstimate::new("x", "", 1.2, 0.0, 1.4, 0.95).is_err());
        assert!(EffectEstimate::new("x", "", 1.2, 1.3, 1.4, 0.95).is_err());
        assert!(EffectEstimate::new("x", "", 1.2, 1.4, 1.0, 0.95).is_err());
        assert!(EffectEstimate::new("x", "", 1.2, 1.0, 1.4, 1.0).is_err());
        assert!(EffectEstimate::new("x", "", f64::NAN, 1.0, 1.4, 0.95).is_err());
        assert!(EffectEstimate::new("x", "", 1.2, 1.0, 1.4, 0.95).is_ok());
    }

    proptest! {
        #[test]
        fn cdf_symmetry(x in -37.0f64..37.0) {
            let s = normal_cdf(x) + normal_cdf(-x);
            prop_assert!((s - 1.0).abs() < 1e-15);
        }

        #[test]
        fn p_is_a_probability_and_monotone(a in -40.0f64..40.0, b in -40.0f64..40.0) {
            let (pa, pb) = (p_two_sided(a), p_two_sided(b));
            prop_assert!(pa > 0.0 && pa <= 1.0);
            if a.abs() <= b.abs() {
                prop_assert!(pa >= pb);
            }
        }

        #[test]
        fn se_round_trips_through_interval(
            z in 0.05f64..5.0,
            se in 1e-3f64..2.0,
            confidence in 0.5f64..0.999,
        ) {
            let rr = 1.0 + z * se;
            let zc = z_critical(confidence).unwrap();
            let (lo, hi) = (rr - zc * se, rr + zc * se);
            prop_assume!(lo > 0.0);
            let e = EffectEstimate::new("t", "", rr, lo, hi, confidence).unwrap();
            let got_se = se_from_ci(&e, Scale::RawRR).unwrap();
            prop_assert!((got_se - se).abs() / se < 1e-10);
            let got_z = z_score(&e, got_se, Scale::RawRR).unwrap();
            prop_assert!((got_z - z).abs() < 1e-8 * (1.0 + z.abs()));
        }

        #[test]
        fn scales_agree_on_direction(
            rr in 0.2f64..5.0,
            half_width in 0.05f64..0.9,
        ) {
            let lo = rr * (1.0 - half_width);
            let hi = rr * (1.0 + half_width);
            prop_assume!(lo > 0.0);
            let e = EffectEstimate::new("t", "", rr, lo, hi, 0.95).unwrap();
            let (_, zr, _) = derive_one(&e, Scale::RawRR);
            let (_, zl, _) = derive_one(&e, Scale::LogRR);
            prop_assert!(zr.signum() == zl.signum(), "zr {} zl {}", zr, zl);
        }

        #[test]
        fn ranks_are_a_permutation(seed_rrs in proptest::collection::vec(0.3f64..3.0, 1..20)) {
            let estimates: Vec<_> = seed_rrs
                .iter()
                .enumerate()
                .map(|(i, &rr)| estimate(&format!("s{i}"), rr, rr * 0.5, rr * 1.5))
                .collect();
            let records = derive_records(&estimates, Scale::RawRR).unwrap();
            let mut ranks: Vec<_> = records.iter().map(|r| r.rank).collect();
            ranks.sort_unstable();
            prop_assert_eq!(ranks, (1..=estimates.len()).collect::<Vec<_>>());
        }
    }
}
