//! Scalar standard-normal special functions and the Bonferroni cutoff.
//!
//! The CDF is evaluated through the complementary error function so that
//! deep lower-tail values keep full relative accuracy; the quantile is a
//! closed-form approximation polished by Newton steps against the CDF.

use crate::error::{Error, Result};
use serde::Serialize;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

// ---------------------------------------------------------------------------
// erfc: rational approximation from FreeBSD msun (s_erf.c), double precision.
// Relative error below ~1.3 ulp on each branch; the tail branch keeps
// relative accuracy down to the underflow threshold near x = 27.2.
// ---------------------------------------------------------------------------

const ERX: f64 = 8.450_629_115_104_675_3e-1;

const PP0: f64 = 1.283_791_670_955_125_6e-1;
const PP1: f64 = -3.250_421_072_470_015e-1;
const PP2: f64 = -2.848_174_957_559_851e-2;
const PP3: f64 = -5.770_270_296_489_442e-3;
const PP4: f64 = -2.376_301_665_665_016_3e-5;
const QQ1: f64 = 3.979_172_239_591_553_5e-1;
const QQ2: f64 = 6.502_224_998_876_729e-2;
const QQ3: f64 = 5.081_306_281_875_766e-3;
const QQ4: f64 = 1.324_947_380_043_216_4e-4;
const QQ5: f64 = -3.960_228_278_775_368e-6;

const PA0: f64 = -2.362_118_560_752_659_4e-3;
const PA1: f64 = 4.148_561_186_837_483e-1;
const PA2: f64 = -3.722_078_760_357_013_3e-1;
const PA3: f64 = 3.183_466_199_011_617_5e-1;
const PA4: f64 = -1.108_946_942_823_966_8e-1;
const PA5: f64 = 3.547_830_432_561_823_6e-2;
const PA6: f64 = -2.166_375_594_868_790_8e-3;
const QA1: f64 = 1.064_208_804_008_442_3e-1;
const QA2: f64 = 5.403_979_177_021_710_5e-1;
const QA3: f64 = 7.182_865_441_419_627e-2;
const QA4: f64 = 1.261_712_198_087_616_4e-1;
const QA5: f64 = 1.363_708_391_202_905e-2;
const QA6: f64 = 1.198_449_984_679_910_7e-2;

const RA0: f64 = -9.864_944_034_847_148e-3;
const RA1: f64 = -6.938_585_727_071_818e-1;
const RA2: f64 = -1.055_862_622_532_329_1e1;
const RA3: f64 = -6.237_533_245_032_601e1;
const RA4: f64 = -1.623_966_694_625_734_7e2;
const RA5: f64 = -1.846_050_929_067_110_4e2;
const RA6: f64 = -8.128_743_550_630_659e1;
const RA7: f64 = -9.814_329_344_169_145e0;
const SA1: f64 = 1.965_127_166_743_925_7e1;
const SA2: f64 = 1.376_577_541_435_190_4e2;
const SA3: f64 = 4.345_658_774_752_292_3e2;
const SA4: f64 = 6.453_872_717_332_679e2;
const SA5: f64 = 4.290_081_400_275_678_3e2;
const SA6: f64 = 1.086_350_055_417_794_4e2;
const SA7: f64 = 6.570_249_770_319_282e0;
const SA8: f64 = -6.042_441_521_485_81e-2;

const RB0: f64 = -9.864_942_924_700_099e-3;
const RB1: f64 = -7.992_832_376_805_23e-1;
const RB2: f64 = -1.775_795_491_775_475_2e1;
const RB3: f64 = -1.606_363_848_558_219_2e2;
const RB4: f64 = -6.375_664_433_683_896e2;
const RB5: f64 = -1.025_095_131_611_077_2e3;
const RB6: f64 = -4.835_191_916_086_514e2;
const SB1: f64 = 3.033_806_074_348_246e1;
const SB2: f64 = 3.257_925_129_965_739_2e2;
const SB3: f64 = 1.536_729_586_084_437e3;
const SB4: f64 = 3.199_858_219_508_595_4e3;
const SB5: f64 = 2.553_050_406_433_164_4e3;
const SB6: f64 = 4.745_285_412_069_554e2;
const SB7: f64 = -2.244_095_244_658_581_8e1;

const TINY: f64 = 1.387_778_780_781_445_7e-17; // 2^-56

/// Complementary error function, full relative accuracy in the right tail.
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
        let (r, q);
        if x < 1.0 / 0.35 {
            r = RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7))))));
            q = 1.0
                + s * (SA1
                    + s * (SA2 + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8)))))));
        } else {
            if sign && x > 6.0 {
                return 2.0;
            }
            r = RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6)))));
            q = 1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7))))));
        }
        // split x into a high part with zeroed low word so that -z*z is exact
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

/// Standard normal density `phi(x)`.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF `Phi(x)`, relative-accurate in the lower tail.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

// Acklam's rational approximation to the normal quantile (relative
// accuracy ~1.15e-9 before refinement).
const ACK_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239e0,
];
const ACK_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACK_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838e0,
    -2.549_732_539_343_734e0,
    4.374_664_141_464_968e0,
    2.938_163_982_698_783e0,
];
const ACK_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996e0,
    3.754_408_661_907_416e0,
];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((ACK_C[0] * q + ACK_C[1]) * q + ACK_C[2]) * q + ACK_C[3]) * q + ACK_C[4]) * q
            + ACK_C[5])
            / ((((ACK_D[0] * q + ACK_D[1]) * q + ACK_D[2]) * q + ACK_D[3]) * q + 1.0)
    } else {
        // central region; callers only pass p <= 0.5
        let q = p - 0.5;
        let r = q * q;
        (((((ACK_A[0] * r + ACK_A[1]) * r + ACK_A[2]) * r + ACK_A[3]) * r + ACK_A[4]) * r
            + ACK_A[5])
            * q
            / (((((ACK_B[0] * r + ACK_B[1]) * r + ACK_B[2]) * r + ACK_B[3]) * r + ACK_B[4]) * r
                + 1.0)
    }
}

/// Standard normal quantile `Phi^{-1}(p)`.
///
/// Closed-form initial guess refined by two Newton steps against
/// [`std_normal_cdf`], which pins the round-trip identity to the CDF
/// actually implemented here.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile needs p in (0,1), got {p}")));
    }
    // work in the lower tail for relative accuracy, reflect at the end
    let (pl, flip) = if p > 0.5 { (1.0 - p, true) } else { (p, false) };
    let mut x = acklam(pl);
    for _ in 0..2 {
        let err = std_normal_cdf(x) - pl;
        x -= err / std_normal_pdf(x);
    }
    Ok(if flip { -x } else { x })
}

/// Per-test level, cutoff, and series order for a Bonferroni run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub n: usize,
    pub alpha_n: f64,
    pub c: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

pub const DEFAULT_K: usize = 15;
pub const MAX_K: usize = 30;

impl TestConfig {
    /// Replace the series truncation order (`2 <= K <= 30`).
    pub fn with_k(mut self, k: usize) -> Result<Self> {
        if !(2..=MAX_K).contains(&k) {
            return Err(Error::Domain(format!("K must be in [2, {MAX_K}], got {k}")));
        }
        self.k = k;
        Ok(self)
    }
}

/// Bonferroni configuration: `alpha_n = alpha / n`, `c = Phi^{-1}(1 - alpha_n)`.
pub fn bonferroni_cutoff(n: usize, alpha: f64) -> Result<TestConfig> {
    if n == 0 {
        return Err(Error::InvalidDimension { min: 1, got: 0 });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must be in (0,1), got {alpha}")));
    }
    let alpha_n = alpha / n as f64;
    // quantile evaluated at the small tail mass to avoid 1 - alpha_n cancellation
    let c = -std_normal_quantile(alpha_n)?;
    Ok(TestConfig {
        alpha,
        n,
        alpha_n,
        c,
        k: DEFAULT_K,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let err = if expected == 0.0 {
            actual.abs()
        } else {
            ((actual - expected) / expected).abs()
        };
        assert!(
            err <= tol,
            "actual {actual:e} vs expected {expected:e} (rel err {err:e})"
        );
    }

    #[test]
    fn pdf_values() {
        assert_rel(std_normal_pdf(0.0), 0.3989422804014327, 1e-15);
        assert_rel(std_normal_pdf(3.0), 0.004431848411938008, 1e-13);
        assert_eq!(std_normal_pdf(2.5), std_normal_pdf(-2.5));
    }

    #[test]
    fn cdf_center_and_limits() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(40.0), 1.0);
        assert_eq!(std_normal_cdf(-40.0), 0.0);
    }

    // reference values computed with 50-digit arithmetic (mpmath ncdf)
    #[test]
    fn cdf_tail_reference_values() {
        let cases = [
            (-1.0, 0.15865525393145705141),
            (-3.0, 0.0013498980316300945267),
            (-5.0, 2.8665157187919391167e-7),
            (-8.0, 6.2209605742717841235e-16),
            (-12.0, 1.7764821120776789977e-33),
            (-20.0, 2.7536241186062336951e-89),
            (-30.0, 4.9067139271481870595e-198),
            (-37.0, 5.7255712225245768227e-300),
            (0.5, 0.69146246127401310364),
            (2.0, 0.9772498680518207928),
        ];
        for (x, expected) in cases {
            assert_rel(std_normal_cdf(x), expected, 1e-12);
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert_rel(
            std_normal_quantile(1.0 - 1e-5).unwrap(),
            4.264890793923841,
            1e-12,
        );
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(-0.5).is_err());
    }

    #[test]
    fn quantile_cdf_round_trip() {
        let mut x = -8.0;
        while x <= 8.0 {
            let p = std_normal_cdf(x);
            let back = std_normal_quantile(p).unwrap();
            // for p near 1 the representable resolution in x is eps * p / phi(x)
            let tol = 1e-9 + 4.0 * f64::EPSILON * p / std_normal_pdf(x);
            assert!(
                (back - x).abs() <= tol,
                "round trip at x = {x}: got {back}"
            );
            x += 0.173;
        }
    }

    #[test]
    fn quantile_tail_relative_accuracy() {
        // Phi(quantile(p)) must reproduce p to 1e-12 relative, deep in the tail
        for &p in &[1e-3, 1e-6, 2e-6, 1e-10, 1e-30, 1e-100, 1e-250] {
            let x = std_normal_quantile(p).unwrap();
            assert_rel(std_normal_cdf(x), p, 1e-12);
        }
    }

    #[test]
    fn bonferroni_cutoff_examples() {
        let cfg = bonferroni_cutoff(5000, 0.05).unwrap();
        assert_rel(cfg.c, 4.264890793923841, 1e-12);
        assert_eq!(cfg.alpha_n, 1e-5);
        assert_eq!(cfg.k, DEFAULT_K);

        let cfg1 = bonferroni_cutoff(1, 0.05).unwrap();
        assert_rel(cfg1.c, 1.6448536269514722, 1e-10);

        let cfg2 = bonferroni_cutoff(5000, 0.01).unwrap();
        assert_eq!(cfg2.alpha_n, 2e-6);
    }

    #[test]
    fn cutoff_round_trip_invariant() {
        for &(n, alpha) in &[(5000usize, 0.01), (5000, 0.05), (5000, 0.1), (5000, 0.2), (10, 0.05)] {
            let cfg = bonferroni_cutoff(n, alpha).unwrap();
            let back = std_normal_cdf(-cfg.c);
            assert_rel(back, cfg.alpha_n, 1e-12);
            assert!(cfg.c > 0.0);
        }
    }

    #[test]
    fn k_bounds_enforced() {
        let cfg = bonferroni_cutoff(10, 0.05).unwrap();
        assert!(cfg.with_k(1).is_err());
        assert!(cfg.with_k(31).is_err());
        assert_eq!(cfg.with_k(30).unwrap().k, 30);
    }

    #[test]
    fn bonferroni_cutoff_rejects_bad_inputs() {
        assert!(bonferroni_cutoff(0, 0.05).is_err());
        assert!(bonferroni_cutoff(10, 0.0).is_err());
        assert!(bonferroni_cutoff(10, 1.0).is_err());
    }

    // Savage's bound at k = 1: (phi(c)/c)(1 - 1/c^2) < Phi(-c) < phi(c)/c
    #[test]
    fn scalar_mills_sandwich() {
        for &c in &[3.0, 4.0, 5.0, 6.0, 8.0] {
            let upper = std_normal_pdf(c) / c;
            let lower = upper * (1.0 - 1.0 / (c * c));
            let tail = std_normal_cdf(-c);
            assert!(lower < tail && tail < upper, "sandwich fails at c = {c}");
        }
    }

    // n ~ alpha * sqrt(2 pi) * c * exp(c^2 / 2)
    #[test]
    fn cutoff_growth_relation() {
        for &alpha in &[0.01, 0.05, 0.1, 0.2] {
            let cfg = bonferroni_cutoff(5000, alpha).unwrap();
            let approx_n = alpha * SQRT_2PI * cfg.c * (0.5 * cfg.c * cfg.c).exp();
            // the scalar Mill sandwich pins the approximation on both sides
            let c2 = cfg.c * cfg.c;
            assert!(
                approx_n <= 5000.0 && approx_n >= 5000.0 * (1.0 - 1.0 / c2),
                "alpha = {alpha}: approx n = {approx_n}"
            );
        }
    }
}
