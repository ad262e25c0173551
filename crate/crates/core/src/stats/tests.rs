use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use crate::error::{Error, Result};

/// Why a statistic could not be computed in the usual way.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degenerate {
    /// The denominator variance is zero while the effect is not; the statistic is
    /// reported as ±∞ with p = 0.
    ZeroVariance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    /// W, t or F.
    pub statistic: f64,
    /// Degrees of freedom; `df2` is set for F tests only.
    pub df1: f64,
    pub df2: Option<f64>,
    pub p: f64,
    pub degenerate: Option<Degenerate>,
}

impl TestResult {
    fn new(statistic: f64, df1: f64, df2: Option<f64>, p: f64) -> Self {
        Self {
            statistic,
            df1,
            df2,
            p: p.clamp(0.0, 1.0),
            degenerate: None,
        }
    }

    fn infinite(sign: f64, df1: f64, df2: Option<f64>) -> Self {
        Self {
            statistic: sign * f64::INFINITY,
            df1,
            df2,
            p: 0.0,
            degenerate: Some(Degenerate::ZeroVariance),
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Two-sided p of a t statistic.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    2.0 * dist.sf(t.abs())
}

/// Upper-tail p of an F statistic.
pub fn f_upper(f: f64, df1: f64, df2: f64) -> f64 {
    FisherSnedecor::new(df1, df2)
        .expect("positive degrees of freedom")
        .sf(f)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn check_finite(name: &str, x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} contains non-finite values")))
    }
}

/// Welch's unequal-variance t test.
pub fn t_test_independent(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(
            "independent t test needs at least 2 values per sample",
        ));
    }
    check_finite("sample", a)?;
    check_finite("sample", b)?;
    let (va, vb) = (variance(a) / a.len() as f64, variance(b) / b.len() as f64);
    if va + vb == 0.0 {
        return Err(Error::invalid("both samples have zero variance"));
    }
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    Ok(TestResult::new(t, df, None, t_two_sided(t, df)))
}

/// Paired t test on `a − b`.
pub fn t_test_paired(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid(
            "paired t test needs two samples of equal length ≥ 2",
        ));
    }
    check_finite("sample", a)?;
    check_finite("sample", b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let df = (d.len() - 1) as f64;
    let m = mean(&d);
    let se = (variance(&d) / d.len() as f64).sqrt();
    if se == 0.0 {
        return Ok(if m == 0.0 {
            TestResult::new(0.0, df, None, 1.0)
        } else {
            TestResult::infinite(m.signum(), df, None)
        });
    }
    let t = m / se;
    Ok(TestResult::new(t, df, None, t_two_sided(t, df)))
}

/// One-way repeated-measures ANOVA on a subjects × conditions matrix (rows are subjects).
pub fn rm_anova(rows: &[Vec<f64>]) -> Result<TestResult> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::invalid(
            "repeated-measures ANOVA needs ≥ 2 subjects and ≥ 2 conditions",
        ));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::invalid("repeated-measures matrix is incomplete"));
    }
    for r in rows {
        check_finite("matrix", r)?;
    }
    let grand = rows.iter().flatten().sum::<f64>() / (n * k) as f64;
    let ss_total: f64 = rows.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_cond: f64 = (0..k)
        .map(|j| {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            n as f64 * (m - grand).powi(2)
        })
        .sum();
    let ss_subj: f64 = rows
        .iter()
        .map(|r| k as f64 * (mean(r) - grand).powi(2))
        .sum();
    let ss_err = (ss_total - ss_cond - ss_subj).max(0.0);
    let (df1, df2) = ((k - 1) as f64, ((k - 1) * (n - 1)) as f64);
    let tiny = 1e-12 * ss_total.max(f64::MIN_POSITIVE);
    if ss_cond <= tiny {
        return Ok(TestResult::new(0.0, df1, Some(df2), 1.0));
    }
    if ss_err <= tiny {
        return Ok(TestResult::infinite(1.0, df1, Some(df2)));
    }
    let f = (ss_cond / df1) / (ss_err / df2);
    Ok(TestResult::new(f, df1, Some(df2), f_upper(f, df1, df2)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationEntry {
    pub r: f64,
    pub p: f64,
    pub r2: f64,
    pub n: usize,
}

/// Pearson correlation with a two-sided p from `t = r·√((n−2)/(1−r²))`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationEntry> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::invalid(
            "correlation needs two samples of equal length ≥ 3",
        ));
    }
    check_finite("sample", x)?;
    check_finite("sample", y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid(
            "correlation is undefined for a constant sample",
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (x.len() - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(CorrelationEntry {
        r,
        p,
        r2: r * r,
        n: x.len(),
    })
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// Shapiro–Wilk W with Royston's p-value approximation, for 3 ≤ n ≤ 5000.
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestResult> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::invalid(format!(
            "Shapiro-Wilk needs 3 to 5000 values, got {n}"
        )));
    }
    check_finite("sample", sample)?;
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 {
        return Err(Error::invalid(
            "Shapiro-Wilk is undefined for a constant sample",
        ));
    }
    let an = n as f64;
    let half = n / 2;
    // a[0..half]: positive coefficients for the upper order statistics.
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let z = std_normal();
        let m: Vec<f64> = (1..=half)
            .map(|i| z.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (start, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            a[1] = a2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            (2, fac)
        } else {
            (
                1,
                ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt(),
            )
        };
        a[0] = a1;
        for i in start..half {
            a[i] = -m[i] / fac;
        }
    }
    // W is the squared correlation between the data and the antisymmetric coefficients.
    let coef = |i: usize| -> f64 {
        let j = n - 1 - i;
        if i < j {
            -a[i]
        } else if i > j {
            a[j]
        } else {
            0.0
        }
    };
    let sa = (0..n).map(coef).sum::<f64>() / an;
    let sx = x.iter().map(|v| v / range).sum::<f64>() / an;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, xi) in x.iter().enumerate() {
        let asa = coef(i) - sa;
        let xsx = xi / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w = 1.0 - (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let df = an;
    if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3);
        return Ok(TestResult::new(w, df, None, p.max(0.0)));
    }
    let mut w1 = (1.0 - w).ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if w1 >= gamma {
            return Ok(TestResult::new(w, df, None, 1e-99));
        }
        w1 = -(gamma - w1).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    let p = std_normal().sf((w1 - m) / s);
    Ok(TestResult::new(w, df, None, p))
}

#[cfg(test)]
mod unit {
    use super::*;

    #[test]
    fn welch_by_hand() {
        let r = t_test_independent(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.statistic + 2.0 / (5.0f64 / 6.0).sqrt()).abs() < 1e-12);
        assert!((r.df1 - 6.0).abs() < 1e-12);
        assert!((r.p - 0.0710).abs() < 5e-4, "{}", r.p);
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 4.0, 2.0, 8.0];
        for r in [
            t_test_independent(&a, &a).unwrap(),
            t_test_paired(&a, &a).unwrap(),
        ] {
            assert_eq!((r.statistic, r.p), (0.0, 1.0));
        }
        assert!(t_test_independent(&[2.0, 2.0], &[3.0, 3.0]).is_err());
    }

    #[test]
    fn constant_shift_is_flagged() {
        let b = [1.0, 5.0, 2.0, 7.0, 3.0];
        let a: Vec<f64> = b.iter().map(|v| v + 1.0).collect();
        let r = t_test_paired(&a, &b).unwrap();
        assert_eq!(r.degenerate, Some(Degenerate::ZeroVariance));
        assert_eq!((r.statistic, r.p), (f64::INFINITY, 0.0));
    }

    #[test]
    fn anova_degenerate_cases() {
        let same = vec![vec![1.0, 1.0], vec![3.0, 3.0], vec![2.0, 2.0]];
        let r = rm_anova(&same).unwrap();
        assert_eq!((r.statistic, r.p), (0.0, 1.0));
        let shifted = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![2.0, 3.0]];
        let r = rm_anova(&shifted).unwrap();
        assert_eq!(r.degenerate, Some(Degenerate::ZeroVariance));
        assert_eq!(r.p, 0.0);
        assert!(rm_anova(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 1.0, 4.0, 3.0, 7.0];
        let r = pearson(&x, &y).unwrap();
        // Sxy = 12, Sxx = 10, Syy = 21.2.
        assert!((r.r - 12.0 / 212f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.r2, r.r * r.r);
        assert_eq!(pearson(&x, &x).unwrap().r, 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &neg).unwrap().r, -1.0);
        assert!(pearson(&x, &[1.0; 5]).is_err());
    }

    #[test]
    fn shapiro_wilk_rejects_heavy_tails() {
        let mut heavy: Vec<f64> = (1..=18).map(|i| (i as f64 - 9.5) * 0.1).collect();
        heavy.extend([25.0, -30.0]);
        assert!(shapiro_wilk(&heavy).unwrap().p < 0.05);
        let z = std_normal();
        let tempered: Vec<f64> = (1..=20)
            .map(|i| z.inverse_cdf((i as f64 - 0.5) / 20.0))
            .collect();
        let r = shapiro_wilk(&tempered).unwrap();
        assert!(r.p > 0.05 && r.statistic > 0.95);
        assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
        assert!(shapiro_wilk(&[2.0; 10]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn pearson_affine_invariance(
            x in proptest::collection::vec(-10.0f64..10.0, 5..20),
            noise in proptest::collection::vec(-10.0f64..10.0, 20),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let y: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
            if let Ok(r) = pearson(&x, &y) {
                let x2: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
                let r2 = pearson(&x2, &y).unwrap();
                proptest::prop_assert!((r.r - r2.r).abs() < 1e-9);
                let neg: Vec<f64> = y.iter().map(|v| -v).collect();
                proptest::prop_assert!((pearson(&x, &neg).unwrap().r + r.r).abs() < 1e-12);
                proptest::prop_assert!((0.0..=1.0).contains(&r.p));
            }
        }

        #[test]
        fn p_falls_with_larger_statistics(t in 0.0f64..10.0, dt in 0.01f64..5.0, df in 1.0f64..50.0) {
            proptest::prop_assert!(t_two_sided(t + dt, df) <= t_two_sided(t, df));
            proptest::prop_assert!(f_upper(t + dt, 2.0, df) <= f_upper(t, 2.0, df));
        }
    }
}
