use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use modstat_core::stats::distributions::{chisq_cdf, chisq_sf, normal_cdf, t_cdf, t_sf};
use modstat_core::stats::{contingency, ols_fit, t_test, wilcoxon_rank_sum, Alternative, HypothesisSpec};

use crate::ensure;
use crate::quadrature::{self, ChiSquare, StudentT};

const DFS: [f64; 5] = [1.0, 2.0, 5.0, 30.0, 100.0];
const GRID: usize = 1000;

fn some(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().copied().map(Some).collect()
}

/// Mann-Whitney count of pairs with the first sample above the second,
/// and its null distribution by listing every split of the pooled values.
fn enumerate_p(pooled: &[f64], n: usize, alternative: Alternative) -> (u64, f64) {
    let total_n = pooled.len();
    let above = |mask: u32| -> u64 {
        let mut u = 0;
        for i in (0..total_n).filter(|i| mask >> i & 1 == 1) {
            for j in (0..total_n).filter(|j| mask >> j & 1 == 0) {
                u += u64::from(pooled[i] > pooled[j]);
            }
        }
        u
    };
    let observed = above((1u32 << n) - 1);
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << total_n) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let u = above(mask);
        total += 1;
        le += u64::from(u <= observed);
        ge += u64::from(u >= observed);
    }
    let (p_le, p_ge) = (le as f64 / total as f64, ge as f64 / total as f64);
    let p = match alternative {
        Alternative::TwoSided => (2.0 * p_le.min(p_ge)).min(1.0),
        Alternative::Greater => p_ge,
        Alternative::Less => p_le,
    };
    (observed, p)
}

pub fn wilcoxon_exactness() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for n in 1..10usize {
        for m in 1..=(10 - n) {
            let mut draws = 0;
            while draws < 50 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
                let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-50.0..50.0)).collect();
                let mu = if draws % 2 == 0 { 0.0 } else { rng.gen_range(-10.0..10.0) };
                let pooled: Vec<f64> = x.iter().copied().chain(y.iter().map(|v| v + mu)).collect();
                let mut sorted = pooled.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                draws += 1;
                for alternative in [Alternative::TwoSided, Alternative::Greater, Alternative::Less] {
                    let spec = HypothesisSpec::new(alternative, 0.95, mu).map_err(|e| e.to_string())?;
                    let r = wilcoxon_rank_sum(&some(&x), &some(&y), spec).map_err(|e| e.to_string())?;
                    let (u, p) = enumerate_p(&pooled, n, alternative);
                    ensure(r.exact, || format!("n={n} m={m}: tie-free sample not treated exactly"))?;
                    ensure(r.w_statistic == u as f64, || format!("n={n} m={m}: W {} vs {u}", r.w_statistic))?;
                    let err = (r.p_value - p).abs();
                    worst = worst.max(err);
                    ensure(err <= 1e-12, || {
                        format!("n={n} m={m} {}: p {} vs enumeration {p}", alternative.name(), r.p_value)
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} p-values match enumeration, max error {worst:.1e}"))
}

fn within(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{what}: {got} vs {want} (tolerance {tol:e})"))
}

pub fn kernel_fixtures() -> Result<String, String> {
    let tt =
        t_test(&some(&[1.0, 2.0, 3.0, 4.0, 5.0]), None, HypothesisSpec::two_sided(0.0)).map_err(|e| e.to_string())?;
    within("t statistic", tt.statistic, 4.242640687, 1e-9)?;
    within("t statistic (3 sqrt 2)", tt.statistic, 3.0 * 2f64.sqrt(), 1e-9)?;
    within("t df", tt.df, 4.0, 0.0)?;
    let t4 = StudentT::new(4.0);
    within("t p-value", tt.p_value, 2.0 * t4.sf(tt.statistic), 1e-8)?;
    let se = (2.5f64 / 5.0).sqrt();
    within("t CI upper coverage", t4.cdf((tt.ci_high - 3.0) / se), 0.975, 1e-8)?;
    within("t CI lower coverage", t4.cdf((tt.ci_low - 3.0) / se), 0.025, 1e-8)?;

    let fit = ols_fit(&some(&[1.0, 2.0, 3.0, 4.0]), &some(&[2.0, 1.0, 4.0, 3.0])).map_err(|e| e.to_string())?;
    within("OLS slope", fit.slope, 0.6, 1e-9)?;
    within("OLS intercept", fit.intercept, 1.0, 1e-9)?;
    within("OLS r squared", fit.r_squared, 0.36, 1e-9)?;
    within("OLS slope t", fit.t_slope, 0.6 / 0.32f64.sqrt(), 1e-9)?;
    within("OLS slope p-value", fit.p_slope, 2.0 * StudentT::new(2.0).sf(fit.t_slope), 1e-8)?;

    let mut a = Vec::new();
    let mut b = Vec::new();
    for (row, col, count) in [("r1", "c1", 10), ("r1", "c2", 20), ("r2", "c1", 20), ("r2", "c2", 10)] {
        for _ in 0..count {
            a.push(Some(row));
            b.push(Some(col));
        }
    }
    let ct = contingency(&a, &b).map_err(|e| e.to_string())?;
    within("chi-square", ct.chi_square, 20.0 / 3.0, 1e-9)?;
    within("chi-square df", ct.df, 1.0, 0.0)?;
    within("chi-square p-value", ct.p_value, ChiSquare::new(1.0).sf(20.0 / 3.0), 1e-8)?;
    Ok("t-test, OLS and chi-square fixtures and p-values agree".into())
}

pub fn distribution_functions() -> Result<String, String> {
    quadrature::self_check()?;
    let mut worst = 0.0f64;
    let mut points = 0;
    let mut check = |what: &str, at: f64, got: f64, want: f64| -> Result<(), String> {
        let err = (got - want).abs();
        worst = worst.max(err);
        points += 1;
        ensure(err <= 1e-10, || format!("{what} at {at}: {got} vs oracle {want}"))
    };
    let z_grid: Vec<f64> = (0..GRID).map(|i| -8.0 + 16.0 * i as f64 / (GRID - 1) as f64).collect();
    for &z in &z_grid {
        check("normal_cdf", z, normal_cdf(z), quadrature::normal_cdf(z))?;
    }
    for df in DFS {
        let t = StudentT::new(df);
        for &z in &z_grid {
            let cdf = t_cdf(z, df).map_err(|e| e.to_string())?;
            let sf = t_sf(z, df).map_err(|e| e.to_string())?;
            check(&format!("t_cdf df={df}"), z, cdf, t.cdf(z))?;
            check(&format!("t_sf df={df}"), z, sf, t.sf(z))?;
        }
        // eight standard deviations either side of the mean, clipped at 0
        let chi = ChiSquare::new(df);
        let spread = 8.0 * (2.0 * df).sqrt();
        let (lo, hi) = ((df - spread).max(0.0), df + spread);
        for i in 0..GRID {
            let x = lo + (hi - lo) * i as f64 / (GRID - 1) as f64;
            let cdf = chisq_cdf(x, df).map_err(|e| e.to_string())?;
            let sf = chisq_sf(x, df).map_err(|e| e.to_string())?;
            check(&format!("chisq_cdf df={df}"), x, cdf, chi.cdf(x))?;
            check(&format!("chisq_sf df={df}"), x, sf, chi.sf(x))?;
        }
    }
    Ok(format!("{points} evaluations, max abs error {worst:.1e}"))
}
