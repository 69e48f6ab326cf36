//! Adaptive Gauss-Kronrod (7/15) quadrature and the distribution functions
//! obtained by integrating their densities. Nothing here calls into the
//! library's special functions: normalising constants are integrated too.

#![allow(clippy::excessive_precision)] // Kronrod nodes and weights as tabulated

use std::f64::consts::{FRAC_PI_2, PI};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let pair = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    (k * h, (k - g).abs() * h)
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = kronrod(f, a, b);
    // |K15 - G7| overstates the K15 error by orders of magnitude; once it
    // is at rounding level further splitting only adds rounding noise.
    if err <= tol || err <= 50.0 * f64::EPSILON * k.abs() || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Integral of `f` over `[a, b]` to roughly `tol` absolute error.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(&f, a, b, tol, 40)
}

const TOL: f64 = 1e-14;

pub fn normal_cdf(z: f64) -> f64 {
    let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let half = integrate(density, 0.0, z.abs(), TOL);
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Student-t with the substitution `t = tan(theta)`, which maps the real
/// line onto a bounded interval with a smooth, bounded integrand.
pub struct StudentT {
    df: f64,
    half_mass: f64,
}

impl StudentT {
    pub fn new(df: f64) -> Self {
        let mut t = StudentT { df, half_mass: 0.0 };
        t.half_mass = integrate(|th| t.kernel(th), 0.0, FRAC_PI_2, TOL);
        t
    }

    fn kernel(&self, theta: f64) -> f64 {
        let s = theta.tan().powi(2);
        ((1.0 + s).ln() - 0.5 * (self.df + 1.0) * (s / self.df).ln_1p()).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let part = integrate(|th| self.kernel(th), 0.0, t.abs().atan(), TOL) / self.half_mass;
        if t >= 0.0 {
            0.5 + 0.5 * part
        } else {
            0.5 - 0.5 * part
        }
    }

    pub fn sf(&self, t: f64) -> f64 {
        let part = integrate(|th| self.kernel(th), t.abs().atan(), FRAC_PI_2, TOL) / self.half_mass;
        if t >= 0.0 {
            0.5 * part
        } else {
            1.0 - 0.5 * part
        }
    }
}

/// Chi-square with `x = u^2`, removing the singularity at zero for one
/// degree of freedom. The kernel is scaled by its peak value.
pub struct ChiSquare {
    df: f64,
    log_peak: f64,
    upper: f64,
    mass: f64,
}

impl ChiSquare {
    pub fn new(df: f64) -> Self {
        let log_peak = if df > 1.0 { 0.5 * (df - 1.0) * ((df - 1.0).ln() - 1.0) } else { 0.0 };
        let upper = df.sqrt() + 40.0;
        let mut c = ChiSquare { df, log_peak, upper, mass: 0.0 };
        c.mass = c.piece(0.0, upper);
        c
    }

    fn kernel(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return if self.df == 1.0 { (-self.log_peak).exp() } else { 0.0 };
        }
        ((self.df - 1.0) * u.ln() - 0.5 * u * u - self.log_peak).exp()
    }

    fn piece(&self, a: f64, b: f64) -> f64 {
        // split at the mode so each half is unimodal
        let mode = (self.df - 1.0).max(0.0).sqrt();
        if a < mode && mode < b {
            integrate(|u| self.kernel(u), a, mode, TOL) + integrate(|u| self.kernel(u), mode, b, TOL)
        } else {
            integrate(|u| self.kernel(u), a, b, TOL)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.piece(0.0, x.sqrt()) / self.mass
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.piece(x.sqrt(), self.upper) / self.mass
    }
}

/// Checks the oracles themselves against closed forms.
pub fn self_check() -> Result<(), String> {
    let cases = [
        ("integral of x^2 on [0, 3]", integrate(|x| x * x, 0.0, 3.0, 1e-14), 9.0),
        ("normal 97.5% point", normal_cdf(1.959_963_984_540_054), 0.975),
        ("Cauchy F(1)", StudentT::new(1.0).cdf(1.0), 0.75),
        ("t(2) F(3)", StudentT::new(2.0).cdf(3.0), 0.5 + 3.0 / (2.0 * 11f64.sqrt())),
        ("t(2) upper tail at 3", StudentT::new(2.0).sf(3.0), 0.5 - 3.0 / (2.0 * 11f64.sqrt())),
        ("chi-square(2) F(3)", ChiSquare::new(2.0).cdf(3.0), 1.0 - (-1.5f64).exp()),
        ("chi-square(1) F(z^2) = 2 Phi(z) - 1", ChiSquare::new(1.0).cdf(4.0), 2.0 * normal_cdf(2.0) - 1.0),
    ];
    for (what, got, want) in cases {
        if (got - want).abs() > 1e-13 {
            return Err(format!("oracle self-check failed: {what}: {got} vs {want}"));
        }
    }
    Ok(())
}
