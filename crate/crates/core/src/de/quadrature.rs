//! Adaptive Gauss-Kronrod (7/15) quadrature and the J and phi functions.

/// Kronrod abscissae on `[0, 1]`, descending; odd indices are Gauss nodes.
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

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Initial equal-width pieces, so that narrow peaks are seen by some rule.
const INITIAL_PIECES: usize = 32;

/// Integral of `f` over `[a, b]` to absolute error `tol`, bisecting the
/// worst interval until the summed error estimate falls below `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let w = (b - a) / INITIAL_PIECES as f64;
    let mut parts: Vec<(f64, f64, f64, f64)> = (0..INITIAL_PIECES)
        .map(|k| {
            let lo = a + k as f64 * w;
            let hi = if k + 1 == INITIAL_PIECES { b } else { lo + w };
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    let mut total_err: f64 = parts.iter().map(|p| p.3).sum();
    let mut guard = 0;
    while total_err > tol && guard < 2000 {
        guard += 1;
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, e) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total_err += e1 + e2 - e;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard-normal expectations are integrated over `[-T, T]`.
const TAIL: f64 = 40.0;
const TOL: f64 = 1e-14;

/// `J(sigma) = 1 - E[log2(1 + e^-L)]`, `L ~ N(sigma^2 / 2, sigma^2)`.
pub fn j_exact(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let m = 0.5 * sigma * sigma;
    let loss = integrate(
        |t| std_normal_pdf(t) * crate::decoder::kernels::softplus(-(m + sigma * t)),
        -TAIL,
        TAIL,
        TOL,
    );
    (1.0 - loss / std::f64::consts::LN_2).clamp(0.0, 1.0)
}

/// `phi(sigma) = 1 - E[tanh(L / 2)]`, `L ~ N(sigma^2 / 2, sigma^2)`.
pub fn phi_exact(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 1.0;
    }
    let m = 0.5 * sigma * sigma;
    // 1 - tanh(x) = 2 / (1 + e^(2x)) keeps precision for large x
    let v = integrate(
        |t| {
            let x = 0.5 * (m + sigma * t);
            std_normal_pdf(t) * 2.0 / (1.0 + (2.0 * x).exp())
        },
        -TAIL,
        TAIL,
        TOL,
    );
    v.clamp(0.0, 1.0)
}
