//! Independent oracles: adaptive Gauss-Kronrod quadrature and brute-force
//! image sums. Nothing here calls the closed-form kernels.

#![allow(dead_code)]

use std::f64::consts::PI;

use muskat_core::{Grid, GridFunction, InterfaceState, PhysicalParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let s = f(c - h * XK[j]) + f(c + h * XK[j]);
        k += WK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive 15-point Gauss-Kronrod quadrature to absolute tolerance `tol`.
///
/// Intervals narrower than `1e-6 (b - a)` are accepted as they are, which
/// stops the refinement from chasing roundoff near a folded singularity.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let pieces = 16;
    let w = (b - a) / pieces as f64;
    let mut stack: Vec<(f64, f64, f64, (f64, f64))> = (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * w, a + (i + 1) as f64 * w);
            (x0, x1, tol / pieces as f64, gk15(f, x0, x1))
        })
        .collect();
    let mut total = 0.0;
    while let Some((x0, x1, t, (val, err))) = stack.pop() {
        if err <= t || (x1 - x0) < 1e-6 * (b - a) {
            total += val;
            continue;
        }
        let m = 0.5 * (x0 + x1);
        stack.push((x0, m, 0.5 * t, gk15(f, x0, m)));
        stack.push((m, x1, 0.5 * t, gk15(f, m, x1)));
    }
    total
}

/// `sum_j 1/((s + jP)^2 + d^2)` by direct summation over `|j| <= J` plus the
/// integral of the remaining tail.
pub fn brute_poisson(s: f64, d: f64, p: f64) -> f64 {
    let j_max = 4000i64;
    let mut sum = 0.0;
    for j in (1..=j_max).rev() {
        let a = s + j as f64 * p;
        let b = s - j as f64 * p;
        sum += 1.0 / (a * a + d * d) + 1.0 / (b * b + d * d);
    }
    sum += 1.0 / (s * s + d * d);
    let t = (j_max as f64 + 0.5) * p;
    let d = d.abs().max(1e-300);
    let tail = |u: f64| (0.5 * PI - (u / d).atan()) / (p * d);
    sum + tail(t + s) + tail(t - s)
}

/// Symmetrically paired `sum_j (s + jP)/((s + jP)^2 + d^2)`.
pub fn brute_flux(s: f64, d: f64, p: f64) -> f64 {
    let j_max = 4000i64;
    let mut sum = 0.0;
    for j in (1..=j_max).rev() {
        let a = s + j as f64 * p;
        let b = s - j as f64 * p;
        sum += a / (a * a + d * d) + b / (b * b + d * d);
    }
    sum += s / (s * s + d * d);
    let t = (j_max as f64 + 0.5) * p;
    let tail = ((t + s).powi(2) + d * d).ln() - ((t - s).powi(2) + d * d).ln();
    sum - 0.5 * tail / p
}

/// Principal value over the real line of a function that is `P`-periodic
/// up to an algebraically decaying factor: the caller supplies
/// `G(s) = g(s) + g(-s)` evaluated by image sums, integrated over `(0, P/2)`.
pub fn pv_folded(folded: &dyn Fn(f64) -> f64, period: f64, tol: f64) -> f64 {
    adaptive(folded, 0.0, 0.5 * period, tol)
}

pub fn params(t1: f64, t2: f64, c: f64) -> PhysicalParams {
    PhysicalParams::from_thetas(t1, t2, c).unwrap()
}

/// Smooth periodic function with random low-mode content.
pub fn random_smooth(grid: Grid, rng: &mut ChaCha8Rng, amplitude: f64, modes: usize) -> GridFunction {
    let period = grid.period();
    let coeffs: Vec<(f64, f64)> = (1..=modes)
        .map(|k| {
            let decay = (-(k as f64) * 0.5).exp();
            (rng.gen_range(-1.0..1.0) * decay, rng.gen_range(-1.0..1.0) * decay)
        })
        .collect();
    let norm: f64 = coeffs.iter().map(|(a, b)| a.abs() + b.abs()).sum();
    GridFunction::from_fn(grid, |x| {
        let w = 2.0 * PI * x / period;
        coeffs
            .iter()
            .enumerate()
            .map(|(j, (a, b))| {
                let k = (j + 1) as f64;
                a * (k * w).cos() + b * (k * w).sin()
            })
            .sum::<f64>()
            * amplitude
            / norm
    })
}

/// Random admissible state with `|f|, |h| <= amplitude`.
pub fn random_state(grid: Grid, params: PhysicalParams, seed: u64, amplitude: f64) -> InterfaceState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_smooth(grid, &mut rng, amplitude, 6);
    let h = random_smooth(grid, &mut rng, amplitude, 6);
    InterfaceState::new(f, h, params).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_max(a: &GridFunction, b: &GridFunction) -> f64 {
    (a - b).max_abs() / b.max_abs()
}

/// Least-squares slope of `log e` against `log h`.
pub fn order_fit(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
