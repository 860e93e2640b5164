//! Standard normal tail probabilities in log space.

use libm::erfc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// 8-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `Q(x) = ½ erfc(x/√2)`.
pub fn q(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn pdf(x: f64) -> f64 {
    ln_pdf(x).exp()
}

/// `ln Q(x)`, accurate far into the upper tail where `Q` underflows.
pub fn ln_q(x: f64) -> f64 {
    if x < 8.0 {
        return q(x).ln();
    }
    // Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + ...))))
    let mut tail = x;
    for n in (1..=40).rev() {
        tail = x + n as f64 / tail;
    }
    ln_pdf(x) - tail.ln()
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(Φ(b) − Φ(a))` for `a ≤ b`, i.e. the log of the standard normal mass
/// on `[a, b]`.
pub fn ln_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b, "ln_mass({a}, {b})");
    let width = b - a;
    if width <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if width < 0.5 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * width;
        let mut acc = f64::NEG_INFINITY;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            acc = ln_add_exp(acc, w.ln() + ln_pdf(mid + half * x));
            acc = ln_add_exp(acc, w.ln() + ln_pdf(mid - half * x));
        }
        return half.ln() + acc;
    }
    if a >= 0.0 {
        let (la, lb) = (ln_q(a), ln_q(b));
        la + (-(lb - la).exp_m1()).ln()
    } else if b <= 0.0 {
        let (la, lb) = (ln_q(-b), ln_q(-a));
        la + (-(lb - la).exp_m1()).ln()
    } else {
        (-(q(-a) + q(b))).ln_1p()
    }
}

/// Mass on the narrow interval `[m − w, m + w]` written as
/// `2w·φ(m)·J(m, w)`, where `J → 1` as `w → 0`.
///
/// Returns `(ln mass, ∂ln J/∂w, ∂ln mass/∂m)`. The first derivative is the
/// excess of `∂ln mass/∂w` over `1/w`, which cancels catastrophically when
/// formed from the endpoint densities. `None` outside the region where the
/// quadrature is accurate.
pub(crate) fn narrow_mass(m: f64, w: f64) -> Option<(f64, f64, f64)> {
    if !(w > 0.0 && w < 0.5 && (m * w).abs() <= 1.0) {
        return None;
    }
    // J = ∫₀¹ e^{−w²s²/2} cosh(mws) ds and its partials, with s from
    // Gauss-Legendre mapped onto [0, 1]
    let (mut j, mut j_w, mut j_m) = (0.0, 0.0, 0.0);
    for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
        for s in [0.5 * (1.0 + x), 0.5 * (1.0 - x)] {
            let damp = (-0.5 * w * w * s * s).exp();
            let (sh, ch) = ((m * w * s).sinh(), (m * w * s).cosh());
            j += wt * damp * ch;
            j_w += wt * damp * s * (m * sh - w * s * ch);
            j_m += wt * damp * w * s * sh;
        }
    }
    // the ½ from the change of variable cancels in the ratios
    let j = 0.5 * j;
    let (j_w, j_m) = (0.5 * j_w, 0.5 * j_m);
    let ln_mass = (2.0 * w).ln() + ln_pdf(m) + j.ln();
    Some((ln_mass, j_w / j, -m + j_m / j))
}
