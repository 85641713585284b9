//! Gamma function and the modified Bessel function of the second kind `K_ν`.
//!
//! `K_ν` is evaluated by Temme's uniform series for small arguments (`x ≤ 2`)
//! and a Steed continued fraction for large arguments, both at a reduced order
//! `μ ∈ [−1/2, 1/2)`, followed by upward recurrence in the order. The large-x
//! branch works on `e^x K_ν(x)` so that `log K_ν` stays finite far past the
//! underflow point of `K_ν` itself (x up to ~700).
//!
//! Accuracy: ~1e-13 relative for `ν ∈ (0, 5]`, `x ∈ [1e-6, 50]`, validated
//! against half-integer closed forms and a quadrature oracle in the tests.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// One evaluation of `K_ν(x)` together with its logarithm.
#[derive(Debug, Clone, Copy)]
pub struct BesselEval {
    pub nu: f64,
    pub x: f64,
    pub value: f64,
    pub log_value: f64,
}

// Lanczos approximation, g = 607/128, 15 terms (Godfrey's coefficients).
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    3.3994649984811888699e-5,
    4.6523628927048575665e-5,
    -9.8374475304879564677e-5,
    1.5808870322491248884e-4,
    -2.1026444172410488319e-4,
    2.1743961811521264320e-4,
    -1.6431810653676389022e-4,
    8.4418223983852743293e-5,
    -2.6190838401581408670e-5,
    3.6899182659531622704e-6,
];

const SQRT_2PI: f64 = 2.5066282746310005024;
const HALF_LN_2PI: f64 = 0.91893853320467274178;

/// Γ(z) beyond this argument overflows f64.
const GAMMA_OVERFLOW_Z: f64 = 171.624;

fn lanczos_sum(z: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z - 1.0 + k as f64);
    }
    a
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

// Γ(z) for z ≥ 0.5 with a compensated exponent, so the (z−1/2)·ln t product
// does not eat the accuracy budget at large z.
fn lanczos_gamma(z: f64) -> f64 {
    let a = lanczos_sum(z);
    let t = z + LANCZOS_G - 0.5;
    let w = z - 0.5;
    let lt = t.ln();
    let p = w * lt;
    let p_err = w.mul_add(lt, -p);
    let (e, e_err) = two_sum(p, -t);
    SQRT_2PI * a * e.exp() * (1.0 + (p_err + e_err))
}

/// Gamma function for positive real argument.
pub fn gamma_fn(z: f64) -> Result<f64> {
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::domain(format!("gamma_fn requires z > 0, got {z}")));
    }
    if z > GAMMA_OVERFLOW_Z {
        return Err(Error::Overflow(format!("gamma_fn({z})")));
    }
    if z < 0.5 {
        // Reflection keeps the Lanczos argument in its accurate range.
        Ok(PI / ((PI * z).sin() * lanczos_gamma(1.0 - z)))
    } else {
        Ok(lanczos_gamma(z))
    }
}

/// ln Γ(z) for positive real argument.
pub fn ln_gamma(z: f64) -> Result<f64> {
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::domain(format!("ln_gamma requires z > 0, got {z}")));
    }
    if z < 0.5 {
        return Ok(PI.ln() - (PI * z).sin().ln() - ln_gamma(1.0 - z)?);
    }
    let a = lanczos_sum(z);
    let t = z + LANCZOS_G - 0.5;
    Ok(HALF_LN_2PI + (z - 0.5) * t.ln() - t + a.ln())
}

// Taylor coefficients of 1/Γ(z) = Σ c_k z^k (Abramowitz & Stegun 6.1.34).
// With Γ(1+μ) = μΓ(μ) this gives 1/Γ(1+μ) = Σ c_{k+1} μ^k.
const INV_GAMMA_TAYLOR: [f64; 26] = [
    1.00000000000000000000,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.04200263503409523553,
    0.16653861138229148950,
    -0.04219773455554433675,
    -0.00962197152787697356,
    0.00721894324666309954,
    -0.00116516759185906511,
    -0.00021524167411495097,
    0.00012805028238811619,
    -0.00002013485478078824,
    -0.00000125049348214267,
    0.00000113302723198170,
    -0.00000020563384169776,
    0.00000000611609510448,
    0.00000000500200764447,
    -0.00000000118127457049,
    0.00000000010434267117,
    0.00000000000778226344,
    -0.00000000000369680562,
    0.00000000000051003703,
    -0.00000000000002058326,
    -0.00000000000000534812,
    0.00000000000000122678,
    -0.00000000000000011813,
];

// Temme's coefficients for |μ| ≤ 1/2:
//   Γ1 = [1/Γ(1−μ) − 1/Γ(1+μ)]/(2μ),  Γ2 = [1/Γ(1−μ) + 1/Γ(1+μ)]/2,
// computed from even polynomials in μ² so the μ → 0 limit is exact.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mu2 = mu * mu;
    // Γ1 = −Σ_{j odd} c_{j+1} μ^{j−1},  Γ2 = Σ_{j even} c_{j+1} μ^j
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut pw = 1.0; // μ^j for even j
    for j in (0..INV_GAMMA_TAYLOR.len()).step_by(2) {
        gam2 += INV_GAMMA_TAYLOR[j] * pw;
        if j + 1 < INV_GAMMA_TAYLOR.len() {
            gam1 -= INV_GAMMA_TAYLOR[j + 1] * pw;
        }
        pw *= mu2;
    }
    let gampl = gam2 - mu * gam1; // 1/Γ(1+μ)
    let gammi = gam2 + mu * gam1; // 1/Γ(1−μ)
    (gam1, gam2, gampl, gammi)
}

const SERIES_EPS: f64 = 1e-16;
const MAX_ITER: usize = 20_000;

// K_μ(x) and K_{μ+1}(x) for |μ| ≤ 1/2 and x ≤ 2, Temme's series.
fn temme_k_pair(mu: f64, x: f64) -> Result<(f64, f64)> {
    let x2 = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < 1e-30 {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < 1e-30 { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let d2 = x2 * x2;
    let mut sum1 = p;
    for i in 1..=MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c *= d2 / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * SERIES_EPS {
            return Ok((sum, sum1 * 2.0 / x));
        }
    }
    Err(Error::numeric("bessel_k: Temme series did not converge"))
}

// e^x K_μ(x) and e^x K_{μ+1}(x) for |μ| ≤ 1/2 and x > 2, Steed's CF2.
fn steed_k_pair_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut ok = false;
    for i in 2..=MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < SERIES_EPS {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::numeric("bessel_k: continued fraction did not converge"));
    }
    let h = a1 * h;
    let kmu = (PI / (2.0 * x)).sqrt() / s;
    let kmu1 = kmu * (mu + x + 0.5 - h) / x;
    Ok((kmu, kmu1))
}

/// Modified Bessel function of the second kind, `K_ν(x)` for `ν > 0`, `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> Result<BesselEval> {
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!("bessel_k requires nu > 0, got {nu}")));
    }
    bessel_k_nonneg(nu, x)
}

// K_ν with ν = 0 admitted; the kernel derivative path needs K_0 even though
// the public surface keeps ν strictly positive.
pub(crate) fn bessel_k_nonneg(nu: f64, x: f64) -> Result<BesselEval> {
    if !nu.is_finite() || nu < 0.0 {
        return Err(Error::domain(format!("bessel_k requires nu >= 0, got {nu}")));
    }
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(format!("bessel_k requires x > 0, got {x}")));
    }
    let nl = (nu + 0.5).floor() as usize;
    let mu = nu - nl as f64; // in [-1/2, 1/2)
    let (mut kmu, mut kmu1, scaled) = if x <= 2.0 {
        let (a, b) = temme_k_pair(mu, x)?;
        (a, b, false)
    } else {
        let (a, b) = steed_k_pair_scaled(mu, x)?;
        (a, b, true)
    };
    // Upward recurrence K_{m+1} = K_{m−1} + (2m/x) K_m is stable for K.
    for i in 1..=nl {
        let next = (mu + i as f64) * (2.0 / x) * kmu1 + kmu;
        kmu = kmu1;
        kmu1 = next;
    }
    let knu = kmu;
    let (value, log_value) = if scaled {
        (knu * (-x).exp(), knu.ln() - x)
    } else {
        (knu, knu.ln())
    };
    Ok(BesselEval {
        nu,
        x,
        value,
        log_value,
    })
}
