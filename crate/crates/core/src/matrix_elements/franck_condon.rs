//! One-dimensional harmonic-oscillator displacement matrix elements.
//!
//! ⟨n_out| exp(iκ(a + a†)) |n_in⟩ = e^{−κ²/2} (iκ)^{|Δ|} sqrt(n_<!/n_>!) L_{n_<}^{|Δ|}(κ²)
//!
//! with κ = η for a photon kick along one trap axis.

use num_complex::Complex64;

/// Associated Laguerre polynomial L_n^α(x) by upward recurrence.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Real part of the matrix element with the phase i^{|Δ|} stripped.
///
/// Symmetric in its two level arguments.
pub fn franck_condon_reduced(n_out: u32, n_in: u32, kappa: f64) -> f64 {
    let (lo, hi) = if n_out <= n_in { (n_out, n_in) } else { (n_in, n_out) };
    let delta = hi - lo;
    if kappa == 0.0 {
        return if delta == 0 { 1.0 } else { 0.0 };
    }
    let x = kappa * kappa;
    // ln sqrt(lo!/hi!) = −½ Σ_{k=lo+1}^{hi} ln k
    let ln_ratio: f64 = -0.5 * ((lo + 1)..=hi).map(|k| (k as f64).ln()).sum::<f64>();
    let ln_mag = -0.5 * x + delta as f64 * kappa.ln() + ln_ratio;
    ln_mag.exp() * laguerre(lo, delta as f64, x)
}

/// Full complex matrix element ⟨n_out| e^{iκ(a+a†)} |n_in⟩, κ ≥ 0.
pub fn franck_condon_1d(n_out: u32, n_in: u32, kappa: f64) -> Complex64 {
    let r = franck_condon_reduced(n_out, n_in, kappa);
    match n_out.abs_diff(n_in) % 4 {
        0 => Complex64::new(r, 0.0),
        1 => Complex64::new(0.0, r),
        2 => Complex64::new(-r, 0.0),
        _ => Complex64::new(0.0, -r),
    }
}

/// Precomputed reduced amplitudes for all a, b ≤ `max_n` at fixed κ.
#[derive(Clone, Debug)]
pub struct FcTable {
    kappa: f64,
    side: usize,
    values: Vec<f64>,
}

impl FcTable {
    pub fn new(kappa: f64, max_n: u32) -> Self {
        let side = max_n as usize + 1;
        let mut values = vec![0.0; side * side];
        for a in 0..side {
            for b in a..side {
                let v = franck_condon_reduced(a as u32, b as u32, kappa);
                values[a * side + b] = v;
                values[b * side + a] = v;
            }
        }
        FcTable { kappa, side, values }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    #[inline]
    pub fn reduced(&self, a: u16, b: u16) -> f64 {
        self.values[a as usize * self.side + b as usize]
    }

    #[inline]
    pub fn prob(&self, a: u16, b: u16) -> f64 {
        let v = self.reduced(a, b);
        v * v
    }
}
