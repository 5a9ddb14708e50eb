//! Gaussian fields on the torus 𝕋^d = [0,1)^d built from Fourier modes.
//!
//! Modes are truncated to the ℓ¹ ball |k₁|+…+|k_d| ≤ N, not the Euclidean ball.
//! Sampling uses the real basis: 1 for k = 0, and for each representative
//! k > 0 (first nonzero coordinate positive) the pair √2·cos(2πk·x) stored at k
//! and √2·sin(2πk·x) stored at −k.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, conv, kahan, l1_ball, LatFn, Mode};
use crate::polyalg::hermite;
use crate::rational::to_f64;

/// λ_k = 1 + (2π)^d ‖k‖²
pub fn lambda(d: usize, k: &Mode) -> f64 {
    1.0 + (2.0 * PI).powi(d as i32) * lattice::norm2(k) as f64
}

fn check_d(d: usize) -> Result<()> {
    if !(1..=3).contains(&d) {
        return Err(Error::Invalid(format!(
            "dimension must be 1, 2 or 3, got {d}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeLattice {
    pub d: usize,
    pub n: usize,
    pub modes: Vec<Mode>,
    pub lambdas: Vec<f64>,
}

impl ModeLattice {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        check_d(d)?;
        let modes = l1_ball(d, n);
        let lambdas = modes.iter().map(|k| lambda(d, k)).collect();
        Ok(ModeLattice {
            d,
            n,
            modes,
            lambdas,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn position(&self, k: &Mode) -> Option<usize> {
        self.modes.binary_search(k).ok()
    }

    /// Weight array on the momentum box, k ↦ λ_k^{−s}.
    pub fn weight_fn(&self, s: f64) -> LatFn {
        LatFn::on_ball(self.d, self.n, |k| lambda(self.d, k).powf(-s))
    }
}

pub fn is_representative(k: &Mode) -> bool {
    k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Real basis function attached to mode k.
pub fn basis_fn(k: &Mode, x: &[f64]) -> f64 {
    let zero = k.iter().all(|&c| c == 0);
    if zero {
        return 1.0;
    }
    let th = 2.0 * PI * k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum::<f64>();
    if is_representative(k) {
        2f64.sqrt() * th.cos()
    } else {
        // −k carries the sine of the representative
        -(2f64.sqrt()) * th.sin()
    }
}

/// C_N = Σ_{k∈𝒦_N} 1/λ_k
pub fn c_variance(d: usize, n: usize) -> Result<f64> {
    let lat = ModeLattice::new(d, n)?;
    Ok(kahan(lat.lambdas.iter().map(|l| 1.0 / l)))
}

fn point(x: &[f64], d: usize) -> Result<Mode> {
    if x.len() != d {
        return Err(Error::Invalid(format!(
            "point has {} coordinates, expected {d}",
            x.len()
        )));
    }
    Ok([0; 3])
}

/// G_N(x) = Σ_{k∈𝒦_N} cos(2πk·x)/λ_k
pub fn green_truncated(x: &[f64], d: usize, n: usize) -> Result<f64> {
    point(x, d)?;
    let lat = ModeLattice::new(d, n)?;
    Ok(kahan(lat.modes.iter().zip(&lat.lambdas).map(|(k, l)| {
        let th = 2.0 * PI * k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum::<f64>();
        th.cos() / l
    })))
}

/// Limit N → ∞ of G_N in d = 1: (a/2)·cosh(a(x−½))/sinh(a/2) with a² = 2π, x ∈ [0, 1].
pub fn green_d1_limit(x: f64) -> f64 {
    let a = (2.0 * PI).sqrt();
    let x = x.rem_euclid(1.0);
    0.5 * a * (a * (x - 0.5)).cosh() / (0.5 * a).sinh()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "s", rename_all = "lowercase")]
pub enum SpectralProfile {
    /// λ⁰
    White,
    /// λ^{−1/2}
    Gff,
    /// λ^{−s}
    Fractional(f64),
}

impl SpectralProfile {
    pub fn exponent(&self) -> f64 {
        match self {
            SpectralProfile::White => 0.0,
            SpectralProfile::Gff => 0.5,
            SpectralProfile::Fractional(s) => *s,
        }
    }

    pub fn weight(&self, lambda: f64) -> f64 {
        match self {
            SpectralProfile::White => 1.0,
            _ => lambda.powf(-self.exponent()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpectralProfile::White => "white".into(),
            SpectralProfile::Gff => "gff".into(),
            SpectralProfile::Fractional(s) => format!("fractional({s})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.exponent() < 0.0 || !self.exponent().is_finite() {
            return Err(Error::Invalid(
                "profile exponent must be a nonnegative number".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Synthesis {
    Direct,
    Fft,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub lattice: ModeLattice,
    pub profile: SpectralProfile,
    pub seed: Option<u64>,
    /// Weighted amplitudes, one per mode in `lattice.modes` order.
    pub coeffs: Vec<f64>,
    grid: Option<(usize, Vec<f64>)>,
}

impl FieldSample {
    pub fn from_coeffs(
        lattice: ModeLattice,
        profile: SpectralProfile,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::Invalid(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                lattice.len()
            )));
        }
        Ok(FieldSample {
            lattice,
            profile,
            seed: None,
            coeffs,
            grid: None,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        kahan(
            self.lattice
                .modes
                .iter()
                .zip(&self.coeffs)
                .map(|(k, c)| c * basis_fn(k, x)),
        )
    }

    /// Values on the grid {j/m}^d, index j₀ + m·j₁ + m²·j₂.
    pub fn grid_values(&self, m: usize, how: Synthesis) -> Vec<f64> {
        if let Some((gm, v)) = &self.grid {
            if *gm == m {
                return v.clone();
            }
        }
        match how {
            Synthesis::Direct => {
                let d = self.lattice.d;
                (0..m.pow(d as u32))
                    .map(|mut idx| {
                        let mut x = vec![0.0; d];
                        for xi in x.iter_mut() {
                            *xi = (idx % m) as f64 / m as f64;
                            idx /= m;
                        }
                        self.eval(&x)
                    })
                    .collect()
            }
            Synthesis::Fft => self.grid_fft(m),
        }
    }

    /// Synthesis through φ(x) = Σ ĉ_k e^{2πik·x}, ĉ_{±k} = (a_k ∓ i·a_{−k})/√2.
    fn grid_fft(&self, m: usize) -> Vec<f64> {
        let d = self.lattice.d;
        let total = m.pow(d as u32);
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        let slot = |k: &Mode| -> usize {
            let mut idx = 0;
            let mut stride = 1;
            for &c in k.iter().take(d) {
                idx += c.rem_euclid(m as i64) as usize * stride;
                stride *= m;
            }
            idx
        };
        let r2 = 1.0 / 2f64.sqrt();
        for (i, k) in self.lattice.modes.iter().enumerate() {
            let a = self.coeffs[i];
            if k.iter().all(|&c| c == 0) {
                buf[slot(k)] += Complex64::new(a, 0.0);
            } else if is_representative(k) {
                let nk = lattice::neg(k);
                let b = self.coeffs[self.lattice.position(&nk).unwrap()];
                buf[slot(k)] += Complex64::new(a * r2, -b * r2);
                buf[slot(&nk)] += Complex64::new(a * r2, b * r2);
            }
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_inverse(m);
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        for axis in 0..d {
            let stride = m.pow(axis as u32);
            for base in 0..total {
                if (base / stride) % m != 0 {
                    continue;
                }
                for (j, l) in line.iter_mut().enumerate() {
                    *l = buf[base + j * stride];
                }
                fft.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    buf[base + j * stride] = *l;
                }
            }
        }
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn cache_grid(&mut self, m: usize, how: Synthesis) {
        let v = self.grid_values(m, how);
        self.grid = Some((m, v));
    }

    pub fn cached_grid(&self) -> Option<(usize, &[f64])> {
        self.grid.as_ref().map(|(m, v)| (*m, v.as_slice()))
    }
}

/// Draw the weighted amplitudes from an explicit RNG.
pub fn sample_with_rng<R: rand::Rng + ?Sized>(
    profile: SpectralProfile,
    lattice: &ModeLattice,
    rng: &mut R,
) -> FieldSample {
    let coeffs = lattice
        .lambdas
        .iter()
        .map(|&l| {
            let z: f64 = StandardNormal.sample(rng);
            z * profile.weight(l)
        })
        .collect();
    FieldSample {
        lattice: lattice.clone(),
        profile,
        seed: None,
        coeffs,
        grid: None,
    }
}

pub fn sample_field(
    profile: SpectralProfile,
    lattice: &ModeLattice,
    seed: u64,
) -> Result<FieldSample> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = sample_with_rng(profile, lattice, &mut rng);
    s.seed = Some(seed);
    Ok(s)
}

/// ⟨ξ, φ⟩ = Σ_k a_k φ̂(k), with φ̂ given in the real basis.
pub fn pair_with_testfunction(sample: &FieldSample, phihat: &[(Mode, f64)]) -> Result<f64> {
    let mut acc = lattice::KahanSum::new();
    for (k, v) in phihat {
        let i = sample.lattice.position(k).ok_or_else(|| {
            Error::Invalid(format!("test function mode {k:?} lies outside the lattice"))
        })?;
        acc.add(sample.coeffs[i] * v);
    }
    Ok(acc.value())
}

/// Real-basis coefficients of a real function on 𝕋^d from its values on an m^d grid.
pub fn project_to_modes(
    lat: &ModeLattice,
    m: usize,
    f: impl Fn(&[f64]) -> f64,
) -> Vec<(Mode, f64)> {
    let d = lat.d;
    let total = m.pow(d as u32);
    let pts: Vec<(Vec<f64>, f64)> = (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for xi in x.iter_mut() {
                *xi = (idx % m) as f64 / m as f64;
                idx /= m;
            }
            let v = f(&x);
            (x, v)
        })
        .collect();
    lat.modes
        .iter()
        .map(|k| {
            (
                *k,
                kahan(pts.iter().map(|(x, v)| v * basis_fn(k, x))) / total as f64,
            )
        })
        .collect()
}

/// E‖·‖²_{H^s}: Σ λ^s (white) or Σ λ^{s−1} (gff) over 𝒦_N.
pub fn sobolev_sum(s: f64, d: usize, n: usize, profile: SpectralProfile) -> Result<f64> {
    let shift = match profile {
        SpectralProfile::White => 0.0,
        SpectralProfile::Gff => -1.0,
        SpectralProfile::Fractional(_) => {
            return Err(Error::Invalid(
                "sobolev_sum supports the white and gff profiles".into(),
            ))
        }
    };
    let lat = ModeLattice::new(d, n)?;
    Ok(kahan(lat.lambdas.iter().map(|l| l.powf(s + shift))))
}

/// :φ_Nⁿ: = H_n(φ_N; C_N) on the m^d grid.
pub fn wick_power_field(sample: &FieldSample, n: usize, m: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Precondition(
            "Wick power order must be at least 1".into(),
        ));
    }
    let c = kahan(sample.lattice.lambdas.iter().map(|l| 1.0 / l));
    let h = hermite(n);
    let coef: Vec<f64> = h.coeffs().iter().map(to_f64).collect();
    let grid = sample.grid_values(m, Synthesis::Fft);
    Ok(grid
        .iter()
        .map(|&x| hermite_scaled_f64(&coef, x, c))
        .collect())
}

/// H_n(x; σ²) = σ^n H_n(x/σ), evaluated from the monic coefficients of H_n.
pub fn hermite_scaled_f64(coef: &[f64], x: f64, sigma2: f64) -> f64 {
    let n = coef.len() - 1;
    // Σ_j c_j x^j σ^{n−j}; only j ≡ n mod 2 survive, so σ^{n−j} = (σ²)^{(n−j)/2}
    let mut acc = 0.0;
    for (j, &c) in coef.iter().enumerate() {
        if c != 0.0 {
            acc += c * x.powi(j as i32) * sigma2.powi(((n - j) / 2) as i32);
        }
    }
    acc
}

/// Entry 0 of the n-fold convolution of w, w(k) = λ_k^{−s} on 𝒦_N.
pub fn lattice_power_at_zero(w: &LatFn, n: usize, radius: usize) -> f64 {
    if n == 1 {
        return w.get(&[0; 3]);
    }
    let a = n / 2;
    let b = n - a;
    let left = conv_power(w, a, radius, radius * b);
    let right = conv_power(w, b, radius, radius * a);
    kahan(
        left.support()
            .iter()
            .map(|(k, v)| v * right.get(&lattice::neg(k))),
    )
}

/// w^{*n} truncated to box radius `keep`.
pub fn conv_power(w: &LatFn, n: usize, radius: usize, keep: usize) -> LatFn {
    let mut acc = w.resize(radius.min(keep));
    for j in 2..=n {
        let r = (j * radius).min(keep);
        acc = conv(&acc, w, r);
    }
    acc
}

/// n!·Σ_{k₁+…+k_n=0} Π 1/λ_{k_i}
pub fn wick_integral_variance(d: usize, n: usize, order: usize) -> Result<f64> {
    if order < 2 {
        return Err(Error::Precondition(
            "wick_integral_variance needs n ≥ 2".into(),
        ));
    }
    let lat = ModeLattice::new(d, n)?;
    let w = lat.weight_fn(1.0);
    let fact: f64 = (1..=order).map(|i| i as f64).product();
    Ok(fact * lattice_power_at_zero(&w, order, n))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YoungRow {
    pub k: Vec<i64>,
    pub norm: f64,
    pub lhs: f64,
    /// lhs·‖k‖^{n+m−d}
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YoungReport {
    pub d: usize,
    pub n: f64,
    pub m: f64,
    pub kmax: usize,
    pub cutoff: usize,
    pub rows: Vec<YoungRow>,
    pub sup_constant: f64,
    pub note: String,
}

fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Σ_{k₁+k₂=k, k_i≠0} ‖k₁‖^{−n}‖k₂‖^{−m} for 0 < ‖k‖_∞ ≤ kmax, with the sum cut at
/// Euclidean radius R = 8·kmax plus the continuum tail S_{d−1}R^{d−n−m}/(n+m−d).
pub fn young_sum_check(d: usize, n: f64, m: f64, kmax: usize) -> Result<YoungReport> {
    check_d(d)?;
    let df = d as f64;
    if !(n > 0.0 && m > 0.0 && n < df && m < df && n + m > df) {
        return Err(Error::Precondition(format!(
            "need d > n, m > 0 and n + m > d, got d={d}, n={n}, m={m}"
        )));
    }
    let cutoff = 8 * kmax.max(1);
    let rc = cutoff as f64;
    let f = |e: f64| {
        let mut g = LatFn::zeros(d, cutoff);
        for i in 0..g.len() {
            let k = g.mode_of(i);
            let r = (lattice::norm2(&k) as f64).sqrt();
            if r > 0.0 && r <= rc {
                g.set(&k, r.powf(-e));
            }
        }
        g
    };
    let s = lattice::conv_fft(&f(n), &f(m), kmax);
    let tail = sphere_area(d) * rc.powf(df - n - m) / (n + m - df);
    let mut rows = Vec::new();
    for i in 0..s.len() {
        let k = s.mode_of(i);
        if k.iter().all(|&c| c == 0) {
            continue;
        }
        let norm = (lattice::norm2(&k) as f64).sqrt();
        let lhs = s.data()[i] + tail;
        rows.push(YoungRow {
            k: k[..d].to_vec(),
            norm,
            lhs,
            constant: lhs * norm.powf(n + m - df),
        });
    }
    let sup_constant = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    Ok(YoungReport {
        d,
        n,
        m,
        kmax,
        cutoff,
        rows,
        sup_constant,
        note: "k = 0 excluded, as are k₁ = 0 and k₂ = 0".into(),
    })
}

/// E|φ_N(y) − φ_N(x)|² = Σ_{k∈𝒦_N} 2(1 − cos 2πk(y−x))/λ_k in d = 1.
pub fn gff1_increment_variance(x: f64, y: f64, n: usize) -> Result<f64> {
    let lat = ModeLattice::new(1, n)?;
    Ok(kahan(lat.modes.iter().zip(&lat.lambdas).map(|(k, l)| {
        2.0 * (1.0 - (2.0 * PI * k[0] as f64 * (y - x)).cos()) / l
    })))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub schema: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub profile: String,
    pub seed: Option<u64>,
    pub grid: usize,
    pub modes: usize,
}

/// One JSON header line, then one CSV row per grid point: coordinates and value.
pub fn export_field<W: Write>(sample: &FieldSample, m: usize, out: &mut W) -> Result<()> {
    let header = FieldHeader {
        schema: "wickworks.field/1".into(),
        d: sample.lattice.d,
        n: sample.lattice.n,
        profile: sample.profile.name(),
        seed: sample.seed,
        grid: m,
        modes: sample.lattice.len(),
    };
    let io = |e: std::io::Error| Error::Invalid(format!("write failed: {e}"));
    writeln!(
        out,
        "{}",
        serde_json::to_string(&header).map_err(|e| Error::Invalid(e.to_string()))?
    )
    .map_err(io)?;
    let d = sample.lattice.d;
    let cols = ["x", "y", "z"];
    writeln!(out, "{},value", cols[..d].join(",")).map_err(io)?;
    for (mut idx, v) in sample
        .grid_values(m, Synthesis::Fft)
        .into_iter()
        .enumerate()
    {
        let mut coords = Vec::with_capacity(d);
        for _ in 0..d {
            coords.push(format!("{}", (idx % m) as f64 / m as f64));
            idx /= m;
        }
        writeln!(out, "{},{:.17e}", coords.join(","), v).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_values() {
        assert_eq!(c_variance(1, 0).unwrap(), 1.0);
        for d in 1..=3 {
            let c = c_variance(d, 4).unwrap();
            assert_eq!(green_truncated(&vec![0.0; d], d, 4).unwrap(), c);
        }
        assert_eq!(
            sobolev_sum(0.0, 1, 6, SpectralProfile::Gff).unwrap(),
            c_variance(1, 6).unwrap()
        );
        assert_eq!(gff1_increment_variance(0.3, 0.3, 10).unwrap(), 0.0);
        assert!(c_variance(4, 1).is_err());
    }

    #[test]
    fn lattice_symmetry() {
        let lat = ModeLattice::new(2, 5).unwrap();
        for k in &lat.modes {
            assert!(lat.position(&lattice::neg(k)).is_some());
        }
        let reps = lat.modes.iter().filter(|k| is_representative(k)).count();
        assert_eq!(2 * reps + 1, lat.len());
    }

    #[test]
    fn green_is_even() {
        for x in [0.1, 0.37] {
            let a = green_truncated(&[x, 0.2], 2, 6).unwrap();
            let b = green_truncated(&[-x, -0.2], 2, 6).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn synthesis_routes_agree() {
        let lat = ModeLattice::new(2, 4).unwrap();
        let s = sample_field(SpectralProfile::Gff, &lat, 11).unwrap();
        let a = s.grid_values(9, Synthesis::Direct);
        let b = s.grid_values(9, Synthesis::Fft);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut c = s.clone();
        c.cache_grid(9, Synthesis::Fft);
        assert_eq!(c.cached_grid().unwrap().1.len(), 81);
    }

    #[test]
    fn wick_variance_order_two() {
        let lat = ModeLattice::new(2, 5).unwrap();
        let direct = 2.0 * kahan(lat.lambdas.iter().map(|l| 1.0 / (l * l)));
        let v = wick_integral_variance(2, 5, 2).unwrap();
        assert!((v - direct).abs() < 1e-13 * direct);
    }

    #[test]
    fn scaled_hermite_float() {
        let coef: Vec<f64> = hermite(4).coeffs().iter().map(to_f64).collect();
        // H_4(x; 2) = x⁴ − 12x² + 12
        assert!((hermite_scaled_f64(&coef, 1.5, 2.0) - (5.0625 - 27.0 + 12.0)).abs() < 1e-12);
    }

    #[test]
    fn pairing_rejects_outside_modes() {
        let lat = ModeLattice::new(1, 2).unwrap();
        let s = sample_field(SpectralProfile::White, &lat, 1).unwrap();
        assert_eq!(
            pair_with_testfunction(&s, &[([0, 0, 0], 1.0)]).unwrap(),
            s.coeffs[lat.position(&[0, 0, 0]).unwrap()]
        );
        assert!(pair_with_testfunction(&s, &[([3, 0, 0], 1.0)]).is_err());
    }

    #[test]
    fn export_is_deterministic() {
        let lat = ModeLattice::new(1, 3).unwrap();
        let s = sample_field(SpectralProfile::Gff, &lat, 5).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        export_field(&s, 8, &mut a).unwrap();
        export_field(
            &sample_field(SpectralProfile::Gff, &lat, 5).unwrap(),
            8,
            &mut b,
        )
        .unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let header: FieldHeader = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(header.profile, "gff");
        assert_eq!(text.lines().count(), 10);
    }
}
