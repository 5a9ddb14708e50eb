//! Functions on ℤ^d (d ≤ 3) supported in a box [−r, r]^d, with truncated
//! convolutions (direct or FFT) and compensated sums.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub type Mode = [i64; 3];

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn kahan<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = KahanSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}

pub fn l1(k: &Mode) -> i64 {
    k[0].abs() + k[1].abs() + k[2].abs()
}

pub fn norm2(k: &Mode) -> i64 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

pub fn add(a: &Mode, b: &Mode) -> Mode {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn neg(a: &Mode) -> Mode {
    [-a[0], -a[1], -a[2]]
}

/// Modes of ℤ^d in the ℓ¹ ball of radius n, in lexicographic order.
pub fn l1_ball(d: usize, n: usize) -> Vec<Mode> {
    let n = n as i64;
    let r = |i: usize| if i < d { n } else { 0 };
    let mut out = Vec::new();
    for a in -r(0)..=r(0) {
        for b in -r(1)..=r(1) {
            for c in -r(2)..=r(2) {
                let k = [a, b, c];
                if l1(&k) <= n {
                    out.push(k);
                }
            }
        }
    }
    out
}

/// Dense array over [−r, r]^d; entries outside the box are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LatFn {
    pub d: usize,
    pub r: usize,
    data: Vec<f64>,
}

impl LatFn {
    pub fn zeros(d: usize, r: usize) -> Self {
        assert!((1..=3).contains(&d), "lattice dimension must be 1, 2 or 3");
        LatFn {
            d,
            r,
            data: vec![0.0; (2 * r + 1).pow(d as u32)],
        }
    }

    pub fn delta(d: usize) -> Self {
        let mut f = Self::zeros(d, 0);
        f.data[0] = 1.0;
        f
    }

    /// f(k) for k in the ℓ¹ ball of radius n, zero elsewhere.
    pub fn on_ball(d: usize, n: usize, mut f: impl FnMut(&Mode) -> f64) -> Self {
        let mut out = Self::zeros(d, n);
        for k in l1_ball(d, n) {
            let i = out.index(&k).unwrap();
            out.data[i] = f(&k);
        }
        out
    }

    pub fn side(&self) -> usize {
        2 * self.r + 1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn index(&self, k: &Mode) -> Option<usize> {
        let r = self.r as i64;
        let s = self.side();
        let mut idx = 0usize;
        let mut stride = 1usize;
        for (i, &ki) in k.iter().enumerate() {
            if i >= self.d {
                if ki != 0 {
                    return None;
                }
                continue;
            }
            if ki < -r || ki > r {
                return None;
            }
            idx += (ki + r) as usize * stride;
            stride *= s;
        }
        Some(idx)
    }

    pub fn mode_of(&self, mut idx: usize) -> Mode {
        let s = self.side();
        let r = self.r as i64;
        let mut k = [0i64; 3];
        for ki in k.iter_mut().take(self.d) {
            *ki = (idx % s) as i64 - r;
            idx /= s;
        }
        k
    }

    pub fn get(&self, k: &Mode) -> f64 {
        self.index(k).map(|i| self.data[i]).unwrap_or(0.0)
    }

    pub fn set(&mut self, k: &Mode, v: f64) {
        let i = self.index(k).expect("mode outside the box");
        self.data[i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Nonzero entries as (mode, value) pairs.
    pub fn support(&self) -> Vec<(Mode, f64)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (self.mode_of(i), v))
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn sum(&self) -> f64 {
        kahan(self.data.iter().copied())
    }

    /// k ↦ f(−k)
    pub fn reflect(&self) -> Self {
        let mut out = self.clone();
        out.data.reverse();
        out
    }

    /// Restriction to the box of radius r (or zero-padding when larger).
    pub fn resize(&self, r: usize) -> Self {
        if r == self.r {
            return self.clone();
        }
        let mut out = Self::zeros(self.d, r);
        for (i, &v) in self.data.iter().enumerate() {
            if v != 0.0 {
                let k = self.mode_of(i);
                if let Some(j) = out.index(&k) {
                    out.data[j] = v;
                }
            }
        }
        out
    }

    /// Smallest box radius containing the support.
    pub fn tight_radius(&self) -> usize {
        self.support()
            .iter()
            .map(|(k, _)| k.iter().map(|x| x.unsigned_abs() as usize).max().unwrap())
            .max()
            .unwrap_or(0)
    }

    pub fn pointwise(&self, other: &Self) -> Self {
        let r = self.r.min(other.r);
        let a = self.resize(r);
        let b = other.resize(r);
        LatFn {
            d: self.d,
            r,
            data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
        }
    }

    /// k ↦ f(k)·g(k + p), on the box of f.
    pub fn shifted_product(&self, other: &Self, p: &Mode) -> Self {
        let mut out = Self::zeros(self.d, self.r);
        for (i, &v) in self.data.iter().enumerate() {
            if v != 0.0 {
                let k = self.mode_of(i);
                out.data[i] = v * other.get(&add(&k, p));
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        LatFn {
            d: self.d,
            r: self.r,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }
}

/// (f * g)(k) = Σ_q f(q) g(k − q) for |k|_∞ ≤ rout.
pub fn conv_direct(f: &LatFn, g: &LatFn, rout: usize) -> LatFn {
    let mut out = LatFn::zeros(f.d, rout);
    let d = f.d;
    let side = out.side() as i64;
    let strides: Vec<i64> = (0..d).map(|i| side.pow(i as u32)).collect();
    let lin = |k: &Mode| -> i64 { (0..d).map(|i| k[i] * strides[i]).sum() };
    let centre = lin(&[rout as i64; 3]);
    let sf: Vec<(Mode, i64, f64)> = f
        .support()
        .into_iter()
        .map(|(k, v)| (k, lin(&k), v))
        .collect();
    let r = rout as i64;
    if out.len() < g.nnz() {
        // few outputs: gather
        for i in 0..out.len() {
            let k = out.mode_of(i);
            let mut acc = 0.0;
            for (q, _, a) in &sf {
                acc += a * g.get(&[k[0] - q[0], k[1] - q[1], k[2] - q[2]]);
            }
            out.data[i] = acc;
        }
        return out;
    }
    let sg: Vec<(Mode, i64, f64)> = g
        .support()
        .into_iter()
        .map(|(k, v)| (k, lin(&k), v))
        .collect();
    for (q, lq, a) in &sf {
        // per-axis window of p keeping q + p inside the output box
        let lo: Vec<i64> = (0..d).map(|i| -r - q[i]).collect();
        let hi: Vec<i64> = (0..d).map(|i| r - q[i]).collect();
        let base = centre + lq;
        for (p, lp, b) in &sg {
            if (0..d).all(|i| p[i] >= lo[i] && p[i] <= hi[i]) {
                out.data[(base + lp) as usize] += a * b;
            }
        }
    }
    out
}

/// (f * g)(k) at a single point.
pub fn conv_at(f: &LatFn, g: &LatFn, k: &Mode) -> f64 {
    let (small, big) = if f.nnz() <= g.nnz() { (f, g) } else { (g, f) };
    let mut acc = 0.0;
    for (i, &a) in small.data.iter().enumerate() {
        if a != 0.0 {
            let q = small.mode_of(i);
            acc += a * big.get(&[k[0] - q[0], k[1] - q[1], k[2] - q[2]]);
        }
    }
    acc
}

/// Smallest 2·3·5-smooth integer ≥ min.
pub fn fft_size(min: usize) -> usize {
    let mut m = min.max(1);
    loop {
        let mut x = m;
        for p in [2, 3, 5] {
            while x % p == 0 {
                x /= p;
            }
        }
        if x == 1 {
            return m;
        }
        m += 1;
    }
}

fn fft_nd(buf: &mut [Complex64], d: usize, m: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..d {
        let stride = m.pow(axis as u32);
        let total = buf.len();
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
}

/// Cyclic FFT convolution of size M ≥ r_f + r_g + rout + 1, so the kept window is alias-free.
pub fn conv_fft(f: &LatFn, g: &LatFn, rout: usize) -> LatFn {
    let d = f.d;
    let m = fft_size(f.r + g.r + rout + 1);
    let total = m.pow(d as u32);
    let wrap = |k: &Mode| -> usize {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &ki in k.iter().take(d) {
            idx += ki.rem_euclid(m as i64) as usize * stride;
            stride *= m;
        }
        idx
    };
    let mut planner = FftPlanner::new();
    let load = |h: &LatFn| {
        let mut b = vec![Complex64::new(0.0, 0.0); total];
        for (i, &v) in h.data.iter().enumerate() {
            if v != 0.0 {
                b[wrap(&h.mode_of(i))] = Complex64::new(v, 0.0);
            }
        }
        b
    };
    let mut a = load(f);
    let mut b = load(g);
    fft_nd(&mut a, d, m, false, &mut planner);
    fft_nd(&mut b, d, m, false, &mut planner);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_nd(&mut a, d, m, true, &mut planner);
    let norm = 1.0 / total as f64;
    let mut out = LatFn::zeros(d, rout);
    for i in 0..out.len() {
        let k = out.mode_of(i);
        out.data[i] = a[wrap(&k)].re * norm;
    }
    out
}

fn direct_cost(f: &LatFn, g: &LatFn, rout: usize) -> f64 {
    let outs = ((2 * rout + 1) as f64).powi(f.d as i32);
    f.nnz() as f64 * outs.min(g.nnz() as f64)
}

fn fft_cost(f: &LatFn, g: &LatFn, rout: usize) -> f64 {
    let m = fft_size(f.r + g.r + rout + 1) as f64;
    let total = m.powi(f.d as i32);
    12.0 * total * total.log2().max(1.0)
}

/// Estimated work of [`conv`], in multiply-adds.
pub fn conv_cost(f: &LatFn, g: &LatFn, rout: usize) -> u64 {
    direct_cost(f, g, rout).min(fft_cost(f, g, rout)) as u64
}

/// Convolution truncated to radius rout, routed by estimated cost.
pub fn conv(f: &LatFn, g: &LatFn, rout: usize) -> LatFn {
    if direct_cost(f, g, rout) <= fft_cost(f, g, rout) {
        conv_direct(f, g, rout)
    } else {
        conv_fft(f, g, rout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(d: usize, r: usize, seed: u64) -> LatFn {
        let mut s = seed;
        LatFn::on_ball(d, r, |_| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 33) as f64) / (1u64 << 31) as f64
        })
    }

    #[test]
    fn ball_counts() {
        assert_eq!(l1_ball(1, 3).len(), 7);
        assert_eq!(l1_ball(2, 2).len(), 13);
        assert_eq!(l1_ball(3, 1).len(), 7);
    }

    #[test]
    fn index_roundtrip_and_reflect() {
        let f = sample(2, 3, 1);
        for i in 0..f.len() {
            assert_eq!(f.index(&f.mode_of(i)), Some(i));
        }
        let g = f.reflect();
        for (k, v) in f.support() {
            assert_eq!(g.get(&neg(&k)), v);
        }
    }

    #[test]
    fn fft_matches_direct() {
        for d in 1..=3 {
            let f = sample(d, 4, 2);
            let g = sample(d, 3, 3);
            for rout in [0, 2, 7] {
                let a = conv_direct(&f, &g, rout);
                let b = conv_fft(&f, &g, rout);
                for i in 0..a.len() {
                    assert!((a.data[i] - b.data[i]).abs() < 1e-10, "d={d} rout={rout}");
                }
            }
        }
    }

    #[test]
    fn kahan_beats_naive() {
        let xs: Vec<f64> = std::iter::once(1.0)
            .chain(std::iter::repeat_n(1e-16, 10_000))
            .collect();
        assert!((kahan(xs.iter().copied()) - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn shifted_product_and_delta() {
        let f = sample(1, 3, 5);
        let one = LatFn::on_ball(1, 5, |_| 1.0);
        let s = f.shifted_product(&one, &[3, 0, 0]);
        assert_eq!(s.get(&[3, 0, 0]), 0.0);
        assert_eq!(s.get(&[2, 0, 0]), f.get(&[2, 0, 0]));
        let c = conv(&f, &LatFn::delta(1), 3);
        assert_eq!(c, f);
    }
}
