//! Bessel functions of the first kind (orders 0, 1, 2) and Gauss–Legendre
//! quadrature rules.

use crate::scalar::Scalar;

const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// `[J0(x), J1(x), J2(x)]`.
///
/// Power series below |x| = 2, Miller backward recurrence up to |x| = 25,
/// and the Hankel asymptotic expansion beyond.
pub fn bessel_j012<T: Scalar>(x: T) -> [T; 3] {
    let ax = x.abs();
    let [j0, j1, j2] = if ax < T::lit(SERIES_LIMIT) {
        series_j012(ax)
    } else if ax < T::lit(ASYMPTOTIC_LIMIT) {
        miller_j012(ax)
    } else {
        let j0 = hankel_asymptotic(0, ax);
        let j1 = hankel_asymptotic(1, ax);
        [j0, j1, T::lit(2.0) * j1 / ax - j0]
    };
    if x < T::zero() {
        [j0, -j1, j2]
    } else {
        [j0, j1, j2]
    }
}

pub fn bessel_j0<T: Scalar>(x: T) -> T {
    bessel_j012(x)[0]
}

pub fn bessel_j1<T: Scalar>(x: T) -> T {
    bessel_j012(x)[1]
}

pub fn bessel_j2<T: Scalar>(x: T) -> T {
    bessel_j012(x)[2]
}

fn series_j012<T: Scalar>(x: T) -> [T; 3] {
    let half = x * T::lit(0.5);
    let q = -(half * half);
    let mut out = [T::zero(); 3];
    for (n, slot) in out.iter_mut().enumerate() {
        // (x/2)^n / n!
        let mut term = T::one();
        for i in 1..=n {
            term = term * half / T::from_usize_lossy(i);
        }
        let mut sum = term;
        for m in 1..40 {
            term = term * q / (T::from_usize_lossy(m) * T::from_usize_lossy(m + n));
            sum += term;
            if term.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
        *slot = sum;
    }
    out
}

fn miller_j012<T: Scalar>(x: T) -> [T; 3] {
    let xf = x.as_f64();
    let mut start = xf as usize + 20 + (40.0 * (xf + 2.0)).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = T::lit(2.0) / x;
    let rescale = T::lit(1e10);
    let mut jp = T::zero(); // J_{k+1}
    let mut j = T::lit(1e-30); // J_k
    let mut norm = T::zero();
    let mut out = [T::zero(); 3];
    let mut k = start;
    while k > 0 {
        let jm = T::from_usize_lossy(k) * two_over_x * j - jp;
        jp = j;
        j = jm;
        k -= 1;
        if j.abs() > rescale {
            let s = T::one() / rescale;
            j *= s;
            jp *= s;
            norm *= s;
            out[1] *= s;
            out[2] *= s;
        }
        if k == 1 {
            out[1] = j;
        }
        if k == 2 {
            out[2] = j;
        }
        if k.is_multiple_of(2) && k > 0 {
            norm += T::lit(2.0) * j;
        }
    }
    // j now holds the unnormalized J0
    norm += j;
    out[0] = j;
    [out[0] / norm, out[1] / norm, out[2] / norm]
}

fn hankel_asymptotic<T: Scalar>(order: u32, x: T) -> T {
    let mu = T::lit(4.0 * f64::from(order * order));
    let eight_x = T::lit(8.0) * x;
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut prev = T::infinity();
    for k in 1..30u32 {
        let odd = T::lit(f64::from(2 * k - 1));
        term = term * (mu - odd * odd) / (T::lit(f64::from(k)) * eight_x);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < T::epsilon() {
            break;
        }
    }
    let chi = x - (T::lit(f64::from(order)) * T::lit(0.5) + T::lit(0.25)) * T::PI();
    (T::lit(2.0) / (T::PI() * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Gauss–Legendre rule; nodes and weights are computed in `f64` and cast.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    /// `n`-point rule on the reference interval [-1, 1].
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on_interval(&self, a: T, b: T) -> Vec<(T, T)> {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| (mid + half * z, half * w))
            .collect()
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.on_interval(a, b)
            .into_iter()
            .fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, d)
}
