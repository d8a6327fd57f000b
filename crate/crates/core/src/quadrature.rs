//! Gauss–Legendre rules and the product rule used for Bloch-sphere averages.

use crate::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let two = T::lit(2.0);
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = T::lit(guess);
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::default_epsilon() * T::lit(4.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = two / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::lit(k as f64);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::lit(n as f64);
    (p1, nf * (x * p1 - p0) / (x * x - T::one()))
}

/// Product rule for the uniform average over the unit sphere: Gauss–Legendre
/// in `cos θ` times the trapezoid rule in `φ`.
#[derive(Debug, Clone)]
pub struct SphereRule<T: Real> {
    /// `(θ, φ, weight)` with weights summing to one.
    pub points: Vec<(T, T, T)>,
}

impl<T: Real> SphereRule<T> {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (xs, ws) = gauss_legendre::<T>(n_theta);
        let two_pi = T::two_pi();
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for (&x, &w) in xs.iter().zip(&ws) {
            let theta = x.acos();
            for k in 0..n_phi {
                let phi = two_pi * T::lit(k as f64 / n_phi as f64);
                points.push((theta, phi, w / T::lit(2.0 * n_phi as f64)));
            }
        }
        SphereRule { points }
    }

    pub fn average<F: FnMut(T, T) -> T>(&self, mut f: F) -> T {
        self.points.iter().fold(T::zero(), |acc, &(th, ph, w)| acc + w * f(th, ph))
    }
}
