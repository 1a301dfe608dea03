//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Square-truncated Fourier series `Σ_{0<|k|∞≤K} cos(2πk·x) / (4π²|k|²)`.
pub fn fourier_green_square(x: [f64; 2], k_max: usize) -> f64 {
    let k = k_max as i64;
    let cu: Vec<f64> = (0..=k).map(|j| (2.0 * PI * j as f64 * x[0]).cos()).collect();
    let su: Vec<f64> = (0..=k).map(|j| (2.0 * PI * j as f64 * x[0]).sin()).collect();
    let cv: Vec<f64> = (0..=k).map(|j| (2.0 * PI * j as f64 * x[1]).cos()).collect();
    let sv: Vec<f64> = (0..=k).map(|j| (2.0 * PI * j as f64 * x[1]).sin()).collect();
    let mut s = 0.0;
    for a in -k..=k {
        for b in -k..=k {
            if a == 0 && b == 0 {
                continue;
            }
            let (ia, ib) = (a.unsigned_abs() as usize, b.unsigned_abs() as usize);
            let sa = su[ia] * a.signum() as f64;
            let sb = sv[ib] * b.signum() as f64;
            let c = cu[ia] * cv[ib] - sa * sb;
            s += c / (a * a + b * b) as f64;
        }
    }
    s / (4.0 * PI * PI)
}

/// Fourier series summed exactly along one lattice direction and truncated
/// at `|k₂| ≤ K` in the other. Uses the closed forms
/// `Σ_{k≠0} cos(2πkx)/k² = 2π²(x² − x + 1/6)` and
/// `Σ_k cos(2πkx)/(k² + m²) = (π/m) cosh(πm(1 − 2x)) / sinh(πm)` on [0,1].
pub fn fourier_green_resummed(x: [f64; 2], k_max: usize) -> f64 {
    let frac = |t: f64| t - t.floor();
    let (a, b) = (frac(x[0]), frac(x[1]));
    let da = a.min(1.0 - a);
    let db = b.min(1.0 - b);
    // resum along the axis where the point is farther from the lattice line
    let (s, t) = if da >= db { (a, b) } else { (b, a) };
    let mut acc = 2.0 * PI * PI * (s * s - s + 1.0 / 6.0);
    for m in 1..=k_max {
        let m = m as f64;
        let e = |z: f64| (-2.0 * PI * m * z).exp();
        let ratio = (e(s) + e(1.0 - s)) / (1.0 - e(1.0));
        acc += 2.0 * (2.0 * PI * m * t).cos() * (PI / m) * ratio;
    }
    acc / (4.0 * PI * PI)
}

/// Central-difference gradient of any scalar field.
pub fn fd_grad(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], h: f64) -> [f64; 2] {
    [
        (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h),
        (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h),
    ]
}

/// Oracle Biot–Savart kernel `(∂₂G, −∂₁G)` from the resummed series.
pub fn oracle_biot_savart(x: [f64; 2]) -> [f64; 2] {
    let g = fd_grad(|p| fourier_green_resummed(p, 400), x, 1e-5);
    [g[1], -g[0]]
}

/// Deterministic quasi-random points in [0,1)² (Halton bases 2, 3).
pub fn halton(n: usize) -> Vec<[f64; 2]> {
    fn radical(mut i: usize, base: usize) -> f64 {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    (1..=n).map(|i| [radical(i, 2), radical(i, 3)]).collect()
}

pub fn torus_norm(x: [f64; 2]) -> f64 {
    let r = |t: f64| {
        let f = t - t.floor();
        f.min(1.0 - f)
    };
    r(x[0]).hypot(r(x[1]))
}

/// Classical fixed-step RK4, used as a slow but simple reference integrator.
pub fn rk4(f: impl Fn(&[f64]) -> Vec<f64>, y0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut y = y0.to_vec();
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(y, k)| y + a * k).collect()
    };
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, 0.5 * h));
        let k3 = f(&axpy(&y, &k2, 0.5 * h));
        let k4 = f(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Uniform random configuration with a fixed seed.
pub fn random_config(n: usize, xi: &[f64], seed: u64) -> pvsplit::Configuration {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    pvsplit::Configuration::from_raw(&raw, xi).unwrap()
}

/// Random configuration whose pair distances all exceed `min_dist`.
pub fn spread_config(n: usize, xi: &[f64], min_dist: f64, seed: u64) -> pvsplit::Configuration {
    (0..)
        .map(|k| random_config(n, xi, seed.wrapping_mul(1000).wrapping_add(k)))
        .find(|c| c.closest_pair().unwrap().2 >= min_dist)
        .unwrap()
}

/// Random N=4 configuration whose minimum pair distance is log-uniform in
/// [1e-5, 0.2].
pub fn near_collision_config(rng: &mut impl rand::Rng) -> pvsplit::Configuration {
    loop {
        let r = (1e-5f64.ln() + rng.random::<f64>() * (0.2f64.ln() - 1e-5f64.ln())).exp();
        let th = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
        let a: [f64; 2] = [rng.random(), rng.random()];
        let raw = [
            a,
            [a[0] + r * th.cos(), a[1] + r * th.sin()],
            [rng.random(), rng.random()],
            [rng.random(), rng.random()],
        ];
        let x = pvsplit::Configuration::from_raw(&raw, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        let d = pvsplit::observables::min_pair_distance(&x);
        if (1e-5..=0.2).contains(&d) {
            return x;
        }
    }
}
