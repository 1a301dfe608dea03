//! Exponential integral E₁ and its entire part.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `Ein(z) = E₁(z) + ln z + γ = Σ_{k≥1} (-1)^{k+1} z^k / (k·k!)`, for `0 <= z <= 1`.
pub(crate) fn ein_small(z: f64) -> f64 {
    debug_assert!((0.0..=1.0 + 1e-12).contains(&z));
    let mut term = z; // z^k / k!
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        let add = term / k;
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
        term *= -z / (k + 1.0);
        k += 1.0;
    }
    sum
}

/// `E₁(z)` for `z > 0`.
pub(crate) fn exp1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z <= 1.0 {
        return ein_small(z) - z.ln() - EULER_GAMMA;
    }
    // modified Lentz evaluation of the continued fraction
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `E₁(z) + ln z` on `z >= 0`, finite at the origin.
pub(crate) fn exp1_plus_log(z: f64) -> f64 {
    if z <= 1.0 {
        ein_small(z) - EULER_GAMMA
    } else {
        exp1(z) + z.ln()
    }
}
