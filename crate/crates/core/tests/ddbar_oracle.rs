use dhym::torus::{i_ddbar, FourierMode, ScalarField, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_modes(rng: &mut ChaCha8Rng, count: usize) -> Vec<FourierMode> {
    (0..count)
        .map(|_| {
            let wave = [0; 4].map(|_: i32| rng.random_range(-3..=3));
            FourierMode::new(rng.random_range(0.1..1.0), wave, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect()
}

fn eval(modes: &[FourierMode], x: [f64; 4]) -> f64 {
    modes.iter().map(|m| m.eval(&x)).sum()
}

fn shifted(x: [f64; 4], a: usize, da: f64, b: usize, db: f64) -> [f64; 4] {
    let mut y = x;
    y[a] += da;
    y[b] += db;
    y
}

/// Fourth-order centered difference for `∂_a ∂_b f`.
fn second_partial(modes: &[FourierMode], x: [f64; 4], a: usize, b: usize, h: f64) -> f64 {
    if a == b {
        let f = |s: f64| eval(modes, shifted(x, a, s * h, b, 0.0));
        (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0)) / (12.0 * h * h)
    } else {
        let w = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];
        let mut s = 0.0;
        for (sa, wa) in w {
            for (sb, wb) in w {
                s += wa * wb * eval(modes, shifted(x, a, sa * h, b, sb * h));
            }
        }
        s / (144.0 * h * h)
    }
}

#[test]
fn complex_hessian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = TorusGrid::new(2, 32).unwrap();
    let modes = random_modes(&mut rng, 6);
    let u = ScalarField::from_modes(&grid, &modes);
    let hess = i_ddbar(&u);
    let h = 1e-2;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for _ in 0..400 {
        let idx = rng.random_range(0..grid.len());
        let x = grid.coords(idx);
        let m = hess.at(idx);
        for j in 0..2 {
            for k in 0..2 {
                let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
                let re = 0.25 * (second_partial(&modes, x, xj, xk, h) + second_partial(&modes, x, yj, yk, h));
                let im = 0.25 * (second_partial(&modes, x, xj, yk, h) - second_partial(&modes, x, yj, xk, h));
                let got = m.get(j, k);
                worst = worst.max((got.re - re).abs()).max((got.im - im).abs());
                scale = scale.max(got.norm());
            }
        }
    }
    assert!(worst / scale <= 1e-6, "relative error {:e}", worst / scale);
}
