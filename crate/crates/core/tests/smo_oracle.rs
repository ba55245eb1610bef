//! SMO against a brute-force search over the dual on tiny problems.

use drybean_core::linalg::Matrix;
use drybean_core::svm::{smo_train_binary, GammaMode, KernelKind, KernelSpec, SvmHyper};

#[derive(Clone, Copy, Debug)]
enum K {
    Linear,
    Rbf(f64),
    Poly(f64, f64, i32),
}

fn k_eval(k: K, a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    match k {
        K::Linear => dot,
        K::Rbf(g) => (-g * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).exp(),
        K::Poly(g, c0, d) => (g * dot + c0).powi(d),
    }
}

fn spec(k: K) -> KernelSpec {
    match k {
        K::Linear => KernelSpec::linear(),
        K::Rbf(g) => KernelSpec::rbf(GammaMode::Fixed(g)),
        K::Poly(g, c0, d) => KernelSpec {
            degree: d as u32,
            coef0: c0,
            ..KernelSpec::new(KernelKind::Polynomial, GammaMode::Fixed(g))
        },
    }
}

fn dual(alpha: &[f64], q: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Maximises the dual over a lattice: the first n−1 variables range over
/// `centre ± span` in `steps` increments (clipped to [0, C]), the last is
/// fixed by the equality constraint and must land inside the box.
fn lattice_search(q: &[Vec<f64>], y: &[f64], c: f64, centre: &[f64], span: f64, steps: usize) -> (f64, Vec<f64>) {
    let n = y.len();
    let free = n - 1;
    let axis: Vec<Vec<f64>> = (0..free)
        .map(|i| {
            (0..=2 * steps)
                .map(|s| centre[i] - span + span * s as f64 / steps as f64)
                .filter(|v| *v >= -1e-12 && *v <= c + 1e-12)
                .map(|v| v.clamp(0.0, c))
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; free];
    let mut alpha = vec![0.0; n];
    let mut best = (f64::NEG_INFINITY, vec![]);
    loop {
        let mut s = 0.0;
        for i in 0..free {
            alpha[i] = axis[i][idx[i]];
            s += y[i] * alpha[i];
        }
        let last = -y[n - 1] * s;
        if (-1e-12..=c + 1e-12).contains(&last) {
            alpha[n - 1] = last.clamp(0.0, c);
            let d = dual(&alpha, q);
            if d > best.0 {
                best = (d, alpha.clone());
            }
        }
        let mut a = 0;
        loop {
            if a == free {
                return best;
            }
            idx[a] += 1;
            if idx[a] < axis[a].len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

fn brute_force(q: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    // Coarse pass with step C/50 over the whole box, then two zooms.
    let (mut best, mut at) = lattice_search(q, y, c, &vec![c / 2.0; n], c / 2.0, 25);
    let mut step = c / 50.0;
    for _ in 0..2 {
        let (b, a) = lattice_search(q, y, c, &at, step, 10);
        if b > best {
            best = b;
            at = a;
        }
        step /= 10.0;
    }
    best
}

struct Fixture {
    points: Vec<[f64; 2]>,
    y: Vec<f64>,
}

fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            points: vec![[0.0, 0.0], [1.0, 1.0]],
            y: vec![-1.0, 1.0],
        },
        Fixture {
            points: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            y: vec![-1.0, 1.0, 1.0],
        },
        Fixture {
            points: vec![[0.0, 0.0], [2.0, 0.5], [0.3, 1.0], [2.5, 2.0]],
            y: vec![-1.0, 1.0, -1.0, 1.0],
        },
        // XOR: not linearly separable
        Fixture {
            points: vec![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]],
            y: vec![1.0, 1.0, -1.0, -1.0],
        },
        // overlapping classes
        Fixture {
            points: vec![[0.0, 0.0], [1.0, 0.2], [0.5, 0.4], [0.6, 0.1], [1.2, 1.0]],
            y: vec![-1.0, -1.0, 1.0, 1.0, 1.0],
        },
        Fixture {
            points: vec![[-1.0, 0.5], [0.2, -0.3], [0.9, 0.9], [1.5, -1.0], [0.0, 2.0]],
            y: vec![1.0, -1.0, 1.0, -1.0, 1.0],
        },
    ]
}

#[test]
fn dual_objective_matches_brute_force() {
    let kernels = [K::Linear, K::Rbf(0.5), K::Rbf(2.0), K::Poly(1.0, 1.0, 2)];
    let mut checked = 0;
    for fx in fixtures() {
        let x = Matrix::from_rows(&fx.points).unwrap();
        for &k in &kernels {
            for &c in &[0.5, 1.0, 4.0] {
                let mut h = SvmHyper::new(c, spec(k));
                h.tol = 1e-6;
                h.max_passes = 10_000;
                let (_, sol) = smo_train_binary(&x, &fx.y, &h).unwrap();
                assert!(sol.converged);
                let n = fx.y.len();
                let q: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| fx.y[i] * fx.y[j] * k_eval(k, &fx.points[i], &fx.points[j]))
                            .collect()
                    })
                    .collect();
                let smo = dual(&sol.alpha, &q);
                let oracle = brute_force(&q, &fx.y, c);
                assert!(
                    (smo - oracle).abs() <= 1e-3,
                    "{k:?} C={c} n={n}: smo {smo} vs brute force {oracle}"
                );

                // box and equality constraints
                for &a in &sol.alpha {
                    assert!((0.0..=c).contains(&a));
                }
                let eq: f64 = sol.alpha.iter().zip(&fx.y).map(|(a, y)| a * y).sum();
                assert!(eq.abs() < 1e-9);

                // KKT conditions on the margins y_i f(x_i)
                for i in 0..n {
                    let f: f64 = (0..n)
                        .map(|j| sol.alpha[j] * fx.y[j] * k_eval(k, &fx.points[j], &fx.points[i]))
                        .sum::<f64>()
                        + sol.bias;
                    let m = fx.y[i] * f;
                    let a = sol.alpha[i];
                    let tol = 1e-5;
                    if a <= 0.0 {
                        assert!(m >= 1.0 - tol, "a=0 but margin {m}");
                    } else if a >= c {
                        assert!(m <= 1.0 + tol, "a=C but margin {m}");
                    } else {
                        assert!((m - 1.0).abs() <= tol, "free a but margin {m}");
                    }
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 6 * 4 * 3);
}
