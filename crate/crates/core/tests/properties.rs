use aggf_core::cahn_hilliard::separation_margin;
use aggf_core::thermo::free_energy;
use aggf_core::{GridSpec, Params, ScalarField, SpectralWorkspace, VectorField};
use proptest::prelude::*;

const N: usize = 16;

fn grid() -> GridSpec {
    GridSpec::square(N).unwrap()
}

/// Trigonometric polynomial with modes `|k_i| <= 3`, resolved exactly on the grid.
fn trig(coeffs: &[f64]) -> ScalarField {
    ScalarField::from_fn(grid(), |x| {
        let mut s = 0.0;
        let mut it = coeffs.iter();
        for kx in -3i32..=3 {
            for ky in 0i32..=3 {
                let (Some(a), Some(b)) = (it.next(), it.next()) else { return s };
                let arg = kx as f64 * x[0] + ky as f64 * x[1];
                s += a * arg.cos() + b * arg.sin();
            }
        }
        s
    })
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 56)
}

fn vector(a: &[f64], b: &[f64]) -> VectorField {
    VectorField::new(vec![trig(a), trig(b)]).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(c in coeffs()) {
        let ws = SpectralWorkspace::new(grid());
        let f = trig(&c);
        let s = ws.forward(&f);
        prop_assert!(rel(s.norm_l2(), f.norm_l2()) < 1e-12);
        prop_assert!((ws.inverse(&s).values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)) < 1e-12);
    }

    #[test]
    fn leray_is_idempotent_and_solenoidal(a in coeffs(), b in coeffs()) {
        let ws = SpectralWorkspace::new(grid());
        let v = vector(&a, &b);
        let p = ws.leray_project(&v);
        let pp = ws.leray_project(&p);
        prop_assert!((&pp - &p).norm_l2() <= 1e-12 * v.norm_l2());
        prop_assert!(ws.divergence(&p).norm_l2() <= 1e-11 * v.norm_l2());
    }

    #[test]
    fn helmholtz_split_is_orthogonal(a in coeffs(), b in coeffs()) {
        let ws = SpectralWorkspace::new(grid());
        let v = vector(&a, &b);
        let sol = ws.leray_project(&v);
        let grad = &v - &sol;
        prop_assert!(sol.dot(&grad).abs() <= 1e-11 * v.dot(&v));
        let curl_free = ws.derivative(grad.component(1), 0).zip_map(&ws.derivative(grad.component(0), 1), |p, q| p - q);
        prop_assert!(curl_free.max_abs() <= 1e-10 * (1.0 + v.max_magnitude()));
    }

    #[test]
    fn inverse_laplacian_round_trip(c in coeffs()) {
        let ws = SpectralWorkspace::new(grid());
        let f = trig(&c).mean_free();
        let w = ws.inv_neumann_laplace(&f).unwrap();
        let back = ws.laplacian(&w).map(|x| -x);
        prop_assert!((&back - &f).norm_l2() <= 1e-11 * (1.0 + f.norm_l2()));
        prop_assert!(w.mean().abs() < 1e-13);
    }

    #[test]
    fn korn_equality_on_solenoidal_fields(a in coeffs(), b in coeffs()) {
        let ws = SpectralWorkspace::new(grid());
        let u = ws.leray_project(&vector(&a, &b));
        let full = ws.velocity_gradient(&u).norm_sq();
        let sym = ws.sym_grad(&u).norm_sq();
        prop_assert!((2.0 * sym - full).abs() <= 1e-12 * full.max(1e-300));
    }

    #[test]
    fn potential_is_even_and_convex_part_nonnegative(s in -0.999f64..0.999) {
        let pot = Params::reference(grid(), 1e-3).potential();
        prop_assert!(pot.convex_part(s).unwrap() >= 0.0);
        prop_assert!(rel(pot.psi(-s).unwrap(), pot.psi(s).unwrap()) < 1e-12 || pot.psi(s).unwrap().abs() < 1e-15);
        prop_assert!((pot.convex_prime(-s).unwrap() + pot.convex_prime(s).unwrap()).abs() < 1e-12);
        prop_assert!(pot.convex_second(s).unwrap() >= pot.theta);
        let bound = pot.convex_prime_inverse_bound(pot.convex_prime(s).unwrap().abs());
        prop_assert!((bound - s.abs()).abs() < 1e-12);
    }

    #[test]
    fn free_energy_is_translation_invariant(c in coeffs(), sx in 0usize..N, sy in 0usize..N) {
        let ws = SpectralWorkspace::new(grid());
        let f = trig(&c);
        let phi = f.map(|x| 0.5 * x / f.max_abs().max(1e-12));
        let pot = Params::reference(grid(), 1e-3).potential();
        let e = free_energy(&ws, &phi, &pot).unwrap();
        let shifted = free_energy(&ws, &phi.translated(&[sx, sy]), &pot).unwrap();
        prop_assert!((e - shifted).abs() <= 1e-11 * e.abs().max(1.0));
        prop_assert!(separation_margin(&phi) >= 0.5 - 1e-12);
    }
}
