use std::f64::consts::PI;

use krein::geometry::{reflection_atlas, AtlasConfig, DomainGrid, DomainKind, DomainSpec, Hyperplane};
use krein::helmholtz::{solve_h, Problem};
use krein::spectral::{principal_eigenvalue, spectral_function, Coupling};
use krein::specfun::{
    bessel_i0, bessel_i1, bessel_j0, bessel_k0, bessel_k1, bessel_y0, free_green, SpectralParameter, EULER_GAMMA,
};
use proptest::prelude::*;
use quadrature::double_exponential::integrate;

/// Trapezoid sum of `exp(-x cosh t)` over the half line.
fn k0_oracle(x: f64) -> f64 {
    let h = 1.0 / 64.0;
    let mut s = 0.5 * (-x).exp();
    for k in 1.. {
        let f = (-x * (k as f64 * h).cosh()).exp();
        s += f;
        if f < 1e-18 * s {
            break;
        }
    }
    h * s
}

fn j0_oracle(x: f64) -> f64 {
    integrate(|t| (x * t.sin()).cos(), 0.0, PI, 1e-16).integral / PI
}

fn y0_oracle(x: f64) -> f64 {
    let f = |t: f64| (x * t.cos()).cos() * (EULER_GAMMA + (2.0 * x * t.sin() * t.sin()).ln());
    4.0 / (PI * PI) * integrate(f, 0.0, PI / 2.0, 1e-16).integral
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k0_matches_integral(x in 0.05f64..40.0) {
        let k = bessel_k0(x).unwrap();
        prop_assert!((k - k0_oracle(x)).abs() <= 1e-12 * k);
    }

    #[test]
    fn k0_is_positive_and_decreasing(x in 0.01f64..50.0, dx in 1e-3f64..1.0) {
        let (a, b) = (bessel_k0(x).unwrap(), bessel_k0(x + dx).unwrap());
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
    }

    #[test]
    fn modified_wronskian(x in 0.01f64..80.0) {
        let w = bessel_i0(x).unwrap() * bessel_k1(x).unwrap() + bessel_i1(x).unwrap() * bessel_k0(x).unwrap();
        prop_assert!((w * x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn j0_y0_match_integrals(x in 0.1f64..30.0) {
        prop_assert!((bessel_j0(x).unwrap() - j0_oracle(x)).abs() < 1e-12);
        prop_assert!((bessel_y0(x).unwrap() - y0_oracle(x)).abs() < 1e-10);
    }

    #[test]
    fn oscillating_kernel_imaginary_part(y in 0.1f64..5.0, r in 0.01f64..3.0) {
        let p = SpectralParameter::positive(y).unwrap();
        let g2 = free_green(2, &p, r).unwrap();
        prop_assert!((g2.im + 0.25 * bessel_j0(y * r).unwrap()).abs() < 1e-14);
        let g3 = free_green(3, &p, r).unwrap();
        prop_assert!((g3.im + (y * r).sin() / (4.0 * PI * r)).abs() < 1e-14);
        prop_assert!((g3.re - (y * r).cos() / (4.0 * PI * r)).abs() < 1e-14 * g3.norm().max(1.0));
    }

    #[test]
    fn reflection_is_an_involution(a in -PI..PI, off in -2.0f64..2.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let plane = Hyperplane::new([a.cos(), a.sin(), 0.0], off).unwrap();
        let p = [x, y, 0.0];
        let q = plane.reflect(&p);
        let back = plane.reflect(&q);
        prop_assert!((back[0] - x).abs() < 1e-12 && (back[1] - y).abs() < 1e-12);
        prop_assert!((plane.signed(&q) + plane.signed(&p)).abs() < 1e-12);
    }
}

#[test]
fn spectral_function_decreases_and_root_is_unique() {
    let pb = Problem::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.1), 2).unwrap();
    let lam = pb.lambda0().unwrap();
    let x0 = [0.2, -0.1, 0.0];
    proptest!(ProptestConfig::with_cases(24), |(alpha in -3.0f64..3.0, a in -30.0f64..0.99, b in -30.0f64..0.99)| {
        let (lo, hi) = if a < b { (a * lam, b * lam) } else { (b * lam, a * lam) };
        prop_assume!(hi - lo > 1e-3);
        let f = |xi: f64| spectral_function(&pb, &x0, alpha, xi).unwrap();
        prop_assert!(f(hi) < f(lo));
        let xi = principal_eigenvalue(&pb, &x0, Coupling::Finite(alpha)).unwrap().xi;
        prop_assert!(xi < lam);
        if lo > xi { prop_assert!(f(lo) < 0.0); }
        if hi < xi { prop_assert!(f(hi) > 0.0); }
    });
}

#[test]
fn regular_part_diverges_at_the_threshold() {
    let pb = Problem::new(&DomainSpec::new(DomainKind::Ball { radius: 1.0 }, 0.1), 2).unwrap();
    let lam = pb.lambda0().unwrap();
    let mut prev = f64::INFINITY;
    for k in 1..8 {
        let xi = lam * (1.0 - 10f64.powi(-k));
        let h = solve_h(&pb, &[0.0; 3], &SpectralParameter::from_xi(xi).unwrap()).unwrap().coincidence;
        assert!(h < prev, "Re h must decrease towards the threshold");
        prev = h;
    }
    assert!(prev < -1e5, "Re h = {prev} near lambda0");
}

#[test]
fn convex_atlas_has_equal_unions() {
    for kind in [DomainKind::Disk { radius: 1.0 }, DomainKind::Rectangle { a: 2.0, b: 1.0 }] {
        let grid = DomainGrid::new(&DomainSpec::new(kind, 0.05)).unwrap();
        let atlas = reflection_atlas(&grid, &AtlasConfig { angles: 32, offsets: 64 }).unwrap();
        assert_eq!(atlas.sigma, atlas.sigma_prime);
    }
}

#[test]
fn disk_admissible_region_is_the_centre() {
    let grid = DomainGrid::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.05)).unwrap();
    let atlas = reflection_atlas(&grid, &AtlasConfig::default_for(2)).unwrap();
    let adm = atlas.admissible(true);
    assert!(adm.count() >= 1);
    assert!(adm.iter().all(|i| {
        let p = grid.pos(i);
        (p[0] * p[0] + p[1] * p[1]).sqrt() <= 1.5 * grid.h
    }));
}

#[test]
fn map_is_independent_of_thread_count() {
    let pb = Problem::new(&DomainSpec::new(DomainKind::Disk { radius: 1.0 }, 0.1), 2).unwrap();
    let run = |n: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| krein::landscape::eigenvalue_map(&pb, Coupling::Finite(0.3), 0.2).unwrap())
    };
    let (a, b) = (run(1), run(4));
    let xa: Vec<u64> = a.samples.iter().map(|s| s.xi.to_bits()).collect();
    let xb: Vec<u64> = b.samples.iter().map(|s| s.xi.to_bits()).collect();
    assert_eq!(xa, xb);
}
