use hoermander_core::spectra::norm;
use hoermander_core::trial::trial_rng;
use hoermander_core::{FunctionParam, Lattice, RegularityIndex, SpectralField};
use hoermander_kit::cylinder::Cylinder;
use hoermander_kit::dft;
use hoermander_kit::problem::{Boundary, Geometry, ParabolicProblem};
use hoermander_kit::quotient::{quotient_norm, CgOptions, SubdomainMask};
use num_complex::Complex64;
use proptest::prelude::*;

fn cylinder(strip: bool, neumann: bool) -> Cylinder {
    let g = if strip { Geometry::PeriodicStrip } else { Geometry::Interval };
    let b = if neumann { ParabolicProblem::neumann_boundary(g) } else { Boundary::Dirichlet };
    Cylinder::new(ParabolicProblem::heat(g, 0.5, b).unwrap(), 16).unwrap()
}

fn cg() -> CgOptions {
    CgOptions { tol: 1e-11, max_iter: Some(4000) }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lambda_is_linear(strip: bool, neumann: bool, seed in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let cyl = cylinder(strip, neumann);
        let (u, v) = (cyl.trial(seed, 0, 4).unwrap(), cyl.trial(seed, 1, 4).unwrap());
        let a = Complex64::new(re, im);
        let w = SpectralField::new(
            cyl.lattice().clone(),
            u.coeffs().iter().zip(v.coeffs()).map(|(x, y)| a * x + y).collect(),
        ).unwrap();
        let lhs = cyl.pack(&cyl.apply_lambda(&w).unwrap()).unwrap();
        let (lu, lv) = (cyl.pack(&cyl.apply_lambda(&u).unwrap()).unwrap(), cyl.pack(&cyl.apply_lambda(&v).unwrap()).unwrap());
        let rhs: Vec<Complex64> = lu.iter().zip(&lv).map(|(x, y)| a * x + y).collect();
        let scale = rhs.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-10 * scale);
    }

    #[test]
    fn pack_unpack_round_trip(strip: bool, seed in 0u64..1000) {
        let cyl = cylinder(strip, false);
        let data = cyl.apply_lambda(&cyl.trial(seed, 0, 4).unwrap()).unwrap();
        let packed = cyl.pack(&data).unwrap();
        prop_assert_eq!(packed.len(), cyl.data_len());
        prop_assert_eq!(cyl.pack(&cyl.unpack(&packed).unwrap()).unwrap(), packed.clone());
        prop_assert!(cyl.unpack(&packed[1..]).is_err());
    }

    #[test]
    fn quotient_is_homogeneous_and_below_the_ambient_norm(
        seed in 0u64..1000, s in 0.5f64..2.5, theta in -1.0f64..1.0, re in -3.0f64..3.0, im in -3.0f64..3.0,
        density in 0.2f64..0.9,
    ) {
        let lat = Lattice::new(vec![16, 16], vec![1.0, 1.0]).unwrap();
        let idx = RegularityIndex::parabolic(s, FunctionParam::log_power(&[theta]), 2).unwrap();
        let mut rng = trial_rng(seed, 1);
        let u = SpectralField::random(lat.clone(), &mut rng);
        let keep: Vec<bool> = (0..lat.len()).map(|i| i == 0 || rand::Rng::random_bool(&mut rng, density)).collect();
        let mask = SubdomainMask::new(lat.clone(), keep).unwrap();
        let d = mask.restrict(&dft::inverse(u.coeffs(), lat.sizes()));
        let q = quotient_norm(&idx, &d, &mask, cg()).unwrap().value;
        prop_assert!(q <= norm(&idx, &u).unwrap() * (1.0 + 1e-9));
        let a = Complex64::new(re, im);
        let scaled: Vec<Complex64> = d.iter().map(|z| a * z).collect();
        let qa = quotient_norm(&idx, &scaled, &mask, cg()).unwrap().value;
        prop_assert!((qa - a.norm() * q).abs() <= 1e-9 * qa.max(1e-300));
    }

    #[test]
    fn quotient_grows_with_the_mask(seed in 0u64..1000, s in 0.5f64..2.0) {
        let lat = Lattice::new(vec![16, 8], vec![2.0, 1.0]).unwrap();
        let idx = RegularityIndex::isotropic(s, FunctionParam::one(), 2).unwrap();
        let u = SpectralField::random(lat.clone(), &mut trial_rng(seed, 2));
        let values = dft::inverse(u.coeffs(), lat.sizes());
        let small = SubdomainMask::window(lat.clone(), &[6, 4]).unwrap();
        let large = SubdomainMask::window(lat.clone(), &[10, 6]).unwrap();
        let qs = quotient_norm(&idx, &small.restrict(&values), &small, cg()).unwrap().value;
        let ql = quotient_norm(&idx, &large.restrict(&values), &large, cg()).unwrap().value;
        prop_assert!(qs <= ql * (1.0 + 1e-9));
    }
}
