use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use riggedframes::catalog::{sample_kernel, KernelMatrix, MapSpec};
use riggedframes::frame::{analysis, bessel_constant, frame_bounds, frame_operator, synthesis};
use riggedframes::grid::{l2x_inner, l2x_norm, GridFunction, LadderStage, QuadratureGrid};
use riggedframes::schwartz::{pair, seminorm, SeminormIndex, TestFunction};

const N: usize = 16;

fn kernel(which: usize) -> KernelMatrix {
    let spec = match which {
        0 => MapSpec::dirac(),
        1 => MapSpec::fourier(),
        2 => MapSpec::dirac_derivative(),
        3 => MapSpec::weighted_dirac("2+sin(x)").unwrap(),
        4 => MapSpec::weighted_dirac("1+x^2").unwrap(),
        _ => MapSpec::bump_dirac(-1.0, 1.0).unwrap(),
    };
    let grid = QuadratureGrid::for_stage(&LadderStage::standard(N)).unwrap();
    sample_kernel(&spec, &grid, N).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_lies_between_frame_bounds(which in 0usize..6, seed in any::<u64>()) {
        let k = kernel(which);
        let b = frame_bounds(&frame_operator(&k)).unwrap();
        let f = TestFunction::random(N, &mut ChaCha8Rng::seed_from_u64(seed));
        let energy = l2x_norm(&analysis(&k, &f).unwrap(), k.grid()).unwrap().powi(2);
        let norm2 = f.norm().powi(2);
        let slack = 1e-10 * b.upper * norm2;
        prop_assert!(energy >= b.lower * norm2 - slack);
        prop_assert!(energy <= b.upper * norm2 + slack);
    }

    #[test]
    fn scaling_the_kernel_scales_the_bounds(which in 0usize..6, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.hypot(im) > 1e-3);
        let k = kernel(which);
        let c = Complex64::new(re, im);
        let b = frame_bounds(&frame_operator(&k)).unwrap();
        let bc = frame_bounds(&frame_operator(&k.scaled(c))).unwrap();
        let factor = c.norm_sqr();
        prop_assert!((bc.upper - factor * b.upper).abs() <= 1e-10 * factor * b.upper);
        prop_assert!((bc.lower - factor * b.lower).abs() <= 1e-9 * factor * b.upper);
    }

    #[test]
    fn truncation_interlaces_bounds(which in 0usize..6, m in 1usize..N) {
        let k = kernel(which);
        let full = frame_bounds(&frame_operator(&k)).unwrap();
        let part = frame_bounds(&frame_operator(&k.truncated(m).unwrap())).unwrap();
        let tol = 1e-10 * full.upper;
        prop_assert!(part.upper <= full.upper + tol);
        prop_assert!(part.lower >= full.lower - tol);
    }

    #[test]
    fn synthesis_is_adjoint_of_analysis(which in 0usize..6, seed in any::<u64>()) {
        let k = kernel(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = TestFunction::random(N, &mut rng);
        let xi = GridFunction::random(k.node_count(), &mut rng);
        let lhs = pair(&g, &synthesis(&k, &xi).unwrap()).unwrap().conj();
        let rhs = l2x_inner(&xi, &analysis(&k, &g).unwrap(), k.grid()).unwrap();
        let scale = g.norm() * l2x_norm(&xi, k.grid()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * scale.max(1.0));
    }

    #[test]
    fn bessel_constant_bounds_energy(which in 0usize..6, k_index in 0u32..4, seed in any::<u64>()) {
        let k = kernel(which);
        let idx = SeminormIndex(k_index);
        let c = bessel_constant(&frame_operator(&k), idx).unwrap();
        let f = TestFunction::random(N, &mut ChaCha8Rng::seed_from_u64(seed));
        let energy = l2x_norm(&analysis(&k, &f).unwrap(), k.grid()).unwrap();
        prop_assert!(energy <= c * seminorm(&f, idx) * (1.0 + 1e-10));
    }
}
