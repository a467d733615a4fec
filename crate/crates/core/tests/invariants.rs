use proptest::prelude::*;

use polythresh::convext::extend_1d;
use polythresh::cramer::CramerEvaluator1D;
use polythresh::geometry::{
    hull_membership, tukey_depth_1d, tukey_depth_2d, tukey_depth_sampled, HullStatus,
    DEFAULT_HULL_TOL,
};
use polythresh::lattice::{decompose_ball, facet_set};
use polythresh::measures::{
    validate_log_concave, Atom, FiniteAtomicLaw, LatticeBallLaw, Measure, Pmf1D,
    DEFAULT_ENUMERATION_CAP,
};
use polythresh::simulate::{estimate_f, ExperimentConfig, MassMethod, MeasureSpec};

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, 1..12)
}

// log-weights k ↦ -Σ_{j<k} s_j with nondecreasing slopes s_j
fn concave_log_weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 0..10).prop_map(|mut s| {
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut lw = vec![0.0];
        for v in s {
            let last = *lw.last().unwrap();
            lw.push(last - v);
        }
        lw
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_masses_sum_to_one(k_min in -20i64..20, w in weights()) {
        let pmf = Pmf1D::from_weights(k_min, &w).unwrap();
        let total: f64 = pmf.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(pmf.k_max() - pmf.k_min() + 1, w.len() as i64);
    }

    #[test]
    fn concave_log_weights_are_log_concave(lw in concave_log_weights()) {
        let pmf = Pmf1D::from_log_weights(0, lw).unwrap();
        prop_assert!(validate_log_concave(&pmf).is_log_concave);
        let ext = extend_1d(&pmf).unwrap();
        for (k, _) in pmf.iter() {
            prop_assert!((ext.eval(k as f64) - pmf.g(k)).abs() < 1e-12);
        }
        // the extension is convex and dominated by e^{-g} summed with slack
        for w in ext.slopes().windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-12);
        }
        prop_assert!(ext.integral().value <= 1.0 + 1e-12);
    }

    #[test]
    fn cramer_is_nonnegative_and_convex(k_min in -5i64..5, w in weights()) {
        let pmf = Pmf1D::from_weights(k_min, &w).unwrap();
        let (a, b) = (pmf.k_min() as f64, pmf.k_max() as f64);
        let ev = CramerEvaluator1D::new(pmf.clone());
        prop_assert!(ev.cramer_1d(pmf.mean()) < 1e-9);
        let xs: Vec<f64> = (0..=40).map(|i| a + (b - a) * i as f64 / 40.0).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| ev.cramer_1d(x)).collect();
        for v in &vals {
            prop_assert!(*v >= 0.0);
        }
        for w in vals.windows(3) {
            if w.iter().all(|v| v.is_finite()) {
                prop_assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-9);
            }
        }
        prop_assert!(ev.cramer_1d(a - 0.5).is_infinite());
        prop_assert!(ev.cramer_1d(b + 0.5).is_infinite());
    }

    #[test]
    fn depth_below_cramer_bound(k_min in -5i64..5, w in weights(), t in 0.0f64..1.0) {
        let pmf = Pmf1D::from_weights(k_min, &w).unwrap();
        let x = pmf.k_min() as f64 + t * (pmf.k_max() - pmf.k_min()) as f64;
        let ev = CramerEvaluator1D::new(pmf.clone());
        prop_assert!(tukey_depth_1d(&pmf, x) <= (-ev.cramer_1d(x)).exp() + 1e-12);
    }

    #[test]
    fn hull_witnesses_verify(
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..15),
        x in prop::collection::vec(-1.2f64..1.2, 3),
    ) {
        let w = hull_membership(&x, &pts, DEFAULT_HULL_TOL).unwrap();
        match w.status {
            HullStatus::Inside => {
                let c = w.coefficients.unwrap();
                prop_assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                for j in 0..3 {
                    let r: f64 = pts.iter().zip(&c).map(|(p, ci)| p[j] * ci).sum();
                    prop_assert!((r - x[j]).abs() < 1e-9);
                }
                prop_assert!(c.iter().all(|v| *v >= -1e-9));
            }
            HullStatus::Outside => {
                let (th, off) = w.separator.unwrap();
                let dot = |p: &[f64]| p.iter().zip(&th).map(|(a, b)| a * b).sum::<f64>();
                prop_assert!(dot(&x) > off);
                prop_assert!(pts.iter().all(|p| dot(p) <= off + 1e-9));
            }
            HullStatus::Marginal => {}
        }
    }

    #[test]
    fn sampled_depth_bounds_exact_depth(
        pts in prop::collection::btree_set((-3i32..3, -3i32..3), 1..12),
        x in prop::collection::vec(-2.0f64..2.0, 2),
        seed in any::<u64>(),
    ) {
        let atoms: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0 as f64, p.1 as f64]).collect();
        let law = FiniteAtomicLaw::uniform(atoms).unwrap();
        let exact = tukey_depth_2d(&law, &x).unwrap();
        let sampled = tukey_depth_sampled(&law, &x, 64, seed).unwrap();
        prop_assert!(exact <= sampled + 1e-12);
        prop_assert!((0.0..=1.0).contains(&exact));
    }

    #[test]
    fn ball_decomposition_partitions(n in 1usize..8, k in 1u64..4, squared in any::<bool>()) {
        prop_assume!(k as usize <= n);
        let (r, p) = if squared { ((k as f64).sqrt(), 2.0) } else { (k as f64, 1.0) };
        let law = LatticeBallLaw::new(n, r, p).unwrap();
        let d = decompose_ball(&law).unwrap();
        let pts = law.enumerate(DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert_eq!(d.m_n, pts.len() as u128);
        prop_assert_eq!(d.m_n, d.a_n_size + d.residual_size);
        prop_assert!(d.c_n > 0.0 && d.c_n <= 1.0);
    }

    #[test]
    fn facets_are_supporting(n in 2usize..7, k in 1u64..4, signs in any::<u8>(), shift in 0usize..7) {
        prop_assume!(k as usize <= n);
        let law = LatticeBallLaw::new(n, k as f64, 1.0).unwrap();
        let mut x = vec![0i64; n];
        for i in 0..k as usize {
            x[(i + shift) % n] = if signs >> i & 1 == 1 { 1 } else { -1 };
        }
        let facet = facet_set(&x, &law).unwrap();
        let pts = law.enumerate(DEFAULT_ENUMERATION_CAP).unwrap();
        let dot = |y: &[i64]| y.iter().zip(&x).map(|(a, b)| a * b).sum::<i64>();
        // the functional ⟨x, ·⟩ is maximized exactly on the facet set
        prop_assert!(pts.iter().all(|y| dot(y) <= k as i64));
        let on_face = pts.iter().filter(|y| dot(y) == k as i64).count();
        prop_assert_eq!(facet.len(), on_face);
        prop_assert!(facet.iter().all(|y| law.contains(y) && dot(y) == k as i64));
        prop_assert!(facet.contains(&x));
    }

    #[test]
    fn measure_json_round_trip(k_min in -50i64..50, w in weights()) {
        let m: Measure<f64> = Measure::Pmf1D(Pmf1D::from_weights(k_min, &w).unwrap());
        let back = Measure::<f64>::from_json(&m.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn atomic_json_round_trip(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..6),
    ) {
        let law = FiniteAtomicLaw::uniform(pts).unwrap();
        let m: Measure<f64> = Measure::FiniteAtomic(law.clone());
        let Measure::FiniteAtomic(back) = Measure::<f64>::from_json(&m.to_json().unwrap()).unwrap()
        else {
            panic!("wrong variant");
        };
        // probabilities travel as log-masses, so equality is up to rounding
        prop_assert_eq!(back.len(), law.len());
        for (a, b) in back.atoms().iter().zip(law.atoms()) {
            prop_assert_eq!(&a.point, &b.point);
            prop_assert!((a.prob - b.prob).abs() <= 1e-15 * b.prob);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn captured_mass_monotone_in_sample_size(n in 2usize..9, seed in any::<u64>()) {
        let cfg = ExperimentConfig::new(MeasureSpec::Cube { n }, MassMethod::ExactCube)
            .with_n_grid(vec![1, 3, 10, 40, 200])
            .with_trials(50)
            .with_seed(seed);
        let rows = estimate_f(&cfg).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[0].f_hat <= w[1].f_hat);
        }
    }
}

#[test]
fn atom_probabilities_are_normalized() {
    let law = FiniteAtomicLaw::from_weights(vec![
        Atom { point: vec![0.0, 0.0], prob: 1.0 },
        Atom { point: vec![1.0, 0.0], prob: 3.0 },
    ])
    .unwrap();
    let total: f64 = law.atoms().iter().map(|a| a.prob).sum();
    assert!((total - 1.0).abs() < 1e-15);
}
