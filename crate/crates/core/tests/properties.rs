use irrframe::aniso::{cube_index, AnisoCube, ExpansiveDilation};
use irrframe::nodes::{generate, split, Generator, PeriodicBox};
use irrframe::norms::{seq_norm, Family, SpaceParams, ZdSequence};
use irrframe::window::{build_h, calderon_sum, PainlessConfig, Region};
use irrframe::Complex64;
use proptest::prelude::*;

fn quincunx() -> ExpansiveDilation {
    ExpansiveDilation::from_rows(&[vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap()
}

fn shear() -> ExpansiveDilation {
    ExpansiveDilation::from_rows(&[vec![0.0, -2.0], vec![1.0, 0.0]]).unwrap()
}

fn sequence(entries: &[(i32, i64, i64, f64)]) -> ZdSequence {
    let mut s = ZdSequence::new(2);
    for &(j, k0, k1, v) in entries {
        s.insert(j, vec![k0, k1], Complex64::new(v, 0.0));
    }
    s
}

fn entries() -> impl Strategy<Value = Vec<(i32, i64, i64, f64)>> {
    prop::collection::vec((-2i32..=2, -4i64..4, -4i64..4, 0.01f64..5.0), 1..25)
}

fn params() -> impl Strategy<Value = SpaceParams> {
    (prop_oneof![Just(Family::B), Just(Family::F)], -1.0f64..1.0, 1.0f64..4.0, 1.0f64..4.0)
        .prop_map(|(f, a, p, q)| SpaceParams::new(f, a, p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_powers_compose(i in -4i32..=4, j in -4i32..=4, x in prop::array::uniform2(-3.0f64..3.0)) {
        let a = shear();
        let lhs = a.apply(i, &a.apply(j, &x).unwrap()).unwrap();
        let rhs = a.apply(i + j, &x).unwrap();
        for (l, r) in lhs.iter().zip(&rhs) {
            prop_assert!((l - r).abs() <= 1e-10 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn cube_contains_its_points(j in -3i32..=3, x in prop::array::uniform2(-5.0f64..5.0)) {
        let a = quincunx();
        let k = cube_index(&a, j, &x).unwrap();
        let c = AnisoCube::new(&a, j, &k).unwrap();
        prop_assert!(c.contains(&x));
        prop_assert!((c.volume() - 2f64.powi(j)).abs() <= 1e-12 * 2f64.powi(j));
    }

    #[test]
    fn split_reassembles(seed in 0u64..1000, delta in 0.0f64..0.4) {
        let domain = PeriodicBox::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let mut nodes = generate(&Generator::Jittered { delta, spacing: 0.5 }, &domain, seed).unwrap();
        let set = split(&nodes, &domain).unwrap();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(set.reassemble(), nodes);
        prop_assert!(set.gap() <= 0.5 * 2f64.sqrt() * (0.5 + delta) + 0.05);
    }

    #[test]
    fn sequence_norms_are_homogeneous(e in entries(), t in 0.1f64..10.0, sp in params()) {
        let a = quincunx();
        let s = sequence(&e);
        let n = seq_norm(&s, &a, &sp).unwrap();
        let m = seq_norm(&s.scale(t), &a, &sp).unwrap();
        prop_assert!((m - t * n).abs() <= 1e-10 * t * n);
    }

    #[test]
    fn sequence_norms_are_solid_and_subadditive(e in entries(), f in entries(), sp in params()) {
        let a = quincunx();
        let (s, u) = (sequence(&e), sequence(&f));
        let both = s.abs_sum(&u);
        let ns = seq_norm(&s, &a, &sp).unwrap();
        let nu = seq_norm(&u, &a, &sp).unwrap();
        let nb = seq_norm(&both, &a, &sp).unwrap();
        prop_assert!(nb + 1e-12 >= ns.max(nu));
        prop_assert!(nb <= (ns + nu) * (1.0 + 1e-12));
    }

    #[test]
    fn calderon_sum_is_dilation_invariant(w in prop::array::uniform2(-3.0f64..3.0), j in -2i32..=2) {
        prop_assume!(w[0].hypot(w[1]) > 1e-3);
        let a = shear();
        let v = Region::symmetric_box(&[0.5, 0.5]);
        let dq = PainlessConfig::default_delta(&a, &v).unwrap();
        let h = build_h(&PainlessConfig::new(a.clone(), v, dq)).unwrap();
        let s = calderon_sum(&h, &a, &w, None).unwrap();
        let sj = calderon_sum(&h, &a, &a.apply_transpose(j, &w).unwrap(), None).unwrap();
        prop_assert!(s >= 1.0 - 1e-12);
        prop_assert!((s - sj).abs() <= 1e-10 * s);
    }
}
