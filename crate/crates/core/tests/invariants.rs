use proptest::prelude::*;

use scs_collapse::algebra::{det2, max_abs2, SpinRep};
use scs_collapse::cartan::{cartan_decompose_unchecked, lift_kraus};
use scs_collapse::trajectory::step_kraus;
use scs_collapse::KrausPoint;

fn kraus_from(dws: &[[f64; 3]]) -> KrausPoint {
    dws.iter().fold(KrausPoint::identity(), |k, dw| step_kraus(&k, dw, 1.0))
}

fn increments() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-0.3f64..0.3), 1..40)
}

proptest! {
    #[test]
    fn steps_stay_unimodular(dws in increments()) {
        let k = kraus_from(&dws);
        prop_assert!((det2(k.matrix()) - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn cartan_form_recomposes(dws in increments()) {
        let k = kraus_from(&dws);
        let f = cartan_decompose_unchecked(k.matrix());
        prop_assert!(f.a >= 0.0);
        let scale = max_abs2(k.matrix()).max(1.0);
        prop_assert!(max_abs2(&(f.recompose() - k.matrix())) / scale < 1e-9);
        let u = f.povm_direction().0;
        prop_assert!((u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lifted_singular_values_are_exp_weight_times_a(dws in increments(), two_j in 1u32..8) {
        let f = cartan_decompose_unchecked(kraus_from(&dws).matrix());
        let rep = SpinRep::from_twice_j(two_j).unwrap();
        let lifted = lift_kraus(&f, &rep).unwrap();
        let mut got: Vec<f64> = lifted.svd(false, false).singular_values.iter().map(|s| s.ln()).collect();
        got.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let j = two_j as f64 / 2.0;
        for (i, g) in got.iter().enumerate() {
            let expect = (j - i as f64) * f.a;
            prop_assert!((g - expect).abs() < 1e-9 * (1.0 + expect.abs()), "{g} vs {expect}");
        }
    }
}
