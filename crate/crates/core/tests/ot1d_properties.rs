use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use swgmm::ot1d::{model_cdf, transport_map, wasserstein_1d, Distribution, Marginal};
use swgmm::{sample_directions, sliced_wasserstein, Dataset, Direction, GmmModel, SliceData, SliceModel};

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 1..40)
}

fn w(a: &SliceData, b: &SliceData, p: f64) -> f64 {
    wasserstein_1d(Marginal::Samples(a), Marginal::Samples(b), p, 256).unwrap()
}

fn ks(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w1d_is_a_metric(a in samples(), b in samples(), c in samples(), p in 1.0..4.0f64) {
        let (a, b, c) = (
            SliceData::from_values(a).unwrap(),
            SliceData::from_values(b).unwrap(),
            SliceData::from_values(c).unwrap(),
        );
        let ab = w(&a, &b, p);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, w(&b, &a, p));
        prop_assert!(w(&a, &a, p) == 0.0);
        prop_assert!(w(&a, &c, p) <= ab + w(&b, &c, p) + 1e-9);
    }

    #[test]
    fn w1d_of_a_shift_is_the_shift(a in samples(), c in -20.0..20.0f64, p in 1.0..4.0f64) {
        let shifted: Vec<f64> = a.iter().map(|v| v + c).collect();
        let a = SliceData::from_values(a).unwrap();
        let b = SliceData::from_values(shifted).unwrap();
        prop_assert!((w(&a, &b, p) - c.abs()).abs() < 1e-9 * (1.0 + c.abs()) + 1e-9);
    }

    #[test]
    fn transport_map_is_monotone(
        y in prop::collection::vec(-10.0..10.0f64, 1..60),
        mean in -3.0..3.0f64,
        var in 0.1..4.0f64,
        t1 in -8.0..8.0f64,
        dt in 0.0..5.0f64,
    ) {
        let x = SliceModel::new(vec![0.3, 0.7], vec![mean, -mean], vec![var, 1.0]).unwrap();
        let y = SliceData::from_values(y).unwrap();
        prop_assert!(transport_map(&x, &y, t1) <= transport_map(&x, &y, t1 + dt));
    }

    #[test]
    fn sliced_distance_is_symmetric_and_zero_on_self(
        pts in prop::collection::vec(-5.0..5.0f64, 6..40),
        seed in any::<u64>(),
    ) {
        let n = pts.len() / 2;
        let a = Dataset::new(2, pts[..2 * n].to_vec(), None).unwrap();
        let b = a.translated(&[0.5, -1.0]).unwrap();
        let ab = sliced_wasserstein(Distribution::Data(&a), Distribution::Data(&b), 2.0, 16, 128, seed).unwrap();
        let ba = sliced_wasserstein(Distribution::Data(&b), Distribution::Data(&a), 2.0, 16, 128, seed).unwrap();
        prop_assert_eq!(ab, ba);
        let aa = sliced_wasserstein(Distribution::Data(&a), Distribution::Data(&a), 2.0, 16, 128, seed).unwrap();
        prop_assert!(aa < 1e-9);
    }
}

#[test]
fn shift_map_between_gaussians() {
    let y_model = GmmModel::gaussian(DVector::from_element(1, 1.0), DMatrix::identity(1, 1)).unwrap();
    let y = swgmm::sample(&y_model, 100_000, 3).unwrap();
    let y = SliceData::from_values(y.values().to_vec()).unwrap();
    let x = SliceModel::new(vec![1.0], vec![0.0], vec![1.0]).unwrap();
    for i in 0..=40 {
        let t = -2.0 + 0.1 * i as f64;
        assert!((transport_map(&x, &y, t) - (t + 1.0)).abs() < 0.05, "t = {t}");
    }
}

#[test]
fn map_to_own_quantiles_is_identity() {
    let x = SliceModel::new(vec![0.4, 0.6], vec![-1.0, 2.0], vec![0.5, 1.5]).unwrap();
    let n = 20_000;
    let q: Vec<f64> = (0..n)
        .map(|i| swgmm::ot1d::model_quantile(&x, (i as f64 + 0.5) / n as f64))
        .collect();
    let y = SliceData::from_values(q).unwrap();
    for i in 0..=30 {
        let t = -3.0 + 0.2 * i as f64;
        assert!((transport_map(&x, &y, t) - t).abs() < 1e-2, "t = {t}");
    }
}

#[test]
fn pushforward_matches_target() {
    // f(T) for T drawn from the model slice should be distributed like the data
    let x_model = GmmModel::new(
        vec![0.5, 0.5],
        vec![DVector::from_element(1, -2.0), DVector::from_element(1, 1.0)],
        vec![DMatrix::identity(1, 1), DMatrix::identity(1, 1) * 0.25],
    )
    .unwrap();
    let y_model = GmmModel::gaussian(DVector::from_element(1, 3.0), DMatrix::identity(1, 1) * 2.0).unwrap();
    let y = SliceData::from_values(swgmm::sample(&y_model, 100_000, 5).unwrap().values().to_vec()).unwrap();
    let x = swgmm::slice_model(&x_model, &Direction::new(vec![1.0]).unwrap()).unwrap();
    let t = swgmm::sample(&x_model, 100_000, 6).unwrap();
    let mut pushed: Vec<f64> = t.values().iter().map(|&t| transport_map(&x, &y, t)).collect();
    pushed.sort_by(f64::total_cmp);
    let ys = y.points();
    let stat = ks(&pushed, |v| ys.partition_point(|&p| p <= v) as f64 / ys.len() as f64);
    assert!(stat < 0.02, "KS = {stat}");
}

#[test]
fn model_cdf_is_consistent_with_sampling() {
    let x = SliceModel::new(vec![0.2, 0.8], vec![-3.0, 1.0], vec![0.3, 2.0]).unwrap();
    let model = GmmModel::new(
        vec![0.2, 0.8],
        vec![DVector::from_element(1, -3.0), DVector::from_element(1, 1.0)],
        vec![DMatrix::identity(1, 1) * 0.3, DMatrix::identity(1, 1) * 2.0],
    )
    .unwrap();
    let mut s = swgmm::sample(&model, 50_000, 8).unwrap().values().to_vec();
    s.sort_by(f64::total_cmp);
    assert!(ks(&s, |t| model_cdf(&x, t)) < 0.02);
}

#[test]
fn translated_clouds_give_norm_over_dimension() {
    let base = GmmModel::gaussian(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
    let a = swgmm::sample(&base, 5_000, 1).unwrap();
    let b = a.translated(&[2.0, 0.0]).unwrap();
    let sw = sliced_wasserstein(Distribution::Data(&a), Distribution::Data(&b), 2.0, 2000, 256, 4).unwrap();
    let sw2 = sw * sw;
    assert!((sw2 - 2.0).abs() < 0.1, "SW^2 = {sw2}");
}

#[test]
fn orthogonal_invariance_in_distribution() {
    let model = GmmModel::new(
        vec![0.3, 0.7],
        vec![DVector::from_vec(vec![1.0, 0.0, -1.0]), DVector::from_vec(vec![-2.0, 1.0, 0.5])],
        vec![DMatrix::identity(3, 3), DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 2.0, 1.0]))],
    )
    .unwrap();
    let data = swgmm::sample(&model, 2_000, 2).unwrap();
    // rotation from the QR factor of a fixed matrix
    let q = DMatrix::from_row_slice(3, 3, &[0.3, -1.2, 0.7, 2.0, 0.1, -0.4, 0.5, 0.9, 1.1]).qr().q();
    let rot_model = GmmModel::new(
        model.weights().to_vec(),
        model.means().iter().map(|m| &q * m).collect(),
        model.covariances().iter().map(|c| &q * c * q.transpose()).collect(),
    )
    .unwrap();
    let rows: Vec<Vec<f64>> = data.rows().map(|r| (&q * DVector::from_row_slice(r)).iter().copied().collect()).collect();
    let rot_data = Dataset::from_rows(&rows, None).unwrap();
    let stats = |m: &GmmModel, d: &Dataset| {
        let v: Vec<f64> = (0..20)
            .map(|s| sliced_wasserstein(Distribution::Model(m), Distribution::Data(d), 2.0, 30, 256, s).unwrap())
            .collect();
        let mean = v.iter().sum::<f64>() / 20.0;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 19.0;
        (mean, var / 20.0)
    };
    let (m1, se1) = stats(&model, &data);
    let (m2, se2) = stats(&rot_model, &rot_data);
    assert!((m1 - m2).abs() < 3.0 * (se1 + se2).sqrt(), "{m1} vs {m2}");
}

#[test]
fn directions_are_reproducible() {
    let a = sample_directions(4, 10, 123).unwrap();
    let b = sample_directions(4, 10, 123).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample_directions(4, 10, 124).unwrap());
}
