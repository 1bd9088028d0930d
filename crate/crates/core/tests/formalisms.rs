use proptest::prelude::*;
use wvtransfer::analysis::{apodized_moment, ApodizationSpec};
use wvtransfer::formalisms::*;
use wvtransfer::physics::{MeasurementBranch, MeasurementSet, SlitSpec, Wavefunction};
use wvtransfer::transfer::compute_pwv;
use wvtransfer::C64;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn kicked_steps() -> MeasurementSet {
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    MeasurementSet::new(vec![MeasurementBranch::step("a", one, zero, 3.0), MeasurementBranch::step("b", zero, one, -2.0)])
}

#[test]
fn wv_moments_match_apodized_pwv() {
    let psi = Wavefunction::new(&SlitSpec::cosine(1.0, 0.5), 1.0).unwrap();
    let m = kicked_steps();
    let d = compute_pwv(&psi, &m).unwrap();
    let spec = ApodizationSpec::default_for(1.0, 1.0);
    for (n, exact) in [(1, 0.5), (2, 6.5), (3, 9.5)] {
        let wv = moments_wv(&psi, &m, n).unwrap();
        assert!(close(wv, exact, 1e-9), "n={n}: {wv}");
        let ap = apodized_moment(&d, n, &spec).unwrap().value.unwrap();
        assert!(close(ap, wv, 1e-3), "n={n}: {ap} vs {wv}");
    }
}

#[test]
fn first_moment_identity_for_localizing_sets() {
    let psi = Wavefunction::new(&SlitSpec::narrow(1.0, 0.02), 1.0).unwrap();
    let m = kicked_steps();
    let wv = moments_wv(&psi, &m, 1).unwrap();
    assert!(close(moments_delta_p(&psi, &m, 1).unwrap().value, wv, 1e-6));
    assert!(close(moments_heisenberg(&psi, &m, 1).unwrap(), wv, 1e-6));
    assert!(close(moments_wigner_local(&psi, &m, 1).unwrap(), wv, 1e-6));
}

#[test]
fn narrow_state_approaches_delta_slits() {
    let beta = 0.8;
    let m = MeasurementSet::phase_kicks(&[(1.0, vec![0.0, 0.0, 0.0, beta])]);
    let sg = 1e-3;
    let psi = Wavefunction::new(&SlitSpec::narrow(1.0, sg), 1.0).unwrap();
    let e = DeltaSlitEnsemble::twin(1.0, sg).unwrap();
    let (a, b) = (compare_report(&psi, &m).unwrap(), compare_report(&e, &m).unwrap());
    for f in [Formalism::Wv, Formalism::Heisenberg, Formalism::WignerLocal, Formalism::BohmLocal] {
        let (ra, rb) = (a.row(f), b.row(f));
        assert!(close(ra.m3.unwrap(), rb.m3.unwrap(), 1e-4), "{f:?}: {ra:?} vs {rb:?}");
    }
    let (da, db) = (a.row(Formalism::DeltaP), b.row(Formalism::DeltaP));
    assert!(da.divergent && db.divergent);
    assert!(close(da.m3.unwrap(), db.m3.unwrap(), 1e-4));
    assert!(a.warnings.is_empty());
}

#[test]
fn fast_variation_is_flagged() {
    let e = DeltaSlitEnsemble::twin(1.0, 0.1).unwrap();
    let m = MeasurementSet::phase_kicks(&[(1.0, vec![0.0, 1e-3, 0.0, 50.0])]);
    assert!(!compare_report(&e, &m).unwrap().warnings.is_empty());
}

#[test]
fn bohm_pushforward_of_cubic_phase_on_slits() {
    let beta = 0.5;
    let psi = Wavefunction::new(&SlitSpec::cosine(1.0, 0.4), 1.0).unwrap();
    let m = MeasurementSet::phase_kicks(&[(1.0, vec![0.0, 0.0, 0.0, beta])]);
    let d = bohm_local_distribution(&psi, &m).unwrap();
    assert!(d.atoms.is_empty());
    assert!((d.total_mass() - 1.0).abs() < 1e-3);
    // ℘ = 3βx² ranges over 3β·[0.3², 0.7²]
    let (lo, hi) = d.core();
    assert!(lo > 3.0 * beta * 0.09 - 1e-2 && hi < 3.0 * beta * 0.49 + 1e-2);
    let mean = d.core_integral(|p| p);
    assert!(close(mean, moments_bohm_local(&psi, &m, 1).unwrap(), 1e-3));
}

fn unitary_set() -> impl Strategy<Value = MeasurementSet> {
    prop::collection::vec((0.1f64..1.0, prop::collection::vec(-3.0f64..3.0, 4)), 1..4).prop_map(|bs| {
        let total: f64 = bs.iter().map(|b| b.0).sum();
        let bs: Vec<(f64, Vec<f64>)> = bs.into_iter().map(|(w, p)| (w / total, p)).collect();
        MeasurementSet::phase_kicks(&bs)
    })
}

fn ensemble() -> impl Strategy<Value = DeltaSlitEnsemble> {
    (0.5f64..2.0, 0.05f64..0.95).prop_map(|(s, w)| {
        DeltaSlitEnsemble::new(vec![(-0.5 * s, w), (0.5 * s, 1.0 - w)], 1e-4).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn first_two_moments_agree_across_formalisms(e in ensemble(), m in unitary_set()) {
        let t = compare_report(&e, &m).unwrap();
        let wv = t.row(Formalism::Wv).clone();
        for r in &t.rows {
            prop_assert!(close(r.m1.unwrap(), wv.m1.unwrap(), 1e-6), "{:?} vs {:?}", r, wv);
            prop_assert!(close(r.m2.unwrap(), wv.m2.unwrap(), 1e-6), "{:?} vs {:?}", r, wv);
        }
        let (h, b) = (t.row(Formalism::Heisenberg).m3.unwrap(), t.row(Formalism::BohmLocal).m3.unwrap());
        prop_assert!(close(h, b, 1e-9));
    }
}
