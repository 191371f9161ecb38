use flowcsma::oracle::{LineRates, SaturationConstants};
use flowcsma::region3::*;

const FIXTURE: &str = include_str!("fixtures/saturation_line3_050_010_050.txt");

#[test]
fn fixture_point_is_stable_through_first_condition() {
    let c = SaturationConstants::from_fixture(FIXTURE).unwrap();
    assert!(c.max_truncation_error() < 1e-4);
    let v = region3_verdict(&c.rates, &c).unwrap();
    assert_eq!(v.class, RegionClass::PositiveRecurrent);
    assert_eq!(v.branch, Some(1));
    assert!(0.1 < symmetric_boundary(&c).unwrap());
}

#[test]
fn fixture_constants_satisfy_conservation() {
    let c = SaturationConstants::from_fixture(FIXTURE).unwrap();
    let (p0, p13) = (c.pi0.unwrap().value, c.pi13.unwrap().value);
    // Link 1 carries rho1: busy with link 3 at full rate, alone at half rate.
    let rho = 0.5;
    let both_busy = 1.0 - p0 - p13;
    assert!((both_busy + p13 / 4.0 - rho).abs() < 1e-8);
    // Link 2 carries rho2 at half rate while link 1 is idle.
    let pi21 = c.pi21.unwrap().value;
    assert!((pi21 - (1.0 - 2.0 * 0.1 / (1.0 - rho))).abs() < 1e-8);
}

#[test]
fn middle_constant_matches_throughput_balance() {
    for (r1, r2) in [(0.2, 0.1), (0.4, 0.2), (0.6, 0.05)] {
        let rates = LineRates::from_loads([r1, r2, 0.3]).unwrap();
        let c = SaturationConstants::available(&rates, &[60, 120]).unwrap();
        let pi21 = c.pi21.unwrap().value;
        assert!((pi21 - (1.0 - 2.0 * r2 / (1.0 - r1))).abs() < 1e-7, "{r1} {r2}: {pi21}");
    }
}

#[test]
fn verdict_is_mirror_symmetric() {
    for rho in [[0.2, 0.1, 0.62], [0.3, 0.3, 0.3], [0.7, 0.1, 0.2], [0.1, 0.4, 0.56]] {
        let r = LineRates::from_loads(rho).unwrap();
        let m = r.mirrored();
        let a = region3_verdict(&r, &SaturationConstants::available(&r, &[50, 100]).unwrap()).unwrap();
        let b = region3_verdict(&m, &SaturationConstants::available(&m, &[50, 100]).unwrap()).unwrap();
        assert_eq!(a.class, b.class, "{rho:?}");
        assert_eq!(a.case.number, b.case.number);
        assert_eq!(a.branch.map(|x| [0, 1, 3, 2][x as usize]), b.branch);
    }
}

#[test]
fn second_condition_with_heavy_third_link() {
    // rho3 above (1 + rho1) / 2 but within the pi21 allowance.
    let r = LineRates::from_loads([0.2, 0.1, 0.62]).unwrap();
    let c = SaturationConstants::available(&r, &[50, 100]).unwrap();
    let pi21 = c.pi21.as_ref().unwrap().value;
    assert!(0.62 < 0.6 + 0.4 * pi21);
    let v = region3_verdict(&r, &c).unwrap();
    assert_eq!(v.class, RegionClass::PositiveRecurrent);
    assert_eq!(v.branch, Some(2));
    assert_eq!(v.case.number, 2);
}

#[test]
fn critical_outer_line_uses_limit_constants() {
    // rho3 = (1 + rho1) / 2 exactly: pi0 = 0, pi13 = 1 - rho1.
    let r = LineRates::from_loads([0.2, 0.3, 0.6]).unwrap();
    let c = SaturationConstants::available(&r, &[50, 100]).unwrap();
    let v = region3_verdict(&r, &c).unwrap();
    assert_eq!(v.case.number, 3);
    assert_eq!(v.pi0, Some(0.0));
    assert!((v.pi13.unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(v.class, RegionClass::PositiveRecurrent);
    let r = LineRates::from_loads([0.2, 0.45, 0.6]).unwrap();
    let c = SaturationConstants::available(&r, &[50, 100]).unwrap();
    assert_eq!(region3_verdict(&r, &c).unwrap().class, RegionClass::Transient);
}

fn fluid_agrees(rho: [f64; 3]) {
    let r = LineRates::from_loads(rho).unwrap();
    let c = SaturationConstants::available(&r, &[50, 100]).unwrap();
    let v = region3_verdict(&r, &c).unwrap();
    let paths: Vec<_> = FluidState::simplex_grid(5)
        .iter()
        .map(|b| fluid_trajectory(b, &r, &c, 1e9).unwrap())
        .collect();
    match v.class {
        RegionClass::PositiveRecurrent => {
            assert!(paths.iter().all(|p| p.empties()), "{rho:?}: {paths:?}")
        }
        RegionClass::Transient => assert!(paths.iter().any(|p| p.diverges()), "{rho:?}"),
        RegionClass::Boundary => {}
    }
}

#[test]
fn fluid_paths_agree_with_verdict_off_diagonal() {
    for rho in [
        [0.2, 0.1, 0.62],
        [0.2, 0.1, 0.75],
        [0.2, 0.45, 0.3],
        [0.6, 0.1, 0.3],
        [0.1, 0.6, 0.2],
        [0.9, 0.02, 1.0],
        [1.3, 0.1, 0.5],
        [0.4, 0.35, 0.69],
    ] {
        fluid_agrees(rho);
    }
}

#[test]
fn middle_queue_grows_above_boundary() {
    let r = LineRates::from_loads([0.1, 0.9, 0.1]).unwrap();
    let c = SaturationConstants::available(&r, &[50, 100]).unwrap();
    let p = fluid_trajectory(&FluidState::new([0.0, 1.0, 0.0]).unwrap(), &r, &c, 1e9).unwrap();
    match p.outcome {
        FluidOutcome::Diverges { drift } => {
            let b = symmetric_boundary(&c).unwrap();
            assert!((drift[1] - (0.9 - b)).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
}
