use std::collections::HashSet;
use std::sync::OnceLock;

use pivotwalk::models::{FreeGroup, FreeGroupWord, HyperbolicPlane, Moebius, SpaceModel};
use pivotwalk::presets::{standard_probes, TreePreset, SCHOTTKY_TARGET, SUBSET_SIZE};
use pivotwalk::schottky::*;
use pivotwalk::walk::{stream_rng, Stream};

const F2: FreeGroup = FreeGroup { rank: 2 };

fn w(s: &str) -> FreeGroupWord {
    F2.word(s).unwrap()
}

fn preset() -> &'static TreePreset {
    static P: OnceLock<TreePreset> = OnceLock::new();
    P.get_or_init(|| TreePreset::new(1, 3000).unwrap())
}

#[test]
fn preset_set_has_the_target_shape() {
    let p = preset();
    let params = &p.search.params;
    assert_eq!(params.set.len(), SCHOTTKY_TARGET);
    assert_eq!(params.k, 10.0);
    assert!(params.k <= p.constants.c0);
    assert_eq!(params.k_prime, p.constants.l0);
    let distinct: HashSet<_> = params.set.iter().collect();
    assert_eq!(distinct.len(), SCHOTTKY_TARGET);
    let patterns: HashSet<_> = p.search.patterns.iter().collect();
    assert_eq!(patterns.len(), SCHOTTKY_TARGET);
    let r = &p.search.report;
    assert!(r.passed && !r.sampled_only);
    assert!(r.worst_positive <= 2 && r.worst_negative <= 2 && r.worst_single_orbit <= 1);
    assert!(r.certificate.as_ref().unwrap().holds);
    assert!(!p.schottky().contains(p.c()));
    assert_eq!(p.schottky().len(), SUBSET_SIZE);
}

#[test]
fn preset_set_passes_fresh_probes() {
    let p = preset();
    let probes = standard_probes(&p.search.params.set, 2, 6000).unwrap();
    let r = verify_schottky(&p.search.params, &F2, &probes, DEFAULT_POWER_CAP).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.worst_single_orbit <= 1);
    assert_eq!(r.probes, 6000);
}

#[test]
fn every_element_translates_at_least_k_prime() {
    let p = preset();
    for s in &p.search.params.set {
        assert!(F2.translation_length(s) >= p.search.params.k_prime);
        assert!(s.is_cyclically_reduced());
    }
    assert!(p.search.report.min_displacement >= p.search.params.k_prime);
}

#[test]
fn shared_axis_fails() {
    let a = w("a");
    let set = vec![F2.power(&a, 40).unwrap(), F2.power(&a, 80).unwrap()];
    let params = SchottkyParams::new(10.0, 40.0, set).unwrap();
    let probes = vec![(w(&"a".repeat(12)), w("")), (w("b"), w("B"))];
    let r = verify_schottky(&params, &F2, &probes, 8).unwrap();
    assert!(!r.passed);
    assert_eq!(r.worst_single_orbit, 2);
    let cert = r.certificate.unwrap();
    assert!(!cert.holds && !cert.distinct_ray_prefixes);
}

#[test]
fn short_elements_fail_the_displacement_condition() {
    let params = SchottkyParams::new(1.0, 5.0, vec![w("ab"), w("aB")]).unwrap();
    let r = verify_schottky(&params, &F2, &[(w(""), w(""))], 4).unwrap();
    assert!(!r.displacement_ok && !r.passed);
    assert_eq!(r.min_displacement, 2.0);
}

#[test]
fn parameter_errors() {
    assert!(matches!(SchottkyParams::new(1.0, 1.0, vec![w("a")]), Err(SchottkyError::TooSmall)));
    assert!(matches!(SchottkyParams::new(1.0, 1.0, vec![w("a"), w("b"), w("a")]), Err(SchottkyError::Duplicate(0, 2))));
    let params = SchottkyParams::new(1.0, 1.0, vec![w("a"), w("b")]).unwrap();
    assert!(matches!(verify_schottky(&params, &F2, &[], 4), Err(SchottkyError::NoProbes)));
}

#[test]
fn subsets_keep_constants() {
    let params = &preset().search.params;
    let sub = schottky_subset(params, SUBSET_SIZE).unwrap();
    assert_eq!(sub.set[..], params.set[..SUBSET_SIZE]);
    assert_eq!((sub.k, sub.k_prime), (params.k, params.k_prime));
    assert_eq!(schottky_subset(params, SCHOTTKY_TARGET).unwrap().set.len(), SCHOTTKY_TARGET);
    for bad in [0, SCHOTTKY_TARGET + 1] {
        assert!(matches!(schottky_subset(params, bad), Err(SchottkyError::SubsetSize { .. })));
    }
}

#[test]
fn search_rejects_bad_inputs() {
    let none = |_: &[FreeGroupWord]| Ok(vec![(w(""), w(""))]);
    assert!(matches!(search_schottky(&F2, &w("a"), &w("a"), 4, 10.0, 4, none), Err(SchottkyError::NotIndependent)));
    assert!(matches!(search_schottky(&F2, &w("a"), &w("aa"), 4, 10.0, 4, none), Err(SchottkyError::NotIndependent)));
    assert!(matches!(
        search_schottky(&F2, &w("a"), &w("b"), 1025, 10.0, 4, none),
        Err(SchottkyError::TooManyPatterns(1025, 1024))
    ));
}

#[test]
fn small_tree_search_is_certified() {
    let r = search_schottky(&F2, &w("a"), &w("b"), 12, 60.0, 16, |set| standard_probes(set, 5, 400)).unwrap();
    assert_eq!(r.params.set.len(), 12);
    assert_eq!(r.power, 6);
    assert!(r.report.passed && r.report.certificate.unwrap().holds);
}

#[test]
fn certificate_flags_non_reduced_elements() {
    let params = SchottkyParams::new(2.0, 4.0, vec![w("abA"), w("bbbb")]).unwrap();
    let cert = F2.certificate(&params).unwrap();
    assert!(!cert.holds && !cert.all_cyclically_reduced);
    let params = SchottkyParams::new(2.0, 8.0, vec![w("abab"), w("baba")]).unwrap();
    let cert = F2.certificate(&params).unwrap();
    assert_eq!(cert.min_length, 4);
    assert!(!cert.holds);
    assert!(HyperbolicPlane
        .certificate(&SchottkyParams::new(1.0, 1.0, vec![Moebius::IDENTITY, diag(2.0)]).unwrap())
        .is_none());
}

fn diag(t: f64) -> Moebius {
    Moebius::new(t, 0.0, 0.0, 1.0 / t).unwrap()
}

/// Hyperbolic element of translation length `l` along the axis through `i`
/// rotated by `θ`.
fn rotated(l: f64, theta: f64) -> Moebius {
    let (s, c) = theta.sin_cos();
    let r = Moebius::new(c, s, -s, c).unwrap();
    r.mul(&diag((l / 2.0).exp())).mul(&r.inverse())
}

#[test]
fn plane_pair_with_transverse_axes_passes_sampled_check() {
    let set = vec![rotated(12.0, 0.0), rotated(12.0, std::f64::consts::FRAC_PI_4)];
    let params = SchottkyParams::new(3.0, 10.0, set.clone()).unwrap();
    let probes = plane_probes(&set[0], &set[1], 6, 300, &mut stream_rng(3, Stream::Auxiliary, 0));
    let r = verify_schottky(&params, &HyperbolicPlane, &probes, 8).unwrap();
    assert!(r.passed && r.sampled_only, "{r:?}");
    assert!((r.min_displacement - 12.0).abs() < 1e-6);
}

#[test]
fn plane_pair_on_one_axis_fails() {
    let set = vec![rotated(12.0, 0.3), rotated(24.0, 0.3)];
    let params = SchottkyParams::new(3.0, 10.0, set.clone()).unwrap();
    let x = set[0].apply(HyperbolicPlane.basepoint());
    let r = verify_schottky(&params, &HyperbolicPlane, &[(x, HyperbolicPlane.basepoint())], 8).unwrap();
    assert!(!r.passed);
    assert_eq!(r.worst_single_orbit, 2);
}
