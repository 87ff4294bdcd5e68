use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pivotwalk::geometry::*;
use pivotwalk::models::{FreeGroup, FreeGroupWord, HyperbolicPlane, Letter};

const F2: FreeGroup = FreeGroup { rank: 2 };

fn w(s: &str) -> FreeGroupWord {
    F2.word(s).unwrap()
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> FreeGroupWord {
    let len = rng.random_range(0..=max_len);
    let letters: Vec<Letter> = (0..len).map(|_| [1, -1, 2, -2][rng.random_range(0..4)]).collect();
    FreeGroupWord::from_letters(2, &letters).unwrap()
}

fn word_strategy(max_len: usize) -> impl Strategy<Value = FreeGroupWord> {
    word_between(0, max_len)
}

fn word_between(min_len: usize, max_len: usize) -> impl Strategy<Value = FreeGroupWord> {
    prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), min_len..=max_len)
        .prop_map(|ls| FreeGroupWord::from_letters(2, &ls).unwrap())
}

fn plane_point() -> impl Strategy<Value = Complex64> {
    (-5.0..5.0f64, 0.05..20.0f64).prop_map(|(x, y)| Complex64::new(x, y))
}

#[test]
fn gromov_product_examples() {
    let o = w("");
    assert_eq!(gromov_product(&F2, &o, &w("a"), &w("b")), 0.0);
    assert_eq!(gromov_product(&F2, &o, &w("ab"), &w("a")), 1.0);
    for x in ["", "a", "bA", "abab"] {
        assert_eq!(gromov_product(&F2, &w(x), &w(x), &w("ba")), 0.0);
    }
}

/// The five identities on 10⁴ random triples and quadruples, exactly.
#[test]
fn product_identities_exact_on_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let [x, y, z, u] = std::array::from_fn(|_| random_word(&mut rng, 12));
        let d = |p: &FreeGroupWord, q: &FreeGroupWord| F2.distance(p, q);
        let gp = |base: &FreeGroupWord, p: &FreeGroupWord, q: &FreeGroupWord| gromov_product(&F2, base, p, q);
        assert_eq!(gp(&x, &x, &y), 0.0);
        assert_eq!(gp(&x, &y, &z), gp(&x, &z, &y));
        assert_eq!(d(&x, &y), gp(&x, &y, &z) + gp(&y, &x, &z));
        assert!(0.0 <= gp(&x, &y, &z) && gp(&x, &y, &z) <= d(&x, &y));
        let diff = gp(&x, &y, &z) - gp(&u, &y, &z);
        assert_eq!(diff, d(&x, &u) - gp(&u, &y, &x) - gp(&u, &z, &x));
        assert!(diff.abs() <= d(&x, &u));
        // Half-integers, so every value is exactly representable.
        assert_eq!((2.0 * gp(&x, &y, &z)).fract(), 0.0);
    }
}

#[test]
fn four_point_condition_zero_delta_on_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10_000 {
        let [x, y, z, u] = std::array::from_fn(|_| random_word(&mut rng, 16));
        assert!(check_four_point(&F2, &x, &y, &z, &u, 0.0));
        assert_eq!(four_point_defect(&F2, [&x, &y, &z, &u]), 0.0);
    }
    let o = w("");
    assert!(check_four_point(&F2, &o, &o, &o, &o, 0.0));
}

#[test]
fn four_point_condition_on_plane_within_delta() {
    let h = HyperbolicPlane;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p: [Complex64; 4] = std::array::from_fn(|_| {
            Complex64::new(rng.random_range(-20.0..20.0), (rng.random_range(-6.0..4.0f64)).exp())
        });
        worst = worst.max(four_point_defect(&h, [&p[0], &p[1], &p[2], &p[3]]));
        assert!(check_four_point(&h, &p[0], &p[1], &p[2], &p[3], h.delta()));
    }
    // ln 2 is the sharp four-point constant of H² (ideal quadrilaterals).
    assert!(worst < std::f64::consts::LN_2 + 1e-9, "worst defect {worst}");
}

#[test]
fn witnessing_examples() {
    let o = w("");
    let seg = Segment::new(o.clone(), w("abab"));
    let chain = [Segment::new(o.clone(), w("ab")), Segment::new(w("ab"), w("abab"))];
    assert!(is_witnessed(&F2, &seg, &chain, 1.0).unwrap());
    assert!(is_witnessed(&F2, &seg, std::slice::from_ref(&seg), 1e-3).unwrap());
    // (o, a·o)_{b·o} = 1, so condition (2) already fails at D = 0.5.
    assert_eq!(gromov_product(&F2, &w("b"), &o, &w("a")), 1.0);
    let short = Segment::new(o.clone(), w("a"));
    assert!(!is_witnessed(&F2, &short, &[Segment::new(o.clone(), w("b"))], 0.5).unwrap());
    assert_eq!(is_witnessed(&F2, &short, &[], 1.0), Err(GeometryError::EmptyChain));
}

#[test]
fn gluing_examples() {
    let o = w("");
    let a = Segment::new(o.clone(), w("a"));
    let b = Segment::new(o.clone(), w("b"));
    assert!(is_glued(&F2, &a, &b, 0.5));
    assert!(!is_glued(&F2, &a, &a, 0.5));
    assert!(!is_glued(&F2, &Segment::new(w("b"), w("ba")), &a, 10.0));
}

/// A chain of `a⁴`/`b⁴` steps turning at each corner: `γ_i = [p_i, p_i s_i]`
/// and `η_i = [p_i r_i, p_i]` with `r_i` leaving `p_i` in a third direction.
fn corner_chain(n: usize) -> (Vec<Segment<FreeGroupWord>>, Vec<Segment<FreeGroupWord>>, Vec<FreeGroupWord>) {
    let step = ["aaaa", "bbbb"];
    let back = ["BBBB", "AAAA"];
    let mut p = w("");
    let (mut gammas, mut etas, mut loci) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let s = w(step[i % 2]);
        let r = w(back[i % 2]);
        let next = p.mul(&s).unwrap().mul(&s).unwrap();
        gammas.push(Segment::new(p.clone(), p.mul(&s).unwrap()));
        etas.push(Segment::new(p.mul(&r).unwrap(), p.clone()));
        loci.push(p);
        p = next;
    }
    (gammas, etas, loci)
}

#[test]
fn alignment_examples() {
    let (gammas, etas, loci) = corner_chain(4);
    let a = is_aligned(&F2, &gammas, &etas, 1.0, 2.0).unwrap();
    assert!(a.aligned);
    assert_eq!(a.loci, loci);
    let single = is_aligned(&F2, &gammas[..1], &etas[..1], 1.0, 2.0).unwrap();
    assert!(single.aligned);
    assert_eq!(single.loci, vec![w("")]);
    // η₃ folded back onto γ₂ breaks its witnessing product.
    let mut bad = etas.clone();
    bad[2] = Segment::new(gammas[1].initial.clone(), loci[2].clone());
    assert!(!is_aligned(&F2, &gammas, &bad, 1.0, 2.0).unwrap().aligned);
    assert!(is_aligned(&F2, &gammas, &etas[..3], 1.0, 2.0).is_err());
}

#[test]
fn marking_examples() {
    let o = w("");
    let g = [Segment::new(o.clone(), w("aaaa"))];
    assert!(is_head_marked(&F2, &Segment::new(o.clone(), w("aaaaaaaab")), &g, &[], 1.0, 2.0).unwrap());
    // The terminal backtracks into γ_N: (γ̄, y)_* = 4 ≥ C.
    assert!(!is_head_marked(&F2, &Segment::new(o.clone(), o.clone()), &g, &[], 1.0, 2.0).unwrap());
    assert_eq!(
        is_head_marked(&F2, &Segment::new(o.clone(), w("a")), &[], &[], 1.0, 2.0),
        Err(GeometryError::EmptyGammas)
    );
    let (gammas, etas, loci) = corner_chain(4);
    let end = loci[3].mul(&w("bbbb")).unwrap();
    assert!(is_head_marked(&F2, &Segment::new(o.clone(), end.clone()), &gammas, &etas[1..], 1.0, 2.0).unwrap());
    assert!(
        is_fully_marked(&F2, &Segment::new(o.clone(), loci[3].clone()), &gammas[..3], &etas[1..], 1.0, 2.0).unwrap()
    );
    let start = w("BBBB");
    assert!(is_tail_marked(&F2, &Segment::new(start, loci[3].clone()), &gammas[..3], &etas, 1.0, 2.0).unwrap());
}

#[test]
fn chain_product_bound_examples() {
    let line = [w(""), w("aa"), w("aaaaa")];
    assert_eq!(chain_product_bound(&F2, &line), 0.0);
    assert_eq!(chain_product_bound(&F2, &line[..2]), 0.0);
    let (_, _, loci) = corner_chain(6);
    assert_eq!(chain_product_bound(&F2, &loci), 0.0);
    let mut swapped = loci.clone();
    swapped.swap(2, 4);
    assert!(chain_product_bound(&F2, &swapped) >= 8.0);
}

#[test]
fn constants_ladder_for_free_group() {
    let k = GromovConstants::new(0.0, 10.0).unwrap();
    assert_eq!((k.d0, k.e0, k.f0, k.d3, k.l0), (20.0, 20.0, 40.0, 80.0, 1280.0));
    assert_eq!(k.quasi_geodesic(), (1.25, 240.0));
    assert!(k.validate().is_ok());
    assert!(k.with_l0(2000.0).is_ok());
    assert!(k.with_l0(1000.0).is_err());
    let mut broken = k;
    broken.f0 += 1.0;
    assert!(matches!(broken.validate(), Err(GeometryError::Ladder(_))));
    assert!(GromovConstants::new(-1.0, 1.0).is_err());
    assert!(GromovConstants::new(0.0, f64::NAN).is_err());
}

#[test]
fn constants_ladder_arithmetic() {
    for (delta, c0) in [(0.0, 1.0), (0.7, 3.0), (2.0, 0.5), (0.7, 60.0)] {
        let k = GromovConstants::new(delta, c0).unwrap();
        assert!(k.d0 >= 2.0 * c0 && k.d0 >= c0 + delta + 1.0);
        assert_eq!(k.e0, k.d0 + 4.0 * delta);
        assert_eq!(k.f0, 2.0 * k.e0 + 3.0 * delta);
        assert_eq!(k.l1, 4.0 * k.d0 + 6.0 * delta + 1.0);
        assert_eq!(k.l2, 2.0 * k.e0 + 6.0 * delta + 1.0);
        assert!(k.l0 >= 16.0 * k.d0 + 8.0 * k.f0 + 2.0 * k.g0 + 16.0 * delta + 2.0);
        assert!(k.l0 >= k.l1.max(k.l2).max(k.l3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, max_global_rejects: 1 << 16, ..ProptestConfig::default() })]

    #[test]
    fn tree_metric_axioms(x in word_strategy(14), y in word_strategy(14), z in word_strategy(14)) {
        prop_assert_eq!(F2.distance(&x, &x), 0.0);
        prop_assert_eq!(F2.distance(&x, &y), F2.distance(&y, &x));
        prop_assert!(F2.distance(&x, &z) <= F2.distance(&x, &y) + F2.distance(&y, &z));
        prop_assert_eq!(F2.distance(&x, &y) == 0.0, x == y);
    }

    #[test]
    fn plane_metric_axioms(x in plane_point(), y in plane_point(), z in plane_point()) {
        let h = HyperbolicPlane;
        prop_assert!(h.distance(&x, &x).abs() <= 1e-9);
        prop_assert!((h.distance(&x, &y) - h.distance(&y, &x)).abs() <= 1e-9);
        prop_assert!(h.distance(&x, &z) <= h.distance(&x, &y) + h.distance(&y, &z) + 1e-9);
    }

    #[test]
    fn plane_product_identities(x in plane_point(), y in plane_point(), z in plane_point(), u in plane_point()) {
        let h = HyperbolicPlane;
        let gp = |b: &Complex64, p: &Complex64, q: &Complex64| gromov_product(&h, b, p, q);
        prop_assert!(gp(&x, &x, &y).abs() <= 1e-9);
        prop_assert!((gp(&x, &y, &z) - gp(&x, &z, &y)).abs() <= 1e-9);
        prop_assert!((h.distance(&x, &y) - gp(&x, &y, &z) - gp(&y, &x, &z)).abs() <= 1e-9);
        prop_assert!(gp(&x, &y, &z) >= -1e-9 && gp(&x, &y, &z) <= h.distance(&x, &y) + 1e-9);
        prop_assert!((gp(&x, &y, &z) - gp(&u, &y, &z)).abs() <= h.distance(&x, &u) + 1e-9);
    }

    /// Two small products force `2C`-witnessing on a tree.
    #[test]
    fn small_products_force_witnessing(
        x0 in word_strategy(10), x1 in word_strategy(10), y0 in word_strategy(10), y1 in word_strategy(10),
        c in 0.5..6.0f64,
    ) {
        let hyp = gromov_product(&F2, &x1, &x0, &y1) < c && gromov_product(&F2, &y1, &x0, &y0) < c;
        prop_assume!(hyp);
        let chain = [Segment::new(x0.clone(), x1.clone()), Segment::new(y1.clone(), y0.clone())];
        prop_assert!(is_witnessed(&F2, &Segment::new(x0, y0), &chain, 2.0 * c).unwrap());
    }

    /// Witnessed chains of long segments have small middle products and
    /// definite length.
    #[test]
    fn witnessed_long_chains(
        pieces in prop::collection::vec((word_strategy(2), word_between(16, 24)), 1..5),
        tail in word_strategy(3),
        d in 1.0..4.0f64,
    ) {
        let mut at = FreeGroupWord::identity(2);
        let mut chain = Vec::new();
        for (noise, body) in &pieces {
            at = at.mul(noise).unwrap();
            let end = at.mul(body).unwrap();
            chain.push(Segment::new(at.clone(), end.clone()));
            at = end;
        }
        let seg = Segment::new(FreeGroupWord::identity(2), at.mul(&tail).unwrap());
        let long = chain.iter().all(|s| s.length(&F2) > 3.0 * d + 1.0);
        prop_assume!(long && is_witnessed(&F2, &seg, &chain, d).unwrap());
        let n = chain.len();
        let xs: Vec<_> = std::iter::once(seg.initial.clone()).chain(chain.iter().map(|s| s.initial.clone())).chain([seg.terminal.clone()]).collect();
        let ys: Vec<_> = std::iter::once(seg.initial.clone()).chain(chain.iter().map(|s| s.terminal.clone())).chain([seg.terminal.clone()]).collect();
        for pts in [&xs, &ys] {
            for i in 0..=n + 1 {
                for j in i..=n + 1 {
                    for k in j..=n + 1 {
                        prop_assert!(gromov_product(&F2, &pts[j], &pts[i], &pts[k]) < d);
                    }
                }
            }
        }
        let total: f64 = chain.iter().map(|s| s.length(&F2)).sum();
        prop_assert!(seg.length(&F2) >= total - 3.0 * n as f64 * d);
    }

    #[test]
    fn power_difference_bound_holds(t in 0.0..1e3f64, s in 0.0..1e3f64, p in 0.05..6.0f64) {
        let lhs = (t.powf(p) - s.powf(p)).abs();
        prop_assert!(lhs <= power_difference_bound(t, s, p) * (1.0 + 1e-12) + 1e-9);
    }
}

/// The same scalar inequality on 10⁵ seeded samples.
#[test]
fn power_difference_bound_bulk() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100_000 {
        let (t, s, p) = (rng.random_range(0.0..1e3), rng.random_range(0.0..1e3), rng.random_range(0.05..6.0));
        let lhs = (f64::powf(t, p) - f64::powf(s, p)).abs();
        assert!(lhs <= power_difference_bound(t, s, p) * (1.0 + 1e-12) + 1e-9, "t={t} s={s} p={p}");
    }
}
