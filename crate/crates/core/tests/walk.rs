use std::sync::OnceLock;

use proptest::prelude::*;

use pivotwalk::models::{FreeGroup, FreeGroupWord, SpaceModel};
use pivotwalk::presets::TreePreset;
use pivotwalk::walk::*;

const F2: FreeGroup = FreeGroup { rank: 2 };

fn w(s: &str) -> FreeGroupWord {
    F2.word(s).unwrap()
}

fn words(list: &[&str]) -> Vec<FreeGroupWord> {
    list.iter().map(|s| w(s)).collect()
}

fn preset() -> &'static TreePreset {
    static P: OnceLock<TreePreset> = OnceLock::new();
    P.get_or_init(|| TreePreset::new(1, 3000).unwrap())
}

#[test]
fn step_distribution_validation() {
    assert_eq!(StepDistribution::<FreeGroupWord>::new(vec![], vec![]).unwrap_err(), WalkError::EmptySupport);
    assert!(matches!(StepDistribution::new(words(&["a", "b"]), vec![0.5, 0.6]), Err(WalkError::Sum(_))));
    assert!(matches!(StepDistribution::new(words(&["a", "b"]), vec![1.0, 0.0]), Err(WalkError::NonPositive(_))));
    assert!(matches!(StepDistribution::new(words(&["a", "a"]), vec![0.5, 0.5]), Err(WalkError::Duplicate(0, 1))));
    assert!(matches!(StepDistribution::new(words(&["a"]), vec![0.5, 0.5]), Err(WalkError::Length(1, 2))));
    let exact = StepDistribution::from_rational(words(&["a", "b", "ab"]), &[(1, 2), (1, 4), (1, 4)]).unwrap();
    assert_eq!(exact.weights(), &[0.5, 0.25, 0.25]);
    assert!(exact.exact_weights().is_some());
    assert!(StepDistribution::from_rational(words(&["a", "b"]), &[(1, 2), (1, 3)]).is_err());
}

#[test]
fn moment_examples() {
    let srw = StepDistribution::uniform(words(&["a", "A", "b", "B"])).unwrap();
    assert_eq!(pth_moment(&srw, 2.0, &F2), 1.0);
    let id = StepDistribution::uniform(words(&[""])).unwrap();
    assert_eq!(pth_moment(&id, 3.0, &F2), 0.0);
    assert_eq!(exponential_moment(&id, 2.0, &F2), 1.0);
    let mix = StepDistribution::new(words(&["a", "ababab"]), vec![0.5, 0.5]).unwrap();
    assert_eq!(pth_moment(&mix, 1.0, &F2), 3.5);
    assert!((exponential_moment(&srw, 1.0, &F2) - std::f64::consts::E).abs() < 1e-15);
    assert!(exponential_moment(&mix, 5.0, &F2).is_finite());
}

#[test]
fn non_elementary_examples() {
    let ab = StepDistribution::uniform(words(&["a", "b"])).unwrap();
    let r = is_non_elementary(&ab, &F2, 1).unwrap();
    assert!(r.found);
    assert_eq!(r.witness, Some((w("a"), w("b"))));
    let a = StepDistribution::uniform(words(&["a"])).unwrap();
    assert!(!is_non_elementary(&a, &F2, 6).unwrap().found);
    let a_inv = StepDistribution::uniform(words(&["a", "A"])).unwrap();
    assert!(!is_non_elementary(&a_inv, &F2, 3).unwrap().found);
    // Needs a product: neither ab nor Ab alone, but ab and Ab are independent.
    let prod = StepDistribution::uniform(words(&["ab", "Ab"])).unwrap();
    assert!(is_non_elementary(&prod, &F2, 1).unwrap().found);
}

#[test]
fn non_arithmetic_examples() {
    let m = StepDistribution::uniform(words(&["a", "b", "ab"])).unwrap();
    let r = is_non_arithmetic(&m, &F2, 2).unwrap();
    assert!(r.found);
    assert_eq!(r.per_depth, vec![(1, true), (2, true)]);
    let a = StepDistribution::uniform(words(&["a"])).unwrap();
    let r = is_non_arithmetic(&a, &F2, 5).unwrap();
    assert!(!r.found);
    let ab = StepDistribution::uniform(words(&["a", "b"])).unwrap();
    let r = is_non_arithmetic(&ab, &F2, 2).unwrap();
    assert_eq!(r.per_depth, vec![(1, false), (2, false)]);
    let srw = StepDistribution::uniform(words(&["a", "A", "b", "B"])).unwrap();
    let r = is_non_arithmetic(&srw, &F2, 2).unwrap();
    assert_eq!(r.per_depth, vec![(1, false), (2, true)]);
}

#[test]
fn exact_decomposition_accounts_for_mass() {
    let m = preset().exact_model().unwrap();
    assert_eq!(m.block_len(), 6 * m.word_len());
    let acc = m.mass_accounting();
    assert_eq!(acc.exact_consistent, Some(true));
    assert!(acc.min_remainder >= 0.0);
    assert!(acc.remainder_on_eta_support >= 0.0);
    // α is far below f64 range; sampling runs on ln α.
    assert!(m.alpha() < 1e-6 && m.ln_alpha() < -20.0);
    let exact = m.alpha_exact().unwrap();
    assert!(exact.numer() > &0.into() && exact.numer() < exact.denom());
    let log2 = exact.numer().bits() as f64 - exact.denom().bits() as f64;
    assert!((m.ln_alpha() / std::f64::consts::LN_2 - log2).abs() <= 1.0);
    // Every Schottky word spells its element over the base alphabet.
    for (i, s) in preset().schottky().iter().enumerate() {
        let spelled = m.schottky_alphabet(i as u32).iter().map(|&k| m.alphabet()[k as usize].clone());
        let prod = spelled.fold(w(""), |acc, g| acc.mul(&g).unwrap());
        assert_eq!(&prod, s);
    }
}

#[test]
fn block_model_validation() {
    let p = preset();
    let s = p.schottky().to_vec();
    assert!(DecomposedModel::block(s.clone(), p.c().clone(), 0.0, p.srw.clone()).is_err());
    assert!(DecomposedModel::block(s.clone(), p.c().clone(), 1.0, p.srw.clone()).is_err());
    assert!(DecomposedModel::block(s.clone(), s[0].clone(), 0.5, p.srw.clone()).is_err());
    assert!(DecomposedModel::block(s[..1].to_vec(), p.c().clone(), 0.5, p.srw.clone()).is_err());
    let m = p.block_model(0.5).unwrap();
    assert_eq!(m.block_len(), 6);
    assert_eq!(m.mass_accounting().min_remainder, 0.0);
}

#[test]
fn sampling_is_deterministic() {
    let m = preset().block_model(0.3).unwrap();
    let a = sample_trajectory(&m, 600, 9, 4);
    assert_eq!(a, sample_trajectory(&m, 600, 9, 4));
    assert_ne!(a.steps, sample_trajectory(&m, 600, 9, 5).steps);
    assert_ne!(a.steps, sample_trajectory(&m, 600, 10, 4).steps);
    // Paths for different n are nested.
    let short = sample_trajectory(&m, 317, 9, 4);
    assert_eq!(short.steps[..], a.steps[..317]);
    let srw = &preset().srw;
    assert_eq!(sample_iid_steps(srw, 50, 3, Stream::Forward, 1), sample_iid_steps(srw, 50, 3, Stream::Forward, 1));
    assert_ne!(sample_iid_steps(srw, 50, 3, Stream::Forward, 1), sample_iid_steps(srw, 50, 3, Stream::Backward, 1));
}

#[test]
fn blocks_reconstruct_steps_and_bookkeeping() {
    let m = preset().block_model(0.4).unwrap();
    for trial in 0..20 {
        let t = sample_trajectory(&m, 6 * 50 + 4, 2, trial);
        let again = Trajectory::from_blocks(&m, t.blocks.clone(), t.len(), t.seed, t.trial, t.stream);
        assert_eq!(again.steps, t.steps);
        let tt = t.schottky_blocks();
        assert!(tt.windows(2).all(|p| p[0] < p[1]));
        for (i, &ti) in tt.iter().enumerate() {
            assert_eq!(t.schottky_count(ti), i + 1);
            assert_eq!(t.schottky_count(ti - 1), i);
            let (a, b) = t.schottky_choice(ti).unwrap();
            let block = &t.steps[6 * (ti - 1)..6 * ti];
            let (sa, sb) = (m.schottky_alphabet(a)[0], m.schottky_alphabet(b)[0]);
            let c = m.c_alphabet()[0];
            assert_eq!(block, &[sa, sa, c, c, sb, sb]);
            assert_eq!(m.eta_indices(block), Some((a, b)));
        }
        // The partial last block is not counted.
        assert!(tt.iter().all(|&ti| ti <= 50));
    }
}

#[test]
fn forced_schottky_block_is_a2c2b2() {
    let p = preset();
    let m = p.block_model(1.0 - 1e-12).unwrap();
    let t = sample_trajectory(&m, 6, 5, 0);
    let (a, b) = t.schottky_choice(1).unwrap();
    let s = p.schottky();
    let g: Vec<FreeGroupWord> = t.steps.iter().map(|&i| m.alphabet()[i as usize].clone()).collect();
    assert_eq!(
        g,
        vec![
            s[a as usize].clone(),
            s[a as usize].clone(),
            p.c().clone(),
            p.c().clone(),
            s[b as usize].clone(),
            s[b as usize].clone()
        ]
    );
}

/// Law of `g₁` under the exact decomposition is `μ` itself.
#[test]
fn first_step_law_matches_base() {
    let m = preset().exact_model().unwrap();
    let mut counts = [0usize; 4];
    let trials = 100_000;
    for trial in 0..trials {
        counts[sample_trajectory(&m, 1, 77, trial).steps[0] as usize] += 1;
    }
    let tv: f64 = counts.iter().map(|&c| (c as f64 / trials as f64 - 0.25).abs()).sum::<f64>() / 2.0;
    assert!(tv <= 0.02, "total variation {tv}");
}

/// Pearson χ² of the joint law of forward and backward first steps.
#[test]
fn forward_and_backward_streams_are_independent() {
    let m = preset().exact_model().unwrap();
    let back = m.reflected(&F2);
    let mut table = [[0f64; 4]; 4];
    let trials = 100_000u64;
    for trial in 0..trials {
        let (b, f) = sample_bidirectional(&back, &m, 1, 78, trial);
        table[b.steps[0] as usize][f.steps[0] as usize] += 1.0;
    }
    let n = trials as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..4).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi2 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let e = rows[i] * cols[j] / n;
            chi2 += (table[i][j] - e).powi(2) / e;
        }
    }
    // 99.9% quantile of χ² with 9 degrees of freedom.
    assert!(chi2 < 27.88, "chi2 {chi2}");
}

#[test]
fn reflected_model_inverts_the_alphabet() {
    let m = preset().block_model(0.5).unwrap();
    let r = m.reflected(&F2);
    for (g, h) in m.alphabet().iter().zip(r.alphabet()) {
        assert_eq!(F2.inverse(g), *h);
    }
    let e = preset().exact_model().unwrap();
    let re = e.reflected(&F2);
    let s0: Vec<u32> = e.schottky_alphabet(0).iter().rev().copied().collect();
    assert_eq!(re.schottky_alphabet(0), &s0[..]);
}

#[test]
fn jsonl_export_has_one_record_per_step() {
    let m = preset().block_model(0.5).unwrap();
    let t = sample_trajectory(&m, 12, 1, 0);
    let disp: Vec<f64> = (0..=12).map(|k| k as f64).collect();
    let mut buf = Vec::new();
    t.write_jsonl(&mut buf, &disp).unwrap();
    let lines: Vec<serde_json::Value> =
        String::from_utf8(buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[0]["index"], 1);
    assert_eq!(lines[11]["displacement"], 12.0);
    assert_eq!(lines[3]["generator"], t.steps[3]);
}

#[test]
fn materialized_positions_match_products() {
    let m = preset().block_model(0.5).unwrap();
    let t = sample_trajectory(&m, 120, 4, 2);
    let mut arena = pivotwalk::models::CayleyArena::new(2).unwrap();
    let root = arena.root();
    let pos = materialize_tree(&mut arena, &tree_letters(m.alphabet()), &t.steps, root).unwrap();
    let mut g = w("");
    for (k, &s) in t.steps.iter().enumerate() {
        g = g.mul(&m.alphabet()[s as usize]).unwrap();
        assert_eq!(arena.word(pos[k + 1]), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn moments_increase_in_p(
        lens in prop::collection::vec(1usize..12, 1..6),
        raw in prop::collection::vec(0.05..1.0f64, 6),
        p in 0.1..4.0f64, dp in 0.0..3.0f64,
    ) {
        let support: Vec<FreeGroupWord> = lens.iter().enumerate()
            .map(|(i, &l)| w(&"a".repeat(l)).mul(&w(&"b".repeat(i + 1))).unwrap())
            .collect();
        let total: f64 = raw[..support.len()].iter().sum();
        let weights = raw[..support.len()].iter().map(|x| x / total).collect();
        let mu = StepDistribution::new(support, weights).unwrap();
        prop_assert!(pth_moment(&mu, p + dp, &F2) >= pth_moment(&mu, p, &F2) * (1.0 - 1e-12));
    }
}
