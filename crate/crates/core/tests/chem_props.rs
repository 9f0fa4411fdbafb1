mod common;

use common::{molecule, rng, shuffled};
use ocsr_core::abbrev::{expand_abbreviations, AbbreviationTable};
use ocsr_core::fingerprint::{morgan_fingerprint, tanimoto};
use ocsr_core::harness::is_stereo_smiles;
use ocsr_core::metrics::{evaluate, EvalPair, MetricsConfig};
use ocsr_core::reward::{combined_reward, reward_batch, RewardConfig};
use ocsr_core::smiles::{canonical_smiles, parse, parse_with_labels, write};
use ocsr_core::{Atom, BondType};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn smiles(seed: u64) -> String {
    write(&molecule(seed)).unwrap()
}

/// A random SMILES, or a near miss of it: stereo dropped, or a character
/// removed (often unparseable).
fn variant(seed: u64) -> String {
    let s = smiles(seed);
    let mut r = rng(seed ^ 0xabc);
    match r.gen_range(0..4) {
        0 => s,
        1 => canonical_smiles(&parse(&s).unwrap(), false).unwrap().text,
        2 if s.len() > 1 => {
            let i = r.gen_range(0..s.len());
            s.char_indices()
                .filter(|&(k, _)| k != i)
                .map(|(_, c)| c)
                .collect()
        }
        _ => smiles(seed.wrapping_add(1)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fingerprint_ignores_atom_order(seed in any::<u64>(), chiral in any::<bool>()) {
        let g = molecule(seed);
        let f = morgan_fingerprint(&g, 2, 2048, chiral).unwrap();
        let mut r = rng(seed);
        for _ in 0..3 {
            prop_assert_eq!(&morgan_fingerprint(&shuffled(&g, &mut r), 2, 2048, chiral).unwrap(), &f);
        }
    }

    #[test]
    fn fingerprint_without_chirality_ignores_stereo(seed in any::<u64>()) {
        let g = molecule(seed);
        prop_assert_eq!(
            morgan_fingerprint(&g, 2, 1024, false).unwrap(),
            morgan_fingerprint(&g.without_stereo(), 2, 1024, false).unwrap()
        );
    }

    #[test]
    fn tanimoto_symmetric_bounded(a in any::<u64>(), b in any::<u64>()) {
        let fa = morgan_fingerprint(&molecule(a), 2, 512, false).unwrap();
        let fb = morgan_fingerprint(&molecule(b), 2, 512, false).unwrap();
        let t = tanimoto(&fa, &fb).unwrap();
        prop_assert_eq!(t, tanimoto(&fb, &fa).unwrap());
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert_eq!(tanimoto(&fa, &fa).unwrap(), 1.0);
    }

    #[test]
    fn reward_identity_range_symmetry(a in any::<u64>(), b in any::<u64>()) {
        let cfg = RewardConfig::default();
        let (x, y) = (variant(a), variant(b));
        let xy = combined_reward(&x, &y, &cfg);
        let yx = combined_reward(&y, &x, &cfg);
        prop_assert!((0.0..=1.0).contains(&xy.r_combined));
        prop_assert_eq!(xy.r_tanimoto, yx.r_tanimoto);
        prop_assert_eq!(xy.r_stereo, yx.r_stereo);
        prop_assert!((xy.r_combined - (0.4 * xy.r_tanimoto + 0.6 * xy.r_stereo)).abs() < 1e-15);
        if !(xy.valid_pred && xy.valid_gt) {
            prop_assert_eq!(xy.r_combined, 0.0);
        }
        let xx = combined_reward(&x, &x, &cfg);
        if xx.valid_pred {
            prop_assert_eq!(xx.r_combined, cfg.w_tanimoto + cfg.w_stereo);
        }
    }

    #[test]
    fn stereo_tier_from_key_and_size(seed in any::<u64>()) {
        let s = smiles(seed);
        let flat = canonical_smiles(&parse(&s).unwrap(), false).unwrap().text;
        let b = combined_reward(&s, &flat, &RewardConfig::default());
        let same = canonical_smiles(&parse(&s).unwrap(), true).unwrap().text == flat;
        prop_assert_eq!(b.r_stereo, if same { 1.0 } else { 0.3 });
        prop_assert_eq!(b.r_tanimoto, 1.0);
    }

    #[test]
    fn expanding_a_label_matches_explicit_group(seed in any::<u64>()) {
        let table = AbbreviationTable::builtin();
        let g = molecule(seed);
        let mut r = rng(seed);
        let label = *table.labels().collect::<Vec<_>>().choose(&mut r).unwrap();
        let frag = table.get(label).unwrap();
        let anchor = r.gen_range(0..g.atoms.len());
        prop_assume!(g.hydrogen_count(anchor) > 0 && g.atoms[anchor].explicit_h.is_none());
        let mut labelled = g.clone();
        let l = labelled.add_atom(Atom::label(label));
        labelled.add_bond(anchor, l, BondType::Single);
        let expanded = expand_abbreviations(&labelled, &table).unwrap();
        prop_assert_eq!(
            expanded.atoms.len(),
            g.atoms.len() + frag.atom_count()
        );
        let text = write(&labelled).unwrap();
        let reparsed = parse_with_labels(&text).unwrap();
        prop_assert_eq!(
            canonical_smiles(&expand_abbreviations(&reparsed, &table).unwrap(), true).unwrap(),
            canonical_smiles(&expanded, true).unwrap()
        );
        prop_assert_eq!(expand_abbreviations(&g, &table).unwrap(), g);
    }

    #[test]
    fn metrics_exact_implies_graph(seeds in prop::collection::vec((any::<u64>(), any::<u64>()), 1..12)) {
        let cfg = MetricsConfig::builtin();
        let mut pairs: Vec<EvalPair> = seeds
            .iter()
            .map(|&(a, b)| EvalPair::new(variant(a), if b % 3 == 0 { smiles(a) } else { variant(b) }))
            .collect();
        let r = evaluate(&pairs, &cfg);
        prop_assert!(r.exact_acc.unwrap() <= r.graph_acc.unwrap());
        prop_assert!(r.stereo_subset <= r.total);
        pairs.reverse();
        prop_assert_eq!(evaluate(&pairs, &cfg), r);
    }
}

#[test]
fn batch_equals_elementwise() {
    let cfg = RewardConfig::default();
    let preds: Vec<String> = (0..120).map(variant).collect();
    let gts: Vec<String> = (0..120).map(|i| variant(i * 7 + 3)).collect();
    let batch = reward_batch(&preds, &gts, &cfg).unwrap();
    for (i, b) in batch.iter().enumerate() {
        assert_eq!(*b, combined_reward(&preds[i], &gts[i], &cfg));
    }
}

#[test]
fn stereo_subset_golden_file() {
    let cfg = MetricsConfig::builtin();
    let text = include_str!("data/stereo_subset_golden.jsonl");
    let mut n = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let s = v["smiles"].as_str().unwrap();
        let want = v["stereo"].as_bool().unwrap();
        assert_eq!(is_stereo_smiles(s), want, "{s}");
        let r = evaluate(&[EvalPair::new(s, s)], &cfg);
        assert_eq!(r.stereo_subset == 1, want, "{s}");
        n += 1;
    }
    assert_eq!(n, 100);
}
