use contextmine_core::evaluation::{
    compute_report, match_all, normalized_levenshtein, redundancy, GoldItem, GoldStandard,
    Prediction, DEFAULT_TAU,
};
use contextmine_core::resolution::Normalizer;
use proptest::prelude::*;

const NAMES: &[&str] = &[
    "ACE 2005",
    "ACE-2005",
    "ace05",
    "RAMS",
    "Rams dataset",
    "MAVEN",
    "MAVEN (v1)",
    "WikiEvents",
    "Wiki Events",
    "TAC KBP 2015",
    "TACKBP 2015",
    "DocEE",
    "DocEEs",
    "GENIA",
    "Genia 2011",
    "MUC-4",
    "MUC4",
    "DuEE",
    "DuEE1.0",
];

fn surface() -> impl Strategy<Value = String> {
    prop::string::string_regex(r#"[ A-Za-z0-9\-_.,()\[\]"'/&\u{FB01}\u{FF21}\u{E9}\u{301}]{0,30}"#)
        .unwrap()
}

fn prediction() -> impl Strategy<Value = Prediction> {
    (
        prop::sample::select(NAMES),
        prop::collection::vec(prop::sample::select(NAMES), 0..2),
        any::<bool>(),
    )
        .prop_map(|(name, aliases, trusted)| Prediction {
            name: name.to_string(),
            aliases: aliases.into_iter().map(str::to_string).collect(),
            family_id: None,
            trusted,
            has_pid: false,
        })
}

fn gold() -> impl Strategy<Value = GoldStandard> {
    prop::sample::subsequence(NAMES.to_vec(), 1..8)
        .prop_filter_map("colliding gold names", |names| {
            GoldStandard::new("q", names.into_iter().map(GoldItem::named).collect()).ok()
        })
}

proptest! {
    #[test]
    fn normalization_is_idempotent(s in surface()) {
        let n = Normalizer::default();
        if let Ok(k) = n.normalize(&s) {
            prop_assert_eq!(n.normalize(k.as_str()).unwrap(), k.clone());
            prop_assert!(!k.as_str().starts_with(' ') && !k.as_str().ends_with(' '));
            prop_assert!(k.as_str().chars().all(|c| c == ' ' || c.is_alphanumeric()));
        }
    }

    #[test]
    fn tiers_are_nested(preds in prop::collection::vec(prediction(), 0..12), g in gold(), tau in 0.5f64..=1.0) {
        let n = Normalizer::default();
        let sets = match_all(&preds, &g, &n, tau, normalized_levenshtein);
        prop_assert!(sets.exact.is_subset(&sets.norm));
        prop_assert!(sets.norm.is_subset(&sets.fuzzy));
        let r = compute_report(0, 0, &preds, &g, &sets, tau).unwrap();
        prop_assert!(r.fuzzy_gain >= 0.0);
        prop_assert!(r.fuzzy_recall <= 100.0);
    }

    #[test]
    fn tau_one_is_norm(preds in prop::collection::vec(prediction(), 0..12), g in gold()) {
        let sets = match_all(&preds, &g, &Normalizer::default(), 1.0, normalized_levenshtein);
        prop_assert_eq!(sets.fuzzy, sets.norm);
    }

    #[test]
    fn lower_tau_never_loses_matches(preds in prop::collection::vec(prediction(), 0..12), g in gold()) {
        let n = Normalizer::default();
        let strict = match_all(&preds, &g, &n, DEFAULT_TAU, normalized_levenshtein);
        let loose = match_all(&preds, &g, &n, 0.0001, normalized_levenshtein);
        prop_assert!(strict.norm == loose.norm);
        prop_assert!(loose.fuzzy.len() >= strict.norm.len());
    }

    #[test]
    fn recall_ignores_prediction_order(
        preds in prop::collection::vec(prediction(), 0..12),
        g in gold(),
        seed in any::<u64>(),
    ) {
        let n = Normalizer::default();
        let mut shuffled = preds.clone();
        // deterministic Fisher-Yates from the seed
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let a = match_all(&preds, &g, &n, 1.0, normalized_levenshtein);
        let b = match_all(&shuffled, &g, &n, 1.0, normalized_levenshtein);
        prop_assert_eq!((a.exact, a.norm), (b.exact, b.norm));
    }

    #[test]
    fn redundancy_is_nonnegative(entities in 0usize..500, extra in 0usize..500) {
        let r = redundancy(entities + extra, entities).unwrap();
        prop_assert!(r >= 0.0);
        prop_assert_eq!(r, extra as f64 / entities.max(1) as f64);
    }

    #[test]
    fn similarity_bounds(a in "[a-z ]{0,12}", b in "[a-z ]{0,12}") {
        let s = normalized_levenshtein(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, normalized_levenshtein(&b, &a));
        prop_assert_eq!(s == 1.0, a == b);
    }
}
