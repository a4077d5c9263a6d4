//! Property tests over parsing round-trips and metric invariants.

use proptest::prelude::*;

use regen_core::compiler::{parse_expr, PredExpr, PredicateCall, PredicateId};
use regen_core::metrics::{embedding_diversity, self_bleu, HashEmbedder};
use regen_core::oracle::{parse_answer, AnswerPayload, AnswerSchema};

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,8}"
}

fn phrase(max_words: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..=max_words).prop_map(|ws| ws.join(" "))
}

proptest! {
    #[test]
    fn name_desc_payload_roundtrips(items in prop::collection::vec((phrase(3), phrase(6)), 0..8)) {
        let payload = AnswerPayload::NameDescList(items);
        let block = payload.to_answer_block();
        let reparsed = parse_answer(&block, AnswerSchema::NameDescList).unwrap();
        prop_assert_eq!(reparsed, payload);
    }

    #[test]
    fn per_entity_payload_roundtrips(
        map in prop::collection::btree_map(phrase(2), prop::collection::vec(phrase(4), 0..5), 0..6)
    ) {
        let payload = AnswerPayload::PerEntityValues(map);
        let block = payload.to_answer_block();
        let reparsed = parse_answer(&block, AnswerSchema::PerEntityValueLists).unwrap();
        prop_assert_eq!(reparsed, payload);
    }

    #[test]
    fn self_bleu_stays_in_unit_interval_and_permutation_invariant(
        mut texts in prop::collection::vec(phrase(8), 2..6),
        seed in any::<u64>(),
    ) {
        let forward = self_bleu(&texts, 4).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&forward));

        // Any rotation scores the same corpus.
        let rot = (seed as usize) % texts.len();
        texts.rotate_left(rot);
        let rotated = self_bleu(&texts, 4).unwrap();
        prop_assert!((forward - rotated).abs() < 1e-9);
    }

    #[test]
    fn duplicating_a_text_never_increases_diversity(texts in prop::collection::vec(phrase(8), 2..6), pick in any::<prop::sample::Index>()) {
        let before = 1.0 - self_bleu(&texts, 4).unwrap();
        let mut with_dup = texts.clone();
        with_dup.push(texts[pick.index(texts.len())].clone());
        let after = 1.0 - self_bleu(&with_dup, 4).unwrap();
        prop_assert!(after <= before + 1e-9, "{} > {}", after, before);
    }

    #[test]
    fn embedding_diversity_in_unit_interval(texts in prop::collection::vec(phrase(8), 2..6)) {
        let d = embedding_diversity(&texts, &HashEmbedder::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }
}

fn arb_call() -> impl Strategy<Value = PredicateCall> {
    (0..PredicateId::ALL.len(), prop::collection::vec("[a-z][a-z0-9-]{0,6}", 3))
        .prop_map(|(idx, args)| {
            let pred = PredicateId::ALL[idx];
            PredicateCall {
                pred,
                args: args.into_iter().take(pred.arity()).collect(),
            }
        })
        .prop_filter("arity", |c| c.args.len() == c.pred.arity())
}

fn arb_expr() -> impl Strategy<Value = PredExpr> {
    let leaf = arb_call().prop_map(PredExpr::Call);
    leaf.prop_recursive(3, 16, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(PredExpr::And),
            prop::collection::vec(inner, 2..4).prop_map(PredExpr::Or),
        ]
    })
}

proptest! {
    #[test]
    fn predicate_exprs_roundtrip_through_display(expr in arb_expr()) {
        let text = expr.to_string();
        let reparsed = parse_expr(&text).unwrap();
        // Display flattens nothing, so the tree itself matches.
        prop_assert_eq!(reparsed.to_string(), text);
    }
}
