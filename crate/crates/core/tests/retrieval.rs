mod common;

use std::collections::HashSet;

use common::{counted_rank, exact_ap, exact_map, exact_mrr1};

use eeg_audio::retrieval::{
    average_precision, chance_mrr1, map_score, mrr1, rank_all, similarity_matrix, RankedList, Similarity,
};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn score_matrix(rows: usize, cols: usize, ties: bool) -> impl Strategy<Value = Array2<f64>> {
    let cell = if ties {
        (0u8..4).prop_map(|v| v as f64).boxed()
    } else {
        (-1.0f64..1.0).boxed()
    };
    proptest::collection::vec(cell, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn case() -> impl Strategy<Value = (Array2<f64>, Vec<usize>, Vec<HashSet<usize>>)> {
    (1usize..=100, 1usize..=100, any::<bool>())
        .prop_flat_map(|(q, m, ties)| {
            (
                score_matrix(q, m, ties),
                proptest::collection::vec(0..m, q),
                proptest::collection::vec(proptest::collection::hash_set(0..m, 1..=m.min(6)), q),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_match_counting_oracle((scores, target, relevant) in case()) {
        let lists: Vec<RankedList> = scores
            .rows()
            .into_iter()
            .enumerate()
            .map(|(q, r)| RankedList::from_scores(q, r))
            .collect();
        let rows: Vec<Vec<f64>> = scores.rows().into_iter().map(|r| r.to_vec()).collect();
        for (q, list) in lists.iter().enumerate() {
            for id in 0..rows[q].len() {
                prop_assert_eq!(list.rank_of(id), Some(counted_rank(&rows[q], id)));
            }
            let ap = average_precision(list, &relevant[q]).unwrap();
            prop_assert_eq!(ap, exact_ap(&rows[q], &relevant[q]));
        }
        prop_assert_eq!(mrr1(&lists, &target).unwrap(), exact_mrr1(&rows, &target));
        prop_assert_eq!(map_score(&lists, &relevant).unwrap(), exact_map(&rows, &relevant));
    }

    #[test]
    fn cosine_and_euclidean_agree_on_unit_vectors(
        q in score_matrix(5, 4, false),
        g in score_matrix(12, 4, false),
    ) {
        let unit = |m: &Array2<f64>| {
            let mut m = m.clone();
            for mut r in m.rows_mut() {
                let n = r.dot(&r).sqrt().max(1e-9);
                r /= n;
            }
            m
        };
        let (q, g) = (unit(&q), unit(&g));
        let c = rank_all(q.view(), g.view(), Similarity::Cosine).unwrap();
        let e = rank_all(q.view(), g.view(), Similarity::Euclidean).unwrap();
        for (a, b) in c.iter().zip(&e) {
            // distinct cosine values order the same as distinct distances
            let sa: Vec<f64> = a.scores.clone();
            if sa.windows(2).all(|w| w[0] - w[1] > 1e-9) {
                prop_assert_eq!(&a.ids, &b.ids);
            }
        }
    }

    #[test]
    fn cosine_ranking_ignores_positive_rescaling(
        q in score_matrix(4, 3, false),
        g in score_matrix(10, 3, false),
        scale in proptest::collection::vec(0.01f64..100.0, 10),
    ) {
        let mut g2 = g.clone();
        for (mut r, s) in g2.rows_mut().into_iter().zip(&scale) {
            r *= *s;
        }
        let a = similarity_matrix(q.view(), g.view(), Similarity::Cosine).unwrap();
        let b = similarity_matrix(q.view(), g2.view(), Similarity::Cosine).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

proptest! {
    #[test]
    fn rational_rounding_agrees_with_ieee_division(a in 1u64..1 << 40, b in 1u64..1 << 40) {
        prop_assert_eq!(common::Ratio::new(a, b).to_f64(), a as f64 / b as f64);
    }
}

#[test]
fn single_item_gallery_always_ranks_first() {
    let list = RankedList::from_scores(0, Array1::from(vec![0.3]).view());
    assert_eq!(mrr1(&[list.clone()], &[0]).unwrap(), 1.0);
    assert_eq!(average_precision(&list, &HashSet::from([0])).unwrap(), 1.0);
    assert_eq!(chance_mrr1(1), 1.0);
}

#[test]
fn all_tied_scores_fall_back_to_id_order() {
    let list = RankedList::from_scores(0, Array1::from(vec![0.5; 5]).view());
    assert_eq!(list.ids, vec![0, 1, 2, 3, 4]);
}

#[test]
fn missing_relevant_item_is_an_error() {
    let list = RankedList::from_scores(0, Array1::from(vec![0.1, 0.2]).view());
    assert!(mrr1(&[list.clone()], &[7]).is_err());
    assert!(average_precision(&list, &HashSet::new()).is_err());
}
