use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use qsqs_core::eval::{
    average_precision, log_average_miss_rate, match_detections, ApMode, GroundTruth, ImageEval, MatchFlag,
};
use qsqs_core::geometry::{iou, spatial_overlap};
use qsqs_core::qubo::{bits_to_spins, build_q, negate, qubo_energy, to_ising};
use qsqs_core::solvers::{
    greedy_descent, pick_solution, random_instance, solve_anneal, solve_exhaustive, solve_tabu,
};
use qsqs_core::suppression::{nms, qsqs, soft_nms};
use qsqs_core::{
    AnnealSchedule, BoundingBox, EnhConfig, QsqsWeights, QuboInstance, Sense, SuppressionConfig, TabuParams,
};

fn bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

fn arb_box() -> impl Strategy<Value = [f64; 5]> {
    (0.0..400.0f64, 0.0..400.0f64, 1.0..150.0f64, 1.0..150.0f64, 0.0..=1.0f64)
        .prop_map(|(x, y, w, h, s)| [x, y, x + w, y + h, s])
}

fn boxes(raw: &[[f64; 5]]) -> Vec<BoundingBox> {
    raw.iter()
        .enumerate()
        .map(|(k, r)| BoundingBox::new([r[0], r[1], r[2], r[3]], r[4], 0, k).unwrap())
        .collect()
}

fn arb_qubo(max_n: usize) -> impl Strategy<Value = QuboInstance> {
    (1..=max_n, any::<bool>())
        .prop_flat_map(|(n, max)| (Just(n), Just(max), prop::collection::vec(-2.0..2.0f64, n * (n + 1) / 2)))
        .prop_map(|(n, max, vals)| {
            let mut it = vals.into_iter();
            let entries: Vec<_> = (0..n)
                .flat_map(|i| (i..n).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, it.next().unwrap()))
                .collect();
            let sense = if max { Sense::Maximize } else { Sense::Minimize };
            QuboInstance::from_entries(n, sense, entries, (0..n).collect()).unwrap()
        })
}

fn optimum(q: &QuboInstance) -> f64 {
    solve_exhaustive(q).unwrap().samples()[0].energy
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
        let v = boxes(&[a, b]);
        let ab = iou(&v[0], &v[1]);
        prop_assert_eq!(ab, iou(&v[1], &v[0]));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((iou(&v[0], &v[0]) - 1.0).abs() < 1e-12);
        let sp = spatial_overlap(&v[0], &v[1]);
        prop_assert!((sp - spatial_overlap(&v[1], &v[0])).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&sp));
    }

    #[test]
    fn overlaps_invariant_under_translation_and_scale(
        a in arb_box(), b in arb_box(), dx in -100.0..100.0f64, dy in -100.0..100.0f64, k in 0.25..4.0f64,
    ) {
        let v = boxes(&[a, b]);
        let moved: Vec<_> = [a, b]
            .iter()
            .map(|r| [(r[0] + dx) * k, (r[1] + dy) * k, (r[2] + dx) * k, (r[3] + dy) * k, r[4]])
            .collect();
        let w = boxes(&moved);
        prop_assert!((iou(&v[0], &v[1]) - iou(&w[0], &w[1])).abs() < 1e-9);
        prop_assert!((spatial_overlap(&v[0], &v[1]) - spatial_overlap(&w[0], &w[1])).abs() < 1e-9);
    }

    #[test]
    fn ising_energy_matches_qubo_energy(q in arb_qubo(8)) {
        let ising = to_ising(&q);
        for mask in 0..1u64 << q.n() {
            let x = bits(mask, q.n());
            let e = qubo_energy(&q, &x).unwrap();
            prop_assert!((ising.energy(&bits_to_spins(&x)).unwrap() - e).abs() < 1e-9);
        }
    }

    #[test]
    fn negation_swaps_argmax_and_argmin(q in arb_qubo(8)) {
        let neg = negate(&q);
        prop_assert_eq!(neg.sense(), q.sense().flipped());
        for mask in 0..1u64 << q.n() {
            let x = bits(mask, q.n());
            prop_assert_eq!(qubo_energy(&neg, &x).unwrap(), -qubo_energy(&q, &x).unwrap());
        }
        let a = pick_solution(&solve_exhaustive(&q).unwrap()).unwrap();
        let b = pick_solution(&solve_exhaustive(&neg).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn build_q_is_permutation_invariant(
        raw in prop::collection::vec(arb_box(), 1..7), mask in any::<u64>(), rot in 0usize..7,
    ) {
        let dets = boxes(&raw);
        let n = dets.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let permuted: Vec<_> = perm.iter().map(|&i| dets[i]).collect();
        let w = QsqsWeights::default();
        let enh = EnhConfig::enabled_default();
        let q = build_q(&dets, &w, &enh).unwrap();
        let qp = build_q(&permuted, &w, &enh).unwrap();
        let x = bits(mask, n);
        let xp: Vec<bool> = perm.iter().map(|&i| x[i]).collect();
        prop_assert!((q.energy(&x).unwrap() - qp.energy(&xp).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn score_only_weights_keep_every_scored_box(raw in prop::collection::vec(arb_box(), 1..9)) {
        let dets = boxes(&raw);
        let w = QsqsWeights::new(1.0, 0.0, 0.0).unwrap();
        let q = build_q(&dets, &w, &EnhConfig::disabled()).unwrap();
        let x = pick_solution(&solve_exhaustive(&q).unwrap()).unwrap();
        for (b, keep) in dets.iter().zip(x) {
            prop_assert_eq!(keep, b.score > 0.0);
        }
    }

    #[test]
    fn unit_factor_adjustment_is_identity(raw in prop::collection::vec(arb_box(), 1..7), t in 0.0..1.0f64) {
        let dets = boxes(&raw);
        let w = QsqsWeights::default();
        let unit = EnhConfig { enabled: true, objectness_threshold: t, score_penalty: 1.0, overlap_reward: 1.0 };
        prop_assert_eq!(build_q(&dets, &w, &unit).unwrap(), build_q(&dets, &w, &EnhConfig::disabled()).unwrap());
    }

    #[test]
    fn no_solver_beats_the_oracle(n in 1usize..12, seed in any::<u64>()) {
        let q = random_instance(n, 0.5, seed);
        let best = optimum(&q);
        let tabu = solve_tabu(&q, &TabuParams { seed, ..TabuParams::default() }).unwrap();
        let anneal = solve_anneal(&q, &AnnealSchedule::default().with_reads(20), seed).unwrap();
        let greedy = greedy_descent(&q, &vec![false; n]);
        for e in tabu.samples().iter().chain(anneal.samples()).map(|s| s.energy) {
            prop_assert!(e <= best + 1e-9);
        }
        let g = q.energy(&greedy).unwrap();
        prop_assert!(g <= best + 1e-9);
        prop_assert!(tabu.best().unwrap().energy >= g - 1e-9);
    }

    #[test]
    fn solvers_are_deterministic_and_sense_consistent(n in 1usize..10, seed in any::<u64>()) {
        let q = random_instance(n, 0.5, seed);
        let s = AnnealSchedule::default().with_reads(30);
        let a = solve_anneal(&q, &s, seed).unwrap();
        prop_assert_eq!(&a, &solve_anneal(&q, &s, seed).unwrap());
        let p = TabuParams { seed, restarts: 3, ..TabuParams::default() };
        prop_assert_eq!(solve_tabu(&q, &p).unwrap(), solve_tabu(&q, &p).unwrap());
        let neg = negate(&q);
        prop_assert_eq!(
            pick_solution(&a).unwrap(),
            pick_solution(&solve_anneal(&neg, &s, seed).unwrap()).unwrap()
        );
        prop_assert_eq!(
            pick_solution(&solve_tabu(&q, &p).unwrap()).unwrap(),
            pick_solution(&solve_tabu(&neg, &p).unwrap()).unwrap()
        );
    }

    #[test]
    fn suppression_outputs_decayed_subsets(raw in prop::collection::vec(arb_box(), 0..12), seed in any::<u64>()) {
        let dets = boxes(&raw);
        let cfg = SuppressionConfig::default();
        let solver = qsqs_core::solvers::AnnealSolver::new(AnnealSchedule::default().with_reads(20), seed);
        let outputs = [
            qsqs(&dets, &cfg, &solver).unwrap(),
            soft_nms(&dets, cfg.sigma, cfg.final_score_threshold),
            nms(&dets, cfg.nms_threshold),
        ];
        for out in &outputs {
            let mut seen = std::collections::BTreeSet::new();
            for b in out {
                prop_assert!(seen.insert(b.source_index));
                let orig = &dets[b.source_index];
                prop_assert!(b.score <= orig.score);
                prop_assert_eq!(b.corners(), orig.corners());
            }
        }
        if dets.len() == 1 {
            prop_assert_eq!(&outputs[0], &dets);
        }
    }

    #[test]
    fn nms_is_idempotent(raw in prop::collection::vec(arb_box(), 0..15), t in 0.05..0.95f64) {
        let once = nms(&boxes(&raw), t);
        prop_assert_eq!(nms(&once, t), once.clone());
        for (i, a) in once.iter().enumerate() {
            for b in &once[i + 1..] {
                prop_assert!(iou(a, b) <= t);
            }
        }
    }

    #[test]
    fn ap_ignores_monotone_score_transforms(
        recs in prop::collection::vec((0.01..1.0f64, any::<bool>()), 1..30), extra_gt in 0usize..5,
    ) {
        let records: Vec<(f64, MatchFlag)> = recs
            .iter()
            .map(|&(s, tp)| (s, if tp { MatchFlag::Tp } else { MatchFlag::Fp }))
            .collect();
        let num_gt = records.iter().filter(|r| r.1 == MatchFlag::Tp).count() + extra_gt;
        prop_assume!(num_gt > 0);
        let squashed: Vec<_> = records.iter().map(|&(s, f)| (s * s * 0.5, f)).collect();
        for mode in [ApMode::AllPoint, ApMode::ElevenPoint] {
            let ap = average_precision(&records, num_gt, mode).unwrap();
            prop_assert!((0.0..=1.0).contains(&ap));
            prop_assert!((ap - average_precision(&squashed, num_gt, mode).unwrap()).abs() < 1e-12);
        }
        let mut with_fp = records.clone();
        with_fp.push((0.001, MatchFlag::Fp));
        prop_assert!(
            average_precision(&with_fp, num_gt, ApMode::AllPoint).unwrap()
                <= average_precision(&records, num_gt, ApMode::AllPoint).unwrap() + 1e-12
        );
    }

    #[test]
    fn matching_is_one_to_one_and_lamr_drops_with_fps(
        gt_raw in prop::collection::vec(arb_box(), 1..6),
        det_raw in prop::collection::vec(arb_box(), 0..10),
        drop in any::<prop::sample::Index>(),
    ) {
        let gt_boxes = boxes(&gt_raw);
        let gt = GroundTruth::new("a", gt_boxes.clone(), vec![false; gt_boxes.len()]).unwrap();
        let dets = boxes(&det_raw);
        let matched = match_detections(&dets, &gt, 0.5);
        let tps = matched.iter().filter(|m| m.flag == MatchFlag::Tp).count();
        prop_assert!(tps <= gt_boxes.len());
        prop_assert_eq!(matched.len(), dets.len());

        let image = |d: Vec<BoundingBox>| vec![ImageEval { detections: d, ground_truth: gt.clone() }];
        let (base, _) = log_average_miss_rate(&image(dets.clone()), 0.5).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));
        let fps: Vec<usize> = matched
            .iter()
            .filter(|m| m.flag == MatchFlag::Fp)
            .map(|m| m.source_index)
            .collect();
        if !fps.is_empty() {
            let victim = fps[drop.index(fps.len())];
            let fewer: Vec<_> = dets.iter().copied().filter(|d| d.source_index != victim).collect();
            // removing an FP can promote no other detection, so the TP set is unchanged
            prop_assume!(
                match_detections(&fewer, &gt, 0.5).iter().filter(|m| m.flag == MatchFlag::Tp).count() == tps
            );
            let (after, _) = log_average_miss_rate(&image(fewer), 0.5).unwrap();
            prop_assert!(after <= base + 1e-12);
        }
    }
}

#[test]
fn match_rate_grows_with_reads() {
    let rates: Vec<usize> = [10usize, 100, 1000]
        .iter()
        .map(|&reads| {
            (0..100u64)
                .filter(|&k| {
                    let q = random_instance(9, 0.5, 7000 + k);
                    let ss = solve_anneal(&q, &AnnealSchedule::default().with_reads(reads), k).unwrap();
                    let e = q.energy(&pick_solution(&ss).unwrap()).unwrap();
                    (e - optimum(&q)).abs() <= 1e-9
                })
                .count()
        })
        .collect();
    // a drop is tolerated only within two binomial standard errors
    for w in rates.windows(2) {
        let p = w[0] as f64 / 100.0;
        let slack = 2.0 * (p * (1.0 - p) / 100.0).sqrt() * 100.0;
        assert!(w[1] as f64 >= w[0] as f64 - slack, "{rates:?}");
    }
    assert!(rates[2] > rates[0], "{rates:?}");
}

#[test]
fn soft_nms_scores_never_increase() {
    let dets = boxes(&[[0.0, 0.0, 10.0, 10.0, 0.9], [1.0, 0.0, 11.0, 10.0, 0.8], [2.0, 0.0, 12.0, 10.0, 0.7]]);
    let out = soft_nms(&dets, 0.5, 0.0);
    assert_eq!(out.len(), 3);
    assert_abs_diff_eq!(out[0].score, 0.9);
    for b in &out {
        assert!(b.score <= dets[b.source_index].score);
    }
}
