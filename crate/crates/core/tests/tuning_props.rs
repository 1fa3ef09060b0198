mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use valuechain::bench::{synth_world, SynthWorldConfig};
use valuechain::icio::LabelMatrix;
use valuechain::tuning::{
    grid_search, precision, read_results_csv, write_results_csv, Checkpoint, GridOptions, GridSpec,
};
use valuechain::{infer_all, ParamSet, SpecializationTable};

fn world(seed: u64) -> (SpecializationTable, LabelMatrix) {
    let (table, truth) = synth_world(&SynthWorldConfig {
        regions: 20,
        products: 9,
        links: 4,
        noise: 0.4,
        seed,
        ..Default::default()
    })
    .unwrap();
    let s = SpecializationTable::from_trade(&table).unwrap();
    let labels = support::labels_from(s.products(), &truth);
    (s, labels)
}

fn small_grid() -> GridSpec {
    GridSpec::uniform(vec![1.0, 1.5, 2.0, 3.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn precision_is_a_share_of_predicted_links(seed in any::<u64>()) {
        let s = support::random_table(&mut ChaCha8Rng::seed_from_u64(seed), 10, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let n = s.products().len();
        let labels = LabelMatrix::new(
            s.products().to_vec(),
            support::random_flows(&mut rng, n, n, 1, 0.6).mapv(|v| v as u8),
        )
        .unwrap();
        let links = infer_all(&s, &ParamSet::new([1.0; 4], 5, 3).unwrap()).unwrap();
        let score = precision(&links, &labels).unwrap();
        prop_assert_eq!(score.tp + score.fp, links.len());
        prop_assert!((0.0..=1.0).contains(&score.precision));
    }

    #[test]
    fn batched_grid_equals_point_by_point(seed in any::<u64>()) {
        let (s, labels) = world(seed);
        let base = ParamSet::new([2.0; 4], 6, 2).unwrap();
        let batched = grid_search(&s, &labels, &small_grid(), &base, &GridOptions::default()).unwrap();
        prop_assert_eq!(batched.len(), 256);
        for r in &batched {
            let links = infer_all(&s, &r.params).unwrap();
            let score = precision(&links, &labels).unwrap();
            prop_assert_eq!((r.tp, r.fp, r.precision), (score.tp, score.fp, score.precision));
        }
        for w in batched.windows(2) {
            prop_assert!(w[0].precision >= w[1].precision);
            if w[0].precision == w[1].precision {
                prop_assert!(w[0].params.thresholds() < w[1].params.thresholds());
            }
        }
    }
}

#[test]
fn checkpoint_resume_matches_a_fresh_run() {
    let (s, labels) = world(3);
    let base = ParamSet::default();
    let fresh = grid_search(&s, &labels, &small_grid(), &base, &GridOptions::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let opts = GridOptions {
        jobs: Some(2),
        checkpoint: Some(Checkpoint {
            path: path.clone(),
            every: 50,
        }),
    };
    let first = grid_search(&s, &labels, &small_grid(), &base, &opts).unwrap();
    assert_eq!(first, fresh);

    // keep only part of the checkpoint, as if the run had stopped early
    let text = std::fs::read_to_string(&path).unwrap();
    let partial: Vec<&str> = text.lines().take(90).collect();
    std::fs::write(&path, partial.join("\n") + "\n").unwrap();
    let resumed = grid_search(&s, &labels, &small_grid(), &base, &opts).unwrap();
    assert_eq!(resumed, fresh);

    let mut buf = Vec::new();
    write_results_csv(&fresh, &mut buf).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), buf);
    assert_eq!(read_results_csv(buf.as_slice(), &base).unwrap(), fresh);
}

#[test]
fn labels_must_cover_the_table() {
    let (s, _) = world(0);
    let labels =
        LabelMatrix::new(vec!["A".into(), "B".into()], ndarray::Array2::zeros((2, 2))).unwrap();
    assert!(grid_search(
        &s,
        &labels,
        &small_grid(),
        &ParamSet::default(),
        &GridOptions::default()
    )
    .is_err());
}
