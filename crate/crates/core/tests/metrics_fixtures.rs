mod common;

use molscale_core::chem::parse_smiles;
use molscale_core::codecs::Representation;
use molscale_core::metrics::*;
use proptest::prelude::*;

fn fp(s: &str) -> Fingerprint {
    fingerprint(&parse_smiles(s).unwrap())
}

#[test]
fn tanimoto_matches_reference_toolkit() {
    let b = common::bundle("tanimoto.json");
    assert!(b.entries.len() >= 45);
    for e in &b.entries {
        let pair: Vec<String> = serde_json::from_value(e.input.clone()).unwrap();
        let want = e.expected.as_f64().unwrap();
        let got = tanimoto(&fp(&pair[0]), &fp(&pair[1]));
        assert!((got - want).abs() <= 1e-6, "{pair:?}: {got} vs {want}");
    }
}

#[test]
fn methane_and_benzene_are_dissimilar() {
    let t = tanimoto(&fp("C"), &fp("c1ccccc1"));
    assert!(t < 0.2);
    assert_eq!(t, 0.0);
}

#[test]
fn ten_molecule_diversity() {
    let b = common::bundle("tanimoto.json");
    // the first 45 entries are all pairs of the ten-molecule panel
    let mut panel: Vec<String> = Vec::new();
    let mut sum = 0.0;
    for e in &b.entries[..45] {
        let pair: Vec<String> = serde_json::from_value(e.input.clone()).unwrap();
        for m in pair {
            if !panel.contains(&m) {
                panel.push(m);
            }
        }
        sum += e.expected.as_f64().unwrap();
    }
    assert_eq!(panel.len(), 10);
    let want = 1.0 - sum / 45.0;
    let got = diversity(&GenerationSample::new(panel, Representation::Smiles), 0).unwrap();
    assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
}

#[test]
fn diversity_subsamples_large_sets_deterministically() {
    let corpus = common::corpus();
    let mut lines = corpus.clone();
    // more distinct molecules than the exact limit
    lines.extend(corpus.iter().map(|s| format!("{s}.C")));
    lines.extend(corpus.iter().map(|s| format!("{s}.N")));
    let s = GenerationSample::new(lines, Representation::Smiles);
    let a = diversity(&s, 5).unwrap();
    assert_eq!(a, diversity(&s, 5).unwrap());
    assert!(a > 0.0 && a < 1.0);
}

fn small_smiles() -> impl Strategy<Value = Vec<String>> {
    let pool = [
        "CCO",
        "OCC",
        "CCN",
        "c1ccccc1",
        "C1CC",
        "CC(=O)O",
        "N#N",
        "C(",
        "Cl",
        "[Na+].[Cl-]",
        "CCCC",
        "OC(C)=O",
    ];
    prop::collection::vec(prop::sample::select(pool.to_vec()), 1..30)
        .prop_map(|v| v.into_iter().map(str::to_string).collect())
}

proptest! {
    #[test]
    fn metrics_stay_in_unit_interval(lines in small_smiles()) {
        let refs = ReferenceSet::from_lines(["CCO", "CCCC"]);
        let r = metric_report(&GenerationSample::new(lines.clone(), Representation::Smiles), &refs, 1);
        for v in [r.validity, r.uniqueness, r.diversity, r.novelty].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.counts.valid <= r.counts.total && r.counts.unique <= r.counts.valid);
    }

    #[test]
    fn validity_is_mean_of_line_indicators(lines in small_smiles()) {
        let whole = validity(&GenerationSample::new(lines.clone(), Representation::Smiles)).unwrap();
        let per: f64 = lines.iter()
            .map(|l| validity(&GenerationSample::new(vec![l.clone()], Representation::Smiles)).unwrap())
            .sum::<f64>() / lines.len() as f64;
        prop_assert!((whole - per).abs() < 1e-12);
    }

    #[test]
    fn uniqueness_ignores_order(mut lines in small_smiles(), seed in any::<u64>()) {
        let before = uniqueness(&GenerationSample::new(lines.clone(), Representation::Smiles));
        let n = lines.len();
        lines.rotate_left(seed as usize % n);
        prop_assert_eq!(before, uniqueness(&GenerationSample::new(lines, Representation::Smiles)));
    }

    #[test]
    fn novelty_weakly_decreases_with_reference(lines in small_smiles(), extra in small_smiles()) {
        let base = ["CCO"];
        let small = ReferenceSet::from_lines(base);
        let big = ReferenceSet::from_lines(base.iter().copied().chain(extra.iter().map(String::as_str)));
        let s = GenerationSample::new(lines, Representation::Smiles);
        if let (Ok(a), Ok(b)) = (novelty(&s, &small), novelty(&s, &big)) {
            prop_assert!(b <= a);
        }
    }

    #[test]
    fn tanimoto_symmetric(a in prop::sample::select(vec!["CCO", "c1ccccc1", "CC(=O)O", "CCN"]),
                          b in prop::sample::select(vec!["CCO", "c1ccncc1", "OCC(O)CO", "C"])) {
        let (x, y) = (fp(a), fp(b));
        prop_assert_eq!(tanimoto(&x, &y), tanimoto(&y, &x));
        prop_assert_eq!(tanimoto(&x, &x), 1.0);
    }
}
