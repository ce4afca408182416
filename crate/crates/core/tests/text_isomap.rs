use std::collections::{BTreeSet, HashSet};

use growclusters::gendata::{generate_corpus, swiss_roll_lite, CorpusConfig};
use growclusters::isomap::{
    classical_mds, correlation, geodesic_distances, isomap, knn_graph, Disconnected, GeodesicMatrix,
};
use growclusters::text::{build_vocabulary, encode, Corpus, Encoding};
use growclusters::Dataset;

/// Tokenizer written independently of the library: a character state machine.
fn independent_tokens(text: &str, stop: &HashSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars().chain(std::iter::once(' ')) {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            if !stop.contains(&cur) {
                out.push(cur.clone());
            }
            cur.clear();
        }
    }
    out
}

fn fixture() -> Corpus {
    generate_corpus(&CorpusConfig::default()).unwrap().0
}

#[test]
fn vocabulary_size_matches_independent_count() {
    let corpus = fixture();
    let expected: BTreeSet<String> = corpus
        .documents()
        .iter()
        .flat_map(|(_, t)| independent_tokens(t, corpus.stopwords()))
        .collect();
    let vocab = build_vocabulary(&corpus).unwrap();
    assert_eq!(vocab.len(), expected.len());
    assert!(vocab
        .terms()
        .iter()
        .all(|t| !corpus.stopwords().contains(t)));
    assert!(vocab.terms().windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn raw_row_sums_match_token_counts_and_binary_is_thresholded() {
    let corpus = fixture();
    let vocab = build_vocabulary(&corpus).unwrap();
    let raw = encode(&corpus, &vocab, Encoding::Raw);
    let binary = encode(&corpus, &vocab, Encoding::Binary);
    assert_eq!(raw.counts[0].len(), vocab.len());
    for ((_, text), row) in corpus.documents().iter().zip(&raw.counts) {
        let n = independent_tokens(text, corpus.stopwords()).len();
        assert_eq!(row.iter().map(|&c| c as usize).sum::<usize>(), n);
    }
    assert_eq!(raw.binarize(), binary);
    assert_eq!(encode(&corpus, &vocab, Encoding::Raw), raw);
}

#[test]
fn oov_tokens_are_dropped() {
    let small = Corpus::new(vec![("a".into(), "x y".into())], HashSet::new()).unwrap();
    let vocab = build_vocabulary(&small).unwrap();
    let other = Corpus::new(vec![("b".into(), "x z z".into())], HashSet::new()).unwrap();
    assert_eq!(
        encode(&other, &vocab, Encoding::Raw).counts,
        vec![vec![1, 0]]
    );
}

fn pairwise(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|a| {
            rows.iter()
                .map(|b| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect()
}

#[test]
fn collinear_points_embed_with_their_spacing() {
    // Five points along (1, 2, 2) / 3 with spacing 3.
    let rows: Vec<Vec<f64>> = (0..5)
        .map(|i| vec![i as f64, 2.0 * i as f64, 2.0 * i as f64])
        .collect();
    let data = Dataset::from_rows(rows.clone()).unwrap();
    let graph = knn_graph(&data, 2, Disconnected::Error).unwrap();
    let geo = geodesic_distances(&graph).unwrap();
    let euclid = pairwise(&rows);
    for i in 0..5 {
        for j in 0..5 {
            assert!((geo.get(i, j) - euclid[i][j]).abs() < 1e-12);
        }
    }
    let emb = isomap(&data, 2, 1, Disconnected::Error).unwrap();
    let mut xs: Vec<f64> = emb.coords.iter().map(|r| r[0]).collect();
    if xs[0] > 0.0 {
        xs.iter_mut().for_each(|x| *x = -*x);
    }
    for (x, want) in xs.iter().zip([-6.0, -3.0, 0.0, 3.0, 6.0]) {
        assert!((x - want).abs() < 1e-6, "{xs:?}");
    }
    assert_eq!(emb.neighbors, Some(2));
}

#[test]
fn unit_square_distances_recovered() {
    let rows = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
    ];
    let d = GeodesicMatrix::from_rows(pairwise(&rows)).unwrap();
    let emb = classical_mds(&d, 2).unwrap();
    let got = pairwise(&emb.coords);
    for i in 0..4 {
        for j in 0..4 {
            assert!((got[i][j] - d.get(i, j)).abs() < 1e-9);
        }
    }
}

#[test]
fn full_dimension_on_euclidean_data_preserves_distances() {
    let mut rng = growclusters::rng::Rng::new(5);
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..3).map(|_| rng.uniform_range(-5.0, 5.0)).collect())
        .collect();
    let data = Dataset::from_rows(rows.clone()).unwrap();
    // A complete graph makes every geodesic a single Euclidean hop.
    let emb = isomap(&data, 29, 3, Disconnected::Error).unwrap();
    let (a, b) = (pairwise(&rows), pairwise(&emb.coords));
    for i in 0..30 {
        for j in 0..30 {
            assert!((a[i][j] - b[i][j]).abs() < 1e-6);
        }
    }
}

#[test]
fn swiss_roll_lite_is_unrolled() {
    let (data, _) = swiss_roll_lite(200, 1).unwrap();
    let graph = knn_graph(&data, 8, Disconnected::Error).unwrap();
    let geo = geodesic_distances(&graph).unwrap();
    let emb = classical_mds(&geo, 2).unwrap();
    let e = pairwise(&emb.coords);
    let (mut g, mut h) = (Vec::new(), Vec::new());
    for i in 0..200 {
        for j in i + 1..200 {
            g.push(geo.get(i, j));
            h.push(e[i][j]);
        }
    }
    let r = correlation(&g, &h);
    assert!(r >= 0.99, "correlation {r}");
    for c in 0..2 {
        let mean = emb.coords.iter().map(|r| r[c]).sum::<f64>() / 200.0;
        assert!(mean.abs() < 1e-9);
    }
    assert!(emb.eigenvalues[0] >= emb.eigenvalues[1] && emb.eigenvalues[1] > 0.0);
}
