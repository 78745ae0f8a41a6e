use std::collections::BTreeMap;

use bidmatch_core::eval::{generate_synthetic, SynthConfig};
use bidmatch_core::expand::{build_plan, enumerate_runs, Method};
use bidmatch_core::query::{parse, score_pairs, ColumnRef, Projection, QuerySpec, SimPredicate};
use bidmatch_core::relation::{paper_relation, reviewer_relation, Relation, Store};
use bidmatch_core::textpipe::Tokenizer;

fn store(seed: u64, noise: f64) -> Store {
    let c = generate_synthetic(&SynthConfig {
        seed,
        topics: 3,
        papers: 30,
        reviewers: 6,
        vocab_per_topic: 25,
        noise,
    })
    .unwrap();
    let mut s = Store::new();
    s.insert(paper_relation(c.paper_records(), Tokenizer::new()).unwrap()).unwrap();
    s.insert(reviewer_relation(c.profiles(), Tokenizer::new()).unwrap()).unwrap();
    s
}

fn texts(rel: &Relation, column: &str) -> Vec<Vec<String>> {
    let col = rel.column(column).unwrap();
    let tok = Tokenizer::new();
    (0..rel.len()).map(|r| tok.tokenize(rel.value(r, col)).terms().to_vec()).collect()
}

/// Straight from the formula: ln(1+tf)·ln(1+N/df), unit length, dot product.
fn brute_force(left: &[Vec<String>], right: &[Vec<String>]) -> Vec<Vec<f64>> {
    let n = right.len() as f64;
    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for doc in right {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1.0;
        }
    }
    let vec_of = |doc: &Vec<String>| -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
        for t in doc {
            *tf.entry(t).or_default() += 1.0;
        }
        let mut v: BTreeMap<String, f64> = tf
            .into_iter()
            .filter_map(|(t, f)| df.get(t).map(|d| (t.to_string(), (1.0 + f).ln() * (1.0 + n / d).ln())))
            .collect();
        let norm = v.values().map(|w| w * w).sum::<f64>().sqrt();
        for w in v.values_mut() {
            *w /= norm;
        }
        if norm == 0.0 {
            v.clear();
        }
        v
    };
    let lv: Vec<_> = left.iter().map(vec_of).collect();
    let rv: Vec<_> = right.iter().map(vec_of).collect();
    lv.iter()
        .map(|a| {
            rv.iter()
                .map(|b| a.iter().map(|(t, w)| w * b.get(t).copied().unwrap_or(0.0)).sum())
                .collect()
        })
        .collect()
}

fn single(lrel: &str, lcol: &str, rrel: &str, rcol: &str) -> QuerySpec {
    QuerySpec {
        projections: vec![Projection::from(ColumnRef::new("Reviewer", "name")), Projection::from(ColumnRef::new("Paper", "id"))],
        sources: ("Paper".into(), "Reviewer".into()),
        conjuncts: vec![SimPredicate {
            left: ColumnRef::new(lrel, lcol),
            right: ColumnRef::new(rrel, rcol),
        }],
    }
}

/// Score order, with scores that agree to 1e-12 treated as ties and put in
/// tuple order. Independent float code may round a genuine tie differently
/// in the last bit.
fn canonical(mut pairs: Vec<([usize; 2], f64)>, searched: usize) -> Vec<([usize; 2], f64)> {
    pairs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut out = Vec::with_capacity(pairs.len());
    for group in pairs.chunk_by(|a, b| (a.1 - b.1).abs() < 1e-12) {
        let mut g = group.to_vec();
        g.sort_by_key(|x| (x.0[searched], x.0[1 - searched]));
        out.extend(g);
    }
    out
}

#[test]
fn single_conjunct_queries_match_brute_force() {
    for seed in [11, 12] {
        let s = store(seed, 0.3);
        let paper = s.get("Paper").unwrap();
        let reviewer = s.get("Reviewer").unwrap();
        for rcol in ["papers", "homepage"] {
            for pcol in ["abstract", "keywords", "title"] {
                for reviewer_on_left in [true, false] {
                    let (q, oracle) = if reviewer_on_left {
                        let m = brute_force(&texts(reviewer, rcol), &texts(paper, pcol));
                        // index as [paper][reviewer]
                        let t: Vec<Vec<f64>> = (0..paper.len()).map(|p| (0..reviewer.len()).map(|r| m[r][p]).collect()).collect();
                        (single("Reviewer", rcol, "Paper", pcol), t)
                    } else {
                        (single("Paper", pcol, "Reviewer", rcol), brute_force(&texts(paper, pcol), &texts(reviewer, rcol)))
                    };
                    let searched = if reviewer_on_left { 0 } else { 1 };
                    let mut want: Vec<([usize; 2], f64)> = Vec::new();
                    for (p, row) in oracle.iter().enumerate() {
                        for (r, &score) in row.iter().enumerate() {
                            if score > 0.0 {
                                want.push(([p, r], score));
                            }
                        }
                    }
                    let want = canonical(want, searched);
                    let got = canonical(score_pairs(&q, &s).unwrap().into_iter().map(|p| (p.rows, p.score)).collect(), searched);
                    assert_eq!(got.len(), want.len(), "{q}");
                    for (g, w) in got.iter().zip(&want) {
                        assert_eq!(g.0, w.0, "{q}");
                        assert!((g.1 - w.1).abs() < 1e-9, "{q}");
                    }
                }
            }
        }
    }
}

#[test]
fn multi_conjunct_scores_are_products() {
    let mut s = store(21, 0.3);
    for key in enumerate_runs() {
        let plan = build_plan(key);
        plan.prepare(&mut s).unwrap();
        if plan.query.conjuncts.len() < 2 {
            continue;
        }
        let parts: Vec<BTreeMap<[usize; 2], f64>> = plan
            .query
            .conjuncts
            .iter()
            .map(|c| {
                let q = QuerySpec {
                    conjuncts: vec![c.clone()],
                    ..plan.query.clone()
                };
                score_pairs(&q, &s).unwrap().into_iter().map(|p| (p.rows, p.score)).collect()
            })
            .collect();
        let got = score_pairs(&plan.query, &s).unwrap();
        let mut nonzero = 0;
        for p in 0..s.get("Paper").unwrap().len() {
            for r in 0..s.get("Reviewer").unwrap().len() {
                let product: f64 = parts.iter().map(|m| m.get(&[p, r]).copied().unwrap_or(0.0)).product();
                let score = got.iter().find(|x| x.rows == [p, r]).map_or(0.0, |x| x.score);
                assert!((score - product).abs() < 1e-9, "{key} {p} {r}");
                nonzero += usize::from(product > 0.0);
            }
        }
        assert_eq!(nonzero, got.len());
    }
}

#[test]
fn single_source_concat_equals_conjunct() {
    for seed in [1, 2, 3] {
        let mut s = store(seed, 0.5);
        for key in enumerate_runs().into_iter().filter(|k| k.method == Method::Concat && k.paper_sources.len() == 1) {
            let twin = bidmatch_core::expand::RunKey::new(Method::Conjunct, key.reviewer_source, key.paper_sources);
            let (a, b) = (build_plan(key), build_plan(twin));
            a.prepare(&mut s).unwrap();
            b.prepare(&mut s).unwrap();
            assert_eq!(a.rankings(&s).unwrap(), b.rankings(&s).unwrap(), "{key}");
        }
    }
}

#[test]
fn parsed_query_scores_like_built_plan() {
    let s = store(5, 0.2);
    let text = "SELECT Reviewer.Name, Paper.ID\nFROM Paper AND Reviewer\nWHERE Reviewer.Papers SIM Paper.Abstract\nAND Reviewer.Homepage SIM Paper.Keywords";
    let plan = build_plan("conjunct/ph/A".parse().unwrap());
    assert_eq!(score_pairs(&parse(text).unwrap(), &s).unwrap(), score_pairs(&plan.query, &s).unwrap());
}
