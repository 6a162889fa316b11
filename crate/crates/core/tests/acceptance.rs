//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.
//!
//! Run with `cargo test -p grantmatch-core --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use grantmatch_core::assoc::{mine_rules, rule_metrics, MiningParams, TransactionDB};
use grantmatch_core::corpus::{
    ingest_corpus, segment_sentences, strip_html, DocumentKind, Owner, RawDocument, HTML_TAG_PATTERN,
};
use grantmatch_core::pipeline::{Analysis, Dataset, RuleSource};
use grantmatch_core::recommend::{apply_threshold, rank_candidates, render_report, ReportFormat, WeightParams};
use grantmatch_core::relevance::tfidf;
use grantmatch_core::sample;
use grantmatch_core::taxonomy::KeywordTable;
use grantmatch_core::tokenize::TokenizerProfile;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

/// Totals for 1-A..1-E at (0.5, 0.5), (0.8, 0.2), (0.2, 0.8).
const REPORTED_TOTALS: [(&str, [f64; 3]); 5] = [
    ("1-A", [0.354, 0.566, 0.141]),
    ("1-B", [0.304, 0.486, 0.121]),
    ("1-C", [0.568, 0.453, 0.682]),
    ("1-D", [0.175, 0.280, 0.070]),
    ("1-E", [0.125, 0.200, 0.050]),
];
const SETTINGS: [(f64, f64); 3] = [(0.5, 0.5), (0.8, 0.2), (0.2, 0.8)];
const TOTAL_TOLERANCE: f64 = 0.001;

fn criterion_1_fusion() -> Outcome {
    let surface = sample::surface_matches();
    let historical = sample::historical_matches();
    let mut worst: f64 = 0.0;
    for (col, (alpha, beta)) in SETTINGS.iter().enumerate() {
        let params = WeightParams::new(*alpha, *beta).map_err(|e| e.to_string())?;
        let list = rank_candidates(sample::SAMPLE_GRANT, &surface, &historical, &params).map_err(|e| e.to_string())?;
        for (id, totals) in REPORTED_TOTALS {
            let entry = list.entry(id).ok_or(format!("{id} missing"))?;
            let diff = (entry.total - totals[col]).abs();
            worst = worst.max(diff);
            check!(
                diff <= TOTAL_TOLERANCE,
                "{id} at alpha={alpha}: total {:.4} vs reported {:.3}",
                entry.total,
                totals[col]
            );
        }
    }
    Ok(format!(
        "15 totals within ±{TOTAL_TOLERANCE} (max deviation {worst:.4}); 1-F excluded"
    ))
}

fn criterion_2_threshold() -> Outcome {
    let surface = sample::surface_matches();
    let mut historical = sample::historical_matches();
    // 1-F's single-channel score cannot reach 0.4 at any of the settings
    historical.push(sample::historical_match_1f());
    let expected: [&[&str]; 3] = [&["1-C"], &["1-A", "1-B", "1-C"], &["1-C"]];
    for ((alpha, beta), want) in SETTINGS.iter().zip(expected) {
        let params = WeightParams::new(*alpha, *beta).map_err(|e| e.to_string())?;
        let list = rank_candidates(sample::SAMPLE_GRANT, &surface, &historical, &params).map_err(|e| e.to_string())?;
        let selected = apply_threshold(&list, 0.4).map_err(|e| e.to_string())?.selected;
        let mut got: Vec<&str> = selected.iter().map(String::as_str).collect();
        got.sort_unstable();
        check!(got == want, "alpha={alpha}: selected {got:?}, expected {want:?}");
    }
    Ok("threshold 0.4 selects {1-C}, {1-A,1-B,1-C}, {1-C}; 1-F (0.205 at 0.2/0.8) not selected".into())
}

fn example_transactions() -> Vec<Vec<&'static str>> {
    vec![
        vec!["Machine Learning", "Neural Network"],
        vec![
            "Machine Learning",
            "Information Retrieval",
            "Knowledge Acquisition",
            "Industrial Engineering",
        ],
        vec![
            "Neural Network",
            "Information Retrieval",
            "Knowledge Acquisition",
            "Information Theory",
        ],
        vec![
            "Machine Learning",
            "Neural Network",
            "Information Retrieval",
            "Knowledge Acquisition",
        ],
        vec![
            "Machine Learning",
            "Neural Network",
            "Information Retrieval",
            "Information Theory",
        ],
    ]
}

fn criterion_3_rule_metrics() -> Outcome {
    let rows = example_transactions();
    let db = TransactionDB::from_itemsets(rows.clone());
    let x = BTreeSet::from(["machine learning".to_string()]);
    let y = BTreeSet::from(["neural network".to_string()]);
    let m = rule_metrics(&db, &x, &y).map_err(|e| e.to_string())?;

    // independent count over the raw rows
    let has = |row: &Vec<&str>, item: &str| row.iter().any(|i| i.eq_ignore_ascii_case(item));
    let n = rows.len();
    let sx = rows.iter().filter(|r| has(r, "machine learning")).count();
    let sy = rows.iter().filter(|r| has(r, "neural network")).count();
    let sxy = rows
        .iter()
        .filter(|r| has(r, "machine learning") && has(r, "neural network"))
        .count();
    check!(
        (n, sx, sy, sxy) == (5, 4, 4, 3),
        "brute-force counts {:?}",
        (n, sx, sy, sxy)
    );
    let oracle_support = sxy as f64 / n as f64;
    let oracle_confidence = sxy as f64 / sx as f64;
    let oracle_lift = (sxy * n) as f64 / (sx * sy) as f64;

    check!(m.support == 0.6 && m.support == oracle_support, "support {}", m.support);
    check!(
        m.confidence == 0.75 && m.confidence == oracle_confidence,
        "confidence {}",
        m.confidence
    );
    check!(m.lift == 0.9375 && m.lift == oracle_lift, "lift {}", m.lift);
    Ok("support 0.600, confidence 0.750, lift 0.9375 (exact, matches brute-force counts)".into())
}

type RuleKey = (Vec<String>, Vec<String>);

/// Exhaustive enumeration over bitmasks of the item universe.
fn brute_force_rules(
    rows: &[BTreeSet<String>],
    min_support: f64,
    min_confidence: f64,
    max_width: usize,
) -> BTreeMap<RuleKey, (f64, f64, f64)> {
    let items: Vec<&String> = rows.iter().flatten().collect::<BTreeSet<_>>().into_iter().collect();
    let d = items.len();
    let n = rows.len();
    let count = |mask: u32| {
        rows.iter()
            .filter(|row| (0..d).all(|b| mask & (1 << b) == 0 || row.contains(items[b])))
            .count()
    };
    let names = |mask: u32| -> Vec<String> {
        (0..d)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| items[b].clone())
            .collect()
    };
    let mut out = BTreeMap::new();
    for z in 1u32..(1 << d) {
        let width = z.count_ones() as usize;
        if width < 2 || width > max_width {
            continue;
        }
        let sz = count(z);
        if sz == 0 || (sz as f64 / n as f64) < min_support {
            continue;
        }
        let mut x = (z - 1) & z;
        while x > 0 {
            let y = z ^ x;
            let (sx, sy) = (count(x), count(y));
            let confidence = sz as f64 / sx as f64;
            if confidence >= min_confidence {
                let support = sz as f64 / n as f64;
                let lift = confidence / (sy as f64 / n as f64);
                out.insert((names(x), names(y)), (support, confidence, lift));
            }
            x = (x - 1) & z;
        }
    }
    out
}

fn criterion_4_miner_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x6a7e_2016);
    let mut total_rules = 0usize;
    for case in 0..200 {
        let n_items = rng.gen_range(1..=12);
        let n_tx = rng.gen_range(1..=30);
        let density = rng.gen_range(0.15..0.7);
        let rows: Vec<BTreeSet<String>> = (0..n_tx)
            .map(|_| {
                let mut row: BTreeSet<String> = (0..n_items)
                    .filter(|_| rng.gen_bool(density))
                    .map(|i| format!("i{i:02}"))
                    .collect();
                if row.is_empty() {
                    row.insert(format!("i{:02}", rng.gen_range(0..n_items)));
                }
                row
            })
            .collect();
        let params = MiningParams {
            min_support: rng.gen_range(0.0..0.5),
            min_confidence: rng.gen_range(0.0..1.0),
            max_itemset_width: 3,
        };
        let db = TransactionDB::from_itemsets(rows.clone());
        let mined = mine_rules(&db, &params).map_err(|e| e.to_string())?;
        let oracle = brute_force_rules(&rows, params.min_support, params.min_confidence, 3);

        let got: BTreeMap<RuleKey, (f64, f64, f64)> = mined
            .iter()
            .map(|r| {
                (
                    (
                        r.antecedent.iter().cloned().collect(),
                        r.consequent.iter().cloned().collect(),
                    ),
                    (r.support, r.confidence, r.lift),
                )
            })
            .collect();
        check!(got.len() == mined.len(), "case {case}: duplicate rules");
        let got_keys: BTreeSet<_> = got.keys().collect();
        let want_keys: BTreeSet<_> = oracle.keys().collect();
        check!(
            got_keys == want_keys,
            "case {case}: rule sets differ (mined {}, oracle {})",
            got_keys.len(),
            want_keys.len()
        );
        for (key, (s, c, l)) in &oracle {
            let (gs, gc, gl) = got[key];
            check!(
                (gs - s).abs() < 1e-12 && (gc - c).abs() < 1e-12 && (gl - l).abs() < 1e-12,
                "case {case}: metrics differ for {key:?}"
            );
        }
        total_rules += oracle.len();
    }
    Ok(format!(
        "200 random dbs, {total_rules} rules, identical to exhaustive enumeration"
    ))
}

fn plain(id: &str, body: &str) -> RawDocument {
    RawDocument {
        id: id.into(),
        origin: id.into(),
        kind: DocumentKind::PlainText,
        body: body.into(),
        owner: Owner::Grant("g".into()),
    }
}

fn criterion_5_tfidf() -> Outcome {
    let bare = TokenizerProfile::new("bare", Vec::<String>::new(), Vec::<String>::new()).map_err(|e| e.to_string())?;

    // hand-computed toy case
    let toy = ingest_corpus(
        vec![plain("d1", "machine learning machine"), plain("d2", "neural network")],
        &bare,
    )
    .map_err(|e| e.to_string())?;
    let w = tfidf("machine", "d1", &toy).map_err(|e| e.to_string())?;
    let expected = (2.0 / 3.0) * 2f64.ln();
    check!((w.tf - 2.0 / 3.0).abs() < 1e-12, "tf {}", w.tf);
    check!((w.idf - 2f64.ln()).abs() < 1e-12, "idf {}", w.idf);
    check!((w.tfidf - expected).abs() < 1e-12, "tfidf {}", w.tfidf);
    check!((w.tfidf - 0.4621).abs() < 1e-4, "tfidf {} not ≈ 0.4621", w.tfidf);

    // properties over the fixture corpus
    let dataset = Dataset::load(&fixtures().join("three_grants"), &TokenizerProfile::default(), None)
        .map_err(|e| e.to_string())?;
    let corpus = &dataset.corpus;
    for (doc_id, counts) in &corpus.term_counts {
        if counts.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for term in counts.keys() {
            sum += tfidf(term, doc_id, corpus).map_err(|e| e.to_string())?.tf;
        }
        check!((sum - 1.0).abs() < 1e-12, "tf over {doc_id} sums to {sum}");
    }

    let ubiquitous = ingest_corpus(
        vec![
            plain("a", "grant research"),
            plain("b", "grant data"),
            plain("c", "grant"),
        ],
        &bare,
    )
    .map_err(|e| e.to_string())?;
    for id in ["a", "b", "c"] {
        let w = tfidf("grant", id, &ubiquitous).map_err(|e| e.to_string())?;
        check!(w.idf == 0.0 && w.tfidf == 0.0, "ubiquitous term in {id}: idf {}", w.idf);
    }

    let doc = &corpus.documents[0].id;
    let idfs: Vec<(usize, f64)> = corpus
        .term_document_index
        .iter()
        .map(|(term, postings)| Ok((postings.len(), tfidf(term, doc, corpus).map_err(|e| e.to_string())?.idf)))
        .collect::<Result<_, String>>()?;
    for (df1, idf1) in &idfs {
        for (df2, idf2) in &idfs {
            if df1 <= df2 {
                check!(idf1 >= idf2, "idf not antitone: df {df1} -> {idf1}, df {df2} -> {idf2}");
            }
        }
    }
    Ok(format!(
        "toy tfidf {:.4} (err {:.1e}); tf sums to 1 over {} docs; ubiquitous idf 0; idf antitone over {} terms",
        w.tfidf,
        (w.tfidf - expected).abs(),
        corpus.document_count,
        idfs.len()
    ))
}

fn criterion_6_extraction() -> Outcome {
    let dir = fixtures().join("html");
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let page = read("call.html")?;
    let golden = read("call.expected.txt")?;
    let golden_sentences: Vec<String> = read("call.sentences.txt")?.lines().map(str::to_owned).collect();

    let text = strip_html(&page);
    let tag = regex::Regex::new(HTML_TAG_PATTERN).expect("pattern");
    check!(!tag.is_match(&text), "tag pattern still matches stripped text");
    check!(text == golden.trim_end(), "stripped text differs from golden:\n{text}");
    check!(strip_html(&text) == text, "strip_html not idempotent");

    let sentences = segment_sentences(&text);
    check!(
        sentences == golden_sentences,
        "sentences differ from golden: {sentences:?}"
    );
    check!(
        segment_sentences(&sentences.join("\n")) == sentences,
        "segmentation does not round-trip"
    );
    check!(
        segment_sentences(&sentences.join(". ")) == sentences,
        "segmentation does not round-trip through '. '"
    );
    Ok(format!(
        "golden text and {} sentences match; idempotent; round-trips",
        sentences.len()
    ))
}

fn run_pipeline(root: &Path) -> Result<String, String> {
    let table = KeywordTable::load(&root.join("keywords.tsv")).map_err(|e| e.to_string())?;
    let dataset = Dataset::load(root, &TokenizerProfile::default(), Some(&table)).map_err(|e| e.to_string())?;
    // persist and reload as the CLI does between stages
    let dataset = serde_json::from_str::<Dataset>(&dataset.to_json()).map_err(|e| e.to_string())?;
    let analysis =
        Analysis::compute(&dataset, &table, &MiningParams::default(), RuleSource::Merged).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for g in &analysis.grants {
        let list = analysis
            .recommend(&g.grant.id, &WeightParams::default(), 0.4)
            .map_err(|e| e.to_string())?;
        reports.push(render_report(&list, ReportFormat::Json));
    }
    Ok(format!("{}\n{}", analysis.to_json(), reports.join("\n")))
}

fn criterion_7_end_to_end() -> Outcome {
    let root = fixtures().join("three_grants");
    let first = run_pipeline(&root)?;
    let second = run_pipeline(&root)?;
    check!(first == second, "two runs produced different JSON");

    let table = KeywordTable::load(&root.join("keywords.tsv")).map_err(|e| e.to_string())?;
    let dataset = Dataset::load(&root, &TokenizerProfile::default(), Some(&table)).map_err(|e| e.to_string())?;
    let analysis =
        Analysis::compute(&dataset, &table, &MiningParams::default(), RuleSource::Merged).map_err(|e| e.to_string())?;
    check!(analysis.grants.len() == 3, "{} grants", analysis.grants.len());
    for g in &analysis.grants {
        check!(!g.surface.is_empty(), "grant {} has no surface matches", g.grant.id);
        check!(g.rule_count > 0, "grant {} has no rules", g.grant.id);
    }
    let kayamori = analysis.grant("kayamori").ok_or("kayamori missing")?;
    check!(
        kayamori.historical.iter().any(|m| m.researcher_id == "r1c"),
        "r1c has no historical match on kayamori"
    );
    Ok(format!(
        "3 grants, {} bytes of bit-identical JSON across two runs",
        first.len()
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        (1, "fusion totals", criterion_1_fusion, Duration::from_secs(1)),
        (2, "threshold selection", criterion_2_threshold, Duration::from_secs(1)),
        (
            3,
            "rule-metric oracle",
            criterion_3_rule_metrics,
            Duration::from_secs(1),
        ),
        (
            4,
            "miner equivalence",
            criterion_4_miner_equivalence,
            Duration::from_secs(30),
        ),
        (5, "tf-idf properties", criterion_5_tfidf, Duration::from_secs(1)),
        (
            6,
            "extraction golden files",
            criterion_6_extraction,
            Duration::from_secs(1),
        ),
        (
            7,
            "end-to-end pipeline",
            criterion_7_end_to_end,
            Duration::from_secs(30),
        ),
    ];
    let mut failures = 0;
    for (n, name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {n} [{name}]: PASS ({elapsed:.2?}) {detail}"),
            Err(why) => {
                failures += 1;
                println!("criterion {n} [{name}]: FAIL ({elapsed:.2?}) {why}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all 7 criteria passed");
}
