//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cicheck::checklist::{load_checklist, save_checklist, Checklist};
use cicheck::embedding::MockEmbeddingProvider;
use cicheck::eval::{evaluate, macro_f1, percent, render_report, ReportFormat};
use cicheck::gateway::{script_mock, ChatClient, Gateway, RetryConfig, ScriptEntry};
use cicheck::graphs::{build_role_graph, FixtureTaxonomy, ROLE_ROOT};
use cicheck::judge::{
    judge_cases, CaseKind, CaseRecord, JudgeConfig, JudgeContext, Judgment, Label, Method,
    Predicted, METHODS,
};
use cicheck::regdoc::{
    parse_document, parse_regulation_id, render_document, tree_stats, RegulationId, TreeStats,
};
use cicheck::retrieve::{
    agent_retrieve, bm25_query, bm25_word_score, build_bm25_index, tokenize, DEFAULT_B,
    DEFAULT_K1,
};

use common::*;

/// Criterion 1: indexed scores match a direct evaluation of the ranking
/// formula on 100 random corpora, within 1e-9, in under 5 seconds.
#[test]
fn acceptance_01_bm25_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB2_25);
    let alphabet: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();

    for trial in 0..100 {
        let doc_count = rng.random_range(1..=20);
        let docs: Vec<(RegulationId, Vec<String>)> = (0..doc_count)
            .map(|i| {
                let len = rng.random_range(1..=30);
                let tokens: Vec<String> =
                    (0..len).map(|_| alphabet.choose(&mut rng).unwrap().clone()).collect();
                (id(&format!("1.{}", i + 1)), tokens)
            })
            .collect();
        let index = build_bm25_index(&corpus_map(&docs)).unwrap();

        let query_len = rng.random_range(1..=12);
        let query_tokens: Vec<String> = (0..query_len)
            .map(|_| {
                if rng.random_bool(0.15) {
                    "zz".to_string() // out-of-corpus token
                } else {
                    alphabet.choose(&mut rng).unwrap().clone()
                }
            })
            .collect();
        let query = query_tokens.join(" ");

        let hits = bm25_query(&index, &query, docs.len());
        assert_eq!(hits.len(), docs.len(), "trial {trial}: every doc ranks");
        let scored: BTreeMap<&RegulationId, f64> =
            hits.iter().map(|h| (&h.leaf, h.score)).collect();
        for (target, (doc_id, _)) in docs.iter().enumerate() {
            let expected =
                oracle_similarity(&docs, &query_tokens, target, DEFAULT_K1, DEFAULT_B);
            let got = scored[doc_id];
            assert!(
                (got - expected).abs() <= 1e-9,
                "trial {trial}, doc {doc_id}: {got} vs oracle {expected}"
            );
        }

        // Word-level spot checks against the same oracle.
        for _ in 0..5 {
            let token = alphabet.choose(&mut rng).unwrap();
            let target = rng.random_range(0..docs.len());
            let got = bm25_word_score(&index, token, &docs[target].0).unwrap();
            let expected = oracle_word_score(&docs, token, target, DEFAULT_K1, DEFAULT_B);
            assert!((got - expected).abs() <= 1e-9);
        }
    }

    // Monotonicity at the formula level: more occurrences never score lower
    // when the corpus statistics are held fixed.
    let idf = 1.7f64;
    let norm = 1.0 - DEFAULT_B + DEFAULT_B * 1.3;
    let score_at = |f: f64| idf * f * (DEFAULT_K1 + 1.0) / (f + DEFAULT_K1 * norm);
    for f in 0..20 {
        assert!(score_at((f + 1) as f64) >= score_at(f as f64));
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5s");
    println!("acceptance 01 (bm25 oracle equivalence, {elapsed:?}): PASS");
}

/// Criterion 2: the worked two-document example scores ln 2 on document 2.
#[test]
fn acceptance_02_bm25_worked_value() {
    let docs =
        vec![(id("1.1"), tokens("a b")), (id("1.2"), tokens("a c"))];
    let index = build_bm25_index(&corpus_map(&docs)).unwrap();
    let score = bm25_word_score(&index, "c", &id("1.2")).unwrap();
    assert!(
        (score - 2.0f64.ln()).abs() <= 1e-12,
        "score {score} differs from ln 2 = {}",
        2.0f64.ln()
    );
    let sim = bm25_query(&index, "c", 2);
    assert_eq!(sim[0].leaf, id("1.2"));
    assert!((sim[0].score - 2.0f64.ln()).abs() <= 1e-12);
    println!("acceptance 02 (bm25 worked value ln 2): PASS");
}

fn judgment(case_id: &str, method: Method, predicted: Predicted) -> Judgment {
    Judgment {
        case_id: case_id.into(),
        method,
        predicted,
        hits: Vec::new(),
        transcript_keys: Vec::new(),
        error_note: None,
    }
}

/// Criterion 3: the integer confusion matrix reproduces the published
/// per-class P/R/F1 row within ±0.01 and the 77.57% accuracy.
#[test]
fn acceptance_03_metric_reproduction() {
    let start = Instant::now();
    // Rows: predicted Permit/Prohibit/NotApplicable/ParseFailure; columns:
    // gold Permit/Prohibit/NotApplicable. Diagonals and margins pin the
    // published row; off-diagonal spread is one consistent completion.
    let matrix: [[usize; 3]; 4] = [[64, 4, 5], [8, 11, 5], [1, 1, 91], [14, 4, 6]];
    let golds = [Label::Permit, Label::Prohibit, Label::NotApplicable];
    let preds =
        [Predicted::Permit, Predicted::Prohibit, Predicted::NotApplicable, Predicted::ParseFailure];

    let mut cases = Vec::new();
    let mut judgments = Vec::new();
    let mut serial = 0usize;
    for (row, row_counts) in matrix.iter().enumerate() {
        for (col, count) in row_counts.iter().enumerate() {
            for _ in 0..*count {
                let case_id = format!("m-{serial:03}");
                serial += 1;
                cases.push(CaseRecord {
                    id: case_id.clone(),
                    context: "synthetic metric case".into(),
                    gold: golds[col],
                    kind: CaseKind::Real,
                    references: Vec::new(),
                });
                judgments.push(judgment(&case_id, Method::Dp, preds[row]));
            }
        }
    }
    assert_eq!(cases.len(), 214);

    let report = evaluate(&judgments, &cases).unwrap();
    let dp = &report.methods["dp"];
    let close = |got: f64, want: f64| (percent(got) - want).abs() <= 0.01;
    assert!(close(dp.permit.precision, 87.67), "permit precision {}", percent(dp.permit.precision));
    assert!(close(dp.permit.recall, 73.56));
    assert!(close(dp.permit.f1, 80.00));
    assert!(close(dp.prohibit.precision, 45.83));
    assert!(close(dp.prohibit.recall, 55.00));
    assert!(close(dp.prohibit.f1, 50.00));
    assert!(close(dp.not_applicable.precision, 97.84));
    assert!(close(dp.not_applicable.recall, 85.04));
    assert!(close(dp.not_applicable.f1, 91.00));
    assert!(close(dp.accuracy, 77.57), "accuracy {}", percent(dp.accuracy));
    assert_eq!(dp.parse_failures, 24);

    // Randomized cross-check: evaluate agrees with a direct recount of
    // (gold, predicted) pairs to 1e-12.
    let mut rng = ChaCha8Rng::seed_from_u64(0xE7A1);
    for _ in 0..50 {
        let n = rng.random_range(1..=120);
        let pairs: Vec<(Label, Predicted)> = (0..n)
            .map(|_| {
                let gold = *[Label::Permit, Label::Prohibit, Label::NotApplicable]
                    .choose(&mut rng)
                    .unwrap();
                let predicted = *[
                    Predicted::Permit,
                    Predicted::Prohibit,
                    Predicted::NotApplicable,
                    Predicted::ParseFailure,
                ]
                .choose(&mut rng)
                .unwrap();
                (gold, predicted)
            })
            .collect();
        let cases: Vec<CaseRecord> = pairs
            .iter()
            .enumerate()
            .map(|(i, (gold, _))| CaseRecord {
                id: format!("r-{i}"),
                context: "x".into(),
                gold: *gold,
                kind: CaseKind::Synthetic,
                references: Vec::new(),
            })
            .collect();
        let judgments: Vec<Judgment> = pairs
            .iter()
            .enumerate()
            .map(|(i, (_, predicted))| judgment(&format!("r-{i}"), Method::Dp, *predicted))
            .collect();
        let report = evaluate(&judgments, &cases).unwrap();
        let dp = &report.methods["dp"];

        let correct =
            pairs.iter().filter(|(gold, predicted)| predicted.matches(*gold)).count();
        assert!((dp.accuracy - correct as f64 / n as f64).abs() <= 1e-12);
        let diagonal: usize = (0..3).map(|i| dp.confusion[i][i]).sum();
        assert_eq!(diagonal, correct);

        for (class_index, metrics) in
            [(0, &dp.permit), (1, &dp.prohibit), (2, &dp.not_applicable)]
        {
            let gold_label = golds[class_index];
            let pred_label = preds[class_index];
            let tp = pairs
                .iter()
                .filter(|(g, p)| *g == gold_label && *p == pred_label)
                .count() as f64;
            let predicted = pairs.iter().filter(|(_, p)| *p == pred_label).count() as f64;
            let actual = pairs.iter().filter(|(g, _)| *g == gold_label).count() as f64;
            let precision = if predicted == 0.0 { 0.0 } else { tp / predicted };
            let recall = if actual == 0.0 { 0.0 } else { tp / actual };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            assert!((metrics.precision - precision).abs() <= 1e-12);
            assert!((metrics.recall - recall).abs() <= 1e-12);
            assert!((metrics.f1 - f1).abs() <= 1e-12);
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1s");
    println!("acceptance 03 (metric reproduction, {elapsed:?}): PASS");
}

/// Criterion 4: the two-class macro-F1 value.
#[test]
fn acceptance_04_macro_f1() {
    let ma = macro_f1(&[0.8604, 0.5142]);
    assert!((percent(ma) - 68.73).abs() <= 0.01, "macro-F1 {}", percent(ma));
    println!("acceptance 04 (macro-F1 68.73): PASS");
}

fn random_document(rng: &mut ChaCha8Rng) -> String {
    let parts = [100u32, 160, 164];
    let words = ["alpha", "beta", "gamma", "delta", "omega", "kappa"];
    let segments = ["a", "b", "c", "1", "2", "i", "iv"];
    let mut ids = std::collections::BTreeSet::new();
    let explicit = rng.random_range(1..=12);
    for _ in 0..explicit {
        let part = *parts.choose(rng).unwrap();
        let section = rng.random_range(1..=20);
        let depth = rng.random_range(0..=3);
        let segs: Vec<String> =
            (0..depth).map(|_| segments.choose(rng).unwrap().to_string()).collect();
        ids.insert(RegulationId::new(part, section, segs).unwrap().canonical());
    }
    let mut lines: Vec<String> = ids
        .into_iter()
        .map(|id| {
            let word_count = rng.random_range(0..=6);
            let text: Vec<&str> =
                (0..word_count).map(|_| *words.choose(rng).unwrap()).collect();
            if text.is_empty() {
                id
            } else {
                format!("{id} {}", text.join(" "))
            }
        })
        .collect();
    // Document order should not matter for the parsed structure.
    use rand::seq::SliceRandom;
    lines.shuffle(rng);
    lines.join("\n")
}

/// Criterion 5: structural invariants, render/parse round-trip, and
/// persistence identity on 200 random documents, plus exact hand counts on
/// the fixture regulation.
#[test]
fn acceptance_05_tree_invariants_and_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7EE5);
    for trial in 0..200 {
        let text = random_document(&mut rng);
        let tree = parse_document(&text, "ROOT").unwrap();
        assert!(tree.nodes.len() <= 61, "trial {trial}: too many nodes");
        tree.validate().unwrap_or_else(|e| panic!("trial {trial}: {e}"));

        let stats = tree_stats(&tree);
        assert_eq!(
            stats.internal_count + stats.leaf_count,
            stats.edge_count + 1,
            "trial {trial}: edge-count identity"
        );

        // Every child id extends its parent by exactly one segment, and
        // every non-root node has exactly one parent.
        for (key, node) in &tree.nodes {
            if *key == tree.root {
                assert!(node.parent.is_none());
                continue;
            }
            let child_id = parse_regulation_id(key).unwrap();
            match child_id.parent() {
                Some(pid) => assert_eq!(node.parent.as_deref(), Some(pid.canonical().as_str())),
                None => assert_eq!(node.parent.as_deref(), Some(tree.root.as_str())),
            }
        }

        let reparsed = parse_document(&render_document(&tree), "ROOT").unwrap();
        assert_eq!(tree, reparsed, "trial {trial}: render/parse round-trip");

        let checklist = Checklist::new(tree);
        let mut buffer = Vec::new();
        save_checklist(&checklist, &mut buffer).unwrap();
        let loaded = load_checklist(&mut buffer.as_slice()).unwrap();
        assert_eq!(checklist, loaded, "trial {trial}: save/load identity");
    }

    let fixture = parse_document(&read_fixture("mini_regulation.txt"), "HIPAA").unwrap();
    assert_eq!(
        fixture.stats,
        TreeStats {
            internal_count: 8,
            leaf_count: 7,
            edge_count: 14,
            cross_reference_count: 2
        }
    );
    println!("acceptance 05 (tree invariants + round-trip): PASS");
}

/// Criterion 6: a 30-case valid/invalid identifier table classifies with
/// zero errors and canonicalization is idempotent on the valid cases.
#[test]
fn acceptance_06_regulation_id_grammar() {
    let valid = [
        "164.502(a)(1)(iv)",
        "§ 164.508",
        " 160.103 ",
        "1.1",
        "164.502(A)(1)(IV)",
        "999.999",
        "45.164(b)(2)(ii)",
        "2.3(z9)",
        "10.20(abc)(123)(xiv)",
        "164.502(a)",
        "164.514(e)(4)(ii)(B)(1)",
        "§164.512",
        "1.2(i)(v)(x)",
        "12.34(q)",
        "7.8(aa)(bb)",
    ];
    let invalid = [
        "",
        "164",
        "164.",
        ".502",
        "502(a",
        "164.502(",
        "164.502()",
        "164.502(a",
        "164.502 (a)",
        "abc.def",
        "164.502(a)(",
        "164.502)a(",
        "0.5",
        "164.502(a)(1)(i)x",
        "16 4.502",
    ];
    assert_eq!(valid.len() + invalid.len(), 30);
    for case in valid {
        let parsed = parse_regulation_id(case)
            .unwrap_or_else(|e| panic!("{case:?} should parse: {e}"));
        // Idempotence: canonical form re-parses to itself.
        let canonical = parsed.canonical();
        let reparsed = parse_regulation_id(&canonical).unwrap();
        assert_eq!(reparsed, parsed);
        assert_eq!(reparsed.canonical(), canonical);
    }
    for case in invalid {
        assert!(parse_regulation_id(case).is_err(), "{case:?} should be rejected");
    }
    println!("acceptance 06 (id grammar table, 30 cases): PASS");
}

/// Criterion 7: with half the generated ids fabricated, verified retrieval
/// intersects the tree id set at 100% and never exceeds the cap.
#[test]
fn acceptance_07_agent_verification() {
    let checklist = fixture_checklist();
    let tree_ids: Vec<String> = checklist
        .tree
        .nodes
        .keys()
        .filter(|k| **k != checklist.tree.root)
        .cloned()
        .collect();
    let fabricated = ["999.999", "888.1(z)", "777.77(q)(9)", "555.5", "666.12(xx)"];
    for bogus in fabricated {
        assert!(!checklist.verify_id_str(bogus), "{bogus} must not resolve");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xA6E7);
    let max_n = 3;
    for trial in 0..50 {
        let pool_size = rng.random_range(2..=8);
        let mut mentioned = Vec::new();
        for _ in 0..pool_size {
            if rng.random_bool(0.5) {
                mentioned.push(tree_ids.choose(&mut rng).unwrap().clone());
            } else {
                mentioned.push(fabricated.choose(&mut rng).unwrap().to_string());
            }
        }
        let reply = mentioned
            .iter()
            .enumerate()
            .map(|(i, id)| format!("{}. {id} - generated candidate", i + 1))
            .collect::<Vec<_>>()
            .join("\n");
        let client = ChatClient::new(
            Gateway::new(Arc::new(script_mock(vec![ScriptEntry::substring(
                "generate the applicable HIPAA regulations",
                reply,
            )]))),
            "mock-model",
        );
        let hits = agent_retrieve(&client, &checklist, "some event", max_n).unwrap();
        assert!(hits.len() <= max_n, "trial {trial}: exceeded max_n");
        for hit in &hits {
            assert!(
                checklist.verify_id(&hit.leaf),
                "trial {trial}: unverified id {}",
                hit.leaf.canonical()
            );
        }

        // Oracle: first-seen valid ids, deduplicated, truncated.
        let mut expected = Vec::new();
        for raw in &mentioned {
            if expected.len() == max_n {
                break;
            }
            let canonical = parse_regulation_id(raw).unwrap().canonical();
            if checklist.verify_id_str(&canonical) && !expected.contains(&canonical) {
                expected.push(canonical);
            }
        }
        let got: Vec<String> = hits.iter().map(|h| h.leaf.canonical()).collect();
        assert_eq!(got, expected, "trial {trial}");
    }
    println!("acceptance 07 (agent id verification, 50 trials): PASS");
}

/// Criterion 8: the full six-method judge plus evaluation over the 12-case
/// fixture is byte-identical across 3 runs and across max-parallel 1 and 4,
/// in under 10 seconds.
#[test]
fn acceptance_08_end_to_end_mock_determinism() {
    let start = Instant::now();
    let scripts = twelve_case_scripts();
    let cases: Vec<CaseRecord> = scripts.iter().map(|s| s.case.clone()).collect();
    let checklist = fixture_checklist();

    let run = |parallelism: usize| -> (String, String) {
        let entries = build_script(&scripts);
        let gateway = Gateway::with_config(
            Arc::new(script_mock(entries)),
            RetryConfig::default(),
            parallelism,
            None,
        );
        let client = ChatClient::new(gateway, "mock-model");
        let ctx = JudgeContext {
            chat: &client,
            embed: Some(&MockEmbeddingProvider),
            checklist: Some(&checklist),
            config: JudgeConfig::default(),
        };
        let mut judgments = Vec::new();
        for method in METHODS {
            judgments.extend(judge_cases(method, &ctx, &cases, parallelism).unwrap());
        }
        let report = evaluate(&judgments, &cases).unwrap();
        (
            render_report(&report, ReportFormat::TextTable),
            render_report(&report, ReportFormat::Structured),
        )
    };

    let baseline = run(1);
    for parallelism in [1, 1, 4, 4, 4] {
        assert_eq!(run(parallelism), baseline, "parallelism {parallelism}");
    }

    // Sanity on the baseline: all six methods scored over all 12 cases with
    // the deliberate parse failure present.
    let parsed: cicheck::eval::EvaluationReport =
        serde_json::from_str(&baseline.1).unwrap();
    assert_eq!(parsed.case_count, 12);
    assert_eq!(parsed.methods.len(), 6);
    for method in METHODS {
        let entry = &parsed.methods[method.slug()];
        assert!(entry.parse_failures >= 1, "{method} should have a parse failure");
        let total: usize = entry.confusion.iter().flatten().sum();
        assert_eq!(total, 12);
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10s");
    println!("acceptance 08 (end-to-end mock determinism, {elapsed:?}): PASS");
}

/// Criterion 9: subsumption queries equal brute-force reachability on 100
/// random DAGs, and the fixture taxonomy chains surgeon to the role root.
#[test]
fn acceptance_09_subsumption_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDA6);
    for trial in 0..100 {
        let n = rng.random_range(4..=50);
        let labels: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
        let mut records = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(0.12) {
                    records.push((labels[i].clone(), labels[j].clone()));
                }
            }
        }
        let graph = cicheck::graphs::ingest_attribute_ontology(&records).unwrap();

        let pairs: Vec<(usize, usize)> = if n <= 12 {
            (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect()
        } else {
            (0..80).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect()
        };
        for (a, b) in pairs {
            let got = graph.is_subsumed_by(&labels[a], &labels[b]);
            let expected = oracle_reachable(&records, &labels[a], &labels[b]);
            assert_eq!(got, expected, "trial {trial}: {} -> {}", labels[a], labels[b]);
        }
    }

    let tax = FixtureTaxonomy::from_tsv(&read_fixture("taxonomy.tsv")).unwrap();
    let graph =
        build_role_graph(&["surgeon".to_string()], &tax, &BTreeMap::new()).unwrap();
    assert!(graph.is_subsumed_by("surgeon", ROLE_ROOT));
    assert!(!graph.unresolved.contains("surgeon"));
    println!("acceptance 09 (subsumption oracle, 100 DAGs): PASS");
}

/// Criterion 10: the dataset loader reports the published label
/// distributions and mean context lengths on faithful re-exports (synthetic
/// stand-ins with the same shape).
#[test]
fn acceptance_10_dataset_validator() {
    // 214 real cases at mean 311.87 tokens: 66,740 tokens total.
    let real = distribution_case_file(87, 20, 107, 66_740, "real");
    let text = case_file_text(&real);
    let (cases, stats) = cicheck::eval::load_cases(&mut text.as_bytes()).unwrap();
    assert_eq!(cases.len(), 214);
    assert_eq!((stats.permit, stats.prohibit, stats.not_applicable), (87, 20, 107));
    assert!(
        (stats.mean_context_tokens - 311.87).abs() <= 0.5,
        "real mean {}",
        stats.mean_context_tokens
    );

    // 618 synthetic cases at mean 187.30 tokens: 115,751 tokens total.
    let synthetic = distribution_case_file(269, 40, 309, 115_751, "syn");
    let text = case_file_text(&synthetic);
    let (cases, stats) = cicheck::eval::load_cases(&mut text.as_bytes()).unwrap();
    assert_eq!(cases.len(), 618);
    assert_eq!((stats.permit, stats.prohibit, stats.not_applicable), (269, 40, 309));
    assert!(
        (stats.mean_context_tokens - 187.30).abs() <= 0.5,
        "synthetic mean {}",
        stats.mean_context_tokens
    );

    // The counting machinery itself, spot-checked on a tiny synthetic file.
    let tiny = case_file_text(&[
        case_record(0, Label::Permit, "one two three"),
        case_record(1, Label::NotApplicable, "four five"),
    ]);
    let (_, stats) = cicheck::eval::load_cases(&mut tiny.as_bytes()).unwrap();
    assert_eq!(stats.case_count, 2);
    assert!((stats.mean_context_tokens - 2.5).abs() < 1e-12);
    println!("acceptance 10 (dataset validator): PASS");
}

/// The retrieval surfaces the paper's running example end to end: the
/// fixture event roles chain to the annotated norms through the role graph.
#[test]
fn fixture_checklist_supports_the_running_example() {
    let checklist = fixture_checklist();
    assert!(checklist.verify_id_str("164.502(a)(1)(i)"));
    assert!(checklist.role_graph.is_subsumed_by("surgeon", "covered entity"));
    assert!(checklist
        .attribute_graph
        .is_subsumed_by("surgery operative report", "protected health information"));
    assert!(checklist.lookup_definition("Covered Entity").is_some());
    assert_eq!(checklist.norm_leaves(), fixture_norm_ids());

    let stored = &checklist.annotations["164.502(a)(1)(iv)"];
    assert_eq!(stored.reference_relations.len(), 2);
    assert!(!stored.reference_relations[0].dangling);
    assert!(!stored.reference_relations[1].dangling);

    let ranked = tokenize("never mind"); // touch tokenize to anchor the api
    assert_eq!(ranked.len(), 2);
}
