//! Shared fixtures and independent oracles for the integration suites.
//! Each test target uses its own subset of these helpers.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cicheck::checklist::{
    CICharacteristics, Checklist, ConsentForm, DefinitionDictionary, NormAnnotation, NormType,
    Provenance, ReferenceRelation, RelationKind, TernaryAnswer,
};
use cicheck::gateway::ScriptEntry;
use cicheck::graphs::{
    build_role_graph, ingest_attribute_ontology, parse_defined_roles_tsv, parse_ontology_tsv,
    FixtureTaxonomy,
};
use cicheck::judge::{CaseKind, CaseRecord, Label};
use cicheck::regdoc::{parse_document, parse_regulation_id, RegulationId};

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).expect("fixture file readable")
}

pub fn id(s: &str) -> RegulationId {
    parse_regulation_id(s).expect("valid id")
}

fn annotation(
    leaf: &str,
    norm_type: NormType,
    sender_role: Option<&str>,
    recipient_role: Option<&str>,
    information_type: Option<&str>,
    purpose: Option<&str>,
    consent: ConsentForm,
    relations: Vec<(&str, RelationKind)>,
) -> NormAnnotation {
    let characteristics = (norm_type != NormType::GeneralDefinition).then(|| CICharacteristics {
        sender: sender_role.map(|r| format!("the {r}")),
        sender_role: sender_role.map(str::to_string),
        recipient: recipient_role.map(|r| format!("the {r}")),
        recipient_role: recipient_role.map(str::to_string),
        subject: Some("the individual".to_string()),
        subject_role: Some("patient".to_string()),
        information_type: information_type.map(str::to_string),
        purpose: purpose.map(str::to_string),
        consent_form: consent,
        sender_is_subject: TernaryAnswer::No,
        recipient_is_subject: TernaryAnswer::NotSure,
    });
    NormAnnotation {
        leaf: id(leaf),
        norm_type,
        characteristics,
        reference_relations: relations
            .into_iter()
            .map(|(target, kind)| ReferenceRelation { target: id(target), kind, dangling: false })
            .collect(),
        provenance: Provenance {
            annotator: "fixture".to_string(),
            transcript_key: format!("leaf:{leaf}"),
        },
    }
}

/// The fully-annotated mini checklist: parsed fixture regulation, hand
/// annotations, fixture graphs, and the definition dictionary.
pub fn fixture_checklist() -> Checklist {
    let tree = parse_document(&read_fixture("mini_regulation.txt"), "HIPAA").expect("parses");
    let mut checklist = Checklist::new(tree);

    let annotations = vec![
        annotation(
            "164.502(a)(1)(i)",
            NormType::Positive,
            Some("covered entity"),
            Some("individual"),
            Some("protected health information"),
            None,
            ConsentForm::None,
            vec![],
        ),
        annotation(
            "164.502(a)(1)(iv)",
            NormType::Positive,
            Some("covered entity"),
            None,
            Some("protected health information"),
            Some("authorized uses"),
            ConsentForm::Authorization,
            vec![
                ("164.502(a)(5)(i)", RelationKind::Exception),
                ("164.508", RelationKind::Support),
            ],
        ),
        annotation(
            "164.502(a)(5)(i)",
            NormType::Negative,
            Some("covered entity"),
            None,
            Some("protected health information"),
            Some("marketing"),
            ConsentForm::Authorization,
            vec![],
        ),
        annotation(
            "164.506(c)",
            NormType::Positive,
            Some("covered entity"),
            Some("health care provider"),
            Some("protected health information"),
            Some("treatment"),
            ConsentForm::None,
            vec![],
        ),
        annotation(
            "164.508(a)",
            NormType::Positive,
            Some("covered entity"),
            None,
            Some("psychotherapy notes"),
            Some("authorized disclosure"),
            ConsentForm::Authorization,
            vec![],
        ),
        annotation(
            "164.510(b)",
            NormType::Positive,
            Some("covered entity"),
            Some("family member"),
            Some("protected health information"),
            Some("involvement in care"),
            ConsentForm::Consent,
            vec![],
        ),
        annotation("160.103", NormType::GeneralDefinition, None, None, None, None, ConsentForm::None, vec![]),
    ];
    for annotation in annotations {
        checklist.insert_annotation(annotation).expect("fixture annotation inserts");
    }

    let tax = FixtureTaxonomy::from_tsv(&read_fixture("taxonomy.tsv")).expect("taxonomy parses");
    let defined =
        parse_defined_roles_tsv(&read_fixture("defined_roles.tsv")).expect("defined roles parse");
    let roles: Vec<String> = [
        "surgeon",
        "doctor",
        "nurse",
        "health care provider",
        "health plan",
        "health care clearinghouse",
        "individual",
        "patient",
        "family member",
    ]
    .into_iter()
    .map(str::to_string)
    .collect();
    checklist.role_graph = build_role_graph(&roles, &tax, &defined).expect("role graph builds");

    let records = parse_ontology_tsv(&read_fixture("ontology.tsv")).expect("ontology parses");
    checklist.attribute_graph = ingest_attribute_ontology(&records).expect("attribute graph");
    checklist.definitions =
        DefinitionDictionary::from_tsv(&read_fixture("definitions.tsv")).expect("definitions");
    checklist.validate().expect("fixture checklist is valid");
    checklist
}

/// Direct one-pass evaluation of the ranking formula, independent of the
/// index implementation: recounts N, avgdl, document frequency, and term
/// frequency from the raw token lists on every call.
pub fn oracle_word_score(
    docs: &[(RegulationId, Vec<String>)],
    token: &str,
    target: usize,
    k1: f64,
    b: f64,
) -> f64 {
    let total_docs = docs.len() as f64;
    let avgdl: f64 = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / total_docs;
    let containing = docs.iter().filter(|(_, tokens)| tokens.iter().any(|t| t == token)).count();
    let freq = docs[target].1.iter().filter(|t| *t == token).count() as f64;
    if freq == 0.0 {
        return 0.0;
    }
    let idf = (1.0 + (total_docs - containing as f64 + 0.5) / (containing as f64 + 0.5)).ln();
    let doc_len = docs[target].1.len() as f64;
    idf * freq * (k1 + 1.0) / (freq + k1 * (1.0 - b + b * doc_len / avgdl))
}

/// Query-level oracle: sum of word scores over the query token sequence.
pub fn oracle_similarity(
    docs: &[(RegulationId, Vec<String>)],
    query_tokens: &[String],
    target: usize,
    k1: f64,
    b: f64,
) -> f64 {
    query_tokens.iter().map(|t| oracle_word_score(docs, t, target, k1, b)).sum()
}

/// Brute-force reachability by depth-first search over the raw edge list.
pub fn oracle_reachable(edges: &[(String, String)], from: &str, to: &str) -> bool {
    if from == to {
        return true;
    }
    let mut stack = vec![from.to_string()];
    let mut seen = std::collections::BTreeSet::new();
    while let Some(current) = stack.pop() {
        for (child, parent) in edges {
            if *child == current {
                if parent == to {
                    return true;
                }
                if seen.insert(parent.clone()) {
                    stack.push(parent.clone());
                }
            }
        }
    }
    false
}

/// Scripted replies for one case across every pipeline stage.
#[derive(Debug, Clone)]
pub struct CaseScript {
    pub case: CaseRecord,
    pub dp: String,
    pub cot_auto: String,
    pub cot_manual: String,
    /// Reply to the agent id-generation prompt; ids get verified downstream.
    pub agent_ids: String,
    /// Reply used verbatim as the lexical retrieval query.
    pub explanation: String,
    /// Reply to the event characteristics questionnaire.
    pub extraction: String,
    /// Reply to every relevance-filter prompt for this case.
    pub filter: String,
    /// Reply to the ids-only decision prompt (agent pipeline).
    pub decision_ids: String,
    /// Reply to the ids-plus-content decision prompt (lexical/embedding).
    pub decision_content: String,
}

pub fn case_record(index: usize, gold: Label, context: &str) -> CaseRecord {
    CaseRecord {
        id: format!("case-{index:02}"),
        context: context.to_string(),
        gold,
        kind: if index % 2 == 0 { CaseKind::Real } else { CaseKind::Synthetic },
        references: Vec::new(),
    }
}

fn extraction_reply(sender_role: &str) -> String {
    format!(
        "Sender: the {sender_role}\nSender Role: {sender_role}\nRecipient: the individual\n\
         Recipient Role: individual\nSubject: the individual\nSubject Role: patient\n\
         Information Type: protected health information\nConsent Form: None\n\
         Purpose: treatment\nQ3: B. No\nQ4: A. Yes"
    )
}

/// A choice reply (`Choice: B`) or deliberately unparseable garbage.
pub fn choice_reply(letter: Option<char>) -> String {
    match letter {
        Some(letter) => format!("Execution: reviewed the event.\n\nChoice: {letter}"),
        None => "The event seems complicated; no definite conclusion.".to_string(),
    }
}

/// The 12-case deterministic fixture with mixed gold labels, varied method
/// outcomes, and one always-unparseable case.
pub fn twelve_case_scripts() -> Vec<CaseScript> {
    let golds = [
        Label::Permit,
        Label::Permit,
        Label::Permit,
        Label::Permit,
        Label::Permit,
        Label::Prohibit,
        Label::Prohibit,
        Label::Prohibit,
        Label::NotApplicable,
        Label::NotApplicable,
        Label::NotApplicable,
        Label::NotApplicable,
    ];
    let contexts = [
        "Surgeon Alice hands Bob his own operative report after the procedure.",
        "A clinic sends treatment records to the attending physician at another hospital.",
        "A health plan discloses claim details to its member upon request.",
        "A nurse shares discharge instructions with the patient before release.",
        "A hospital releases psychotherapy notes after obtaining a signed authorization.",
        "A pharmacy sells patient prescription lists to an advertising firm.",
        "A billing contractor posts patient diagnoses on a public forum.",
        "A clinic emails a marketing agency the list of recent maternity admissions.",
        "A bakery publishes its sourdough schedule for the neighborhood.",
        "An airline updates its frequent-flyer lounge menu.",
        "A library extends weekend opening hours for students.",
        "A weather service posts the regional forecast for the holiday.",
    ];
    // Per-case decision letters per stage; `None` is an unparseable reply.
    // case-04 fails to parse everywhere, exercising the failure row.
    let dp_letters = [
        Some('B'), Some('B'), Some('C'), Some('B'), None,
        Some('A'), Some('B'), Some('A'), Some('C'), Some('C'), Some('A'), Some('C'),
    ];
    let cot_letters = [
        Some('B'), Some('B'), Some('B'), Some('B'), None,
        Some('A'), Some('A'), Some('B'), Some('C'), Some('C'), Some('C'), Some('C'),
    ];
    let rag_letters = [
        Some('B'), Some('B'), Some('B'), Some('B'), None,
        Some('A'), Some('A'), Some('A'), Some('C'), Some('C'), Some('C'), Some('C'),
    ];
    let sender_roles = [
        "surgeon", "doctor", "health plan", "nurse", "surgeon", "health plan",
        "doctor", "surgeon", "baker", "pilot", "librarian", "meteorologist",
    ];
    let agent_id_lists = [
        "1. 164.502(a)(1)(i) - disclosure to the individual\n2. 999.999 - fabricated",
        "1. 164.506(c) - treatment disclosures",
        "1. 164.502(a)(1)(i)\n2. 164.502(a)(1)(iv)",
        "1. 164.506(c)\n2. 164.510(b)\n3. 777.777 - fabricated",
        "1. 164.508(a)",
        "1. 164.502(a)(5)(i) - marketing prohibition",
        "1. 164.502(a)(5)(i)\n2. 164.502(a)(1)(iv)",
        "1. 164.502(a)(5)(i)\n2. 888.888 - fabricated",
        "No applicable regulations found.",
        "Perhaps 555.555 applies.",
        "None come to mind.",
        "1. 164.510(b) - but it is a stretch",
    ];
    let filters = [
        "yes", "yes", "yes", "yes", "yes", "yes", "yes", "yes",
        "NONE", "no", "NONE", "no",
    ];

    (0..12)
        .map(|i| CaseScript {
            case: case_record(i, golds[i], contexts[i]),
            dp: choice_reply(dp_letters[i]),
            cot_auto: choice_reply(cot_letters[i]),
            cot_manual: choice_reply(cot_letters[i]),
            agent_ids: agent_id_lists[i].to_string(),
            explanation: format!(
                "A covered entity handles protected health information: {}",
                contexts[i].to_lowercase()
            ),
            extraction: extraction_reply(sender_roles[i]),
            filter: filters[i].to_string(),
            decision_ids: choice_reply(rag_letters[i]),
            decision_content: choice_reply(rag_letters[i]),
        })
        .collect()
}

/// Compile case scripts into mock entries. Matchers are contiguous
/// substrings spanning a template anchor and the case context, so each
/// (stage, case) pair resolves uniquely.
pub fn build_script(scripts: &[CaseScript]) -> Vec<ScriptEntry> {
    let mut entries = Vec::new();
    for script in scripts {
        let event = &script.case.context;
        entries.push(ScriptEntry::substring(
            format!("Event:\n{event}\n\nOutput Format:"),
            &script.dp,
        ));
        entries.push(ScriptEntry::substring(
            format!("Event:\n{event}\n\nLet's approach this step by step:\n\nPlanning:"),
            &script.cot_auto,
        ));
        entries.push(ScriptEntry::substring(
            format!("Event:\n{event}\n\nLet's approach this step by step:\n\n1. Identify Relevant"),
            &script.cot_manual,
        ));
        entries.push(ScriptEntry::substring(
            format!("Event: {event}\n\nLet's complete it step by step:\n1. Review the Event"),
            &script.agent_ids,
        ));
        entries.push(ScriptEntry::substring(
            format!("Event Details:\n{event}\n\nOutput Format:"),
            &script.explanation,
        ));
        entries.push(ScriptEntry::substring(
            format!("{event}\n\nNow complete the following questions"),
            &script.extraction,
        ));
        entries.push(ScriptEntry::substring(
            format!("Event: {event}\n\nHIPAA Regulation:"),
            &script.filter,
        ));
        entries.push(ScriptEntry::substring(
            format!("offered sections of HIPAA regulations.\n\nEvent:\n{event}"),
            &script.decision_ids,
        ));
        entries.push(ScriptEntry::substring(
            format!("automatically imply relevance or violation.\n\nEvent:\n{event}"),
            &script.decision_content,
        ));
    }
    entries
}

/// Serialize script entries to the line-delimited on-disk format.
pub fn script_file_text(entries: &[ScriptEntry]) -> String {
    use cicheck::gateway::{Matcher, ScriptRecord};
    let mut out = String::new();
    for entry in entries {
        let (match_type, pattern) = match &entry.matcher {
            Matcher::Exact(p) => ("exact", p.clone()),
            Matcher::Substring(p) => ("substring", p.clone()),
        };
        let record = ScriptRecord {
            match_type: match_type.to_string(),
            pattern,
            reply: entry.reply.clone(),
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Case records serialized as the line-delimited case file format.
pub fn case_file_text(cases: &[CaseRecord]) -> String {
    let mut out = String::new();
    for case in cases {
        out.push_str(&serde_json::to_string(case).expect("case serializes"));
        out.push('\n');
    }
    out
}

/// Synthetic case file matching a target label distribution and mean
/// whitespace-token context length (total tokens spread as evenly as
/// possible across the cases).
pub fn distribution_case_file(
    permit: usize,
    prohibit: usize,
    not_applicable: usize,
    total_tokens: usize,
    prefix: &str,
) -> Vec<CaseRecord> {
    let count = permit + prohibit + not_applicable;
    let base = total_tokens / count;
    let remainder = total_tokens % count;
    let mut cases = Vec::with_capacity(count);
    for index in 0..count {
        let tokens = base + usize::from(index < remainder);
        let gold = if index < permit {
            Label::Permit
        } else if index < permit + prohibit {
            Label::Prohibit
        } else {
            Label::NotApplicable
        };
        let context: Vec<String> = (0..tokens).map(|t| format!("w{t}")).collect();
        cases.push(CaseRecord {
            id: format!("{prefix}-{index:04}"),
            context: context.join(" "),
            gold,
            kind: CaseKind::Real,
            references: Vec::new(),
        });
    }
    cases
}

/// Expected norm-corpus map of the fixture checklist, recomputed directly.
pub fn fixture_norm_ids() -> Vec<RegulationId> {
    [
        "164.502(a)(1)(i)",
        "164.502(a)(1)(iv)",
        "164.502(a)(5)(i)",
        "164.506(c)",
        "164.508(a)",
        "164.510(b)",
    ]
    .into_iter()
    .map(id)
    .collect()
}

pub fn tokens(words: &str) -> Vec<String> {
    words.split_whitespace().map(str::to_string).collect()
}

pub fn corpus_map(pairs: &[(RegulationId, Vec<String>)]) -> BTreeMap<RegulationId, String> {
    pairs.iter().map(|(id, tokens)| (id.clone(), tokens.join(" "))).collect()
}
