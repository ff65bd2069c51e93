//! Prompt templates for annotation, retrieval, filtering, and judgment.
//!
//! The wording is part of the protocol: answer parsers and scripted-mock
//! matchers rely on the section anchors (`Event:`, `Output Format:`,
//! `HIPAA Regulations Reference:`, question labels) staying stable.

use std::fmt::Write as _;

use crate::regdoc::RegulationId;

/// Which questionnaire blocks to include in an annotation prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Question {
    /// Q1: permit / prohibit / general-definition classification.
    Classification,
    /// Q2: the nine transmission-characteristic fields.
    Stakeholders,
    /// Q3: sender-subject identity.
    SenderIsSubject,
    /// Q4: recipient-subject identity.
    RecipientIsSubject,
    /// Q5: support/exception relation per cross-reference.
    ReferenceRelations,
}

/// What the questionnaire is about: a regulation clause or an incoming event.
#[derive(Debug, Clone, Copy)]
pub enum AnnotationSubject<'a> {
    Regulation { id: &'a str },
    Event,
}

impl AnnotationSubject<'_> {
    fn noun(&self) -> String {
        match self {
            AnnotationSubject::Regulation { id } => format!("the regulation {id}"),
            AnnotationSubject::Event => "the event".to_string(),
        }
    }
}

/// The multi-question annotation prompt. Questions are issued together and
/// parsed independently from the single reply.
pub fn questionnaire_prompt(
    subject: AnnotationSubject<'_>,
    text: &str,
    references: &[RegulationId],
    questions: &[Question],
) -> String {
    let noun = subject.noun();
    let mut out = String::new();
    match subject {
        AnnotationSubject::Regulation { id } => {
            let _ = write!(
                out,
                "As a legal expert specializing in the HIPAA Privacy Rule, your task is to \
                 read a specific paragraph of the regulation {id}:\n{text}"
            );
        }
        AnnotationSubject::Event => {
            let _ = write!(
                out,
                "As a legal expert specializing in the HIPAA Privacy Rule, your task is to \
                 read the description of an information transmission event:\n{text}"
            );
        }
    }
    out.push_str("\n\nNow complete the following questions one by one:\n");
    for question in questions {
        match question {
            Question::Classification => {
                let _ = write!(
                    out,
                    "\nQ1. (\"Prohibit\", \"Permit\" or \"General Definition\") Ascertain \
                     whether {noun} pertains to scenes that are:\n\
                     A. Prohibit by law\n\
                     B. Permit by law\n\
                     C. General Definition\n"
                );
            }
            Question::Stakeholders => {
                let _ = write!(
                    out,
                    "\nQ2. (Identify the stakeholders related to {noun}) Identify the \
                     stakeholders related to {noun}. Your response must include the following \
                     seven characteristics about the flow of private information: [Sender, \
                     Sender Role, Recipient, Recipient Role, Subject, Subject Role, Information \
                     Type, Consent Form, Purpose]. Answer 'None' if no information about \
                     characteristics is present.\n\n\
                     The \"Sender,\" \"Recipient,\" and \"Subject\" fields indicate the sender, \
                     recipient, and the data subject during information transmission.\n\
                     The \"Sender Role\", \"Recipient Role\" and \"Subject Role\" fields \
                     indicate the role of the sender, recipient and subject (e.g., doctor, \
                     patient).\n\
                     The \"Information Type\" field defines what kind of information would be \
                     passed, such as name or location.\n\
                     The \"Consent Form\" field indicates whether the sender has obtained \
                     consent from the subject to send the message. If consent is required, you \
                     should answer \"Consent\" for a flexible requirement or \"Authorization\" \
                     for a formal and mandatory process required by the context. If consent is \
                     not related to the context, you should answer \"None.\"\n\
                     The \"Purpose\" field indicates the purpose of the mentioned information \
                     transmission, such as treatment, payment, or health care operations.\n"
                );
            }
            Question::SenderIsSubject => {
                out.push_str(
                    "\nQ3: Are the Sender and Subject the same person?\n\
                     A. Yes\n\
                     B. No\n\
                     C. Not Sure\n",
                );
            }
            Question::RecipientIsSubject => {
                out.push_str(
                    "\nQ4: Is Recipient and Subject the same person?\n\
                     A. Yes\n\
                     B. No\n\
                     C. Not Sure\n",
                );
            }
            Question::ReferenceRelations => {
                let list = references
                    .iter()
                    .map(RegulationId::canonical)
                    .collect::<Vec<_>>()
                    .join(", ");
                let _ = write!(
                    out,
                    "\nQ5. (Identify the relation between {noun} and other sub-parts referred \
                     to in the context) Identify the relation between {noun} and referred \
                     [{list}]. For each reference in [{list}], according to the context given, \
                     determine if the reference is an exception of {noun} or support the \
                     argument of {noun}. Answer with \"Exception\" or \"Support\" for each \
                     reference.\n"
                );
            }
        }
    }
    out
}

const CHOICE_LINE: &str = "Choice: [A. Prohibited | B. Permitted | C. Not related ]";

/// Direct three-way decision, no reasoning scaffold.
pub fn direct_prompt(event: &str) -> String {
    format!(
        "Determine the relationship between the provided event and HIPAA regulations. You \
         have three options for your conclusion:\n\
         (A) The event is prohibited by HIPAA.\n\
         (B) The event is permitted by HIPAA.\n\
         (C) The event is not related to HIPAA.\n\n\
         Event:\n{event}\n\n\
         Output Format:\n\n\
         {CHOICE_LINE}"
    )
}

/// Chain-of-thought with model-generated planning (at most 6 steps).
pub fn cot_auto_prompt(event: &str) -> String {
    format!(
        "Determine the relationship between the provided event and HIPAA regulations. You \
         have three options for your conclusion:\n\
         (A) The event is prohibited by HIPAA.\n\
         (B) The event is permitted by HIPAA.\n\
         (C) The event is not related to HIPAA.\n\n\
         Event:\n{event}\n\n\
         Let's approach this step by step:\n\n\
         Planning: Outline the steps (no more than 6) necessary to analyze the relationship \
         of the event with HIPAA standards.\n\
         Execution: Implement these steps to gather information and assess the specific \
         aspects of the event.\n\
         Decision Making: Based on the information collected and analyzed, determine if there \
         was a HIPAA violation.\n\n\
         Output Format:\n\n\
         Plans: [List the steps planned to evaluate the event:]\n\
         plan 1 - ...\n\
         plan 2 - ...\n\
         ....\n\
         plan N - ...\n\n\
         Execution: [Document the outcomes from executing your plans:]\n\
         plan 1 - ....\n\
         plan 2 - ....\n\
         ....\n\
         plan N - ...\n\n\
         {CHOICE_LINE}"
    )
}

/// Chain-of-thought with the fixed five-step transmission-analysis guideline.
pub fn cot_manual_prompt(event: &str) -> String {
    format!(
        "Determine the relationship between the provided event and HIPAA regulations. You \
         have three options for your conclusion:\n\
         (A) The event is prohibited by HIPAA.\n\
         (B) The event is permitted by HIPAA.\n\
         (C) The event is not related to HIPAA.\n\n\
         Event:\n{event}\n\n\
         Let's approach this step by step:\n\n\
         1. Identify Relevant HIPAA Regulations: Start by researching and compiling the HIPAA \
         regulations that could be relevant to the event, particularly focusing on privacy, \
         security, and breach notification rules.\n\
         2. Examine the Nature of Information: Determine if the event involves any Protected \
         Health Information (PHI), such as names, medical records, or other personal \
         identifiers.\n\
         3. Evaluate HIPAA Applicability: Assess whether the event actually falls under the \
         jurisdiction of HIPAA based on the nature of the entity involved and the type of \
         information handled.\n\
         4. Assess Authorization and Consent: If HIPAA is applicable, verify if the recipient \
         of the information was authorized and check for valid patient consent or another \
         legal basis for sharing PHI.\n\
         5. Evaluate Security Measures: If applicable, review the security measures used \
         during the information transmission to ensure they comply with HIPAA's security \
         protocols.\n\n\
         Output Format:\n\n\
         Execution: [Document the outcomes from executing your plans:]\n\
         plan 1 - ....\n\
         plan 2 - ....\n\
         ....\n\
         plan 5 - ....\n\n\
         {CHOICE_LINE}"
    )
}

/// Ask the model itself for applicable regulation ids (capped at `max_n`).
pub fn agent_id_generation_prompt(event: &str, max_n: usize) -> String {
    format!(
        "Read the event described below and generate the applicable HIPAA regulations (no \
         more than {max_n}). This regulation will assist in determining if the event violates \
         HIPAA security principles in a downstream task.\n\n\
         Event: {event}\n\n\
         Let's complete it step by step:\n\
         1. Review the Event Details: Understand the specifics of the event, including the \
         type of information sent, the method of transmission, and the parties involved.\n\
         2. Identify Key HIPAA Concerns: Based on the event, identify potential concerns \
         related to privacy, security, and breach notifications.\n\
         3. Retrieve Relevant Regulations: Consult the HIPAA regulatory text to find sections \
         specifically addressing the identified concerns. Consider feedback to avoid \
         repeating previously rejected regulations.\n\n\
         Output Format:\n\n\
         Execution: [Document the outcomes from executing the steps:]\n\
         1. - ...\n\
         2. - ...\n\
         ...\n\
         4. - ...\n\n\
         Generated Related HIPAA Regulations(e.g. re\"[0-9]+\\.[0-9]+(\\([0-9A-Za-zivx]+\\))*\" \
         - xxxx):\n\
         1. Section Number - Section Content\n\
         ...\n\
         N. Section Number - Section Content\n\n\
         Output:"
    )
}

/// Ask the model to restate the event in regulation terminology; the reply
/// is used verbatim as the lexical retrieval query.
pub fn explanation_prompt(event: &str) -> String {
    format!(
        "I will provide you with an event concerning the delivery of information. Your task \
         is to generate content related to this event by applying your knowledge of HIPAA \
         regulations.\n\n\
         To ensure the content is relevant and accurate, follow these steps:\n\n\
         1. Understand the Event: Clearly define and understand the specifics of the event. \
         Identify the key players involved, the type of information being handled, and the \
         context in which it is being delivered.\n\
         2. Apply HIPAA Knowledge: Utilize your understanding of HIPAA regulations, focusing \
         on privacy, security, and the minimum necessary information principles. Ensure that \
         your content addresses these aspects in the context of the event.\n\n\
         Event Details:\n{event}\n\n\
         Output Format:\n\n\
         Execution:\n\n\
         1. Identify the key players, type of information, and context.\n\
         2. Apply relevant HIPAA principles to the event.\n\n\
         Generated HIPAA Content:\n\
         1. HIPAA Privacy Rule: ...\n\
         2. HIPAA Security Rule: ...\n\
         3. Minimum Necessary Standard:...\n\n\
         References:\n\
         List the specific HIPAA regulations you consulted to generate the content."
    )
}

/// Relevance screen for one retrieved candidate. The reply's first
/// yes/no/NONE token decides keep, drop, or unrelated-to-all.
pub fn law_filter_prompt(event: &str, candidate: &str) -> String {
    format!(
        "Given a regulation and an information sending or requesting event, identify if the \
         given regulation is relevant to the event. The process involves the following \
         steps:\n\n\
         1. **Understand the Event**:\n   \
         - Extract key details from the description of the event, such as the type of \
         information being exchanged, the parties involved, and the context or domain (e.g., \
         healthcare, finance, education).\n\n\
         2. **Analyze The Regulation**:\n   \
         - For given regulation, determine its scope and main focus by reading the summary or \
         key sections. Identify the primary subject matter, applicable contexts, or targeted \
         stakeholders.\n\n\
         3. **Relevance Matching**:\n   \
         - Compare the key details of the event with the main focus of the regulation. \
         Consider:\n     \
         - Does the regulation explicitly address scenarios similar to the event?\n     \
         - Is the regulation intended for the context or domain of the event?\n     \
         - Are the parties involved in the event the type of entities the regulation aims to \
         govern?\n\n\
         4. **Filtering Decision**:\n   \
         - If a regulation's focus aligns well with the event's details, please answer yes.\n   \
         - If there is little to no alignment, such as different contexts, unrelated \
         subjects, or inappropriate scopes, please answer no.\n\n\
         Event: {event}\n\n\
         HIPAA Regulation:\n{candidate}\n\n\
         Note:\n\
         It is possible that the event may be completely unrelated to the HIPAA regulations \
         provided. In such cases, just answer NONE.\n\n\
         Question:\n\
         Is the given HIPAA Regulation relevant with the given event?\n\n\
         Output Format:\n\
         First answer yes or no, then explain the reason based on the given steps."
    )
}

/// Final decision prompt when only regulation ids are available.
pub fn decision_with_ids_prompt(event: &str, reference_block: &str) -> String {
    format!(
        "Determine the relationship between the provided event and HIPAA regulations. You \
         have three options for your conclusion:\n\
         (A) The event is prohibited by HIPAA.\n\
         (B) The event is permitted by HIPAA.\n\
         (C) The event is not related to HIPAA.\n\n\
         I will offer you some retrieved HIPAA regulations for reference(Not 100% correct.) \
         Consider the specifics of the event, offered sections of HIPAA regulations.\n\n\
         Event:\n{event}\n\n\
         HIPAA Regulations Reference:\n{reference_block}\n\n\
         Let's complete it step by step:\n\
         1. Understand the Event: Read the description of the event carefully to know exactly \
         what happened.\n\
         2. Look Up HIPAA Rules: Get the HIPAA regulations that are provided and find the \
         parts that might relate to the event.\n\
         3. Check for Key Points: Focus on important details of the event like the kind of \
         information involved, who is handling it, and how it's being shared or used.\n\
         4. Compare the Event with the Rules: See how the details of the event stack up \
         against the HIPAA rules to find any matches or issues.\n\n\
         Output Format:\n\n\
         Execution: [Document the outcomes from executing the steps:]\n\
         1. - ...\n\
         2. - ...\n\
         ...\n\
         4. - ...\n\n\
         {CHOICE_LINE}"
    )
}

/// Final decision prompt with retrieved regulation ids and content.
pub fn decision_with_content_prompt(event: &str, reference_block: &str) -> String {
    format!(
        "Assess the relationship between the provided event and HIPAA regulations, and \
         select one of the following conclusions:\n\n\
         (A) The event is prohibited by HIPAA.\n\
         (B) The event is permitted by HIPAA.\n\
         (C) The event is not related to HIPAA.\n\n\
         You will be given some sections of HIPAA regulations for reference (Note: these \
         references may not be 100% accurate). Your task is to consider the specifics of the \
         event in light of these sections. Remember that the provided references are not \
         exhaustive, and the presence of a regulation does not automatically imply relevance \
         or violation.\n\n\
         Event:\n{event}\n\n\
         HIPAA Regulations Reference:\n{reference_block}\n\n\
         Let's complete it step by step:\n\
         1. Analyze the specific details of the event by identifying who is involved (sender \
         and recipient), what information is being sent or requested, and for what purpose.\n\
         2. Compare key elements of the event with HIPAA rules, identifying if they involve \
         the use, disclosure, or protection of Protected Health Information (PHI) as defined \
         by HIPAA.\n\
         3. Evaluate the provided HIPAA regulation excerpts to see if they directly relate to \
         the event.\n\
         4. Consider if there are other HIPAA rules not mentioned in the excerpts that might \
         apply.\n\
         5. Conclude based on the comprehensive analysis whether the event is in compliance, \
         in violation, or unrelated to HIPAA.\n\n\
         Output Format:\n\n\
         Execution: [Document the outcomes from executing each step]:\n\
         1. - ...\n\
         2. - ...\n\
         ...\n\
         5. - ...\n\n\
         Choice: [A. Prohibited | B. Permitted | C. Not related]"
    )
}
