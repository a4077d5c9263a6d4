//! Answer-block extraction and payload parsing.
//!
//! Responses carry free-form reasoning followed by one or more
//! `<Answer>...</Answer>` blocks; only the last block counts. The parser
//! tolerates the formatting variance the source model actually produced
//! (bold markers, stray whitespace) and nothing beyond that, so oracle
//! drift surfaces as an error instead of silently degrading.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::OracleError;

/// How to interpret the list lines inside the answer block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSchema {
    /// `- name: description` lines, order preserved.
    NameDescList,
    /// `- entity_name: ['v1', 'v2']` lines, one value list per entity.
    PerEntityValueLists,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnswerPayload {
    NameDescList(Vec<(String, String)>),
    PerEntityValues(BTreeMap<String, Vec<String>>),
}

impl AnswerPayload {
    /// Serializes back to the documented list format; reparsing the result
    /// under the same schema is the identity.
    pub fn to_answer_block(&self) -> String {
        let mut out = String::from("<Answer>\n");
        match self {
            AnswerPayload::NameDescList(items) => {
                for (name, desc) in items {
                    out.push_str(&format!("- {name}: {desc}\n"));
                }
            }
            AnswerPayload::PerEntityValues(map) => {
                for (entity, values) in map {
                    let quoted: Vec<String> = values.iter().map(|v| format!("'{v}'")).collect();
                    out.push_str(&format!("- {entity}: [{}]\n", quoted.join(", ")));
                }
            }
        }
        out.push_str("</Answer>");
        out
    }

    pub fn as_name_desc(&self) -> Option<&[(String, String)]> {
        match self {
            AnswerPayload::NameDescList(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_per_entity(&self) -> Option<&BTreeMap<String, Vec<String>>> {
        match self {
            AnswerPayload::PerEntityValues(m) => Some(m),
            _ => None,
        }
    }
}

/// Returns the content of the last `<Answer>...</Answer>` block.
pub fn extract_answer_block(text: &str) -> Result<&str, OracleError> {
    let open = text.rfind("<Answer>").ok_or(OracleError::NoAnswerBlock)?;
    let body = &text[open + "<Answer>".len()..];
    let close = body.find("</Answer>").ok_or(OracleError::NoAnswerBlock)?;
    Ok(&body[..close])
}

fn strip_bold(s: &str) -> String {
    s.replace("**", "")
}

fn normalize_name(s: &str) -> String {
    let stripped = strip_bold(s);
    let trimmed = stripped.trim().trim_end_matches(['.', ',']);
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses the last answer block of `response_text` under `schema`.
pub fn parse_answer(
    response_text: &str,
    schema: AnswerSchema,
) -> Result<AnswerPayload, OracleError> {
    let block = extract_answer_block(response_text)?;
    match schema {
        AnswerSchema::NameDescList => {
            let mut items = Vec::new();
            for raw in block.lines() {
                let line = raw.trim();
                if line.is_empty() {
                    continue;
                }
                let rest = line
                    .strip_prefix('-')
                    .ok_or_else(|| OracleError::MalformedLine(raw.to_string()))?;
                let (name, desc) = rest
                    .split_once(':')
                    .ok_or_else(|| OracleError::MalformedLine(raw.to_string()))?;
                items.push((normalize_name(name), strip_bold(desc).trim().to_string()));
            }
            Ok(AnswerPayload::NameDescList(items))
        }
        AnswerSchema::PerEntityValueLists => {
            let mut map = BTreeMap::new();
            for raw in block.lines() {
                let line = raw.trim();
                if line.is_empty() {
                    continue;
                }
                let rest = line
                    .strip_prefix('-')
                    .ok_or_else(|| OracleError::MalformedLine(raw.to_string()))?;
                let (entity, list) = rest
                    .split_once(':')
                    .ok_or_else(|| OracleError::MalformedLine(raw.to_string()))?;
                let values = parse_quoted_list(list.trim())
                    .ok_or_else(|| OracleError::MalformedLine(raw.to_string()))?;
                map.insert(normalize_name(entity), values);
            }
            Ok(AnswerPayload::PerEntityValues(map))
        }
    }
}

/// Parses `['a', "b", ...]` into its items; `[]` is an empty list.
fn parse_quoted_list(s: &str) -> Option<Vec<String>> {
    let inner = s.strip_prefix('[')?.strip_suffix(']')?.trim();
    if inner.is_empty() {
        return Some(Vec::new());
    }
    let mut values = Vec::new();
    let mut rest = inner;
    loop {
        rest = rest.trim_start();
        let quote = rest.chars().next()?;
        if quote != '\'' && quote != '"' {
            return None;
        }
        let body = &rest[1..];
        let end = body.find(quote)?;
        values.push(body[..end].to_string());
        rest = body[end + 1..].trim_start();
        if rest.is_empty() {
            break;
        }
        rest = rest.strip_prefix(',')?;
        if rest.trim().is_empty() {
            break;
        }
    }
    Some(values)
}
