//! Lenient decoding of model output into synthetic records.

use serde_json::Value;

use crate::corpus::{normalize_label, NewsRecord, Origin};

/// Records decoded from one response and how many items were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub records: Vec<NewsRecord>,
    pub dropped: usize,
}

/// Decodes a JSON array of `{Title, Description, Class_Label}` objects.
///
/// Accepts a fenced code block, leading/trailing prose, a single top-level
/// object, an object wrapping the array, and keys in any case or with spaces
/// instead of underscores. Items that fail to decode are counted in
/// `dropped`. Returns `None` when no JSON value can be found at all.
pub fn parse_generation_response(raw: &str) -> Option<ParsedResponse> {
    let value = extract_json(raw)?;
    let items: Vec<&Value> = match &value {
        Value::Array(items) => items.iter().collect(),
        Value::Object(map) => match map.values().find(|v| v.is_array()) {
            Some(Value::Array(items)) if record_field(&value, "title").is_none() => {
                items.iter().collect()
            }
            _ => vec![&value],
        },
        _ => return None,
    };
    let mut records = Vec::new();
    let mut dropped = 0;
    for item in items {
        match decode_item(item) {
            Some(r) => records.push(r),
            None => dropped += 1,
        }
    }
    Some(ParsedResponse { records, dropped })
}

fn decode_item(item: &Value) -> Option<NewsRecord> {
    let title = record_field(item, "title")?;
    let description = record_field(item, "description")?;
    let label = record_field(item, "classlabel")
        .or_else(|| record_field(item, "label"))
        .or_else(|| record_field(item, "class"))?;
    let label = normalize_label(label).ok()?;
    NewsRecord::new(title.trim(), description.trim(), label, Origin::Synthetic).ok()
}

fn record_field<'a>(item: &'a Value, wanted: &str) -> Option<&'a str> {
    item.as_object()?
        .iter()
        .find(|(k, _)| normalize_key(k) == wanted)
        .and_then(|(_, v)| v.as_str())
}

fn normalize_key(key: &str) -> String {
    key.chars()
        .filter(|c| !matches!(c, '_' | ' ' | '-'))
        .flat_map(char::to_lowercase)
        .collect()
}

fn extract_json(raw: &str) -> Option<Value> {
    let body = strip_fence(raw);
    if let Ok(v) = serde_json::from_str(body.trim()) {
        return Some(v);
    }
    for (open, close) in [('[', ']'), ('{', '}')] {
        if let (Some(start), Some(end)) = (body.find(open), body.rfind(close)) {
            if start < end {
                if let Ok(v) = serde_json::from_str(&body[start..=end]) {
                    return Some(v);
                }
            }
        }
    }
    None
}

fn strip_fence(raw: &str) -> &str {
    let Some(open) = raw.find("```") else {
        return raw;
    };
    let after = &raw[open + 3..];
    // Skip the info string (e.g. `json`) on the opening fence line.
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}
