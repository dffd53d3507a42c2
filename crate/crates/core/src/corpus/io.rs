//! AGNews CSV and `Title`/`Description`/`Class_Label` JSONL readers and writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_label, ClassLabel, Corpus, CorpusError, NewsRecord, Origin, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    /// `.jsonl`/`.json` is JSONL, anything else is treated as AGNews CSV.
    pub fn from_path(path: &Path) -> InputFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("json") => {
                InputFormat::Jsonl
            }
            _ => InputFormat::Csv,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonRecord<'a> {
    #[serde(rename = "Title")]
    title: &'a str,
    #[serde(rename = "Description")]
    description: &'a str,
    #[serde(rename = "Class_Label")]
    class_label: &'a str,
}

pub fn load_agnews(path: &Path, format: InputFormat) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    match format {
        InputFormat::Csv => parse_agnews_csv(&text),
        InputFormat::Jsonl => parse_jsonl(&text),
    }
}

/// Parses headerless AGNews CSV rows `class-index,title,description` with
/// class indices 1..=4 mapping to World, Sports, Business, Sci/Tech.
pub fn parse_agnews_csv(text: &str) -> Result<Corpus, CorpusError> {
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| CorpusError::MalformedRow {
            row: row_no,
            reason: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(CorpusError::MalformedRow {
                row: row_no,
                reason: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let raw_class = row[0].trim();
        let label = raw_class
            .parse::<usize>()
            .ok()
            .and_then(|k| k.checked_sub(1))
            .and_then(ClassLabel::from_index)
            .ok_or_else(|| CorpusError::UnknownLabel(raw_class.to_string()))?;
        let record = NewsRecord::new(&row[1], &row[2], label, Origin::Original).map_err(|e| {
            CorpusError::MalformedRow {
                row: row_no,
                reason: e.to_string(),
            }
        })?;
        records.push(record);
    }
    Ok(Corpus::new(records, Split::Unsplit))
}

/// Parses one `{"Title", "Description", "Class_Label"}` object per line.
/// Blank lines are skipped.
pub fn parse_jsonl(text: &str) -> Result<Corpus, CorpusError> {
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| CorpusError::MalformedRow { row: i + 1, reason };
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let field = |key: &str| {
            value
                .get(key)
                .and_then(serde_json::Value::as_str)
                .ok_or_else(|| malformed(format!("missing string field {key}")))
        };
        let label = normalize_label(field("Class_Label")?)?;
        let record = NewsRecord::new(
            field("Title")?,
            field("Description")?,
            label,
            Origin::Original,
        )
        .map_err(|e| malformed(e.to_string()))?;
        records.push(record);
    }
    Ok(Corpus::new(records, Split::Unsplit))
}

pub fn to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for r in &corpus.records {
        let line = serde_json::to_string(&JsonRecord {
            title: r.title(),
            description: r.description(),
            class_label: r.label().as_str(),
        })
        .expect("string fields always serialize");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let io_err = |e: std::io::Error| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(to_jsonl(corpus).as_bytes())
        .map_err(io_err)?;
    file.sync_all().map_err(io_err)
}

/// Serializes records as AGNews-style CSV (class index 1..=4).
pub fn to_agnews_csv(corpus: &Corpus) -> String {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .quote_style(csv::QuoteStyle::Always)
        .from_writer(Vec::new());
    for r in &corpus.records {
        writer
            .write_record([
                (r.label().index() + 1).to_string().as_str(),
                r.title(),
                r.description(),
            ])
            .expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf-8 input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_business_row() {
        let c = parse_agnews_csv("3,\"Dollar Falls\",\"Reuters - The dollar fell...\"\n").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.records[0].label(), ClassLabel::Business);
        assert_eq!(c.records[0].title(), "Dollar Falls");
        assert_eq!(c.records[0].origin(), Origin::Original);
        assert_eq!(c.split, Split::Unsplit);
    }

    #[test]
    fn csv_doubled_quotes_and_order() {
        let text = "\"1\",\"A \"\"quoted\"\" title\",\"desc, with comma\"\n\"4\",\"t2\",\"d2\"\n";
        let c = parse_agnews_csv(text).unwrap();
        assert_eq!(c.records[0].title(), "A \"quoted\" title");
        assert_eq!(c.records[0].description(), "desc, with comma");
        assert_eq!(c.records[1].label(), ClassLabel::SciTech);
    }

    #[test]
    fn csv_errors() {
        assert_eq!(parse_agnews_csv(""), Err(CorpusError::EmptyFile));
        assert_eq!(parse_agnews_csv(" \n"), Err(CorpusError::EmptyFile));
        assert_eq!(
            parse_agnews_csv("5,t,d\n"),
            Err(CorpusError::UnknownLabel("5".into()))
        );
        assert_eq!(
            parse_agnews_csv("0,t,d\n"),
            Err(CorpusError::UnknownLabel("0".into()))
        );
        assert!(matches!(
            parse_agnews_csv("1,t,d\n2,only two\n"),
            Err(CorpusError::MalformedRow { row: 2, .. })
        ));
        assert!(matches!(
            parse_agnews_csv("1,\" \",d\n"),
            Err(CorpusError::MalformedRow { row: 1, .. })
        ));
    }

    #[test]
    fn jsonl_parsing() {
        let c =
            parse_jsonl("{\"Title\":\"t\",\"Description\":\"d\",\"Class_Label\":\"Sports\"}\n\n")
                .unwrap();
        assert_eq!(c.records[0].label(), ClassLabel::Sports);
        assert_eq!(parse_jsonl(""), Err(CorpusError::EmptyFile));
        assert!(matches!(
            parse_jsonl("{\"Title\":\"t\",\"Class_Label\":\"Sports\"}"),
            Err(CorpusError::MalformedRow { row: 1, .. })
        ));
        assert!(matches!(
            parse_jsonl("not json"),
            Err(CorpusError::MalformedRow { row: 1, .. })
        ));
        assert_eq!(
            parse_jsonl("{\"Title\":\"t\",\"Description\":\"d\",\"Class_Label\":\"Politics\"}"),
            Err(CorpusError::UnknownLabel("Politics".into()))
        );
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            InputFormat::from_path(Path::new("a/b.jsonl")),
            InputFormat::Jsonl
        );
        assert_eq!(
            InputFormat::from_path(Path::new("train.csv")),
            InputFormat::Csv
        );
    }

    fn arb_record() -> impl Strategy<Value = NewsRecord> {
        ("\\PC*[a-z]\\PC*", "\\PC*[a-z]\\PC*", 0usize..4).prop_map(|(t, d, l)| {
            NewsRecord::new(t, d, ClassLabel::ALL[l], Origin::Original).unwrap()
        })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(records in prop::collection::vec(arb_record(), 1..20)) {
            let corpus = Corpus::new(records, Split::Unsplit);
            let back = parse_jsonl(&to_jsonl(&corpus)).unwrap();
            prop_assert_eq!(back, corpus);
        }

        #[test]
        fn csv_round_trip(records in prop::collection::vec(arb_record(), 1..20)) {
            let corpus = Corpus::new(records, Split::Unsplit);
            let back = parse_agnews_csv(&to_agnews_csv(&corpus)).unwrap();
            prop_assert_eq!(back, corpus);
        }
    }
}
