//! TSV readers and writers for the supported dataset layouts.
//!
//! Malformed rows never abort a read: they are skipped and reported back
//! as warnings carrying 1-based line numbers.

use std::io::Write as _;
use std::path::Path;

use crate::folc::{EMOTION_NAMES, N_EMOTIONS, N_REACTIONS};

use super::{RawPost, TextError};

/// Required first line of a posts file. Column order is historical and
/// differs from the canonical reaction order.
pub const POSTS_HEADER: &str = "text\tlove\twow\thaha\tsad\tangry";

/// Canonical reaction index for each posts-file count column.
const POSTS_COLUMN_TO_CANONICAL: [usize; N_REACTIONS] = [3, 4, 0, 1, 2];

/// Items that survived a read, plus per-line warnings for rows that did not.
#[derive(Debug, Clone)]
pub struct Ingested<T> {
    pub items: Vec<T>,
    pub warnings: Vec<String>,
}

/// Input layouts for emotion-labeled datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EmotionFormat {
    /// `text` + six 0..=100 integer scores in canonical emotion order;
    /// the label is the unique argmax, score ties drop the row.
    Affective,
    /// `text<TAB>label`; `joy` maps to happiness, shame and guilt rows are
    /// dropped.
    Isear,
    /// `text<TAB>label`, or `text` + four annotator labels kept only when
    /// unanimous (three votes suffice for disgust). Neutral rows are
    /// dropped.
    Fairy,
}

fn read_file(path: &Path) -> Result<String, TextError> {
    std::fs::read_to_string(path)
        .map_err(|source| TextError::Io { path: path.display().to_string(), source })
}

fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, TextError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| TextError::Io { path: path.display().to_string(), source })
}

fn io_error(path: &Path, source: std::io::Error) -> TextError {
    TextError::Io { path: path.display().to_string(), source }
}

/// Reads a reaction-tally posts file. The header line is mandatory.
pub fn read_posts_tsv(path: &Path) -> Result<Ingested<RawPost>, TextError> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();

    let header = lines.next().map(|(_, l)| l.trim_end_matches('\r')).unwrap_or("");
    if header != POSTS_HEADER {
        return Err(TextError::BadHeader {
            path: path.display().to_string(),
            expected: POSTS_HEADER.to_string(),
            found: header.to_string(),
        });
    }

    let mut items = Vec::new();
    let mut warnings = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 1 + N_REACTIONS {
            warnings.push(format!(
                "line {line_no}: expected {} tab-separated fields, found {}",
                1 + N_REACTIONS,
                fields.len()
            ));
            continue;
        }
        let mut hits = [0u64; N_REACTIONS];
        let mut ok = true;
        for (col, field) in fields[1..].iter().enumerate() {
            match field.trim().parse::<u64>() {
                Ok(n) => hits[POSTS_COLUMN_TO_CANONICAL[col]] = n,
                Err(_) => {
                    warnings.push(format!(
                        "line {line_no}: count column {} is not a nonnegative integer: {field:?}",
                        col + 2
                    ));
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            items.push(RawPost::new(fields[0], hits));
        }
    }
    Ok(Ingested { items, warnings })
}

/// Reads one text per line; blank lines are skipped.
pub fn read_unlabeled_lines(path: &Path) -> Result<Ingested<String>, TextError> {
    let text = read_file(path)?;
    let items = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    Ok(Ingested { items, warnings: Vec::new() })
}

fn resolve_emotion(label: &str) -> Option<usize> {
    let label = label.trim().to_lowercase();
    let label = if label == "joy" { "happiness".to_string() } else { label };
    EMOTION_NAMES.iter().position(|n| *n == label)
}

/// Reads an emotion-labeled dataset, applying the per-format labeling
/// rules. Returned labels are canonical emotion indices.
pub fn ingest_emotion_dataset(
    path: &Path,
    format: EmotionFormat,
) -> Result<Ingested<(String, usize)>, TextError> {
    let text = read_file(path)?;
    let mut items = Vec::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match format {
            EmotionFormat::Affective => {
                if fields.len() != 1 + N_EMOTIONS {
                    warnings.push(format!(
                        "line {line_no}: expected {} tab-separated fields, found {}",
                        1 + N_EMOTIONS,
                        fields.len()
                    ));
                    continue;
                }
                let mut scores = [0u32; N_EMOTIONS];
                let mut ok = true;
                for (col, field) in fields[1..].iter().enumerate() {
                    match field.trim().parse::<u32>() {
                        Ok(s) if s <= 100 => scores[col] = s,
                        _ => {
                            warnings.push(format!(
                                "line {line_no}: score column {} is not an integer in 0..=100: {field:?}",
                                col + 2
                            ));
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let max = *scores.iter().max().unwrap();
                if scores.iter().filter(|&&s| s == max).count() == 1 {
                    let label = scores.iter().position(|&s| s == max).unwrap();
                    items.push((fields[0].to_string(), label));
                }
            }
            EmotionFormat::Isear => {
                if fields.len() != 2 {
                    warnings.push(format!(
                        "line {line_no}: expected 2 tab-separated fields, found {}",
                        fields.len()
                    ));
                    continue;
                }
                let label = fields[1].trim().to_lowercase();
                if label == "shame" || label == "guilt" {
                    continue;
                }
                match resolve_emotion(&label) {
                    Some(i) => items.push((fields[0].to_string(), i)),
                    None => warnings.push(format!("line {line_no}: unknown label {label:?}")),
                }
            }
            EmotionFormat::Fairy => match fields.len() {
                2 => {
                    let label = fields[1].trim().to_lowercase();
                    if label == "neutral" {
                        continue;
                    }
                    match resolve_emotion(&label) {
                        Some(i) => items.push((fields[0].to_string(), i)),
                        None => warnings.push(format!("line {line_no}: unknown label {label:?}")),
                    }
                }
                5 => {
                    let mut votes: Vec<Option<usize>> = Vec::with_capacity(4);
                    let mut ok = true;
                    for field in &fields[1..] {
                        let label = field.trim().to_lowercase();
                        if label == "neutral" {
                            votes.push(None);
                        } else {
                            match resolve_emotion(&label) {
                                Some(i) => votes.push(Some(i)),
                                None => {
                                    warnings.push(format!(
                                        "line {line_no}: unknown label {label:?}"
                                    ));
                                    ok = false;
                                    break;
                                }
                            }
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let unanimous = votes.iter().all(|v| *v == votes[0]);
                    if unanimous {
                        if let Some(label) = votes[0] {
                            items.push((fields[0].to_string(), label));
                        }
                        continue;
                    }
                    let disgust = EMOTION_NAMES.iter().position(|n| *n == "disgust").unwrap();
                    let disgust_votes =
                        votes.iter().filter(|v| **v == Some(disgust)).count();
                    if disgust_votes >= 3 {
                        items.push((fields[0].to_string(), disgust));
                    }
                }
                n => {
                    warnings.push(format!(
                        "line {line_no}: expected 2 or 5 tab-separated fields, found {n}"
                    ));
                }
            },
        }
    }
    Ok(Ingested { items, warnings })
}

fn sanitize(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

/// Writes a posts file in the layout [`read_posts_tsv`] expects.
pub fn write_posts_tsv(path: &Path, posts: &[RawPost]) -> Result<(), TextError> {
    let mut f = create_file(path)?;
    let err = |source| io_error(path, source);
    writeln!(f, "{POSTS_HEADER}").map_err(err)?;
    for post in posts {
        let h = &post.hits;
        // Column order love, wow, haha, sad, angry.
        writeln!(f, "{}\t{}\t{}\t{}\t{}\t{}", sanitize(&post.text), h[3], h[4], h[0], h[1], h[2])
            .map_err(err)?;
    }
    f.flush().map_err(err)
}

/// Writes an emotion dataset readable by [`ingest_emotion_dataset`] with
/// the same format. Affective rows get a synthetic unique-argmax score
/// profile; isear rows spell happiness as `joy`.
pub fn write_emotion_tsv(
    path: &Path,
    rows: &[(String, usize)],
    format: EmotionFormat,
) -> Result<(), TextError> {
    let mut f = create_file(path)?;
    let err = |source| io_error(path, source);
    for (text, label) in rows {
        let text = sanitize(text);
        match format {
            EmotionFormat::Affective => {
                let scores: Vec<String> = (0..N_EMOTIONS)
                    .map(|i| if i == *label { 90 } else { (i as u32 * 11) % 50 }.to_string())
                    .collect();
                writeln!(f, "{text}\t{}", scores.join("\t")).map_err(err)?;
            }
            EmotionFormat::Isear => {
                let name =
                    if EMOTION_NAMES[*label] == "happiness" { "joy" } else { EMOTION_NAMES[*label] };
                writeln!(f, "{text}\t{name}").map_err(err)?;
            }
            EmotionFormat::Fairy => {
                writeln!(f, "{text}\t{}", EMOTION_NAMES[*label]).map_err(err)?;
            }
        }
    }
    f.flush().map_err(err)
}

/// Writes one text per line.
pub fn write_unlabeled_lines(path: &Path, texts: &[String]) -> Result<(), TextError> {
    let mut f = create_file(path)?;
    let err = |source| io_error(path, source);
    for text in texts {
        writeln!(f, "{}", sanitize(text)).map_err(err)?;
    }
    f.flush().map_err(err)
}
