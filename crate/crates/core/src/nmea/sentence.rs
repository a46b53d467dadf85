use std::fmt;

use super::NmeaError;

/// Sentence formatter, the three letters after the talker id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SentenceKind {
    Gga,
    Rmc,
    Gsa,
    Gsv,
    /// Any other formatter, or the whole address of a proprietary (`$P...`) sentence.
    Other(String),
}

impl SentenceKind {
    fn from_code(code: &str) -> Self {
        match code {
            "GGA" => SentenceKind::Gga,
            "RMC" => SentenceKind::Rmc,
            "GSA" => SentenceKind::Gsa,
            "GSV" => SentenceKind::Gsv,
            other => SentenceKind::Other(other.to_string()),
        }
    }
}

impl fmt::Display for SentenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SentenceKind::Gga => f.write_str("GGA"),
            SentenceKind::Rmc => f.write_str("RMC"),
            SentenceKind::Gsa => f.write_str("GSA"),
            SentenceKind::Gsv => f.write_str("GSV"),
            SentenceKind::Other(s) => f.write_str(s),
        }
    }
}

/// Structural decomposition of one sentence. Fields are kept as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSentence {
    pub talker: String,
    pub kind: SentenceKind,
    /// Data fields after the address field.
    pub fields: Vec<String>,
    pub checksum_declared: Option<u8>,
    pub line_number: usize,
}

impl RawSentence {
    pub fn field(&self, idx: usize) -> &str {
        self.fields.get(idx).map(String::as_str).unwrap_or("")
    }
}

/// XOR of every byte of the sentence body (between `$` and `*`).
pub fn checksum(body: &str) -> u8 {
    body.bytes().fold(0u8, |acc, b| acc ^ b)
}

/// Frames a body as `$<body>*HH`.
pub fn with_checksum(body: &str) -> String {
    format!("${}*{:02X}", body, checksum(body))
}

pub fn parse_sentence(line: &str) -> Result<RawSentence, NmeaError> {
    parse_sentence_at(line, 0)
}

/// Like [`parse_sentence`], tagging errors and the result with a line number.
pub fn parse_sentence_at(line: &str, line_number: usize) -> Result<RawSentence, NmeaError> {
    let malformed = |reason: &str| NmeaError::MalformedSentence {
        line: line_number,
        reason: reason.to_string(),
    };

    let line = line.trim_end_matches(['\r', '\n']);
    if !line.is_ascii() {
        return Err(malformed("non-ASCII bytes"));
    }
    let rest = line
        .strip_prefix('$')
        .ok_or_else(|| malformed("missing leading '$'"))?;

    let (body, checksum_declared) = match rest.split_once('*') {
        Some((body, tail)) => {
            let tail = tail.trim_end();
            if tail.len() != 2 || !tail.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(malformed("checksum must be two hex digits"));
            }
            let declared = u8::from_str_radix(tail, 16).map_err(|_| malformed("bad checksum"))?;
            (body, Some(declared))
        }
        None => (rest.trim_end(), None),
    };

    if body.contains('$') || body.contains('*') {
        return Err(malformed("reserved character inside body"));
    }

    if let Some(declared) = checksum_declared {
        let computed = checksum(body);
        if computed != declared {
            return Err(NmeaError::ChecksumMismatch {
                line: line_number,
                computed,
                declared,
            });
        }
    }

    let mut parts = body.split(',');
    let address = parts.next().unwrap_or("");
    if !address.bytes().all(|b| b.is_ascii_alphanumeric()) {
        return Err(malformed("address field is not alphanumeric"));
    }
    let (talker, kind) = if address.starts_with('P') && address.len() >= 2 {
        ("P".to_string(), SentenceKind::Other(address.to_string()))
    } else if address.len() == 5 {
        (
            address[..2].to_string(),
            SentenceKind::from_code(&address[2..]),
        )
    } else {
        return Err(malformed("address field must be talker + formatter"));
    };

    Ok(RawSentence {
        talker,
        kind,
        fields: parts.map(str::to_string).collect(),
        checksum_declared,
        line_number,
    })
}
