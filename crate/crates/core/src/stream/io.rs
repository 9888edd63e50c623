//! NDJSON and CSV action records.
//!
//! NDJSON, one object per line:
//! `{"seq": 4, "user": "u3", "parent": 1, "tags": ["sports"], "pos": [0.5, 0.5]}`
//! where `parent` is `null` for a root action and `tags`/`pos` are optional.
//! CSV uses the header `seq,user,parent` with an empty parent for roots.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::{Action, Seq, Stream};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum UserField {
    Name(String),
    Number(u64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InRecord {
    seq: Seq,
    user: UserField,
    parent: Option<Seq>,
    #[serde(default)]
    tags: Vec<String>,
    #[serde(default)]
    pos: Option<[f64; 2]>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    seq: Seq,
    user: &'a str,
    parent: Option<Seq>,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    tags: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    pos: Option<[f64; 2]>,
}

/// Outcome of reading a stream: the stream plus how many malformed records
/// were skipped (always 0 in strict mode).
#[derive(Debug)]
pub struct ReadOutcome {
    pub stream: Stream,
    pub skipped: usize,
}

fn push_record(stream: &mut Stream, rec: InRecord) {
    let user = match rec.user {
        UserField::Name(name) => stream.users.intern(&name),
        UserField::Number(n) => stream.users.intern(&n.to_string()),
    };
    stream.actions.push(Action { seq: rec.seq, user, parent: rec.parent, tags: rec.tags, pos: rec.pos });
}

/// Reads NDJSON actions. Blank lines are ignored. In strict mode the first
/// malformed line aborts with its 1-based line number.
pub fn read_ndjson<R: BufRead>(reader: R, strict: bool) -> Result<ReadOutcome> {
    let mut stream = Stream::new();
    let mut skipped = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<InRecord>(&line) {
            Ok(rec) => push_record(&mut stream, rec),
            Err(e) if strict => return Err(Error::Parse { line: i + 1, message: e.to_string() }),
            Err(_) => skipped += 1,
        }
    }
    Ok(ReadOutcome { stream, skipped })
}

/// Reads `seq,user,parent` CSV actions (header required).
pub fn read_csv<R: Read>(reader: R, strict: bool) -> Result<ReadOutcome> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { line: 1, message: format!("missing column `{name}`") })
    };
    let (seq_col, user_col, parent_col) = (col("seq")?, col("user")?, col("parent")?);

    let mut stream = Stream::new();
    let mut skipped = 0;
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let parsed = row.map_err(|e| e.to_string()).and_then(|row| {
            let seq = row
                .get(seq_col)
                .unwrap_or("")
                .parse::<Seq>()
                .map_err(|e| format!("bad seq: {e}"))?;
            let user = row.get(user_col).unwrap_or("");
            if user.is_empty() {
                return Err("empty user".to_string());
            }
            let parent = match row.get(parent_col).unwrap_or("") {
                "" => None,
                p => Some(p.parse::<Seq>().map_err(|e| format!("bad parent: {e}"))?),
            };
            Ok(InRecord { seq, user: UserField::Name(user.to_owned()), parent, tags: Vec::new(), pos: None })
        });
        match parsed {
            Ok(rec) => push_record(&mut stream, rec),
            Err(message) if strict => return Err(Error::Parse { line, message }),
            Err(_) => skipped += 1,
        }
    }
    Ok(ReadOutcome { stream, skipped })
}

/// Writes one NDJSON line per action.
pub fn write_ndjson<W: Write>(stream: &Stream, mut out: W) -> Result<()> {
    for a in &stream.actions {
        let rec = OutRecord {
            seq: a.seq,
            user: stream.users.name(a.user),
            parent: a.parent,
            tags: &a.tags,
            pos: a.pos,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"seq": 1, "user": "u1", "parent": null}
{"seq": 2, "user": "u2", "parent": 1, "tags": ["sports"]}

{"seq": 3, "user": 7, "parent": 2, "pos": [0.5, 0.25]}
"#;

    #[test]
    fn reads_ndjson_records() {
        let out = read_ndjson(SAMPLE.as_bytes(), true).unwrap();
        let s = out.stream;
        assert_eq!(s.actions.len(), 3);
        assert_eq!(s.actions[1].parent, Some(1));
        assert_eq!(s.actions[1].tags, vec!["sports".to_string()]);
        assert_eq!(s.users.name(s.actions[2].user), "7");
        assert_eq!(s.actions[2].pos, Some([0.5, 0.25]));
    }

    #[test]
    fn strict_mode_reports_line_number() {
        let text = "{\"seq\": 1, \"user\": \"a\", \"parent\": null}\n{\"seq\": \"x\"}\n";
        match read_ndjson(text.as_bytes(), true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let lenient = read_ndjson(text.as_bytes(), false).unwrap();
        assert_eq!((lenient.stream.actions.len(), lenient.skipped), (1, 1));
    }

    #[test]
    fn reads_csv_with_empty_parent() {
        let text = "seq,user,parent\n1,u1,\n2,u2,1\n3,,1\n";
        assert!(matches!(read_csv(text.as_bytes(), true), Err(Error::Parse { line: 4, .. })));
        let out = read_csv(text.as_bytes(), false).unwrap();
        assert_eq!(out.skipped, 1);
        assert_eq!(out.stream.actions[0].parent, None);
        assert_eq!(out.stream.actions[1].parent, Some(1));
    }

    #[test]
    fn ndjson_write_then_read_is_stable() {
        let first = read_ndjson(SAMPLE.as_bytes(), true).unwrap().stream;
        let mut buf = Vec::new();
        write_ndjson(&first, &mut buf).unwrap();
        let second = read_ndjson(&buf[..], true).unwrap().stream;
        let mut again = Vec::new();
        write_ndjson(&second, &mut again).unwrap();
        assert_eq!(buf, again);
        assert!(String::from_utf8(buf).unwrap().starts_with("{\"seq\":1,\"user\":\"u1\",\"parent\":null}\n"));
    }
}
