use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CorpusIndex, DocId, Document, Posting, TokenizerConfig};
use crate::error::{Error, Result};

const INDEX_FORMAT: &str = "eliteness-index";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DocFormat {
    #[default]
    Jsonl,
    Trec,
}

impl FromStr for DocFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(DocFormat::Jsonl),
            "trec" => Ok(DocFormat::Trec),
            other => Err(Error::InvalidConfig(format!(
                "unknown document format `{other}` (expected jsonl or trec)"
            ))),
        }
    }
}

/// Read one file, or every regular file under a directory (recursively, in
/// path order).
pub fn read_documents(path: &Path, format: DocFormat) -> Result<Vec<Document>> {
    let read = |p: &Path| match format {
        DocFormat::Jsonl => read_jsonl(p),
        DocFormat::Trec => read_trec_sgml(p),
    };
    if !path.is_dir() {
        return read(path);
    }
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    files.sort();
    let mut docs = Vec::new();
    for f in files {
        docs.extend(read(&f)?);
    }
    Ok(docs)
}

fn collect_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if path.is_file() {
            out.push(path);
        }
    }
    Ok(())
}

/// One `{"id": ..., "text": ...}` object per line. Blank lines are skipped.
pub fn read_jsonl(path: &Path) -> Result<Vec<Document>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path.display(), i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

/// TREC SGML: `<DOC><DOCNO>id</DOCNO> ... </DOC>`. Everything inside a DOC
/// other than the DOCNO element is text, with markup tags stripped.
pub fn read_trec_sgml(path: &Path) -> Result<Vec<Document>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trec_sgml(&raw, &path.display().to_string())
}

fn parse_trec_sgml(raw: &str, origin: &str) -> Result<Vec<Document>> {
    let line_of = |offset: usize| raw[..offset].matches('\n').count() + 1;
    let mut docs = Vec::new();
    let mut pos = 0;
    while let Some(rel) = raw[pos..].find("<DOC>") {
        let start = pos + rel;
        let body_start = start + "<DOC>".len();
        let end = raw[body_start..]
            .find("</DOC>")
            .map(|e| body_start + e)
            .ok_or_else(|| Error::parse(origin, line_of(start), "unterminated <DOC>"))?;
        let body = &raw[body_start..end];
        let (id, rest) = split_docno(body)
            .ok_or_else(|| Error::parse(origin, line_of(start), "<DOC> without <DOCNO>"))?;
        if id.is_empty() {
            return Err(Error::parse(origin, line_of(start), "empty <DOCNO>"));
        }
        docs.push(Document::new(id, strip_tags(&rest)));
        pos = end + "</DOC>".len();
    }
    Ok(docs)
}

fn split_docno(body: &str) -> Option<(String, String)> {
    let open = body.find("<DOCNO>")?;
    let id_start = open + "<DOCNO>".len();
    let close = id_start + body[id_start..].find("</DOCNO>")?;
    let id = body[id_start..close].trim().to_string();
    let rest = format!("{} {}", &body[..open], &body[close + "</DOCNO>".len()..]);
    Some((id, rest))
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    tokenizer: TokenizerConfig,
    doc_ids: Vec<String>,
    doc_len: Vec<u32>,
    terms: Vec<String>,
    /// Per term, `[doc, tf]` pairs.
    postings: Vec<Vec<(u32, u32)>>,
    fingerprint: String,
}

pub fn save_index(index: &CorpusIndex, path: &Path) -> Result<()> {
    let file = IndexFile {
        format: INDEX_FORMAT.to_string(),
        version: INDEX_VERSION,
        tokenizer: index.tokenizer.clone(),
        doc_ids: index.doc_ids.clone(),
        doc_len: index.doc_len.clone(),
        terms: index.terms.clone(),
        postings: index
            .postings
            .iter()
            .map(|list| list.iter().map(|p| (p.doc.0, p.tf)).collect())
            .collect(),
        fingerprint: index.fingerprint.clone(),
    };
    let out = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(out);
    serde_json::to_writer(&mut w, &file).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_index(path: &Path) -> Result<CorpusIndex> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let raw: IndexFile =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
    let bad = |msg: String| Error::parse(path.display(), 1, msg);
    if raw.format != INDEX_FORMAT || raw.version != INDEX_VERSION {
        return Err(bad(format!(
            "unsupported index format {} v{}",
            raw.format, raw.version
        )));
    }
    let n = raw.doc_ids.len();
    if n == 0 || raw.doc_len.len() != n || raw.terms.len() != raw.postings.len() {
        return Err(bad("inconsistent index table sizes".into()));
    }
    if !raw.doc_ids.windows(2).all(|w| w[0] < w[1]) || !raw.terms.windows(2).all(|w| w[0] < w[1]) {
        return Err(bad("document ids or terms are not strictly sorted".into()));
    }
    let mut postings = Vec::with_capacity(raw.postings.len());
    for (term, list) in raw.terms.iter().zip(raw.postings) {
        let ok = list.windows(2).all(|w| w[0].0 < w[1].0)
            && list.iter().all(|&(d, tf)| (d as usize) < n && tf >= 1);
        if !ok {
            return Err(bad(format!("corrupt postings for term `{term}`")));
        }
        postings.push(
            list.into_iter()
                .map(|(d, tf)| Posting { doc: DocId(d), tf })
                .collect(),
        );
    }
    let index = CorpusIndex::assemble(raw.tokenizer, raw.doc_ids, raw.doc_len, raw.terms, postings);
    if index.fingerprint != raw.fingerprint {
        return Err(bad("fingerprint does not match index contents".into()));
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgml_extracts_ids_and_strips_markup() {
        let raw = "<DOC>\n<DOCNO> FT-1 </DOCNO>\n<TEXT>Hello <B>world</B></TEXT>\n</DOC>\n\
                   <DOC><DOCNO>FT-2</DOCNO>second</DOC>";
        let docs = parse_trec_sgml(raw, "x").unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].doc_id, "FT-1");
        assert_eq!(
            super::super::tokenize(&docs[0].text, &TokenizerConfig::default()),
            ["hello", "world"]
        );
        assert_eq!(docs[1].text.trim(), "second");
    }

    #[test]
    fn sgml_errors_carry_line_numbers() {
        let err = parse_trec_sgml("\n\n<DOC><TEXT>x</TEXT></DOC>", "f.sgml").unwrap_err();
        assert_eq!(err.to_string(), "f.sgml:3: <DOC> without <DOCNO>");
        let err = parse_trec_sgml("<DOC><DOCNO>a</DOCNO>", "f.sgml").unwrap_err();
        assert!(err.to_string().contains("unterminated"));
    }

    #[test]
    fn format_names() {
        assert_eq!("trec".parse::<DocFormat>().unwrap(), DocFormat::Trec);
        assert!("xml".parse::<DocFormat>().is_err());
    }
}
