//! Line-oriented text documents for model artifacts: a magic/version first
//! line, top-level `key = value` pairs, then `[section]` blocks. Floats are
//! written with the shortest representation that parses back to the same
//! bits, so a write/read cycle is lossless.

use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("expected a '{expect}' document, found '{found}'")]
    Magic { expect: String, found: String },
    #[error("section [{0}] missing")]
    MissingSection(String),
    #[error("key '{key}' missing in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("key '{key}': {msg}")]
    BadValue { key: String, msg: String },
}

pub struct DocWriter {
    text: String,
}

impl DocWriter {
    pub fn new(magic: &str, version: u32) -> DocWriter {
        DocWriter {
            text: format!("{magic} v{version}\n"),
        }
    }

    pub fn section(&mut self, name: &str) {
        let _ = writeln!(self.text, "\n[{name}]");
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    pub fn kv_f64_list(&mut self, key: &str, values: &[f64]) {
        let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.kv(key, joined.join(" "));
    }

    pub fn kv_usize_list(&mut self, key: &str, values: &[usize]) {
        let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.kv(key, joined.join(" "));
    }

    /// A matrix as `{key}.rows`, `{key}.cols` and one `{key}.{r}` line per row.
    pub fn kv_matrix(&mut self, key: &str, m: &mlkit::DMatrix<f64>) {
        self.kv(&format!("{key}.rows"), m.nrows());
        self.kv(&format!("{key}.cols"), m.ncols());
        for r in 0..m.nrows() {
            let row: Vec<f64> = m.row(r).iter().cloned().collect();
            self.kv_f64_list(&format!("{key}.{r}"), &row);
        }
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// A parsed document. The pre-section pairs live in the unnamed section "".
pub struct Doc {
    pub version: u32,
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl Doc {
    pub fn parse(text: &str, expect_magic: &str) -> Result<Doc, DocError> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| DocError::Syntax(1, "empty document".into()))?;
        let (magic, ver) = first
            .rsplit_once(" v")
            .ok_or_else(|| DocError::Syntax(1, "expected '<magic> v<version>'".into()))?;
        if magic != expect_magic {
            return Err(DocError::Magic {
                expect: expect_magic.to_string(),
                found: magic.to_string(),
            });
        }
        let version: u32 = ver
            .parse()
            .map_err(|_| DocError::Syntax(1, format!("bad version '{ver}'")))?;

        let mut sections = vec![(String::new(), Vec::new())];
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                sections.push((name.to_string(), Vec::new()));
            } else if let Some((k, v)) = line.split_once('=') {
                sections
                    .last_mut()
                    .unwrap()
                    .1
                    .push((k.trim().to_string(), v.trim().to_string()));
            } else {
                return Err(DocError::Syntax(i + 1, format!("cannot parse '{line}'")));
            }
        }
        Ok(Doc { version, sections })
    }

    pub fn head(&self) -> Section<'_> {
        Section {
            name: "",
            pairs: &self.sections[0].1,
        }
    }

    pub fn section(&self, name: &str) -> Result<Section<'_>, DocError> {
        self.sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(n, pairs)| Section { name: n, pairs })
            .ok_or_else(|| DocError::MissingSection(name.to_string()))
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().skip(1).map(|(n, _)| n.as_str())
    }
}

pub struct Section<'a> {
    name: &'a str,
    pairs: &'a [(String, String)],
}

impl<'a> Section<'a> {
    pub fn get(&self, key: &str) -> Result<&'a str, DocError> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| DocError::MissingKey {
                section: self.name.to_string(),
                key: key.to_string(),
            })
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, DocError> {
        self.get(key)?.parse().map_err(|_| DocError::BadValue {
            key: key.to_string(),
            msg: format!("cannot parse '{}'", self.get(key).unwrap_or_default()),
        })
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, DocError> {
        self.split_list(key)
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, DocError> {
        self.split_list(key)
    }

    fn split_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, DocError> {
        let raw = self.get(key)?;
        raw.split_whitespace()
            .map(|tok| {
                tok.parse().map_err(|_| DocError::BadValue {
                    key: key.to_string(),
                    msg: format!("bad list element '{tok}'"),
                })
            })
            .collect()
    }

    pub fn matrix(&self, key: &str) -> Result<mlkit::DMatrix<f64>, DocError> {
        let rows: usize = self.parsed(&format!("{key}.rows"))?;
        let cols: usize = self.parsed(&format!("{key}.cols"))?;
        let mut m = mlkit::DMatrix::zeros(rows, cols);
        for r in 0..rows {
            let row = self.f64_list(&format!("{key}.{r}"))?;
            if row.len() != cols {
                return Err(DocError::BadValue {
                    key: format!("{key}.{r}"),
                    msg: format!("expected {cols} columns, found {}", row.len()),
                });
            }
            for (c, v) in row.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_exact_floats() {
        let hard = [
            0.1,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            -0.0,
            f64::INFINITY,
            f64::NEG_INFINITY,
            1e308,
            -2.2250738585072014e-308,
        ];
        let mut w = DocWriter::new("demo", 1);
        w.kv("name", "thing");
        w.section("vals");
        w.kv_f64_list("xs", &hard);
        let text = w.finish();
        let doc = Doc::parse(&text, "demo").unwrap();
        assert_eq!(doc.version, 1);
        assert_eq!(doc.head().get("name").unwrap(), "thing");
        let back = doc.section("vals").unwrap().f64_list("xs").unwrap();
        assert_eq!(back.len(), hard.len());
        for (a, b) in back.iter().zip(hard.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn matrices_round_trip() {
        let m = mlkit::DMatrix::from_fn(3, 4, |r, c| (r * 7 + c) as f64 / 3.0);
        let mut w = DocWriter::new("demo", 2);
        w.section("s");
        w.kv_matrix("m", &m);
        let doc = Doc::parse(&w.finish(), "demo").unwrap();
        assert_eq!(doc.section("s").unwrap().matrix("m").unwrap(), m);
    }

    #[test]
    fn wrong_magic_and_missing_keys_are_explicit() {
        let text = "other v1\nk = v\n";
        match Doc::parse(text, "demo") {
            Err(DocError::Magic { .. }) => {}
            other => panic!("expected magic error, got {:?}", other.map(|_| ())),
        }
        let doc = Doc::parse("demo v1\n[a]\nx = 1\n", "demo").unwrap();
        assert!(doc.section("b").is_err());
        assert!(doc.section("a").unwrap().get("y").is_err());
        let n: usize = doc.section("a").unwrap().parsed("x").unwrap();
        assert_eq!(n, 1);
    }
}
