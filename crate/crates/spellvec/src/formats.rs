//! On-disk formats.
//!
//! Binary model, little-endian throughout:
//!
//! ```text
//! magic "SPVC" | version u32 | |V| u64 | buckets u32 | dim u32 | flags u32
//! | minn u32 | maxn u32 | min_count u64
//! | |V| x (len u32, utf-8 bytes, count u64)
//! | input matrix f32 (|V| + buckets) x dim | output matrix f32 |V| x dim
//! ```
//!
//! Flags: bit 0 normalized composition, bit 1 boundary markers.
//!
//! All writers go through a temporary file in the destination directory
//! that is renamed into place once complete.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use spellvec_core::eval::{AnalogyRow, Section, SimilarityRow};
use spellvec_core::misspell::{ErrorModel, MisspellingPair};
use spellvec_core::{EmbeddingModel, Matrix, NgramConfig, Vocabulary};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SPVC";
pub const VERSION: u32 = 1;

const FLAG_NORMALIZE: u32 = 1;
const FLAG_MARKERS: u32 = 2;

/// Writes `path` atomically: `fill` writes into a temporary sibling that
/// replaces `path` only on success.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Calls `f` with the 1-based number and content of every line, without
/// the line terminator.
pub fn for_each_line<F>(path: &Path, mut f: F) -> Result<()>
where
    F: FnMut(usize, &str) -> Result<()>,
{
    let mut reader = open(path)?;
    let mut line = String::new();
    let mut n = 0;
    loop {
        line.clear();
        let read = reader
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?;
        if read == 0 {
            return Ok(());
        }
        n += 1;
        let content = line.strip_suffix('\n').unwrap_or(&line);
        let content = content.strip_suffix('\r').unwrap_or(content);
        f(n, content)?;
    }
}

fn split_fields<'a>(path: &Path, n: usize, line: &'a str, want: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != want {
        return Err(Error::parse(
            path,
            n,
            format!("expected {want} tab-separated fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

// ---- binary model ----

pub fn save_model(path: &Path, model: &EmbeddingModel<f32>) -> Result<()> {
    write_atomic(path, |w| write_model(w, model))
}

pub fn write_model<W: Write>(w: &mut W, model: &EmbeddingModel<f32>) -> io::Result<()> {
    let vocab = model.vocab();
    let ngram = model.ngram();
    let mut flags = 0;
    if model.normalize() {
        flags |= FLAG_NORMALIZE;
    }
    if ngram.boundary_markers {
        flags |= FLAG_MARKERS;
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(vocab.len() as u64).to_le_bytes())?;
    w.write_all(&ngram.bucket_count.to_le_bytes())?;
    w.write_all(&(model.dim() as u32).to_le_bytes())?;
    w.write_all(&flags.to_le_bytes())?;
    w.write_all(&(ngram.minn as u32).to_le_bytes())?;
    w.write_all(&(ngram.maxn as u32).to_le_bytes())?;
    w.write_all(&vocab.min_count().to_le_bytes())?;
    for (word, count) in vocab.iter() {
        w.write_all(&(word.len() as u32).to_le_bytes())?;
        w.write_all(word.as_bytes())?;
        w.write_all(&count.to_le_bytes())?;
    }
    write_floats(w, model.input().as_slice())?;
    write_floats(w, model.output().as_slice())
}

fn write_floats<W: Write>(w: &mut W, xs: &[f32]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(4 * 4096);
    for chunk in xs.chunks(4096) {
        buf.clear();
        for x in chunk {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<EmbeddingModel<f32>> {
    let mut r = open(path)?;
    read_model(&mut r, path)
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_floats<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn read_model<R: Read>(r: &mut R, path: &Path) -> Result<EmbeddingModel<f32>> {
    let io = |e: io::Error| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::model(path, "truncated file")
        } else {
            Error::io(path, e)
        }
    };
    let mut magic = [0; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::model(path, "bad magic"));
    }
    let version = read_u32(r).map_err(io)?;
    if version != VERSION {
        return Err(Error::model(path, format!("unsupported version {version}")));
    }
    let words = read_u64(r).map_err(io)? as usize;
    let buckets = read_u32(r).map_err(io)?;
    let dim = read_u32(r).map_err(io)? as usize;
    let flags = read_u32(r).map_err(io)?;
    let minn = read_u32(r).map_err(io)? as usize;
    let maxn = read_u32(r).map_err(io)? as usize;
    let min_count = read_u64(r).map_err(io)?;

    let mut list = Vec::with_capacity(words);
    let mut counts = Vec::with_capacity(words);
    for _ in 0..words {
        let len = read_u32(r).map_err(io)? as usize;
        let mut bytes = vec![0; len];
        r.read_exact(&mut bytes).map_err(io)?;
        let word = String::from_utf8(bytes).map_err(|_| Error::model(path, "word is not UTF-8"))?;
        list.push(word);
        counts.push(read_u64(r).map_err(io)?);
    }
    let vocab = Vocabulary::from_ordered(list, counts, min_count)?;
    let ngram = NgramConfig::new(minn, maxn, buckets)?.with_boundary_markers(flags & FLAG_MARKERS != 0);
    let rows = words + buckets as usize;
    let input = Matrix::from_vec(rows, dim, read_floats(r, rows * dim).map_err(io)?)?;
    let output = Matrix::from_vec(words, dim, read_floats(r, words * dim).map_err(io)?)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io)? != 0 {
        return Err(Error::model(path, "trailing bytes after output matrix"));
    }
    Ok(EmbeddingModel::from_parts(
        vocab,
        ngram,
        flags & FLAG_NORMALIZE != 0,
        input,
        output,
    )?)
}

/// Composed vector of every vocabulary word, one per line with six
/// decimals, after a `<count> <dim>` header.
pub fn save_text_vectors(path: &Path, model: &EmbeddingModel<f32>) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{} {}", model.vocab().len(), model.dim())?;
        for word in model.vocab().words() {
            w.write_all(word.as_bytes())?;
            for x in model.compose_token(word) {
                write!(w, " {x:.6}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

/// Reads a text vectors file into `(word, vector)` rows.
pub fn load_text_vectors(path: &Path) -> Result<Vec<(String, Vec<f32>)>> {
    let mut out = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    for_each_line(path, |n, line| {
        let mut parts = line.split(' ');
        let Some((count, dim)) = header else {
            let mut num = || -> Option<usize> { parts.next()?.parse().ok() };
            let parsed = num().zip(num());
            header = Some(parsed.ok_or_else(|| Error::parse(path, n, "bad header"))?);
            out.reserve(parsed.map_or(0, |p| p.0));
            return Ok(());
        };
        let word = parts.next().unwrap_or_default().to_string();
        let vec: Vec<f32> = parts
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, n, "bad number"))?;
        if vec.len() != dim || out.len() == count {
            return Err(Error::parse(path, n, "row does not match header"));
        }
        out.push((word, vec));
        Ok(())
    })?;
    Ok(out)
}

// ---- error model ----

fn char_field(c: Option<char>) -> String {
    c.map(String::from).unwrap_or_default()
}

fn parse_char(path: &Path, n: usize, s: &str) -> Result<Option<char>> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (None, _) => Ok(None),
        (Some(c), None) => Ok(Some(c)),
        _ => Err(Error::parse(path, n, format!("{s:?} is not a single character"))),
    }
}

/// `context<TAB>pivot<TAB>target<TAB>probability`; an empty pivot or target
/// is the empty character. Probabilities use the shortest representation
/// that parses back to the same `f64`.
pub fn save_error_model(path: &Path, model: &ErrorModel) -> Result<()> {
    write_atomic(path, |w| {
        for (context, pivot, target, p) in model.entries() {
            writeln!(w, "{context}\t{}\t{}\t{p}", char_field(pivot), char_field(target))?;
        }
        Ok(())
    })
}

pub fn load_error_model(path: &Path) -> Result<ErrorModel> {
    let mut entries = Vec::new();
    for_each_line(path, |n, line| {
        let f = split_fields(path, n, line, 4)?;
        let p: f64 = f[3]
            .parse()
            .map_err(|_| Error::parse(path, n, "bad probability"))?;
        entries.push((
            f[0].to_string(),
            parse_char(path, n, f[1])?,
            parse_char(path, n, f[2])?,
            p,
        ));
        Ok(())
    })?;
    Ok(ErrorModel::from_entries(entries)?)
}

// ---- pair files ----

/// `original<TAB>corrected`
pub fn load_correction_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for_each_line(path, |n, line| {
        let f = split_fields(path, n, line, 2)?;
        if f[0].is_empty() || f[1].is_empty() {
            return Err(Error::parse(path, n, "empty string in correction pair"));
        }
        out.push((f[0].to_string(), f[1].to_string()));
        Ok(())
    })?;
    Ok(out)
}

pub fn save_correction_pairs(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    write_atomic(path, |w| {
        for (a, b) in pairs {
            writeln!(w, "{a}\t{b}")?;
        }
        Ok(())
    })
}

/// `misspelling<TAB>word`
pub fn load_misspellings(path: &Path) -> Result<Vec<MisspellingPair>> {
    let mut out = Vec::new();
    for_each_line(path, |n, line| {
        let f = split_fields(path, n, line, 2)?;
        if f[0].is_empty() || f[1].is_empty() {
            return Err(Error::parse(path, n, "empty misspelling or word"));
        }
        out.push(MisspellingPair {
            misspelling: f[0].to_string(),
            expected: f[1].to_string(),
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn save_misspellings(path: &Path, pairs: &[MisspellingPair]) -> Result<()> {
    write_atomic(path, |w| {
        for p in pairs {
            writeln!(w, "{}\t{}", p.misspelling, p.expected)?;
        }
        Ok(())
    })
}

// ---- vocabulary ----

/// `word<TAB>count`, in id order.
pub fn save_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    write_atomic(path, |w| {
        for (word, count) in vocab.iter() {
            writeln!(w, "{word}\t{count}")?;
        }
        Ok(())
    })
}

pub fn load_vocab(path: &Path, min_count: u64) -> Result<Vocabulary> {
    let mut entries = Vec::new();
    for_each_line(path, |n, line| {
        let f = split_fields(path, n, line, 2)?;
        let c: u64 = f[1].parse().map_err(|_| Error::parse(path, n, "bad count"))?;
        entries.push((f[0].to_string(), c));
        Ok(())
    })?;
    Ok(Vocabulary::from_counts(entries, min_count)?)
}

// ---- evaluation datasets ----

/// `word_a<TAB>word_b<TAB>score`, score in `[0, 10]`.
pub fn load_similarity(path: &Path) -> Result<Vec<SimilarityRow>> {
    let mut out = Vec::new();
    for_each_line(path, |n, line| {
        if line.trim().is_empty() {
            return Ok(());
        }
        let f = split_fields(path, n, line, 3)?;
        let score: f64 = f[2].parse().map_err(|_| Error::parse(path, n, "bad score"))?;
        if !(0.0..=10.0).contains(&score) {
            return Err(Error::parse(path, n, "score outside [0, 10]"));
        }
        if f[0].is_empty() || f[1].is_empty() {
            return Err(Error::parse(path, n, "empty word"));
        }
        out.push(SimilarityRow {
            a: f[0].to_string(),
            b: f[1].to_string(),
            score,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn save_similarity(path: &Path, rows: &[SimilarityRow]) -> Result<()> {
    write_atomic(path, |w| {
        for r in rows {
            writeln!(w, "{}\t{}\t{}", r.a, r.b, r.score)?;
        }
        Ok(())
    })
}

/// Analogy rows grouped under their `: name` header.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogySection {
    pub name: String,
    pub rows: Vec<AnalogyRow>,
}

pub fn load_analogies(path: &Path) -> Result<Vec<AnalogySection>> {
    let mut sections: Vec<AnalogySection> = Vec::new();
    for_each_line(path, |n, line| {
        let line = line.trim();
        if line.is_empty() {
            return Ok(());
        }
        if let Some(name) = line.strip_prefix(':') {
            sections.push(AnalogySection {
                name: name.trim().to_string(),
                rows: Vec::new(),
            });
            return Ok(());
        }
        let words: Vec<&str> = line.split_ascii_whitespace().collect();
        if words.len() != 4 {
            return Err(Error::parse(path, n, "expected 4 words"));
        }
        if sections.is_empty() {
            sections.push(AnalogySection {
                name: String::new(),
                rows: Vec::new(),
            });
        }
        let section = sections.last_mut().unwrap();
        let tag = Section::from_header(&section.name);
        section.rows.push(AnalogyRow {
            a: words[0].to_string(),
            b: words[1].to_string(),
            c: words[2].to_string(),
            d: words[3].to_string(),
            section: tag,
        });
        Ok(())
    })?;
    Ok(sections)
}

pub fn save_analogies(path: &Path, sections: &[AnalogySection]) -> Result<()> {
    write_atomic(path, |w| {
        for s in sections {
            if !s.name.is_empty() {
                writeln!(w, ": {}", s.name)?;
            }
            for r in &s.rows {
                writeln!(w, "{} {} {} {}", r.a, r.b, r.c, r.d)?;
            }
        }
        Ok(())
    })
}

/// One token per line; blank lines are ignored.
pub fn load_words(path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for_each_line(path, |_, line| {
        let w = line.trim();
        if !w.is_empty() {
            out.push(w.to_string());
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn save_words(path: &Path, words: &[String]) -> Result<()> {
    write_atomic(path, |w| {
        for word in words {
            writeln!(w, "{word}")?;
        }
        Ok(())
    })
}
