//! Streaming access to a whitespace-tokenized corpus file.

use std::borrow::Cow;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Take};
use std::ops::Range;
use std::path::Path;

use spellvec_core::vocab::{tokenize, VocabBuilder};
use spellvec_core::{ConfigError, Vocabulary};

use crate::error::{Error, Result};

/// Longest run of token ids handed to the trainer at once. Lines longer
/// than this are cut; context windows never cross a cut or a line break.
pub const MAX_SPAN: usize = 1024;

/// Invalid UTF-8 is replaced rather than rejected, identically when
/// counting and when training.
fn decode(line: &[u8]) -> Cow<'_, str> {
    String::from_utf8_lossy(line)
}

/// Counts every token of the corpus.
pub fn count_tokens(path: &Path) -> Result<VocabBuilder> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 16, file);
    let mut builder = VocabBuilder::new();
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = reader
            .read_until(b'\n', &mut line)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        builder.add_text(&decode(&line));
    }
    Ok(builder)
}

pub fn build_vocabulary(path: &Path, min_count: u64) -> Result<Vocabulary> {
    let builder = count_tokens(path)?;
    if builder.raw_tokens() == 0 {
        return Err(ConfigError::EmptyCorpus.into());
    }
    Ok(builder.build(min_count)?)
}

/// Splits the file into `parts` contiguous byte ranges. Each boundary is
/// moved forward to the next line start, or to the next ASCII whitespace
/// when no line break follows it. Some ranges may be empty.
pub fn split_ranges(path: &Path, parts: usize) -> Result<Vec<Range<u64>>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let parts = parts.max(1);
    let mut bounds = vec![0u64];
    for i in 1..parts {
        let nominal = len * i as u64 / parts as u64;
        let prev = *bounds.last().unwrap();
        let b = align(&mut file, nominal.max(prev), len).map_err(|e| Error::io(path, e))?;
        bounds.push(b.max(prev));
    }
    bounds.push(len);
    Ok(bounds.windows(2).map(|w| w[0]..w[1]).collect())
}

fn align(file: &mut File, from: u64, len: u64) -> std::io::Result<u64> {
    if from == 0 || from >= len {
        return Ok(from.min(len));
    }
    let find = |file: &mut File, pred: fn(u8) -> bool| -> std::io::Result<Option<u64>> {
        // start one byte early so a boundary right after a break is kept
        file.seek(SeekFrom::Start(from - 1))?;
        let mut reader = BufReader::new(file.take(len - from + 1));
        let mut pos = from - 1;
        loop {
            let buf = reader.fill_buf()?;
            if buf.is_empty() {
                return Ok(None);
            }
            if let Some(i) = buf.iter().position(|&b| pred(b)) {
                return Ok(Some(pos + i as u64 + 1));
            }
            let n = buf.len();
            pos += n as u64;
            reader.consume(n);
        }
    };
    if let Some(b) = find(file, |b| b == b'\n')? {
        return Ok(b);
    }
    Ok(find(file, |b| b.is_ascii_whitespace())?.unwrap_or(len))
}

/// Reads one byte range line by line and yields spans of in-vocabulary
/// token ids.
pub struct SpanReader<'v> {
    reader: BufReader<Take<File>>,
    vocab: &'v Vocabulary,
    line: Vec<u8>,
    ids: Vec<u32>,
    pos: usize,
    path: std::path::PathBuf,
}

impl<'v> SpanReader<'v> {
    pub fn open(path: &Path, range: Range<u64>, vocab: &'v Vocabulary) -> Result<Self> {
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        file.seek(SeekFrom::Start(range.start))
            .map_err(|e| Error::io(path, e))?;
        Ok(SpanReader {
            reader: BufReader::with_capacity(1 << 16, file.take(range.end - range.start)),
            vocab,
            line: Vec::new(),
            ids: Vec::new(),
            pos: 0,
            path: path.to_path_buf(),
        })
    }

    pub fn next_span(&mut self) -> Result<Option<&[u32]>> {
        while self.pos >= self.ids.len() {
            self.line.clear();
            let n = self
                .reader
                .read_until(b'\n', &mut self.line)
                .map_err(|e| Error::io(&self.path, e))?;
            if n == 0 {
                return Ok(None);
            }
            self.ids.clear();
            self.pos = 0;
            let text = decode(&self.line);
            self.ids
                .extend(tokenize(&text).filter_map(|t| self.vocab.id(t)));
        }
        let end = (self.pos + MAX_SPAN).min(self.ids.len());
        let span = &self.ids[self.pos..end];
        self.pos = end;
        Ok(Some(span))
    }
}
