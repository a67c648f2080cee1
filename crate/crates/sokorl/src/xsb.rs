//! XSB corpus ingestion: single-level files and `;`-separated collections.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::board::{Board, BoardError};

#[derive(Error, Debug)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Level {
        path: String,
        #[source]
        source: BoardError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: no levels found")]
    Empty { path: String },
}

/// One ingested instance with its provenance.
#[derive(Debug, Clone)]
pub struct CorpusLevel {
    pub name: String,
    pub board: Board,
}

/// Split a collection text into level blocks. Lines starting with `;` are
/// titles/comments; blank lines separate levels.
pub fn parse_collection(text: &str, origin: &str) -> Result<Vec<CorpusLevel>, CorpusError> {
    let mut levels = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    let mut title: Option<String> = None;

    let mut flush = |block: &mut Vec<&str>, title: &mut Option<String>| -> Result<(), CorpusError> {
        if block.iter().all(|l| l.trim().is_empty()) {
            block.clear();
            return Ok(());
        }
        let text = block.join("\n");
        let board = Board::parse_xsb(&text).map_err(|source| CorpusError::Level {
            path: origin.to_string(),
            source,
        })?;
        let name = title
            .take()
            .unwrap_or_else(|| format!("{}#{}", origin, levels.len() + 1));
        levels.push(CorpusLevel { name, board });
        block.clear();
        Ok(())
    };

    for raw in text.lines() {
        let line = raw.trim_end_matches('\r');
        if let Some(rest) = line.trim_start().strip_prefix(';') {
            flush(&mut block, &mut title)?;
            let t = rest.trim();
            if !t.is_empty() {
                title = Some(t.to_string());
            }
        } else if line.trim().is_empty() {
            flush(&mut block, &mut title)?;
        } else {
            block.push(line);
        }
    }
    flush(&mut block, &mut title)?;

    if levels.is_empty() {
        return Err(CorpusError::Empty {
            path: origin.to_string(),
        });
    }
    Ok(levels)
}

/// Load one file, which may hold a single level or a `;`-separated
/// collection.
pub fn load_file(path: &Path) -> Result<Vec<CorpusLevel>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut levels = parse_collection(&text, &stem)?;
    if levels.len() == 1 {
        levels[0].name = stem;
    }
    Ok(levels)
}

/// Ingest every `.xsb`/`.txt` file under a directory, sorted by path so the
/// corpus order is stable.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<CorpusLevel>, CorpusError> {
    let mut files: Vec<PathBuf> = Vec::new();
    collect_files(dir, &mut files).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    files.sort();
    let mut out = Vec::new();
    for f in &files {
        out.extend(load_file(f)?);
    }
    if out.is_empty() {
        return Err(CorpusError::Empty {
            path: dir.display().to_string(),
        });
    }
    Ok(out)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("xsb") | Some("txt") | Some("sok")
        ) {
            out.push(path);
        }
    }
    Ok(())
}

/// Canonical form of level text: what `render_xsb` after `parse_xsb`
/// produces. Useful for round-trip checks against on-disk files.
pub fn canonical(text: &str) -> Result<String, BoardError> {
    Ok(Board::parse_xsb(text)?.render_xsb())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collection_with_titles_and_blanks() {
        let text = "; first\n####\n#@*#\n####\n\n; second\n#####\n#@$.#\n#####\n";
        let levels = parse_collection(text, "pack").unwrap();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0].name, "first");
        assert_eq!(levels[1].name, "second");
        assert_eq!(levels[1].board.n_boxes(), 1);
    }

    #[test]
    fn untitled_levels_get_indexed_names() {
        let text = "####\n#@*#\n####\n\n#####\n#@$.#\n#####\n";
        let levels = parse_collection(text, "pack").unwrap();
        assert_eq!(levels[0].name, "pack#1");
        assert_eq!(levels[1].name, "pack#2");
    }

    #[test]
    fn bad_level_reports_origin() {
        let err = parse_collection("####\n#q@#\n####", "broken").unwrap_err();
        assert!(err.to_string().contains("broken"));
    }

    #[test]
    fn roundtrip_canonicalizes_floor_variants() {
        let text = "#####\n#@-$.#\n#####";
        let canon = canonical(text).unwrap();
        assert!(!canon.contains('-'));
        assert_eq!(canonical(&canon).unwrap(), canon);
    }
}
