//! Durable ledger copy: one canonical document per line in `ledger.ndjson`,
//! plus `checkpoint.json` holding the last verified `(last_seq, root)`.
//!
//! Lines are appended with a single write each; a torn trailing line left by
//! a crash is cut off on open. The checkpoint is replaced via write + rename.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::merkle::RootHash;

pub const LEDGER_FILE: &str = "ledger.ndjson";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub last_seq: u64,
    pub root: RootHash,
}

#[derive(Debug)]
pub struct LedgerCopy {
    dir: PathBuf,
    file: File,
    len_bytes: u64,
}

/// Contents recovered by [`LedgerCopy::open`].
#[derive(Debug, Default)]
pub struct Recovered {
    pub lines: Vec<String>,
    pub checkpoint: Option<Checkpoint>,
    /// Bytes of an incomplete final line that were discarded.
    pub truncated_bytes: u64,
}

impl LedgerCopy {
    pub fn open(dir: impl AsRef<Path>) -> io::Result<(LedgerCopy, Recovered)> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let path = dir.join(LEDGER_FILE);
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let complete = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1);
        let truncated_bytes = (bytes.len() - complete) as u64;
        if truncated_bytes > 0 {
            tracing::warn!(truncated_bytes, "discarding torn final line of ledger copy");
            file.set_len(complete as u64)?;
            file.sync_data()?;
        }
        let text =
            String::from_utf8(bytes[..complete].to_vec()).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let lines = text.lines().map(str::to_string).collect();

        let checkpoint = match fs::read(dir.join(CHECKPOINT_FILE)) {
            Ok(raw) => Some(serde_json::from_slice(&raw).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e),
        };
        Ok((
            LedgerCopy {
                dir,
                file,
                len_bytes: complete as u64,
            },
            Recovered {
                lines,
                checkpoint,
                truncated_bytes,
            },
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append_line(&mut self, line: &str) -> io::Result<()> {
        debug_assert!(!line.contains('\n'));
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
        if let Err(e) = self.file.write_all(&buf) {
            // Drop whatever part of the line made it out.
            let _ = self.file.set_len(self.len_bytes);
            return Err(e);
        }
        self.len_bytes += buf.len() as u64;
        Ok(())
    }

    pub fn sync(&mut self) -> io::Result<()> {
        self.file.sync_data()
    }

    pub fn write_checkpoint(&self, cp: &Checkpoint) -> io::Result<()> {
        let tmp = self.dir.join(format!("{CHECKPOINT_FILE}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&serde_json::to_vec(cp).map_err(io::Error::other)?)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(CHECKPOINT_FILE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merkle::empty_root;

    #[test]
    fn lines_and_checkpoint_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let (mut copy, rec) = LedgerCopy::open(dir.path()).unwrap();
            assert!(rec.lines.is_empty());
            assert!(rec.checkpoint.is_none());
            copy.append_line("{\"a\":1}").unwrap();
            copy.append_line("{\"b\":2}").unwrap();
            copy.sync().unwrap();
            copy.write_checkpoint(&Checkpoint {
                last_seq: 2,
                root: empty_root(),
            })
            .unwrap();
        }
        let (_, rec) = LedgerCopy::open(dir.path()).unwrap();
        assert_eq!(rec.lines, vec!["{\"a\":1}", "{\"b\":2}"]);
        assert_eq!(rec.checkpoint.unwrap().last_seq, 2);
        assert_eq!(rec.truncated_bytes, 0);
    }

    #[test]
    fn torn_tail_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(LEDGER_FILE), "{\"a\":1}\n{\"b\":").unwrap();
        let (mut copy, rec) = LedgerCopy::open(dir.path()).unwrap();
        assert_eq!(rec.lines, vec!["{\"a\":1}"]);
        assert_eq!(rec.truncated_bytes, 5);
        copy.append_line("{\"c\":3}").unwrap();
        drop(copy);
        let text = fs::read_to_string(dir.path().join(LEDGER_FILE)).unwrap();
        assert_eq!(text, "{\"a\":1}\n{\"c\":3}\n");
    }
}
