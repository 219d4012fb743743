use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::TimeTag;
use crate::error::{Error, Result};

const MAGIC: &str = "# timetag v1 seed=";

/// Writes `channel<TAB>timestamp_ps` records after the versioned header.
pub fn write_timetags<P: AsRef<Path>>(path: P, seed: u64, tags: &[TimeTag]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MAGIC}{seed}")?;
    for t in tags {
        writeln!(w, "{}\t{}", t.channel, t.timestamp_ps)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a time-tag file, returning the seed and the records.
pub fn read_timetags<P: AsRef<Path>>(path: P) -> Result<(u64, Vec<TimeTag>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "empty file".into(),
    })??;
    let seed = header
        .strip_prefix(MAGIC)
        .and_then(|s| s.trim().parse::<u64>().ok())
        .ok_or(Error::Parse {
            line: 1,
            reason: "expected `# timetag v1 seed=<u64>`".into(),
        })?;
    let mut tags = Vec::new();
    let mut last = [i64::MIN; 6];
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        let fail = |reason: String| Error::Parse {
            line: lineno,
            reason,
        };
        let (ch, ts) = line
            .split_once('\t')
            .ok_or_else(|| fail("expected `channel<TAB>timestamp`".into()))?;
        let channel = ch.parse().map_err(|e: Error| fail(e.to_string()))?;
        let timestamp_ps = ts
            .parse::<i64>()
            .map_err(|e| fail(format!("bad timestamp: {e}")))?;
        let slot = &mut last[super::Channel::index(channel)];
        if timestamp_ps < *slot {
            return Err(fail("timestamps must be monotone per channel".into()));
        }
        *slot = timestamp_ps;
        tags.push(TimeTag {
            timestamp_ps,
            channel,
        });
    }
    Ok((seed, tags))
}
