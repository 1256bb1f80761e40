//! Binary sample files: `DRWSMPL1`, a little-endian u64 count, then per
//! sample the label byte, synthetic byte, u64 start frame, two
//! length-prefixed UTF-8 ids and 1800 little-endian f64 cells.

use std::io::{Read, Write};

use super::{MergedLabel, SampleDescriptor, GRID_LEN};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DRWSMPL1";

pub fn write_samples<W: Write>(mut w: W, samples: &[SampleDescriptor]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    let mut cells = Vec::with_capacity(GRID_LEN * 8);
    for s in samples {
        w.write_all(&[s.label as u8, u8::from(s.synthetic)])?;
        w.write_all(&s.start_frame.to_le_bytes())?;
        for id in [&s.participant_id, &s.video_id] {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
        }
        cells.clear();
        for v in &s.grid {
            cells.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&cells)?;
    }
    w.flush()
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated sample file: {e}")))?;
    Ok(buf)
}

fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = u32::from_le_bytes(read_exact(r)?) as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated id: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::Format(format!("id is not UTF-8: {e}")))
}

pub fn read_samples<R: Read>(mut r: R) -> Result<Vec<SampleDescriptor>> {
    let magic: [u8; 8] = read_exact(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a sample file".into()));
    }
    let n = u64::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut out = Vec::with_capacity(n);
    let mut cells = vec![0u8; GRID_LEN * 8];
    for _ in 0..n {
        let [label, synthetic] = read_exact::<_, 2>(&mut r)?;
        let label = MergedLabel::from_index(label as usize)
            .ok_or_else(|| Error::Format(format!("bad label byte {label}")))?;
        let start_frame = u64::from_le_bytes(read_exact(&mut r)?);
        let participant_id = read_string(&mut r)?;
        let video_id = read_string(&mut r)?;
        r.read_exact(&mut cells)
            .map_err(|e| Error::Format(format!("truncated grid: {e}")))?;
        let grid = cells
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let mut s = SampleDescriptor::new(grid, label, participant_id, video_id, start_frame)?;
        s.synthetic = synthetic != 0;
        out.push(s);
    }
    Ok(out)
}
