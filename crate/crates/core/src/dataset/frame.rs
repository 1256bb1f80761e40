use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{RawLabel, CHANNEL_NAMES, CHANNEL_RANGES, N_CHANNELS};
use crate::error::{Error, Result};

/// Header of a per-video frame CSV file.
pub const FRAME_CSV_HEADER: &str = "participant_id,video_id,frame_index,tracked,yaw,pitch,roll,\
blink,brow_furrow,brow_raise,cheek_raise,eye_closure,mouth_open,nose_wrinkle,smile,\
upper_lip_raise,yawn,valence,anger,disgust,joy,surprise,raw_label,consensus";

const N_COLUMNS: usize = 24;
const FIRST_CHANNEL: usize = 4;

/// One video frame: the 18-channel descriptor plus identity and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub participant_id: String,
    pub video_id: String,
    pub frame_index: u64,
    pub channels: [f64; N_CHANNELS],
    /// Majority annotator label; `None` when the annotators disagreed.
    pub raw_label: Option<RawLabel>,
    /// False marks a no-majority frame, which never enters a window.
    pub consensus: bool,
    /// Face detected on this frame. Untracked frames carry zero channels.
    pub tracked: bool,
}

impl FrameRecord {
    pub fn usable_label(&self) -> Option<RawLabel> {
        if self.consensus {
            self.raw_label
        } else {
            None
        }
    }
}

fn parse_flag(field: &str, line: usize, column: &str) -> Result<bool> {
    match field {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(Error::Parse {
            line,
            message: format!("{column} must be 0 or 1, got {other:?}"),
        }),
    }
}

/// Parse a frame CSV stream. Records come back in file order.
pub fn parse_frames<R: BufRead>(reader: R) -> Result<Vec<FrameRecord>> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    if header.trim_end_matches('\r') != FRAME_CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: "header does not match the frame schema".into(),
        });
    }

    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.is_empty() {
            continue;
        }
        out.push(parse_row(&line, line_no)?);
    }
    Ok(out)
}

fn parse_row(line: &str, line_no: usize) -> Result<FrameRecord> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != N_COLUMNS {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected {N_COLUMNS} columns, found {}", fields.len()),
        });
    }
    let frame_index = fields[2].parse::<u64>().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("frame_index {:?} is not a non-negative integer", fields[2]),
    })?;
    let tracked = parse_flag(fields[3], line_no, "tracked")?;

    let mut channels = [0.0; N_CHANNELS];
    if tracked {
        for (c, slot) in channels.iter_mut().enumerate() {
            let raw = fields[FIRST_CHANNEL + c];
            let v = raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::Parse {
                    line: line_no,
                    message: format!("channel {} value {raw:?} is not numeric", CHANNEL_NAMES[c]),
                }
            })?;
            let (lo, hi) = CHANNEL_RANGES[c];
            if v < lo || v > hi {
                return Err(Error::Validation {
                    line: line_no,
                    message: format!("{} = {v} outside [{lo}, {hi}]", CHANNEL_NAMES[c]),
                });
            }
            *slot = v;
        }
    }

    let raw_label = match fields[22] {
        "NA" => None,
        s => {
            let v = s.parse::<u8>().ok().and_then(RawLabel::from_index);
            Some(v.ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("raw_label {s:?} not in {{0,1,2,3,NA}}"),
            })?)
        }
    };
    let consensus = parse_flag(fields[23], line_no, "consensus")?;
    if consensus && raw_label.is_none() {
        return Err(Error::Validation {
            line: line_no,
            message: "consensus frame without a label".into(),
        });
    }

    Ok(FrameRecord {
        participant_id: fields[0].to_string(),
        video_id: fields[1].to_string(),
        frame_index,
        channels,
        raw_label,
        consensus,
        tracked,
    })
}

/// Write frames in the CSV schema, three decimals per channel.
pub fn write_frames<W: Write>(mut w: W, frames: &[FrameRecord]) -> std::io::Result<()> {
    let mut line = String::with_capacity(256);
    writeln!(w, "{FRAME_CSV_HEADER}")?;
    for f in frames {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(
            line,
            "{},{},{},{}",
            f.participant_id,
            f.video_id,
            f.frame_index,
            u8::from(f.tracked)
        );
        for &v in &f.channels {
            let v = if f.tracked { v } else { 0.0 };
            // Avoid "-0.000" so equal values always print identically.
            let v = if v.abs() < 5e-4 { 0.0 } else { v };
            let _ = write!(line, ",{v:.3}");
        }
        match f.raw_label {
            Some(l) => {
                let _ = write!(line, ",{}", l as u8);
            }
            None => line.push_str(",NA"),
        }
        let _ = write!(line, ",{}", u8::from(f.consensus));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(idx: u64) -> String {
        let mut s = format!("p01,v01,{idx},1");
        for c in 0..N_CHANNELS {
            s.push_str(&format!(",{}", c as f64 * 0.5));
        }
        s.push_str(",0,1");
        s
    }

    #[test]
    fn single_valid_row() {
        let text = format!("{FRAME_CSV_HEADER}\n{}\n", row(0));
        let frames = parse_frames(text.as_bytes()).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].participant_id, "p01");
        assert_eq!(frames[0].channels[7], 3.5);
        assert_eq!(frames[0].raw_label, Some(RawLabel::Alert));
        assert!(frames[0].tracked && frames[0].consensus);
    }

    #[test]
    fn short_row_reports_its_line() {
        let mut bad = row(1);
        bad.truncate(bad.rfind(',').unwrap());
        let text = format!("{FRAME_CSV_HEADER}\n{}\n{bad}\n", row(0));
        match parse_frames(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("23"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_channel_is_a_parse_error() {
        let text = format!("{FRAME_CSV_HEADER}\n{}\n", row(0).replacen(",0.5,", ",abc,", 1));
        assert!(matches!(
            parse_frames(text.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn out_of_range_tracked_value_is_a_validation_error() {
        let r = row(0).replacen("p01,v01,0,1,0", "p01,v01,0,1,95", 1);
        let text = format!("{FRAME_CSV_HEADER}\n{r}\n");
        assert!(matches!(
            parse_frames(text.as_bytes()),
            Err(Error::Validation { line: 2, .. })
        ));
    }

    #[test]
    fn untracked_frames_are_zero_filled() {
        let mut r = String::from("p01,v01,0,0");
        for _ in 0..N_CHANNELS {
            r.push_str(",999");
        }
        r.push_str(",NA,0");
        let text = format!("{FRAME_CSV_HEADER}\n{r}\n");
        let f = parse_frames(text.as_bytes()).unwrap();
        assert!(!f[0].tracked);
        assert!(f[0].channels.iter().all(|&v| v == 0.0));
        assert_eq!(f[0].usable_label(), None);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_frames("a,b,c\n".as_bytes()).is_err());
    }

    #[test]
    fn generated_file_counts_match() {
        let mut text = format!("{FRAME_CSV_HEADER}\n");
        for i in 0..300 {
            text.push_str(&row(i));
            text.push('\n');
        }
        let frames = parse_frames(text.as_bytes()).unwrap();
        assert_eq!(frames.len(), 300);
        assert!(frames.iter().enumerate().all(|(i, f)| f.frame_index == i as u64));
    }

    #[test]
    fn write_then_parse() {
        let text = format!("{FRAME_CSV_HEADER}\n{}\n{}\n", row(0), row(1));
        let frames = parse_frames(text.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_frames(&mut buf, &frames).unwrap();
        assert_eq!(parse_frames(buf.as_slice()).unwrap(), frames);
    }
}
