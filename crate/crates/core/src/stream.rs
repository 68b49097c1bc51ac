//! Line-delimited JSON detection streams: one [`FrameRecord`] per line.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::FrameRecord;

/// Streaming reader that validates each record and enforces strictly
/// increasing frame ids. Blank lines are ignored.
pub struct StreamReader<R> {
    input: R,
    line_no: usize,
    last_frame: Option<u64>,
    buf: String,
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(input: R) -> Self {
        StreamReader {
            input,
            line_no: 0,
            last_frame: None,
            buf: String::new(),
        }
    }

    fn parse_line(&mut self, line: &str) -> Result<FrameRecord> {
        let line_no = self.line_no;
        let rec: FrameRecord = serde_json::from_str(line).map_err(|e| Error::Line {
            line: line_no,
            field: "record".into(),
            message: e.to_string(),
        })?;
        rec.validate().map_err(|e| match e {
            Error::Invalid { field, message } => Error::Line {
                line: line_no,
                field,
                message,
            },
            other => other,
        })?;
        if let Some(last) = self.last_frame {
            if rec.frame_id <= last {
                return Err(Error::Line {
                    line: line_no,
                    field: "frame_id".into(),
                    message: format!("{} is not greater than previous frame {last}", rec.frame_id),
                });
            }
        }
        self.last_frame = Some(rec.frame_id);
        Ok(rec)
    }
}

impl<R: BufRead> Iterator for StreamReader<R> {
    type Item = Result<FrameRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    self.line_no += 1;
                    let line = std::mem::take(&mut self.buf);
                    let trimmed = line.trim();
                    if trimmed.is_empty() {
                        continue;
                    }
                    let out = self.parse_line(trimmed);
                    self.buf = line;
                    return Some(out);
                }
                Err(e) => {
                    return Some(Err(Error::Line {
                        line: self.line_no + 1,
                        field: "record".into(),
                        message: e.to_string(),
                    }))
                }
            }
        }
    }
}

/// Parses a whole stream held in memory.
pub fn parse_stream(text: &str) -> Result<Vec<FrameRecord>> {
    StreamReader::new(text.as_bytes()).collect()
}

pub fn serialize_record(rec: &FrameRecord) -> String {
    serde_json::to_string(rec).expect("frame records serialize")
}

pub fn write_stream<W: Write>(mut out: W, records: &[FrameRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", serialize_record(r))?;
    }
    Ok(())
}

pub fn stream_to_string(records: &[FrameRecord]) -> String {
    let mut buf = Vec::new();
    write_stream(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObjectClass;

    const GOOD: &str = r#"{"frame_id":0,"timestamp_ms":0,"width":100,"height":100,"detections":[{"class":"person","bbox":{"x":1,"y":2,"w":3,"h":4},"confidence":0.9}]}

{"frame_id":2,"timestamp_ms":66,"width":100,"height":100,"features":{"altitude_m":500,"water_fraction":0.1,"clutter_score":0.5},"detections":[]}
"#;

    #[test]
    fn parses_and_skips_blank_lines() {
        let recs = parse_stream(GOOD).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].detections[0].class, ObjectClass::Person);
        assert_eq!(recs[1].features.unwrap().altitude_m, 500.0);
    }

    #[test]
    fn confidence_out_of_range_names_field_and_line() {
        let text = GOOD.replace("0.9}", "1.7}");
        let err = parse_stream(&text).unwrap_err();
        match &err {
            Error::Line { line, field, .. } => {
                assert_eq!(*line, 1);
                assert!(field.contains("confidence"), "{field}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_class_is_carried() {
        let text = GOOD.replace("\"person\"", "\"camel\"");
        let recs = parse_stream(&text).unwrap();
        assert_eq!(recs[0].detections[0].class, ObjectClass::Other("camel".into()));
        let again = parse_stream(&stream_to_string(&recs)).unwrap();
        assert_eq!(again, recs);
    }

    #[test]
    fn non_monotonic_frames_rejected() {
        let text = GOOD.replace("\"frame_id\":2", "\"frame_id\":0");
        match parse_stream(&text).unwrap_err() {
            Error::Line { line, field, .. } => {
                assert_eq!(line, 3);
                assert_eq!(field, "frame_id");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        let err = parse_stream("{\"frame_id\":0,\n").unwrap_err();
        assert!(err.to_string().starts_with("line 1:"), "{err}");
        let err = parse_stream(r#"{"timestamp_ms":0,"width":1,"height":1}"#).unwrap_err();
        assert!(err.to_string().contains("frame_id"), "{err}");
    }
}
