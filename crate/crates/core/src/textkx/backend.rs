use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use super::{OcrBackend, OcrToken};
use crate::error::{Error, Result};
use crate::imgprim::{BoundingBox, ScanImage};

/// Replays canned tokens keyed by the image's source id; unknown ids read as
/// blank.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    tokens: HashMap<String, Vec<OcrToken>>,
}

impl MockBackend {
    pub fn insert(&mut self, source_id: impl Into<String>, tokens: Vec<OcrToken>) {
        self.tokens.insert(source_id.into(), tokens);
    }

    pub fn from_map(tokens: HashMap<String, Vec<OcrToken>>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl OcrBackend for MockBackend {
    fn recognize(&mut self, img: &ScanImage) -> Result<Vec<OcrToken>> {
        Ok(self.tokens.get(img.source_id()).cloned().unwrap_or_default())
    }
}

/// External OCR engine speaking a line protocol on stdin/stdout.
///
/// Request: the path of a PNG file, one line. Response: one line per token,
/// `text\tx\ty\tw\th\tconf`, then an empty line.
pub struct ProcessBackend {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    scratch: tempfile::TempDir,
}

impl ProcessBackend {
    pub fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Config("ocr.command is empty".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Backend(format!("cannot start {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child,
            stdin,
            stdout,
            scratch: tempfile::tempdir()?,
        })
    }

    fn request(&mut self, png: &Path) -> Result<Vec<OcrToken>> {
        let gone = |e: std::io::Error| Error::Backend(format!("OCR process I/O: {e}"));
        writeln!(self.stdin, "{}", png.display()).map_err(gone)?;
        self.stdin.flush().map_err(gone)?;
        let mut tokens = Vec::new();
        loop {
            let mut line = String::new();
            if self.stdout.read_line(&mut line).map_err(gone)? == 0 {
                return Err(Error::Backend("OCR process closed its output".into()));
            }
            let line = line.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                return Ok(tokens);
            }
            tokens.push(parse_token_line(line)?);
        }
    }
}

pub(crate) fn parse_token_line(line: &str) -> Result<OcrToken> {
    let bad = || Error::Backend(format!("malformed OCR line {line:?}"));
    let parts: Vec<&str> = line.split('\t').collect();
    let [text, x, y, w, h, conf] = parts[..] else {
        return Err(bad());
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let (x, y, w, h) = (num(x)?, num(y)?, num(w)?, num(h)?);
    if x < 0.0 || y < 0.0 || w <= 0.0 || h <= 0.0 {
        return Err(bad());
    }
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let bbox = BoundingBox::new(
        x0,
        y0,
        ((x + w).ceil() as usize).max(x0 + 1),
        ((y + h).ceil() as usize).max(y0 + 1),
    )?;
    OcrToken::new(text, bbox, num(conf)?)
}

pub(crate) fn format_token_line(t: &OcrToken) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{:.4}",
        t.text.replace(['\t', '\n', '\r'], " "),
        t.bbox.x_left,
        t.bbox.y_top,
        t.bbox.width(),
        t.bbox.height(),
        t.confidence
    )
}

impl OcrBackend for ProcessBackend {
    fn recognize(&mut self, img: &ScanImage) -> Result<Vec<OcrToken>> {
        let path = self.scratch.path().join("request.png");
        img.save_png(&path)?;
        self.request(&path)
    }
}

impl Drop for ProcessBackend {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Serves `backend` over the line protocol until stdin closes.
pub fn serve(
    backend: &mut dyn OcrBackend,
    input: impl BufRead,
    mut output: impl Write,
) -> Result<()> {
    for line in input.lines() {
        let line = line?;
        let path = line.trim();
        if path.is_empty() {
            continue;
        }
        // an unreadable request gets an empty answer; the client keeps going
        if let Ok(img) = ScanImage::load(Path::new(path)) {
            if let Ok(tokens) = backend.recognize(&img) {
                for t in &tokens {
                    writeln!(output, "{}", format_token_line(t))?;
                }
            }
        }
        writeln!(output)?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_round_trip() {
        let t = OcrToken::new("3:00", BoundingBox::new(4, 5, 30, 19).unwrap(), 0.875).unwrap();
        assert_eq!(parse_token_line(&format_token_line(&t)).unwrap(), t);
        assert!(parse_token_line("RT\t1\t2\t3").is_err());
        assert!(parse_token_line("RT\t1\t2\t0\t4\t0.9").is_err());
        assert!(parse_token_line("RT\t1\t2\t3\t4\t1.9").is_err());
    }

    #[test]
    fn fractional_boxes_cover_extent() {
        let t = parse_token_line("LT\t1.5\t2.2\t10.1\t3.3\t0.5").unwrap();
        assert_eq!(t.bbox, BoundingBox::new(1, 2, 12, 6).unwrap());
    }

    #[test]
    fn missing_program_is_backend_error() {
        let r = ProcessBackend::spawn(&["/nonexistent/ocr-engine".to_string()]);
        assert!(matches!(r, Err(Error::Backend(_))));
        assert!(matches!(ProcessBackend::spawn(&[]), Err(Error::Config(_))));
    }

    #[cfg(unix)]
    #[test]
    fn talks_to_subprocess() {
        // a shell loop answering every request with a fixed token
        let script = "while read p; do printf 'RT\\t1\\t2\\t3\\t4\\t0.9\\n\\n'; done";
        let mut b = ProcessBackend::spawn(&["sh".into(), "-c".into(), script.into()]).unwrap();
        let img = ScanImage::filled_gray(8, 8, 0);
        for _ in 0..2 {
            let got = b.recognize(&img).unwrap();
            assert_eq!(got.len(), 1);
            assert_eq!(got[0].text, "RT");
        }
    }

    #[cfg(unix)]
    #[test]
    fn dead_subprocess_errors() {
        let mut b = ProcessBackend::spawn(&["true".into()]).unwrap();
        assert!(b.recognize(&ScanImage::filled_gray(4, 4, 0)).is_err());
    }

    #[test]
    fn serve_answers_each_request() {
        let mut mock = MockBackend::default();
        let input = b"/no/such/file.png\n\n" as &[u8];
        let mut out = Vec::new();
        serve(&mut mock, input, &mut out).unwrap();
        assert_eq!(out, b"\n");
    }
}
