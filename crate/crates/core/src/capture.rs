//! OCR boundary. Images are handed to a pluggable [`OcrAdapter`]; text that
//! was already extracted on the client passes straight through.
//!
//! Recognition quality depends on the photo: text should be in focus, evenly
//! lit and captured at roughly 150 dpi or better. Nothing here checks that.
//! Image bytes stay in memory and are never written to disk by this module.

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::transcript::TextFragment;

/// Environment variable naming the external OCR program.
pub const OCR_COMMAND_ENV: &str = "DIETHELPER_OCR_COMMAND";
/// Optional whitespace-separated extra arguments for the OCR program.
pub const OCR_ARGS_ENV: &str = "DIETHELPER_OCR_ARGS";

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("no text was recognized in the image; retake the photo")]
    NoTextFound,
    #[error("OCR adapter unavailable: {0}")]
    AdapterUnavailable(String),
    #[error("cannot read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Where the label text comes from. Exactly one source per request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureRequest {
    ImageBytes(Vec<u8>),
    ImagePath(PathBuf),
    Fragments(Vec<TextFragment>),
    Raw(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureOutcome {
    pub fragments: Vec<TextFragment>,
}

/// An image handed to an adapter. `path` is set when the image came from a
/// file.
#[derive(Debug, Clone, Copy)]
pub struct ImageInput<'a> {
    pub bytes: &'a [u8],
    pub path: Option<&'a Path>,
}

pub trait OcrAdapter: Send + Sync {
    /// Text fragments in detector order. An empty result means no text.
    fn recognize(&self, image: ImageInput<'_>) -> Result<Vec<TextFragment>, CaptureError>;
}

pub fn extract_fragments(
    request: CaptureRequest,
    adapter: Option<&dyn OcrAdapter>,
) -> Result<CaptureOutcome, CaptureError> {
    let fragments = match request {
        CaptureRequest::Fragments(fragments) => fragments,
        CaptureRequest::Raw(raw) => vec![TextFragment::from(raw)],
        CaptureRequest::ImageBytes(bytes) => {
            let adapter = adapter.ok_or_else(not_configured)?;
            adapter.recognize(ImageInput {
                bytes: &bytes,
                path: None,
            })?
        }
        CaptureRequest::ImagePath(path) => {
            let adapter = adapter.ok_or_else(not_configured)?;
            let bytes = std::fs::read(&path).map_err(|source| CaptureError::ImageRead {
                path: path.clone(),
                source,
            })?;
            adapter.recognize(ImageInput {
                bytes: &bytes,
                path: Some(&path),
            })?
        }
    };
    if fragments.iter().all(TextFragment::is_blank) {
        return Err(CaptureError::NoTextFound);
    }
    Ok(CaptureOutcome { fragments })
}

fn not_configured() -> CaptureError {
    CaptureError::AdapterUnavailable("no OCR adapter is configured".into())
}

/// Runs an external program: image bytes on stdin, one fragment per line on
/// stdout.
#[derive(Debug, Clone)]
pub struct CommandAdapter {
    program: PathBuf,
    args: Vec<String>,
}

impl CommandAdapter {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }

    /// Reads [`OCR_COMMAND_ENV`] and [`OCR_ARGS_ENV`].
    pub fn from_env() -> Option<Self> {
        let program = std::env::var_os(OCR_COMMAND_ENV).filter(|p| !p.is_empty())?;
        let args = std::env::var(OCR_ARGS_ENV)
            .map(|a| a.split_whitespace().map(str::to_string).collect())
            .unwrap_or_default();
        Some(Self::new(program, args))
    }

    pub fn program(&self) -> &Path {
        &self.program
    }
}

impl OcrAdapter for CommandAdapter {
    fn recognize(&self, image: ImageInput<'_>) -> Result<Vec<TextFragment>, CaptureError> {
        let unavailable = |what: &str, e: io::Error| {
            CaptureError::AdapterUnavailable(format!("{what} {}: {e}", self.program.display()))
        };
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| unavailable("cannot start", e))?;

        let mut stdin = child.stdin.take().expect("stdin is piped");
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let (write_result, output, errors) = std::thread::scope(|scope| {
            let writer = scope.spawn(move || {
                let r = stdin.write_all(image.bytes);
                drop(stdin);
                r
            });
            let err_reader = scope.spawn(move || {
                let mut buf = Vec::new();
                let _ = stderr.read_to_end(&mut buf);
                buf
            });
            let mut out = Vec::new();
            let read = stdout.read_to_end(&mut out);
            (
                writer.join().expect("stdin writer panicked"),
                read.map(|_| out),
                err_reader.join().expect("stderr reader panicked"),
            )
        });
        let status = child.wait().map_err(|e| unavailable("lost", e))?;
        let output = output.map_err(|e| unavailable("cannot read output of", e))?;
        if !status.success() {
            let stderr = String::from_utf8_lossy(&errors);
            return Err(CaptureError::AdapterUnavailable(format!(
                "{} exited with {status}: {}",
                self.program.display(),
                stderr.trim()
            )));
        }
        // A program that exits early without reading its input is fine as
        // long as it succeeded.
        if let Err(e) = write_result {
            if e.kind() != io::ErrorKind::BrokenPipe {
                return Err(unavailable("cannot write image to", e));
            }
        }
        Ok(lines_to_fragments(&String::from_utf8_lossy(&output)))
    }
}

fn lines_to_fragments(text: &str) -> Vec<TextFragment> {
    text.lines()
        .map(|line| TextFragment::new(line.trim_end_matches('\r')))
        .collect()
}

/// Test adapter that looks up stored transcripts instead of running OCR.
///
/// For an image file `label.png` it reads the sidecar `label.png.txt`;
/// otherwise it reads `<dir>/<sha256 of the bytes>.txt`. One fragment per
/// line; an empty sidecar means "no text found".
#[derive(Debug, Clone, Default)]
pub struct FixtureAdapter {
    dir: Option<PathBuf>,
}

impl FixtureAdapter {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    /// Sidecar files only, no content-addressed directory.
    pub fn sidecars_only() -> Self {
        Self { dir: None }
    }

    pub fn fixture_name(bytes: &[u8]) -> String {
        format!("{}.txt", hex::encode(Sha256::digest(bytes)))
    }

    /// Stores a transcript for `image` in the fixture directory.
    pub fn register(&self, image: &[u8], lines: &[&str]) -> io::Result<PathBuf> {
        let dir = self
            .dir
            .as_ref()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, "fixture adapter has no directory"))?;
        std::fs::create_dir_all(dir)?;
        let path = dir.join(Self::fixture_name(image));
        let mut body = lines.join("\n");
        if !lines.is_empty() {
            body.push('\n');
        }
        std::fs::write(&path, body)?;
        Ok(path)
    }
}

impl OcrAdapter for FixtureAdapter {
    fn recognize(&self, image: ImageInput<'_>) -> Result<Vec<TextFragment>, CaptureError> {
        let mut candidates = Vec::new();
        if let Some(path) = image.path {
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".txt");
            candidates.push(PathBuf::from(sidecar));
        }
        if let Some(dir) = &self.dir {
            candidates.push(dir.join(Self::fixture_name(image.bytes)));
        }
        for candidate in &candidates {
            match std::fs::read_to_string(candidate) {
                Ok(text) => return Ok(lines_to_fragments(&text)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => {
                    return Err(CaptureError::AdapterUnavailable(format!(
                        "cannot read fixture {}: {e}",
                        candidate.display()
                    )))
                }
            }
        }
        Err(CaptureError::AdapterUnavailable(
            "no fixture transcript for this image".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<&'static str>);

    impl OcrAdapter for Fixed {
        fn recognize(&self, _: ImageInput<'_>) -> Result<Vec<TextFragment>, CaptureError> {
            Ok(self.0.iter().copied().map(TextFragment::from).collect())
        }
    }

    struct Panicking;

    impl OcrAdapter for Panicking {
        fn recognize(&self, _: ImageInput<'_>) -> Result<Vec<TextFragment>, CaptureError> {
            panic!("adapter must not be called for text input");
        }
    }

    #[test]
    fn fragments_pass_through_without_adapter() {
        let req = CaptureRequest::Fragments(vec!["sugar".into()]);
        let out = extract_fragments(req, Some(&Panicking)).unwrap();
        assert_eq!(out.fragments, vec![TextFragment::from("sugar")]);
        let out = extract_fragments(CaptureRequest::Raw(" Milk, Soy ".into()), None).unwrap();
        assert_eq!(out.fragments, vec![TextFragment::from(" Milk, Soy ")]);
    }

    #[test]
    fn pass_through_is_byte_identical() {
        let frags: Vec<TextFragment> = vec!["".into(), "  Ünïcode\t".into(), "a,b".into()];
        let out = extract_fragments(CaptureRequest::Fragments(frags.clone()), None).unwrap();
        assert_eq!(out.fragments, frags);
    }

    #[test]
    fn empty_text_inputs_are_no_text_found() {
        for req in [
            CaptureRequest::Fragments(vec![]),
            CaptureRequest::Fragments(vec!["".into(), "  ".into()]),
            CaptureRequest::Raw(String::new()),
        ] {
            assert!(matches!(extract_fragments(req, None), Err(CaptureError::NoTextFound)));
        }
    }

    #[test]
    fn empty_adapter_output_is_no_text_found() {
        let req = CaptureRequest::ImageBytes(vec![1, 2, 3]);
        assert!(matches!(
            extract_fragments(req, Some(&Fixed(vec![]))),
            Err(CaptureError::NoTextFound)
        ));
    }

    #[test]
    fn image_without_adapter_is_unavailable() {
        let req = CaptureRequest::ImageBytes(vec![1, 2, 3]);
        assert!(matches!(
            extract_fragments(req, None),
            Err(CaptureError::AdapterUnavailable(_))
        ));
    }

    #[test]
    fn image_path_missing_file() {
        let req = CaptureRequest::ImagePath("/nonexistent/label.png".into());
        assert!(matches!(
            extract_fragments(req, Some(&Fixed(vec!["x"]))),
            Err(CaptureError::ImageRead { .. })
        ));
    }

    #[test]
    fn command_adapter_reads_lines() {
        // `cat` echoes the "image" back, which makes a convenient fake OCR.
        let adapter = CommandAdapter::new("cat", vec![]);
        let req = CaptureRequest::ImageBytes(b"Wheat Flour\r\nSalt\n".to_vec());
        let out = extract_fragments(req, Some(&adapter)).unwrap();
        assert_eq!(
            out.fragments,
            vec![TextFragment::from("Wheat Flour"), TextFragment::from("Salt")]
        );
    }

    #[test]
    fn command_adapter_failures() {
        let missing = CommandAdapter::new("/nonexistent/ocr-binary", vec![]);
        assert!(matches!(
            missing.recognize(ImageInput {
                bytes: b"x",
                path: None
            }),
            Err(CaptureError::AdapterUnavailable(_))
        ));
        let failing = CommandAdapter::new("sh", vec!["-c".into(), "echo boom >&2; exit 3".into()]);
        let err = failing
            .recognize(ImageInput {
                bytes: b"x",
                path: None,
            })
            .unwrap_err();
        assert!(err.to_string().contains("boom"), "{err}");
    }

    #[test]
    fn command_adapter_empty_output() {
        let adapter = CommandAdapter::new("true", vec![]);
        let req = CaptureRequest::ImageBytes(vec![0; 200_000]);
        assert!(matches!(
            extract_fragments(req, Some(&adapter)),
            Err(CaptureError::NoTextFound)
        ));
    }

    #[test]
    fn fixture_adapter_by_hash_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let adapter = FixtureAdapter::new(dir.path().join("fixtures"));
        adapter.register(b"image-1", &["Sugar", "Cocoa Butter"]).unwrap();
        adapter.register(b"blank", &[]).unwrap();

        let out = extract_fragments(CaptureRequest::ImageBytes(b"image-1".to_vec()), Some(&adapter)).unwrap();
        assert_eq!(out.fragments.len(), 2);
        assert!(matches!(
            extract_fragments(CaptureRequest::ImageBytes(b"blank".to_vec()), Some(&adapter)),
            Err(CaptureError::NoTextFound)
        ));
        assert!(matches!(
            extract_fragments(CaptureRequest::ImageBytes(b"unknown".to_vec()), Some(&adapter)),
            Err(CaptureError::AdapterUnavailable(_))
        ));

        let image = dir.path().join("label.png");
        std::fs::write(&image, b"\x89PNG fake").unwrap();
        std::fs::write(dir.path().join("label.png.txt"), "Milk\n").unwrap();
        let out = extract_fragments(CaptureRequest::ImagePath(image), Some(&FixtureAdapter::sidecars_only())).unwrap();
        assert_eq!(out.fragments, vec![TextFragment::from("Milk")]);
    }
}
