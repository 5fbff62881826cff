//! Versioned JSON documents, atomic writes and the single-writer lock.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Cursor, Write};
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;
pub const LOCK_FILE: &str = ".lock";

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    format_version: u64,
    #[serde(flatten)]
    body: T,
}

/// Replaces `path` with whatever `fill` writes, via a sibling temp file and a rename.
///
/// If `fill` fails the temp file is discarded and `path` keeps its old contents.
pub fn write_atomic_with(path: &Path, fill: impl FnOnce(&mut File) -> io::Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |f| f.write_all(bytes))
}

pub fn to_json_bytes<T: Serialize>(body: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Versioned { format_version: FORMAT_VERSION, body })
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_document<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(body)?)
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let invalid = |e: serde_json::Error| Error::InvalidDocument { path: path.to_path_buf(), message: e.to_string() };
    let value: serde_json::Value = serde_json::from_slice(&fs::read(path)?).map_err(invalid)?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(FORMAT_VERSION) => {}
        Some(found) => return Err(Error::SchemaVersionUnsupported { path: path.to_path_buf(), found }),
        None => {
            return Err(Error::InvalidDocument { path: path.to_path_buf(), message: "missing format_version".into() })
        }
    }
    Ok(serde_json::from_value::<Versioned<T>>(value).map_err(invalid)?.body)
}

pub fn png_bytes<P, C>(img: &image::ImageBuffer<P, C>) -> Result<Vec<u8>>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut buf = Vec::new();
    img.write_to(&mut Cursor::new(&mut buf), ImageFormat::Png)?;
    Ok(buf)
}

pub fn load_gray(path: &Path) -> Result<GrayImage> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(image::open(path)?.to_luma8())
}

/// Exclusive writer claim on a project directory, released on drop.
#[derive(Debug)]
pub struct WriterLock {
    path: PathBuf,
    root: PathBuf,
}

impl WriterLock {
    pub fn acquire(root: &Path) -> Result<Self> {
        let path = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path, root: root.to_path_buf() })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(Error::WriterLockHeld(path)),
            Err(e) => Err(e.into()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl Drop for WriterLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
