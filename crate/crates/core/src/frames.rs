//! Numbered PNG sequences on disk, plus an optional external codec.
//!
//! The library never links a video codec. Container formats go through the
//! binary named by `RAVA_FFMPEG`, which only has to accept ffmpeg's
//! `-i <in> <out>` calling convention.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use image::RgbImage;
use thiserror::Error;

use crate::model::{FrameSequence, ModelError};

pub const FFMPEG_ENV: &str = "RAVA_FFMPEG";

#[derive(Debug, Error)]
pub enum FramesError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("no PNG frames in {0}")]
    Empty(PathBuf),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{FFMPEG_ENV} is not set; container formats need an external encoder")]
    NoCodec,
    #[error("codec exited with {status}: {stderr}")]
    Codec { status: String, stderr: String },
}

fn io_err(path: &Path, e: impl ToString) -> FramesError {
    FramesError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn frame_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

/// PNG files in `dir`, sorted by file name.
pub fn png_paths(dir: &Path) -> Result<Vec<PathBuf>, FramesError> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn read_frame(path: &Path) -> Result<RgbImage, FramesError> {
    image::open(path)
        .map(|img| img.to_rgb8())
        .map_err(|source| FramesError::Image {
            path: path.to_path_buf(),
            source,
        })
}

pub fn read_png_dir(dir: &Path, fps: f64) -> Result<FrameSequence, FramesError> {
    let paths = png_paths(dir)?;
    if paths.is_empty() {
        return Err(FramesError::Empty(dir.to_path_buf()));
    }
    let frames = paths
        .iter()
        .map(|p| read_frame(p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FrameSequence::new(frames, fps)?)
}

/// Writes `frame_000000.png`, `frame_000001.png`, ... and returns the paths.
pub fn write_png_dir(video: &FrameSequence, dir: &Path) -> Result<Vec<PathBuf>, FramesError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    video
        .frames()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let path = dir.join(frame_name(i));
            fs::write(&path, encode_png(f)).map_err(|e| io_err(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// PNG bytes of one frame, as written by [`write_png_dir`].
pub fn encode_png(frame: &RgbImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    frame
        .write_to(&mut out, image::ImageFormat::Png)
        .expect("in-memory PNG encoding");
    out.into_inner()
}

fn codec() -> Result<PathBuf, FramesError> {
    std::env::var_os(FFMPEG_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .ok_or(FramesError::NoCodec)
}

fn run(args: &[&std::ffi::OsStr]) -> Result<(), FramesError> {
    let bin = codec()?;
    let out = Command::new(&bin)
        .args(args)
        .output()
        .map_err(|e| io_err(&bin, e))?;
    if !out.status.success() {
        return Err(FramesError::Codec {
            status: out.status.to_string(),
            stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(())
}

/// Splits a container file into a numbered PNG directory.
pub fn decode_video(input: &Path, dir: &Path) -> Result<(), FramesError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let pattern = dir.join("frame_%06d.png");
    run(&[
        "-y".as_ref(),
        "-loglevel".as_ref(),
        "error".as_ref(),
        "-i".as_ref(),
        input.as_os_str(),
        "-start_number".as_ref(),
        "0".as_ref(),
        pattern.as_os_str(),
    ])
}

/// Encodes a numbered PNG directory into a container file.
pub fn encode_video(dir: &Path, fps: f64, output: &Path) -> Result<(), FramesError> {
    let pattern = dir.join("frame_%06d.png");
    let rate = fps.to_string();
    run(&[
        "-y".as_ref(),
        "-loglevel".as_ref(),
        "error".as_ref(),
        "-framerate".as_ref(),
        rate.as_ref(),
        "-start_number".as_ref(),
        "0".as_ref(),
        "-i".as_ref(),
        pattern.as_os_str(),
        output.as_os_str(),
    ])
}
