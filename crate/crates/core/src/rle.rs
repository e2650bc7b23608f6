//! Column-major run-length coding for binary masks.
//!
//! Runs alternate zero/one and always start with a zero run, which may be
//! empty. Pixels are visited column by column (top to bottom, then left to
//! right), the same layout COCO-style tools use.

use thiserror::Error;

use crate::model::BinaryGrid;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RleError {
    #[error("runs sum to {got}, expected {width}x{height} = {}", u64::from(*width) * u64::from(*height))]
    RunSum { got: u64, width: u32, height: u32 },
}

pub fn encode_rle(grid: &BinaryGrid) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut count = 0u32;
    for x in 0..grid.width() {
        for y in 0..grid.height() {
            let v = grid.get(x, y);
            if v != current {
                runs.push(count);
                current = v;
                count = 0;
            }
            count += 1;
        }
    }
    runs.push(count);
    runs
}

pub fn decode_rle(runs: &[u32], width: u32, height: u32) -> Result<BinaryGrid, RleError> {
    let got: u64 = runs.iter().map(|&r| u64::from(r)).sum();
    if got != u64::from(width) * u64::from(height) {
        return Err(RleError::RunSum { got, width, height });
    }
    let mut grid = BinaryGrid::new(width, height);
    let mut pos = 0u64;
    for (i, &run) in runs.iter().enumerate() {
        if i % 2 == 1 {
            for p in pos..pos + u64::from(run) {
                let x = (p / u64::from(height)) as u32;
                let y = (p % u64::from(height)) as u32;
                grid.set(x, y, true);
            }
        }
        pos += u64::from(run);
    }
    Ok(grid)
}
