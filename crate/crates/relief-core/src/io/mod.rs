//! Bit-exact file I/O: PFM and 16-bit PNG height fields, mask images,
//! shaded previews, and printable solid meshes.

mod mask;
mod mesh;
mod pfm;
mod png16;
mod preview;

pub use mask::read_mask;
pub use mesh::{build_solid_mesh, export_mesh, MeshFormat, SolidMesh};
pub use pfm::{read_pfm, write_pfm};
pub use png16::{read_png16, write_png16, RangeSidecar};
pub use preview::{render_preview, write_preview};

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Height-field container formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightFormat {
    Pfm,
    Png16,
}

impl HeightFormat {
    /// Pick a format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("pfm") => Ok(HeightFormat::Pfm),
            Some("png") => Ok(HeightFormat::Png16),
            other => Err(Error::Malformed {
                format: "height path",
                reason: format!("unsupported extension {other:?} (use .pfm or .png)"),
            }),
        }
    }
}

/// Write a height field in the given format.
pub fn write_height(path: &Path, h: &ScalarField, format: HeightFormat) -> Result<()> {
    match format {
        HeightFormat::Pfm => write_pfm(path, h),
        HeightFormat::Png16 => write_png16(path, h),
    }
}

/// Read a height field in the given format.
pub fn read_height(path: &Path, format: HeightFormat) -> Result<ScalarField> {
    match format {
        HeightFormat::Pfm => read_pfm(path),
        HeightFormat::Png16 => read_png16(path),
    }
}
