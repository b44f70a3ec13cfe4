use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stochtex::fixtures;
use stochtex::texture::{build_mip_pyramid, load_image, load_volume, MipPyramid};
use stochtex::{Filter, TextureGrid};

use crate::error::CliError;

pub const FIXTURE_HIGH_CONTRAST: &str = "fixture:high-contrast";
pub const FIXTURE_PUFF: &str = "fixture:puff";

/// A loaded experiment input.
#[derive(Debug, Clone)]
pub enum Input {
    Image(TextureGrid),
    Volume(TextureGrid),
}

impl Input {
    pub fn into_image(self) -> Result<TextureGrid, CliError> {
        match self {
            Input::Image(g) => Ok(g),
            Input::Volume(_) => Err(CliError::Usage("this command needs a 2D image input".into())),
        }
    }
}

/// Loads `path`, or the `fallback` fixture when no path is given.
pub fn load_input(path: Option<&Path>, fallback: Option<&str>, raw: bool) -> Result<Input, CliError> {
    let name: PathBuf = match (path, fallback) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(f)) => PathBuf::from(f),
        (None, None) => return Err(CliError::Usage("--input is required".into())),
    };
    match name.to_str() {
        Some(FIXTURE_HIGH_CONTRAST) => return Ok(Input::Image(fixtures::high_contrast())),
        Some(FIXTURE_PUFF) => return Ok(Input::Volume(fixtures::puff())),
        Some(s) if s.starts_with("fixture:") => return Err(CliError::Usage(format!("unknown fixture '{s}'"))),
        _ => {}
    }
    if !name.exists() {
        return Err(CliError::Usage(format!("input '{}' does not exist", name.display())));
    }
    let is_volume = name
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("stxv"));
    Ok(if is_volume {
        Input::Volume(load_volume(&name)?)
    } else {
        Input::Image(load_image(&name, raw)?)
    })
}

/// Filters that read coarser MIP levels need a pyramid; the rest run on
/// level 0 either way.
pub fn needs_pyramid(f: &Filter) -> bool {
    matches!(f, Filter::Ewa | Filter::TrilinearMip)
}

pub fn pyramid(g: &TextureGrid) -> MipPyramid {
    build_mip_pyramid(g)
}

/// Writes rows as CSV with a header to `path`, or stdout.
pub fn write_csv<T: Serialize>(rows: &[T], path: Option<&Path>) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Fails with a numerical error when any value is NaN.
pub fn check_finite<'a>(what: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<(), CliError> {
    if values.into_iter().any(|v| v.is_nan()) {
        Err(CliError::Numeric(format!("NaN in {what}")))
    } else {
        Ok(())
    }
}

pub fn check_grid(what: &str, g: &TextureGrid) -> Result<(), CliError> {
    if g.data().iter().any(|v| !v.is_finite()) {
        Err(CliError::Numeric(format!("non-finite value in {what}")))
    } else {
        Ok(())
    }
}
