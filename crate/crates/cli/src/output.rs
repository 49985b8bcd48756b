use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::CliResult;

/// A buffered file, or stdout when no path is given.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| carfac::Error::file(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

pub fn create_file(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| carfac::Error::file(path, e))?))
}
