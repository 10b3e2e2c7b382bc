//! File helpers: reads with path context, whole-file atomic writes, and
//! hardware profile resolution (file path or built-in name).

use std::fs;
use std::io::Write;
use std::path::Path;

use abconv::Profile;

use crate::cmd::CliError;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Write `contents` to `path` through a temporary file in the same directory,
/// so a crash mid-write never leaves a truncated file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new("."))).map_err(|e| {
            CliError::Io(format!(
                "cannot create temp file for {}: {e}",
                path.display()
            ))
        })?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot replace {}: {e}", path.display())))?;
    Ok(())
}

/// Resolve `--hw`: an existing file wins, otherwise the name is looked up
/// among the built-in profiles (with or without a `.json` suffix).
pub fn load_profile(name: &str) -> Result<Profile, CliError> {
    let path = Path::new(name);
    if path.is_file() {
        let text = read_file(path)?;
        let profile: Profile = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid profile {}: {e}", path.display())))?;
        profile
            .validate()
            .map_err(|e| CliError::Domain(e.to_string()))?;
        return Ok(profile);
    }
    let bare = name.strip_suffix(".json").unwrap_or(name);
    Profile::builtin(bare).ok_or_else(|| {
        CliError::Io(format!(
            "no such file or built-in profile: {name} (built-ins: ethos-u65-like, jetson-nano-like)"
        ))
    })
}

/// Send CSV to stdout or, when `--out` is given, atomically to a file.
pub fn emit(out: Option<&Path>, csv: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
