//! Parameter resolution (flag, then replayed manifest, then default), input
//! loading and output writing shared by all subcommands.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gravclust::data::{load_csv, write_csv_to, DataMatrix};
use gravclust::manifest::{sha256_file, sha256_hex, Manifest};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or parameter values: exit code 1.
    Usage(String),
    /// Unreadable, malformed or unsuitable data: exit code 2.
    Data(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

impl From<gravclust::Error> for Failure {
    fn from(e: gravclust::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Maps a library error raised while checking parameters to a usage error.
pub fn bad_param(e: gravclust::Error) -> Failure {
    Failure::Usage(e.to_string())
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Parameters of one run: values from `--config` with command-line flags
/// layered on top.
pub struct Params {
    m: Manifest,
    from_flags: BTreeSet<String>,
}

impl Params {
    pub fn load(command: &str, config: Option<&Path>) -> CliResult<Self> {
        let m = match config {
            None => Manifest::new(),
            Some(p) => Manifest::read(p).map_err(|e| usage(format!("--config: {e}")))?,
        };
        if let Some(c) = m.get("command") {
            if c != command {
                return Err(usage(format!(
                    "--config {} was written by '{c}', not '{command}'",
                    config.map(|p| p.display().to_string()).unwrap_or_default()
                )));
            }
        }
        Ok(Self {
            m,
            from_flags: BTreeSet::new(),
        })
    }

    pub fn flag<T: fmt::Display>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.m.set(key, v);
            self.from_flags.insert(key.to_string());
        }
    }

    pub fn flag_path(&mut self, key: &str, value: Option<&PathBuf>) {
        self.flag(key, value.map(|p| p.display()));
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.m.get(key)
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.m.get_parsed(key).map_err(bad_param)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn required<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        self.opt(key)?
            .ok_or_else(|| usage(format!("missing --{}", key.replace(['_', '.'], "-"))))
    }

    pub fn is_flag(&self, key: &str) -> bool {
        self.from_flags.contains(key)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.m
    }

    /// Hash recorded for `key` in the replayed manifest, unless a flag
    /// replaced the path.
    pub fn expected_hash(&self, key: &str) -> Option<&str> {
        if self.is_flag(key) {
            None
        } else {
            self.m.get(&format!("{key}.sha256"))
        }
    }

    /// Hashes the file named by `key`, checking it against the replayed
    /// manifest.
    pub fn verify_file(&self, key: &str, path: &Path) -> CliResult<String> {
        let hash = sha256_file(path)?;
        if let Some(expected) = self.expected_hash(key) {
            if expected != hash {
                return Err(Failure::Data(format!(
                    "{} differs from the file recorded in the manifest (sha256 {hash}, expected {expected})",
                    path.display()
                )));
            }
        }
        Ok(hash)
    }
}

/// Loads a CSV dataset. `label_column` is a column name, `none`, or `auto`
/// (use `label` when present). Returns the data and the resolved column.
pub fn load_data(path: &Path, label_column: &str) -> CliResult<(DataMatrix, String)> {
    match label_column {
        "none" => Ok((load_csv(path, None)?, "none".into())),
        "auto" => match load_csv(path, Some("label")) {
            Ok(d) => Ok((d, "label".into())),
            Err(gravclust::Error::MissingLabelColumn { .. }) => Ok((load_csv(path, None)?, "none".into())),
            Err(e) => Err(e.into()),
        },
        name => Ok((load_csv(path, Some(name))?, name.to_string())),
    }
}

pub fn require_labels<'a>(data: &'a DataMatrix, path: &Path, requested: &str) -> CliResult<&'a [usize]> {
    data.labels().ok_or_else(|| {
        let hint = match requested {
            "auto" => "no 'label' column (name another with --label-column)",
            _ => "--label-column none given",
        };
        Failure::Data(format!("{}: {hint}; ground-truth labels are required", path.display()))
    })
}

/// Reads one column of a CSV as labels. Integer labels are kept; any other
/// values are numbered in order of first appearance.
pub fn read_label_column(path: &Path, column: &str) -> CliResult<Vec<usize>> {
    let data_err = |e: csv::Error| Failure::Data(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(data_err)?;
    let idx = reader
        .headers()
        .map_err(data_err)?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Failure::Data(format!("{}: no column '{column}'", path.display())))?;
    let mut raw = Vec::new();
    for record in reader.records() {
        let record = record.map_err(data_err)?;
        let cell = record
            .get(idx)
            .ok_or_else(|| Failure::Data(format!("{}: short row {}", path.display(), raw.len() + 2)))?;
        raw.push(cell.to_string());
    }
    if raw.is_empty() {
        return Err(Failure::Data(format!("{}: no rows", path.display())));
    }
    if let Some(ints) = raw.iter().map(|s| s.parse().ok()).collect::<Option<Vec<usize>>>() {
        return Ok(ints);
    }
    let mut seen: Vec<&str> = Vec::new();
    Ok(raw
        .iter()
        .map(|s| match seen.iter().position(|x| x == s) {
            Some(i) => i,
            None => {
                seen.push(s);
                seen.len() - 1
            }
        })
        .collect())
}

/// Files written by a run; their hashes go into the manifest.
pub struct Outputs {
    dir: PathBuf,
    hashes: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hashes: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))?;
        self.hashes.push((name.to_string(), sha256_hex(contents)));
        Ok(path)
    }

    pub fn write_data(&mut self, name: &str, data: &DataMatrix) -> CliResult<PathBuf> {
        let mut buf = Vec::new();
        write_csv_to(data, &mut buf, None, "label").map_err(|e| Failure::Data(e.to_string()))?;
        self.write(name, &buf)
    }

    /// Writes the manifest with an `output.<file>.sha256` entry per output.
    pub fn finish(self, mut manifest: Manifest) -> CliResult<PathBuf> {
        for (name, hash) in &self.hashes {
            manifest.set(format!("output.{name}.sha256"), hash);
        }
        let path = self.dir.join(MANIFEST_FILE);
        manifest.write(&path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_and_track_hash_checks() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("m.txt");
        std::fs::write(&cfg, "command=x\nseed=4\ninput=a.csv\ninput.sha256=00\n").unwrap();
        let mut p = Params::load("x", Some(&cfg)).unwrap();
        assert_eq!(p.get("seed", 0u64).unwrap(), 4);
        assert_eq!(p.expected_hash("input"), Some("00"));
        p.flag("seed", Some(9));
        p.flag_path("input", Some(&PathBuf::from("b.csv")));
        assert_eq!(p.get("seed", 0u64).unwrap(), 9);
        assert_eq!(p.expected_hash("input"), None);
        assert!(matches!(p.required::<u64>("k"), Err(Failure::Usage(m)) if m == "missing --k"));
        assert!(matches!(Params::load("y", Some(&cfg)), Err(Failure::Usage(_))));
    }

    #[test]
    fn label_column_encoding() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("l.csv");
        std::fs::write(&f, "x,c\n1,b\n2,a\n3,b\n").unwrap();
        assert_eq!(read_label_column(&f, "c").unwrap(), vec![0, 1, 0]);
        std::fs::write(&f, "x,c\n1,4\n2,2\n").unwrap();
        assert_eq!(read_label_column(&f, "c").unwrap(), vec![4, 2]);
        assert!(matches!(read_label_column(&f, "zz"), Err(Failure::Data(_))));
    }

    #[test]
    fn auto_label_column() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("d.csv");
        std::fs::write(&f, "x,y\n1,2\n3,4\n").unwrap();
        let (d, col) = load_data(&f, "auto").unwrap();
        assert_eq!((d.cols(), col.as_str()), (2, "none"));
        std::fs::write(&f, "x,label\n1,0\n3,1\n").unwrap();
        let (d, col) = load_data(&f, "auto").unwrap();
        assert_eq!((d.cols(), col.as_str(), d.labels().unwrap()), (1, "label", &[0usize, 1][..]));
    }
}
