//! Model checkpoint container.
//!
//! ```text
//! gol-model 1
//! arch 32x32x1:conv5x5x8,pool2,conv5x5x16,pool2,fc64
//! classes 5
//! params 29414
//! <one parameter per line, shortest round-trip decimal>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Architecture, BaseClassifier, Network};
use crate::error::{GolError, Result};

pub const MAGIC: &str = "gol-model";
pub const VERSION: u32 = 1;

pub fn to_text(classifier: &BaseClassifier) -> String {
    let net = classifier.network();
    let arch = net.architecture();
    let mut out = format!(
        "{MAGIC} {VERSION}\narch {}\nclasses {}\nparams {}\n",
        arch.spec(),
        arch.classes,
        net.param_count()
    );
    for p in net.params() {
        writeln!(out, "{p}").expect("write to string");
    }
    out
}

pub fn from_text(text: &str, path: &Path) -> Result<BaseClassifier> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (n, line) = lines
            .next()
            .ok_or_else(|| GolError::parse(path, 0, format!("missing '{key}' line")))?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(|v| (n, v.to_string()))
            .ok_or_else(|| GolError::parse(path, n, format!("expected '{key} ...'")))
    };
    let (n, version) = header(MAGIC)?;
    if version != VERSION.to_string() {
        return Err(GolError::parse(path, n, format!("unsupported model version {version}")));
    }
    let (_, arch_text) = header("arch")?;
    let (n, classes) = header("classes")?;
    let classes: usize = classes
        .parse()
        .map_err(|_| GolError::parse(path, n, "bad class count"))?;
    let (n, count) = header("params")?;
    let count: usize = count
        .parse()
        .map_err(|_| GolError::parse(path, n, "bad parameter count"))?;
    let arch = Architecture::parse(&arch_text, classes)?;
    let params = lines
        .map(|(n, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| GolError::parse(path, n, format!("bad parameter '{l}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if params.len() != count {
        return Err(GolError::parse(
            path,
            0,
            format!("expected {count} parameters, found {}", params.len()),
        ));
    }
    Ok(BaseClassifier::from_network(Network::from_params(&arch, params)?))
}

pub fn save(classifier: &BaseClassifier, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(classifier)).map_err(|e| GolError::io(path, e))
}

pub fn load(path: &Path) -> Result<BaseClassifier> {
    let text = std::fs::read_to_string(path).map_err(|e| GolError::io(path, e))?;
    from_text(&text, path)
}
