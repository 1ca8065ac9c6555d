//! Text formats for datasets and trained models.
//!
//! Both formats are line oriented. Matrices are written as `n` rows of `n`
//! space-separated values with 17 significant digits, which round-trips every
//! `f64` exactly.
//!
//! Dataset:
//!
//! ```text
//! SPDDS v1 n=<n> C=<C> m=<m>
//! <label>
//! <n rows of n values>
//! ...
//! ```
//!
//! Model:
//!
//! ```text
//! SPDMODEL v1 method=<method> n=<n> C=<C> M=<M>
//! sigma_sq <value>          (prototype methods)
//! tau <value>               (rslvq-euclidean)
//! priors <M values>         (prototype methods)
//! seed <u64>                (optional)
//! config_hash <hex>         (optional)
//! prototype <label>
//! <n rows of n values>
//! ...
//! checksum <sha256 of every preceding byte>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::baselines::{EuclideanRslvqModel, MdrmModel};
use crate::classifier::{Model, Prototype, TrainConfig};
use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

use super::method::{Method, TrainedModel};

const DATASET_MAGIC: &str = "SPDDS";
const MODEL_MAGIC: &str = "SPDMODEL";
const VERSION: &str = "v1";

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse {
        offset: e.utf8_error().valid_up_to(),
        message: "file is not valid UTF-8".into(),
    })
}

fn write_matrix(out: &mut String, m: &DMatrix<f64>) {
    for row in m.row_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn dataset_to_string(data: &LabeledDataset) -> String {
    let n = data.dim();
    let mut out = format!(
        "{DATASET_MAGIC} {VERSION} n={n} C={} m={}\n",
        data.num_classes(),
        data.len()
    );
    out.reserve(data.len() * n * n * 24);
    for (x, y) in data.iter() {
        let _ = writeln!(out, "{y}");
        write_matrix(&mut out, x.matrix());
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<LabeledDataset> {
    let mut r = Reader::new(text);
    let header = r.header(DATASET_MAGIC, "a dataset")?;
    let n = header.usize("n")?;
    let num_classes = header.usize("C")?;
    let m = header.usize("m")?;
    header.done()?;
    if n == 0 || num_classes == 0 {
        return Err(header.error("n and C must be positive"));
    }
    let mut samples = Vec::with_capacity(m);
    for i in 0..m {
        let (offset, label) = r.label_line("label", num_classes)?;
        let matrix = r.matrix(n)?;
        let x = SpdMatrix::new(matrix).map_err(|e| Error::Parse {
            offset,
            message: format!("sample {i}: {e}"),
        })?;
        samples.push((x, label));
    }
    r.expect_end()?;
    LabeledDataset::new(n, num_classes, samples)
}

pub fn save_dataset(path: &Path, data: &LabeledDataset) -> Result<()> {
    write_atomic(path, dataset_to_string(data).as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    parse_dataset(&read_text(path)?)
}

/// Provenance stored alongside a model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelMeta {
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: TrainedModel,
    pub meta: ModelMeta,
}

impl ModelFile {
    /// Fails unless the stored model was trained with `method`.
    pub fn expect_method(self, method: Method) -> Result<Self> {
        let found = self.model.method();
        if found == method {
            Ok(self)
        } else {
            Err(Error::Config(format!(
                "model file holds a {found} model, expected {method}"
            )))
        }
    }
}

/// Short stable digest of every field of `config`.
pub fn config_hash(config: &TrainConfig) -> String {
    let canonical = format!(
        "sigma_sq_opt={:e};xi={};epochs={};annealing={};beta0={:e};exponent={:e};\
         stop_offset={:e};lr_divisor={:e};lr_decay={:e};perturb={:e};seed={}",
        config.sigma_sq_opt,
        config.prototypes_per_class,
        config.epochs,
        config.annealing.as_str(),
        config.beta0,
        config.anneal_exponent,
        config.anneal_stop_offset,
        config.lr_numerator_divisor,
        config.lr_decay_base,
        config.init_perturb_scale,
        config.rng_seed,
    );
    hex(&Sha256::digest(canonical.as_bytes()))[..16].to_string()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn model_to_string(file: &ModelFile) -> String {
    let model = &file.model;
    let n = model.dim();
    let (labeled, sigma_sq, tau, priors): (Vec<(ClassId, &SpdMatrix)>, _, _, _) = match model {
        TrainedModel::Plrsq { model: m, .. } => (
            m.prototypes().iter().map(|p| (p.label, &p.matrix)).collect(),
            Some(m.sigma_sq()),
            None,
            Some(m.priors()),
        ),
        TrainedModel::Mdrm(m) => (
            m.class_means()
                .iter()
                .enumerate()
                .map(|(k, x)| (ClassId::from_index(k), x))
                .collect(),
            None,
            None,
            None,
        ),
        TrainedModel::Euclidean(m) => (
            m.prototypes().iter().map(|p| (p.label, &p.matrix)).collect(),
            Some(m.sigma_sq()),
            Some(m.tau()),
            Some(m.priors()),
        ),
    };
    let mut out = format!(
        "{MODEL_MAGIC} {VERSION} method={} n={n} C={} M={}\n",
        model.method(),
        crate::classifier::Classifier::num_classes(model),
        labeled.len()
    );
    if let Some(s) = sigma_sq {
        let _ = writeln!(out, "sigma_sq {}", fmt_f64(s));
    }
    if let Some(t) = tau {
        let _ = writeln!(out, "tau {}", fmt_f64(t));
    }
    if let Some(p) = priors {
        let values: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "priors {}", values.join(" "));
    }
    if let Some(seed) = file.meta.seed {
        let _ = writeln!(out, "seed {seed}");
    }
    if let Some(h) = &file.meta.config_hash {
        let _ = writeln!(out, "config_hash {h}");
    }
    for (label, x) in labeled {
        let _ = writeln!(out, "prototype {label}");
        write_matrix(&mut out, x.matrix());
    }
    let digest = hex(&Sha256::digest(out.as_bytes()));
    let _ = writeln!(out, "checksum {digest}");
    out
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    let body = verify_checksum(text)?;
    let mut r = Reader::new(body);
    let header = r.header(MODEL_MAGIC, "a model")?;
    let method: Method = header
        .get("method")?
        .parse()
        .map_err(|e: Error| header.error(&e.to_string()))?;
    let n = header.usize("n")?;
    let num_classes = header.usize("C")?;
    let count = header.usize("M")?;
    header.done()?;
    if n == 0 || num_classes == 0 || count == 0 {
        return Err(header.error("n, C and M must be positive"));
    }

    let mut sigma_sq = None;
    let mut tau = None;
    let mut priors = None;
    let mut meta = ModelMeta::default();
    loop {
        let Some((offset, line)) = r.peek_line() else {
            return Err(r.eof("prototype"));
        };
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        if key == "prototype" {
            break;
        }
        r.advance();
        let value_offset = offset + key.len() + 1;
        match key {
            "sigma_sq" => sigma_sq = Some(parse_f64(rest.trim(), value_offset)?),
            "tau" => tau = Some(parse_f64(rest.trim(), value_offset)?),
            "priors" => {
                let values = tokens(rest, value_offset)
                    .map(|(o, t)| parse_f64(t, o))
                    .collect::<Result<Vec<_>>>()?;
                if values.len() != count {
                    return Err(Error::Parse {
                        offset: value_offset,
                        message: format!("expected {count} priors, found {}", values.len()),
                    });
                }
                priors = Some(values);
            }
            "seed" => {
                meta.seed = Some(rest.trim().parse().map_err(|_| Error::Parse {
                    offset: value_offset,
                    message: format!("invalid seed '{}'", rest.trim()),
                })?)
            }
            "config_hash" => meta.config_hash = Some(rest.trim().to_string()),
            other => {
                return Err(Error::Parse {
                    offset,
                    message: format!("unknown model field '{other}'"),
                })
            }
        }
    }

    let mut prototypes = Vec::with_capacity(count);
    for i in 0..count {
        let (offset, line) = r.line("prototype")?;
        let label_text = line.strip_prefix("prototype ").ok_or_else(|| Error::Parse {
            offset,
            message: format!("expected 'prototype <label>', found '{line}'"),
        })?;
        let label = parse_label(label_text, offset + "prototype ".len(), num_classes)?;
        let matrix = r.matrix(n)?;
        let x = SpdMatrix::new(matrix).map_err(|e| Error::Parse {
            offset,
            message: format!("prototype {i}: {e}"),
        })?;
        prototypes.push(Prototype { matrix: x, label });
    }
    r.expect_end()?;

    let missing = |field: &str| Error::Parse {
        offset: 0,
        message: format!("{method} model is missing '{field}'"),
    };
    let model = match method {
        Method::PlrsqConst | Method::PlrsqAn => {
            let model = Model::new(
                prototypes,
                sigma_sq.ok_or_else(|| missing("sigma_sq"))?,
                priors.ok_or_else(|| missing("priors"))?,
                num_classes,
            )?;
            TrainedModel::Plrsq { method, model }
        }
        Method::Mdrm => {
            if count != num_classes {
                return Err(missing("one mean per class"));
            }
            for (k, p) in prototypes.iter().enumerate() {
                if p.label.index() != k {
                    return Err(Error::Parse {
                        offset: 0,
                        message: format!("mdrm means must be listed in class order; entry {k} is class {}", p.label),
                    });
                }
            }
            TrainedModel::Mdrm(MdrmModel::from_means(
                prototypes.into_iter().map(|p| p.matrix).collect(),
            )?)
        }
        Method::RslvqEuclidean => {
            let model = EuclideanRslvqModel::new(
                prototypes,
                sigma_sq.ok_or_else(|| missing("sigma_sq"))?,
                tau.ok_or_else(|| missing("tau"))?,
                num_classes,
            )?;
            if let Some(p) = priors {
                if p != model.priors() {
                    return Err(Error::Parse {
                        offset: 0,
                        message: "rslvq-euclidean models use uniform priors".into(),
                    });
                }
            }
            TrainedModel::Euclidean(model)
        }
    };
    Ok(ModelFile { model, meta })
}

/// Returns the text before the checksum line after checking the digest.
fn verify_checksum(text: &str) -> Result<&str> {
    let trimmed = text.trim_end_matches('\n');
    let start = trimmed.rfind('\n').map_or(0, |i| i + 1);
    let last = &trimmed[start..];
    let Some(expected) = last.strip_prefix("checksum ") else {
        return Err(Error::Parse {
            offset: start,
            message: "missing trailing checksum line".into(),
        });
    };
    let body = &text[..start];
    let actual = hex(&Sha256::digest(body.as_bytes()));
    if actual != expected.trim() {
        return Err(Error::Parse {
            offset: start,
            message: format!("checksum mismatch: file says {}, content hashes to {actual}", expected.trim()),
        });
    }
    Ok(body)
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    write_atomic(path, model_to_string(file).as_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    parse_model(&read_text(path)?)
}

fn parse_f64(token: &str, offset: usize) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        offset,
        message: format!("invalid number '{token}'"),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse {
            offset,
            message: format!("non-finite value '{token}'"),
        })
    }
}

fn parse_label(token: &str, offset: usize, num_classes: usize) -> Result<ClassId> {
    let err = || Error::Parse {
        offset,
        message: format!("invalid class label '{token}', expected 1..={num_classes}"),
    };
    let v: u32 = token.trim().parse().map_err(|_| err())?;
    if v == 0 || v as usize > num_classes {
        return Err(err());
    }
    ClassId::new(v).map_err(|_| err())
}

/// Whitespace-separated tokens of `line` with their absolute offsets.
fn tokens(line: &str, base: usize) -> impl Iterator<Item = (usize, &str)> {
    let start = line.as_ptr() as usize;
    line.split_ascii_whitespace()
        .map(move |t| (base + (t.as_ptr() as usize - start), t))
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
}

struct Header<'a> {
    offset: usize,
    fields: Vec<(usize, &'a str, &'a str)>,
    used: std::cell::RefCell<Vec<bool>>,
}

impl<'a> Header<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            offset: self.offset,
            message: message.to_string(),
        }
    }

    fn get(&self, key: &str) -> Result<&'a str> {
        let i = self
            .fields
            .iter()
            .position(|f| f.1 == key)
            .ok_or_else(|| self.error(&format!("header is missing '{key}='")))?;
        self.used.borrow_mut()[i] = true;
        Ok(self.fields[i].2)
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        let offset = self.fields.iter().find(|f| f.1 == key).map_or(self.offset, |f| f.0);
        v.parse().map_err(|_| Error::Parse {
            offset,
            message: format!("invalid value '{v}' for '{key}'"),
        })
    }

    fn done(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.fields.iter().zip(used.iter()).find(|(_, &u)| !u) {
            Some((f, _)) => Err(Error::Parse {
                offset: f.0,
                message: format!("unexpected header field '{}'", f.1),
            }),
            None => Ok(()),
        }
    }
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn eof(&self, expected: &str) -> Error {
        Error::Parse {
            offset: self.text.len(),
            message: format!("unexpected end of file, expected {expected}"),
        }
    }

    fn peek_line(&self) -> Option<(usize, &'a str)> {
        if self.pos >= self.text.len() {
            return None;
        }
        let rest = &self.text[self.pos..];
        let end = rest.find('\n').unwrap_or(rest.len());
        Some((self.pos, rest[..end].trim_end_matches('\r')))
    }

    fn advance(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.find('\n').map_or(rest.len(), |i| i + 1);
    }

    fn line(&mut self, expected: &str) -> Result<(usize, &'a str)> {
        let line = self.peek_line().ok_or_else(|| self.eof(expected))?;
        self.advance();
        Ok(line)
    }

    fn header(&mut self, magic: &str, what: &str) -> Result<Header<'a>> {
        let (offset, line) = self.line("header")?;
        let mut toks = tokens(line, offset);
        match toks.next() {
            Some((_, m)) if m == magic => {}
            _ => {
                return Err(Error::Parse {
                    offset,
                    message: format!("not {what} file: header must start with '{magic}'"),
                })
            }
        }
        match toks.next() {
            Some((_, v)) if v == VERSION => {}
            Some((o, v)) => {
                return Err(Error::Parse {
                    offset: o,
                    message: format!("unsupported version '{v}', this build reads {VERSION}"),
                })
            }
            None => return Err(self.eof("version")),
        }
        let mut fields = Vec::new();
        for (o, t) in toks {
            let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
                offset: o,
                message: format!("expected key=value, found '{t}'"),
            })?;
            fields.push((o, k, v));
        }
        let used = std::cell::RefCell::new(vec![false; fields.len()]);
        Ok(Header { offset, fields, used })
    }

    fn label_line(&mut self, expected: &str, num_classes: usize) -> Result<(usize, ClassId)> {
        let (offset, line) = self.line(expected)?;
        Ok((offset, parse_label(line, offset, num_classes)?))
    }

    fn matrix(&mut self, n: usize) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let (offset, line) = self.line("matrix row")?;
            let mut count = 0;
            for (o, t) in tokens(line, offset) {
                if count == n {
                    return Err(Error::Parse {
                        offset: o,
                        message: format!("row has more than {n} values"),
                    });
                }
                m[(i, count)] = parse_f64(t, o)?;
                count += 1;
            }
            if count != n {
                return Err(Error::Parse {
                    offset,
                    message: format!("expected {n} values in row, found {count}"),
                });
            }
        }
        Ok(m)
    }

    fn expect_end(&mut self) -> Result<()> {
        while let Some((offset, line)) = self.peek_line() {
            if !line.trim().is_empty() {
                return Err(Error::Parse {
                    offset,
                    message: "unexpected content after the last record".into(),
                });
            }
            self.advance();
        }
        Ok(())
    }
}
