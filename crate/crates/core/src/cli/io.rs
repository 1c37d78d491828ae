//! System files, attack/trajectory CSV and report serialization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::SignalWindow;
use crate::lti::{GeneralizedPlant, Matrix, StateSpaceModel};
use crate::vulnerability::RationalTransfer;

/// Nested row-major numeric array; `[]` stands for any matrix with a zero dimension.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantBlocks {
    pub a: Rows,
    pub b_d: Rows,
    pub b_u: Rows,
    pub c_z: Rows,
    pub c_y: Rows,
    pub d_zd: Rows,
    pub d_zu: Rows,
    pub d_yd: Rows,
    pub d_yu: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerBlocks {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    pub d: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferForm {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantBlocks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerBlocks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferForm>,
}

/// A system file read from disk with the raw bytes kept for digests.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub file: SystemFile,
    pub bytes: Vec<u8>,
}

fn shape_of(rows: &Rows) -> (usize, usize) {
    (rows.len(), rows.first().map_or(0, |r| r.len()))
}

fn matrix(field: &str, rows: &Rows, expect: (usize, usize)) -> Result<Matrix> {
    let (r, c) = expect;
    if rows.is_empty() {
        if r == 0 || c == 0 {
            return Ok(Matrix::zeros(r, c));
        }
        return Err(Error::Dimension(format!("{field} is empty but must be {r}x{c}")));
    }
    if rows.iter().any(|row| row.len() != rows[0].len()) {
        return Err(Error::Dimension(format!("{field} has rows of unequal length")));
    }
    if shape_of(rows) != expect && !(r == 0 || c == 0) {
        let (gr, gc) = shape_of(rows);
        return Err(Error::Dimension(format!("{field} is {gr}x{gc}, expected {r}x{c}")));
    }
    if r == 0 || c == 0 {
        return Ok(Matrix::zeros(r, c));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl PlantBlocks {
    /// Block sizes come from the widest of the blocks sharing a dimension, the state size from `a`.
    pub fn to_plant(&self) -> Result<GeneralizedPlant> {
        let n = self.a.len();
        let cols = |m: &Rows| shape_of(m).1;
        let m_d = cols(&self.d_zd).max(cols(&self.d_yd)).max(cols(&self.b_d));
        let m_u = cols(&self.d_zu).max(cols(&self.d_yu)).max(cols(&self.b_u));
        let p_z = self.d_zd.len().max(self.d_zu.len()).max(self.c_z.len());
        let p_y = self.d_yd.len().max(self.d_yu.len()).max(self.c_y.len());
        GeneralizedPlant::from_blocks(
            matrix("plant.a", &self.a, (n, n))?,
            matrix("plant.b_d", &self.b_d, (n, m_d))?,
            matrix("plant.b_u", &self.b_u, (n, m_u))?,
            matrix("plant.c_z", &self.c_z, (p_z, n))?,
            matrix("plant.c_y", &self.c_y, (p_y, n))?,
            matrix("plant.d_zd", &self.d_zd, (p_z, m_d))?,
            matrix("plant.d_zu", &self.d_zu, (p_z, m_u))?,
            matrix("plant.d_yd", &self.d_yd, (p_y, m_d))?,
            matrix("plant.d_yu", &self.d_yu, (p_y, m_u))?,
        )
    }
}

impl ControllerBlocks {
    /// Controller mapping `p_y` measurements to `m_u` controls.
    pub fn to_model(&self, p_y: usize, m_u: usize) -> Result<StateSpaceModel> {
        let n = self.a.len();
        StateSpaceModel::new(
            matrix("controller.a", &self.a, (n, n))?,
            matrix("controller.b", &self.b, (n, p_y))?,
            matrix("controller.c", &self.c, (m_u, n))?,
            matrix("controller.d", &self.d, (m_u, p_y))?,
        )
    }
}

fn rows_of(m: &Matrix) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl SystemFile {
    pub fn from_plant(name: &str, plant: &GeneralizedPlant, controller: Option<&StateSpaceModel>) -> Self {
        let md = plant.model();
        let (m_d, p_z) = (plant.m_d(), plant.p_z());
        let b = md.b();
        let c = md.c();
        let d = md.d();
        let plant = PlantBlocks {
            a: rows_of(md.a()),
            b_d: rows_of(&b.columns(0, m_d).into_owned()),
            b_u: rows_of(&b.columns(m_d, plant.m_u()).into_owned()),
            c_z: rows_of(&c.rows(0, p_z).into_owned()),
            c_y: rows_of(&c.rows(p_z, plant.p_y()).into_owned()),
            d_zd: rows_of(&d.view((0, 0), (p_z, m_d)).into_owned()),
            d_zu: rows_of(&d.view((0, m_d), (p_z, plant.m_u())).into_owned()),
            d_yd: rows_of(&d.view((p_z, 0), (plant.p_y(), m_d)).into_owned()),
            d_yu: rows_of(&d.view((p_z, m_d), (plant.p_y(), plant.m_u())).into_owned()),
        };
        SystemFile {
            name: name.to_string(),
            plant: Some(plant),
            controller: controller.map(|k| ControllerBlocks {
                a: rows_of(k.a()),
                b: rows_of(k.b()),
                c: rows_of(k.c()),
                d: rows_of(k.d()),
            }),
            transfer: None,
        }
    }

    pub fn plant(&self) -> Result<GeneralizedPlant> {
        self.plant
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("system file has no plant section".into()))?
            .to_plant()
    }

    pub fn controller(&self, plant: &GeneralizedPlant) -> Result<Option<StateSpaceModel>> {
        self.controller
            .as_ref()
            .map(|k| k.to_model(plant.p_y(), plant.m_u()))
            .transpose()
    }

    /// The explicit transfer form, or `G_yu` of a SISO plant.
    pub fn transfer(&self) -> Result<RationalTransfer> {
        if let Some(t) = &self.transfer {
            return RationalTransfer::new(&t.num, &t.den);
        }
        let plant = self.plant()?;
        RationalTransfer::from_state_space(&plant.g_yu())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

pub fn parse_system(text: &str, path: &str) -> std::result::Result<SystemFile, LoadError> {
    serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        LoadError::Syntax {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: full.strip_suffix(&suffix).unwrap_or(&full).to_string(),
        }
    })
}

pub fn load_system(path: &Path) -> std::result::Result<LoadedSystem, LoadError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
        path: shown.clone(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let file = parse_system(&text, &shown)?;
    Ok(LoadedSystem { file, bytes })
}

/// Exactly 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Header `k,d_1..,z_1..,psi_1..` and one row per sample; absent groups are skipped.
pub fn write_trajectory_csv(
    path: &Path,
    d: &SignalWindow,
    z: Option<&SignalWindow>,
    psi: Option<&SignalWindow>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = vec!["k".to_string()];
    header.extend((1..=d.width()).map(|i| format!("d_{i}")));
    if let Some(z) = z {
        header.extend((1..=z.width()).map(|i| format!("z_{i}")));
    }
    if let Some(p) = psi {
        header.extend((1..=p.width()).map(|i| format!("psi_{i}")));
    }
    w.write_record(&header).map_err(csv_error)?;
    for k in 0..d.len() {
        let mut rec = vec![k.to_string()];
        rec.extend(d.sample(k).iter().map(|v| fmt_f64(*v)));
        for s in [z, psi].into_iter().flatten() {
            if k < s.len() {
                rec.extend(s.sample(k).iter().map(|v| fmt_f64(*v)));
            } else {
                rec.extend(std::iter::repeat("0".to_string()).take(s.width()));
            }
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// The `d_*` columns of an attack CSV; other columns are ignored.
pub fn read_attack_csv(path: &Path) -> Result<SignalWindow> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?.clone();
    let cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.trim().starts_with("d_"))
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no d_* columns in header", path.display())));
    }
    let mut samples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let mut row = Vec::with_capacity(cols.len());
        for &c in &cols {
            let cell = rec.get(c).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| {
                Error::InvalidArgument(format!("{}: row {}: cannot parse {cell:?}", path.display(), line + 2))
            })?;
            row.push(v);
        }
        samples.push(row);
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no data rows", path.display())));
    }
    SignalWindow::from_samples(cols.len(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
      "name": "toy",
      "plant": {
        "a": [[0.5]], "b_d": [[1.0]], "b_u": [[0.0]],
        "c_z": [[1.0]], "c_y": [[1.0]],
        "d_zd": [[0.0]], "d_zu": [[0.0]], "d_yd": [[0.0]], "d_yu": [[0.0]]
      },
      "controller": { "a": [], "b": [], "c": [], "d": [[-0.2]] }
    }"#;

    #[test]
    fn parses_plant_and_static_controller() {
        let f = parse_system(EXAMPLE, "toy.json").unwrap();
        let p = f.plant().unwrap();
        assert_eq!((p.m_d(), p.m_u(), p.p_z(), p.p_y()), (1, 1, 1, 1));
        let k = f.controller(&p).unwrap().unwrap();
        assert_eq!(k.states(), 0);
        assert_eq!(k.d()[(0, 0)], -0.2);
        let back = SystemFile::from_plant("toy", &p, Some(&k));
        assert_eq!(back.plant, f.plant);
    }

    #[test]
    fn static_plant_with_empty_state_blocks() {
        let text = r#"{"plant": {"a": [], "b_d": [], "b_u": [], "c_z": [], "c_y": [],
            "d_zd": [[1, 0]], "d_zu": [[1]], "d_yd": [[1, 0], [0, 1]], "d_yu": [[0], [0]]}}"#;
        let p = parse_system(text, "s").unwrap().plant().unwrap();
        assert_eq!((p.m_d(), p.m_u(), p.p_z(), p.p_y(), p.model().states()), (2, 1, 1, 2, 0));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_system("{\n  \"name\": 3,\n}", "bad.json") {
            Err(LoadError::Syntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
        let f = parse_system(r#"{"plant": {"a": [[1, 2]], "b_d": [[1]], "b_u": [[1]], "c_z": [[1]], "c_y": [[1]],
            "d_zd": [[0]], "d_zu": [[0]], "d_yd": [[0]], "d_yu": [[0]]}}"#, "x").unwrap();
        assert!(matches!(f.plant(), Err(Error::Dimension(_))));
    }

    #[test]
    fn transfer_from_plant_or_explicit() {
        let t = parse_system(r#"{"transfer": {"num": [1, -2], "den": [1, -0.5, 0]}}"#, "t")
            .unwrap()
            .transfer()
            .unwrap();
        assert_eq!(t.num(), &[1.0, -2.0]);
        assert!(parse_system(EXAMPLE, "toy").unwrap().transfer().is_ok());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let d = SignalWindow::from_samples(2, vec![vec![0.1, -1.0 / 3.0], vec![2.0, 0.0]]).unwrap();
        let z = SignalWindow::scalar(&[1.0, 2.0]).unwrap();
        write_trajectory_csv(&path, &d, Some(&z), None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,d_1,d_2,z_1\n0,1.0000000000000001e-1,-3.3333333333333331e-1,"));
        assert_eq!(read_attack_csv(&path).unwrap(), d);
    }
}
