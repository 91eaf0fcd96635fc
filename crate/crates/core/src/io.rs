//! JSON descriptors for elements and operators, shared by the CLI and the gallery.
//!
//! Matrices are lists of rows; an entry is either a real number or a `[re, im]`
//! pair. Operators are described by the recipe that built them:
//!
//! ```json
//! { "kind": "conjugation", "r": [[[1, 1], [0, -1]]] }
//! ```

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgElement, FiniteVNA};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::operator::{JordanMap, LpOperator, StructuredForm, DEFAULT_JORDAN_TOL};
use crate::Complex64;

/// Bumped whenever a report or descriptor changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> Result<Complex64> {
        let z = match self {
            Entry::Real(re) => Complex64::new(re, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        };
        if z.re.is_finite() && z.im.is_finite() {
            Ok(z)
        } else {
            Err(Error::Parse("matrix entries must be finite".into()))
        }
    }

    fn from_value(z: Complex64) -> Self {
        if z.im == 0.0 {
            Entry::Real(z.re)
        } else {
            Entry::Complex([z.re, z.im])
        }
    }
}

/// Row-major complex matrix.
pub type MatrixDesc = Vec<Vec<Entry>>;

pub fn matrix_to_desc(m: &CMat) -> MatrixDesc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Entry::from_value(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_desc(rows: &MatrixDesc) -> Result<CMat> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix".into()));
    }
    let mut out = CMat::zeros(n, cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            out[(i, j)] = e.value()?;
        }
    }
    Ok(out)
}

fn square_from_desc(rows: &MatrixDesc) -> Result<CMat> {
    let m = matrix_from_desc(rows)?;
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!("{}×{} matrix is not square", m.nrows(), m.ncols())));
    }
    Ok(m)
}

/// One matrix per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementDesc(pub Vec<MatrixDesc>);

impl ElementDesc {
    pub fn from_element(x: &AlgElement) -> Self {
        Self(x.blocks().iter().map(matrix_to_desc).collect())
    }

    pub fn to_element(&self, m: &FiniteVNA) -> Result<AlgElement> {
        let blocks = self.0.iter().map(square_from_desc).collect::<Result<Vec<_>>>()?;
        m.element(blocks)
    }
}

impl Serialize for AlgElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementDesc::from_element(self).serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorDesc {
    Identity,
    /// `x ↦ Σ a_i* x b_i`.
    Kraus { a: Vec<ElementDesc>, b: Vec<ElementDesc> },
    /// `x ↦ r x r*`.
    Conjugation { r: ElementDesc },
    /// Blockwise entrywise product with `m`.
    Schur { m: ElementDesc },
    /// `x ↦ w b J(x)` with `J` given as a dense matrix.
    Wbj { w: ElementDesc, b: ElementDesc, j: MatrixDesc },
    /// Dense `D×D` matrix in the matrix-unit basis.
    Dense { matrix: MatrixDesc },
}

impl OperatorDesc {
    /// Describes `t` by its structured recipe when it has one, densely otherwise.
    pub fn from_operator(t: &LpOperator) -> Self {
        match t.form() {
            StructuredForm::Kraus { a, b } => OperatorDesc::Kraus {
                a: a.iter().map(ElementDesc::from_element).collect(),
                b: b.iter().map(ElementDesc::from_element).collect(),
            },
            StructuredForm::Conjugation { r } => OperatorDesc::Conjugation {
                r: ElementDesc::from_element(r),
            },
            StructuredForm::Schur { m } => OperatorDesc::Schur {
                m: ElementDesc::from_element(m),
            },
            StructuredForm::WbJ { w, b, j } => OperatorDesc::Wbj {
                w: ElementDesc::from_element(w),
                b: ElementDesc::from_element(b),
                j: matrix_to_desc(j.matrix()),
            },
            StructuredForm::Generic => OperatorDesc::Dense {
                matrix: matrix_to_desc(t.matrix()),
            },
        }
    }

    pub fn to_operator(&self, m: &FiniteVNA) -> Result<LpOperator> {
        let elems = |v: &[ElementDesc]| v.iter().map(|e| e.to_element(m)).collect::<Result<Vec<_>>>();
        match self {
            OperatorDesc::Identity => Ok(LpOperator::identity(m)),
            OperatorDesc::Kraus { a, b } => LpOperator::kraus(m, elems(a)?, elems(b)?),
            OperatorDesc::Conjugation { r } => LpOperator::conjugation(m, r.to_element(m)?),
            OperatorDesc::Schur { m: s } => LpOperator::schur(m, s.to_element(m)?),
            OperatorDesc::Wbj { w, b, j } => {
                let j = JordanMap::new(m, square_from_desc(j)?, DEFAULT_JORDAN_TOL)?;
                LpOperator::from_wbj(w.to_element(m)?, b.to_element(m)?, j)
            }
            OperatorDesc::Dense { matrix } => LpOperator::from_dense(m, square_from_desc(matrix)?),
        }
    }
}

impl Serialize for LpOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorDesc::from_operator(self).serialize(s)
    }
}

/// An operator together with the algebra it acts on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorFile {
    pub algebra: FiniteVNA,
    pub operator: OperatorDesc,
}

impl OperatorFile {
    pub fn parse(text: &str) -> Result<(FiniteVNA, LpOperator)> {
        let f: OperatorFile = serde_json::from_str(text)?;
        let t = f.operator.to_operator(&f.algebra)?;
        Ok((f.algebra, t))
    }
}

/// A list of elements together with the algebra they live in.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementsFile {
    pub algebra: FiniteVNA,
    pub elements: Vec<ElementDesc>,
}

impl ElementsFile {
    pub fn parse(text: &str) -> Result<(FiniteVNA, Vec<AlgElement>)> {
        let f: ElementsFile = serde_json::from_str(text)?;
        let xs = f
            .elements
            .iter()
            .map(|e| e.to_element(&f.algebra))
            .collect::<Result<Vec<_>>>()?;
        Ok((f.algebra, xs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_element, rng};

    #[test]
    fn element_roundtrip() {
        let m = FiniteVNA::from_dims(&[2, 1]).unwrap();
        let x = random_element(&mut rng(1), &m);
        let text = serde_json::to_string(&x).unwrap();
        let back: ElementDesc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_element(&m).unwrap(), x);
    }

    #[test]
    fn operator_roundtrip_keeps_form() {
        let text = r#"{"algebra": {"blocks": [{"dim": 2, "weight": 1.0}]},
                       "operator": {"kind": "conjugation", "r": [[[1, 1], [0, -1]]]}}"#;
        let (m, t) = OperatorFile::parse(text).unwrap();
        assert!(matches!(t.form(), StructuredForm::Conjugation { .. }));
        let again = OperatorDesc::from_operator(&t).to_operator(&m).unwrap();
        assert_eq!(again.matrix(), t.matrix());
        let dense = OperatorDesc::Dense { matrix: matrix_to_desc(t.matrix()) };
        assert_eq!(dense.to_operator(&m).unwrap().matrix(), t.matrix());
    }

    #[test]
    fn complex_entries_parse() {
        let text = r#"{"algebra": {"blocks": [{"dim": 1, "weight": 2.0}]},
                       "elements": [[[[[0.5, -1.5]]]], [[[3]]]]}"#;
        let (_, xs) = ElementsFile::parse(text).unwrap();
        assert_eq!(xs[0].block(0)[(0, 0)], Complex64::new(0.5, -1.5));
        assert_eq!(xs[1].block(0)[(0, 0)], Complex64::new(3.0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        let m = FiniteVNA::matrix(2);
        let ragged = ElementDesc(vec![vec![vec![Entry::Real(1.0)], vec![Entry::Real(0.0), Entry::Real(1.0)]]]);
        assert!(matches!(ragged.to_element(&m), Err(Error::Parse(_))));
        let rect = ElementDesc(vec![vec![vec![Entry::Real(1.0), Entry::Real(0.0)]]]);
        assert!(matches!(rect.to_element(&m), Err(Error::Shape(_))));
        let nan = ElementDesc(vec![vec![vec![Entry::Real(f64::NAN)]]]);
        assert!(nan.to_element(&FiniteVNA::matrix(1)).is_err());
        assert!(serde_json::from_str::<FiniteVNA>(r#"{"blocks": [{"dim": 0, "weight": 1.0}]}"#).is_err());
        assert!(OperatorFile::parse(r#"{"algebra": {"blocks": [{"dim": 1, "weight": 1.0}]}, "operator": {"kind": "nope"}}"#).is_err());
    }
}
