//! Test matrices: exact families and literature values printed to four
//! decimals.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kummer::TrisecantTriple;
use crate::linalg::{CMatrix, CVector};
use crate::matrix::RiemannMatrix;
use crate::{C64, I, TAU};

/// Accuracy attached to values printed with four decimals.
pub const PRINTED_ACCURACY: f64 = 5e-5;
/// Accuracy attached to matrices built from closed formulas.
pub const EXACT_ACCURACY: f64 = 1e-15;

pub const EMBEDDED_NAMES: [&str; 4] = ["bring", "bring_abelmap", "fermat5", "fricke_macbeath"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ExactFormula,
    PrintedPaper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub name: String,
    pub genus: usize,
    pub source: Source,
    pub stated_accuracy: f64,
    pub matrix: RiemannMatrix,
    /// Abel-map images, for `bring_abelmap` only.
    pub columns: Option<Vec<CVector>>,
}

const BRING: &str = "
  -0.5000 + 0.8685i  -0.0000 + 0.0649i  -0.5000 - 0.2678i   0.5000 - 0.2678i
   0.0000 + 0.0649i  -0.5000 + 0.8685i   0.5000 + 0.2678i  -0.5000 + 0.2678i
  -0.5000 - 0.2678i   0.5000 + 0.2678i  -0.0000 + 1.0714i   0.5000 - 0.2678i
   0.5000 - 0.2678i  -0.5000 + 0.2678i   0.5000 - 0.2678i  -0.5000 + 0.8685i
";

const BRING_ABEL_MAP: &str = "
  -0.7052 + 0.3692i   0.0545 + 0.0278i   0.0293 + 0.0775i  -0.0607 + 0.1180i
   0.1286 - 0.2662i   0.2747 + 0.2456i  -0.4068 + 0.4113i   0.0318 + 0.2067i
  -0.4351 + 0.2906i  -0.2108 + 0.0422i   0.0250 + 0.2906i   0.0823 - 0.2451i
   0.4519 - 0.6915i   0.0718 + 0.0915i  -0.0126 - 0.0140i   0.0487 + 0.0493i
";

const FERMAT: [&str; 2] = [
    "
  -0.3735 + 0.9276i  -0.3574 + 0.4580i  -0.4578 + 0.3092i  -0.2891 + 0.3705i
  -0.3574 + 0.4580i   0.1365 + 1.0006i  -0.0161 + 0.4697i   0.1104 - 0.1415i
  -0.4578 + 0.3092i  -0.0161 + 0.4697i   0.3474 + 1.0079i  -0.2630 - 0.3894i
  -0.2891 + 0.3705i   0.1104 - 0.1415i  -0.2630 - 0.3894i  -0.3152 + 1.1305i
   0.0905 + 0.4390i  -0.4616 + 0.4201i   0.3635 + 0.5382i  -0.3735 - 0.2479i
  -0.4417 - 0.1605i  -0.3313 - 0.3020i   0.2891 - 0.3705i  -0.1725 + 0.0496i
",
    "
   0.0905 + 0.4390i  -0.4417 - 0.1605i
  -0.4616 + 0.4201i  -0.3313 - 0.3020i
   0.3635 + 0.5382i   0.2891 - 0.3705i
  -0.3735 - 0.2479i  -0.1725 + 0.0496i
  -0.4839 + 1.0692i  -0.3796 - 0.0685i
  -0.3796 - 0.0685i  -0.4095 + 0.8023i
",
];

const FRICKE_MACBEATH: [&str; 2] = [
    "
   0.3967 + 1.0211i   0.0615 - 0.1322i   0.0000 - 0.0000i   0.4609 + 0.2609i
   0.0615 - 0.1322i   0.3967 + 1.0211i  -0.3553 + 0.5828i   0.3386 - 0.1933i
   0.0000 - 0.0000i  -0.3553 + 0.5828i   0.2894 + 1.1656i   0.0905 + 0.2450i
   0.4609 + 0.2609i   0.3386 - 0.1933i   0.0905 + 0.2450i   0.3967 + 1.0211i
  -0.3553 + 0.5828i  -0.4776 + 0.1287i  -0.4776 + 0.1287i  -0.4776 + 0.1287i
  -0.1838 - 0.3219i  -0.2743 - 0.5669i   0.3871 - 0.3736i   0.0167 - 0.3895i
   0.3386 - 0.1933i   0.3386 - 0.1933i  -0.1223 - 0.4541i   0.0615 - 0.1322i
",
    "
  -0.3553 + 0.5828i  -0.1838 - 0.3219i   0.3386 - 0.1933i
  -0.4776 + 0.1287i  -0.2743 - 0.5669i   0.3386 - 0.1933i
  -0.4776 + 0.1287i   0.3871 - 0.3736i  -0.1223 - 0.4541i
  -0.4776 + 0.1287i   0.0167 - 0.3895i   0.0615 - 0.1322i
   0.2894 + 1.1656i  -0.1671 - 0.7115i   0.0905 + 0.2450i
  -0.1671 - 0.7115i   0.4414 + 1.2784i  -0.3386 + 0.1933i
   0.0905 + 0.2450i  -0.3386 + 0.1933i   0.3967 + 1.0211i
",
];

/// Parses a printed complex block, `a + bi` per entry, one row per line.
fn parse_block(text: &str) -> Result<Vec<Vec<C64>>> {
    let bad = |t: &str| Error::MalformedFile(format!("bad printed entry near {t:?}"));
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() % 3 != 0 {
                return Err(bad(line));
            }
            toks.chunks(3)
                .map(|t| {
                    let re: f64 = t[0].parse().map_err(|_| bad(t[0]))?;
                    let im: f64 = t[2].trim_end_matches('i').parse().map_err(|_| bad(t[2]))?;
                    match t[1] {
                        "+" => Ok(C64::new(re, im)),
                        "-" => Ok(C64::new(re, -im)),
                        _ => Err(bad(t[1])),
                    }
                })
                .collect()
        })
        .collect()
}

/// Joins column blocks printed one after the other.
fn parse_blocks(blocks: &[&str]) -> Result<CMatrix> {
    let parsed: Vec<Vec<Vec<C64>>> = blocks.iter().map(|b| parse_block(b)).collect::<Result<_>>()?;
    let rows = parsed[0].len();
    let mut out: Vec<Vec<C64>> = vec![Vec::new(); rows];
    for block in parsed {
        if block.len() != rows {
            return Err(Error::MalformedFile("column blocks differ in height".into()));
        }
        for (r, row) in block.into_iter().enumerate() {
            out[r].extend(row);
        }
    }
    let cols = out[0].len();
    if out.iter().any(|r| r.len() != cols) {
        return Err(Error::MalformedFile("ragged printed matrix".into()));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| out[i][j]))
}

fn printed(name: &str, blocks: &[&str]) -> Result<MatrixRecord> {
    let matrix = RiemannMatrix::new(parse_blocks(blocks)?)?;
    Ok(MatrixRecord {
        name: name.into(),
        genus: matrix.genus(),
        source: Source::PrintedPaper,
        stated_accuracy: PRINTED_ACCURACY,
        matrix,
        columns: None,
    })
}

/// Printed literature matrices by name.
pub fn embedded(name: &str) -> Result<MatrixRecord> {
    match name {
        "bring" => printed("bring", &[BRING]),
        "bring_abelmap" => {
            let mut rec = printed("bring_abelmap", &[BRING])?;
            let m = parse_blocks(&[BRING_ABEL_MAP])?;
            rec.columns = Some((0..4).map(|j| m.column(j).into_owned()).collect());
            Ok(rec)
        }
        "fermat5" => printed("fermat5", &FERMAT),
        "fricke_macbeath" => printed("fricke_macbeath", &FRICKE_MACBEATH),
        other => Err(Error::UnknownName(other.into())),
    }
}

/// The Abel-map columns `α1..α4` combined into
/// `X = (α3+α4−α1−α2)/2`, `Y = (α1+α4−α2−α3)/2`, `Z = (α1+α3−α2−α4)/2`.
pub fn bring_abel_triple() -> Result<TrisecantTriple> {
    let rec = embedded("bring_abelmap")?;
    let a = rec.columns.expect("abel map record carries columns");
    let h = C64::new(0.5, 0.0);
    Ok(TrisecantTriple {
        x: (&a[2] + &a[3] - &a[0] - &a[1]) * h,
        y: (&a[0] + &a[3] - &a[1] - &a[2]) * h,
        z: (&a[0] + &a[2] - &a[1] - &a[3]) * h,
    })
}

/// The genus-4 family `Rm_τ` as `−A^{-1} B` from the block `(A | B)` with
/// `ζ = e^{2πi/12}`.
pub fn genus4_family(tau: C64) -> Result<RiemannMatrix> {
    if !(tau.im > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let z = (I * TAU / 12.0).exp();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let (z2, z3) = (z * z, z * z * z);
    let rows: [[C64; 8]; 4] = [
        [tau, tau, zero, -tau - 1.0, one, one, zero, -one],
        [z2 - 1.0, one, -z2 + 1.0, one, one, -z2, z2, -z2 + 1.0],
        [
            z3 - z,
            -z3,
            -z3 * 2.0 + z2 * 2.0 + z - 1.0,
            z2 - z,
            one,
            z2 - 1.0,
            z3 - z2 - z * 2.0 + 2.0,
            z2,
        ],
        [
            -z3 + z,
            z3,
            z3 * 2.0 + z2 * 2.0 - z - 1.0,
            z2 + z,
            one,
            z2 - 1.0,
            -z3 - z2 + z * 2.0 + 2.0,
            z2,
        ],
    ];
    let a = CMatrix::from_fn(4, 4, |i, j| rows[i][j]);
    let b = CMatrix::from_fn(4, 4, |i, j| rows[i][j + 4]);
    let lu = a.lu();
    if lu.determinant().norm() < 1e-12 {
        return Err(Error::SingularA);
    }
    let sol = lu.solve(&b).ok_or(Error::SingularA)?;
    RiemannMatrix::symmetrized(-sol)
}

/// Period matrix of `y² = x^{2g+1} − 1` from the chain of cycles around
/// consecutive branch points, `A_{ki} = Σ_{l<i} ζ^{2lk}`,
/// `B_{ki} = ζ^{(2i−1)k}` with `ζ = e^{2πi/(2g+1)}`.
pub fn hyperelliptic_period_matrix(g: usize) -> Result<RiemannMatrix> {
    if g == 0 {
        return Err(Error::InvalidConfig("genus must be positive".into()));
    }
    let n = (2 * g + 1) as f64;
    let zeta = |e: usize| (I * TAU * (e % (2 * g + 1)) as f64 / n).exp();
    let a = CMatrix::from_fn(g, g, |k, i| (0..=i).map(|l| zeta(2 * l * (k + 1))).sum());
    let b = CMatrix::from_fn(g, g, |k, i| zeta((2 * i + 1) * (k + 1)));
    let omega = a.lu().solve(&b).ok_or(Error::SingularA)?;
    RiemannMatrix::symmetrized(omega.clone()).or_else(|_| RiemannMatrix::symmetrized(-omega))
}

/// Default weights `[2, 3, …, g+1]`; genus 4 gives `[2, 3, 5, 7]`.
pub fn default_weights(g: usize) -> Vec<f64> {
    if g == 4 {
        vec![2.0, 3.0, 5.0, 7.0]
    } else {
        (2..g + 2).map(|w| w as f64).collect()
    }
}

/// `B + s·diag(weights)`.
pub fn diagonal_perturbation(
    b: &RiemannMatrix,
    s: f64,
    weights: Option<&[f64]>,
) -> Result<RiemannMatrix> {
    let g = b.genus();
    let w = weights.map(|w| w.to_vec()).unwrap_or_else(|| default_weights(g));
    if w.len() != g {
        return Err(Error::DimensionMismatch {
            expected: g,
            got: w.len(),
        });
    }
    let mut m = b.matrix().clone();
    for i in 0..g {
        m[(i, i)] += s * w[i];
    }
    RiemannMatrix::new(m)
}

/// `M_{jk} = (j+k)/5` with one-based indices.
pub fn symmetric_perturbation_matrix(g: usize) -> DMatrix<f64> {
    DMatrix::from_fn(g, g, |j, k| (j + k + 2) as f64 / 5.0)
}

/// `B + s(M + iM)`.
pub fn symmetric_perturbation(b: &RiemannMatrix, s: f64) -> Result<RiemannMatrix> {
    let m = symmetric_perturbation_matrix(b.genus());
    RiemannMatrix::new(b.matrix() + m.map(|x| C64::new(s * x, s * x)))
}

/// Named generators used by the CLI: `rm_tau` (parameter `tau`),
/// `hyperelliptic<g>`, and the embedded names.
pub fn by_name(name: &str, tau: C64) -> Result<MatrixRecord> {
    if name == "rm_tau" {
        let matrix = genus4_family(tau)?;
        return Ok(MatrixRecord {
            name: name.into(),
            genus: 4,
            source: Source::ExactFormula,
            stated_accuracy: EXACT_ACCURACY,
            matrix,
            columns: None,
        });
    }
    if let Some(g) = name.strip_prefix("hyperelliptic") {
        let g: usize = g
            .trim_start_matches('_')
            .parse()
            .map_err(|_| Error::UnknownName(name.into()))?;
        let matrix = hyperelliptic_period_matrix(g)?;
        return Ok(MatrixRecord {
            name: name.into(),
            genus: g,
            source: Source::ExactFormula,
            stated_accuracy: EXACT_ACCURACY,
            matrix,
            columns: None,
        });
    }
    embedded(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_matrices_validate() {
        assert_eq!(embedded("bring").unwrap().genus, 4);
        assert_eq!(embedded("fermat5").unwrap().genus, 6);
        let fm = embedded("fricke_macbeath").unwrap();
        assert_eq!(fm.genus, 7);
        assert_eq!(fm.stated_accuracy, PRINTED_ACCURACY);
        assert_eq!(fm.source, Source::PrintedPaper);
        assert!(matches!(embedded("klein"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn printed_values_are_verbatim() {
        let b = embedded("bring").unwrap().matrix;
        assert_eq!(b.matrix()[(2, 2)], C64::new(-0.0, 1.0714));
        assert_eq!(b.matrix()[(0, 3)], C64::new(0.5, -0.2678));
        let fm = embedded("fricke_macbeath").unwrap().matrix;
        assert_eq!(fm.matrix()[(5, 5)], C64::new(0.4414, 1.2784));
        let cols = embedded("bring_abelmap").unwrap().columns.unwrap();
        assert_eq!(cols[3][0], C64::new(-0.0607, 0.1180));
    }

    #[test]
    fn family_inverts_its_a_block() {
        for x in [0.0, 0.25, 0.5, 1.0] {
            let b = genus4_family(C64::new(x, 1.0)).unwrap();
            assert_eq!(b.genus(), 4);
        }
        assert!(genus4_family(C64::new(1.0, -1.0)).is_err());
    }

    #[test]
    fn hyperelliptic_matrices_validate() {
        for g in 1..=7 {
            let b = hyperelliptic_period_matrix(g).unwrap();
            assert_eq!(b.genus(), g);
        }
        // genus one is y² = x³ − 1, whose reduced modulus is a primitive cube root of unity
        let b = hyperelliptic_period_matrix(1).unwrap();
        let (r, _) = crate::siegel::siegel_reduce(&b).unwrap();
        let t = r.matrix()[(0, 0)];
        assert!((t.re.abs() - 0.5).abs() < 1e-12 && (t.im - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn perturbations() {
        let b = genus4_family(C64::new(1.0, 1.0)).unwrap();
        assert_eq!(diagonal_perturbation(&b, 0.0, None).unwrap(), b);
        assert_eq!(symmetric_perturbation(&b, 0.0).unwrap(), b);
        let p = diagonal_perturbation(&b, 0.01, None).unwrap();
        assert!((p.matrix()[(3, 3)] - b.matrix()[(3, 3)] - 0.07).norm() < 1e-15);
        let m = symmetric_perturbation_matrix(4);
        assert_eq!(m[(0, 0)], 0.4);
        assert_eq!(m[(3, 2)], 1.4);
        assert!(diagonal_perturbation(&b, 0.1, Some(&[1.0, 2.0])).is_err());
        assert_eq!(default_weights(5), vec![2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn exact_matrices_are_reproducible() {
        let a = genus4_family(C64::new(1.0, 1.0)).unwrap();
        let b = genus4_family(C64::new(1.0, 1.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(hyperelliptic_period_matrix(5).unwrap(), hyperelliptic_period_matrix(5).unwrap());
    }
}
