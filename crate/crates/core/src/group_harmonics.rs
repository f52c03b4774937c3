//! Finite Abelian groups `Z_{m_1} × … × Z_{m_t}`, their characters and the
//! Cayley matrices they diagonalize.
//!
//! Elements and characters are both enumerated lexicographically on their
//! coordinate tuples (last coordinate fastest), so the identity element and
//! the trivial character always come first.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A finite Abelian group written as a product of cyclic factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbelianGroup {
    factor_orders: Vec<usize>,
    order: usize,
}

/// Group element as a tuple of residues, one per cyclic factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement(pub Vec<usize>);

/// A character `χ(g) = exp(2πi Σ_t e_t g_t / m_t)` given by its exponent tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    pub exponents: Vec<usize>,
    /// Zero-based position in the group's character enumeration.
    pub index: usize,
}

impl AbelianGroup {
    /// Every factor order must be at least 2. An empty list gives the trivial group.
    pub fn new(factor_orders: Vec<usize>) -> Result<Self> {
        if let Some(&m) = factor_orders.iter().find(|&&m| m < 2) {
            return Err(Error::invalid(format!("cyclic factor order {m} must be at least 2")));
        }
        let order = factor_orders
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m))
            .ok_or_else(|| Error::invalid("group order overflows usize"))?;
        Ok(Self { factor_orders, order })
    }

    pub fn cyclic(m: usize) -> Result<Self> {
        Self::new(vec![m])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn factor_orders(&self) -> &[usize] {
        &self.factor_orders
    }

    /// Decodes a lexicographic position into coordinates.
    fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut coords = vec![0; self.factor_orders.len()];
        for (c, &m) in coords.iter_mut().zip(&self.factor_orders).rev() {
            *c = index % m;
            index /= m;
        }
        coords
    }

    fn encode(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.factor_orders)
            .fold(0, |acc, (&c, &m)| acc * m + c)
    }

    fn check_shape(&self, coords: &[usize], what: &str) -> Result<()> {
        if coords.len() != self.factor_orders.len() {
            return Err(Error::invalid(format!(
                "{what} has {} coordinates, group has {} factors",
                coords.len(),
                self.factor_orders.len()
            )));
        }
        if let Some((c, m)) = coords.iter().zip(&self.factor_orders).find(|(c, m)| *c >= *m) {
            return Err(Error::invalid(format!("{what} coordinate {c} out of range for Z_{m}")));
        }
        Ok(())
    }

    pub fn element(&self, index: usize) -> GroupElement {
        GroupElement(self.decode(index))
    }

    /// All elements in lexicographic order; the identity is first.
    pub fn elements(&self) -> Vec<GroupElement> {
        (0..self.order).map(|i| self.element(i)).collect()
    }

    pub fn element_index(&self, g: &GroupElement) -> Result<usize> {
        self.check_shape(&g.0, "element")?;
        Ok(self.encode(&g.0))
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.factor_orders.len()])
    }

    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        GroupElement(
            g.0.iter()
                .zip(&h.0)
                .zip(&self.factor_orders)
                .map(|((a, b), m)| (a + b) % m)
                .collect(),
        )
    }

    pub fn inverse(&self, g: &GroupElement) -> GroupElement {
        GroupElement(g.0.iter().zip(&self.factor_orders).map(|(a, m)| (m - a) % m).collect())
    }

    /// Index of `g_i⁻¹ g_j` in the element enumeration.
    fn difference_index(&self, i: usize, j: usize) -> usize {
        let gi = self.decode(i);
        let gj = self.decode(j);
        let coords: Vec<usize> = gi
            .iter()
            .zip(&gj)
            .zip(&self.factor_orders)
            .map(|((a, b), m)| (b + m - a) % m)
            .collect();
        self.encode(&coords)
    }

    pub fn character(&self, index: usize) -> Character {
        Character { exponents: self.decode(index), index }
    }

    /// All characters, trivial character first.
    pub fn characters(&self) -> Vec<Character> {
        (0..self.order).map(|i| self.character(i)).collect()
    }

    pub fn character_from_exponents(&self, exponents: Vec<usize>) -> Result<Character> {
        self.check_shape(&exponents, "character")?;
        let index = self.encode(&exponents);
        Ok(Character { exponents, index })
    }

    /// Phase `Σ_t e_t g_t / m_t` reduced to `[0, 1)` using exact integer arithmetic
    /// per factor.
    fn phase(&self, exponents: &[usize], coords: &[usize]) -> f64 {
        exponents
            .iter()
            .zip(coords)
            .zip(&self.factor_orders)
            .map(|((e, g), m)| ((e * g) % m) as f64 / *m as f64)
            .sum::<f64>()
    }

    pub fn character_value(&self, chi: &Character, g: &GroupElement) -> Result<Complex64> {
        self.check_shape(&chi.exponents, "character")?;
        self.check_shape(&g.0, "element")?;
        Ok(Complex64::from_polar(1.0, 2.0 * PI * self.phase(&chi.exponents, &g.0)))
    }

    fn character_value_at(&self, chi: usize, g: usize) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.phase(&self.decode(chi), &self.decode(g)))
    }

    /// The unitary matrix `U = [χ_j(g_i) / √n]`.
    pub fn character_matrix(&self) -> DMatrix<Complex64> {
        let scale = 1.0 / (self.order as f64).sqrt();
        DMatrix::from_fn(self.order, self.order, |i, j| self.character_value_at(j, i) * scale)
    }

    /// Column `χ_j` without normalization.
    pub fn character_vector(&self, chi: usize) -> DVector<Complex64> {
        DVector::from_fn(self.order, |i, _| self.character_value_at(chi, i))
    }

    pub fn character_product(&self, a: &Character, b: &Character) -> Character {
        let exponents: Vec<usize> = a
            .exponents
            .iter()
            .zip(&b.exponents)
            .zip(&self.factor_orders)
            .map(|((x, y), m)| (x + y) % m)
            .collect();
        let index = self.encode(&exponents);
        Character { exponents, index }
    }

    /// The inverse character, which is also the complex conjugate.
    pub fn character_inverse(&self, chi: &Character) -> Character {
        let exponents: Vec<usize> =
            chi.exponents.iter().zip(&self.factor_orders).map(|(e, m)| (m - e) % m).collect();
        let index = self.encode(&exponents);
        Character { exponents, index }
    }

    /// One-based index identifier: the trivial character has label 1.
    pub fn index_identifier(&self, chi: &Character) -> Result<usize> {
        self.check_shape(&chi.exponents, "character")?;
        Ok(self.encode(&chi.exponents) + 1)
    }

    /// Structural test `2e ≡ 0` on every factor.
    pub fn is_self_conjugate(&self, chi: &Character) -> bool {
        chi.exponents.iter().zip(&self.factor_orders).all(|(e, m)| (2 * e) % m == 0)
    }
}

/// Inverse-invariant map from group elements to `[0, 1]`, stored in element order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionFunction {
    values: Vec<f64>,
}

const INVERSE_TOL: f64 = 1e-12;

impl ConnectionFunction {
    pub fn new(group: &AbelianGroup, values: Vec<f64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::DimensionMismatch { expected: group.order(), got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("connection value {v} outside [0, 1]")));
        }
        for (i, g) in group.elements().iter().enumerate() {
            let inv = group.encode(&group.inverse(g).0);
            if (values[i] - values[inv]).abs() > INVERSE_TOL {
                return Err(Error::invalid(format!(
                    "connection function is not inverse-invariant at {:?}: f(g) = {}, f(g⁻¹) = {}",
                    g.0, values[i], values[inv]
                )));
            }
        }
        Ok(Self { values })
    }

    /// Builds from keys of comma-joined coordinates, e.g. `"1,0"`. Every element
    /// must be present.
    pub fn from_map(group: &AbelianGroup, map: &HashMap<String, f64>) -> Result<Self> {
        let mut values = vec![f64::NAN; group.order()];
        for (key, &v) in map {
            let coords = key
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::invalid(format!("bad element key {key:?}")))?;
            let idx = group.element_index(&GroupElement(coords))?;
            values[idx] = v;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::invalid(format!(
                "connection function missing element {:?}",
                group.element(i).0
            )));
        }
        Self::new(group, values)
    }

    pub fn constant(group: &AbelianGroup, p: f64) -> Result<Self> {
        Self::new(group, vec![p; group.order()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }
}

/// `a_{ij} = f(g_i⁻¹ g_j)`.
pub fn cayley_matrix(group: &AbelianGroup, f: &ConnectionFunction) -> DMatrix<f64> {
    let n = group.order();
    DMatrix::from_fn(n, n, |i, j| f.value(group.difference_index(i, j)))
}

/// Eigenvalue `Σ_x f(x) conj(χ(x))` attached to each character, in character order.
pub fn cayley_eigenvalues(group: &AbelianGroup, f: &ConnectionFunction) -> Result<Vec<f64>> {
    let scale = f.values().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    (0..group.order())
        .map(|chi| {
            let lambda: Complex64 = (0..group.order())
                .map(|x| f.value(x) * group.character_value_at(chi, x).conj())
                .sum();
            if lambda.im.abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "eigenvalue for character {chi} has imaginary part {:e}",
                    lambda.im
                )));
            }
            Ok(lambda.re)
        })
        .collect()
}

/// Characters sharing one Cayley eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterEigenGroup {
    pub eigenvalue: f64,
    /// Zero-based character indices, ascending.
    pub characters: Vec<usize>,
}

/// Partitions the characters by eigenvalue; values within `tol` are merged.
/// Groups are ordered by decreasing eigenvalue.
pub fn cayley_eigen_groups(
    group: &AbelianGroup,
    f: &ConnectionFunction,
    tol: f64,
) -> Result<Vec<CharacterEigenGroup>> {
    let eig = cayley_eigenvalues(group, f)?;
    let mut order: Vec<usize> = (0..eig.len()).collect();
    order.sort_by(|&a, &b| eig[b].total_cmp(&eig[a]).then(a.cmp(&b)));
    let mut groups: Vec<CharacterEigenGroup> = Vec::new();
    let mut last = f64::NAN;
    for idx in order {
        match groups.last_mut() {
            Some(g) if (last - eig[idx]).abs() <= tol => g.characters.push(idx),
            _ => groups.push(CharacterEigenGroup { eigenvalue: eig[idx], characters: vec![idx] }),
        }
        last = eig[idx];
    }
    for g in &mut groups {
        g.characters.sort_unstable();
        g.eigenvalue = g.characters.iter().map(|&c| eig[c]).sum::<f64>() / g.characters.len() as f64;
    }
    Ok(groups)
}

/// Origin of a vector of the real character basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealBasisSource {
    /// A real-valued character `χ / √n`.
    SelfConjugate(usize),
    /// `(χ_a + χ_b) / √(2n)` for the conjugate pair `a < b`.
    Cosine(usize, usize),
    /// `(χ_a − χ_b) / (i√(2n))` for the conjugate pair `a < b`.
    Sine(usize, usize),
}

/// Orthonormal real eigenbasis of a Cayley matrix built from characters.
#[derive(Debug, Clone)]
pub struct RealCharacterBasis {
    /// Columns are the basis vectors.
    pub vectors: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub sources: Vec<RealBasisSource>,
}

/// Pairs each non-real character with its conjugate to produce real
/// eigenvectors. Orbits are sorted by decreasing `|λ|` (positive first on
/// ties, then by smallest character index); a pair contributes its cosine
/// vector followed by its sine vector.
pub fn real_eigenpair_basis(
    group: &AbelianGroup,
    f: &ConnectionFunction,
) -> Result<RealCharacterBasis> {
    let n = group.order();
    let eig = cayley_eigenvalues(group, f)?;
    let chars = group.characters();

    let mut orbits: Vec<(usize, Option<usize>)> = Vec::new();
    for chi in &chars {
        if group.is_self_conjugate(chi) {
            orbits.push((chi.index, None));
        } else {
            let conj = group.character_inverse(chi).index;
            if chi.index < conj {
                orbits.push((chi.index, Some(conj)));
            }
        }
    }
    orbits.sort_by(|a, b| {
        let (la, lb) = (eig[a.0], eig[b.0]);
        lb.abs()
            .total_cmp(&la.abs())
            .then(lb.total_cmp(&la))
            .then(a.0.cmp(&b.0))
    });

    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut sources = Vec::with_capacity(n);
    let rn = (n as f64).sqrt();
    let r2n = (2.0 * n as f64).sqrt();
    let to_real = |v: DVector<Complex64>| -> Result<DVector<f64>> {
        let max_im = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if max_im > 1e-12 {
            return Err(Error::invalid(format!("real pairing left imaginary part {max_im:e}")));
        }
        Ok(v.map(|z| z.re))
    };
    for (a, pair) in orbits {
        let ca = group.character_vector(a);
        match pair {
            None => {
                columns.push(to_real(ca / Complex64::from(rn))?);
                eigenvalues.push(eig[a]);
                sources.push(RealBasisSource::SelfConjugate(a));
            }
            Some(b) => {
                let cb = group.character_vector(b);
                columns.push(to_real((&ca + &cb) / Complex64::from(r2n))?);
                columns.push(to_real((&ca - &cb) / Complex64::new(0.0, r2n))?);
                eigenvalues.extend([eig[a], eig[a]]);
                sources.extend([RealBasisSource::Cosine(a, b), RealBasisSource::Sine(a, b)]);
            }
        }
    }
    let vectors = DMatrix::from_columns(&columns);

    let a = cayley_matrix(group, f);
    for (j, lambda) in eigenvalues.iter().enumerate() {
        let v = vectors.column(j);
        let residual = (&a * v - v * *lambda).norm();
        if residual > 1e-10 {
            return Err(Error::Residual(format!(
                "real character vector {j} has eigen-residual {residual:e}"
            )));
        }
    }
    Ok(RealCharacterBasis { vectors, eigenvalues, sources })
}
