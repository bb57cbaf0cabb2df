//! Dense tensors over `n`-dimensional index ranges with valence metadata.

use serde::{Serialize, Serializer};

use crate::jet::Jet;
use crate::scalar::{to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Upper,
    Lower,
}

/// A declared symmetry among slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Invariant under every permutation of the listed slots.
    Symmetric(Vec<usize>),
    /// Changes sign when the two slots are exchanged.
    Antisymmetric(usize, usize),
}

/// Row-major dense tensor. The element type is a real for evaluated tensors
/// and a [`Jet`] for tensors carried together with their neighbourhood.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<E> {
    n: usize,
    valence: Vec<Slot>,
    symmetries: Vec<Symmetry>,
    data: Vec<E>,
}

/// An evaluated tensor.
pub type TensorBlock<T> = Tensor<T>;
/// A tensor whose components are jets in `(x, y)`.
pub type JetTensor<T> = Tensor<Jet<T>>;

/// Iterates over all multi-indices of the given rank in row-major order.
pub fn indices(n: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = flat % n;
            flat /= n;
        }
        idx
    })
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

impl<E> Tensor<E> {
    pub fn from_fn(n: usize, valence: &[Slot], mut f: impl FnMut(&[usize]) -> E) -> Self {
        let data = indices(n, valence.len()).map(|idx| f(&idx)).collect();
        Tensor {
            n,
            valence: valence.to_vec(),
            symmetries: Vec::new(),
            data,
        }
    }

    pub fn try_from_fn<Er>(
        n: usize,
        valence: &[Slot],
        mut f: impl FnMut(&[usize]) -> Result<E, Er>,
    ) -> Result<Self, Er> {
        let data = indices(n, valence.len())
            .map(|idx| f(&idx))
            .collect::<Result<_, _>>()?;
        Ok(Tensor {
            n,
            valence: valence.to_vec(),
            symmetries: Vec::new(),
            data,
        })
    }

    pub fn with_symmetry(mut self, s: Symmetry) -> Self {
        self.symmetries.push(s);
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.valence.len()
    }

    pub fn valence(&self) -> &[Slot] {
        &self.valence
    }

    pub fn symmetries(&self) -> &[Symmetry] {
        &self.symmetries
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &E {
        &self.data[self.offset(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut E {
        let o = self.offset(idx);
        &mut self.data[o]
    }

    pub fn map<F>(&self, f: impl FnMut(&E) -> F) -> Tensor<F> {
        Tensor {
            n: self.n,
            valence: self.valence.clone(),
            symmetries: self.symmetries.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map<F, Er>(&self, f: impl FnMut(&E) -> Result<F, Er>) -> Result<Tensor<F>, Er> {
        Ok(Tensor {
            n: self.n,
            valence: self.valence.clone(),
            symmetries: self.symmetries.clone(),
            data: self.data.iter().map(f).collect::<Result<_, _>>()?,
        })
    }
}

impl<T: Real> Tensor<T> {
    pub fn zeros(n: usize, valence: &[Slot]) -> Self {
        Tensor::from_fn(n, valence, |_| T::zero())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum()
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|&v| v * c)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.data.len(), other.data.len(), "tensor shapes differ");
        Tensor {
            n: self.n,
            valence: self.valence.clone(),
            symmetries: Vec::new(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Largest violation of the declared symmetries, relative to `max_abs`.
    pub fn symmetry_residual(&self) -> T {
        let scale = self.max_abs();
        let mut worst = T::zero();
        for s in &self.symmetries {
            let r = match s {
                Symmetry::Symmetric(slots) => self.permutation_residual(slots),
                Symmetry::Antisymmetric(a, b) => self.antisymmetry_residual(*a, *b),
            };
            worst = worst.max(r);
        }
        if scale > T::zero() {
            worst / scale
        } else {
            worst
        }
    }

    fn permutation_residual(&self, slots: &[usize]) -> T {
        let perms = permutations(slots);
        let mut worst = T::zero();
        for idx in indices(self.n, self.rank()) {
            let v = *self.get(&idx);
            for p in &perms {
                let mut j = idx.clone();
                for (from, to) in slots.iter().zip(p) {
                    j[*to] = idx[*from];
                }
                worst = worst.max((v - *self.get(&j)).abs());
            }
        }
        worst
    }

    fn antisymmetry_residual(&self, a: usize, b: usize) -> T {
        let mut worst = T::zero();
        for idx in indices(self.n, self.rank()) {
            let mut j = idx.clone();
            j.swap(a, b);
            worst = worst.max((*self.get(&idx) + *self.get(&j)).abs());
        }
        worst
    }

    pub fn to_f64(&self) -> Tensor<f64> {
        self.map(|&v| to_f64(v))
    }
}

impl<T: Real> Tensor<Jet<T>> {
    /// Order-0 coefficients: the tensor at the expansion point.
    pub fn value(&self) -> Tensor<T> {
        self.map(|j| j.value())
    }

    /// Smallest truncation order among the components.
    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }
}

/// Serializes as a flat component list plus metadata.
impl<T: Real> Serialize for Tensor<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Tensor", 4)?;
        st.serialize_field("dim", &self.n)?;
        st.serialize_field("valence", &self.valence)?;
        st.serialize_field("symmetries", &self.symmetries)?;
        let data: Vec<f64> = self.data.iter().map(|&v| to_f64(v)).collect();
        st.serialize_field("components", &data)?;
        st.end()
    }
}

/// Relative discrepancy `max|a − b| / max(max|a|, max|b|)`, falling back to
/// the absolute difference when both sides are below `floor`.
pub fn relative_residual<T: Real>(a: &Tensor<T>, b: &Tensor<T>, floor: T) -> T {
    let diff = a.sub(b).max_abs();
    let scale = a.max_abs().max(b.max_abs());
    if scale > floor {
        diff / scale
    } else {
        diff
    }
}

/// Default absolute floor below which residuals are reported unnormalized.
pub const RESIDUAL_FLOOR: f64 = 1e-12;
