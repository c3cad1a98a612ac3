use crate::jets::Jet3;

/// Variance of one tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Up,
    Down,
}

/// Chart components of a tensor field, each component expanded as a jet at
/// one point. Components are stored row-major over the slots.
#[derive(Debug, Clone)]
pub struct TensorJet {
    dim: usize,
    slots: Vec<Slot>,
    data: Vec<Jet3>,
}

impl TensorJet {
    pub fn zeros(dim: usize, slots: &[Slot]) -> TensorJet {
        let len = dim.pow(slots.len() as u32);
        TensorJet { dim, slots: slots.to_vec(), data: vec![Jet3::zero(dim); len] }
    }

    pub fn scalar(value: Jet3) -> TensorJet {
        TensorJet { dim: value.dim(), slots: Vec::new(), data: vec![value] }
    }

    pub fn vector(components: Vec<Jet3>) -> TensorJet {
        let dim = components.len();
        TensorJet { dim, slots: vec![Slot::Up], data: components }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.slots.len());
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> Jet3 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: Jet3) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn add_at(&mut self, idx: &[usize], v: Jet3) {
        let o = self.offset(idx);
        self.data[o] += v;
    }

    /// Value (order-0 coefficient) of one component.
    pub fn at(&self, idx: &[usize]) -> f64 {
        self.get(idx).value()
    }

    pub fn values(&self) -> Vec<f64> {
        self.data.iter().map(|j| j.value()).collect()
    }

    pub fn components(&self) -> &[Jet3] {
        &self.data
    }

    /// Visits every multi-index in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let rank = self.rank();
        let dim = self.dim;
        (0..self.data.len()).map(move |mut flat| {
            let mut idx = vec![0; rank];
            for s in (0..rank).rev() {
                idx[s] = flat % dim;
                flat /= dim;
            }
            idx
        })
    }

    pub fn map(&self, f: impl Fn(Jet3) -> Jet3) -> TensorJet {
        TensorJet { dim: self.dim, slots: self.slots.clone(), data: self.data.iter().map(|j| f(*j)).collect() }
    }

    pub fn scaled(&self, s: f64) -> TensorJet {
        self.map(|j| j * s)
    }

    pub fn plus(&self, other: &TensorJet) -> TensorJet {
        assert_eq!(self.slots, other.slots, "slot mismatch");
        TensorJet {
            dim: self.dim,
            slots: self.slots.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn minus(&self, other: &TensorJet) -> TensorJet {
        self.plus(&other.scaled(-1.0))
    }

    /// Partial derivative of every component: new leading `Down` slot.
    pub fn partials(&self) -> TensorJet {
        let mut slots = vec![Slot::Down];
        slots.extend_from_slice(&self.slots);
        let mut data = Vec::with_capacity(self.data.len() * self.dim);
        for k in 0..self.dim {
            data.extend(self.data.iter().map(|j| j.partial(k)));
        }
        TensorJet { dim: self.dim, slots, data }
    }

    /// Tensor product; the slots of `other` follow those of `self`.
    pub fn outer(&self, other: &TensorJet) -> TensorJet {
        assert_eq!(self.dim, other.dim, "tensor dimension mismatch");
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            data.extend(other.data.iter().map(|b| *a * *b));
        }
        TensorJet { dim: self.dim, slots, data }
    }

    /// Sums over the diagonal of slots `s` and `t`, which must have opposite variance.
    pub fn contract(&self, s: usize, t: usize) -> TensorJet {
        assert!(s != t && s < self.rank() && t < self.rank());
        assert_ne!(self.slots[s], self.slots[t], "contraction needs one upper and one lower slot");
        let slots: Vec<Slot> =
            self.slots.iter().enumerate().filter(|(k, _)| *k != s && *k != t).map(|(_, v)| *v).collect();
        let mut out = TensorJet::zeros(self.dim, &slots);
        let mut full = vec![0; self.rank()];
        for idx in out.indices().collect::<Vec<_>>() {
            let mut acc = Jet3::zero(self.dim);
            for d in 0..self.dim {
                let mut it = idx.iter();
                for (k, slot) in full.iter_mut().enumerate() {
                    *slot = if k == s || k == t { d } else { *it.next().unwrap() };
                }
                acc += self.get(&full);
            }
            out.set(&idx, acc);
        }
        out
    }

    /// Exchanges slots `s` and `t`.
    pub fn swap(&self, s: usize, t: usize) -> TensorJet {
        let mut slots = self.slots.clone();
        slots.swap(s, t);
        let mut out = TensorJet::zeros(self.dim, &slots);
        for idx in self.indices() {
            let mut j = idx.clone();
            j.swap(s, t);
            out.set(&j, self.get(&idx));
        }
        out
    }

    /// Component values of a rank-2 tensor as a matrix (first slot = row).
    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        assert_eq!(self.rank(), 2);
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| self.at(&[i, j]))
    }

    /// Component values of a vector or covector.
    pub fn vector_values(&self) -> nalgebra::DVector<f64> {
        assert_eq!(self.rank(), 1);
        nalgebra::DVector::from_iterator(self.dim, self.data.iter().map(|j| j.value()))
    }

    /// A tensor with constant components, exact only as a value at the point.
    pub fn from_values(dim: usize, slots: &[Slot], values: &[f64]) -> TensorJet {
        let data: Vec<Jet3> = values.iter().map(|v| Jet3::constant(dim, *v)).collect();
        assert_eq!(data.len(), dim.pow(slots.len() as u32));
        TensorJet { dim, slots: slots.to_vec(), data }
    }

    /// Largest component magnitude at the point.
    pub fn max_abs_value(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, j| m.max(j.value().abs()))
    }
}
