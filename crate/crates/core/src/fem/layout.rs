/// Global numbering of several fields, ordered by `x₁` position so that
/// element couplings stay within a narrow band.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    map: Vec<Vec<usize>>,
    n: usize,
    bandwidth: usize,
}

impl DofLayout {
    /// `positions[field][local]` is the `x₁` coordinate of each field DOF.
    pub fn new(positions: &[Vec<f64>]) -> Self {
        let mut keys: Vec<(f64, usize, usize)> = positions
            .iter()
            .enumerate()
            .flat_map(|(f, p)| p.iter().enumerate().map(move |(i, &x)| (x, f, i)))
            .collect();
        keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut map: Vec<Vec<usize>> = positions.iter().map(|p| vec![0; p.len()]).collect();
        for (g, &(_, f, i)) in keys.iter().enumerate() {
            map[f][i] = g;
        }
        Self {
            map,
            n: keys.len(),
            bandwidth: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn global(&self, field: usize, local: usize) -> usize {
        self.map[field][local]
    }

    pub fn field(&self, field: usize) -> &[usize] {
        &self.map[field]
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Widens the band to cover one element's global DOF set.
    pub fn cover(&mut self, element_dofs: &[usize]) {
        if let (Some(lo), Some(hi)) = (element_dofs.iter().min(), element_dofs.iter().max()) {
            self.bandwidth = self.bandwidth.max(hi - lo);
        }
    }

    pub fn gather(&self, field: usize, u: &[f64]) -> Vec<f64> {
        self.map[field].iter().map(|&g| u[g]).collect()
    }

    pub fn scatter(&self, field: usize, values: &[f64], u: &mut [f64]) {
        for (&g, v) in self.map[field].iter().zip(values) {
            u[g] = *v;
        }
    }
}

/// Dirichlet constraints in a global numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub mask: Vec<bool>,
    pub values: Vec<f64>,
}

impl Constraints {
    pub fn free(n: usize) -> Self {
        Self {
            mask: vec![false; n],
            values: vec![0.0; n],
        }
    }

    pub fn fix(&mut self, dof: usize, value: f64) {
        self.mask[dof] = true;
        self.values[dof] = value;
    }

    /// Overwrites constrained entries; interior entries are untouched.
    pub fn apply(&self, u: &mut [f64]) {
        for (i, v) in u.iter_mut().enumerate() {
            if self.mask[i] {
                *v = self.values[i];
            }
        }
    }

    /// Largest deviation of `u` from the constrained values.
    pub fn violation(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.mask)
            .zip(&self.values)
            .filter(|((_, m), _)| **m)
            .fold(0.0_f64, |acc, ((x, _), v)| acc.max((x - v).abs()))
    }

    pub fn homogeneous(&self) -> Self {
        Self {
            mask: self.mask.clone(),
            values: vec![0.0; self.mask.len()],
        }
    }

    pub fn zero_constrained(&self, g: &mut [f64]) {
        for (x, m) in g.iter_mut().zip(&self.mask) {
            if *m {
                *x = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_interleaves_fields_by_position() {
        let l = DofLayout::new(&[vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 1.0, 1.0]]);
        assert_eq!(l.field(0), &[0, 3, 6]);
        assert_eq!(l.field(1), &[1, 2, 4, 5]);
        assert_eq!(l.len(), 7);
    }

    #[test]
    fn dirichlet_is_idempotent_and_local() {
        let mut c = Constraints::free(4);
        c.fix(0, 1.5);
        c.fix(3, -2.0);
        let mut u = vec![9.0, 8.0, 7.0, 6.0];
        c.apply(&mut u);
        let once = u.clone();
        c.apply(&mut u);
        assert_eq!(u, once);
        assert_eq!(u, vec![1.5, 8.0, 7.0, -2.0]);
        assert_eq!(c.violation(&u), 0.0);
    }
}
