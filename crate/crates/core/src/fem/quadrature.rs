/// Gauss–Legendre rule mapped to the reference interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub points: Vec<f64>,
    /// Weights summing to one.
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, exact for polynomials of degree `2n − 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let dp = legendre(n, x).1;
            points[n - 1 - i] = 0.5 * (x + 1.0);
            weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `(Pₙ(x), Pₙ′(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_up_to_degree_2n_minus_1() {
        for n in 1..=6 {
            let g = GaussRule::new(n);
            for deg in 0..2 * n {
                let q: f64 = g
                    .points
                    .iter()
                    .zip(&g.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn points_are_sorted_inside() {
        let g = GaussRule::new(5);
        assert!(g.points.windows(2).all(|p| p[0] < p[1]));
        assert!(g.points[0] > 0.0 && g.points[4] < 1.0);
    }
}
