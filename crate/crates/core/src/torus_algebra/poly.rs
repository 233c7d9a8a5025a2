use crate::error::{KamError, Result};
use crate::linalg::Mat;

/// Integer polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    coeffs: Vec<i128>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_monic(&self) -> bool {
        *self.coeffs.last().unwrap() == 1
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c as f64)
    }

    /// Remainder of division by a monic divisor (exact over the integers).
    pub fn rem_monic(&self, divisor: &IntPoly) -> IntPoly {
        debug_assert!(divisor.is_monic());
        let k = divisor.degree();
        let mut r = self.coeffs.clone();
        if r.len() <= k {
            return IntPoly::new(r);
        }
        for top in (k..r.len()).rev() {
            let q = r[top];
            if q == 0 {
                continue;
            }
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                r[top - k + j] -= q * dc;
            }
        }
        r.truncate(k.max(1));
        IntPoly::new(r)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt()
    }

    /// Searches for a monic integer factor of degree `1..=deg/2`.
    ///
    /// By Gauss's lemma a monic integer polynomial is reducible over the
    /// rationals iff it has such a factor. Candidate coefficients are
    /// bounded by Mignotte's bound `|b_j| ≤ C(k, j)·‖p‖₂`, and the constant
    /// term must divide `p(0)`.
    pub fn find_factor(&self) -> Result<Option<IntPoly>> {
        if !self.is_monic() {
            return Err(KamError::Input("factor search needs a monic polynomial".into()));
        }
        let n = self.degree();
        if n <= 1 {
            return Ok(None);
        }
        let p0 = self.coeffs[0];
        if p0 == 0 {
            return Ok(Some(IntPoly::new(vec![0, 1])));
        }
        let divisors = divisors(p0.unsigned_abs());
        let norm = self.l2_norm().ceil() as i128;
        for k in 1..=n / 2 {
            let bounds: Vec<i128> = (1..k).map(|j| binomial(k, j) as i128 * norm).collect();
            let mut found = None;
            for &d0 in &divisors {
                for c0 in [d0 as i128, -(d0 as i128)] {
                    let mut coeffs = vec![0i128; k + 1];
                    coeffs[0] = c0;
                    coeffs[k] = 1;
                    if self.search_middle(&mut coeffs, 1, &bounds, &mut found) {
                        return Ok(found);
                    }
                }
            }
        }
        Ok(None)
    }

    fn search_middle(
        &self,
        coeffs: &mut Vec<i128>,
        j: usize,
        bounds: &[i128],
        found: &mut Option<IntPoly>,
    ) -> bool {
        let k = coeffs.len() - 1;
        if j == k {
            let g = IntPoly { coeffs: coeffs.clone() };
            if self.rem_monic(&g).is_zero() {
                *found = Some(g);
                return true;
            }
            return false;
        }
        let b = bounds[j - 1];
        for c in -b..=b {
            coeffs[j] = c;
            if self.search_middle(coeffs, j + 1, bounds, found) {
                return true;
            }
        }
        false
    }

    /// All complex roots by Durand–Kerner (Weierstrass) iteration on the
    /// monic polynomial. Returned as `(re, im)` pairs.
    pub fn roots(&self) -> Vec<(f64, f64)> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = *self.coeffs.last().unwrap() as f64;
        let c: Vec<f64> = self.coeffs.iter().map(|&x| x as f64 / lead).collect();
        let radius = 1.0 + c[..n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut z: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let ang = 0.4 + std::f64::consts::TAU * i as f64 / n as f64;
                (radius * 0.5 * ang.cos(), radius * 0.5 * ang.sin())
            })
            .collect();
        let cmul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
        let cdiv = |a: (f64, f64), b: (f64, f64)| {
            let den = b.0 * b.0 + b.1 * b.1;
            ((a.0 * b.0 + a.1 * b.1) / den, (a.1 * b.0 - a.0 * b.1) / den)
        };
        for _ in 0..2000 {
            let mut delta = 0.0f64;
            for i in 0..n {
                let mut val = (1.0, 0.0);
                for &ci in c[..n].iter().rev() {
                    val = cmul(val, z[i]);
                    val.0 += ci;
                }
                // val now holds p(z_i) computed by Horner from the leading 1.
                let mut den = (1.0, 0.0);
                for j in 0..n {
                    if j != i {
                        den = cmul(den, (z[i].0 - z[j].0, z[i].1 - z[j].1));
                    }
                }
                let step = cdiv(val, den);
                z[i] = (z[i].0 - step.0, z[i].1 - step.1);
                delta = delta.max(step.0.hypot(step.1));
            }
            if delta < 1e-15 * radius {
                break;
            }
        }
        z
    }

    /// Companion matrix, used to cross-check root finding.
    pub fn companion(&self) -> Mat<f64> {
        let n = self.degree();
        let mut m = Mat::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -(self.coeffs[i] as f64);
        }
        m
    }
}

fn divisors(n: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut i = 1u128;
    while i * i <= n {
        if n % i == 0 {
            out.push(i);
            if i * i != n {
                out.push(n / i);
            }
        }
        i += 1;
    }
    out.sort_unstable();
    out
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_search() {
        // t^2 - 3t + 1 irreducible
        assert_eq!(IntPoly::new(vec![1, -3, 1]).find_factor().unwrap(), None);
        // (t-1)^2
        assert!(IntPoly::new(vec![1, -2, 1]).find_factor().unwrap().is_some());
        // (t^2+t+1)(t^2-3t+1) = t^4 -2t^3 -t^2 -2t + 1
        let f = IntPoly::new(vec![1, -2, -1, -2, 1]).find_factor().unwrap().unwrap();
        assert_eq!(f.degree(), 2);
        // t^3 - 3t^2 + t - 1 has no rational root, degree 3 => irreducible
        assert_eq!(IntPoly::new(vec![-1, 1, -3, 1]).find_factor().unwrap(), None);
    }

    #[test]
    fn remainder_exact() {
        let p = IntPoly::new(vec![-6, 11, -6, 1]); // (t-1)(t-2)(t-3)
        assert!(p.rem_monic(&IntPoly::new(vec![-2, 1])).is_zero());
        assert_eq!(p.rem_monic(&IntPoly::new(vec![0, 1])).coeffs(), &[-6]);
    }

    #[test]
    fn roots_of_golden_polynomial() {
        let mut r = IntPoly::new(vec![1, -3, 1]).roots();
        r.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let phi2 = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((r[1].0 - phi2).abs() < 1e-12 && r[1].1.abs() < 1e-12);
        assert!((r[0].0 - 1.0 / phi2).abs() < 1e-12);
    }
}
