//! Minimal double-double arithmetic and a pivoted LU solve, used to compute
//! the mixed-moment radial weights of the singular pair rules. The moment
//! systems mix exponent families `w^{sigma + k}` and `w^k`; their Vandermonde
//! matrices can reach condition numbers around 1e15 when `2s` approaches an
//! integer, which plain f64 cannot solve to the accuracy the rule invariants
//! require.

#[derive(Debug, Clone, Copy)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd { hi: -other.hi, lo: -other.lo })
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from(q1)));
        let q2 = r.hi / other.hi;
        let r2 = r.sub(other.mul(Dd::from(q2)));
        let q3 = r2.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from(q3))
    }

    pub fn abs_hi(self) -> f64 {
        self.hi.abs()
    }
}

/// Solve `A x = b` with partial pivoting in double-double precision.
/// `a` is row-major n x n. Returns None on a (near-)singular pivot.
pub fn solve_dd(a: &[Dd], b: &[Dd], n: usize) -> Option<Vec<Dd>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let idx = |i: usize, j: usize| i * n + j;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[idx(r, col)].abs_hi() > m[idx(piv, col)].abs_hi() {
                piv = r;
            }
        }
        if m[idx(piv, col)].abs_hi() == 0.0 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(idx(col, j), idx(piv, j));
            }
            rhs.swap(col, piv);
        }
        for r in col + 1..n {
            let f = m[idx(r, col)].div(m[idx(col, col)]);
            for j in col..n {
                let t = f.mul(m[idx(col, j)]);
                m[idx(r, j)] = m[idx(r, j)].sub(t);
            }
            rhs[r] = rhs[r].sub(f.mul(rhs[col]));
        }
    }
    let mut x = vec![Dd::ZERO; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc = acc.sub(m[idx(i, j)].mul(x[j]));
        }
        x[i] = acc.div(m[idx(i, i)]);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_roundtrip_arithmetic() {
        let a = Dd::from(1.0).div(Dd::from(3.0));
        let b = a.mul(Dd::from(3.0));
        assert!((b.to_f64() - 1.0).abs() < 1e-30);
        let c = Dd::from(1e16).add(Dd::from(1.0)).sub(Dd::from(1e16));
        assert_eq!(c.to_f64(), 1.0);
    }

    #[test]
    fn solve_hilbert_like() {
        // 8x8 Hilbert system, condition ~ 1e10; dd keeps the residual tiny
        let n = 8;
        let mut a = vec![Dd::ZERO; n * n];
        let mut b = vec![Dd::ZERO; n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = Dd::from(1.0).div(Dd::from((i + j + 1) as f64));
            }
            b[i] = Dd::from(1.0);
        }
        let x = solve_dd(&a, &b, n).unwrap();
        for i in 0..n {
            let mut acc = Dd::ZERO;
            for j in 0..n {
                acc = acc.add(a[i * n + j].mul(x[j]));
            }
            assert!((acc.to_f64() - 1.0).abs() < 1e-14);
        }
    }
}
