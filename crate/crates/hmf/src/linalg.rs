//! Dense exact linear algebra, generic over the coefficient field.

use num_rational::BigRational;
use num_traits::Zero;

/// Exact field scalar usable in row reduction.
pub trait FieldScalar: Clone + PartialEq {
    fn zero_val() -> Self;
    fn is_zero_val(&self) -> bool;
    fn add_s(&self, other: &Self) -> Self;
    fn sub_s(&self, other: &Self) -> Self;
    fn mul_s(&self, other: &Self) -> Self;
    /// None for zero.
    fn inv_s(&self) -> Option<Self>;
}

impl FieldScalar for BigRational {
    fn zero_val() -> Self {
        BigRational::zero()
    }
    fn is_zero_val(&self) -> bool {
        self.is_zero()
    }
    fn add_s(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_s(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_s(&self, other: &Self) -> Self {
        self * other
    }
    fn inv_s(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
}

/// Reduced row echelon form in place. Returns the pivot column of each
/// nonzero row; zero rows end up at the bottom.
pub fn rref<T: FieldScalar>(rows: &mut [Vec<T>]) -> Vec<usize> {
    let nrows = rows.len();
    if nrows == 0 {
        return Vec::new();
    }
    let ncols = rows[0].len();
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for col in 0..ncols {
        if r >= nrows {
            break;
        }
        let Some(sel) = (r..nrows).find(|&i| !rows[i][col].is_zero_val()) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = rows[r][col].inv_s().expect("pivot is nonzero");
        for j in col..ncols {
            rows[r][j] = rows[r][j].mul_s(&inv);
        }
        for i in 0..nrows {
            if i != r && !rows[i][col].is_zero_val() {
                let f = rows[i][col].clone();
                for j in col..ncols {
                    let d = rows[r][j].mul_s(&f);
                    rows[i][j] = rows[i][j].sub_s(&d);
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    pivots
}
