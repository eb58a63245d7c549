//! Erasure filling for Vandermonde parity-check codes.
//!
//! The code is `{ v : sum_j p_j^t v_j = 0 for t in 0..rho }` over distinct
//! nonzero points `p_j`. With exactly `rho` coordinates erased, the erased
//! values solve a `rho x rho` Vandermonde system whose right-hand side is the
//! contribution of the known coordinates. [`ErasureSolver`] eliminates that
//! system once and can then fill many vectors sharing the same points and
//! erasure pattern.

use crate::error::{Error, Result};
use crate::field::{Field, Symbol};

fn check_points(points: &[Symbol]) -> Result<()> {
    for (i, &p) in points.iter().enumerate() {
        if p == 0 || points[..i].contains(&p) {
            return Err(Error::BadPoints);
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ErasureSolver {
    len: usize,
    known: Vec<usize>,
    unknown: Vec<usize>,
    // Row r gives unknown[r] as a combination of the known coordinates.
    coef: Vec<Symbol>,
}

impl ErasureSolver {
    /// Builds a solver for vectors of `points.len()` coordinates where the
    /// positions in `unknown` are erased. The number of parity checks is
    /// `unknown.len()`.
    pub fn new(field: &Field, points: &[Symbol], unknown: &[usize]) -> Result<Self> {
        check_points(points)?;
        let len = points.len();
        let mut is_unknown = vec![false; len];
        for &u in unknown {
            if u >= len {
                return Err(Error::OutOfRange {
                    value: u,
                    limit: len,
                });
            }
            if is_unknown[u] {
                return Err(Error::Shape(format!("erased position {u} listed twice")));
            }
            is_unknown[u] = true;
        }
        let known: Vec<usize> = (0..len).filter(|&j| !is_unknown[j]).collect();
        let rho = unknown.len();
        let kn = known.len();

        // Augmented rows [V_unknown | V_known], row t holding p^t.
        let width = rho + kn;
        let mut rows = vec![0 as Symbol; rho * width];
        for t in 0..rho {
            let row = &mut rows[t * width..(t + 1) * width];
            for (c, &pos) in unknown.iter().chain(&known).enumerate() {
                row[c] = field.pow(points[pos], t as u64)?;
            }
        }

        for col in 0..rho {
            let pivot = (col..rho)
                .find(|&r| rows[r * width + col] != 0)
                .ok_or(Error::Singular)?;
            if pivot != col {
                for c in 0..width {
                    rows.swap(pivot * width + c, col * width + c);
                }
            }
            let scale = field.inv(rows[col * width + col])?;
            for c in 0..width {
                rows[col * width + c] = field.mul(rows[col * width + c], scale);
            }
            let pivot_row: Vec<Symbol> = rows[col * width..(col + 1) * width].to_vec();
            for r in 0..rho {
                if r == col {
                    continue;
                }
                let factor = rows[r * width + col];
                if factor != 0 {
                    field.mul_acc(&mut rows[r * width..(r + 1) * width], &pivot_row, factor);
                }
            }
        }

        // [I | A^-1 B]: unknown = A^-1 B known (signs vanish in char 2).
        let mut coef = Vec::with_capacity(rho * kn);
        for r in 0..rho {
            coef.extend_from_slice(&rows[r * width + rho..(r + 1) * width]);
        }

        Ok(ErasureSolver {
            len,
            known: known.to_vec(),
            unknown: unknown.to_vec(),
            coef,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn known_positions(&self) -> &[usize] {
        &self.known
    }

    pub fn unknown_positions(&self) -> &[usize] {
        &self.unknown
    }

    /// Overwrites the erased positions of `values` with the unique
    /// completion; the known positions are read, not modified.
    pub fn fill(&self, field: &Field, values: &mut [Symbol]) {
        debug_assert_eq!(values.len(), self.len);
        let kn = self.known.len();
        for (r, &pos) in self.unknown.iter().enumerate() {
            let row = &self.coef[r * kn..(r + 1) * kn];
            let mut acc = 0;
            for (&c, &k) in row.iter().zip(&self.known) {
                acc ^= field.mul(c, values[k]);
            }
            values[pos] = acc;
        }
    }
}

/// One-shot erasure fill. `values[j] == None` marks an erased coordinate;
/// exactly `rho` must be erased.
pub fn grs_erasure_solve(
    field: &Field,
    points: &[Symbol],
    rho: usize,
    values: &[Option<Symbol>],
) -> Result<Vec<Symbol>> {
    if points.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} points for {} values",
            points.len(),
            values.len()
        )));
    }
    let unknown: Vec<usize> = (0..values.len()).filter(|&j| values[j].is_none()).collect();
    if unknown.len() != rho {
        return Err(Error::UnknownCount {
            expected: rho,
            got: unknown.len(),
        });
    }
    let solver = ErasureSolver::new(field, points, &unknown)?;
    let mut out: Vec<Symbol> = values.iter().map(|v| v.unwrap_or(0)).collect();
    solver.fill(field, &mut out);
    Ok(out)
}
