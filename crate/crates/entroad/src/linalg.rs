//! Small dense linear-algebra helpers for the solver.
//!
//! Everything here works on problems with at most a few dozen unknowns, so
//! plain `Vec<Vec<f64>>` with modified Gram-Schmidt and partial-pivot
//! elimination is accurate enough and keeps the results bit-reproducible.

/// Rank tolerance for orthogonalization and elimination.
const RANK_TOL: f64 = 1e-11;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Subtracts from `v` its components along each (orthonormal) basis vector.
pub(crate) fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for q in basis {
        let c = dot(q, v);
        for (vi, qi) in v.iter_mut().zip(q) {
            *vi -= c * qi;
        }
    }
}

/// Orthonormal basis of the span of `rows` by modified Gram-Schmidt with one
/// reorthogonalization pass.
pub(crate) fn orthonormal_span(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let scale = norm(row);
        if scale <= RANK_TOL {
            continue;
        }
        let mut v = row.clone();
        project_out(&basis, &mut v);
        project_out(&basis, &mut v);
        let n = norm(&v);
        if n > RANK_TOL * scale.max(1.0) {
            for vi in &mut v {
                *vi /= n;
            }
            basis.push(v);
        }
    }
    basis
}

/// Orthonormal basis of `{d : row · d = 0 for every row}` in `ℝ^n`.
pub(crate) fn null_space_basis(rows: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let span = orthonormal_span(rows);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        if span.len() + basis.len() >= n {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        project_out(&span, &mut v);
        project_out(&basis, &mut v);
        project_out(&basis, &mut v);
        let nv = norm(&v);
        if nv > RANK_TOL {
            for vi in &mut v {
                *vi /= nv;
            }
            basis.push(v);
        }
    }
    basis
}

/// Particular solution of `A x = b` plus an orthonormal null-space basis, or
/// `None` when the system is inconsistent.
pub(crate) fn affine_solution_set(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.first().map_or(0, Vec::len);
    let param = eliminate(a, b)?;
    Some((param.particular, null_space_basis(a, n)))
}

/// A consistent system `A x = b` parameterized as `x = particular + D t` with
/// one (non-orthonormal) column of `directions` per free variable.
pub(crate) struct AffineParam {
    pub particular: Vec<f64>,
    /// One direction per free variable, each of length `n`.
    pub directions: Vec<Vec<f64>>,
    /// Indices of the free variables, in increasing order.
    pub free: Vec<usize>,
}

/// Gaussian elimination with partial pivoting; returns `None` when the
/// system is inconsistent.
pub(crate) fn eliminate(a: &[Vec<f64>], b: &[f64]) -> Option<AffineParam> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut r = 0usize;
    for col in 0..n {
        // Partial pivot within the remaining rows.
        let (best, best_abs) = (r..m).fold((r, 0.0), |(bi, bv), i| {
            let v = rows[i][col].abs();
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
        if best_abs <= RANK_TOL {
            continue;
        }
        rows.swap(r, best);
        let piv = rows[r][col];
        for k in col..=n {
            rows[r][k] /= piv;
        }
        for i in 0..m {
            if i != r {
                let factor = rows[i][col];
                if factor != 0.0 {
                    for k in col..=n {
                        let sub = factor * rows[r][k];
                        rows[i][k] -= sub;
                    }
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
        if r == m {
            break;
        }
    }

    // Zero rows with nonzero right-hand side mean the system is inconsistent.
    for row in rows.iter().skip(r) {
        if row[n].abs() > 1e-8 {
            return None;
        }
    }

    let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut particular = vec![0.0; n];
    for (pi, &col) in pivot_cols.iter().enumerate() {
        particular[col] = rows[pi][n];
    }
    let directions = free
        .iter()
        .map(|&fc| {
            let mut d = vec![0.0; n];
            d[fc] = 1.0;
            for (pi, &col) in pivot_cols.iter().enumerate() {
                d[col] = -rows[pi][fc];
            }
            d
        })
        .collect();
    Some(AffineParam {
        particular,
        directions,
        free,
    })
}

/// Least-squares coefficients `λ` minimizing `‖Σ λ_i cols_i − rhs‖` via the
/// normal equations. `cols` must be linearly independent.
pub(crate) fn least_squares(cols: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let k = cols.len();
    if k == 0 {
        return Vec::new();
    }
    let mut gram = vec![vec![0.0; k]; k];
    let mut target = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = dot(&cols[i], &cols[j]);
        }
        target[i] = dot(&cols[i], rhs);
    }
    match eliminate(&gram, &target) {
        Some(param) => param.particular,
        None => vec![0.0; k],
    }
}

/// Newton ascent step for a concave model: solves `(-M) x = g` for
/// symmetric negative-definite `M` via Cholesky of `-M`, so `x` satisfies
/// `x · g > 0` whenever `g ≠ 0`. `None` when `-M` is not positive definite.
pub(crate) fn solve_neg_definite(m: &[Vec<f64>], g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = -m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 1e-14 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // Forward then back substitution on (-M) x = g.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = g[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}
