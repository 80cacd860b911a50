//! Linear programs over coupling polytopes, solved with `minilp`.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{check_dim, invalid, Error, Result};
use crate::measures::unflatten;

/// Minimizes `sum_x cost[x] pi[x]` over nonnegative `pi` on the row-major
/// product alphabet `sizes` whose coordinate marginals equal `marginals[i]`
/// wherever `marginals[i]` is given. Entries with `allowed[x] == false` are
/// fixed to zero. Returns `None` if the polytope is empty.
pub fn min_linear_over_couplings(
    sizes: &[usize],
    marginals: &[Option<&[f64]>],
    allowed: &[bool],
    cost: &[f64],
) -> Result<Option<(f64, Vec<f64>)>> {
    check_dim("marginal list", sizes.len(), marginals.len())?;
    let n: usize = sizes.iter().product();
    check_dim("cost vector", n, cost.len())?;
    check_dim("support mask", n, allowed.len())?;
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Option<Variable>> = (0..n)
        .map(|x| {
            if allowed[x] {
                if !cost[x].is_finite() {
                    return None;
                }
                Some(problem.add_var(cost[x], (0.0, f64::INFINITY)))
            } else {
                None
            }
        })
        .collect();
    if allowed.iter().zip(cost).any(|(a, c)| *a && !c.is_finite()) {
        return invalid("linear cost must be finite on the allowed support");
    }
    let mut first = true;
    let mut any_constraint = false;
    for (i, m) in marginals.iter().enumerate() {
        let Some(m) = m else { continue };
        check_dim("marginal length", sizes[i], m.len())?;
        let mut rows: Vec<Vec<(Variable, f64)>> = vec![Vec::new(); sizes[i]];
        for (x, v) in vars.iter().enumerate() {
            if let Some(v) = v {
                rows[unflatten(x, sizes)[i]].push((*v, 1.0));
            }
        }
        // Later coordinates repeat the total-mass equation; drop one row each.
        let take = if first { sizes[i] } else { sizes[i] - 1 };
        for (z, row) in rows.into_iter().enumerate().take(take) {
            if row.is_empty() {
                if m[z] > 0.0 {
                    return Ok(None);
                }
                continue;
            }
            problem.add_constraint(row.as_slice(), ComparisonOp::Eq, m[z]);
            any_constraint = true;
        }
        first = false;
    }
    if !any_constraint {
        let all: Vec<(Variable, f64)> = vars.iter().flatten().map(|v| (*v, 1.0)).collect();
        if all.is_empty() {
            return Ok(None);
        }
        problem.add_constraint(all.as_slice(), ComparisonOp::Eq, 1.0);
    }
    match problem.solve() {
        Ok(sol) => {
            let point: Vec<f64> = vars
                .iter()
                .map(|v| v.map_or(0.0, |v| sol[v].max(0.0)))
                .collect();
            Ok(Some((sol.objective(), point)))
        }
        Err(minilp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::InvalidInput(format!("linear program failed: {e}"))),
    }
}

/// Optimal transport cost `min_pi sum pi(x, y) cost(x, y)` between `a` and `b`.
pub fn transport_cost(a: &[f64], b: &[f64], cost: &[f64]) -> Result<(f64, Vec<f64>)> {
    let sizes = [a.len(), b.len()];
    let allowed = vec![true; a.len() * b.len()];
    min_linear_over_couplings(&sizes, &[Some(a), Some(b)], &allowed, cost)?
        .ok_or_else(|| Error::InvalidInput("transport marginals have different mass".into()))
}
