//! Reconstruction of genus-zero invariants from WDVV.
//!
//! Every admissible invariant inside the working bounds becomes an unknown
//! `x_i` of a [`SymPoly`] ring; the associator of the resulting potential
//! gives polynomial equations, which are solved one unknown at a time in
//! the order `(∫_β c₁, #insertions outside W, β, insertions)`.

use thiserror::Error;

use super::sympoly::SymPoly;
use super::{
    admissible_keys, chart_bounds, wdvv_residual, CohModel, GWKey, GWTable, PotentialSeries, QuantumError,
};
use crate::scalar::{int, Coeff, Rational};
use crate::series::TruncatedSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("WDVV does not determine {0} within the given bounds")]
    Underdetermined(String),
    #[error("seed violates WDVV at {0}")]
    Inconsistent(String),
}

/// Admissible keys whose monomials fit `bounds`.
fn keys_within(model: &CohModel, bounds: &[i32]) -> Vec<GWKey> {
    let r = model.h2().len();
    let qmax = bounds[..r].iter().copied().max().unwrap_or(0).max(0) as u32;
    admissible_keys(model, qmax * model.mori_rank as u32)
        .into_iter()
        .filter(|k| {
            model.q_exponents(&k.beta).into_iter().chain(k.ins.iter().copied()).zip(bounds).all(|(e, &b)| e as i64 <= b as i64)
        })
        .collect()
}

/// Fills in every admissible invariant with `Σβ ≤ max_degree` from `seed`,
/// treating invariants whose insertions all lie in `w` as given (absent
/// entries are zero).
pub fn reconstruct(model: &CohModel, seed: &GWTable, w: &[usize], max_degree: u32) -> Result<GWTable, ReconstructError> {
    model.validate()?;
    let bounds = chart_bounds(model, max_degree);
    let keys = keys_within(model, &bounds);
    let others = model.others();
    let non_w = |k: &GWKey| -> u32 { k.ins.iter().zip(&others).filter(|(_, c)| !w.contains(c)).map(|(&j, _)| j).sum() };

    let bad: Vec<String> = seed
        .entries
        .keys()
        .filter(|k| k.beta.len() != model.mori_rank || k.ins.len() != others.len() || !k.is_admissible(model))
        .map(|k| k.describe(model))
        .collect();
    if !bad.is_empty() {
        return Err(QuantumError::Inadmissible(bad).into());
    }

    let mut values: Vec<Option<Rational>> = keys
        .iter()
        .map(|k| match seed.entries.get(k) {
            Some(v) => Some(v.clone()),
            None if non_w(k) == 0 => Some(int(0)),
            None => None,
        })
        .collect();
    let rank = |i: usize| {
        let k = &keys[i];
        (model.c1_degree(&k.beta), non_w(k), k.beta.clone(), k.ins.clone())
    };
    let mut pending: Vec<usize> = (0..keys.len()).filter(|&i| values[i].is_none()).collect();
    pending.sort_by_key(|&i| rank(i));

    if !pending.is_empty() {
        let vars = model.chart();
        let terms = keys.iter().enumerate().map(|(i, k)| {
            let e: Vec<u32> = model.q_exponents(&k.beta).into_iter().chain(k.ins.iter().copied()).collect();
            let c = SymPoly::var(i as u32).mul(&SymPoly::constant(int(1) / k.factorial()));
            (e, c)
        });
        let quantum = TruncatedSeries::from_terms(&vars, &bounds, terms).map_err(QuantumError::from)?;
        let phi = PotentialSeries { classical: model.triple_intersections(), quantum };
        let res = wdvv_residual(model, &phi)?;
        let original: Vec<SymPoly> = res.components.iter().flat_map(|(_, s)| s.terms().map(|(_, c)| c.clone())).collect();
        let mut eqs: Vec<SymPoly> = original.clone();
        loop {
            eqs = eqs.iter().map(|e| e.substitute(&values)).filter(|e| !Coeff::is_zero(e)).collect();
            if pending.is_empty() {
                break;
            }
            let solved = pending.iter().position(|&u| {
                eqs.iter().find_map(|e| e.as_linear().filter(|(x, _, _)| *x as usize == u)).map(|(_, a, b)| {
                    values[u] = Some(-b / a);
                }).is_some()
            });
            match solved {
                Some(p) => {
                    pending.remove(p);
                }
                None => return Err(ReconstructError::Underdetermined(keys[pending[0]].describe(model))),
            }
        }
        if !eqs.is_empty() {
            let worst = original
                .iter()
                .filter(|e| !Coeff::is_zero(&e.substitute(&values)))
                .flat_map(|e| e.unknowns())
                .max_by_key(|&x| rank(x as usize))
                .map(|x| keys[x as usize].describe(model))
                .unwrap_or_else(|| "classical part".into());
            return Err(ReconstructError::Inconsistent(worst));
        }
    }

    let mut out = GWTable::new();
    for (k, v) in keys.iter().zip(values) {
        if k.beta.iter().sum::<u32>() <= max_degree {
            out.insert(k.clone(), v.expect("all unknowns solved"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{p1xp1_model, p2_model};

    fn n(model: &CohModel, t: &GWTable, beta: &[u32]) -> Rational {
        let _ = model;
        t.entries.iter().find(|(k, _)| k.beta == beta).map(|(_, v)| v.clone()).unwrap_or_else(|| int(0))
    }

    #[test]
    fn p2_low_degrees() {
        let m = p2_model();
        let mut seed = GWTable::new();
        seed.insert(GWKey { beta: vec![1], ins: vec![2] }, int(1));
        let t = reconstruct(&m, &seed, &[1], 3).unwrap();
        assert_eq!(n(&m, &t, &[2]), int(1));
        assert_eq!(n(&m, &t, &[3]), int(12));
        let mut seed2 = GWTable::new();
        seed2.insert(GWKey { beta: vec![1], ins: vec![2] }, int(2));
        let t2 = reconstruct(&m, &seed2, &[1], 3).unwrap();
        assert_eq!(n(&m, &t2, &[2]), int(4));
        assert_eq!(n(&m, &t2, &[3]), int(96));
    }

    #[test]
    fn full_w_is_identity() {
        let m = p2_model();
        let mut seed = GWTable::new();
        seed.insert(GWKey { beta: vec![1], ins: vec![2] }, int(1));
        assert_eq!(reconstruct(&m, &seed, &[0, 1, 2], 3).unwrap(), seed);
    }

    #[test]
    fn p1xp1_from_lines() {
        let m = p1xp1_model();
        let mut seed = GWTable::new();
        seed.insert(GWKey { beta: vec![1, 0], ins: vec![1] }, int(1));
        seed.insert(GWKey { beta: vec![0, 1], ins: vec![1] }, int(1));
        let t = reconstruct(&m, &seed, &[1, 2], 3).unwrap();
        assert_eq!(n(&m, &t, &[1, 1]), int(1));
        assert_eq!(n(&m, &t, &[1, 2]), int(1));
        assert_eq!(n(&m, &t, &[2, 0]), int(0));
    }
}
