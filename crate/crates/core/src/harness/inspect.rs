//! Single-path inspection: sample paths, parameter estimates, and one
//! coupled replication with its full decomposition.

use crate::coupling::{evaluation_grid, CouplingBundle, Sweep};
use crate::generators::{sample_cycles, true_greeks, ModelSpec};
use crate::greeks::{check_greek_identities, estimate_greeks, greeks_standard_errors};
use crate::model::RegenerativePath;
use crate::output::{fmt_float, Table};
use crate::rng::{RngStream, StreamRole};
use crate::{Error, Result};

/// `u, S_1..S_d` on a uniform grid of `[0, t]` for replication `rep`.
pub fn simulate_table(model: &ModelSpec, t: f64, step: f64, root_seed: u64, rep: u64) -> Result<Table> {
    if !(t > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidParameter("horizon and step must be positive".into()));
    }
    let sampler = model.sampler()?;
    let d = sampler.dimension();
    let mut rng = RngStream::replication(root_seed, rep, StreamRole::Cycles).rng();
    let mut path = RegenerativePath::new(d);
    while path.last_renewal() <= t {
        path.push(sampler.sample(&mut rng))?;
    }
    let mut header = vec!["u".to_string()];
    header.extend((1..=d).map(|i| format!("S_{i}")));
    let mut table = Table::new(&header);
    let n = (t / step).floor() as usize;
    let mut s = vec![0.0; d];
    for k in 0..=n {
        let u = k as f64 * step;
        path.evaluate_with_count(u, path.renewal_count(u), &mut s);
        let mut row = vec![fmt_float(u)];
        row.extend(s.iter().map(|v| fmt_float(*v)));
        table.push(row);
    }
    Ok(table)
}

/// Estimated parameters with jackknife standard errors, next to the closed
/// forms where available, plus identity residuals of the estimate.
pub fn greeks_table(model: &ModelSpec, p: f64, cycles: usize, groups: usize, root_seed: u64) -> Result<(Table, serde_json::Value)> {
    let sample = sample_cycles(model, cycles, RngStream::reserved(root_seed, 1))?;
    let est = estimate_greeks(&sample, p)?;
    let ses = greeks_standard_errors(&sample, p, groups)?;
    let truth = match true_greeks(model, p) {
        Ok(g) => Some(g.components()),
        Err(Error::Unavailable(_)) => None,
        Err(e) => return Err(e),
    };
    let mut table = Table::new(&["component", "estimate", "std_error", "true"]);
    for (i, c) in ses.iter().enumerate() {
        let tv = truth.as_ref().map_or(String::new(), |t| fmt_float(t[i].1));
        table.push(vec![c.name.clone(), fmt_float(c.estimate), fmt_float(c.std_error), tv]);
    }
    let report = serde_json::json!({
        "model": model.family(),
        "cycles": cycles,
        "estimate": est.to_report(),
        "residual_max": check_greek_identities(&est).max(),
    });
    Ok((table, report))
}

/// `u, S_1..S_d, W_1..W_d, phi1_1..phi8_d, deviation` over the evaluation grid.
pub fn couple_table(bundle: &CouplingBundle, t: f64, step: f64) -> Result<Table> {
    let d = bundle.dim();
    let mut header = vec!["u".to_string()];
    header.extend((1..=d).map(|i| format!("S_{i}")));
    header.extend((1..=d).map(|i| format!("W_{i}")));
    for q in 1..=8 {
        header.extend((1..=d).map(|i| format!("phi{q}_{i}")));
    }
    header.push("deviation".into());
    let mut table = Table::new(&header);
    let mut sweep = Sweep::new(bundle);
    let mut pv = sweep.values();
    for u in evaluation_grid(bundle, t, step, &[])? {
        sweep.eval(u, true, &mut pv)?;
        let mut row = vec![fmt_float(u)];
        row.extend(pv.s.iter().chain(&pv.w).chain(&pv.phi).map(|v| fmt_float(*v)));
        row.push(fmt_float(pv.deviation_norm()));
        table.push(row);
    }
    Ok(table)
}
