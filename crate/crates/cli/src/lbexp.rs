use std::io::Write;

use dymatch::adversary::build_lb_instance;
use dymatch::driver::{run_lb_trial, LbTrial};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Serialize)]
struct Record<'a> {
    trial: usize,
    #[serde(flatten)]
    result: &'a LbTrial,
    ok: bool,
}

/// One JSONL record per trial. `ℓ = 0` writes nothing.
pub fn lbexp(n: usize, k: usize, ell: usize, beta: usize, trials: usize, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Dimension errors surface even when nothing is run.
    build_lb_instance(n, k, ell, &mut rng.clone()).map_err(CliError::usage)?;
    if ell == 0 {
        return Ok(());
    }
    let mut failed = Vec::new();
    for trial in 0..trials {
        let inst = build_lb_instance(n, k, ell, &mut rng).map_err(CliError::usage)?;
        let result = run_lb_trial(&inst, beta, seed.wrapping_add(trial as u64))
            .map_err(|e| CliError::Algorithm(format!("trial {trial}: {e}")))?;
        let ok = result.ok();
        serde_json::to_writer(&mut *out, &Record { trial, result: &result, ok }).map_err(CliError::io)?;
        writeln!(out).map_err(CliError::io)?;
        if !ok {
            failed.push(trial);
        }
    }
    out.flush().map_err(CliError::io)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Oracle(format!("lower-bound checks failed in trials {failed:?}")))
    }
}
