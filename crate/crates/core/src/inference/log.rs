use std::io::{self, Write};

use crate::TargetState;

/// One proposal made by a sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalRecord {
    pub timestep: usize,
    pub chain: usize,
    pub index: usize,
    pub accepted: bool,
    pub state: TargetState,
    pub rho: f64,
    /// Pseudo-likelihood for the ABC samplers, exact likelihood for the
    /// baseline, in log space.
    pub log_score: f64,
}

/// One attempted tempering swap from chain `hot` into chain `cold`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapRecord {
    pub timestep: usize,
    pub sweep: usize,
    pub cold: usize,
    pub hot: usize,
    pub hot_state: TargetState,
    pub rho_hot: f64,
    pub eps_cold: f64,
    pub accepted: bool,
}

fn state_header(n_targets: usize) -> String {
    (0..n_targets)
        .map(|j| format!("x{j},y{j},vx{j},vy{j}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn state_fields(state: &TargetState) -> String {
    state
        .positions
        .iter()
        .zip(&state.velocities)
        .map(|(p, v)| format!("{:.6},{:.6},{:.6},{:.6}", p.x, p.y, v.x, v.y))
        .collect::<Vec<_>>()
        .join(",")
}

/// CSV with one row per proposal.
pub fn write_particle_log<W: Write>(out: &mut W, records: &[ProposalRecord]) -> io::Result<()> {
    let n_targets = records.first().map_or(0, |r| r.state.n_targets());
    writeln!(
        out,
        "timestep,chain,index,accepted,{},rho,f,log_f",
        state_header(n_targets)
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6}",
            r.timestep,
            r.chain,
            r.index,
            u8::from(r.accepted),
            state_fields(&r.state),
            r.rho,
            r.log_score.exp(),
            r.log_score
        )?;
    }
    Ok(())
}

/// CSV with one row per attempted swap.
pub fn write_swap_log<W: Write>(out: &mut W, records: &[SwapRecord]) -> io::Result<()> {
    let n_targets = records.first().map_or(0, |r| r.hot_state.n_targets());
    writeln!(
        out,
        "timestep,sweep,cold,hot,rho_hot,eps_cold,accepted,{}",
        state_header(n_targets)
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{},{}",
            r.timestep,
            r.sweep,
            r.cold,
            r.hot,
            r.rho_hot,
            r.eps_cold,
            u8::from(r.accepted),
            state_fields(&r.hot_state)
        )?;
    }
    Ok(())
}
