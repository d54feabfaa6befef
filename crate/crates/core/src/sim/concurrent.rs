//! Agents as threads that share nothing and talk only over channels.
//!
//! Runs are valid asynchronous executions but not reproducible: thread
//! interleaving decides which values each update sees.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;

use rand::Rng;

use super::model::concurrent_stream;
use super::AsynchronyModel;
use crate::error::{Error, Result};
use crate::linalg::{block_distance, BlockVector};
use crate::model::{QuadraticProgram, Regularization};

enum Inbox {
    Block { from: usize, data: Vec<f64>, computed_at: u64 },
    Stop,
}

enum Report {
    Done,
    Final { agent: usize, copy: Vec<f64>, updates: u64, sent: u64 },
}

#[derive(Debug, Clone)]
pub struct ConcurrentOutcome {
    /// Blocks as held by their owners when the run stopped.
    pub final_state: BlockVector,
    pub copies: Vec<Vec<f64>>,
    pub updates: Vec<u64>,
    pub messages_sent: u64,
    /// `‖final_state − fixed_point‖_{2,p}`.
    pub state_error: f64,
}

/// Runs until every agent has made at least `min_updates` updates. Only
/// `p_update`, `p_transmit`, `seed` and `discard_stale` of `model` are used;
/// delays come from the thread scheduler.
pub fn run_concurrent(
    qp: &QuadraticProgram,
    reg: &Regularization,
    gammas: &[f64],
    model: &AsynchronyModel,
    x0: &BlockVector,
    fixed_point: &BlockVector,
    min_updates: u64,
) -> Result<ConcurrentOutcome> {
    model.check()?;
    let n = qp.num_blocks();
    if gammas.len() != n || reg.num_blocks() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: gammas.len().min(reg.num_blocks()) });
    }
    if x0.partition() != qp.partition() || fixed_point.partition() != qp.partition() {
        return Err(Error::InvalidPartition("vector partition differs from the problem's".into()));
    }
    let (inbox_tx, inbox_rx): (Vec<Sender<Inbox>>, Vec<Receiver<Inbox>>) = (0..n).map(|_| channel()).unzip();
    let (report_tx, report_rx) = channel::<Report>();

    let mut copies = vec![Vec::new(); n];
    let mut updates = vec![0; n];
    let mut messages_sent = 0;
    thread::scope(|s| {
        for (i, rx) in inbox_rx.into_iter().enumerate() {
            let peers = inbox_tx.clone();
            let report = report_tx.clone();
            let x = x0.as_slice().to_vec();
            let (gamma, alpha) = (gammas[i], reg.alpha(i));
            s.spawn(move || agent_loop(qp, i, gamma, alpha, model, x, min_updates, rx, peers, report));
        }
        drop(report_tx);
        let mut done = 0;
        while done < n {
            match report_rx.recv() {
                Ok(Report::Done) => done += 1,
                Ok(Report::Final { .. }) | Err(_) => unreachable!("agents finish only after stop"),
            }
        }
        for tx in &inbox_tx {
            let _ = tx.send(Inbox::Stop);
        }
        for report in report_rx.iter() {
            if let Report::Final { agent, copy, updates: u, sent } = report {
                copies[agent] = copy;
                updates[agent] = u;
                messages_sent += sent;
            }
        }
    });

    let p = qp.partition();
    let state: Vec<f64> = (0..n).flat_map(|i| copies[i][p.range(i)].to_vec()).collect();
    let final_state = BlockVector::new(state, p.clone())?;
    let state_error = (0..n)
        .map(|i| block_distance(final_state.block(i), fixed_point.block(i)))
        .fold(0.0, f64::max);
    Ok(ConcurrentOutcome { final_state, copies, updates, messages_sent, state_error })
}

#[allow(clippy::too_many_arguments)]
fn agent_loop(
    qp: &QuadraticProgram,
    i: usize,
    gamma: f64,
    alpha: f64,
    model: &AsynchronyModel,
    mut x: Vec<f64>,
    min_updates: u64,
    inbox: Receiver<Inbox>,
    peers: Vec<Sender<Inbox>>,
    report: Sender<Report>,
) {
    let p = qp.partition();
    let n = p.num_blocks();
    let mut rng = concurrent_stream(model.seed, i);
    let mut held_at = vec![0u64; n];
    let (mut updates, mut sent, mut reported) = (0u64, 0u64, false);
    loop {
        while let Ok(msg) = inbox.try_recv() {
            match msg {
                Inbox::Block { from, data, computed_at } => {
                    if model.discard_stale && computed_at < held_at[from] {
                        continue;
                    }
                    held_at[from] = computed_at;
                    x[p.range(from)].copy_from_slice(&data);
                }
                Inbox::Stop => {
                    let _ = report.send(Report::Final { agent: i, copy: x, updates, sent });
                    return;
                }
            }
        }
        if rng.random_bool(model.p_update) {
            let g = qp.gradient_block_unchecked(&x, i, alpha);
            let block = &mut x[p.range(i)];
            block.iter_mut().zip(&g).for_each(|(v, gk)| *v -= gamma * gk);
            qp.constraint(i).project_in_place(block);
            updates += 1;
            held_at[i] = updates;
        }
        for (j, peer) in peers.iter().enumerate() {
            if j != i && rng.random_bool(model.p_transmit) {
                let _ = peer.send(Inbox::Block { from: i, data: x[p.range(i)].to_vec(), computed_at: updates });
                sent += 1;
            }
        }
        if !reported && updates >= min_updates {
            reported = true;
            let _ = report.send(Report::Done);
        }
        thread::yield_now();
    }
}
