//! Singleton detection, resolvable-doubleton resolution and the worklist
//! peeling decoder, plus the single-pass Singleton-Only decoder.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitvec::BitVec;
use crate::channel::{MeasurementSet, SupportVector};
use crate::ecc::RobustSignatureSpec;
use crate::error::{Error, Result};
use crate::pool_design::{DesignCode, PoolDesign};
use crate::signature::{SignatureCode, SignatureSpec};

/// Per-node decoding rules a peeling decoder needs from a signature family.
pub trait NodeDecoder: SignatureCode {
    fn detect_singleton(&self, z: &BitVec) -> Option<u64>;
    fn resolve_doubleton(&self, z: &BitVec, known: u64) -> Option<u64>;
}

/// Noiseless singleton test: weight must equal `sections/2 * L`; the first
/// block names the item and, with four or six sections, the check blocks
/// must agree with `s1` / `s2`.
pub fn detect_singleton(z: &BitVec, spec: &SignatureSpec) -> Option<u64> {
    if !spec.complemented() || z.len() != spec.column_len() {
        return None;
    }
    let l = spec.bits();
    let blocks = spec.sections().index_blocks();
    if z.count_ones() != blocks * l {
        return None;
    }
    let mut found = [0u64; 3];
    for (b, slot) in found.iter_mut().enumerate().take(blocks) {
        *slot = z.read_uint(2 * b * l, l) + 1;
    }
    checks_hold(spec, &found[..blocks]).then_some(found[0])
}

fn checks_hold(spec: &SignatureSpec, found: &[u64]) -> bool {
    let (s1, s2) = spec.checks_unchecked(found[0]);
    match found.len() {
        1 => true,
        2 => s1 == found[1],
        _ => s1 == found[1] && s2 == found[2],
    }
}

/// Recovers the block of the unknown item from a complement pair: plain
/// section where the known block has a 0, inverted complement where it has a 1.
fn extract_block(z: &BitVec, known_col: &BitVec, pair: usize, l: usize) -> u64 {
    let plain = 2 * pair * l;
    let comp = plain + l;
    let mut v = 0u64;
    for j in 0..l {
        let bit = if known_col.get(plain + j) {
            !z.get(comp + j)
        } else {
            z.get(plain + j)
        };
        v = (v << 1) | bit as u64;
    }
    v
}

/// Hypothesizes `z = u_known OR u_other` and returns `other` when the check
/// equations confirm it.
pub fn resolve_doubleton(z: &BitVec, known: u64, spec: &SignatureSpec) -> Option<u64> {
    if !spec.complemented() || z.len() != spec.column_len() || known == 0 || known > spec.n() {
        return None;
    }
    let l = spec.bits();
    let blocks = spec.sections().index_blocks();
    let known_col = spec.column(known);
    let mut found = [0u64; 3];
    for (pair, slot) in found.iter_mut().enumerate().take(blocks) {
        *slot = extract_block(z, &known_col, pair, l) + 1;
    }
    (found[0] != known && checks_hold(spec, &found[..blocks])).then_some(found[0])
}

impl NodeDecoder for SignatureSpec {
    fn detect_singleton(&self, z: &BitVec) -> Option<u64> {
        detect_singleton(z, self)
    }

    fn resolve_doubleton(&self, z: &BitVec, known: u64) -> Option<u64> {
        resolve_doubleton(z, known, self)
    }
}

impl NodeDecoder for RobustSignatureSpec {
    fn detect_singleton(&self, z: &BitVec) -> Option<u64> {
        self.robust_detect_singleton(z)
    }

    fn resolve_doubleton(&self, z: &BitVec, known: u64) -> Option<u64> {
        self.robust_resolve_doubleton(z, known)
    }
}

impl NodeDecoder for DesignCode {
    fn detect_singleton(&self, z: &BitVec) -> Option<u64> {
        match self {
            DesignCode::Plain(s) => s.detect_singleton(z),
            DesignCode::Robust(r) => r.detect_singleton(z),
        }
    }

    fn resolve_doubleton(&self, z: &BitVec, known: u64) -> Option<u64> {
        match self {
            DesignCode::Plain(s) => s.resolve_doubleton(z, known),
            DesignCode::Robust(r) => r.resolve_doubleton(z, known),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionKind {
    Singleton,
    Doubleton,
}

/// A newly declared defective item and the node that revealed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Resolution {
    pub node: usize,
    pub item: u64,
    pub kind: ResolutionKind,
    pub iteration: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DecodeResult {
    pub identified: BTreeSet<u64>,
    pub iterations: usize,
    pub resolved_singletons: usize,
    pub resolved_doubletons: usize,
    /// Nonzero nodes left neither resolved nor saturated. Under noise this
    /// includes zerotons, since their vectors carry flipped bits.
    pub unresolved_right_nodes: usize,
    /// Node-decode attempts (singleton tests plus doubleton hypotheses).
    pub attempts: usize,
    pub events: Vec<Resolution>,
}

impl DecodeResult {
    /// Declared items absent from the ground truth.
    pub fn false_positives(&self, truth: &SupportVector) -> Vec<u64> {
        self.identified.iter().copied().filter(|&i| !truth.contains(i)).collect()
    }

    pub fn missed(&self, truth: &SupportVector) -> Vec<u64> {
        truth.items().iter().copied().filter(|i| !self.identified.contains(i)).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NodeStatus {
    #[default]
    Pending,
    Resolved,
    /// Two or more identified neighbors; nothing new can be read off.
    Saturated,
}

/// Only the first identified neighbor matters: a second one saturates the node.
#[derive(Clone, Copy, Debug, Default)]
pub struct RightNodeState {
    pub status: NodeStatus,
    pub first_identified: Option<u64>,
    pub identified_count: usize,
}

/// Order in which queued right nodes are processed after the singleton pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WorkOrder {
    #[default]
    Fifo,
    /// Random pick from the pending queue; for order-invariance tests.
    Shuffled(u64),
}

fn check_shapes(ms: &MeasurementSet, design: &PoolDesign) -> Result<()> {
    if ms.vectors.len() != design.right_nodes() {
        return Err(Error::LengthMismatch {
            expected: design.right_nodes(),
            actual: ms.vectors.len(),
        });
    }
    if ms.bits != design.tests_per_node() || ms.vectors.iter().any(|v| v.len() != ms.bits) {
        return Err(Error::LengthMismatch {
            expected: design.tests_per_node(),
            actual: ms.bits,
        });
    }
    Ok(())
}

struct Peeler<'a> {
    ms: &'a MeasurementSet,
    design: &'a PoolDesign,
    states: Vec<RightNodeState>,
    result: DecodeResult,
    queue: VecDeque<(usize, usize)>,
}

impl Peeler<'_> {
    fn declare(&mut self, item: u64, node: usize, kind: ResolutionKind, iteration: usize) {
        if !self.result.identified.insert(item) {
            return;
        }
        self.result.events.push(Resolution {
            node,
            item,
            kind,
            iteration,
        });
        for r in self.design.neighbors(item) {
            let state = &mut self.states[r];
            state.first_identified.get_or_insert(item);
            state.identified_count += 1;
            self.queue.push_back((r, iteration + 1));
        }
    }

    fn singleton_pass(&mut self) {
        let code = self.design.code();
        for r in 0..self.ms.vectors.len() {
            self.result.attempts += 1;
            if let Some(item) = code.detect_singleton(&self.ms.vectors[r]) {
                self.states[r].status = NodeStatus::Resolved;
                self.result.resolved_singletons += 1;
                self.declare(item, r, ResolutionKind::Singleton, 1);
            }
        }
        self.result.iterations = usize::from(!self.ms.vectors.is_empty());
    }

    fn process(&mut self, node: usize, generation: usize) {
        let state = &mut self.states[node];
        if state.status != NodeStatus::Pending {
            return;
        }
        match (state.identified_count, state.first_identified) {
            (0, _) | (_, None) => {}
            (1, Some(known)) => {
                self.result.attempts += 1;
                self.result.iterations = self.result.iterations.max(generation);
                if let Some(item) = self.design.code().resolve_doubleton(&self.ms.vectors[node], known) {
                    self.states[node].status = NodeStatus::Resolved;
                    self.result.resolved_doubletons += 1;
                    self.declare(item, node, ResolutionKind::Doubleton, generation);
                }
            }
            _ => state.status = NodeStatus::Saturated,
        }
    }

    fn run(mut self, order: WorkOrder) -> DecodeResult {
        self.singleton_pass();
        match order {
            WorkOrder::Fifo => {
                while let Some((node, generation)) = self.queue.pop_front() {
                    self.process(node, generation);
                }
            }
            WorkOrder::Shuffled(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                while !self.queue.is_empty() {
                    let pick = rng.gen_range(0..self.queue.len());
                    let (node, generation) = self.queue.swap_remove_back(pick).unwrap();
                    self.process(node, generation);
                }
            }
        }
        self.result.unresolved_right_nodes = self
            .states
            .iter()
            .zip(&self.ms.vectors)
            .filter(|(s, z)| s.status == NodeStatus::Pending && !z.is_zero())
            .count();
        self.result
    }
}

/// Iterative peeling: a singleton pass over every node, then worklist-driven
/// doubleton resolution. Each newly identified item queues its right nodes; a
/// node is hypothesized as a doubleton only while it has exactly one
/// identified neighbor.
pub fn peel(ms: &MeasurementSet, design: &PoolDesign) -> Result<DecodeResult> {
    peel_with(ms, design, WorkOrder::Fifo)
}

pub fn peel_with(ms: &MeasurementSet, design: &PoolDesign, order: WorkOrder) -> Result<DecodeResult> {
    check_shapes(ms, design)?;
    let peeler = Peeler {
        ms,
        design,
        states: vec![RightNodeState::default(); ms.vectors.len()],
        result: DecodeResult::default(),
        queue: VecDeque::with_capacity(ms.vectors.len()),
    };
    Ok(peeler.run(order))
}

/// Single pass of singleton detection over every node, no iteration.
pub fn decode_singleton_only(ms: &MeasurementSet, design: &PoolDesign) -> Result<DecodeResult> {
    check_shapes(ms, design)?;
    let code = design.code();
    let mut result = DecodeResult {
        iterations: usize::from(!ms.vectors.is_empty()),
        ..Default::default()
    };
    for (r, z) in ms.vectors.iter().enumerate() {
        result.attempts += 1;
        match code.detect_singleton(z) {
            Some(item) => {
                result.resolved_singletons += 1;
                if result.identified.insert(item) {
                    result.events.push(Resolution {
                        node: r,
                        item,
                        kind: ResolutionKind::Singleton,
                        iteration: 1,
                    });
                }
            }
            None if !z.is_zero() => result.unresolved_right_nodes += 1,
            None => {}
        }
    }
    Ok(result)
}
