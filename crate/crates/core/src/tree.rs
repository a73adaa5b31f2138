//! Family-tree simulation and skeleton extraction.
//!
//! Trees are generated breadth-first into a flat arena: children of a node
//! are contiguous, generations are contiguous, and parents always precede
//! children, so skeleton membership is a single backward sweep. Nodes at
//! the horizon generation draw neither offspring nor marks; lineages alive
//! there stand in for infinite lineages.
//!
//! Every simulator draws from the RNG in node order (offspring count first,
//! then the mark when the rule allows one), so a (law, rule, horizon, cap,
//! seed) tuple reproduces a bit-identical tree. Replica streams come from
//! [`replica_rng`]: one master seed, one counter-indexed stream per tree,
//! valid under any parallel schedule.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mutation::SequentialModel;
use crate::offspring::{MarkingRule, OffspringLaw};

/// Sentinel parent index of the root.
pub const NO_PARENT: u32 = u32::MAX;

/// Default per-tree node cap.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// One node of a family tree.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub parent: u32,
    pub first_child: u32,
    pub child_count: u16,
    pub marked: bool,
    /// 0 = wild type; mutation chains count upward, the absorbing target
    /// type is the chain length.
    pub type_id: u8,
}

/// A simulated family tree in breadth-first arena layout.
#[derive(Debug, Clone, Default)]
pub struct FamilyTree {
    nodes: Vec<Node>,
    /// Generation g occupies `nodes[gen_offsets[g] .. gen_offsets[g+1]]`.
    gen_offsets: Vec<u32>,
    /// Horizon or node cap reached.
    pub truncated: bool,
    /// Node cap reached (implies `truncated`).
    pub cap_hit: bool,
}

impl FamilyTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of populated generation levels (root counts as one).
    pub fn levels(&self) -> usize {
        self.gen_offsets.len().saturating_sub(1)
    }

    /// Generation of node `i`.
    pub fn generation_of(&self, i: u32) -> u32 {
        (self.gen_offsets.partition_point(|&o| o <= i) - 1) as u32
    }

    /// Node index range of generation `g`, empty when out of range.
    pub fn generation_range(&self, g: usize) -> std::ops::Range<usize> {
        if g + 1 >= self.gen_offsets.len() {
            return 0..0;
        }
        self.gen_offsets[g] as usize..self.gen_offsets[g + 1] as usize
    }

    pub fn children(&self, i: usize) -> std::ops::Range<usize> {
        let n = &self.nodes[i];
        n.first_child as usize..n.first_child as usize + n.child_count as usize
    }

    /// First generation with no particles, when the tree died within the
    /// window; `None` when it was truncated by the horizon or the cap.
    pub fn extinction_generation(&self) -> Option<u32> {
        if self.truncated {
            None
        } else {
            Some(self.levels() as u32)
        }
    }

    /// Smallest generation containing a mark; BFS layout makes the first
    /// marked node in index order the earliest one.
    pub fn first_mark_generation(&self) -> Option<u32> {
        self.nodes
            .iter()
            .position(|n| n.marked)
            .map(|i| self.generation_of(i as u32))
    }

    pub fn total_marked(&self) -> u32 {
        self.nodes.iter().filter(|n| n.marked).count() as u32
    }

    fn clear(&mut self) {
        self.nodes.clear();
        self.gen_offsets.clear();
        self.truncated = false;
        self.cap_hit = false;
    }

    /// Writes one CSV line per node: `id,parent,generation,marked,type`.
    /// Intended for debugging; refuse trees above `max_nodes` (default
    /// guard 10^4) at the call site.
    pub fn write_trace_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "id,parent,generation,marked,type")?;
        for (i, n) in self.nodes.iter().enumerate() {
            let parent = if n.parent == NO_PARENT {
                String::new()
            } else {
                n.parent.to_string()
            };
            writeln!(
                w,
                "{},{},{},{},{}",
                i,
                parent,
                self.generation_of(i as u32),
                n.marked as u8,
                n.type_id
            )?;
        }
        Ok(())
    }
}

/// RNG stream for replica `index` under `master_seed`: same master, one
/// independent counter-indexed stream per replica.
pub fn replica_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[inline]
fn sample_count(cum: &[f64], u: f64) -> usize {
    // supports are small; a linear scan beats binary search here
    for (k, &c) in cum.iter().enumerate() {
        if u < c {
            return k;
        }
    }
    cum.len() - 1
}

/// Reusable single-type tree simulator: law and rule are fixed, the
/// cumulative table is precomputed, trees stream out per RNG.
#[derive(Debug, Clone)]
pub struct TreeSimulator {
    law: OffspringLaw,
    rule: MarkingRule,
    cum: Vec<f64>,
    pub horizon: u32,
    pub node_cap: usize,
}

impl TreeSimulator {
    pub fn new(
        law: OffspringLaw,
        rule: MarkingRule,
        horizon: u32,
        node_cap: usize,
    ) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::Domain {
                what: "horizon",
                value: horizon as f64,
            });
        }
        if node_cap < 1 {
            return Err(Error::Domain {
                what: "node cap",
                value: node_cap as f64,
            });
        }
        rule.check_alignment(&law)?;
        let cum = law.cumulative();
        Ok(Self {
            law,
            rule,
            cum,
            horizon,
            node_cap,
        })
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    pub fn rule(&self) -> &MarkingRule {
        &self.rule
    }

    #[inline]
    fn draw<R: Rng>(&self, rng: &mut R) -> (usize, bool) {
        let k = sample_count(&self.cum, rng.random::<f64>());
        let a = self.rule.a()[k];
        let marked = a > 0.0 && rng.random::<f64>() < a;
        (k, marked)
    }

    /// Generates a fresh tree.
    pub fn simulate<R: Rng>(&self, rng: &mut R) -> FamilyTree {
        let mut tree = FamilyTree::default();
        self.simulate_into(rng, &mut tree);
        tree
    }

    /// Generates a tree into a reusable buffer.
    pub fn simulate_into<R: Rng>(&self, rng: &mut R, tree: &mut FamilyTree) {
        tree.clear();
        tree.nodes.push(Node {
            parent: NO_PARENT,
            first_child: 1,
            child_count: 0,
            marked: false,
            type_id: 0,
        });
        tree.gen_offsets.push(0);
        tree.gen_offsets.push(1);
        'generations: for g in 0..self.horizon {
            let range = tree.generation_range(g as usize);
            if range.is_empty() {
                break;
            }
            for i in range {
                let (k, marked) = self.draw(rng);
                let first_child = tree.nodes.len() as u32;
                if tree.nodes.len() + k > self.node_cap {
                    tree.nodes[i].marked = marked;
                    tree.truncated = true;
                    tree.cap_hit = true;
                    break 'generations;
                }
                let node = &mut tree.nodes[i];
                node.marked = marked;
                node.first_child = first_child;
                node.child_count = k as u16;
                for _ in 0..k {
                    tree.nodes.push(Node {
                        parent: i as u32,
                        first_child: 0,
                        child_count: 0,
                        marked: false,
                        type_id: 0,
                    });
                }
            }
            let end = tree.nodes.len() as u32;
            if end == *tree.gen_offsets.last().unwrap() {
                // no children anywhere: extinct at generation g + 1
                return;
            }
            tree.gen_offsets.push(end);
        }
        if !tree.cap_hit {
            // horizon reached with live particles
            tree.truncated = true;
        } else {
            // close the partially built generation
            let end = tree.nodes.len() as u32;
            if end > *tree.gen_offsets.last().unwrap() {
                tree.gen_offsets.push(end);
            }
        }
    }

    /// Streams the generation counts without building an arena and decides
    /// whether the skeleton is non-empty (a mark appeared, or the tree is
    /// alive at the horizon). Exits at the first mark; draws up to that
    /// point match [`Self::simulate`] exactly.
    pub fn survival_outcome<R: Rng>(&self, rng: &mut R) -> StreamOutcome {
        self.stream(rng, true)
    }

    /// Streams until the first mark, recording its generation; used for
    /// escape-time sampling.
    pub fn first_mark_outcome<R: Rng>(&self, rng: &mut R) -> StreamOutcome {
        self.stream(rng, true)
    }

    /// Streams the whole window counting every mark (no early exit); used
    /// for leaf-count sampling.
    pub fn marked_count_outcome<R: Rng>(&self, rng: &mut R) -> StreamOutcome {
        self.stream(rng, false)
    }

    fn stream<R: Rng>(&self, rng: &mut R, stop_at_first_mark: bool) -> StreamOutcome {
        let mut out = StreamOutcome::default();
        let mut current = 1u64; // particles in this generation
        let mut drawn = 1u64;
        for g in 0..self.horizon {
            let mut next = 0u64;
            for _ in 0..current {
                let (k, marked) = self.draw(rng);
                if marked {
                    out.total_marked += 1;
                    if out.first_mark_generation.is_none() {
                        out.first_mark_generation = Some(g);
                    }
                    if stop_at_first_mark {
                        return out;
                    }
                }
                next += k as u64;
            }
            drawn += next;
            if drawn > self.node_cap as u64 {
                out.cap_hit = true;
                return out;
            }
            if next == 0 {
                out.extinction_generation = Some(g + 1);
                return out;
            }
            current = next;
        }
        out.alive_at_horizon = true;
        out
    }
}

/// Outcome of a streamed (arena-free) simulation.
#[derive(Debug, Clone, Copy, Default)]
pub struct StreamOutcome {
    pub first_mark_generation: Option<u32>,
    pub total_marked: u32,
    pub extinction_generation: Option<u32>,
    pub alive_at_horizon: bool,
    pub cap_hit: bool,
}

impl StreamOutcome {
    /// Skeleton non-emptiness under the horizon proxy. Trees that hit the
    /// node cap count as alive (the bias is one-sided and reported).
    pub fn nonempty(&self) -> bool {
        self.first_mark_generation.is_some() || self.alive_at_horizon || self.cap_hit
    }
}

/// Simulates one tree; convenience wrapper over [`TreeSimulator`].
pub fn simulate_tree<R: Rng>(
    law: &OffspringLaw,
    rule: &MarkingRule,
    horizon: u32,
    node_cap: usize,
    rng: &mut R,
) -> Result<FamilyTree> {
    Ok(TreeSimulator::new(law.clone(), rule.clone(), horizon, node_cap)?.simulate(rng))
}

/// The skeleton of a family tree: marked lineages plus lineages alive at
/// the horizon.
#[derive(Debug, Clone)]
pub struct SkeletonTree {
    pub empty: bool,
    /// `generation_counts[n]` = number of skeleton particles at generation n.
    pub generation_counts: Vec<u32>,
    /// Family-tree indices of skeleton members, in BFS order.
    pub members: Vec<u32>,
    /// Family-tree indices of marked skeleton leaves.
    pub tips: Vec<u32>,
}

/// Extracts the skeleton: the union of root-to-node paths ending at marked
/// nodes or at nodes in the horizon generation.
pub fn extract_skeleton(tree: &FamilyTree, horizon: u32) -> SkeletonTree {
    let n = tree.len();
    let mut keep = vec![false; n];
    let horizon_start = if (tree.levels() as u32) == horizon + 1 {
        tree.generation_range(horizon as usize).start
    } else {
        usize::MAX
    };
    for i in (0..n).rev() {
        let node = &tree.nodes()[i];
        let mut k = node.marked || i >= horizon_start;
        if !k {
            for c in tree.children(i) {
                if keep[c] {
                    k = true;
                    break;
                }
            }
        }
        keep[i] = k;
    }
    let mut members = Vec::new();
    let mut generation_counts = vec![0u32; tree.levels()];
    let mut tips = Vec::new();
    for (i, &k) in keep.iter().enumerate() {
        if !k {
            continue;
        }
        members.push(i as u32);
        generation_counts[tree.generation_of(i as u32) as usize] += 1;
        let node = &tree.nodes()[i];
        if node.marked && !tree.children(i).any(|c| keep[c]) {
            tips.push(i as u32);
        }
    }
    let empty = !keep.first().copied().unwrap_or(false);
    if empty {
        generation_counts.clear();
    }
    SkeletonTree {
        empty,
        generation_counts,
        members,
        tips,
    }
}

/// Per-tree observables at requested scaled times.
#[derive(Debug, Clone)]
pub struct TreeObservables {
    pub nonempty: bool,
    pub first_mark_generation: Option<u32>,
    pub total_marked: u32,
    pub extinction_generation: Option<u32>,
    pub skeleton_counts_at: Vec<ScaledCount>,
}

/// Skeleton size at scaled time `t`, i.e. at generation `floor(t / tau)`.
/// `count` is `None` when that generation lies beyond the simulated window
/// (censored), and 0 past extinction.
#[derive(Debug, Clone, Copy)]
pub struct ScaledCount {
    pub t: f64,
    pub generation: u32,
    pub count: Option<u32>,
}

/// Collects observables from a tree and its skeleton. `tau` converts
/// scaled time to generations: time `t` reads generation `floor(t / tau)`.
pub fn observe(
    tree: &FamilyTree,
    skeleton: &SkeletonTree,
    scaled_times: &[f64],
    tau: f64,
) -> Result<TreeObservables> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
        });
    }
    let max_observed = tree.levels() as u32;
    let mut counts = Vec::with_capacity(scaled_times.len());
    for &t in scaled_times {
        if !(t >= 0.0) {
            return Err(Error::Domain {
                what: "scaled time",
                value: t,
            });
        }
        let generation = (t / tau).floor() as u32;
        let count = if tree.truncated && generation >= max_observed {
            None // beyond the horizon: censored
        } else {
            Some(
                skeleton
                    .generation_counts
                    .get(generation as usize)
                    .copied()
                    .unwrap_or(0),
            )
        };
        counts.push(ScaledCount {
            t,
            generation,
            count,
        });
    }
    Ok(TreeObservables {
        nonempty: !skeleton.empty,
        first_mark_generation: tree.first_mark_generation(),
        total_marked: tree.total_marked(),
        extinction_generation: tree.extinction_generation(),
        skeleton_counts_at: counts,
    })
}

/// Direct two-type simulation of the binomial mutation model, viewed as a
/// marked wild-type tree: every node draws a total offspring count from
/// `total_law`, thins each daughter into a mutant with probability `pi`,
/// keeps the wild daughters, and is marked when at least one daughter
/// mutated. The independent cross-check of the derived `(p, A)` route.
pub struct BinomialTreeSimulator {
    cum: Vec<f64>,
    pi: f64,
    pub horizon: u32,
    pub node_cap: usize,
}

impl BinomialTreeSimulator {
    pub fn new(total_law: &OffspringLaw, pi: f64, horizon: u32, node_cap: usize) -> Result<Self> {
        if !(0.0 < pi && pi < 1.0) {
            return Err(Error::Domain {
                what: "mutation probability pi",
                value: pi,
            });
        }
        Ok(Self {
            cum: total_law.cumulative(),
            pi,
            horizon,
            node_cap,
        })
    }

    /// Streamed survival outcome of the marked wild-type skeleton.
    pub fn survival_outcome<R: Rng>(&self, rng: &mut R) -> StreamOutcome {
        let mut out = StreamOutcome::default();
        let mut current = 1u64;
        let mut drawn = 1u64;
        for g in 0..self.horizon {
            let mut next = 0u64;
            for _ in 0..current {
                let k_total = sample_count(&self.cum, rng.random::<f64>());
                let mut wild = 0u64;
                let mut mutated = false;
                for _ in 0..k_total {
                    if rng.random::<f64>() < self.pi {
                        mutated = true;
                    } else {
                        wild += 1;
                    }
                }
                if mutated {
                    out.total_marked += 1;
                    if out.first_mark_generation.is_none() {
                        out.first_mark_generation = Some(g);
                    }
                    return out;
                }
                next += wild;
            }
            drawn += next;
            if drawn > self.node_cap as u64 {
                out.cap_hit = true;
                return out;
            }
            if next == 0 {
                out.extinction_generation = Some(g + 1);
                return out;
            }
            current = next;
        }
        out.alive_at_horizon = true;
        out
    }
}

/// Outcome of a sequential-chain simulation.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialOutcome {
    /// Generation of the first target-type particle, if one appeared.
    pub first_target_generation: Option<u32>,
    /// Wild-type population alive at the horizon.
    pub wild_alive_at_horizon: bool,
    pub cap_hit: bool,
}

impl SequentialOutcome {
    /// Wild-type skeleton non-emptiness: a target appeared (equivalently,
    /// some wild node carries a successful-mutant mark) or the wild type
    /// survived the window.
    pub fn nonempty(&self) -> bool {
        self.first_target_generation.is_some() || self.wild_alive_at_horizon || self.cap_hit
    }
}

/// Streamed simulation of an irreversible mutation chain.
///
/// All types evolve generation-synchronously. A type-`j` node draws its
/// total count from level `j`'s law and each daughter mutates to type
/// `j + 1` with that level's probability; daughters of the last level's
/// mutations are absorbing target particles.
///
/// Wild-type survival is assessed at `wild_horizon`, but the system keeps
/// running to `total_horizon`: a wild node's mark means its mutant line
/// eventually produces a target, and those lines resolve on their own
/// (faster) clocks, so target detection needs a settle window beyond the
/// wild one. Exits at the first target; with `stop_when_nonempty` it also
/// exits once wild survival is established. Nodes are processed in arena
/// order, so up to the first divergence event the draws match
/// [`simulate_sequential_tree`] on the same stream.
pub fn simulate_sequential_escape<R: Rng>(
    model: &SequentialModel,
    wild_horizon: u32,
    total_horizon: u32,
    node_cap: usize,
    stop_when_nonempty: bool,
    rng: &mut R,
) -> SequentialOutcome {
    let b = model.levels.len() as u8;
    let cums: Vec<Vec<f64>> = model.levels.iter().map(|l| l.law.cumulative()).collect();
    let pis: Vec<f64> = model.levels.iter().map(|l| l.mutation_prob).collect();
    let mut out = SequentialOutcome::default();
    // types of the current generation, in arena order
    let mut current: Vec<u8> = vec![0];
    let mut drawn = 1u64;
    for g in 0..total_horizon {
        if g == wild_horizon {
            out.wild_alive_at_horizon = current.contains(&0);
            if out.wild_alive_at_horizon && stop_when_nonempty {
                return out;
            }
        }
        let mut next: Vec<u8> = Vec::new();
        for &t in &current {
            if t == b {
                continue; // target type is absorbing
            }
            let k = sample_count(&cums[t as usize], rng.random::<f64>());
            if drawn + k as u64 > node_cap as u64 {
                out.cap_hit = true;
                return out;
            }
            for _ in 0..k {
                let child_type = if rng.random::<f64>() < pis[t as usize] {
                    t + 1
                } else {
                    t
                };
                if child_type == b {
                    out.first_target_generation = Some(g + 1);
                    return out;
                }
                next.push(child_type);
            }
            drawn += k as u64;
        }
        if next.is_empty() {
            return out;
        }
        current = next;
    }
    if total_horizon == wild_horizon {
        out.wild_alive_at_horizon = current.contains(&0);
    }
    out
}

/// Default settle window: ten limit-time units per non-wild level, on each
/// level's own clock.
pub fn sequential_settle_window(level_taus: &[f64]) -> u32 {
    level_taus
        .iter()
        .skip(1)
        .map(|&tau| (10.0 / tau).ceil() as u32)
        .sum()
}

/// Arena-building variant of the sequential simulation with marks resolved
/// by a backward sweep: a target node is successful; a non-wild node is
/// successful when marked or when a same-type child is successful; a node
/// is marked when a next-type daughter is successful (for the last level,
/// when it has a target daughter).
pub fn simulate_sequential_tree<R: Rng>(
    model: &SequentialModel,
    horizon: u32,
    node_cap: usize,
    rng: &mut R,
) -> FamilyTree {
    let b = model.levels.len() as u8;
    let cums: Vec<Vec<f64>> = model.levels.iter().map(|l| l.law.cumulative()).collect();
    let pis: Vec<f64> = model.levels.iter().map(|l| l.mutation_prob).collect();
    let mut tree = FamilyTree::default();
    tree.nodes.push(Node {
        parent: NO_PARENT,
        first_child: 1,
        child_count: 0,
        marked: false,
        type_id: 0,
    });
    tree.gen_offsets.push(0);
    tree.gen_offsets.push(1);
    'generations: for g in 0..horizon {
        let range = tree.generation_range(g as usize);
        if range.is_empty() {
            break;
        }
        for i in range {
            let t = tree.nodes[i].type_id;
            if t == b {
                continue; // target type is absorbing
            }
            let k = sample_count(&cums[t as usize], rng.random::<f64>());
            if tree.nodes.len() + k > node_cap {
                tree.truncated = true;
                tree.cap_hit = true;
                break 'generations;
            }
            tree.nodes[i].first_child = tree.nodes.len() as u32;
            tree.nodes[i].child_count = k as u16;
            for _ in 0..k {
                let child_type = if rng.random::<f64>() < pis[t as usize] {
                    t + 1
                } else {
                    t
                };
                tree.nodes.push(Node {
                    parent: i as u32,
                    first_child: 0,
                    child_count: 0,
                    marked: false,
                    type_id: child_type,
                });
            }
        }
        let end = tree.nodes.len() as u32;
        if end == *tree.gen_offsets.last().unwrap() {
            resolve_sequential_marks(&mut tree, b);
            return tree;
        }
        tree.gen_offsets.push(end);
    }
    if tree.cap_hit {
        let end = tree.nodes.len() as u32;
        if end > *tree.gen_offsets.last().unwrap() {
            tree.gen_offsets.push(end);
        }
    } else {
        tree.truncated = true;
    }
    resolve_sequential_marks(&mut tree, b);
    tree
}

fn resolve_sequential_marks(tree: &mut FamilyTree, target_type: u8) {
    let n = tree.len();
    let mut successful = vec![false; n];
    for i in (0..n).rev() {
        let t = tree.nodes[i].type_id;
        if t == target_type {
            successful[i] = true;
            continue;
        }
        let mut marked = false;
        let mut own_line = false;
        for c in tree.children(i) {
            let ct = tree.nodes[c].type_id;
            if ct == t + 1 && successful[c] {
                marked = true;
            } else if ct == t && successful[c] {
                own_line = true;
            }
        }
        tree.nodes[i].marked = marked;
        successful[i] = marked || own_line;
    }
}
