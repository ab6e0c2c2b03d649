//! Model partitioning, the cross-product operator, and aggregation of
//! partial predictions.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::block::SampleBlock;
use crate::engine::{lower, Engine, EngineKind};
use crate::error::{Error, Result};
use crate::model::{Aggregation, Forest};

/// A subset of a forest's trees together with their original indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPartition {
    pub partition_id: usize,
    pub tree_indices: Vec<usize>,
    /// The selected trees, in `tree_indices` order.
    pub forest: Forest,
}

/// Round-robin assignment of trees to `k` partitions: tree `t` goes to
/// partition `t % k`. Sizes differ by at most one. Partitions that would
/// be empty (more partitions than trees) are not created.
pub fn partition_model(forest: &Forest, k: usize) -> Vec<ModelPartition> {
    let k = k.max(1).min(forest.trees.len().max(1));
    (0..k)
        .map(|p| {
            let tree_indices: Vec<usize> = (p..forest.trees.len()).step_by(k).collect();
            ModelPartition { partition_id: p, forest: forest.subset(&tree_indices), tree_indices }
        })
        .collect()
}

/// A partition lowered into an engine, ready for the cross product.
pub struct LoweredPartition {
    pub partition: ModelPartition,
    pub engine: Box<dyn Engine>,
}

impl LoweredPartition {
    pub fn new(partition: ModelPartition, kind: EngineKind) -> Result<Self> {
        let engine = lower(kind, &partition.forest)?;
        Ok(LoweredPartition { partition, engine })
    }
}

/// Exit values of one partition's trees for every row of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPredictionBlock {
    pub partition_id: usize,
    pub block_id: usize,
    pub row_offset: usize,
    pub rows: usize,
    pub tree_indices: Vec<usize>,
    /// Row-major, `tree_indices.len()` values per row.
    pub exits: Vec<f64>,
}

impl PartialPredictionBlock {
    /// Trees contributing to every row.
    pub fn count(&self) -> usize {
        self.tree_indices.len()
    }

    /// Sum of this partition's exit values for `row`, in tree order.
    pub fn sum(&self, row: usize) -> f64 {
        let n = self.count();
        self.exits[row * n..(row + 1) * n].iter().fold(0.0, |acc, v| acc + v)
    }
}

/// Pairs every partition with every block. Runs on the current rayon pool,
/// one task per partition; blocks are shared read-only. The output is
/// partition-major in input order.
pub fn cross_product(partitions: &[LoweredPartition], blocks: &[SampleBlock]) -> Result<Vec<PartialPredictionBlock>> {
    let per_partition: Vec<Vec<PartialPredictionBlock>> = partitions
        .par_iter()
        .map(|lp| {
            let mut out = Vec::with_capacity(blocks.len());
            for block in blocks {
                let mut exits = Vec::new();
                lp.engine.exit_values(block, &mut exits)?;
                out.push(PartialPredictionBlock {
                    partition_id: lp.partition.partition_id,
                    block_id: block.block_id,
                    row_offset: block.row_offset,
                    rows: block.num_rows(),
                    tree_indices: lp.partition.tree_indices.clone(),
                    exits,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_partition.into_iter().flatten().collect())
}

/// Raw scores of one block after aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBlock {
    pub block_id: usize,
    pub row_offset: usize,
    pub raw: Vec<f64>,
}

/// Merges partials into per-row raw scores.
///
/// Every block must have exactly one partial from each of
/// `num_partitions` partitions, and together the partitions must cover each
/// of `agg.num_trees` trees once. Exit values are summed in ascending
/// original tree order, so the result does not depend on how the trees
/// were partitioned. Blocks come out in ascending `block_id` order.
pub fn aggregate(partials: &[PartialPredictionBlock], num_partitions: usize, agg: Aggregation) -> Result<Vec<RawBlock>> {
    let mut by_block: BTreeMap<usize, Vec<Option<&PartialPredictionBlock>>> = BTreeMap::new();
    for p in partials {
        if p.partition_id >= num_partitions {
            return Err(Error::Config(format!("partial from unknown partition {}", p.partition_id)));
        }
        let slots = by_block.entry(p.block_id).or_insert_with(|| vec![None; num_partitions]);
        if slots[p.partition_id].replace(p).is_some() {
            return Err(Error::Config(format!(
                "duplicate partial for block {} from partition {}",
                p.block_id, p.partition_id
            )));
        }
    }
    let mut out = Vec::with_capacity(by_block.len());
    for (block_id, slots) in by_block {
        let mut present = Vec::with_capacity(num_partitions);
        for (partition, slot) in slots.iter().enumerate() {
            present.push(slot.ok_or(Error::MissingPartial { block: block_id, partition })?);
        }
        let first = present[0];
        // tree index -> (partition slot, position within that partition)
        let mut locate = vec![None; agg.num_trees];
        for (slot, p) in present.iter().enumerate() {
            if p.rows != first.rows || p.row_offset != first.row_offset {
                return Err(Error::Config(format!("partials for block {block_id} disagree on shape")));
            }
            for (pos, &t) in p.tree_indices.iter().enumerate() {
                match locate.get_mut(t) {
                    Some(entry @ None) => *entry = Some((slot, pos)),
                    _ => return Err(Error::Config(format!("tree {t} is not covered exactly once"))),
                }
            }
        }
        let locate: Vec<(usize, usize)> = locate
            .into_iter()
            .enumerate()
            .map(|(t, l)| l.ok_or_else(|| Error::Config(format!("tree {t} is not covered by any partition"))))
            .collect::<Result<_>>()?;
        let raw = (0..first.rows)
            .map(|row| {
                let sum = locate.iter().fold(0.0, |acc, &(slot, pos)| {
                    let p = present[slot];
                    acc + p.exits[row * p.count() + pos]
                });
                agg.raw(sum)
            })
            .collect();
        out.push(RawBlock { block_id, row_offset: first.row_offset, raw });
    }
    Ok(out)
}
