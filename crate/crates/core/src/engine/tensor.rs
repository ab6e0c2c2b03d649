//! Forest inference as matrix products.
//!
//! Per tree, with internal nodes in index order and leaves in-order:
//!
//! - `A` (features × internal): `A[f, j] = 1` iff node `j` tests feature `f`
//! - `B` (internal): node thresholds
//! - `C` (internal × leaves): `+1` if the leaf is in node `j`'s left subtree,
//!   `-1` if in its right subtree, `0` otherwise
//! - `D` (leaves): number of internal nodes with the leaf in their left subtree
//! - `E` (leaves): leaf values
//!
//! For a dense input block `X`: `S = X·A`, `P = [S <= B]`, `Q = P·C`; the
//! exit leaf is the unique column where `Q == D`, and `H·E` picks its value.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::block::{Prediction, RowRef, SampleBlock};
use crate::engine::{check_block, check_row, Engine, EngineKind};
use crate::error::Result;
use crate::model::{Aggregation, Forest, Node, Tree};

#[derive(Debug, Clone, PartialEq)]
pub struct TensorTree {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub c: Array2<f64>,
    pub d: Array1<f64>,
    pub e: Array1<f64>,
}

impl TensorTree {
    pub fn from_tree(tree: &Tree, num_features: usize) -> Self {
        let internal: Vec<usize> = (0..tree.nodes.len()).filter(|&i| !tree.nodes[i].is_leaf()).collect();
        let leaves = tree.leaves_in_order();
        let spans = tree.leaf_spans();
        let mut a = Array2::zeros((num_features, internal.len()));
        let mut b = Array1::zeros(internal.len());
        let mut c = Array2::zeros((internal.len(), leaves.len()));
        let mut d = Array1::zeros(leaves.len());
        for (j, &node) in internal.iter().enumerate() {
            let Node::Internal(s) = tree.nodes[node] else { unreachable!() };
            a[[s.feature, j]] = 1.0;
            b[j] = s.threshold;
            let (lo, mid) = spans[s.left];
            let (_, hi) = spans[s.right];
            for leaf in lo..mid {
                c[[j, leaf]] = 1.0;
                d[leaf] += 1.0;
            }
            for leaf in mid..hi {
                c[[j, leaf]] = -1.0;
            }
        }
        let e = leaves
            .iter()
            .map(|&i| match tree.nodes[i] {
                Node::Leaf { value } => value,
                Node::Internal(_) => unreachable!(),
            })
            .collect();
        let lowered = TensorTree { a, b, c, d, e };
        lowered.assert_shapes(num_features);
        lowered
    }

    fn assert_shapes(&self, num_features: usize) {
        let (internal, leaves) = (self.b.len(), self.e.len());
        assert_eq!(self.a.dim(), (num_features, internal));
        assert_eq!(self.c.dim(), (internal, leaves));
        assert_eq!(self.d.len(), leaves);
        assert_eq!(leaves, internal + 1);
    }

    pub fn num_internal(&self) -> usize {
        self.b.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.e.len()
    }

    /// One-hot exit-leaf indicator `H` (rows × leaves) for a dense block.
    pub fn leaf_indicator(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut s = x.dot(&self.a);
        Zip::from(s.rows_mut()).for_each(|mut row| {
            Zip::from(&mut row).and(&self.b).for_each(|v, &t| *v = f64::from(u8::from(*v <= t)));
        });
        let mut q = s.dot(&self.c);
        Zip::from(q.rows_mut()).for_each(|mut row| {
            Zip::from(&mut row).and(&self.d).for_each(|v, &d| *v = f64::from(u8::from(*v == d)));
        });
        q
    }

    /// Exit value of every row.
    pub fn contributions(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        self.leaf_indicator(x).dot(&self.e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorModel {
    trees: Vec<TensorTree>,
    agg: Aggregation,
    num_features: usize,
}

pub fn lower_tensor(forest: &Forest) -> TensorModel {
    TensorModel {
        trees: forest.trees.iter().map(|t| TensorTree::from_tree(t, forest.num_features)).collect(),
        agg: forest.aggregation(),
        num_features: forest.num_features,
    }
}

impl TensorModel {
    pub fn trees(&self) -> &[TensorTree] {
        &self.trees
    }

    pub fn predict(&self, row: RowRef<'_>) -> Result<Prediction> {
        check_row(EngineKind::Tensor, self.num_features, row)?;
        let x = ArrayView2::from_shape((1, self.num_features), row.values()).expect("row has num_features values");
        let sum = self.trees.iter().fold(0.0, |acc, t| acc + t.contributions(x)[0]);
        Ok(self.agg.predict(sum))
    }
}

impl Engine for TensorModel {
    fn kind(&self) -> EngineKind {
        EngineKind::Tensor
    }

    fn num_features(&self) -> usize {
        self.num_features
    }

    fn num_trees(&self) -> usize {
        self.trees.len()
    }

    fn aggregation(&self) -> Aggregation {
        self.agg
    }

    fn exit_values(&self, block: &SampleBlock, out: &mut Vec<f64>) -> Result<()> {
        check_block(self, block)?;
        let rows = block.num_rows();
        let x = ArrayView2::from_shape((rows, self.num_features), block.values()).expect("block is rows × features");
        let mut exits = Array2::zeros((rows, self.trees.len()));
        for (t, tree) in self.trees.iter().enumerate() {
            exits.index_axis_mut(Axis(1), t).assign(&tree.contributions(x));
        }
        out.clear();
        out.extend(exits.iter().copied());
        Ok(())
    }
}
