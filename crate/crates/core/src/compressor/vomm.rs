//! Variable-order Markov model over bytes.
//!
//! Contexts are stored in a backward trie: the root is the empty context and
//! the child of a node for context `s` keyed by byte `c` is the context `c·s`.
//! Only contexts that actually occurred are stored, and every stored
//! `(context, symbol)` pair carries a count of at least one.

use std::collections::BTreeMap;

pub(crate) type NodeId = u32;

pub(crate) const ROOT: NodeId = 0;

#[derive(Debug, Clone, Default)]
pub(crate) struct Node {
    /// `(symbol, count)` pairs in first-seen order.
    pub(crate) symbols: Vec<(u8, u32)>,
    /// Sum of `symbols` counts.
    pub(crate) total: u32,
    /// `(preceding byte, node)` pairs sorted by byte.
    children: Vec<(u8, NodeId)>,
}

impl Node {
    #[inline]
    pub(crate) fn count(&self, symbol: u8) -> u32 {
        self.symbols
            .iter()
            .find(|&&(s, _)| s == symbol)
            .map_or(0, |&(_, c)| c)
    }

    #[inline]
    fn child(&self, byte: u8) -> Option<NodeId> {
        self.children
            .binary_search_by_key(&byte, |&(b, _)| b)
            .ok()
            .map(|k| self.children[k].1)
    }

    fn increment(&mut self, symbol: u8) {
        match self.symbols.iter_mut().find(|(s, _)| *s == symbol) {
            Some((_, c)) => *c += 1,
            None => self.symbols.push((symbol, 1)),
        }
        self.total += 1;
    }
}

/// Symbol counts for every observed context of length `0..=order`.
#[derive(Debug, Clone)]
pub struct VommModel {
    order: usize,
    nodes: Vec<Node>,
}

impl VommModel {
    pub fn new(order: usize) -> Self {
        VommModel {
            order,
            nodes: vec![Node::default()],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_empty(&self) -> bool {
        self.nodes[ROOT as usize].total == 0
    }

    #[inline]
    pub(crate) fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    /// Node ids of the stored contexts preceding position `pos`, from the
    /// empty context upwards; stops at the first context that is missing.
    pub(crate) fn context_chain(&self, data: &[u8], pos: usize, chain: &mut Vec<NodeId>) {
        chain.clear();
        chain.push(ROOT);
        let depth = self.order.min(pos);
        let mut node = ROOT;
        for back in 1..=depth {
            match self.node(node).child(data[pos - back]) {
                Some(next) => {
                    chain.push(next);
                    node = next;
                }
                None => break,
            }
        }
    }

    /// Records `data[pos]` in every context of length `0..=min(order, pos)`.
    /// `chain` must be the result of [`Self::context_chain`] for `pos`.
    pub(crate) fn update(&mut self, data: &[u8], pos: usize, chain: &[NodeId]) {
        let symbol = data[pos];
        for &id in chain {
            self.nodes[id as usize].increment(symbol);
        }
        let depth = self.order.min(pos);
        let mut parent = *chain.last().expect("chain always holds the root");
        for back in chain.len()..=depth {
            let id = self.nodes.len() as NodeId;
            let mut node = Node::default();
            node.increment(symbol);
            self.nodes.push(node);
            let key = data[pos - back];
            let children = &mut self.nodes[parent as usize].children;
            let at = children.partition_point(|&(b, _)| b < key);
            children.insert(at, (key, id));
            parent = id;
        }
    }

    /// Count of `symbol` following `context`; zero if either was never seen.
    pub fn count(&self, context: &[u8], symbol: u8) -> u32 {
        self.find(context).map_or(0, |id| self.node(id).count(symbol))
    }

    /// Every stored context with its symbol counts, sorted by context.
    pub fn contexts(&self) -> BTreeMap<Vec<u8>, BTreeMap<u8, u32>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![(ROOT, Vec::new())];
        while let Some((id, context)) = stack.pop() {
            let node = self.node(id);
            if node.total > 0 {
                out.insert(context.clone(), node.symbols.iter().copied().collect());
            }
            for &(byte, child) in &node.children {
                let mut longer = Vec::with_capacity(context.len() + 1);
                longer.push(byte);
                longer.extend_from_slice(&context);
                stack.push((child, longer));
            }
        }
        out
    }

    fn find(&self, context: &[u8]) -> Option<NodeId> {
        if context.len() > self.order {
            return None;
        }
        let mut node = ROOT;
        for &byte in context.iter().rev() {
            node = self.node(node).child(byte)?;
        }
        Some(node)
    }
}

/// Builds the model of `data` with contexts up to length `order`.
pub fn train_vomm(data: &[u8], order: usize) -> VommModel {
    let mut model = VommModel::new(order);
    let mut chain = Vec::with_capacity(order + 1);
    for pos in 0..data.len() {
        model.context_chain(data, pos, &mut chain);
        model.update(data, pos, &chain);
    }
    model
}
