//! Union-find forest with union by rank and path compression.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
    count: usize,
}

impl DisjointSet {
    /// `n` singleton sets.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("disjoint set needs at least one element"));
        }
        Ok(DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
            count: n,
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of disjoint sets.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn find(&mut self, a: usize) -> Result<usize> {
        self.check(a)?;
        Ok(self.find_root(a))
    }

    /// Merges the sets containing `a` and `b`. Returns whether a merge happened.
    pub fn union(&mut self, a: usize, b: usize) -> Result<bool> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.union_roots(a, b))
    }

    pub fn same_set(&mut self, a: usize, b: usize) -> Result<bool> {
        Ok(self.find(a)? == self.find(b)?)
    }

    fn check(&self, a: usize) -> Result<()> {
        if a < self.parent.len() {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "element {a} out of range for a disjoint set of {}",
                self.parent.len()
            )))
        }
    }

    pub(crate) fn find_root(&mut self, a: usize) -> usize {
        let mut root = a;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = a;
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    pub(crate) fn union_roots(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find_root(a);
        let rb = self.find_root(b);
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.count -= 1;
        true
    }
}
