//! Edmonds' blossom algorithm for maximum cardinality matching in general
//! graphs, `O(V³)`.

use std::collections::VecDeque;

use crate::graph::{Graph, Matching, Vertex};

const NIL: usize = usize::MAX;

struct Search<'a> {
    g: &'a Graph,
    mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    blossom: Vec<bool>,
    queue: VecDeque<usize>,
}

impl<'a> Search<'a> {
    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.g.n()];
        loop {
            a = self.base[a];
            seen[a] = true;
            if self.mate[a] == NIL {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.blossom[self.base[v]] = true;
            self.blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    fn find_path(&mut self, root: usize) -> usize {
        let n = self.g.n();
        self.used.iter_mut().for_each(|x| *x = false);
        self.parent.iter_mut().for_each(|x| *x = NIL);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        self.queue.clear();
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for &to in self.g.neighbors(v) {
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NIL && self.parent[self.mate[to]] != NIL) {
                    let cur = self.lca(v, to);
                    self.blossom.iter_mut().for_each(|x| *x = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                self.queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NIL {
                    self.parent[to] = v;
                    if self.mate[to] == NIL {
                        return to;
                    }
                    let m = self.mate[to];
                    self.used[m] = true;
                    self.queue.push_back(m);
                }
            }
        }
        NIL
    }
}

/// A maximum cardinality matching of `g`.
pub fn maximum_matching(g: &Graph) -> Matching {
    let n = g.n();
    let mut s = Search {
        g,
        mate: vec![NIL; n],
        parent: vec![NIL; n],
        base: (0..n).collect(),
        used: vec![false; n],
        blossom: vec![false; n],
        queue: VecDeque::new(),
    };
    // Greedy start.
    for (u, v) in g.edges() {
        if s.mate[u] == NIL && s.mate[v] == NIL {
            s.mate[u] = v;
            s.mate[v] = u;
        }
    }
    for root in 0..n {
        if s.mate[root] != NIL {
            continue;
        }
        let mut v = s.find_path(root);
        while v != NIL {
            let pv = s.parent[v];
            let ppv = s.mate[pv];
            s.mate[v] = pv;
            s.mate[pv] = v;
            v = ppv;
        }
    }
    let mut m = Matching::new(n);
    for u in 0..n {
        let v: Vertex = s.mate[u];
        if v != NIL && u < v {
            m.add(u, v);
        }
    }
    m
}
