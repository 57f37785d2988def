//! Fill-reducing column ordering for the sparse LU.
//!
//! Plain nested dissection on the graph of A + Aᵀ: level-structure separators
//! from a pseudo-peripheral vertex, recursing until pieces are small.

use super::SparseMatrix;
use std::collections::VecDeque;

const LEAF: usize = 64;
const DONE: u32 = u32::MAX;

struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    fn symmetric(a: &SparseMatrix) -> Self {
        let n = a.nrows();
        let mut deg = vec![0usize; n + 1];
        for (i, j, _) in a.triplets() {
            if i != j {
                deg[i + 1] += 1;
                deg[j + 1] += 1;
            }
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut next = deg.clone();
        let mut adj = vec![0usize; deg[n]];
        for (i, j, _) in a.triplets() {
            if i != j {
                adj[next[i]] = j;
                next[i] += 1;
                adj[next[j]] = i;
                next[j] += 1;
            }
        }
        // dedup each list (pattern of A and Aᵀ overlap)
        let mut ptr = Vec::with_capacity(n + 1);
        let mut out = Vec::with_capacity(adj.len());
        ptr.push(0);
        for i in 0..n {
            let s = &mut adj[deg[i]..deg[i + 1]];
            s.sort_unstable();
            let mut last = usize::MAX;
            for &v in s.iter() {
                if v != last {
                    out.push(v);
                    last = v;
                }
            }
            ptr.push(out.len());
        }
        Self { ptr, adj: out }
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }
}

struct Dissector<'g> {
    g: &'g Graph,
    region: Vec<u32>,
    level: Vec<usize>,
    next_region: u32,
    order: Vec<usize>,
}

impl Dissector<'_> {
    /// BFS inside `id` from `root`; returns vertices grouped by level.
    fn bfs(&mut self, root: usize, id: u32, levels: &mut Vec<Vec<usize>>) {
        levels.clear();
        let mut queue = VecDeque::new();
        self.level[root] = 0;
        queue.push_back(root);
        let mut seen = vec![root];
        while let Some(v) = queue.pop_front() {
            let l = self.level[v];
            if levels.len() <= l {
                levels.push(Vec::new());
            }
            levels[l].push(v);
            for &u in self.g.neighbors(v) {
                if self.region[u] == id && self.level[u] == usize::MAX {
                    self.level[u] = l + 1;
                    seen.push(u);
                    queue.push_back(u);
                }
            }
        }
        for v in seen {
            self.level[v] = usize::MAX;
        }
    }

    fn dissect(&mut self, verts: Vec<usize>, id: u32) {
        if verts.len() <= LEAF {
            for &v in &verts {
                self.region[v] = DONE;
            }
            self.order.extend(verts);
            return;
        }
        let mut levels = Vec::new();
        self.bfs(verts[0], id, &mut levels);
        // pseudo-peripheral root: restart from a low-degree vertex of the last level
        for _ in 0..4 {
            let cand = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| self.g.neighbors(v).len())
                .unwrap();
            let depth = levels.len();
            let mut trial = Vec::new();
            self.bfs(cand, id, &mut trial);
            if trial.len() > depth {
                levels = trial;
            } else {
                break;
            }
        }
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < verts.len() {
            // disconnected: peel off the reached component and recurse on both
            let comp: Vec<usize> = levels.into_iter().flatten().collect();
            let a = self.fresh();
            for &v in &comp {
                self.region[v] = a;
            }
            let rest: Vec<usize> = verts.into_iter().filter(|&v| self.region[v] == id).collect();
            self.dissect(comp, a);
            self.dissect(rest, id);
            return;
        }
        if levels.len() < 3 {
            for &v in &verts {
                self.region[v] = DONE;
            }
            self.order.extend(verts);
            return;
        }
        let half = verts.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (l, lv) in levels.iter().enumerate() {
            acc += lv.len();
            if acc >= half {
                mid = l.clamp(1, levels.len() - 2);
                break;
            }
        }
        let (ida, idb) = (self.fresh(), self.fresh());
        let mut part_a = Vec::new();
        let mut part_b = Vec::new();
        for (l, lv) in levels.iter().enumerate() {
            if l < mid {
                for &v in lv {
                    self.region[v] = ida;
                }
                part_a.extend_from_slice(lv);
            } else if l > mid {
                for &v in lv {
                    self.region[v] = idb;
                }
                part_b.extend_from_slice(lv);
            }
        }
        // thin the separator: vertices with no neighbour beyond it can join A
        let mut sep = Vec::new();
        for &v in &levels[mid] {
            if self.g.neighbors(v).iter().any(|&u| self.region[u] == idb) {
                sep.push(v);
            } else {
                self.region[v] = ida;
                part_a.push(v);
            }
        }
        for &v in &sep {
            self.region[v] = DONE;
        }
        self.dissect(part_a, ida);
        self.dissect(part_b, idb);
        self.order.extend(sep);
    }

    fn fresh(&mut self) -> u32 {
        self.next_region += 1;
        self.next_region
    }
}

/// Nested-dissection permutation: `perm[k]` is the original index placed k-th.
pub fn nested_dissection(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let g = Graph::symmetric(a);
    let mut d = Dissector {
        g: &g,
        region: vec![0; n],
        level: vec![usize::MAX; n],
        next_region: 0,
        order: Vec::with_capacity(n),
    };
    d.dissect((0..n).collect(), 0);
    d.order
}
