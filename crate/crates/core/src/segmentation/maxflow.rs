//! Boykov–Kolmogorov augmenting-path max-flow for vision graphs.
//!
//! Two search trees grow from the terminals and are reused between augmentations;
//! nodes cut off by saturation become orphans and are re-adopted where possible.

use std::collections::VecDeque;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parent {
    Free,
    Terminal,
    Orphan,
    /// Arc from the node towards its parent.
    Arc(usize),
}

#[derive(Debug, Clone)]
struct Node {
    first: usize,
    parent: Parent,
    in_sink: bool,
    active: bool,
    /// Residual terminal capacity: positive towards the source, negative towards the sink.
    tr_cap: f64,
    ts: u64,
    dist: u32,
}

#[derive(Debug, Clone)]
struct Arc {
    head: usize,
    next: usize,
    r_cap: f64,
}

/// Which side of the minimum cut a node ends up on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Source,
    Sink,
}

#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    flow: f64,
    active: VecDeque<usize>,
    orphans: VecDeque<usize>,
    time: u64,
}

#[inline]
fn sister(a: usize) -> usize {
    a ^ 1
}

impl Graph {
    pub fn new(node_count: usize) -> Self {
        let node = Node {
            first: NONE,
            parent: Parent::Free,
            in_sink: false,
            active: false,
            tr_cap: 0.0,
            ts: 0,
            dist: 0,
        };
        Self {
            nodes: vec![node; node_count],
            arcs: Vec::new(),
            flow: 0.0,
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
        }
    }

    pub fn with_edge_capacity(node_count: usize, edges: usize) -> Self {
        let mut g = Self::new(node_count);
        g.arcs.reserve(2 * edges);
        g
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Adds `i → j` with capacity `cap` and `j → i` with `rev_cap`.
    pub fn add_edge(&mut self, i: usize, j: usize, cap: f64, rev_cap: f64) {
        debug_assert!(i != j && cap >= 0.0 && rev_cap >= 0.0);
        let a = self.arcs.len();
        self.arcs.push(Arc { head: j, next: self.nodes[i].first, r_cap: cap });
        self.arcs.push(Arc { head: i, next: self.nodes[j].first, r_cap: rev_cap });
        self.nodes[i].first = a;
        self.nodes[j].first = a + 1;
    }

    /// Adds terminal capacities `source → i` and `i → sink`. Either may be infinite.
    pub fn add_tweights(&mut self, i: usize, mut to_source: f64, mut to_sink: f64) {
        let delta = self.nodes[i].tr_cap;
        if delta > 0.0 {
            to_source += delta;
        } else {
            to_sink -= delta;
        }
        let both = to_source.min(to_sink);
        if both.is_finite() {
            self.flow += both;
        }
        self.nodes[i].tr_cap = if to_source.is_infinite() && to_sink.is_infinite() {
            0.0
        } else {
            to_source - to_sink
        };
    }

    fn out_arcs(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let mut a = self.nodes[i].first;
        std::iter::from_fn(move || {
            (a != NONE).then(|| {
                let cur = a;
                a = self.arcs[cur].next;
                cur
            })
        })
    }

    fn set_active(&mut self, i: usize) {
        if !self.nodes[i].active {
            self.nodes[i].active = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.active.pop_front() {
            self.nodes[i].active = false;
            if self.nodes[i].parent != Parent::Free {
                return Some(i);
            }
        }
        None
    }

    fn make_orphan(&mut self, i: usize) {
        self.nodes[i].parent = Parent::Orphan;
        self.orphans.push_back(i);
    }

    /// Computes the maximum flow. Call once after building the graph.
    pub fn maxflow(&mut self) -> f64 {
        for i in 0..self.nodes.len() {
            let n = &mut self.nodes[i];
            n.ts = 0;
            if n.tr_cap != 0.0 {
                n.in_sink = n.tr_cap < 0.0;
                n.parent = Parent::Terminal;
                n.dist = 1;
                self.set_active(i);
            } else {
                n.parent = Parent::Free;
            }
        }
        self.time = 0;
        let mut current: Option<usize> = None;
        loop {
            let i = match current.filter(|&i| self.nodes[i].parent != Parent::Free) {
                Some(i) => i,
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let middle = self.grow(i);
            self.time += 1;
            match middle {
                Some(a) => {
                    current = Some(i);
                    self.augment(a);
                    self.adopt_orphans();
                }
                None => current = None,
            }
        }
        self.flow
    }

    /// Expands the tree of `i` by one layer; returns a source-to-sink arc on contact.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let in_sink = self.nodes[i].in_sink;
        let mut a = self.nodes[i].first;
        while a != NONE {
            let residual = if in_sink { self.arcs[sister(a)].r_cap } else { self.arcs[a].r_cap };
            if residual > 0.0 {
                let j = self.arcs[a].head;
                let (pi, pj) = (&self.nodes[i], &self.nodes[j]);
                if pj.parent == Parent::Free {
                    let (ts, dist) = (pi.ts, pi.dist + 1);
                    let n = &mut self.nodes[j];
                    n.in_sink = in_sink;
                    n.parent = Parent::Arc(sister(a));
                    n.ts = ts;
                    n.dist = dist;
                    self.set_active(j);
                } else if pj.in_sink != in_sink {
                    return Some(if in_sink { sister(a) } else { a });
                } else if pj.ts <= pi.ts && pj.dist > pi.dist {
                    // Shorter route to the terminal through i.
                    let (ts, dist) = (pi.ts, pi.dist + 1);
                    let n = &mut self.nodes[j];
                    n.parent = Parent::Arc(sister(a));
                    n.ts = ts;
                    n.dist = dist;
                }
            }
            a = self.arcs[a].next;
        }
        None
    }

    fn augment(&mut self, middle: usize) {
        let mut bottleneck = self.arcs[middle].r_cap;
        // Source side: flow runs parent → child, i.e. along the sister of each parent arc.
        let mut i = self.arcs[sister(middle)].head;
        loop {
            match self.nodes[i].parent {
                Parent::Arc(pa) => {
                    bottleneck = bottleneck.min(self.arcs[sister(pa)].r_cap);
                    i = self.arcs[pa].head;
                }
                _ => {
                    bottleneck = bottleneck.min(self.nodes[i].tr_cap);
                    break;
                }
            }
        }
        let mut i = self.arcs[middle].head;
        loop {
            match self.nodes[i].parent {
                Parent::Arc(pa) => {
                    bottleneck = bottleneck.min(self.arcs[pa].r_cap);
                    i = self.arcs[pa].head;
                }
                _ => {
                    bottleneck = bottleneck.min(-self.nodes[i].tr_cap);
                    break;
                }
            }
        }

        self.arcs[sister(middle)].r_cap += bottleneck;
        self.arcs[middle].r_cap -= bottleneck;
        let mut i = self.arcs[sister(middle)].head;
        loop {
            match self.nodes[i].parent {
                Parent::Arc(pa) => {
                    self.arcs[pa].r_cap += bottleneck;
                    self.arcs[sister(pa)].r_cap -= bottleneck;
                    let next = self.arcs[pa].head;
                    if self.arcs[sister(pa)].r_cap <= 0.0 {
                        self.make_orphan(i);
                    }
                    i = next;
                }
                _ => {
                    self.nodes[i].tr_cap -= bottleneck;
                    if self.nodes[i].tr_cap <= 0.0 {
                        self.make_orphan(i);
                    }
                    break;
                }
            }
        }
        let mut i = self.arcs[middle].head;
        loop {
            match self.nodes[i].parent {
                Parent::Arc(pa) => {
                    self.arcs[sister(pa)].r_cap += bottleneck;
                    self.arcs[pa].r_cap -= bottleneck;
                    let next = self.arcs[pa].head;
                    if self.arcs[pa].r_cap <= 0.0 {
                        self.make_orphan(i);
                    }
                    i = next;
                }
                _ => {
                    self.nodes[i].tr_cap += bottleneck;
                    if self.nodes[i].tr_cap >= 0.0 {
                        self.make_orphan(i);
                    }
                    break;
                }
            }
        }
        self.flow += bottleneck;
    }

    fn adopt_orphans(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            self.process_orphan(i);
        }
    }

    /// Distance to the terminal of `j`'s tree, or `None` if its path hits an orphan.
    fn origin_distance(&mut self, j: usize) -> Option<u32> {
        let mut d = 0u32;
        let mut k = j;
        loop {
            if self.nodes[k].ts == self.time {
                return Some(d + self.nodes[k].dist);
            }
            d += 1;
            match self.nodes[k].parent {
                Parent::Terminal => {
                    self.nodes[k].ts = self.time;
                    self.nodes[k].dist = 1;
                    return Some(d);
                }
                Parent::Arc(pa) => k = self.arcs[pa].head,
                Parent::Orphan | Parent::Free => return None,
            }
        }
    }

    fn process_orphan(&mut self, i: usize) {
        let in_sink = self.nodes[i].in_sink;
        let mut best: Option<(usize, u32)> = None;
        let mut a0 = self.nodes[i].first;
        while a0 != NONE {
            // Child i needs residual capacity along its link to the would-be parent.
            let residual = if in_sink { self.arcs[a0].r_cap } else { self.arcs[sister(a0)].r_cap };
            let j = self.arcs[a0].head;
            if residual > 0.0 && self.nodes[j].in_sink == in_sink && self.nodes[j].parent != Parent::Free {
                if let Some(mut d) = self.origin_distance(j) {
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((a0, d));
                    }
                    // Stamp the verified path for later lookups.
                    let mut k = j;
                    while self.nodes[k].ts != self.time {
                        self.nodes[k].ts = self.time;
                        self.nodes[k].dist = d;
                        d -= 1;
                        match self.nodes[k].parent {
                            Parent::Arc(pa) => k = self.arcs[pa].head,
                            _ => break,
                        }
                    }
                }
            }
            a0 = self.arcs[a0].next;
        }

        if let Some((a, d)) = best {
            let n = &mut self.nodes[i];
            n.parent = Parent::Arc(a);
            n.ts = self.time;
            n.dist = d + 1;
            return;
        }

        self.nodes[i].parent = Parent::Free;
        let mut a0 = self.nodes[i].first;
        while a0 != NONE {
            let j = self.arcs[a0].head;
            let pj = self.nodes[j].parent;
            if self.nodes[j].in_sink == in_sink && pj != Parent::Free {
                let residual = if in_sink { self.arcs[a0].r_cap } else { self.arcs[sister(a0)].r_cap };
                if residual > 0.0 {
                    self.set_active(j);
                }
                if let Parent::Arc(pa) = pj {
                    if self.arcs[pa].head == i {
                        self.make_orphan(j);
                    }
                }
            }
            a0 = self.arcs[a0].next;
        }
    }

    /// Side of the minimum cut after [`Graph::maxflow`]. Nodes in neither tree are
    /// assigned to the sink.
    pub fn segment(&self, i: usize) -> Segment {
        let n = &self.nodes[i];
        if n.parent != Parent::Free && !n.in_sink {
            Segment::Source
        } else {
            Segment::Sink
        }
    }

    /// Number of arcs leaving each node, for diagnostics.
    pub fn degree(&self, i: usize) -> usize {
        self.out_arcs(i).count()
    }
}
