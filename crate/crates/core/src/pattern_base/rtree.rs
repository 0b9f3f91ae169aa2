//! R-tree over boxes whose dimension is only known at run time. Insertion picks the
//! child needing least enlargement and splits overflowing nodes quadratically.

use super::record::Mbr;

const MAX_ENTRIES: usize = 16;
const MIN_ENTRIES: usize = 6;

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<(Mbr, u64)>),
    Inner(Vec<(Mbr, usize)>),
}

#[derive(Debug, Clone, Default)]
pub struct RTree {
    nodes: Vec<Node>,
    root: Option<usize>,
    len: usize,
}

impl RTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, mbr: Mbr, id: u64) {
        self.len += 1;
        let Some(root) = self.root else {
            self.nodes.push(Node::Leaf(vec![(mbr, id)]));
            self.root = Some(self.nodes.len() - 1);
            return;
        };
        if let Some((m1, n1, m2, n2)) = self.insert_at(root, mbr, id) {
            self.nodes.push(Node::Inner(vec![(m1, n1), (m2, n2)]));
            self.root = Some(self.nodes.len() - 1);
        }
    }

    /// Ids of entries whose box intersects `q`.
    pub fn query(&self, q: &Mbr) -> Vec<u64> {
        let mut out = Vec::new();
        let Some(root) = self.root else {
            return out;
        };
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            match &self.nodes[n] {
                Node::Leaf(entries) => out.extend(
                    entries
                        .iter()
                        .filter(|(m, _)| m.intersects(q))
                        .map(|&(_, id)| id),
                ),
                Node::Inner(children) => stack.extend(
                    children
                        .iter()
                        .filter(|(m, _)| m.intersects(q))
                        .map(|&(_, c)| c),
                ),
            }
        }
        out
    }

    fn cover(&self, n: usize) -> Mbr {
        let mut it: Box<dyn Iterator<Item = &Mbr>> = match &self.nodes[n] {
            Node::Leaf(e) => Box::new(e.iter().map(|(m, _)| m)),
            Node::Inner(c) => Box::new(c.iter().map(|(m, _)| m)),
        };
        let first = it.next().expect("non-empty node").clone();
        it.fold(first, |acc, m| acc.union(m))
    }

    /// Insert below node `n`; on overflow the node is split and both halves with their
    /// covers are returned (the first half reuses `n`).
    fn insert_at(&mut self, n: usize, mbr: Mbr, id: u64) -> Option<(Mbr, usize, Mbr, usize)> {
        let overflow = match &mut self.nodes[n] {
            Node::Leaf(entries) => {
                entries.push((mbr, id));
                entries.len() > MAX_ENTRIES
            }
            Node::Inner(children) => {
                let best = choose_subtree(children.iter().map(|(m, _)| m), &mbr);
                let child = children[best].1;
                children[best].0 = children[best].0.union(&mbr);
                if let Some((m1, n1, m2, n2)) = self.insert_at(child, mbr, id) {
                    let Node::Inner(children) = &mut self.nodes[n] else {
                        unreachable!()
                    };
                    children[best] = (m1, n1);
                    children.push((m2, n2));
                    children.len() > MAX_ENTRIES
                } else {
                    false
                }
            }
        };
        if !overflow {
            return None;
        }
        let sibling = match &mut self.nodes[n] {
            Node::Leaf(entries) => {
                let (a, b) = quadratic_split(std::mem::take(entries));
                *entries = a;
                Node::Leaf(b)
            }
            Node::Inner(children) => {
                let (a, b) = quadratic_split(std::mem::take(children));
                *children = a;
                Node::Inner(b)
            }
        };
        self.nodes.push(sibling);
        let s = self.nodes.len() - 1;
        Some((self.cover(n), n, self.cover(s), s))
    }
}

fn choose_subtree<'a>(boxes: impl Iterator<Item = &'a Mbr>, m: &Mbr) -> usize {
    let mut best = (f64::INFINITY, f64::INFINITY, 0);
    for (i, b) in boxes.enumerate() {
        let key = (b.enlargement(m), b.area(), i);
        if key.0 < best.0 || (key.0 == best.0 && key.1 < best.1) {
            best = key;
        }
    }
    best.2
}

type Entries<T> = Vec<(Mbr, T)>;

fn quadratic_split<T>(mut items: Entries<T>) -> (Entries<T>, Entries<T>) {
    // seeds: the pair wasting the most area when grouped
    let mut seeds = (0, 1, f64::NEG_INFINITY);
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            let waste =
                items[i].0.union(&items[j].0).area() - items[i].0.area() - items[j].0.area();
            if waste > seeds.2 {
                seeds = (i, j, waste);
            }
        }
    }
    let b_seed = items.swap_remove(seeds.1);
    let a_seed = items.swap_remove(seeds.0);
    let (mut ca, mut cb) = (a_seed.0.clone(), b_seed.0.clone());
    let mut a = vec![a_seed];
    let mut b = vec![b_seed];
    while !items.is_empty() {
        if a.len() + items.len() == MIN_ENTRIES {
            a.append(&mut items);
            break;
        }
        if b.len() + items.len() == MIN_ENTRIES {
            b.append(&mut items);
            break;
        }
        // next: the entry with the strongest preference for one group
        let (idx, _) = items
            .iter()
            .enumerate()
            .map(|(i, (m, _))| (i, (ca.enlargement(m) - cb.enlargement(m)).abs()))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        let item = items.swap_remove(idx);
        let (da, db) = (ca.enlargement(&item.0), cb.enlargement(&item.0));
        let to_a = da < db
            || (da == db
                && (ca.area() < cb.area() || (ca.area() == cb.area() && a.len() <= b.len())));
        if to_a {
            ca = ca.union(&item.0);
            a.push(item);
        } else {
            cb = cb.union(&item.0);
            b.push(item);
        }
    }
    (a, b)
}
