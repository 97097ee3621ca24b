//! Uniform red refinement and adaptive red-green-blue refinement.
//!
//! Marked triangles are red-refined (four similar children through the edge
//! midpoints). The closure then visits every triangle with split edges: three split
//! edges give red, two give blue, one gives green. Green and blue children remember
//! their parent as a [`Family`]; a family is never refined further. If one of its
//! children is marked, or one of its edges gets split, the family is first rolled back
//! to the parent, which is then refined again. Because every bisection happens on a
//! triangle that descends from the initial mesh by red refinement only, angles
//! stay bounded below.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use super::{BoundarySegment, Family, Triangulation};
use crate::error::{Error, Result};
use crate::geom::{self, Point};

#[inline]
fn key(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

/// Local edge `k` of a triangle, opposite vertex `k`.
#[inline]
fn local_edge(v: &[usize; 3], k: usize) -> [usize; 2] {
    key(v[(k + 1) % 3], v[(k + 2) % 3])
}

/// Children of `(a, b, c)` given midpoints `m[k]` of the edge opposite vertex `k`.
fn red_children(v: [usize; 3], m: [usize; 3]) -> [[usize; 3]; 4] {
    let [a, b, c] = v;
    [[a, m[2], m[1]], [m[2], b, m[0]], [m[1], m[0], c], [m[0], m[1], m[2]]]
}

/// Red refinement of every triangle. The midpoint of edge `e` becomes vertex
/// `n_vertices + e`, so `V' = V + E`, `E' = 2E + 3T` and `T' = 4T`.
pub fn uniform_red_refine(mesh: &Triangulation) -> Triangulation {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices().to_vec();
    vertices.extend(mesh.edges().iter().map(|&[a, b]| geom::midpoint(mesh.vertex(a), mesh.vertex(b))));
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let m = mesh.triangle_edges(t).map(|e| nv + e);
        triangles.extend(red_children(mesh.triangle(t), m));
    }
    let mut boundary = Vec::with_capacity(2 * mesh.boundary_edges().len());
    for &e in mesh.boundary_edges() {
        let [a, b] = mesh.edge(e);
        let tag = mesh.boundary_tag(e).unwrap_or(0);
        boundary.push(BoundarySegment::new(a, nv + e, tag));
        boundary.push(BoundarySegment::new(nv + e, b, tag));
    }
    Triangulation::from_parts(vertices, triangles, &boundary, Vec::new(), Vec::new())
        .expect("red refinement preserves mesh validity")
}

struct Slot {
    v: [usize; 3],
    family: Option<usize>,
}

struct FamilyRecord {
    parent: [usize; 3],
    midpoints: [Option<usize>; 3],
    children: Vec<usize>,
    alive: bool,
}

struct Refiner {
    vertices: Vec<Point>,
    slots: Vec<Option<Slot>>,
    families: Vec<FamilyRecord>,
    /// Edge (canonical pair) -> up to two slots containing it.
    edge_slots: BTreeMap<[usize; 2], [usize; 2]>,
    /// Split edges -> midpoint vertex.
    split: BTreeMap<[usize; 2], usize>,
    tags: BTreeMap<[usize; 2], u32>,
    queue: VecDeque<usize>,
}

const NONE: usize = usize::MAX;

impl Refiner {
    fn new(mesh: &Triangulation) -> Self {
        let mut r = Refiner {
            vertices: mesh.vertices().to_vec(),
            slots: Vec::with_capacity(2 * mesh.n_triangles()),
            families: mesh
                .families()
                .iter()
                .map(|f| FamilyRecord { parent: f.parent, midpoints: f.midpoints, children: Vec::new(), alive: true })
                .collect(),
            edge_slots: BTreeMap::new(),
            split: BTreeMap::new(),
            tags: BTreeMap::new(),
            queue: VecDeque::new(),
        };
        for t in 0..mesh.n_triangles() {
            r.insert(mesh.triangle(t), mesh.green_family(t));
        }
        for f in &r.families {
            for k in 0..3 {
                if let Some(m) = f.midpoints[k] {
                    r.split.insert(local_edge(&f.parent, k), m);
                }
            }
        }
        for &e in mesh.boundary_edges() {
            let [a, b] = mesh.edge(e);
            r.tags.insert(key(a, b), mesh.boundary_tag(e).unwrap_or(0));
        }
        r
    }

    fn insert(&mut self, v: [usize; 3], family: Option<usize>) -> usize {
        let s = self.slots.len();
        self.slots.push(Some(Slot { v, family }));
        for k in 0..3 {
            let entry = self.edge_slots.entry(local_edge(&v, k)).or_insert([NONE, NONE]);
            if entry[0] == NONE {
                entry[0] = s;
            } else {
                entry[1] = s;
            }
        }
        if let Some(f) = family {
            self.families[f].children.push(s);
        }
        s
    }

    fn remove(&mut self, s: usize) -> Slot {
        let slot = self.slots[s].take().expect("slot is alive");
        for k in 0..3 {
            let pair = local_edge(&slot.v, k);
            let entry = self.edge_slots.get_mut(&pair).expect("edge registered");
            if entry[0] == s {
                entry[0] = entry[1];
            }
            entry[1] = NONE;
            if entry[0] == NONE {
                self.edge_slots.remove(&pair);
            }
        }
        slot
    }

    fn neighbour(&self, s: usize, pair: [usize; 2]) -> Option<usize> {
        let entry = self.edge_slots.get(&pair)?;
        entry.iter().copied().find(|&o| o != NONE && o != s)
    }

    fn midpoint(&mut self, pair: [usize; 2]) -> (usize, bool) {
        if let Some(&m) = self.split.get(&pair) {
            return (m, false);
        }
        let p = geom::midpoint(self.vertices[pair[0]], self.vertices[pair[1]]);
        let m = self.vertices.len();
        self.vertices.push(p);
        self.split.insert(pair, m);
        if let Some(&tag) = self.tags.get(&pair) {
            self.tags.insert(key(pair[0], m), tag);
            self.tags.insert(key(m, pair[1]), tag);
        }
        (m, true)
    }

    /// Replace a family by its parent triangle.
    fn rollback(&mut self, f: usize) -> usize {
        let children = core::mem::take(&mut self.families[f].children);
        for c in children {
            if self.slots[c].is_some() {
                self.remove(c);
            }
        }
        self.families[f].alive = false;
        let parent = self.families[f].parent;
        for k in 0..3 {
            if let Some(m) = self.families[f].midpoints[k] {
                let pair = local_edge(&parent, k);
                if let Some(&tag) = self.tags.get(&key(pair[0], m)) {
                    self.tags.insert(pair, tag);
                }
            }
        }
        self.insert(parent, None)
    }

    fn red(&mut self, s: usize) {
        let slot = self.remove(s);
        let v = slot.v;
        let mut m = [0; 3];
        for k in 0..3 {
            let pair = local_edge(&v, k);
            let (mid, created) = self.midpoint(pair);
            m[k] = mid;
            if created {
                if let Some(n) = self.neighbour(NONE, pair) {
                    self.queue.push_back(n);
                }
            }
        }
        for child in red_children(v, m) {
            let c = self.insert(child, None);
            self.queue.push_back(c);
        }
    }

    fn is_deep_split(&self, pair: [usize; 2]) -> bool {
        match self.split.get(&pair) {
            Some(&m) => self.split.contains_key(&key(pair[0], m)) || self.split.contains_key(&key(m, pair[1])),
            None => false,
        }
    }

    fn close(&mut self, s: usize) {
        let Some(slot) = self.slots[s].as_ref() else { return };
        let v = slot.v;
        let family = slot.family;
        let mids: [Option<usize>; 3] = core::array::from_fn(|k| self.split.get(&local_edge(&v, k)).copied());
        let count = mids.iter().flatten().count();
        if count == 0 {
            return;
        }
        if let Some(f) = family {
            let p = self.rollback(f);
            self.queue.push_back(p);
            return;
        }
        if count == 3 || (0..3).any(|k| self.is_deep_split(local_edge(&v, k))) {
            self.red(s);
            return;
        }
        self.remove(s);
        let f = self.families.len();
        self.families.push(FamilyRecord { parent: v, midpoints: mids, children: Vec::new(), alive: true });
        if count == 1 {
            let k = (0..3).find(|&k| mids[k].is_some()).unwrap();
            let m = mids[k].unwrap();
            let (a, b, c) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
            self.insert([a, b, m], Some(f));
            self.insert([a, m, c], Some(f));
        } else {
            // Blue: the unsplit edge is opposite `a`; split edges ca and ab meet at `a`.
            let k = (0..3).find(|&k| mids[k].is_none()).unwrap();
            let (a, b, c) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
            let mb = mids[(k + 1) % 3].unwrap();
            let mc = mids[(k + 2) % 3].unwrap();
            self.insert([a, mc, mb], Some(f));
            let p = |i: usize| self.vertices[i];
            if geom::dist(p(mc), p(c)) <= geom::dist(p(b), p(mb)) {
                self.insert([mc, b, c], Some(f));
                self.insert([mc, c, mb], Some(f));
            } else {
                self.insert([mc, b, mb], Some(f));
                self.insert([b, c, mb], Some(f));
            }
        }
    }

    fn finish(self) -> Result<Triangulation> {
        let mut remap = vec![usize::MAX; self.families.len()];
        let mut families = Vec::new();
        let mut triangles = Vec::new();
        let mut green = Vec::new();
        for slot in self.slots.into_iter().flatten() {
            let fam = slot.family.map(|f| {
                if remap[f] == usize::MAX {
                    remap[f] = families.len();
                    let r = &self.families[f];
                    families.push(Family { parent: r.parent, midpoints: r.midpoints });
                }
                remap[f]
            });
            triangles.push(slot.v);
            green.push(fam);
        }
        let mut count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for v in &triangles {
            for k in 0..3 {
                *count.entry(local_edge(v, k)).or_default() += 1;
            }
        }
        let boundary: Vec<BoundarySegment> = count
            .iter()
            .filter(|(_, &c)| c == 1)
            .filter_map(|(pair, _)| self.tags.get(pair).map(|&tag| BoundarySegment::new(pair[0], pair[1], tag)))
            .collect();
        Triangulation::from_parts(self.vertices, triangles, &boundary, green, families)
    }
}

/// Red-green-blue refinement of the marked triangles with conforming closure.
pub fn rgb_refine(mesh: &Triangulation, marked: &[usize]) -> Result<Triangulation> {
    if let Some(&bad) = marked.iter().find(|&&t| t >= mesh.n_triangles()) {
        return Err(Error::InvalidMark { index: bad, n_triangles: mesh.n_triangles() });
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let marked: BTreeSet<usize> = marked.iter().copied().collect();
    let mut r = Refiner::new(mesh);
    // Slots of the initial triangles coincide with their indices.
    for &t in &marked {
        let Some(slot) = r.slots[t].as_ref() else { continue };
        match slot.family {
            Some(f) => {
                if r.families[f].alive {
                    let p = r.rollback(f);
                    r.red(p);
                }
            }
            None => r.red(t),
        }
    }
    while let Some(s) = r.queue.pop_front() {
        r.close(s);
    }
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{lshape, reference_triangle, unit_square};

    fn triangle_set(m: &Triangulation) -> BTreeSet<[[u64; 2]; 3]> {
        (0..m.n_triangles())
            .map(|t| {
                let mut c = m.corners(t).map(|p| [p[0].to_bits(), p[1].to_bits()]);
                c.sort();
                c
            })
            .collect()
    }

    #[test]
    fn uniform_counts_on_reference_triangle() {
        let m = uniform_red_refine(&reference_triangle());
        assert_eq!((m.n_triangles(), m.n_edges(), m.n_vertices()), (4, 9, 6));
    }

    #[test]
    fn uniform_counts_on_lshape() {
        let m0 = lshape();
        let m1 = uniform_red_refine(&m0);
        assert_eq!((m1.n_triangles(), m1.n_edges(), m1.n_vertices()), (96, 160, 65));
        assert_eq!(m1.ndof_mixed(), 256);
        assert_eq!(uniform_red_refine(&m1).ndof_mixed(), 992);
    }

    #[test]
    fn rgb_with_everything_marked_is_uniform() {
        let m = lshape();
        let all: Vec<usize> = (0..m.n_triangles()).collect();
        let a = rgb_refine(&m, &all).unwrap();
        let b = uniform_red_refine(&m);
        assert_eq!(a.n_vertices(), b.n_vertices());
        assert_eq!(triangle_set(&a), triangle_set(&b));
        assert!(a.families().is_empty());
    }

    #[test]
    fn rgb_with_nothing_marked_is_identity() {
        let m = lshape();
        let r = rgb_refine(&m, &[]).unwrap();
        assert_eq!(r.triangles(), m.triangles());
        assert_eq!(r.vertices(), m.vertices());
    }

    #[test]
    fn one_marked_triangle_of_the_square() {
        let m = unit_square();
        let r = rgb_refine(&m, &[0]).unwrap();
        assert_eq!(r.n_triangles(), 6);
        assert_eq!(r.families().len(), 1);
        let greens = (0..6).filter(|&t| r.green_family(t).is_some()).count();
        assert_eq!(greens, 2);
        assert!((r.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marked_green_child_is_rolled_back_and_red_refined() {
        let m = unit_square();
        let r1 = rgb_refine(&m, &[0]).unwrap();
        let g = (0..r1.n_triangles()).find(|&t| r1.green_family(t).is_some()).unwrap();
        let r2 = rgb_refine(&r1, &[g]).unwrap();
        // Both halves are now red-refined: 8 triangles, no families left.
        assert_eq!(r2.n_triangles(), 8);
        assert!(r2.families().is_empty());
        assert_eq!(triangle_set(&r2), triangle_set(&uniform_red_refine(&m)));
    }

    #[test]
    fn invalid_mark_is_rejected() {
        let m = unit_square();
        assert_eq!(rgb_refine(&m, &[5]).unwrap_err(), Error::InvalidMark { index: 5, n_triangles: 2 });
    }

    #[test]
    fn boundary_tags_survive_refinement() {
        let m = unit_square();
        let v = m.vertices().to_vec();
        let t = m.triangles().to_vec();
        let m = Triangulation::new(v, t, &[BoundarySegment::new(0, 1, 3)]).unwrap();
        let r = rgb_refine(&m, &[1]).unwrap();
        let r = rgb_refine(&r, &[0, 1, 2]).unwrap();
        let tagged: f64 = r
            .boundary_edges()
            .iter()
            .filter(|&&e| r.boundary_tag(e) == Some(3))
            .map(|&e| r.edge_length(e))
            .sum();
        assert!((tagged - 1.0).abs() < 1e-14);
    }
}
