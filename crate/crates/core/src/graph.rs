//! Molecular graph data model shared by every other module.
//!
//! Tetrahedral parity is stored relative to a *reference order* of the
//! center's neighbors: explicit neighbors by ascending atom index, followed
//! by an implicit slot (hydrogen or lone pair) when the center has exactly
//! three explicit neighbors. `CounterClockwise` means that, looking from the
//! first neighbor toward the center, the remaining three run counterclockwise
//! (the SMILES `@` sense); `Clockwise` is `@@`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::elements;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub element: String,
    pub formal_charge: i32,
    pub isotope: Option<u32>,
    /// Hydrogen count given explicitly (bracket atoms). `None` means the
    /// organic-subset valence default applies.
    pub explicit_h: Option<u32>,
    pub aromatic: bool,
    pub coord: Option<(f64, f64)>,
}

impl Atom {
    pub fn new(element: impl Into<String>) -> Self {
        Atom {
            element: element.into(),
            formal_charge: 0,
            isotope: None,
            explicit_h: None,
            aromatic: false,
            coord: None,
        }
    }

    pub fn aromatic(element: impl Into<String>) -> Self {
        Atom {
            aromatic: true,
            ..Atom::new(element)
        }
    }

    /// Placeholder atom such as `R1` or an unexpanded abbreviation.
    pub fn label(name: impl Into<String>) -> Self {
        Atom {
            explicit_h: Some(0),
            ..Atom::new(name)
        }
    }

    pub fn with_coord(mut self, x: f64, y: f64) -> Self {
        self.coord = Some((x, y));
        self
    }

    pub fn is_wildcard(&self) -> bool {
        self.element == elements::WILDCARD
    }

    /// True when the element string is neither a real element nor `*`.
    pub fn is_label(&self) -> bool {
        !self.is_wildcard() && !elements::is_element(&self.element)
    }

    pub fn is_hydrogen(&self) -> bool {
        self.element == "H"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondType {
    Single,
    Double,
    Triple,
    Aromatic,
    /// Wedge toward the viewer; `begin` is the stereocenter.
    WedgeSolid,
    /// Hashed wedge away from the viewer; `begin` is the stereocenter.
    WedgeHashed,
    /// Classifier target meaning "no bond between this atom pair".
    None,
}

impl BondType {
    pub const ALL: [BondType; 7] = [
        BondType::Single,
        BondType::Double,
        BondType::Triple,
        BondType::Aromatic,
        BondType::WedgeSolid,
        BondType::WedgeHashed,
        BondType::None,
    ];

    pub fn class_index(self) -> usize {
        BondType::ALL.iter().position(|b| *b == self).unwrap()
    }

    pub fn from_class_index(index: usize) -> Option<BondType> {
        BondType::ALL.get(index).copied()
    }

    pub fn is_wedge(self) -> bool {
        matches!(self, BondType::WedgeSolid | BondType::WedgeHashed)
    }

    /// Bond valence contribution; aromatic bonds count 1 (the aromatic atom
    /// adjustment happens in [`MolGraph::hydrogen_count`]).
    pub fn valence(self) -> u32 {
        match self {
            BondType::Single | BondType::WedgeSolid | BondType::WedgeHashed => 1,
            BondType::Aromatic => 1,
            BondType::Double => 2,
            BondType::Triple => 3,
            BondType::None => 0,
        }
    }

    /// Bond type with depiction-only information removed.
    pub fn constitutional(self) -> BondType {
        if self.is_wedge() {
            BondType::Single
        } else {
            self
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BondType::Single => "single",
            BondType::Double => "double",
            BondType::Triple => "triple",
            BondType::Aromatic => "aromatic",
            BondType::WedgeSolid => "wedge_solid",
            BondType::WedgeHashed => "wedge_hashed",
            BondType::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Option<BondType> {
        BondType::ALL.iter().copied().find(|b| b.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub kind: BondType,
}

impl Bond {
    pub fn new(begin: usize, end: usize, kind: BondType) -> Self {
        Bond { begin, end, kind }
    }

    pub fn other(&self, atom: usize) -> Option<usize> {
        if self.begin == atom {
            Some(self.end)
        } else if self.end == atom {
            Some(self.begin)
        } else {
            None
        }
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.begin == atom || self.end == atom
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Clockwise,
    CounterClockwise,
}

impl Parity {
    pub fn flipped(self) -> Parity {
        match self {
            Parity::Clockwise => Parity::CounterClockwise,
            Parity::CounterClockwise => Parity::Clockwise,
        }
    }

    pub fn flipped_if(self, odd: bool) -> Parity {
        if odd {
            self.flipped()
        } else {
            self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    Cis,
    Trans,
}

impl Geometry {
    pub fn flipped(self) -> Geometry {
        match self {
            Geometry::Cis => Geometry::Trans,
            Geometry::Trans => Geometry::Cis,
        }
    }
}

/// Double-bond configuration relative to one substituent on each end.
///
/// `refs.0` is a neighbor of the bond's `begin` atom, `refs.1` a neighbor of
/// its `end` atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleBondStereo {
    pub geometry: Geometry,
    pub refs: (usize, usize),
}

/// Neighbor position around a tetrahedral center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Atom(usize),
    /// Implicit hydrogen or lone pair.
    Implicit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub tetra_parity: BTreeMap<usize, Parity>,
    pub db_geometry: BTreeMap<usize, DoubleBondStereo>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownElement { atom: usize },
    CoordOutOfRange { atom: usize },
    BondEndpointOutOfRange { bond: usize },
    SelfBond { bond: usize, atom: usize },
    DuplicateBond { bond: usize, first: usize },
    NoneBondInGraph { bond: usize },
    ParityAtomOutOfRange { atom: usize },
    ParityTooFewNeighbors { atom: usize },
    GeometryNotDouble { bond: usize },
    GeometryBadReference { bond: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownElement { atom } => write!(f, "unrecognized element at atom {atom}"),
            Violation::CoordOutOfRange { atom } => {
                write!(f, "coordinate outside [0,1] at atom {atom}")
            }
            Violation::BondEndpointOutOfRange { bond } => {
                write!(f, "bond {bond} references a missing atom")
            }
            Violation::SelfBond { bond, atom } => {
                write!(f, "self-bond at index {bond} on atom {atom}")
            }
            Violation::DuplicateBond { bond, first } => {
                write!(f, "duplicate pair: bond {bond} repeats bond {first}")
            }
            Violation::NoneBondInGraph { bond } => write!(f, "bond {bond} has type None"),
            Violation::ParityAtomOutOfRange { atom } => {
                write!(f, "parity entry for missing atom {atom}")
            }
            Violation::ParityTooFewNeighbors { atom } => {
                write!(f, "parity on atom {atom} with fewer than 3 neighbors")
            }
            Violation::GeometryNotDouble { bond } => {
                write!(f, "geometry entry on non-double bond {bond}")
            }
            Violation::GeometryBadReference { bond } => {
                write!(
                    f,
                    "geometry on bond {bond} has invalid reference substituents"
                )
            }
        }
    }
}

/// Adjacency lists: `(neighbor, bond index)` per atom, in bond-list order.
pub type Adjacency = Vec<Vec<(usize, usize)>>;

impl MolGraph {
    pub fn new() -> Self {
        MolGraph::default()
    }

    pub fn add_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.atoms.len() - 1
    }

    pub fn add_bond(&mut self, begin: usize, end: usize, kind: BondType) -> usize {
        self.bonds.push(Bond::new(begin, end, kind));
        self.bonds.len() - 1
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn adjacency(&self) -> Adjacency {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (bi, b) in self.bonds.iter().enumerate() {
            if b.begin < adj.len() && b.end < adj.len() {
                adj[b.begin].push((b.end, bi));
                adj[b.end].push((b.begin, bi));
            }
        }
        adj
    }

    pub fn neighbors(&self, atom: usize) -> Vec<usize> {
        self.bonds.iter().filter_map(|b| b.other(atom)).collect()
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.bonds.iter().filter(|b| b.contains(atom)).count()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.bonds
            .iter()
            .position(|bd| (bd.begin == a && bd.end == b) || (bd.begin == b && bd.end == a))
    }

    /// Total hydrogens on an atom: the explicit count when given, otherwise
    /// the organic-subset default valence minus bonded valence.
    pub fn hydrogen_count(&self, atom: usize) -> u32 {
        let a = &self.atoms[atom];
        if let Some(h) = a.explicit_h {
            return h;
        }
        let Some(valence) = elements::default_valence(&a.element) else {
            return 0;
        };
        let used: u32 = self
            .bonds
            .iter()
            .filter(|b| b.contains(atom))
            .map(|b| b.kind.valence())
            .sum::<u32>()
            + u32::from(a.aromatic);
        valence.saturating_sub(used)
    }

    pub fn has_stereo(&self) -> bool {
        !self.tetra_parity.is_empty() || !self.db_geometry.is_empty()
    }

    pub fn has_coords(&self) -> bool {
        self.atoms.iter().all(|a| a.coord.is_some())
    }

    /// Reference neighbor order used by `tetra_parity`, or `None` when the
    /// atom has fewer than three or more than four explicit neighbors.
    pub fn stereo_slots(&self, center: usize) -> Option<Vec<Slot>> {
        let mut nbrs = self.neighbors(center);
        nbrs.sort_unstable();
        let mut slots: Vec<Slot> = nbrs.into_iter().map(Slot::Atom).collect();
        match slots.len() {
            3 => {
                slots.push(Slot::Implicit);
                Some(slots)
            }
            4 => Some(slots),
            _ => None,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.atoms.len();
        for (i, a) in self.atoms.iter().enumerate() {
            let ok = a.is_wildcard()
                || elements::is_element(&a.element)
                || elements::is_label_syntax(&a.element);
            if !ok {
                out.push(Violation::UnknownElement { atom: i });
            }
            if let Some((x, y)) = a.coord {
                if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                    out.push(Violation::CoordOutOfRange { atom: i });
                }
            }
        }
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (bi, b) in self.bonds.iter().enumerate() {
            if b.begin >= n || b.end >= n {
                out.push(Violation::BondEndpointOutOfRange { bond: bi });
                continue;
            }
            if b.begin == b.end {
                out.push(Violation::SelfBond {
                    bond: bi,
                    atom: b.begin,
                });
                continue;
            }
            if b.kind == BondType::None {
                out.push(Violation::NoneBondInGraph { bond: bi });
            }
            let key = (b.begin.min(b.end), b.begin.max(b.end));
            if let Some(&first) = seen.get(&key) {
                out.push(Violation::DuplicateBond { bond: bi, first });
            } else {
                seen.insert(key, bi);
            }
        }
        for &atom in self.tetra_parity.keys() {
            if atom >= n {
                out.push(Violation::ParityAtomOutOfRange { atom });
            } else if self.degree(atom) < 3 {
                out.push(Violation::ParityTooFewNeighbors { atom });
            }
        }
        for (&bi, st) in &self.db_geometry {
            let Some(b) = self.bonds.get(bi) else {
                out.push(Violation::GeometryNotDouble { bond: bi });
                continue;
            };
            if b.kind != BondType::Double {
                out.push(Violation::GeometryNotDouble { bond: bi });
                continue;
            }
            let (r0, r1) = st.refs;
            let ok = r0 != b.end
                && r1 != b.begin
                && r0 < n
                && r1 < n
                && self.bond_between(b.begin, r0).is_some()
                && self.bond_between(b.end, r1).is_some();
            if !ok {
                out.push(Violation::GeometryBadReference { bond: bi });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Atoms that are neither hydrogen nor placeholder labels.
    pub fn heavy_atom_count(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| !a.is_hydrogen() && !a.is_label())
            .count()
    }

    /// Geometry of a stereo double bond expressed against other reference
    /// substituents, given in either order. Swapping the reference on one
    /// end flips cis/trans.
    pub fn geometry_for_refs(&self, bond: usize, refs: (usize, usize)) -> Option<Geometry> {
        let st = self.db_geometry.get(&bond)?;
        let begin = self.bonds[bond].begin;
        let refs = if self.bond_between(refs.0, begin).is_none()
            && self.bond_between(refs.1, begin).is_some()
        {
            (refs.1, refs.0)
        } else {
            refs
        };
        let flips = usize::from(st.refs.0 != refs.0) + usize::from(st.refs.1 != refs.1);
        Some(if flips % 2 == 1 {
            st.geometry.flipped()
        } else {
            st.geometry
        })
    }

    pub fn without_stereo(&self) -> MolGraph {
        MolGraph {
            atoms: self.atoms.clone(),
            bonds: self.bonds.clone(),
            tetra_parity: BTreeMap::new(),
            db_geometry: BTreeMap::new(),
        }
    }

    /// Converts wedge bonds to plain single bonds.
    pub fn without_wedges(&self) -> MolGraph {
        let mut g = self.clone();
        for b in &mut g.bonds {
            b.kind = b.kind.constitutional();
        }
        g
    }

    pub fn without_coords(&self) -> MolGraph {
        let mut g = self.clone();
        for a in &mut g.atoms {
            a.coord = None;
        }
        g
    }

    /// Relabels atoms so that old atom `i` becomes new atom `perm[i]`.
    /// Bond order is preserved; stereo annotations are carried over.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length");
        let mut atoms = vec![Atom::new(""); self.atoms.len()];
        for (old, atom) in self.atoms.iter().enumerate() {
            atoms[perm[old]] = atom.clone();
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond::new(perm[b.begin], perm[b.end], b.kind))
            .collect();
        let mut out = MolGraph {
            atoms,
            bonds,
            tetra_parity: BTreeMap::new(),
            db_geometry: BTreeMap::new(),
        };
        for (&center, &parity) in &self.tetra_parity {
            if let Some(p) =
                transfer_parity(self, center, parity, &out, perm[center], |s| match s {
                    Slot::Atom(a) => Slot::Atom(perm[a]),
                    Slot::Implicit => Slot::Implicit,
                })
            {
                out.tetra_parity.insert(perm[center], p);
            }
        }
        for (&bi, st) in &self.db_geometry {
            out.db_geometry.insert(
                bi,
                DoubleBondStereo {
                    geometry: st.geometry,
                    refs: (perm[st.refs.0], perm[st.refs.1]),
                },
            );
        }
        out
    }

    /// Connected components as sorted atom lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.atoms.len()];
        let mut comps = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut comp = Vec::new();
            while let Some(a) = stack.pop() {
                comp.push(a);
                for &(b, _) in &adj[a] {
                    if !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Bonds that lie on at least one cycle.
    pub fn ring_bonds(&self) -> BTreeSet<usize> {
        let adj = self.adjacency();
        let mut out = BTreeSet::new();
        for (bi, b) in self.bonds.iter().enumerate() {
            if path_exists_without(&adj, b.begin, b.end, bi) {
                out.insert(bi);
            }
        }
        out
    }

    /// Number of atoms on the smallest cycle through `bond`, if any.
    pub fn smallest_ring_through(&self, bond: usize) -> Option<usize> {
        let adj = self.adjacency();
        let b = self.bonds[bond];
        shortest_path_without(&adj, b.begin, b.end, bond).map(|p| p.len())
    }
}

fn path_exists_without(adj: &Adjacency, from: usize, to: usize, skip_bond: usize) -> bool {
    shortest_path_without(adj, from, to, skip_bond).is_some()
}

/// Shortest path (as atom list, endpoints included) avoiding one bond.
pub(crate) fn shortest_path_without(
    adj: &Adjacency,
    from: usize,
    to: usize,
    skip_bond: usize,
) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    prev[from] = from;
    queue.push_back(from);
    while let Some(a) = queue.pop_front() {
        if a == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &(b, bi) in &adj[a] {
            if bi != skip_bond && prev[b] == usize::MAX {
                prev[b] = a;
                queue.push_back(b);
            }
        }
    }
    None
}

/// True when the permutation taking `from` to `to` is odd. Both slices must
/// hold the same distinct items.
pub fn is_odd_permutation<T: PartialEq>(from: &[T], to: &[T]) -> Option<bool> {
    if from.len() != to.len() {
        return None;
    }
    let mut idx = Vec::with_capacity(from.len());
    for item in from {
        idx.push(to.iter().position(|t| t == item)?);
    }
    let mut inversions = 0usize;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] > idx[j] {
                inversions += 1;
            }
        }
    }
    Some(inversions % 2 == 1)
}

/// Parity of a listed neighbor order converted into the reference order.
pub fn parity_to_reference(
    g: &MolGraph,
    center: usize,
    listed: &[Slot],
    parity: Parity,
) -> Option<Parity> {
    let reference = g.stereo_slots(center)?;
    let odd = is_odd_permutation(listed, &reference)?;
    Some(parity.flipped_if(odd))
}

/// Parity in the reference order converted to a listed neighbor order.
pub fn parity_from_reference(
    g: &MolGraph,
    center: usize,
    listed: &[Slot],
    parity: Parity,
) -> Option<Parity> {
    let reference = g.stereo_slots(center)?;
    let odd = is_odd_permutation(&reference, listed)?;
    Some(parity.flipped_if(odd))
}

/// Moves a parity annotation from `old` to `new` given a slot mapping.
pub(crate) fn transfer_parity(
    old: &MolGraph,
    old_center: usize,
    parity: Parity,
    new: &MolGraph,
    new_center: usize,
    map: impl Fn(Slot) -> Slot,
) -> Option<Parity> {
    let old_slots = old.stereo_slots(old_center)?;
    let mapped: Vec<Slot> = old_slots.into_iter().map(map).collect();
    parity_to_reference(new, new_center, &mapped, parity)
}
